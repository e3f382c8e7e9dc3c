import json

import numpy as np
import pytest

from app import COMMANDS, MULTI_N, NEEDS_P, RunConfig, main, parse_args, render, run
from engines.char_group import EVEN, ODD
from utils.serialization import ResultEnvelope, dumps, loads, read_json


def test_parse_defaults():
    config = parse_args(['census', '--p', '13'])
    assert config.command == 'census'
    assert config.p == 13
    assert config.x == 1.0
    assert config.parity == EVEN
    assert config.y == 'auto'
    assert config.parities == [EVEN]
    assert config.ladder() == (53, 128, 256)


def test_parse_both_parities_and_threads():
    config = parse_args(['census', '--p', '13', '--parity', 'both', '--threads', 'auto'])
    assert config.parities == [EVEN, ODD]
    assert config.thread_count >= 1


@pytest.mark.parametrize("argv, message", [
    (['census', '--p', '10006'], "--p: 10006 is not prime"),
    (['census'], "--p: required"),
    (['census', '--p', '13', '--x', '-1'], "--x"),
    (['gcdsum', '--set-family', 'custom'], "--set-family: custom requires --set-path"),
    (['census', '--p', '13', '--quick'], "--quick: only valid with the verify command"),
    (['census', '--p', '13', '--phi', '10', '2'], "--phi: only valid with the sieve command"),
    (['scan', '--p-range', '10'], "--p-range"),
    (['census', '--p', '13', '--y', '0.5'], "--y"),
    (['gcdsum', '--N', '10', '20'], "--N"),
    (['census', '--p', '13', '--precision-bits', '20'], "--precision-bits"),
])
def test_invalid_arguments_exit_2(capsys, argv, message):
    with pytest.raises(SystemExit) as excinfo:
        parse_args(argv)
    assert excinfo.value.code == 2
    assert message in capsys.readouterr().err


@pytest.mark.parametrize("config", [
    RunConfig(command='census', p=13, x=0.5, parity='both', y=3.0, k=3, threads=2, verbose=1),
    RunConfig(command='scan', p_range=(101, 199), precision_bits=128),
    RunConfig(command='sieve', phi=(10, 2.0), set_family='all'),
    RunConfig(command='verify', quick=True, output='out.csv', format='csv'),
    RunConfig(command='cancellation', p=101, N=(1, 10, 101)),
    RunConfig(command='gcdsum', set_family='primes', N=(500,), pdf='summary.pdf'),
])
def test_render_round_trip(config):
    assert parse_args(render(config)) == config


def test_census_p5_writes_envelope(tmp_path):
    out = tmp_path / "census.json"
    code = run(parse_args(['census', '--p', '5', '--output', str(out),
                           '--cache-dir', str(tmp_path / "cache")]))
    assert code == 0
    data = json.loads(out.read_text())
    assert data['command'] == 'census'
    assert data['partial'] is False
    assert data['config']['p'] == 5
    assert data['payload']['nonvanishing'] == 2
    assert data['payload']['m1'] == pytest.approx(1.067062, abs=1e-5)


def test_census_both_parities(tmp_path):
    out = tmp_path / "census.json"
    run(parse_args(['census', '--p', '13', '--parity', 'both', '--output', str(out),
                    '--cache-dir', str(tmp_path / "cache")]))
    payload = read_json(str(out)).payload
    assert [r['parity'] for r in payload] == [EVEN, ODD]


def test_sieve_phi_prints_value(tmp_path, capsys):
    code = run(parse_args(['sieve', '--phi', '10', '2', '--cache-dir', str(tmp_path)]))
    assert code == 0
    assert capsys.readouterr().out == "5\n"


def test_csv_output(tmp_path):
    out = tmp_path / "gcd.csv"
    run(parse_args(['gcdsum', '--set-family', 'all', '--N', '100', '--format', 'csv',
                    '--output', str(out), '--cache-dir', str(tmp_path)]))
    lines = out.read_text().splitlines()
    assert lines[0] == "# command: gcdsum"
    assert lines[3] == "# partial: false"
    assert lines[4].split(",")[0] == "S"


def test_plot_data(tmp_path):
    plot = tmp_path / "cancel.dat"
    run(parse_args(['cancellation', '--p', '5', '--N', '1', '2', '5', '--plot-data', str(plot),
                    '--output', str(tmp_path / "cancel.json"), '--cache-dir', str(tmp_path)]))
    lines = plot.read_text().splitlines()
    assert lines[0] == "# N ratio"
    assert len(lines) == 4
    assert float(lines[1].split()[1]) == pytest.approx(1.0)


def test_input_error_in_handler_exits_2(tmp_path):
    bad = tmp_path / "set.txt"
    bad.write_text("3\n2\n")
    code = run(parse_args(['gcdsum', '--set-family', 'custom', '--set-path', str(bad),
                           '--cache-dir', str(tmp_path)]))
    assert code == 2


def test_main_runs_roots(tmp_path):
    out = tmp_path / "roots.json"
    assert main(['roots', '--p', '13', '--output', str(out), '--cache-dir', str(tmp_path)]) == 0
    assert len(read_json(str(out)).payload) == 11


def test_pdf_summary(tmp_path):
    pdf = tmp_path / "scan.pdf"
    code = run(parse_args(['scan', '--p-range', '101:110', '--pdf', str(pdf),
                           '--output', str(tmp_path / "scan.json"), '--cache-dir', str(tmp_path)]))
    assert code == 0
    assert pdf.read_bytes().startswith(b"%PDF")


def test_envelope_round_trip():
    envelope = ResultEnvelope(command='theta', config={'p': 5}, payload={'value': 0.1 + 0.2},
                              wall_time_ms=1.5)
    restored = loads(dumps(envelope))
    assert restored == envelope
    assert restored.payload['value'] == 0.1 + 0.2


PRIMES = (3, 5, 7, 13, 101, 10007)


def random_config(rng) -> RunConfig:
    """A valid configuration with every optional flag switched on at random."""
    command = str(rng.choice(COMMANDS))
    values = {'command': command}
    if command in NEEDS_P or command == 'cancellation':
        values['p'] = int(rng.choice(PRIMES[2:]))
    elif command == 'scan':
        if rng.random() < 0.5:
            values['p'] = int(rng.choice(PRIMES))
        else:
            lo = int(rng.integers(3, 500))
            values['p_range'] = (lo, lo + int(rng.integers(0, 500)))
    if rng.random() < 0.5:
        values['x'] = float(rng.uniform(0.01, 5.0))
    values['parity'] = str(rng.choice(['even', 'odd', 'both']))
    if rng.random() < 0.5:
        values['y'] = round(float(rng.uniform(1.0, 60.0)), 3)
    family = str(rng.choice(['all', 'primes', 'rough', 'custom']))
    values['set_family'] = family
    if family == 'custom':
        values['set_path'] = 'sets/B.txt'
    if rng.random() < 0.5:
        top = values.get('p', 10 ** 5)
        count = int(rng.integers(1, 4)) if command in MULTI_N else 1
        values['N'] = tuple(int(n) for n in rng.integers(1, top + 1, size=count))
    values['k'] = int(rng.integers(1, 5))
    if command == 'sieve' and rng.random() < 0.5:
        values['phi'] = (int(rng.integers(1, 10 ** 6)), round(float(rng.uniform(0, 100)), 2))
    if rng.random() < 0.5:
        values['output'] = 'out/result.json'
    values['format'] = str(rng.choice(['json', 'csv']))
    values['precision_bits'] = int(rng.choice([53, 128, 256]))
    values['threads'] = 'auto' if rng.random() < 0.3 else int(rng.integers(1, 9))
    if rng.random() < 0.3:
        values['cache_dir'] = 'cache'
    if rng.random() < 0.3:
        values['plot_data'] = 'plot.dat'
    if rng.random() < 0.3:
        values['pdf'] = 'summary.pdf'
    values['verbose'] = int(rng.integers(0, 3))
    values['quick'] = command == 'verify' and bool(rng.random() < 0.5)
    return RunConfig(**values)


def test_render_round_trip_random_configs():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        config = random_config(rng)
        assert parse_args(render(config)) == config, render(config)


def test_unwritable_output_returns_partial_on_stdout(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    code = main(['sieve', '--phi', '10', '2', '--output', str(blocker / "out.json"),
                 '--cache-dir', str(tmp_path / "cache")])
    assert code == 1
    out = capsys.readouterr().out
    assert out.startswith("5\n")
    envelope = loads(out[2:])
    assert envelope.partial is True
    assert envelope.payload == {'x': 10, 'y': 2.0, 'phi': 5}


@pytest.mark.parametrize("flag", ['--plot-data', '--pdf'])
def test_unwritable_side_output_exits_1(tmp_path, capsys, flag):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    out = tmp_path / "roots.json"
    code = main(['roots', '--p', '13', '--output', str(out), flag, str(blocker / "side"),
                 '--cache-dir', str(tmp_path / "cache")])
    assert code == 1
    assert loads(capsys.readouterr().out).partial is True


def test_harmonic_command(tmp_path):
    out = tmp_path / "harmonic.json"
    plot = tmp_path / "harmonic.dat"
    code = run(parse_args(['harmonic', '--N', '10', '1000', '--y', '3', '--output', str(out),
                           '--plot-data', str(plot), '--cache-dir', str(tmp_path)]))
    assert code == 0
    rows = read_json(str(out)).payload
    assert [row['N'] for row in rows] == [10, 1000]
    assert rows[0]['harmonic_sum'] == pytest.approx(1.342857, abs=1e-6)
    assert plot.read_text().splitlines()[0] == "# N y ratio"
