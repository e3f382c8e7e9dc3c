"""
Theta Laboratory
Command-line front end: parses a run configuration, dispatches to the engines
and writes a result envelope
"""

import argparse
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, fields
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config import LabConfig
from engines.char_group import EVEN, ODD, is_odd_prime
from engines.gcd_energy import (
    divisor_chain_sum, divisor_sigma_minus1_sum, energy_frontier_scan, energy_report,
    gcd_sum_fast, gcd_sum_naive, quadruple_count, quadruple_fit, ratio_R,
)
from engines.mollifier_moments import (
    AUTO, build_mollifier, first_moment_cancellation, nonvanishing_census, theorem1_scan,
)
from engines.sieve_sets import (
    ALL, CUSTOM, FAMILIES, PRIMES, ROUGH, brun_ratio_scan, check_multiplicative_closure,
    gcd_dichotomy_exceptions, harmonic_bound_scan, make_family, phi_count, small_primes,
)
from engines.theta_engine import (
    NONZERO, ThetaBatch, is_nonzero, resolve_undecided, root_number_scan, theta_batch,
    theta_direct_mp,
)
from storage import BatchCache, DlogCache
from utils.errors import InputError, ThetaLabError
from utils.pdf_report import write_scan_summary
from utils.serialization import PLOT_COLUMNS, ResultEnvelope, emit_plot_data, write_csv, write_json
from utils.verification import PropertyVerifier

logger = logging.getLogger("thetalab")

# ============================================================================
# Run configuration
# ============================================================================

COMMANDS = ('theta', 'census', 'scan', 'gcdsum', 'energy', 'quadruples', 'sieve', 'verify',
            'cancellation', 'frontier', 'brun', 'harmonic', 'dichotomy', 'roots')
NEEDS_P = ('theta', 'census', 'cancellation', 'roots')
MULTI_N = ('cancellation', 'harmonic')
BOTH = "both"
FORMATS = ('json', 'csv')

DEFAULT_N = {
    'gcdsum': 10 ** 4,
    'energy': 10 ** 3,
    'sieve': 10 ** 4,
    'frontier': 10 ** 5,
    'brun': 10 ** 6,
    'dichotomy': 500,
}


@dataclass
class RunConfig:
    command: str
    p: Optional[int] = None
    p_range: Optional[Tuple[int, int]] = None
    x: float = LabConfig.DEFAULT_X
    parity: str = EVEN
    y: Union[float, str] = AUTO
    set_family: str = ROUGH
    set_path: Optional[str] = None
    N: Optional[Tuple[int, ...]] = None
    k: int = 2
    phi: Optional[Tuple[int, float]] = None
    output: Optional[str] = None
    format: str = 'json'
    precision_bits: int = 53
    threads: Union[int, str] = 1
    cache_dir: Optional[str] = None
    plot_data: Optional[str] = None
    pdf: Optional[str] = None
    verbose: int = 0
    quick: bool = False

    @property
    def parities(self) -> List[str]:
        return [EVEN, ODD] if self.parity == BOTH else [self.parity]

    @property
    def thread_count(self) -> int:
        if self.threads == AUTO:
            return os.cpu_count() or 1
        return int(self.threads)

    @property
    def sieve_y(self) -> Optional[float]:
        return None if self.y == AUTO else float(self.y)

    def single_N(self) -> int:
        return self.N[0] if self.N else DEFAULT_N[self.command]

    def ladder(self) -> Tuple[int, ...]:
        rest = tuple(b for b in LabConfig.PRECISION_LADDER if b > self.precision_bits)
        return (self.precision_bits,) + rest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thetalab",
        description="Theta-function non-vanishing laboratory",
    )
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--p', type=int, help="odd prime modulus")
    parser.add_argument('--p-range', dest='p_range', help="inclusive prime range lo:hi")
    parser.add_argument('--x', type=float, default=LabConfig.DEFAULT_X)
    parser.add_argument('--parity', choices=(EVEN, ODD, BOTH), default=EVEN)
    parser.add_argument('--y', default=AUTO, help="sieve parameter >= 1 or 'auto'")
    parser.add_argument('--set-family', dest='set_family', choices=FAMILIES, default=ROUGH)
    parser.add_argument('--set-path', dest='set_path')
    parser.add_argument('--N', type=int, nargs='+')
    parser.add_argument('--k', type=int, default=2)
    parser.add_argument('--phi', nargs=2, metavar=('X', 'Y'))
    parser.add_argument('--output')
    parser.add_argument('--format', choices=FORMATS, default='json')
    parser.add_argument('--precision-bits', dest='precision_bits', type=int, default=53)
    parser.add_argument('--threads', default='1')
    parser.add_argument('--cache-dir', dest='cache_dir')
    parser.add_argument('--plot-data', dest='plot_data')
    parser.add_argument('--pdf')
    parser.add_argument('--verbose', '-v', action='count', default=0)
    parser.add_argument('--quick', action='store_true')
    return parser


def _parse_range(parser, text: str) -> Tuple[int, int]:
    try:
        lo, hi = (int(part) for part in text.split(':'))
    except ValueError:
        parser.error(f"--p-range: expected lo:hi, got {text!r}")
    if not 3 <= lo <= hi:
        parser.error(f"--p-range: need 3 <= lo <= hi, got {text}")
    return lo, hi


def _parse_y(parser, text: str) -> Union[float, str]:
    if text == AUTO:
        return AUTO
    try:
        y = float(text)
    except ValueError:
        parser.error(f"--y: expected a real >= 1 or 'auto', got {text!r}")
    if not (y >= 1 and math.isfinite(y)):
        parser.error(f"--y: must be >= 1, got {text}")
    return y


def _parse_threads(parser, text: str) -> Union[int, str]:
    if text == AUTO:
        return AUTO
    try:
        threads = int(text)
    except ValueError:
        parser.error(f"--threads: expected a positive integer or 'auto', got {text!r}")
    if threads < 1:
        parser.error(f"--threads: must be >= 1, got {threads}")
    return threads


def _parse_phi(parser, values: Sequence[str]) -> Tuple[int, float]:
    try:
        x, y = int(values[0]), float(values[1])
    except ValueError:
        parser.error(f"--phi: expected an integer X and a real Y, got {' '.join(values)}")
    if x < 1 or y < 0:
        parser.error(f"--phi: need X >= 1 and Y >= 0, got {x} {y}")
    return x, y


def parse_args(argv: Sequence[str] = None) -> RunConfig:
    """
    Parse and validate a command line.

    Every numeric flag is checked before anything is computed; violations exit
    with status 2 and a message naming the flag.
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.p is not None and not is_odd_prime(args.p):
        parser.error(f"--p: {args.p} is not prime" if args.p != 2 else "--p: 2 is not an odd prime")
    if args.command in NEEDS_P and args.p is None:
        parser.error(f"--p: required by the {args.command} command")
    if args.command == 'scan' and args.p is None and args.p_range is None:
        parser.error("--p-range: required by the scan command (or give --p)")
    if args.p is not None and args.p_range is not None:
        parser.error("--p-range: conflicts with --p")
    if not (args.x > 0 and math.isfinite(args.x)):
        parser.error(f"--x: must be a positive real, got {args.x}")
    if args.k < 1:
        parser.error(f"--k: must be >= 1, got {args.k}")
    if args.precision_bits < 53:
        parser.error(f"--precision-bits: must be >= 53, got {args.precision_bits}")
    if args.set_family == CUSTOM and not args.set_path:
        parser.error("--set-family: custom requires --set-path")
    if args.set_path and args.set_family != CUSTOM:
        parser.error("--set-path: only valid with --set-family custom")
    if args.N is not None:
        if any(n < 1 for n in args.N):
            parser.error(f"--N: values must be >= 1, got {args.N}")
        if len(args.N) > 1 and args.command not in MULTI_N:
            parser.error(f"--N: the {args.command} command takes a single value")
        if args.command == 'cancellation' and any(n > args.p for n in args.N):
            parser.error(f"--N: values must not exceed p = {args.p}")
    if args.phi is not None and args.command != 'sieve':
        parser.error("--phi: only valid with the sieve command")
    if args.quick and args.command != 'verify':
        parser.error("--quick: only valid with the verify command")

    return RunConfig(
        command=args.command,
        p=args.p,
        p_range=_parse_range(parser, args.p_range) if args.p_range else None,
        x=args.x,
        parity=args.parity,
        y=_parse_y(parser, args.y),
        set_family=args.set_family,
        set_path=args.set_path,
        N=tuple(args.N) if args.N else None,
        k=args.k,
        phi=_parse_phi(parser, args.phi) if args.phi else None,
        output=args.output,
        format=args.format,
        precision_bits=args.precision_bits,
        threads=_parse_threads(parser, args.threads),
        cache_dir=args.cache_dir,
        plot_data=args.plot_data,
        pdf=args.pdf,
        verbose=args.verbose,
        quick=args.quick,
    )


def render(config: RunConfig) -> List[str]:
    """Command line that parse_args maps back to config."""
    argv = [config.command]
    defaults = RunConfig(command=config.command)
    for f in fields(RunConfig):
        name = f.name
        value = getattr(config, name)
        if name == 'command' or value == getattr(defaults, name):
            continue
        flag = "--" + name.replace('_', '-')
        if name == 'p_range':
            argv += [flag, f"{value[0]}:{value[1]}"]
        elif name in ('N', 'phi'):
            argv += [flag] + [repr(v) for v in value]
        elif name == 'quick':
            argv.append(flag)
        elif name == 'verbose':
            argv += ['--verbose'] * value
        else:
            argv += [flag, repr(value) if isinstance(value, float) else str(value)]
    return argv


# ============================================================================
# Command handlers
# ============================================================================

def _primes(config: RunConfig) -> List[int]:
    if config.p is not None:
        return [config.p]
    lo, hi = config.p_range
    return [int(q) for q in small_primes(hi) if q >= lo]


def _load_batch(config: RunConfig, group, parity: str, batches: BatchCache) -> ThetaBatch:
    stored = batches.load(group.p, config.x, parity, config.precision_bits)
    if stored is not None:
        logger.info("theta batch cache hit p=%d parity=%s", group.p, parity)
        return ThetaBatch(p=group.p, x=config.x, parity=parity, js=stored['js'],
                          values=stored['values'], radii=stored['radii'],
                          truncation_N=int(stored['truncation_N']))
    batch = theta_batch(group, config.x, parity, threads=config.thread_count)
    batches.save(group.p, config.x, parity, config.precision_bits, js=batch.js,
                 values=batch.values, radii=batch.radii,
                 truncation_N=np.array(batch.truncation_N))
    return batch


def cmd_theta(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    group = dlogs.get_group(config.p)
    rows = []
    for parity in config.parities:
        if config.precision_bits > 53:
            values = [theta_direct_mp(group, j, config.x, parity, config.precision_bits)
                      for j in range(0 if parity == EVEN else 1, group.order, 2)]
        else:
            batch, _ = resolve_undecided(group, _load_batch(config, group, parity, batches),
                                         config.ladder())
            values = batch.to_list()
        for tv in values:
            rows.append({'p': group.p, 'x': tv.x, 'parity': parity, 'j': tv.j,
                         're': tv.value.real, 'im': tv.value.imag, 'abs': abs(tv.value),
                         'radius': tv.error_radius, 'status': is_nonzero(tv),
                         'precision_bits': tv.precision_bits})
    table = pd.DataFrame(rows)
    return table, bool((table['status'] == NONZERO).all())


def cmd_census(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    group = dlogs.get_group(config.p)
    reports = []
    for parity in config.parities:
        spec = build_mollifier(config.p, config.y, parity)
        reports.append(nonvanishing_census(config.p, config.x, parity, spec=spec, group=group,
                                           ladder=config.ladder(), threads=config.thread_count,
                                           moments=range(1, config.k + 1)))
    ok = all(r.undecided == 0 for r in reports)
    return (reports[0] if len(reports) == 1 else reports), ok


def cmd_scan(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    tables = []
    for parity in config.parities:
        table = theorem1_scan(_primes(config), config.x, parity, config.y, cache=dlogs,
                              threads=config.thread_count)
        table.insert(1, 'parity', parity)
        tables.append(table)
    table = pd.concat(tables, ignore_index=True)
    return table, int(table['undecided'].sum()) == 0


def _integer_set(config: RunConfig):
    return make_family(config.set_family, config.single_N(), y=config.sieve_y, path=config.set_path)


def cmd_gcdsum(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    B = _integer_set(config)
    if len(B) == 0:
        raise InputError("--set-family: the selected set is empty")
    S = gcd_sum_fast(B)
    payload = {
        'set': B.summary(),
        'S': S,
        'R': ratio_R(B, S),
        'S_per_size': S / len(B),
        'sigma_minus1_sum': divisor_sigma_minus1_sum(B),
        'divisor_chain_sum': divisor_chain_sum(B),
    }
    if len(B) <= LabConfig.ORACLE_CAP:
        payload['S_naive'] = gcd_sum_naive(B)
    return payload, True


def cmd_energy(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    report = energy_report(_integer_set(config))
    return report, report.E_cross is not None


def cmd_quadruples(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    if config.N:
        x = config.single_N()
        return {'x': x, 'count': quadruple_count(x)}, True
    return quadruple_fit((10 ** 4, 10 ** 5, 10 ** 6)), True


def cmd_sieve(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    if config.phi is not None:
        x, y = config.phi
        value = phi_count(x, y)
        print(value)
        return {'x': x, 'y': y, 'phi': value}, True
    B = _integer_set(config)
    payload = B.summary()
    payload['closure_violations'] = len(check_multiplicative_closure(B))
    return payload, True


def cmd_verify(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    verifier = PropertyVerifier(quick=config.quick, cache=dlogs)
    outcome = verifier.evaluate_all()
    for line in verifier.summary_lines():
        logger.info(line)
    return outcome, outcome['passed']


def cmd_cancellation(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    p = config.p
    grid = config.N or sorted({1, 10, 100, math.isqrt(p), p // 2, p} & set(range(1, p + 1)))
    return first_moment_cancellation(p, grid, cache=dlogs), True


def cmd_frontier(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    N = config.single_N()
    grid = [ALL, PRIMES, (ROUGH, config.sieve_y)]
    grid += [(ROUGH, y) for y in (2.0, 5.0, 10.0, 50.0) if y < N]
    if config.set_path:
        grid.append(make_family(CUSTOM, N, path=config.set_path))
    return energy_frontier_scan(N, grid), True


def cmd_brun(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    ys = [config.sieve_y] if config.sieve_y is not None else [2, 5, 10, 20, 50, 100]
    return brun_ratio_scan(config.single_N(), ys), True


def cmd_harmonic(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    Ns = config.N or (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6)
    ys = [config.sieve_y] if config.sieve_y is not None else [2, 3, 5, 10, 20, 50, 100]
    return harmonic_bound_scan(Ns, ys), True


def cmd_dichotomy(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    rows = []
    for N in range(1, config.single_N() + 1):
        for y in (2.0, 5.0, 10.0, math.sqrt(N)):
            y = max(y, 1.0)
            rows.append({'N': N, 'y': y, 'exceptions': len(gcd_dichotomy_exceptions(N, y))})
    table = pd.DataFrame(rows, columns=['N', 'y', 'exceptions'])
    return table, int(table['exceptions'].sum()) == 0


def cmd_roots(config: RunConfig, dlogs: DlogCache, batches: BatchCache):
    table = root_number_scan(dlogs.get_group(config.p))
    return table, bool(table['defined'].all())


HANDLERS = {
    'theta': cmd_theta,
    'census': cmd_census,
    'scan': cmd_scan,
    'gcdsum': cmd_gcdsum,
    'energy': cmd_energy,
    'quadruples': cmd_quadruples,
    'sieve': cmd_sieve,
    'verify': cmd_verify,
    'cancellation': cmd_cancellation,
    'frontier': cmd_frontier,
    'brun': cmd_brun,
    'harmonic': cmd_harmonic,
    'dichotomy': cmd_dichotomy,
    'roots': cmd_roots,
}


# ============================================================================
# Entry points
# ============================================================================

def _write(config: RunConfig, envelope: ResultEnvelope, path: Optional[str] = None) -> None:
    # sieve --phi prints its value; the envelope goes out only when a file was asked for
    if config.command == 'sieve' and config.phi is not None and not path:
        return
    if config.format == 'csv':
        write_csv(envelope, path)
    else:
        write_json(envelope, path)


def _emit(config: RunConfig, envelope: ResultEnvelope) -> None:
    """Result envelope, then the optional plot data and PDF summary."""
    _write(config, envelope, config.output)
    payload = envelope.payload
    if config.plot_data:
        frame_columns = PLOT_COLUMNS.get(config.command)
        if isinstance(payload, pd.DataFrame) and frame_columns and set(frame_columns) <= set(payload.columns):
            emit_plot_data(payload, config.plot_data, frame_columns)
        else:
            emit_plot_data(payload, config.plot_data)
    if config.pdf:
        write_scan_summary(envelope, config.pdf)


def _emit_partial(config: RunConfig, envelope: ResultEnvelope, exc: ThetaLabError) -> int:
    logger.error("%s: cannot write results: %s", config.command, exc)
    envelope.partial = True
    if config.output not in (None, "-"):
        # stdout fallback when the requested file could not be written
        try:
            _write(config, envelope, "-")
        except ThetaLabError as retry:
            logger.error("%s: result lost: %s", config.command, retry)
    return 1


def run(config: RunConfig) -> int:
    """
    Execute one command.

    Returns:
        0 on success, 1 on a computational or output failure (result flagged
        partial), 2 on invalid input
    """
    started = time.perf_counter()
    cache_dir = config.cache_dir or LabConfig.from_env().cache_dir
    dlogs = DlogCache(cache_dir)
    batches = BatchCache(cache_dir)
    echo = asdict(config)

    try:
        payload, ok = HANDLERS[config.command](config, dlogs, batches)
    except InputError as exc:
        logger.error("%s", exc)
        return 2
    except ThetaLabError as exc:
        logger.error("%s failed: %s", config.command, exc)
        envelope = ResultEnvelope(command=config.command, config=echo,
                                  payload={'error': str(exc)}, partial=True,
                                  wall_time_ms=1000 * (time.perf_counter() - started))
        try:
            _write(config, envelope, config.output)
        except ThetaLabError as write_exc:
            _emit_partial(config, envelope, write_exc)
        return 1

    envelope = ResultEnvelope(command=config.command, config=echo, payload=payload,
                              partial=not ok,
                              wall_time_ms=1000 * (time.perf_counter() - started))
    try:
        _emit(config, envelope)
    except ThetaLabError as exc:
        return _emit_partial(config, envelope, exc)
    logger.info("%s finished in %.1f ms (dlog cache hits=%d misses=%d)", config.command,
                envelope.wall_time_ms, dlogs.hits, dlogs.misses)
    if not ok:
        logger.warning("%s: result is partial", config.command)
        return 1
    return 0


def configure_logging(config: RunConfig) -> None:
    if config.verbose >= 2:
        level = logging.DEBUG
    elif config.verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, LabConfig.from_env().log_level, logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] = None) -> int:
    config = parse_args(argv)
    configure_logging(config)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
