"""
Result Serialization
Envelopes, JSON and CSV writers, and whitespace-delimited plot data files
"""

import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, is_dataclass
from datetime import datetime, timezone
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from config import LabConfig
from utils.errors import ThetaLabError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"


@dataclass
class ResultEnvelope:
    """Wrapper written around every command result."""

    command: str
    config: Dict[str, Any]
    payload: Any
    wall_time_ms: float = 0.0
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    code_version: str = LabConfig.CODE_VERSION
    schema_version: int = SCHEMA_VERSION
    partial: bool = False

    def to_dict(self) -> dict:
        return {
            'command': self.command,
            'config': to_jsonable(self.config),
            'timestamp': self.timestamp,
            'code_version': self.code_version,
            'schema_version': self.schema_version,
            'wall_time_ms': self.wall_time_ms,
            'partial': self.partial,
            'payload': to_jsonable(self.payload),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ResultEnvelope":
        return cls(command=data['command'], config=data['config'], payload=data['payload'],
                   wall_time_ms=data.get('wall_time_ms', 0.0), timestamp=data['timestamp'],
                   code_version=data['code_version'],
                   schema_version=data.get('schema_version', SCHEMA_VERSION),
                   partial=data.get('partial', False))


def to_jsonable(obj: Any) -> Any:
    """Convert reports, DataFrames and numpy values into plain JSON types."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return {'re': obj.real, 'im': obj.imag}
    if isinstance(obj, pd.DataFrame):
        return [to_jsonable(row) for row in obj.to_dict(orient="records")]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if is_dataclass(obj):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return str(obj)


def dumps(envelope: ResultEnvelope) -> str:
    # repr-based float output is the shortest string that round-trips a double
    return json.dumps(envelope.to_dict(), indent=2, sort_keys=False)


def loads(text: str) -> ResultEnvelope:
    return ResultEnvelope.from_dict(json.loads(text))


def _open_target(path: Optional[str]):
    if path in (None, "-"):
        return sys.stdout, False
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        return open(path, "w"), True
    except OSError as exc:
        raise ThetaLabError(f"cannot write {path}: {exc}") from exc


def write_json(envelope: ResultEnvelope, path: Optional[str] = None) -> None:
    handle, owned = _open_target(path)
    try:
        handle.write(dumps(envelope))
        handle.write("\n")
    finally:
        if owned:
            handle.close()


def read_json(path: str) -> ResultEnvelope:
    with open(path) as handle:
        return loads(handle.read())


def as_frame(payload: Any) -> pd.DataFrame:
    """Tabular view of a payload: DataFrames pass through, reports become one row."""
    if isinstance(payload, pd.DataFrame):
        return payload
    if hasattr(payload, "to_row"):
        return pd.DataFrame([payload.to_row()])
    if isinstance(payload, list):
        return pd.DataFrame([item.to_row() if hasattr(item, "to_row") else to_jsonable(item)
                             for item in payload])
    if isinstance(payload, dict):
        flat = {k: v for k, v in to_jsonable(payload).items() if not isinstance(v, (dict, list))}
        return pd.DataFrame([flat])
    return pd.DataFrame([to_jsonable(payload)])


def write_csv(envelope: ResultEnvelope, path: Optional[str] = None) -> None:
    """CSV of the payload, preceded by '#' lines carrying the envelope metadata."""
    frame = as_frame(envelope.payload)
    handle, owned = _open_target(path)
    try:
        handle.write(f"# command: {envelope.command}\n")
        handle.write(f"# code_version: {envelope.code_version}\n")
        handle.write(f"# schema_version: {envelope.schema_version}\n")
        handle.write(f"# partial: {str(envelope.partial).lower()}\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT)
    finally:
        if owned:
            handle.close()


def emit_plot_data(report: Any, path: str, columns: Sequence[str] = None) -> str:
    """
    Whitespace-delimited numeric columns with a '#'-prefixed header line.

    Args:
        report: DataFrame or report object
        path: Output file
        columns: Subset and order of columns (default: all)

    Returns:
        The path written
    """
    frame = as_frame(report)
    if columns is not None:
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise ThetaLabError(f"plot columns {missing} not in report")
        frame = frame[list(columns)]
    handle, owned = _open_target(path)
    try:
        handle.write("# " + " ".join(str(c) for c in frame.columns) + "\n")
        frame.to_csv(handle, sep=" ", header=False, index=False, float_format=FLOAT_FORMAT,
                     na_rep="nan")
    finally:
        if owned:
            handle.close()
    logger.info("plot data written to %s (%d rows)", path, len(frame))
    return path


# Default plot columns per command
PLOT_COLUMNS = {
    'scan': ['p', 'count', 'cs_lower_bound', 'normalized'],
    'brun': ['y', 'ratio'],
    'harmonic': ['N', 'y', 'ratio'],
    'frontier': ['family', 'alpha', 'energy_ratio'],
    'cancellation': ['N', 'ratio'],
    'dichotomy': ['N', 'y', 'exceptions'],
    'roots': ['j', 'arg_w'],
}
