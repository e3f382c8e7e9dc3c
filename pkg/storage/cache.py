"""
On-Disk Caches
Binary dlog tables ("THML" layout) and npz batches of theta values
"""

import logging
import os
import struct
import tempfile
from typing import Optional, Tuple

import numpy as np

from config import LabConfig
from engines.char_group import CharacterGroup, build_group, group_from_table
from utils.errors import CacheFormatError, InputError

logger = logging.getLogger(__name__)

MAGIC = b"THML"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQ")  # magic, format version (u32), p (u64)


def _atomic_write(path: str, payload: bytes) -> None:
    """Write to a temporary file in the target directory, then rename over path."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_dlog(group: CharacterGroup) -> bytes:
    """Header followed by p-1 little-endian u32 entries dlog[1..p-1]."""
    body = np.ascontiguousarray(group.dlog[1:], dtype="<u4").tobytes()
    return _HEADER.pack(MAGIC, FORMAT_VERSION, group.p) + body


def decode_dlog(payload: bytes) -> Tuple[int, np.ndarray]:
    """
    Parse a THML dlog file.

    Returns:
        (p, entries) with entries[i] = dlog[i + 1]
    """
    if len(payload) < _HEADER.size:
        raise CacheFormatError("dlog cache file shorter than its header")
    magic, version, p = _HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise CacheFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CacheFormatError(f"unsupported dlog cache version {version}")
    expected = _HEADER.size + 4 * (p - 1)
    if len(payload) != expected:
        raise CacheFormatError(f"dlog cache for p={p} has {len(payload)} bytes, expected {expected}")
    entries = np.frombuffer(payload, dtype="<u4", offset=_HEADER.size)
    return int(p), entries.astype(np.uint32)


class DlogCache:
    """
    File cache of discrete-log tables, one file per prime.
    Keyed by p; the file name carries the code version so a bump invalidates it.
    """

    def __init__(self, cache_dir: str = None, code_version: str = None):
        settings = LabConfig.from_env()
        self.cache_dir = cache_dir or settings.cache_dir
        self.memory_budget = settings.dlog_memory_budget
        self.code_version = code_version or LabConfig.CODE_VERSION
        self.hits = 0
        self.misses = 0

    def path_for(self, p: int) -> str:
        return os.path.join(self.cache_dir, f"dlog-v{self.code_version}-{p}.thml")

    def load(self, p: int) -> Optional[CharacterGroup]:
        path = self.path_for(p)
        if not os.path.exists(path):
            return None
        with open(path, "rb") as handle:
            stored_p, entries = decode_dlog(handle.read())
        if stored_p != p:
            raise CacheFormatError(f"{path} holds p={stored_p}, expected {p}")
        try:
            return group_from_table(p, entries)
        except InputError as exc:
            raise CacheFormatError(f"{path}: {exc}") from exc

    def save(self, group: CharacterGroup) -> str:
        path = self.path_for(group.p)
        _atomic_write(path, encode_dlog(group))
        return path

    def get_group(self, p: int, memory_budget: int = None) -> CharacterGroup:
        """Load the group for p from disk, building and storing it on a miss."""
        try:
            group = self.load(p)
        except CacheFormatError as exc:
            logger.warning("discarding unreadable dlog cache for p=%d: %s", p, exc)
            group = None
        if group is not None:
            self.hits += 1
            logger.info("dlog cache hit p=%d", p)
            return group
        self.misses += 1
        logger.info("dlog cache miss p=%d", p)
        group = build_group(p, memory_budget=memory_budget or self.memory_budget)
        self.save(group)
        return group


class BatchCache:
    """
    npz cache of theta batches keyed by (p, x, parity, precision, code version).
    """

    def __init__(self, cache_dir: str = None, code_version: str = None):
        self.cache_dir = cache_dir or LabConfig.from_env().cache_dir
        self.code_version = code_version or LabConfig.CODE_VERSION

    def path_for(self, p: int, x: float, parity: str, precision: int) -> str:
        key = f"theta-v{self.code_version}-{p}-{float(x).hex()}-{parity}-{precision}.npz"
        return os.path.join(self.cache_dir, key)

    def load(self, p: int, x: float, parity: str, precision: int):
        path = self.path_for(p, x, parity, precision)
        if not os.path.exists(path):
            return None
        with np.load(path) as data:
            return {name: data[name] for name in data.files}

    def save(self, p: int, x: float, parity: str, precision: int, **arrays) -> str:
        path = self.path_for(p, x, parity, precision)
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".npz")
        os.close(fd)
        try:
            np.savez(tmp, **arrays)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path
