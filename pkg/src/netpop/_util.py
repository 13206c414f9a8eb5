"""Shared plumbing: counter-based RNG streams, worker caps, atomic file writes."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

WORKERS_ENV = "NETPOP_WORKERS"


def substream(root_seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream identified by (root_seed, key).

    The same (root_seed, key) always yields the same stream, regardless of
    how many other streams were created or in what order, so work can be
    farmed out to any number of workers without changing results.
    """
    if root_seed < 0:
        raise ValueError("root seed must be a non-negative integer")
    seq = np.random.SeedSequence(root_seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(root_seed: int, *key: int) -> int:
    """Deterministic 63-bit child seed for handing to a sub-run."""
    seq = np.random.SeedSequence(root_seed, spawn_key=tuple(key))
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> 1)


def worker_count(n_tasks: int | None = None) -> int:
    """Parallelism cap: NETPOP_WORKERS env var, else the CPU count."""
    raw = os.environ.get(WORKERS_ENV)
    if raw is not None:
        workers = int(raw)
        if workers < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1, got {raw}")
    else:
        workers = os.cpu_count() or 1
    if n_tasks is not None:
        workers = min(workers, n_tasks)
    return max(workers, 1)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def canonical_json(obj) -> str:
    """Stable JSON encoding used for config files and config hashes."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def config_hash(**parts) -> str:
    """Short stable digest of configuration mappings."""
    return hashlib.sha256(canonical_json(parts).encode()).hexdigest()[:16]


def format_float(x: float) -> str:
    """Shortest round-trip decimal form; deterministic for a given value."""
    return repr(float(x))
