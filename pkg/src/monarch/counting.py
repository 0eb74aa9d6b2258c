"""Scalar-multiply accounting.

Kernels report how many scalar multiplies they perform via add_multiplies();
a test or benchmark wraps the call in count_multiplies() to read the tally.
Counts are exact for the structured matvec paths (one unit per scalar
multiply, complex counted the same as real) and proportional-to-work for the
iterative solvers.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass

_lock = threading.Lock()
_active: list["MultiplyTally"] = []


@dataclass
class MultiplyTally:
    multiplies: int = 0


def add_multiplies(count: int) -> None:
    if not _active:
        return
    with _lock:
        for tally in _active:
            tally.multiplies += count


@contextmanager
def count_multiplies():
    """Context manager yielding a MultiplyTally fed by all enclosed kernels."""
    tally = MultiplyTally()
    with _lock:
        _active.append(tally)
    try:
        yield tally
    finally:
        with _lock:
            _active.remove(tally)
