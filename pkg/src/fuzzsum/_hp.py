"""Extended-precision helpers on top of gmpy2.

Summation methods applied to divergent sequences cancel enormous terms against
each other; float64 cannot resolve the result.  Those paths evaluate terms and
weights as ``gmpy2.mpfr`` inside :func:`precision` and round once at the end.
"""

from __future__ import annotations

import contextlib
import math

import gmpy2
import numpy as np
from gmpy2 import mpfr

GUARD_BITS = 64
MIN_BITS = 64


@contextlib.contextmanager
def precision(bits: int):
    with gmpy2.context(gmpy2.get_context(), precision=max(int(bits), MIN_BITS)):
        yield


def bits_for(magnitude) -> int:
    """Working precision so that cancellation among terms of total size
    ``magnitude`` still leaves ~``GUARD_BITS`` bits below the unit."""
    if magnitude <= 0 or not gmpy2.is_finite(mpfr(magnitude)):
        return MIN_BITS + GUARD_BITS
    exp = int(gmpy2.floor(gmpy2.log2(mpfr(magnitude)))) + 1
    return max(MIN_BITS, exp + GUARD_BITS)


def bits_for_log(log_magnitude: float) -> int:
    """:func:`bits_for` given the natural log of the magnitude."""
    if not math.isfinite(log_magnitude):
        return MIN_BITS + GUARD_BITS
    exp = math.floor(log_magnitude / math.log(2)) + 1
    return max(MIN_BITS, exp + GUARD_BITS)


def array(values) -> np.ndarray:
    out = np.empty(len(values), dtype=object)
    for i, v in enumerate(values):
        out[i] = mpfr(v)
    return out


def full(size: int, value) -> np.ndarray:
    out = np.empty(size, dtype=object)
    v = mpfr(value)
    for i in range(size):
        out[i] = v
    return out


def to_float(values) -> np.ndarray:
    return np.array([float(v) for v in values], dtype=float)


def is_finite(x) -> bool:
    if isinstance(x, float):
        return math.isfinite(x)
    return bool(gmpy2.is_finite(x))


def log(x) -> float:
    """Natural log as a float; ``-inf`` for zero, works far outside float range."""
    if x == 0:
        return -math.inf
    return float(gmpy2.log(mpfr(x)))
