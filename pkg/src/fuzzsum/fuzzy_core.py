"""Fuzzy numbers on the real line, represented by sampled alpha-cuts.

A :class:`FuzzyNumber` stores the left and right endpoints of its alpha-cuts on
the uniform grid ``alpha_j = j / M`` for ``j = 0..M``.  Instances are validated
once, at construction, and are immutable afterwards; addition and scalar
multiplication preserve validity so results are built without re-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_M = 64
ALGEBRA_TOL = 1e-9
LIMIT_TOL = 1e-6


class FuzzyError(ValueError):
    """Base class for errors raised by fuzzy arithmetic."""


class InvalidInputError(FuzzyError):
    pass


class GridMismatchError(FuzzyError):
    pass


class InvalidFuzzyNumberError(FuzzyError):
    """Endpoint arrays do not describe a fuzzy number.

    ``level`` is the first offending grid index; ``nonfinite`` is set when the
    failure is an overflowed or NaN endpoint rather than a shape violation.
    """

    def __init__(self, message: str, level: int | None = None, nonfinite: bool = False):
        super().__init__(message)
        self.level = level
        self.nonfinite = nonfinite


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = ALGEBRA_TOL

    def __post_init__(self):
        if not (self.abs_tol >= 0):
            raise InvalidInputError(f"abs_tol must be nonnegative, got {self.abs_tol}")


def alpha_grid(M: int) -> np.ndarray:
    """The levels ``j / M`` for ``j = 0..M``."""
    _check_levels(M)
    return np.arange(M + 1, dtype=float) / M


def _check_levels(M) -> None:
    if isinstance(M, bool) or not isinstance(M, (int, np.integer)) or M < 1:
        raise InvalidInputError(f"number of levels must be a positive integer, got {M!r}")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class FuzzyNumber:
    """A fuzzy number given by its alpha-cut endpoints on a uniform grid.

    Use :func:`from_alpha_cuts` (validating) or the arithmetic functions of
    this module to build instances; the constructor itself trusts its input.
    """

    lo: np.ndarray
    hi: np.ndarray

    @property
    def levels(self) -> int:
        return len(self.lo) - 1

    @property
    def alphas(self) -> np.ndarray:
        return alpha_grid(self.levels)

    def cut(self, alpha: float) -> tuple[float, float]:
        """Endpoints at ``alpha``, linearly interpolated between grid levels."""
        if not 0.0 <= alpha <= 1.0:
            raise InvalidInputError(f"alpha must lie in [0, 1], got {alpha}")
        grid = self.alphas
        return float(np.interp(alpha, grid, self.lo)), float(np.interp(alpha, grid, self.hi))

    def norm(self) -> float:
        """``D(u, 0)``; by nestedness this is attained on the alpha = 0 cut."""
        return float(max(abs(self.lo[0]), abs(self.hi[0])))

    def equals(self, other: FuzzyNumber, tol: Tolerance | float = 0.0) -> bool:
        abs_tol = tol.abs_tol if isinstance(tol, Tolerance) else tol
        if other.levels != self.levels:
            return False
        return metric_D(self, other) <= abs_tol

    def __eq__(self, other):
        if not isinstance(other, FuzzyNumber):
            return NotImplemented
        return (
            self.levels == other.levels
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
        )

    __hash__ = None

    def __add__(self, other):
        if not isinstance(other, FuzzyNumber):
            return NotImplemented
        return add(self, other)

    def __rmul__(self, k):
        if isinstance(k, FuzzyNumber):
            return NotImplemented
        return scalar_mul(k, self)

    def __repr__(self):
        if self.levels <= 4:
            cuts = ", ".join(f"[{a:g}, {b:g}]" for a, b in zip(self.lo, self.hi))
            return f"FuzzyNumber(M={self.levels}, cuts=({cuts}))"
        return (
            f"FuzzyNumber(M={self.levels}, support=[{self.lo[0]:g}, {self.hi[0]:g}], "
            f"core=[{self.lo[-1]:g}, {self.hi[-1]:g}])"
        )


def _trusted(lo: np.ndarray, hi: np.ndarray) -> FuzzyNumber:
    return FuzzyNumber(_readonly(lo), _readonly(hi))


def from_alpha_cuts(lo, hi) -> FuzzyNumber:
    """Validate endpoint arrays and wrap them as a :class:`FuzzyNumber`."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if lo.ndim != 1 or hi.ndim != 1 or lo.shape != hi.shape:
        raise InvalidFuzzyNumberError(
            f"endpoint arrays must be one-dimensional of equal length, got {lo.shape} and {hi.shape}"
        )
    if len(lo) < 2:
        raise InvalidFuzzyNumberError("at least two alpha levels (M >= 1) are required")
    bad = ~(np.isfinite(lo) & np.isfinite(hi))
    if bad.any():
        j = int(np.argmax(bad))
        raise InvalidFuzzyNumberError(
            f"non-finite endpoint at level {j}: [{lo[j]}, {hi[j]}]", level=j, nonfinite=True
        )
    check_shape(lo, hi)
    return _trusted(lo, hi)


def check_shape(lo: np.ndarray, hi: np.ndarray) -> None:
    """Raise unless every cut is nonempty and the cuts are nested.

    Works on float arrays and on object arrays of extended-precision values.
    """
    bad = np.asarray(lo > hi, dtype=bool)
    if bad.any():
        j = int(np.argmax(bad))
        raise InvalidFuzzyNumberError(f"empty cut at level {j}: lo={lo[j]} > hi={hi[j]}", level=j)
    bad = np.asarray(np.diff(lo) < 0, dtype=bool)
    if bad.any():
        j = int(np.argmax(bad)) + 1
        raise InvalidFuzzyNumberError(
            f"cuts not nested at level {j}: lower endpoint decreases from {lo[j - 1]} to {lo[j]}",
            level=j,
        )
    bad = np.asarray(np.diff(hi) > 0, dtype=bool)
    if bad.any():
        j = int(np.argmax(bad)) + 1
        raise InvalidFuzzyNumberError(
            f"cuts not nested at level {j}: upper endpoint increases from {hi[j - 1]} to {hi[j]}",
            level=j,
        )


def _finite(name: str, x) -> float:
    try:
        v = float(x)
    except (TypeError, ValueError):
        raise InvalidInputError(f"{name} must be a real number, got {x!r}") from None
    if not math.isfinite(v):
        raise InvalidInputError(f"{name} must be finite, got {x!r}")
    return v


def crisp(r: float, M: int = DEFAULT_M) -> FuzzyNumber:
    """The crisp number ``r`` (every cut is ``{r}``)."""
    r = _finite("r", r)
    _check_levels(M)
    v = np.full(M + 1, r)
    return _trusted(v, v.copy())


def triangular(a: float, b: float, c: float, M: int = DEFAULT_M) -> FuzzyNumber:
    """Triangular fuzzy number with support ``[a, c]`` and peak ``b``."""
    a, b, c = _finite("a", a), _finite("b", b), _finite("c", c)
    if not a <= b <= c:
        raise InvalidInputError(f"triangular requires a <= b <= c, got ({a}, {b}, {c})")
    alpha = alpha_grid(M)
    lo = a + (b - a) * alpha
    hi = c - (c - b) * alpha
    # the two formulas can round to opposite sides of b at alpha = 1
    lo[-1] = hi[-1] = b
    return _trusted(lo, hi)


def _same_grid(u: FuzzyNumber, v: FuzzyNumber) -> None:
    if u.levels != v.levels:
        raise GridMismatchError(f"alpha grids differ: M={u.levels} vs M={v.levels}")


def _checked(lo: np.ndarray, hi: np.ndarray) -> FuzzyNumber:
    # nested cuts: every endpoint lies between lo[0] and hi[0]
    if not (math.isfinite(lo[0]) and math.isfinite(hi[0])):
        raise InvalidFuzzyNumberError(
            f"arithmetic overflow: support [{lo[0]}, {hi[0]}]", level=0, nonfinite=True
        )
    return _trusted(lo, hi)


def add(u: FuzzyNumber, v: FuzzyNumber) -> FuzzyNumber:
    _same_grid(u, v)
    with np.errstate(over="ignore"):
        return _checked(u.lo + v.lo, u.hi + v.hi)


def scalar_mul(k: float, u: FuzzyNumber) -> FuzzyNumber:
    k = _finite("k", k)
    with np.errstate(over="ignore", invalid="ignore"):
        if k >= 0:
            return _checked(k * u.lo, k * u.hi)
        return _checked(k * u.hi, k * u.lo)


def metric_D(u: FuzzyNumber, v: FuzzyNumber) -> float:
    """Grid maximum of the endpoint deviations.

    This is a lower bound on the supremum over the whole of [0, 1]; the two
    agree whenever the endpoint differences are monotone in alpha.
    """
    _same_grid(u, v)
    return float(max(np.max(np.abs(u.lo - v.lo)), np.max(np.abs(u.hi - v.hi))))


def norm(u: FuzzyNumber) -> float:
    return u.norm()
