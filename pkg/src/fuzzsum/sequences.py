"""Sequences of fuzzy numbers behind one interface.

Builtin families reproduce the constructions used to separate the summability
methods (Abel but not Cesaro, E_s but not E_p, Borel but not E_p) and the
sequence showing that ``D(u_n, 0) = o(n)`` is the best possible growth bound
for Cesaro summable sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Mapping, Sequence

import gmpy2
import numpy as np
from gmpy2 import mpfr

from . import _hp, seqlang
from .fuzzy_core import (
    FuzzyError,
    FuzzyNumber,
    GridMismatchError,
    InvalidFuzzyNumberError,
    InvalidInputError,
    check_shape,
    crisp,
    from_alpha_cuts,
    scalar_mul,
    _trusted,
    triangular,
)

BUILTINS = ("constant", "abel_not_cesaro", "cesaro_bound_witness", "es_not_ep", "borel_not_ep")

TermFn = Callable[[int, int], FuzzyNumber]
HpFn = Callable[[int, int], "tuple[np.ndarray, np.ndarray]"]


BlockFn = Callable[[int, int, int], "tuple[np.ndarray, np.ndarray]"]


@dataclass(frozen=True, eq=False)
class FuzzySequence:
    """A lazily evaluated map ``n -> u_n``.

    ``term_fn(n, M)`` returns the n-th term on an (M+1)-level grid.  When
    ``block_fn(n0, n1, M)`` is given it returns raw float endpoint rows for
    ``n0 <= n < n1`` in one vectorised call, and ``term_fn`` must agree with it
    exactly.  When ``hp_fn`` is given it returns the endpoints as ``mpfr``
    arrays at the current gmpy2 precision; summation routines use it when
    float64 would overflow or lose the result to cancellation.
    """

    name: str
    term_fn: TermFn = field(repr=False)
    params: Mapping[str, Any] = field(default_factory=dict)
    hp_fn: HpFn | None = field(default=None, repr=False)
    known_profile: Mapping[str, str] | None = None
    length: int | None = None
    cache_size: int = 4096
    block_fn: BlockFn | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.cache_size:
            object.__setattr__(self, "_cached", lru_cache(maxsize=self.cache_size)(self.term_fn))
        else:
            object.__setattr__(self, "_cached", self.term_fn)

    def _check_index(self, n) -> int:
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 0:
            raise InvalidInputError(f"index must be a nonnegative integer, got {n!r}")
        if self.length is not None and n >= self.length:
            raise InvalidInputError(f"{self.name} has only {self.length} terms, asked for index {n}")
        return int(n)

    def term(self, n: int, M: int) -> FuzzyNumber:
        return self._cached(self._check_index(n), M)

    def terms(self, N: int, M: int) -> list[FuzzyNumber]:
        """``u_0 .. u_N``; raises the error of the first invalid term."""
        if self.block_fn is None:
            return [self.term(n, M) for n in range(N + 1)]
        lo, hi, err = self.block(0, N + 1, M)
        if err is not None:
            raise err
        if len(lo) < N + 1:
            self._check_index(N)
        return [_trusted(a, b) for a, b in zip(lo, hi)]

    def block(self, n0: int, n1: int, M: int):
        """Endpoint rows of ``u_n0 .. u_(n1-1)`` as two ``(k, M+1)`` arrays.

        Stops at the first term that fails validation: returns the valid prefix
        together with the exception for that term (``None`` if all passed).
        """
        n0 = self._check_index(n0)
        if self.length is not None:
            n1 = min(n1, self.length)
        if self.block_fn is None:
            return self._block_by_term(n0, n1, M)
        lo, hi = self.block_fn(n0, n1, M)
        with np.errstate(invalid="ignore"):
            ok = (
                np.isfinite(lo).all(axis=1)
                & np.isfinite(hi).all(axis=1)
                & (lo <= hi).all(axis=1)
                & (np.diff(lo, axis=1) >= 0).all(axis=1)
                & (np.diff(hi, axis=1) <= 0).all(axis=1)
            )
        if ok.all():
            return lo, hi, None
        r = int(np.argmin(ok))
        try:
            from_alpha_cuts(lo[r], hi[r])
        except InvalidFuzzyNumberError as exc:
            return lo[:r], hi[:r], self._located(exc, n0 + r)
        raise AssertionError("block validation disagrees with from_alpha_cuts")  # pragma: no cover

    def _block_by_term(self, n0, n1, M):
        los, his = [], []
        err = None
        for n in range(n0, n1):
            try:
                u = self.term(n, M)
            except InvalidFuzzyNumberError as exc:
                err = self._located(exc, n)
                break
            except (FuzzyError, OverflowError) as exc:
                err = exc
                break
            los.append(u.lo)
            his.append(u.hi)
        shape = (0, M + 1)
        lo = np.array(los) if los else np.empty(shape)
        hi = np.array(his) if his else np.empty(shape)
        return lo, hi, err

    def _located(self, exc: InvalidFuzzyNumberError, n: int) -> InvalidFuzzyNumberError:
        out = InvalidFuzzyNumberError(f"{self.name} term n={n}: {exc}", exc.level, exc.nonfinite)
        out.n = n
        return out

    @property
    def has_hp(self) -> bool:
        return self.hp_fn is not None

    def term_hp(self, n: int, M: int):
        n = self._check_index(n)
        if self.hp_fn is not None:
            return self.hp_fn(n, M)
        u = self.term(n, M)
        return _hp.array(u.lo), _hp.array(u.hi)

    def norm_hp(self, n: int):
        """``D(u_n, 0)`` as an mpfr; read off the alpha = 0 cut."""
        lo, hi = self.term_hp(n, 1)
        return max(abs(lo[0]), abs(hi[0]))

    @classmethod
    def from_terms(cls, terms: Sequence[FuzzyNumber], name: str = "explicit") -> FuzzySequence:
        terms = tuple(terms)
        if not terms:
            raise InvalidInputError("need at least one term")

        def term(n, M):
            u = terms[n]
            if u.levels != M:
                raise GridMismatchError(f"term {n} has M={u.levels}, requested M={M}")
            return u

        return cls(name, term, length=len(terms), cache_size=0)

    @classmethod
    def scaled(cls, base: FuzzyNumber | Callable[[int], FuzzyNumber], coeff: Callable[[int], float], name: str):
        """``u_n = coeff(n) * base`` with ``base`` a fuzzy number or a factory ``M -> u``."""

        def term(n, M):
            w = base(M) if callable(base) else base
            if w.levels != M:
                raise GridMismatchError(f"base has M={w.levels}, requested M={M}")
            return scalar_mul(coeff(n), w)

        return cls(name, term)


# -- builtin families -------------------------------------------------------


def _float_alphas(M):
    return np.arange(M + 1, dtype=float) / M


def _hp_alphas(M):
    return _hp.array([mpfr(j) / M for j in range(M + 1)])


def _sign(n):
    return 1 - 2 * (n % 2)


def _family(name, float_rows, hp_endpoints, params, profile) -> FuzzySequence:
    """Build a sequence from two formulas for the same endpoints.

    ``float_rows(ns, alphas)`` gets a ``(k, 1)`` integer column of indices and
    returns arrays broadcastable to ``(k, M+1)``; ``hp_endpoints(n, alphas)``
    gets a single index and ``mpfr`` levels.
    """

    def block(n0, n1, M):
        ns = np.arange(n0, max(n0, n1), dtype=np.int64)[:, None]
        shape = (len(ns), M + 1)
        with np.errstate(all="ignore"):
            lo, hi = float_rows(ns, _float_alphas(M))
            return np.broadcast_to(lo, shape).astype(float), np.broadcast_to(hi, shape).astype(float)

    def term(n, M):
        lo, hi = block(n, n + 1, M)
        return from_alpha_cuts(lo[0], hi[0])

    def hp(n, M):
        lo, hi = hp_endpoints(n, _hp_alphas(M))
        lo = lo if isinstance(lo, np.ndarray) else _hp.full(M + 1, lo)
        hi = hi if isinstance(hi, np.ndarray) else _hp.full(M + 1, hi)
        check_shape(lo, hi)
        return lo, hi

    return FuzzySequence(
        name, term, params=dict(params), hp_fn=hp, known_profile=profile, block_fn=block
    )


def _constant(value=None, a=None, b=None, c=None) -> FuzzySequence:
    if value is None and a is not None:
        value = (a, b, c)
    if value is None:
        raise InvalidInputError("constant needs 'value' (number, triple or FuzzyNumber)")
    if isinstance(value, FuzzyNumber):
        fixed = value

        def make(M):
            if M != fixed.levels:
                raise GridMismatchError(f"constant value has M={fixed.levels}, requested M={M}")
            return fixed

        shown = {"value": "fuzzy"}
    elif isinstance(value, (tuple, list)):
        if len(value) != 3:
            raise InvalidInputError("constant triple must be (a, b, c)")
        trip = tuple(float(x) for x in value)
        triangular(*trip, 1)  # validates ordering

        def make(M):
            return triangular(*trip, M)

        shown = {"a": trip[0], "b": trip[1], "c": trip[2]}
    else:
        r = float(value)
        crisp(r, 1)

        def make(M):
            return crisp(r, M)

        shown = {"value": r}

    def term(n, M):
        return make(M)

    def block(n0, n1, M):
        u = make(M)
        k = max(0, n1 - n0)
        return np.tile(u.lo, (k, 1)), np.tile(u.hi, (k, 1))

    return FuzzySequence(
        "constant",
        term,
        params=shown,
        known_profile={m: "summable" for m in ("ordinary", "cesaro", "euler(1)", "abel", "borel")},
        block_fn=block,
    )


def _abel_not_cesaro() -> FuzzySequence:
    def rows(ns, a):
        base = (_sign(ns) * ns).astype(float)
        g = (a / 2) ** ns
        first = ns == 0
        return np.where(first, 1.0, base + g), np.where(first, 1.0, base + 2 - g)

    def hp(n, a):
        if n == 0:
            return mpfr(1), mpfr(1)
        base = mpfr(_sign(n) * n)
        g = (a / 2) ** n
        return base + g, base + 2 - g

    return _family("abel_not_cesaro", rows, hp, {}, {"cesaro": "not_summable", "abel": "summable"})


def _cesaro_bound_witness(lam_power=1.0, first=2, step=2, lam=None) -> FuzzySequence:
    first, step = int(first), int(step)
    if first < 1 or step < 2:
        raise InvalidInputError("cesaro_bound_witness needs first >= 1 and step >= 2")
    if lam is None:
        lam_power = float(lam_power)
        if not lam_power > 0:
            raise InvalidInputError("lam_power must be positive so that lambda_n grows without bound")

        def lam(n):
            return n**lam_power

        params = {"lam_power": lam_power, "first": first, "step": step}
    else:
        params = {"lam": getattr(lam, "__name__", "custom"), "first": first, "step": step}

    def in_subsequence(n):
        return n >= first and (n - first) % step == 0

    def lam_at(nk):
        v = lam(nk)
        if not v > 0:
            raise InvalidInputError(f"lambda must be positive, got {v} at n={nk}")
        return v

    def offset(n):
        """Signed shift of term n: +n_k/sqrt(lambda) at n_k, minus that just after."""
        if in_subsequence(n):
            return n / math.sqrt(lam_at(n))
        if in_subsequence(n - 1):
            return -(n - 1) / math.sqrt(lam_at(n - 1))
        return 0.0

    def rows(ns, a):
        c = np.array([offset(int(n)) for n in ns[:, 0]])[:, None]
        return a + c, 2 - a + c

    def hp(n, a):
        lo, hi = a, 2 - a
        if in_subsequence(n):
            c = mpfr(n) / gmpy2.sqrt(mpfr(lam_at(n)))
        elif in_subsequence(n - 1):
            c = -mpfr(n - 1) / gmpy2.sqrt(mpfr(lam_at(n - 1)))
        else:
            return lo, hi
        return lo + c, hi + c

    return _family(
        "cesaro_bound_witness", rows, hp, params, {"cesaro": "summable", "abel": "summable"}
    )


def _es_not_ep(p=1.0, s=3.0) -> FuzzySequence:
    p, s = float(p), float(s)
    if not 0 < p < s:
        raise InvalidInputError(f"es_not_ep needs 0 < p < s, got p={p}, s={s}")
    q = -p - s - 1

    def rows(ns, a):
        base = q**ns
        first = ns == 0
        return np.where(first, 2.0, base + (a / 2) ** ns), np.where(first, 3 - a, base + 2 - a)

    def hp(n, a):
        if n == 0:
            return mpfr(2), 3 - a
        base = mpfr(q) ** n
        return base + (a / 2) ** n, base + 2 - a

    profile = {f"euler({p:g})": "not_summable", f"euler({s:g})": "summable", "borel": "summable"}
    return _family("es_not_ep", rows, hp, {"p": p, "s": s}, profile)


def _borel_not_ep() -> FuzzySequence:
    def rows(ns, a):
        fact = np.array([seqlang.FLOAT.factorial(int(n)) for n in ns[:, 0]])[:, None]
        base = _sign(ns) * fact
        return base + a, base + 2 / (1 + a)

    def hp(n, a):
        base = _sign(n) * mpfr(seqlang.HP.factorial(n))
        return base + a, base + 2 / (1 + a)

    profile = {"euler(1)": "not_summable", "euler(2)": "not_summable", "borel": "summable"}
    return _family("borel_not_ep", rows, hp, {}, profile)


_FACTORIES = {
    "constant": _constant,
    "abel_not_cesaro": _abel_not_cesaro,
    "cesaro_bound_witness": _cesaro_bound_witness,
    "es_not_ep": _es_not_ep,
    "borel_not_ep": _borel_not_ep,
}


def builtin(name: str, params: Mapping[str, Any] | None = None) -> FuzzySequence:
    """Construct a builtin family by name.

    ``constant``             value (number, (a, b, c) triple or FuzzyNumber)
    ``abel_not_cesaro``      no parameters
    ``cesaro_bound_witness`` lam_power (lambda_n = n**lam_power), first, step
                             (subsequence n_k = first + step*k), or lam callable
    ``es_not_ep``            p, s with 0 < p < s
    ``borel_not_ep``         no parameters
    """
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise InvalidInputError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}") from None
    try:
        return factory(**dict(params or {}))
    except TypeError as exc:
        raise InvalidInputError(f"bad parameters for {name}: {exc}") from None


def witness_subsequence(seq: FuzzySequence, count: int) -> list[int]:
    """The indices n_k of a cesaro_bound_witness sequence, k < count."""
    first, step = int(seq.params["first"]), int(seq.params["step"])
    return [first + step * k for k in range(count)]


def from_seqdef(d: seqlang.SeqDef, name: str = "dsl") -> FuzzySequence:
    """Sequence whose k-th term is the definition evaluated at ``n = start + k``."""
    shift = d.start

    def term(k, M):
        return seqlang.eval_term(d, k + shift, M)

    def hp(k, M):
        return seqlang.eval_term_hp(d, k + shift, M)

    def block(k0, k1, M):
        return seqlang.eval_block(d, k0 + shift, k1 + shift, M)

    return FuzzySequence(
        name, term, params={"source": seqlang.format_seqdef(d)}, hp_fn=hp, block_fn=block
    )


def norm_of(seq: FuzzySequence, n: int, M: int = 1) -> float:
    """``D(u_n, 0)`` as a float, falling back to extended range on overflow."""
    try:
        return seq.term(n, M).norm()
    except (OverflowError, InvalidFuzzyNumberError) as exc:
        if is_overflow(exc) and seq.has_hp:
            with _hp.precision(64):
                return float(seq.norm_hp(n))
        raise


def log_norms(seq: FuzzySequence, n0: int, n1: int, M: int = 1) -> np.ndarray:
    """``log D(u_n, 0)`` for ``n0 <= n < n1``.

    Logs keep growth ratios such as ``D(u_n, 0) / 7^n`` finite long after
    the norms themselves leave float range.
    """
    out = []
    n = n0
    while n < n1:
        lo, hi, err = seq.block(n, min(n1, n + 1024), M)
        with np.errstate(divide="ignore"):
            out.extend(np.log(np.maximum(np.abs(lo[:, 0]), np.abs(hi[:, 0]))).tolist())
        n += len(lo)
        if err is not None:
            if not (is_overflow(err) and seq.has_hp):
                raise err
            break
    if n < n1:
        with _hp.precision(64):
            out.extend(_hp.log(seq.norm_hp(j)) for j in range(n, n1))
    return np.array(out, dtype=float)


def is_overflow(exc: BaseException) -> bool:
    return isinstance(exc, OverflowError) or getattr(exc, "nonfinite", False)


__all__ = [
    "BUILTINS",
    "FuzzySequence",
    "builtin",
    "from_seqdef",
    "log_norms",
    "norm_of",
    "witness_subsequence",
]
