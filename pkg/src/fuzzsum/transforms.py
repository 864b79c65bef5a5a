"""Summability transforms of fuzzy sequences.

Every routine works on endpoint arrays; all weights are nonnegative, so the
fuzzy scalar multiplication ``w * u`` is plain endpoint scaling and sums are
endpoint-wise.  The Euler, Abel and Borel routines first bound the total size
``S`` of the weighted terms.  When ``S`` is small the sum is done in float64;
otherwise (divergent sequences summed by a strong method cancel terms many
orders of magnitude larger than the result) it is redone in extended
precision with enough bits to absorb the cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import gmpy2
import numpy as np
from gmpy2 import mpfr

from . import _hp
from .fuzzy_core import (
    ALGEBRA_TOL,
    FuzzyNumber,
    InvalidFuzzyNumberError,
    InvalidInputError,
    crisp,
    from_alpha_cuts,
)
from .sequences import FuzzySequence, is_overflow

ABEL_GRID = tuple(1.0 - 2.0**-k for k in range(1, 11))
BOREL_GRID = tuple(5.0 * 2.0**k for k in range(0, 5))

# float64 is used while the cancellation bound stays below this
FLOAT_CANCELLATION_LIMIT = 1e4
CONFIRMATIONS = 3
DIVERGENCE_WINDOW = 250


@dataclass(frozen=True)
class TransformParams:
    """Knobs shared by the transforms.

    ``abel_grid`` and ``borel_grid`` are the evaluation abscissae of the two
    power series methods; ``euler_orders`` are the orders classified besides
    ``p`` (default ``p``, ``p + 1`` and ``2p + 3``).
    """

    p: float = 1.0
    trunc_tol: float = 1e-12
    max_terms: int = 100_000
    abel_grid: tuple[float, ...] = ABEL_GRID
    borel_grid: tuple[float, ...] = BOREL_GRID
    euler_orders: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.p > 0:
            raise InvalidInputError(f"Euler order p must be positive, got {self.p}")
        if not self.trunc_tol > 0:
            raise InvalidInputError(f"trunc_tol must be positive, got {self.trunc_tol}")
        if int(self.max_terms) < 1:
            raise InvalidInputError(f"max_terms must be positive, got {self.max_terms}")
        object.__setattr__(self, "abel_grid", tuple(float(x) for x in self.abel_grid))
        object.__setattr__(self, "borel_grid", tuple(float(x) for x in self.borel_grid))
        _check_grid(self.abel_grid, "abel_grid")
        _check_grid(self.borel_grid, "borel_grid")
        if any(not 0 < x < 1 for x in self.abel_grid):
            raise InvalidInputError("Abel abscissae must lie in (0, 1)")
        if any(not x > 0 for x in self.borel_grid):
            raise InvalidInputError("Borel abscissae must be positive")
        if self.euler_orders is not None:
            orders = tuple(float(q) for q in self.euler_orders)
            if any(not q > 0 for q in orders):
                raise InvalidInputError("Euler orders must be positive")
            object.__setattr__(self, "euler_orders", orders)

    def orders(self) -> tuple[float, ...]:
        if self.euler_orders is not None:
            return tuple(sorted(set(self.euler_orders) | {self.p}))
        return (self.p, self.p + 1, 2 * self.p + 3)


def _check_grid(grid, name):
    if any(not math.isfinite(x) for x in grid):
        raise InvalidInputError(f"{name} must be finite")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidInputError(f"{name} must be strictly increasing")


@dataclass(frozen=True)
class TailBoundReport:
    """How a power series was truncated.

    ``last_term_norm`` is the weighted norm of the last term examined.
    ``cancellation`` bounds the absolute rounding error scale of the result
    (sum of weighted term norms, times the outer factor).  ``diverged`` marks
    series whose weighted terms stopped shrinking; their value is withheld.
    """

    terms_used: int
    last_term_norm: float
    cap_hit: bool
    converged: bool
    diverged: bool = False
    cancellation: float = 0.0
    precision_bits: int = 53
    warning: str | None = None


# -- sequence-indexed transforms --------------------------------------------


def _endpoint_matrix(seq: FuzzySequence, N: int, M: int):
    if int(N) != N or N < 0:
        raise InvalidInputError(f"N must be a nonnegative integer, got {N}")
    lo, hi, err = seq.block(0, int(N) + 1, M)
    if err is not None:
        raise err
    if len(lo) < N + 1:
        seq.term(int(N), M)  # raises for sequences that are too short
    return lo, hi


def _result(lo, hi) -> FuzzyNumber:
    """Wrap a nonnegative combination of fuzzy numbers.

    The exact result is a fuzzy number; float rounding can still leave a
    neighbouring pair of levels out of order by an ulp or so.  Such
    violations, up to ``ALGEBRA_TOL`` scaled by the row magnitude, are
    flattened before validation.  Larger ones still raise.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
        slack = ALGEBRA_TOL * max(1.0, float(np.abs(lo).max()), float(np.abs(hi).max()))
        lo2 = np.maximum.accumulate(lo)
        hi2 = np.minimum.accumulate(hi)
        mid = (lo2[-1] + hi2[-1]) / 2
        if lo2[-1] > hi2[-1] and lo2[-1] - hi2[-1] <= slack:
            lo2 = np.minimum(lo2, mid)
            hi2 = np.maximum(hi2, mid)
        if max(np.abs(lo2 - lo).max(), np.abs(hi2 - hi).max()) <= slack:
            lo, hi = lo2, hi2
    return from_alpha_cuts(lo, hi)


def _wrap(lo_rows, hi_rows) -> list[FuzzyNumber]:
    return [_result(lo, hi) for lo, hi in zip(lo_rows, hi_rows)]


def partial_sums(seq: FuzzySequence, N: int, M: int) -> list[FuzzyNumber]:
    """``s_n = u_0 + ... + u_n`` for ``n = 0..N``."""
    lo, hi = _endpoint_matrix(seq, N, M)
    return _wrap(np.cumsum(lo, axis=0), np.cumsum(hi, axis=0))


def cesaro_means(seq: FuzzySequence, N: int, M: int) -> list[FuzzyNumber]:
    """``sigma_n = s_n / (n + 1)``."""
    lo, hi = _endpoint_matrix(seq, N, M)
    k = np.arange(1, len(lo) + 1, dtype=float)[:, None]
    return _wrap(np.cumsum(lo, axis=0) / k, np.cumsum(hi, axis=0) / k)


def euler_weights(n: int, p: float) -> np.ndarray:
    """Row ``C(n, k) p^(n-k) / (p+1)^n``, ``k = 0..n``, by multiplicative recurrence."""
    if not p > 0:
        raise InvalidInputError(f"Euler order must be positive, got {p}")
    if n == 0:
        return np.ones(1)
    k = np.arange(n, dtype=float)
    ratios = (n - k) / ((k + 1) * p)
    w0 = (p / (p + 1)) ** n
    if w0 > 1e-290:
        return np.cumprod(np.concatenate(([w0], ratios)))
    # w0 underflows: start at the largest weight and recur outwards
    mode = int(math.floor((n + 1) / (p + 1)))
    mode = min(max(mode, 0), n)
    logw = (
        math.lgamma(n + 1)
        - math.lgamma(mode + 1)
        - math.lgamma(n - mode + 1)
        + (n - mode) * math.log(p)
        - n * math.log(p + 1)
    )
    w = np.zeros(n + 1)
    w[mode] = math.exp(logw)
    for j in range(mode, n):
        w[j + 1] = w[j] * ratios[j]
    for j in range(mode, 0, -1):
        w[j - 1] = w[j] / ratios[j - 1]
    return w


def _euler_weights_hp(n: int, p) -> list:
    p = mpfr(p)
    w = (p / (p + 1)) ** n
    out = [w]
    for k in range(n):
        w = w * (n - k) / ((k + 1) * p)
        out.append(w)
    return out


def _float_prefix(seq: FuzzySequence, N: int, M: int):
    """Endpoint rows of the terms that fit in float64, and every norm ``D(u_k, 0)``.

    Norms past the first overflow are ``mpfr`` (needs extended precision).
    """
    lo, hi, err = seq.block(0, N + 1, M)
    if err is not None and not (is_overflow(err) and seq.has_hp):
        raise err
    if err is None and len(lo) < N + 1:
        seq.term(N, M)  # raises for sequences that are too short
    norms = np.maximum(np.abs(lo[:, 0]), np.abs(hi[:, 0])).tolist()
    with _hp.precision(64):
        norms += [seq.norm_hp(k) for k in range(len(lo), N + 1)]
    return lo, hi, norms


def euler_means(seq: FuzzySequence, p: float, N: int, M: int) -> list[FuzzyNumber]:
    """Euler means ``t^p_n = sum_k C(n,k) p^(n-k) / (p+1)^n u_k`` for ``n = 0..N``."""
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise InvalidInputError(f"Euler order must be a real number, got {p!r}") from None
    if not (math.isfinite(p) and p > 0):
        raise InvalidInputError(f"Euler order must be positive, got {p}")
    if int(N) != N or N < 0:
        raise InvalidInputError(f"N must be a nonnegative integer, got {N}")
    N = int(N)
    lo, hi, norms = _float_prefix(seq, N, M)
    n_float = len(lo)

    out_lo = np.empty((N + 1, M + 1))
    out_hi = np.empty((N + 1, M + 1))
    hp_rows = []
    hp_mag = 0
    with _hp.precision(64):
        mp_norms = [mpfr(v) for v in norms]
    for n in range(N + 1):
        w = euler_weights(n, p)
        if n < n_float:
            bound = float(np.dot(w, norms[: n + 1]))
            if bound <= FLOAT_CANCELLATION_LIMIT:
                out_lo[n] = w @ lo[: n + 1]
                out_hi[n] = w @ hi[: n + 1]
                continue
        with _hp.precision(64):
            wh = _euler_weights_hp(n, p)
            bound = sum((a * b for a, b in zip(wh, mp_norms[: n + 1])), mpfr(0))
        hp_rows.append(n)
        hp_mag = max(hp_mag, bound)

    if hp_rows:
        if not seq.has_hp and n_float <= hp_rows[-1]:
            raise InvalidFuzzyNumberError("terms overflow float64 and the sequence has no extended form", nonfinite=True)
        with _hp.precision(_hp.bits_for(hp_mag)):
            last = hp_rows[-1]
            tlo, thi = zip(*(seq.term_hp(k, M) for k in range(last + 1)))
            for n in hp_rows:
                wh = _euler_weights_hp(n, p)
                acc_lo = sum((w * t for w, t in zip(wh, tlo[: n + 1])), _hp.full(M + 1, 0))
                acc_hi = sum((w * t for w, t in zip(wh, thi[: n + 1])), _hp.full(M + 1, 0))
                out_lo[n] = _hp.to_float(acc_lo)
                out_hi[n] = _hp.to_float(acc_hi)
    return _wrap(out_lo, out_hi)


def euler_composed_order(p: float, q: float) -> float:
    """Order of the q-th Euler transform applied after the p-th one."""
    if not (p > 0 and q > 0):
        raise InvalidInputError(f"Euler orders must be positive, got p={p}, q={q}")
    return p + q + p * q


# -- power series methods ---------------------------------------------------


BLOCK = 1024


def _log_norms(lo, hi) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(np.abs(lo[:, 0]), np.abs(hi[:, 0])))


def _power_series(seq, M, params, log_weights, w0, ratio, float_weights, threshold, scale, label, settle=0):
    """Truncated ``scale * sum_n w_n u_n`` with nonnegative weights.

    The scan works on ``log(w_n * D(u_n, 0))`` so weights and terms far outside
    float range are fine.  ``log_weights(ns)`` gives ``log w_n``; ``w0`` and
    ``ratio(n) = w_(n+1) / w_n`` rebuild the weights in extended precision.
    Truncation needs ``CONFIRMATIONS`` consecutive weighted terms below
    ``threshold`` at indices ``>= settle``.
    """
    max_terms = int(params.max_terms)
    log_thr = math.log(threshold)
    lo_parts, hi_parts = [], []
    float_ok = True
    logs: list[float] = []
    below = 0
    converged = diverged = exhausted = False
    pending = None
    n = 0
    while n < max_terms and not (converged or diverged):
        k = min(BLOCK, max_terms - n)
        log_norm = np.empty(0)
        if float_ok:
            lo, hi, err = seq.block(n, n + k, M)
            if err is not None:
                float_ok = False
                if not (is_overflow(err) and seq.has_hp):
                    # the valid prefix may already settle the series
                    pending = err
                    k = len(lo)
            elif len(lo) < k:
                exhausted = True
                k = len(lo)
            lo_parts.append(lo)
            hi_parts.append(hi)
            log_norm = _log_norms(lo, hi)
        if len(log_norm) < k:
            with _hp.precision(64):
                extra = [_hp.log(seq.norm_hp(j)) for j in range(n + len(log_norm), n + k)]
            log_norm = np.concatenate((log_norm, extra))
        lt = log_weights(np.arange(n, n + k)) + log_norm
        for j, v in enumerate(lt.tolist()):
            idx = n + j
            logs.append(v)
            if v < log_thr and idx >= settle:
                below += 1
                if below == CONFIRMATIONS:
                    converged = True
                    break
            else:
                below = 0
            if _stalled(logs):
                diverged = True
                break
        n += k
        if converged or diverged:
            break
        if pending is not None:
            raise pending
        if exhausted:
            converged = True
            break
    used = len(logs)
    arr = np.array(logs)
    top = float(arr.max()) if used else -math.inf
    if math.isfinite(top):
        log_total = top + math.log(float(np.exp(arr - top).sum())) + math.log(scale)
    else:
        log_total = -math.inf
    cancellation = math.exp(log_total) if log_total < 709 else math.inf
    last = logs[-1] if logs else -math.inf
    report = dict(
        terms_used=used,
        last_term_norm=math.exp(last) if last < 709 else math.inf,
        cap_hit=not converged and not diverged,
        converged=converged,
        diverged=diverged,
        cancellation=cancellation,
    )
    if diverged:
        return None, TailBoundReport(
            **report,
            warning=f"{label}: weighted terms stopped decreasing by n={used}; the series diverges at this abscissa",
        )
    warning = None
    if report["cap_hit"]:
        warning = f"{label}: max_terms={max_terms} reached with last weighted term {report['last_term_norm']:.3g} above tolerance"

    weights = float_weights(used) if float_ok else None
    if weights is not None:
        L = np.concatenate(lo_parts)[:used]
        H = np.concatenate(hi_parts)[:used]
    if weights is not None and cancellation <= FLOAT_CANCELLATION_LIMIT:
        return _result(weights @ L * scale, weights @ H * scale), TailBoundReport(**report, warning=warning)
    if report["cap_hit"] or not seq.has_hp:
        if weights is not None:
            note = f"{label}: float64 result may carry absolute error up to ~{cancellation * 1e-16:.1g}"
            return _result(weights @ L * scale, weights @ H * scale), TailBoundReport(
                **report, warning="; ".join(x for x in (warning, note) if x)
            )
        return None, TailBoundReport(**report, warning=warning or f"{label}: terms exceed float64 range")

    bits = _hp.bits_for_log(log_total)
    with _hp.precision(bits):
        w = mpfr(w0)
        acc_lo = _hp.full(M + 1, 0)
        acc_hi = _hp.full(M + 1, 0)
        for j in range(used):
            if j:
                w = w * ratio(j - 1)
            lo, hi = seq.term_hp(j, M)
            acc_lo = acc_lo + w * lo
            acc_hi = acc_hi + w * hi
        s = mpfr(scale)
        result = _result(_hp.to_float(acc_lo * s), _hp.to_float(acc_hi * s))
    return result, TailBoundReport(**report, precision_bits=bits, warning=warning)


def _stalled(logs: list[float]) -> bool:
    """Weighted term norms have stopped decaying.

    Compares the mean log-ratio over the last window with the window before:
    a divergent series has a nonnegative, non-improving rate, while a
    convergent one, however slowly it starts, has a rate that keeps falling.
    """
    L = DIVERGENCE_WINDOW
    if len(logs) < 2 * L + 1:
        return False
    a, b, c = logs[-1 - 2 * L], logs[-1 - L], logs[-1]
    if not (math.isfinite(a) and math.isfinite(b) and math.isfinite(c)):
        return False
    recent = (c - b) / L
    before = (b - a) / L
    return recent >= 0 and recent >= before - 1e-12


def abel_eval(seq: FuzzySequence, x: float, params: TransformParams | None = None, M: int = 64):
    """``(1 - x) * sum_n x^n u_n`` truncated, with its :class:`TailBoundReport`.

    Returns ``(None, report)`` when the series diverges at ``x``.
    """
    params = params or TransformParams()
    x = float(x)
    if not 0 < x < 1:
        raise InvalidInputError(f"Abel abscissa must lie in (0, 1), got {x}")
    xm = mpfr(x)
    logx = math.log(x)

    def float_weights(count):
        return np.power(x, np.arange(count, dtype=float))

    return _power_series(
        seq,
        M,
        params,
        log_weights=lambda ns: ns * logx,
        w0=1,
        ratio=lambda n: xm,
        float_weights=float_weights,
        threshold=params.trunc_tol * (1 - x),
        scale=1 - x,
        label=f"abel x={x:g}",
    )


def borel_eval(seq: FuzzySequence, x: float, params: TransformParams | None = None, M: int = 64):
    """``e^-x * sum_n x^n / n! u_n`` with Poisson weights built by recurrence.

    Truncation is not allowed before the Poisson mode ``n ~ x``: the leading
    weights are tiny for large ``x`` and would otherwise stop the sum early.
    Returns ``(None, report)`` when the series diverges at ``x``.
    """
    params = params or TransformParams()
    x = float(x)
    if not (x > 0 and math.isfinite(x)):
        raise InvalidInputError(f"Borel abscissa must be positive, got {x}")
    xm = mpfr(x)
    logx = math.log(x)

    def log_weights(ns):
        return -x + ns * logx - np.array([math.lgamma(j + 1) for j in ns.tolist()])

    def float_weights(count):
        start = math.exp(-x)
        if start < 1e-300:
            return None
        steps = x / np.arange(1, count, dtype=float)
        return np.cumprod(np.concatenate(([start], steps)))

    return _power_series(
        seq,
        M,
        params,
        log_weights=log_weights,
        w0=gmpy2.exp(-xm),
        ratio=lambda n: xm / (n + 1),
        float_weights=float_weights,
        threshold=params.trunc_tol,
        scale=1.0,
        label=f"borel x={x:g}",
        settle=math.ceil(x),
    )


# -- series products --------------------------------------------------------


def _nonnegative(xseq: Sequence[float], need: int) -> np.ndarray:
    xs = np.asarray(xseq, dtype=float)
    if xs.ndim != 1:
        raise InvalidInputError("real sequence must be one-dimensional")
    if len(xs) < need:
        raise InvalidInputError(f"need at least {need} real terms, got {len(xs)}")
    if not np.all(np.isfinite(xs)):
        raise InvalidInputError("real sequence must be finite")
    if np.any(xs < 0):
        raise InvalidInputError(f"real sequence must be nonnegative (first negative at index {int(np.argmax(xs < 0))})")
    return xs


def cauchy_product(useq: FuzzySequence, xseq: Sequence[float], N: int, M: int) -> list[FuzzyNumber]:
    """Partial sums ``P_m = sum_{n<=m} sum_{k<=n} x_{n-k} u_k`` for ``m = 0..N``.

    Evaluated through the rearrangement ``P_m = sum_k x_k U_{m-k}`` with
    ``U_j`` the partial sums of ``u``; valid because all ``x_k >= 0``.
    """
    xs = _nonnegative(xseq, int(N) + 1)
    lo, hi = _endpoint_matrix(useq, N, M)
    U_lo = np.cumsum(lo, axis=0)
    U_hi = np.cumsum(hi, axis=0)
    out_lo = np.empty_like(U_lo)
    out_hi = np.empty_like(U_hi)
    for m in range(len(U_lo)):
        w = xs[: m + 1]
        out_lo[m] = w @ U_lo[m::-1]
        out_hi[m] = w @ U_hi[m::-1]
    return _wrap(out_lo, out_hi)


def weighted_tail_sum(useq: FuzzySequence, xseq: Sequence[float], n: int, M: int) -> FuzzyNumber:
    """``sum_{k<=n} (sum_{v=k}^{n} x_v) u_k``."""
    xs = _nonnegative(xseq, int(n) + 1)[: int(n) + 1]
    tails = np.cumsum(xs[::-1])[::-1]
    lo, hi = _endpoint_matrix(useq, n, M)
    return _result(tails @ lo, tails @ hi)


def zero(M: int) -> FuzzyNumber:
    return crisp(0.0, M)
