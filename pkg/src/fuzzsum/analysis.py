"""Numerical evidence for summability: limits, growth bounds, Tauberian tests.

Asymptotic statements are replaced by finite-sample proxies.  ``o(1)`` and
``o(n)`` become a trailing-window trend test: the largest value over the last
``TREND_WINDOW`` entries must fall below ``TREND_REL`` times the running
maximum of the whole series.  A ``not_summable`` verdict needs positive
evidence (overflow, a wide trailing window or growth over two decades of n);
anything weaker is ``inconclusive``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np

from .fuzzy_core import DEFAULT_M, FuzzyError, FuzzyNumber, InvalidInputError, metric_D
from .sequences import FuzzySequence, is_overflow, log_norms
from .transforms import (
    TransformParams,
    abel_eval,
    borel_eval,
    cesaro_means,
    euler_means,
)

TREND_WINDOW = 20
TREND_REL = 0.05
DIVERGENCE_FACTOR = 10.0

SUMMABLE = "summable"
NOT_SUMMABLE = "not_summable"
INCONCLUSIVE = "inconclusive"
VERDICTS = (SUMMABLE, NOT_SUMMABLE, INCONCLUSIVE)


def euler_method(p: float) -> str:
    return f"euler({p:g})"


@dataclass
class SummabilityReport:
    """Verdict of one method.

    ``diagnostics`` holds (label, value) pairs such as per-abscissa residuals;
    ``conditions`` maps a check name to ``"pass"``, ``"fail"``, ``"n/a"`` or a
    number.  Keys starting with ``inclusion:`` are consistency checks between
    methods that a correct implementation can never fail.
    """

    method: str
    verdict: str
    limit_estimate: FuzzyNumber | None = None
    diagnostics: list[tuple[str, float]] = field(default_factory=list)
    conditions: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == SUMMABLE and self.limit_estimate is None:
            raise ValueError("a summable verdict needs a limit estimate")
        if self.verdict != INCONCLUSIVE and not self.diagnostics:
            raise ValueError("a definite verdict needs diagnostics")


class Trend(NamedTuple):
    values: list[float]
    passed: bool


def trend_test(values: Sequence[float], window: int = TREND_WINDOW, rel: float = TREND_REL) -> bool:
    """Finite-sample stand-in for ``values -> 0``.

    Passes when every value is finite and the trailing-window maximum is at
    most ``rel`` times the maximum over the whole series.
    """
    v = np.abs(np.asarray(values, dtype=float))
    if len(v) < window or not np.all(np.isfinite(v)):
        return False
    return bool(v[-window:].max() <= rel * v.max())


def _spread(values: Sequence[FuzzyNumber]) -> float:
    lo = np.array([u.lo for u in values])
    hi = np.array([u.hi for u in values])
    with np.errstate(invalid="ignore"):
        d_lo = np.abs(lo[:, None, :] - lo[None, :, :]).max(axis=2)
        d_hi = np.abs(hi[:, None, :] - hi[None, :, :]).max(axis=2)
    return float(np.maximum(d_lo, d_hi).max())


def detect_limit(values: Sequence[FuzzyNumber], tol: float, window: int) -> FuzzyNumber | None:
    """The last value when the trailing ``window`` is Cauchy to within ``tol``."""
    if int(window) != window or window < 2:
        raise InvalidInputError(f"window must be an integer >= 2, got {window}")
    if len(values) < window:
        raise InvalidInputError(f"need at least {window} values, got {len(values)}")
    tail = list(values[-int(window):])
    return tail[-1] if _spread(tail) < tol else None


def _check_N(N, least=1) -> int:
    if int(N) != N or N < least:
        raise InvalidInputError(f"N must be an integer >= {least}, got {N}")
    return int(N)


def _ratios(log_num: np.ndarray, log_den: np.ndarray) -> list[float]:
    with np.errstate(over="ignore", invalid="ignore"):
        r = np.exp(log_num - log_den)
    return [float(x) for x in r]


def growth_check_cesaro(seq: FuzzySequence, N: int, M: int = DEFAULT_M) -> Trend:
    """``D(u_n, 0) / n`` for ``n = 1..N``; a Cesaro summable sequence passes."""
    N = _check_N(N)
    n = np.arange(1, N + 1, dtype=float)
    values = _ratios(log_norms(seq, 1, N + 1, M), np.log(n))
    return Trend(values, trend_test(values))


def growth_check_euler(seq: FuzzySequence, p: float, N: int, M: int = DEFAULT_M) -> Trend:
    """``D(u_n, 0) / (2p+1)^n`` for ``n = 0..N``; an E_p summable sequence passes."""
    if not p > 0:
        raise InvalidInputError(f"Euler order must be positive, got {p}")
    N = _check_N(N, 0)
    n = np.arange(0, N + 1, dtype=float)
    values = _ratios(log_norms(seq, 0, N + 1, M), n * math.log(2 * p + 1))
    return Trend(values, trend_test(values))


def _steps(seq: FuzzySequence, N: int, M: int, series: bool) -> np.ndarray:
    """``D(u_n, u_(n-1))`` (or ``D(u_n, 0)`` with ``series``) for ``n = 1..N``.

    Overflowed terms give ``inf``, which fails every trend test.
    """
    if series:
        return np.exp(log_norms(seq, 1, N + 1, M))
    lo, hi, err = seq.block(0, N + 1, M)
    if err is not None and not is_overflow(err):
        raise err
    out = np.full(N, math.inf)
    if len(lo) > 1:
        d = np.maximum(np.abs(np.diff(lo, axis=0)).max(axis=1), np.abs(np.diff(hi, axis=0)).max(axis=1))
        out[: len(d)] = d
    return out


def tauberian_cesaro(seq: FuzzySequence, N: int, M: int = DEFAULT_M, series: bool = False) -> Trend:
    """``n D(u_n, u_(n-1))`` for ``n = 1..N`` (``n D(u_n, 0)`` with ``series``).

    When this tends to zero, Cesaro summability upgrades to convergence.
    """
    N = _check_N(N)
    n = np.arange(1, N + 1, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        values = [float(x) for x in n * _steps(seq, N, M, series)]
    return Trend(values, trend_test(values))


def tauberian_euler(seq: FuzzySequence, N: int, M: int = DEFAULT_M, series: bool = False) -> Trend:
    """``sqrt(n) D(u_(n-1), u_n)`` for ``n = 1..N`` (``sqrt(n) D(u_n, 0)`` with ``series``)."""
    N = _check_N(N)
    n = np.arange(1, N + 1, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        values = [float(x) for x in np.sqrt(n) * _steps(seq, N, M, series)]
    return Trend(values, trend_test(values))


# -- verdicts ---------------------------------------------------------------


def discrete_verdict(method: str, values: Sequence[FuzzyNumber], tol: float, window: int = TREND_WINDOW) -> SummabilityReport:
    """Verdict for a transformed sequence indexed by ``n = 0..N``."""
    N = len(values) - 1
    spread = _spread(values[-window:])
    diagnostics = [("N", float(N)), ("window_spread", spread)]
    limit = detect_limit(values, tol, window)
    if limit is not None:
        return SummabilityReport(method, SUMMABLE, limit, diagnostics)
    norms = [u.norm() for u in values]
    marks = [max(1, N // 100), max(1, N // 10), N]
    growth = N >= 100 and norms[marks[0]] < norms[marks[1]] < norms[marks[2]]
    diagnostics += [(f"norm_at_n={k}", norms[k]) for k in marks]
    if spread > DIVERGENCE_FACTOR * tol or growth:
        return SummabilityReport(method, NOT_SUMMABLE, None, diagnostics, {"divergence_evidence": "proxy"})
    return SummabilityReport(method, INCONCLUSIVE, None, diagnostics)


def _overflow_report(method: str, exc: BaseException) -> SummabilityReport:
    return SummabilityReport(
        method,
        NOT_SUMMABLE,
        None,
        [("overflow", 1.0)],
        {"divergence_evidence": f"transformed values leave float range ({exc})"},
    )


def power_series_verdict(method: str, results, tol: float) -> SummabilityReport:
    """Verdict from ``[(x, value_or_None, report), ...]`` sorted by abscissa.

    Any abscissa where the series diverges is positive evidence against the
    method.  Otherwise the estimate is the value at the most extreme abscissa
    whose difference from its predecessor is smaller than the one before.
    """
    diagnostics: list[tuple[str, float]] = []
    conditions: dict[str, Any] = {}
    diverged = [x for x, v, rep in results if rep.diverged]
    for x, v, rep in results:
        diagnostics.append((f"terms_used@x={x:g}", float(rep.terms_used)))
    if diverged:
        for x in diverged:
            diagnostics.append((f"series_diverges@x={x:g}", 1.0))
        conditions["series_diverges_at"] = ", ".join(f"{x:g}" for x in diverged)
        return SummabilityReport(method, NOT_SUMMABLE, None, diagnostics, conditions)
    if any(rep.cap_hit for _, _, rep in results):
        conditions["cap_hit_at"] = ", ".join(f"{x:g}" for x, _, rep in results if rep.cap_hit)
        return SummabilityReport(method, INCONCLUSIVE, None, diagnostics, conditions)
    values = [v for _, v, _ in results]
    residuals = [metric_D(a, b) for a, b in zip(values, values[1:])]
    for (x, _, _), r in zip(results[1:], residuals):
        diagnostics.append((f"residual@x={x:g}", r))
    if not residuals:
        return SummabilityReport(method, INCONCLUSIVE, None, diagnostics, conditions)
    # most extreme abscissa whose residual still decreases
    last = len(residuals) - 1
    while last > 0 and residuals[last] >= residuals[last - 1]:
        last -= 1
    estimate = values[last + 1]
    conditions["estimate_at_x"] = results[last + 1][0]
    if residuals[last] < tol:
        return SummabilityReport(method, SUMMABLE, estimate, diagnostics, conditions)
    if residuals[-1] > DIVERGENCE_FACTOR * tol:
        conditions["divergence_evidence"] = "proxy"
        return SummabilityReport(method, NOT_SUMMABLE, None, diagnostics, conditions)
    return SummabilityReport(method, INCONCLUSIVE, None, diagnostics, conditions)


def _power_series_report(method, evaluate, seq, grid, params, M, tol):
    results = []
    for x in sorted(grid):
        v, rep = evaluate(seq, x, params, M)
        results.append((x, v, rep))
    return power_series_verdict(method, results, tol)


def _discrete(method, compute, tol, window):
    try:
        values = compute()
    except (FuzzyError, OverflowError) as exc:
        if is_overflow(exc):
            return _overflow_report(method, exc)
        raise
    return discrete_verdict(method, values, tol, window)


def _orders(seq: FuzzySequence, params: TransformParams) -> list[float]:
    orders = set(params.orders())
    for name in (seq.known_profile or {}):
        if name.startswith("euler("):
            orders.add(float(name[6:-1]))
    return sorted(orders)


def _implies(reports, src: str, dst: str, tol: float) -> None:
    """Record the inclusion ``src summable => dst summable to the same limit``."""
    a, b = reports.get(src), reports.get(dst)
    if a is None or b is None:
        return
    key = f"inclusion:{src}=>{dst}"
    if a.verdict != SUMMABLE:
        b.conditions[key] = "n/a"
    elif b.verdict == NOT_SUMMABLE:
        b.conditions[key] = "fail"
    elif b.verdict == SUMMABLE:
        # both limits are finite-sample estimates; slow convergence alone can
        # separate them by a few tol, so only a gross gap counts as a violation
        gap = metric_D(a.limit_estimate, b.limit_estimate)
        if gap < tol:
            b.conditions[key] = "pass"
        elif gap < DIVERGENCE_FACTOR * tol:
            b.conditions[key] = "unresolved"
        else:
            b.conditions[key] = "fail"
        b.conditions[f"limit_gap:{src}"] = gap
    else:
        b.conditions[key] = "n/a"


def classify(
    seq: FuzzySequence,
    params: TransformParams | None = None,
    M: int = DEFAULT_M,
    N: int = 400,
    euler_N: int = 100,
    tol: float = 1e-2,
    window: int = TREND_WINDOW,
) -> list[SummabilityReport]:
    """Reports for ordinary convergence, Cesaro, each Euler order, Abel and Borel.

    Euler orders are those of ``params`` plus any named in the sequence's
    known profile.  Inclusion checks (Cesaro => Abel, E_p => E_s for s > p,
    E_p => Borel) land in the implied method's ``conditions``; a builtin whose
    profile disagrees with the verdict gets a ``profile`` condition.
    """
    params = params or TransformParams()
    N = _check_N(N)
    euler_N = _check_N(euler_N)
    reports: dict[str, SummabilityReport] = {}
    reports["ordinary"] = _discrete("ordinary", lambda: seq.terms(N, M), tol, window)
    reports["cesaro"] = _discrete("cesaro", lambda: cesaro_means(seq, N, M), tol, window)
    orders = _orders(seq, params)
    for p in orders:
        reports[euler_method(p)] = _discrete(euler_method(p), lambda: euler_means(seq, p, euler_N, M), tol, window)
    reports["abel"] = _power_series_report("abel", abel_eval, seq, params.abel_grid, params, M, tol)
    reports["borel"] = _power_series_report("borel", borel_eval, seq, params.borel_grid, params, M, tol)

    _implies(reports, "cesaro", "abel", tol)
    for i, p in enumerate(orders):
        for s in orders[i + 1 :]:
            _implies(reports, euler_method(p), euler_method(s), tol)
        _implies(reports, euler_method(p), "borel", tol)

    tail = min(N, 200)
    reports["cesaro"].conditions["tauberian_cesaro"] = "pass" if tauberian_cesaro(seq, tail, M).passed else "fail"
    for p in orders:
        reports[euler_method(p)].conditions["tauberian_euler"] = (
            "pass" if tauberian_euler(seq, tail, M).passed else "fail"
        )

    for method, expected in (seq.known_profile or {}).items():
        rep = reports.get(method)
        if rep is None:
            continue
        rep.conditions["expected"] = expected
        if rep.verdict == INCONCLUSIVE:
            rep.conditions["profile"] = "unconfirmed"
        elif rep.verdict != expected:
            rep.conditions["profile"] = "mismatch"
            rep.diagnostics.append(("profile_mismatch", 1.0))
    return list(reports.values())


def consistency_violations(reports: Sequence[SummabilityReport]) -> list[str]:
    """Failed inclusion checks; any entry means an internal error."""
    return [
        f"{r.method}: {key}"
        for r in reports
        for key, value in r.conditions.items()
        if key.startswith("inclusion:") and value == "fail"
    ]


__all__ = [
    "SummabilityReport",
    "Trend",
    "classify",
    "consistency_violations",
    "detect_limit",
    "growth_check_cesaro",
    "growth_check_euler",
    "tauberian_cesaro",
    "tauberian_euler",
    "trend_test",
]
