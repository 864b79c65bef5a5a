"""Theorem checks run by ``fuzzsum verify``.

Each suite returns a list of :class:`Check`; a check passes when its measured
residual is inside the stated bound.  Random inputs use dyadic endpoints and
scalars so that identities which hold exactly in real arithmetic also hold
exactly in float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analysis
from .fuzzy_core import (
    FuzzyNumber,
    add,
    crisp,
    from_alpha_cuts,
    metric_D,
    scalar_mul,
    triangular,
)
from .seqlang import parse
from .sequences import FuzzySequence, builtin, from_seqdef
from .transforms import (
    abel_eval,
    borel_eval,
    cauchy_product,
    cesaro_means,
    euler_composed_order,
    euler_means,
    euler_weights,
    partial_sums,
    weighted_tail_sum,
)

SUITES = ("core", "cesaro-abel", "euler-borel", "tauberian")
SEED = 20240229
M = 64


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{self.name}: {status} measured={self.residual:.3e}{extra}"


def _below(name, residual, bound, detail=""):
    return Check(name, bool(residual < bound), float(residual), detail)


# -- random inputs ----------------------------------------------------------


def random_fuzzy(rng: np.random.Generator, M: int = M, bound: float = 1e3) -> FuzzyNumber:
    """Random fuzzy number inside ``[-bound, bound]`` with dyadic endpoints (steps of ``scale / 64``)."""
    top = math.floor(math.log2(bound / 8))
    scale = 2.0 ** int(rng.integers(top - 4, top + 1))
    left = np.cumsum(rng.integers(0, 4, size=M)[::-1])[::-1] / 64 * scale
    right = np.cumsum(rng.integers(0, 4, size=M)[::-1])[::-1] / 64 * scale
    width = int(rng.integers(0, 64)) / 64 * scale
    room = bound - left[0] - right[0] - width
    center = int(rng.integers(-int(room), int(room) + 1))
    lo = np.concatenate((center - left, [center]))
    hi = np.concatenate((center + width + right, [center + width]))
    return from_alpha_cuts(lo, hi)


def random_scalar(rng: np.random.Generator) -> float:
    return int(rng.integers(-64, 65)) / 8


def random_sequence(rng: np.random.Generator, length: int, M: int = M) -> FuzzySequence:
    return FuzzySequence.from_terms([random_fuzzy(rng, M, bound=4.0) for _ in range(length)])


# -- core -------------------------------------------------------------------


def _exact(u: FuzzyNumber, v: FuzzyNumber) -> float:
    return metric_D(u, v)


def mixed_sign_witness() -> float:
    """``D((a+b)u, au + bu)`` for ``a = 1, b = -1, u = (0, 1, 2)``; 2 when scalar multiplication respects sign."""
    u = triangular(0, 1, 2, M)
    return metric_D(scalar_mul(0.0, u), add(scalar_mul(1.0, u), scalar_mul(-1.0, u)))


def core(count: int = 1000, seed: int = SEED) -> list[Check]:
    rng = np.random.default_rng(seed)
    zero = crisp(0.0, M)
    worst = {k: 0.0 for k in ("homogeneity", "translation", "subadditivity", "norm_bounds",
                               "same_sign_distributivity", "fuzzy_distributivity", "associativity",
                               "symmetry", "identity", "triangle")}
    for _ in range(count):
        u, v, w, z = (random_fuzzy(rng) for _ in range(4))
        k = random_scalar(rng)
        a, b = abs(random_scalar(rng)), abs(random_scalar(rng))
        if rng.integers(2):
            a, b = -a, -b
        d_uv = metric_D(u, v)
        worst["homogeneity"] = max(worst["homogeneity"], abs(metric_D(scalar_mul(k, u), scalar_mul(k, v)) - abs(k) * d_uv))
        worst["translation"] = max(worst["translation"], abs(metric_D(add(u, v), add(w, v)) - metric_D(u, w)))
        worst["subadditivity"] = max(
            worst["subadditivity"], metric_D(add(u, v), add(w, z)) - metric_D(u, w) - metric_D(v, z)
        )
        nu, nv = metric_D(u, zero), metric_D(v, zero)
        worst["norm_bounds"] = max(worst["norm_bounds"], abs(nu - nv) - d_uv, d_uv - nu - nv)
        worst["same_sign_distributivity"] = max(
            worst["same_sign_distributivity"], _exact(scalar_mul(a + b, u), add(scalar_mul(a, u), scalar_mul(b, u)))
        )
        worst["fuzzy_distributivity"] = max(
            worst["fuzzy_distributivity"], _exact(scalar_mul(k, add(u, v)), add(scalar_mul(k, u), scalar_mul(k, v)))
        )
        worst["associativity"] = max(
            worst["associativity"], _exact(scalar_mul(k, scalar_mul(a, u)), scalar_mul(k * a, u))
        )
        worst["symmetry"] = max(worst["symmetry"], abs(d_uv - metric_D(v, u)))
        worst["identity"] = max(worst["identity"], metric_D(u, u), _exact(add(u, zero), u))
        worst["triangle"] = max(worst["triangle"], metric_D(u, w) - d_uv - metric_D(v, w))
    exact = {"homogeneity", "translation", "same_sign_distributivity", "fuzzy_distributivity",
             "associativity", "symmetry", "identity"}
    checks = []
    for name, r in worst.items():
        bound = 0.0 if name in exact else 1e-9
        checks.append(Check(f"{name} over {count} random fuzzy numbers", r <= bound, max(r, 0.0)))
    d = mixed_sign_witness()
    checks.append(Check("mixed-sign non-distributivity witness", d == 2.0, abs(d - 2.0), f"D={d:g}"))
    return checks


# -- Cesaro / Abel ----------------------------------------------------------


def cesaro_abel() -> list[Check]:
    checks = []
    seq = builtin("cesaro_bound_witness")
    nks = [2 * k + 2 for k in range(50)]
    ratio = [seq.term(n, M).norm() / n for n in nks]
    ratio_exact = [(2 + math.sqrt(n)) / n for n in nks]
    sharp = [seq.term(n, M).norm() for n in nks]  # lambda_n / n = 1
    sharp_exact = [2 + math.sqrt(n) for n in nks]
    err = max(max(abs(a - b) for a, b in zip(ratio, ratio_exact)), max(abs(a - b) for a, b in zip(sharp, sharp_exact)))
    checks.append(_below("growth closed forms reproduced", err, 1e-9))
    decreasing = all(b < a for a, b in zip(ratio, ratio[1:]))
    checks.append(Check("growth ratio D(u_nk,0)/nk decreasing and < 0.15 at nk=100",
                        decreasing and ratio[-1] < 0.15, ratio[-1]))
    checks.append(Check("sharpness (lambda/nk) D(u_nk,0) > 10 at nk=100", sharp[-1] > 10, sharp[-1]))
    checks.append(Check("growth_check_cesaro passes on the witness", analysis.growth_check_cesaro(seq, 400, 1).passed, 0.0))

    sigma = cesaro_means(seq, 22, M)
    alpha = np.arange(M + 1) / M
    worst = 0.0
    for n in range(1, 23):
        c = n / ((n + 1) * math.sqrt(n)) if n >= 2 and n % 2 == 0 else 0.0
        worst = max(worst, np.abs(sigma[n].lo - (alpha + c)).max(), np.abs(sigma[n].hi - (2 - alpha + c)).max())
    checks.append(_below("witness Cesaro means closed form", worst, 1e-9))

    w = triangular(0, 1, 2, M)
    geo = FuzzySequence.scaled(w, lambda n: 2.0**-n, "geometric")
    P = cauchy_product(geo, [3.0**-n for n in range(61)], 60, M)
    checks.append(_below("mertens cauchy product N=60", metric_D(P[-1], scalar_mul(3.0, w)), 1e-6))

    mu = triangular(0, 1, 2, M)
    dists = [metric_D(abel_eval(seq, 1 - 2.0**-k, M=M)[0], mu) for k in (4, 7, 10)]
    ok = dists[0] > dists[1] > dists[2] and dists[2] < 0.02
    checks.append(Check("cesaro=>abel witness distances decreasing, k=10 below 0.02", ok, dists[2]))

    x = 0.999
    val, _ = abel_eval(builtin("abel_not_cesaro"), x, M=M)
    target = (1 - x) * x / (1 + x) ** 2 + 2 * (1 - x) / (2 - x)
    interval = from_alpha_cuts(np.zeros(M + 1), np.full(M + 1, 2.0))
    checks.append(_below("abel_not_cesaro abel closed form at x=0.999", abs(metric_D(val, interval) - target), 1e-6))
    rep = analysis.discrete_verdict("cesaro", cesaro_means(builtin("abel_not_cesaro"), 400, M), 1e-2)
    checks.append(Check("abel_not_cesaro cesaro verdict not_summable", rep.verdict == analysis.NOT_SUMMABLE,
                        dict(rep.diagnostics)["window_spread"]))
    return checks


# -- Euler / Borel ----------------------------------------------------------


def _lattice_sequence(rng, length, m=M):
    return FuzzySequence.from_terms([random_fuzzy(rng, m, bound=4.0) for _ in range(length)])


def euler_borel(seed: int = SEED, count: int = 5) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    m, n_max = 16, 25
    for p in (0.5, 1.0, 2.0):
        for q in (0.5, 1.0, 2.0):
            order = euler_composed_order(p, q)
            worst = 0.0
            for _ in range(count):
                seq = _lattice_sequence(rng, n_max + 1, m)
                inner = FuzzySequence.from_terms(euler_means(seq, p, n_max, m))
                twice = euler_means(inner, q, n_max, m)
                once = euler_means(seq, order, n_max, m)
                worst = max(worst, max(metric_D(a, b) for a, b in zip(twice, once)))
            checks.append(_below(f"euler_composition p={p:g} q={q:g} order={order:g}", worst, 1e-9))

    worst = max(abs(euler_weights(n, p).sum() - 1) for p in (0.5, 1, 2, 10) for n in range(0, 501, 7))
    checks.append(_below("euler weight rows sum to 1", worst, 1e-12))

    es = builtin("es_not_ep", {"p": 1, "s": 3})
    t3 = euler_means(es, 3, 40, M)
    alpha = np.arange(M + 1) / M
    worst = 0.0
    for n, t in enumerate(t3):
        lo = (-0.5) ** n + ((6 + alpha) / 8) ** n
        hi = (-0.5) ** n + 2 - alpha
        worst = max(worst, np.abs(t.lo - lo).max(), np.abs(t.hi - hi).max())
    checks.append(_below("es_not_ep E_3 means closed form n<=40", worst, 1e-9))
    nu = from_alpha_cuts(np.zeros(M + 1), 2 - alpha)
    dn = [metric_D(t3[n], nu) for n in (10, 20, 30, 40)]
    checks.append(Check("es_not_ep E_3 means approach [0, 2-alpha]", dn[0] > dn[1] > dn[2] > dn[3] and dn[3] < 1e-2, dn[3]))

    t1 = euler_means(es, 1, 30, M)
    worst = min(t1[n].norm() / 1.9**n for n in range(2, 31))
    checks.append(Check("es_not_ep E_1 means grow at least like 1.9^n for 2<=n<=30", worst >= 1, worst))

    dists = [metric_D(borel_eval(es, x, M=M)[0], nu) for x in (10, 20, 40)]
    checks.append(Check("es_not_ep borel distances to [0, 2-alpha] decreasing, x=40 below 0.05",
                        dists[0] > dists[1] > dists[2] and dists[2] < 0.05, dists[2]))

    checks.append(_below("euler-borel bridge identity m<=20", _bridge_residual(rng, m), 1e-9))

    w = triangular(0, 1, 2, M)
    geo = FuzzySequence.scaled(w, lambda n: 2.0**-n, "geometric")
    xs = [3.0**-v for v in range(31)]
    tail = weighted_tail_sum(geo, xs, 30, M)
    coeff = sum(2.0**-k * sum(xs[k:31]) for k in range(31))
    checks.append(_below("weighted tail sum n=30", metric_D(tail, scalar_mul(coeff, w)), 1e-8))

    bne = builtin("borel_not_ep")
    x = 0.5
    val, _ = borel_eval(bne, x, M=M)
    base = math.exp(-x) / (1 + x)
    exact = from_alpha_cuts(base + alpha, base + 2 / (1 + alpha))
    checks.append(_below("borel_not_ep borel closed form at x=0.5", metric_D(val, exact), 1e-9))
    flagged = [borel_eval(bne, x, M=4)[1].diverged for x in (1.0, 5.0, 40.0)]
    checks.append(Check("borel_not_ep borel series flagged divergent for x>=1", all(flagged), 0.0))

    checks.append(Check("growth_check_euler passes for es_not_ep at p=3",
                        analysis.growth_check_euler(es, 3, 200, 1).passed, 0.0))
    checks.append(Check("growth_check_euler fails for borel_not_ep at p=1",
                        not analysis.growth_check_euler(bne, 1, 200, 1).passed, 0.0))
    return checks


def _bridge_residual(rng, m=16, p=1.0, x=2.0, m_max=20) -> float:
    """Both sides of sum_n (p+1)^n t_n x^n/n! = sum_k x^k/k! u_k sum_(n>=k) (px)^(n-k)/(n-k)!."""
    seq = _lattice_sequence(rng, m_max + 1, m)
    t = euler_means(seq, p, m_max, m)
    worst = 0.0
    for top in range(m_max + 1):
        left_lo = sum((p + 1) ** n * x**n / math.factorial(n) * t[n].lo for n in range(top + 1))
        left_hi = sum((p + 1) ** n * x**n / math.factorial(n) * t[n].hi for n in range(top + 1))
        right_lo = np.zeros(m + 1)
        right_hi = np.zeros(m + 1)
        for k in range(top + 1):
            c = x**k / math.factorial(k) * sum((p * x) ** (n - k) / math.factorial(n - k) for n in range(k, top + 1))
            u = seq.term(k, m)
            right_lo += c * u.lo
            right_hi += c * u.hi
        worst = max(worst, np.abs(left_lo - right_lo).max(), np.abs(left_hi - right_hi).max())
    return worst


# -- Tauberian --------------------------------------------------------------


def tauberian_family(rng: np.random.Generator, count: int = 20):
    """Sequences ``u_n -> (a, b, c)`` whose perturbations decay like ``(n+1)^-q``, ``q >= 2``.

    Returns ``(sequence, limit_triple)`` pairs.
    """
    out = []
    for _ in range(count):
        a, b, c = sorted(float(v) for v in rng.uniform(-5, 5, size=3))
        s = float(rng.uniform(-1, 1))
        t = float(rng.uniform(0, 1))
        q = float(rng.choice([2.0, 2.5, 3.0]))
        sign = "(-1)^n*" if rng.integers(2) else ""
        shift = f"{s!r}*{sign}1/(n+1)^{q!r}"
        spread = f"{t!r}*(1-alpha)/(n+1)^{q!r}"
        src = (
            f"seq lower = {a!r} + {b - a!r}*alpha + {shift} - {spread};"
            f" upper = {c!r} - {c - b!r}*alpha + {shift} + {spread};"
        )
        out.append((from_seqdef(parse(src), "tauberian"), (a, b, c)))
    return out


def tauberian(seed: int = SEED, count: int = 20) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    family = tauberian_family(rng, count)
    m = 16
    worst_c = worst_e = 0.0
    cond_c = cond_e = True
    for seq, _ in family:
        cond_c &= analysis.tauberian_cesaro(seq, 400, m).passed
        cond_e &= analysis.tauberian_euler(seq, 400, m).passed
        raw = analysis.detect_limit(seq.terms(5000, m), 1e-3, 20)
        ces = analysis.detect_limit(cesaro_means(seq, 5000, m), 1e-3, 20)
        eul = analysis.detect_limit(euler_means(seq, 1, 100, m), 1e-3, 20)
        if raw is None or ces is None or eul is None:
            worst_c = worst_e = math.inf
            continue
        worst_c = max(worst_c, metric_D(raw, ces))
        worst_e = max(worst_e, metric_D(raw, eul))
    checks.append(Check(f"n D(u_n, u_n-1) -> 0 holds for all {count} sequences", cond_c, 0.0))
    checks.append(_below("cesaro limit equals ordinary limit under the tauberian condition", worst_c, 1e-3))
    checks.append(Check(f"sqrt(n) D(u_n-1, u_n) -> 0 holds for all {count} sequences", cond_e, 0.0))
    checks.append(_below("euler(1) limit equals ordinary limit under the tauberian condition", worst_e, 1e-3))

    w = triangular(0, 1, 2, m)
    series = FuzzySequence.scaled(w, lambda n: (n + 1.0) ** -3, "cubic")
    cond = analysis.tauberian_cesaro(series, 400, m, series=True).passed
    sums = partial_sums(series, 2000, m)
    total = analysis.detect_limit(sums, 1e-3, 20)
    means = analysis.detect_limit(cesaro_means(FuzzySequence.from_terms(sums), 2000, m), 1e-3, 20)
    gap = math.inf if total is None or means is None else metric_D(total, means)
    checks.append(Check("series variant: n D(u_n, 0) -> 0 and cesaro sum equals series sum", cond and gap < 1e-3, gap))
    cond = analysis.tauberian_euler(series, 400, m, series=True).passed
    e_sum = analysis.detect_limit(euler_means(FuzzySequence.from_terms(sums[:101]), 1, 100, m), 1e-3, 20)
    gap = math.inf if total is None or e_sum is None else metric_D(total, e_sum)
    checks.append(Check("series variant: sqrt(n) D(u_n, 0) -> 0 and euler sum equals series sum", cond and gap < 1e-3, gap))

    checks.append(Check("abel_not_cesaro fails the cesaro tauberian condition",
                        not analysis.tauberian_cesaro(builtin("abel_not_cesaro"), 200, m).passed, 0.0))
    checks.append(Check("es_not_ep fails the euler tauberian condition",
                        not analysis.tauberian_euler(builtin("es_not_ep"), 200, m).passed, 0.0))
    return checks


RUNNERS: dict[str, Callable[[], list[Check]]] = {
    "core": core,
    "cesaro-abel": cesaro_abel,
    "euler-borel": euler_borel,
    "tauberian": tauberian,
}


def run(suite: str) -> list[tuple[str, Check]]:
    names = SUITES if suite == "all" else (suite,)
    if any(name not in RUNNERS for name in names):
        raise KeyError(suite)
    return [(name, check) for name in names for check in RUNNERS[name]()]
