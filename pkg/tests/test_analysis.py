import math

import numpy as np
import pytest

from fuzzsum.analysis import (
    INCONCLUSIVE,
    NOT_SUMMABLE,
    SUMMABLE,
    SummabilityReport,
    classify,
    consistency_violations,
    detect_limit,
    discrete_verdict,
    growth_check_cesaro,
    growth_check_euler,
    power_series_verdict,
    tauberian_cesaro,
    tauberian_euler,
    trend_test,
)
from fuzzsum.fuzzy_core import InvalidInputError, crisp, triangular
from fuzzsum.sequences import FuzzySequence, builtin
from fuzzsum.transforms import TailBoundReport, TransformParams

M = 8


def by_method(reports):
    return {r.method: r for r in reports}


class TestPrimitives:
    def test_trend(self):
        assert trend_test([1 / (n + 1) ** 2 for n in range(100)])
        assert not trend_test([1.0] * 100)
        assert not trend_test([1.0] * 5)
        assert not trend_test([1.0, math.inf] + [0.0] * 50)
        assert not trend_test([1.0, math.nan] + [0.0] * 50)

    def test_detect_limit(self):
        vals = [crisp(1 + 2.0**-n, M) for n in range(40)]
        assert detect_limit(vals, 1e-3, 10) == vals[-1]
        assert detect_limit([crisp((-1) ** n, M) for n in range(40)], 1e-3, 10) is None
        with pytest.raises(InvalidInputError):
            detect_limit(vals, 1e-3, 1)
        with pytest.raises(InvalidInputError):
            detect_limit(vals[:5], 1e-3, 10)

    def test_report_invariants(self):
        with pytest.raises(ValueError):
            SummabilityReport("x", "maybe")
        with pytest.raises(ValueError):
            SummabilityReport("x", SUMMABLE, None, [("a", 1.0)])
        with pytest.raises(ValueError):
            SummabilityReport("x", NOT_SUMMABLE)
        SummabilityReport("x", INCONCLUSIVE)

    def test_discrete_verdicts(self):
        conv = [crisp(1 / (n + 1), M) for n in range(401)]
        assert discrete_verdict("m", conv, 1e-2).verdict == SUMMABLE
        osc = [crisp((-1) ** n, M) for n in range(401)]
        rep = discrete_verdict("m", osc, 1e-2)
        assert rep.verdict == NOT_SUMMABLE and rep.conditions["divergence_evidence"] == "proxy"
        growing = [crisp(n, M) for n in range(401)]
        rep = discrete_verdict("m", growing, 1e-2)
        assert rep.verdict == NOT_SUMMABLE
        assert dict(rep.diagnostics)["norm_at_n=400"] == 400
        # a wobble between tol and 10 tol that neither settles nor grows
        wobble = [crisp(0.03 * (-1) ** n, M) for n in range(50)]
        assert discrete_verdict("m", wobble, 1e-2).verdict == INCONCLUSIVE


def _rep(**kw):
    base = dict(terms_used=10, last_term_norm=0.0, cap_hit=False, converged=True)
    base.update(kw)
    return TailBoundReport(**base)


class TestPowerSeriesVerdict:
    def test_summable_walks_back_from_noisy_end(self):
        vals = [crisp(v, M) for v in (1.5, 1.2, 1.1, 1.05, 1.04, 1.5)]
        res = [(x, v, _rep()) for x, v in zip(range(6), vals)]
        rep = power_series_verdict("abel", res, 0.02)
        assert rep.verdict == SUMMABLE
        assert rep.limit_estimate == crisp(1.04, M)
        assert rep.conditions["estimate_at_x"] == 4

    def test_divergence_is_reported(self):
        res = [(1.0, None, _rep(converged=False, diverged=True)), (2.0, crisp(0, M), _rep())]
        rep = power_series_verdict("borel", res, 0.01)
        assert rep.verdict == NOT_SUMMABLE and rep.limit_estimate is None
        assert ("series_diverges@x=1", 1.0) in rep.diagnostics
        assert rep.conditions["series_diverges_at"] == "1"

    def test_cap_is_inconclusive(self):
        res = [(0.5, crisp(0, M), _rep()), (0.9, crisp(0, M), _rep(cap_hit=True, converged=False))]
        rep = power_series_verdict("abel", res, 0.01)
        assert rep.verdict == INCONCLUSIVE and rep.conditions["cap_hit_at"] == "0.9"

    def test_large_residuals_not_summable(self):
        vals = [crisp(v, M) for v in (0, 1, 3, 6)]
        rep = power_series_verdict("abel", [(x, v, _rep()) for x, v in enumerate(vals)], 0.01)
        assert rep.verdict == NOT_SUMMABLE


class TestGrowthAndTauberian:
    def test_growth_cesaro(self):
        assert growth_check_cesaro(builtin("cesaro_bound_witness"), 400, 1).passed
        assert not growth_check_cesaro(builtin("abel_not_cesaro"), 400, 1).passed

    def test_growth_euler_closed_form(self):
        seq = builtin("es_not_ep", {"p": 1, "s": 3})
        trend = growth_check_euler(seq, 3, 50, 1)
        # D(u_n, 0) is 5^n + 2 for even n and 5^n for odd n, against 7^n
        expect = [(5.0**n + 2 * (n % 2 == 0)) / 7.0**n for n in range(1, 51)]
        np.testing.assert_allclose(trend.values[1:], expect, rtol=1e-12)
        assert trend.passed
        assert not growth_check_euler(seq, 1, 50, 1).passed

    def test_growth_euler_beyond_float(self):
        trend = growth_check_euler(builtin("borel_not_ep"), 1, 300, 1)
        assert all(math.isfinite(v) for v in trend.values[:160])
        assert not trend.passed

    def test_growth_rejects(self):
        with pytest.raises(InvalidInputError):
            growth_check_euler(builtin("abel_not_cesaro"), 0, 10)
        with pytest.raises(InvalidInputError):
            growth_check_cesaro(builtin("abel_not_cesaro"), 0)

    def test_tauberian(self):
        w = triangular(0, 1, 2, M)
        smooth = FuzzySequence.scaled(w, lambda n: 1 + 1 / (n + 1) ** 2, "smooth")
        assert tauberian_cesaro(smooth, 300, M).passed
        assert tauberian_euler(smooth, 300, M).passed
        assert not tauberian_cesaro(builtin("abel_not_cesaro"), 300, M).passed
        series = FuzzySequence.scaled(w, lambda n: 1 / (n + 1) ** 2, "series")
        assert tauberian_cesaro(series, 300, M, series=True).passed
        harmonic = FuzzySequence.scaled(w, lambda n: 1 / math.sqrt(n + 1), "slow")
        assert not tauberian_cesaro(harmonic, 300, M, series=True).passed


class TestClassify:
    def test_constant(self):
        reports = classify(builtin("constant", {"value": (0, 1, 2)}), M=M)
        assert {r.verdict for r in reports} == {SUMMABLE}
        for r in reports:
            assert r.limit_estimate.equals(triangular(0, 1, 2, M), 1e-9)
        assert consistency_violations(reports) == []

    def test_abel_not_cesaro(self):
        r = by_method(classify(builtin("abel_not_cesaro"), M=M))
        assert r["cesaro"].verdict == NOT_SUMMABLE
        assert r["abel"].verdict == SUMMABLE
        assert r["abel"].limit_estimate.hi[0] == pytest.approx(2, abs=0.01)
        assert r["cesaro"].conditions["tauberian_cesaro"] == "fail"

    def test_es_not_ep(self):
        reports = classify(builtin("es_not_ep", {"p": 1, "s": 3}), M=M)
        r = by_method(reports)
        assert r["euler(1)"].verdict == NOT_SUMMABLE
        assert r["euler(3)"].verdict == SUMMABLE
        assert r["borel"].verdict == SUMMABLE
        assert "profile" not in r["euler(3)"].conditions
        assert consistency_violations(reports) == []

    def test_borel_not_ep(self):
        r = by_method(classify(builtin("borel_not_ep"), M=2))
        assert r["euler(1)"].verdict == NOT_SUMMABLE
        assert r["euler(2)"].verdict == NOT_SUMMABLE
        borel = r["borel"]
        assert borel.verdict == NOT_SUMMABLE and borel.limit_estimate is None
        assert any(label.startswith("series_diverges@x=") for label, _ in borel.diagnostics)
        assert borel.conditions["profile"] == "mismatch"

    def test_orders_follow_params_and_profile(self):
        reports = classify(builtin("es_not_ep", {"p": 1, "s": 3}), TransformParams(p=2, euler_orders=(2,)), M=2)
        methods = [r.method for r in reports]
        assert methods == ["ordinary", "cesaro", "euler(1)", "euler(2)", "euler(3)", "abel", "borel"]

    def test_consistency_violations(self):
        bad = SummabilityReport("abel", INCONCLUSIVE, conditions={"inclusion:cesaro=>abel": "fail"})
        ok = SummabilityReport("borel", INCONCLUSIVE, conditions={"inclusion:euler(1)=>borel": "unresolved"})
        assert consistency_violations([bad, ok]) == ["abel: inclusion:cesaro=>abel"]
