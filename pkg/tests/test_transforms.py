import math
from fractions import Fraction

import numpy as np
import pytest

from fuzzsum.fuzzy_core import (
    InvalidFuzzyNumberError,
    InvalidInputError,
    crisp,
    from_alpha_cuts,
    metric_D,
    scalar_mul,
    triangular,
)
from fuzzsum.seqlang import parse
from fuzzsum.sequences import FuzzySequence, builtin, from_seqdef
from fuzzsum.transforms import (
    TransformParams,
    _result,
    abel_eval,
    borel_eval,
    cauchy_product,
    cesaro_means,
    euler_composed_order,
    euler_means,
    euler_weights,
    partial_sums,
    weighted_tail_sum,
    zero,
)

M = 8
ALPHA = np.arange(M + 1) / M


def lattice_sequence(seed, length, m=M):
    """Terms with endpoints on the 1/8 lattice."""
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(length):
        c = int(rng.integers(-40, 40))
        left = np.sort(rng.integers(0, 9, m + 1))[::-1]
        right = np.sort(rng.integers(0, 9, m + 1))[::-1]
        terms.append(from_alpha_cuts((c - left) / 8, (c + right) / 8))
    return FuzzySequence.from_terms(terms)


def exact(u):
    return [Fraction(x) for x in u.lo], [Fraction(x) for x in u.hi]


def exact_weight(n, k, p):
    p = Fraction(p)
    return math.comb(n, k) * p ** (n - k) / (p + 1) ** n


def geometric(r, m=M):
    w = triangular(0, 1, 2, m)
    return FuzzySequence.scaled(w, lambda n: r**n, f"geometric {r}"), w


class TestParams:
    def test_defaults(self):
        p = TransformParams()
        assert p.orders() == (1.0, 2.0, 5.0)
        assert TransformParams(p=2, euler_orders=(3, 2)).orders() == (2.0, 3.0)

    @pytest.mark.parametrize(
        "kw",
        [
            {"p": 0},
            {"trunc_tol": 0},
            {"max_terms": 0},
            {"abel_grid": (0.5, 1.0)},
            {"abel_grid": (0.9, 0.5)},
            {"borel_grid": (-1.0,)},
            {"borel_grid": (math.inf,)},
            {"euler_orders": (1, -2)},
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(InvalidInputError):
            TransformParams(**kw)


class TestDiscrete:
    def test_partial_sums_and_means_exact(self):
        seq = lattice_sequence(1, 12)
        s = partial_sums(seq, 11, M)
        c = cesaro_means(seq, 11, M)
        run_lo = [Fraction(0)] * (M + 1)
        run_hi = [Fraction(0)] * (M + 1)
        for n in range(12):
            lo, hi = exact(seq.term(n, M))
            run_lo = [a + b for a, b in zip(run_lo, lo)]
            run_hi = [a + b for a, b in zip(run_hi, hi)]
            assert exact(s[n]) == (run_lo, run_hi)
            np.testing.assert_allclose(c[n].lo, [float(v / (n + 1)) for v in run_lo], rtol=1e-15)
            np.testing.assert_allclose(c[n].hi, [float(v / (n + 1)) for v in run_hi], rtol=1e-15)

    def test_length_checks(self):
        seq = lattice_sequence(1, 3)
        with pytest.raises(InvalidInputError):
            partial_sums(seq, 5, M)
        with pytest.raises(InvalidInputError):
            cesaro_means(seq, -1, M)

    @pytest.mark.parametrize("p", [0.5, 1, 2, 3])
    def test_euler_weights(self, p):
        for n in (0, 1, 5, 17, 40):
            w = euler_weights(n, p)
            expect = [float(exact_weight(n, k, p)) for k in range(n + 1)]
            np.testing.assert_allclose(w, expect, rtol=1e-12)

    def test_euler_weights_underflow_path(self):
        w = euler_weights(3000, 0.5)
        assert abs(w.sum() - 1) < 1e-12
        mode = int(np.argmax(w))
        assert abs(mode - 2000) <= 1  # peak of Binomial(n, 1/(1+p))

    def test_euler_weights_reject(self):
        with pytest.raises(InvalidInputError):
            euler_weights(3, 0)

    @pytest.mark.parametrize("p", [0.5, 1, 2])
    def test_euler_means_match_fractions(self, p):
        seq = lattice_sequence(2, 10)
        t = euler_means(seq, p, 9, M)
        for n in range(10):
            lo = [sum(exact_weight(n, k, p) * exact(seq.term(k, M))[0][j] for k in range(n + 1)) for j in range(M + 1)]
            np.testing.assert_allclose(t[n].lo, [float(v) for v in lo], rtol=1e-13, atol=1e-13)

    def test_euler_of_constant(self):
        seq = builtin("constant", {"value": (0, 1, 2)})
        for t in euler_means(seq, 2, 30, M):
            assert metric_D(t, triangular(0, 1, 2, M)) < 1e-13

    def test_euler_composition(self):
        seq = lattice_sequence(3, 16)
        p, q = 0.5, 2.0
        inner = FuzzySequence.from_terms(euler_means(seq, p, 15, M))
        twice = euler_means(inner, q, 15, M)
        once = euler_means(seq, euler_composed_order(p, q), 15, M)
        assert max(metric_D(a, b) for a, b in zip(twice, once)) < 1e-9
        assert euler_composed_order(1, 1) == 3

    def test_euler_extended_precision(self):
        # terms of size 5^n cancel down to O(1) means; float alone loses them
        seq = builtin("es_not_ep", {"p": 1, "s": 3})
        t = euler_means(seq, 3, 60, M)
        n = 60
        np.testing.assert_allclose(t[n].lo, 0.5**n + ((6 + ALPHA) / 8) ** n, atol=1e-12)
        np.testing.assert_allclose(t[n].hi, 0.5**n + 2 - ALPHA, atol=1e-12)

    def test_euler_beyond_float_range(self):
        seq = builtin("borel_not_ep")
        t = euler_means(seq, 1, 190, 2)
        n = 190
        lo = sum(Fraction(math.comb(n, k) * (-1) ** k * math.factorial(k), 2**n) for k in range(n + 1))
        assert t[n].lo[0] == pytest.approx(float(lo), rel=1e-12)

    def test_euler_rejects(self):
        seq = lattice_sequence(1, 3)
        for bad in (0, -1, math.nan, "x"):
            with pytest.raises(InvalidInputError):
                euler_means(seq, bad, 2, M)


class TestPowerSeries:
    def test_abel_geometric(self):
        seq, w = geometric(0.5)
        for x in (0.5, 0.9, 0.99):
            v, rep = abel_eval(seq, x, M=M)
            assert rep.converged and not rep.cap_hit and not rep.diverged
            assert metric_D(v, scalar_mul((1 - x) / (1 - 0.5 * x), w)) < 1e-12

    def test_abel_constant(self):
        seq = builtin("constant", {"value": (0, 1, 2)})
        v, _ = abel_eval(seq, 0.999, M=M)
        assert metric_D(v, triangular(0, 1, 2, M)) < 1e-9

    def test_abel_not_cesaro_closed_form(self):
        x = 0.999
        v, _ = abel_eval(builtin("abel_not_cesaro"), x, M=M)
        interval = from_alpha_cuts(np.zeros(M + 1), np.full(M + 1, 2.0))
        closed = (1 - x) * x / (1 + x) ** 2 + 2 * (1 - x) / (2 - x)
        assert abs(metric_D(v, interval) - closed) < 1e-9

    def test_abel_divergence_withheld(self):
        seq, _ = geometric(2.0)
        v, rep = abel_eval(seq, 0.75, M=M)
        assert v is None and rep.diverged and not rep.converged
        assert "diverges" in rep.warning

    def test_abel_cap(self):
        seq = builtin("constant", {"value": 1})
        v, rep = abel_eval(seq, 0.999, TransformParams(max_terms=100), M)
        assert rep.cap_hit and rep.terms_used == 100 and "max_terms" in rep.warning
        assert v is not None

    def test_abel_rejects(self):
        seq = builtin("constant", {"value": 1})
        for x in (0, 1, 1.5):
            with pytest.raises(InvalidInputError):
                abel_eval(seq, x)

    def test_borel_geometric(self):
        seq, w = geometric(0.5)
        for x in (1.0, 10.0, 40.0):
            v, rep = borel_eval(seq, x, M=M)
            assert rep.converged
            assert metric_D(v, scalar_mul(math.exp(-0.5 * x), w)) < 1e-12

    def test_borel_large_x_does_not_stop_early(self):
        seq = builtin("constant", {"value": (0, 1, 2)})
        v, rep = borel_eval(seq, 200.0, M=M)
        assert rep.terms_used > 200
        assert metric_D(v, triangular(0, 1, 2, M)) < 1e-9

    def test_borel_cancellation_uses_extended_precision(self):
        seq = builtin("es_not_ep", {"p": 1, "s": 3})
        v, rep = borel_eval(seq, 10.0, M=M)
        assert rep.precision_bits > 53
        # e^-x sum x^n/n! (-5)^n = e^-6x
        x = 10.0
        lo = np.exp(-6 * x) + np.exp(-x * (1 - ALPHA / 2))
        hi = np.exp(-6 * x) + 2 - ALPHA
        np.testing.assert_allclose(v.lo, lo, atol=1e-12)
        np.testing.assert_allclose(v.hi, hi, atol=1e-12)

    def test_borel_divergence_withheld(self):
        v, rep = borel_eval(builtin("borel_not_ep"), 5.0, M=2)
        assert v is None and rep.diverged

    def test_borel_rejects(self):
        with pytest.raises(InvalidInputError):
            borel_eval(builtin("constant", {"value": 1}), 0.0)

    def test_bad_term_propagates(self):
        seq = from_seqdef(parse("seq lower = 0; upper = 5 - n;"))
        with pytest.raises(InvalidFuzzyNumberError):
            abel_eval(seq, 0.5, M=M)


class TestProducts:
    def test_mertens_geometric(self):
        seq, w = geometric(0.5)
        P = cauchy_product(seq, [3.0**-n for n in range(61)], 60, M)
        assert metric_D(P[-1], scalar_mul(3.0, w)) < 1e-12

    def test_cauchy_product_direct(self):
        seq = lattice_sequence(4, 8)
        xs = [0.5, 0.25, 1.0, 0.0, 2.0, 0.125, 1.0, 0.5]
        P = cauchy_product(seq, xs, 7, M)
        for m in range(8):
            lo = sum(
                Fraction(xs[n - k]) * exact(seq.term(k, M))[0][0] for n in range(m + 1) for k in range(n + 1)
            )
            assert Fraction(P[m].lo[0]) == lo

    def test_weighted_tail_sum(self):
        seq = lattice_sequence(5, 6)
        xs = [1.0, 0.5, 0.25, 2.0, 0.0, 1.0]
        got = weighted_tail_sum(seq, xs, 5, M)
        hi = sum(Fraction(sum(xs[k:6])) * exact(seq.term(k, M))[1][M] for k in range(6))
        assert Fraction(got.hi[M]) == hi

    def test_rejects_negative_weights(self):
        seq = lattice_sequence(5, 4)
        with pytest.raises(InvalidInputError, match="nonnegative"):
            cauchy_product(seq, [1.0, -1.0, 0.0, 0.0], 3, M)
        with pytest.raises(InvalidInputError, match="at least"):
            weighted_tail_sum(seq, [1.0], 3, M)


class TestResultRepair:
    def test_flattens_rounding_glitch(self):
        lo = np.array([0.0, 0.5, 0.5 - 1e-16, 1.0])
        hi = np.array([2.0, 1.5, 1.5 + 1e-16, 1.0])
        u = _result(lo, hi)
        assert np.all(np.diff(u.lo) >= 0) and np.all(np.diff(u.hi) <= 0)

    def test_real_violation_raises(self):
        with pytest.raises(InvalidFuzzyNumberError):
            _result(np.array([0.0, 0.5, 0.4, 1.0]), np.array([2.0, 1.5, 1.5, 1.0]))

    def test_zero(self):
        assert zero(4) == crisp(0, 4)
