import math

import numpy as np
import pytest

from fuzzsum import _hp
from fuzzsum.fuzzy_core import (
    GridMismatchError,
    InvalidFuzzyNumberError,
    InvalidInputError,
    crisp,
    triangular,
)
from fuzzsum.seqlang import parse
from fuzzsum.sequences import (
    BUILTINS,
    FuzzySequence,
    builtin,
    from_seqdef,
    log_norms,
    norm_of,
    witness_subsequence,
)

M = 8
ALPHA = np.arange(M + 1) / M


def test_unknown_builtin():
    with pytest.raises(InvalidInputError, match="unknown builtin"):
        builtin("nope")


def test_bad_parameters():
    with pytest.raises(InvalidInputError):
        builtin("abel_not_cesaro", {"x": 1})
    with pytest.raises(InvalidInputError):
        builtin("es_not_ep", {"p": 3, "s": 1})
    with pytest.raises(InvalidInputError):
        builtin("cesaro_bound_witness", {"step": 1})
    with pytest.raises(InvalidInputError):
        builtin("constant")


@pytest.mark.parametrize("name", BUILTINS)
def test_block_agrees_with_term(name):
    seq = builtin(name, {"value": 1} if name == "constant" else None)
    lo, hi, err = seq.block(0, 40, M)
    assert err is None
    for n in range(40):
        u = seq.term(n, M)
        assert u.lo.tolist() == lo[n].tolist() and u.hi.tolist() == hi[n].tolist()


@pytest.mark.parametrize("name", ["abel_not_cesaro", "cesaro_bound_witness", "es_not_ep", "borel_not_ep"])
def test_hp_agrees_with_float(name):
    seq = builtin(name)
    with _hp.precision(120):
        for n in range(0, 30, 3):
            lo, hi = seq.term_hp(n, M)
            u = seq.term(n, M)
            np.testing.assert_allclose(_hp.to_float(lo), u.lo, rtol=1e-15, atol=1e-15)
            np.testing.assert_allclose(_hp.to_float(hi), u.hi, rtol=1e-15, atol=1e-15)


class TestConstant:
    def test_number(self):
        seq = builtin("constant", {"value": 2.5})
        assert seq.term(7, M) == crisp(2.5, M)

    def test_triple(self):
        seq = builtin("constant", {"value": (0, 1, 2)})
        assert seq.term(3, M) == triangular(0, 1, 2, M)
        assert builtin("constant", {"a": 0, "b": 1, "c": 2}).term(0, M) == triangular(0, 1, 2, M)

    def test_fuzzy_value_fixes_grid(self):
        seq = builtin("constant", {"value": triangular(0, 1, 2, M)})
        with pytest.raises(GridMismatchError):
            seq.term(0, 4)


class TestFamilies:
    def test_abel_not_cesaro(self):
        seq = builtin("abel_not_cesaro")
        assert seq.term(0, M) == crisp(1, M)
        for n in range(1, 10):
            u = seq.term(n, M)
            base = (-1) ** n * n
            np.testing.assert_array_equal(u.lo, base + (ALPHA / 2) ** n)
            np.testing.assert_array_equal(u.hi, base + 2 - (ALPHA / 2) ** n)

    def test_cesaro_bound_witness(self):
        seq = builtin("cesaro_bound_witness")
        assert witness_subsequence(seq, 4) == [2, 4, 6, 8]
        for n in range(12):
            if n >= 2 and n % 2 == 0:
                c = math.sqrt(n)
            elif n >= 3 and n % 2 == 1:
                c = -math.sqrt(n - 1)
            else:
                c = 0.0
            u = seq.term(n, M)
            np.testing.assert_allclose(u.lo, ALPHA + c, atol=1e-15)
            np.testing.assert_allclose(u.hi, 2 - ALPHA + c, atol=1e-15)

    def test_cesaro_bound_witness_lambda(self):
        seq = builtin("cesaro_bound_witness", {"lam_power": 2, "first": 1, "step": 3})
        assert witness_subsequence(seq, 3) == [1, 4, 7]
        assert seq.term(4, M).lo[0] == pytest.approx(1.0)
        assert seq.term(5, M).lo[0] == pytest.approx(-1.0)
        custom = builtin("cesaro_bound_witness", {"lam": lambda n: 4.0})
        assert custom.term(6, M).lo[0] == pytest.approx(3.0)

    def test_es_not_ep(self):
        seq = builtin("es_not_ep", {"p": 1, "s": 3})
        assert seq.term(0, M).lo.tolist() == [2.0] * (M + 1)
        np.testing.assert_array_equal(seq.term(0, M).hi, 3 - ALPHA)
        for n in range(1, 8):
            u = seq.term(n, M)
            np.testing.assert_array_equal(u.lo, (-5.0) ** n + (ALPHA / 2) ** n)
            np.testing.assert_array_equal(u.hi, (-5.0) ** n + 2 - ALPHA)

    def test_borel_not_ep(self):
        seq = builtin("borel_not_ep")
        for n in range(8):
            u = seq.term(n, M)
            base = (-1) ** n * math.factorial(n)
            np.testing.assert_array_equal(u.lo, base + ALPHA)
            np.testing.assert_array_equal(u.hi, base + 2 / (1 + ALPHA))

    def test_borel_not_ep_overflows_to_hp(self):
        seq = builtin("borel_not_ep")
        with pytest.raises(InvalidFuzzyNumberError) as info:
            seq.term(200, M)
        assert info.value.nonfinite
        assert norm_of(seq, 170) == pytest.approx(float(math.factorial(170)), rel=1e-15)
        assert norm_of(seq, 200) == math.inf
        with _hp.precision(2000):
            assert int(seq.norm_hp(200)) == math.factorial(200) + 2


class TestGeneric:
    def test_from_terms(self):
        terms = [crisp(k, M) for k in range(3)]
        seq = FuzzySequence.from_terms(terms)
        assert seq.terms(2, M) == terms
        with pytest.raises(InvalidInputError, match="only 3 terms"):
            seq.term(3, M)
        with pytest.raises(GridMismatchError):
            seq.term(0, 4)
        with pytest.raises(InvalidInputError):
            FuzzySequence.from_terms([])

    def test_scaled(self):
        seq = FuzzySequence.scaled(lambda m: triangular(0, 1, 2, m), lambda n: 2.0**-n, "geo")
        assert seq.term(3, M) == triangular(0, 0.125, 0.25, M)

    def test_index_validation(self):
        seq = builtin("abel_not_cesaro")
        for bad in (-1, 1.5, True):
            with pytest.raises(InvalidInputError):
                seq.term(bad, M)

    def test_block_stops_at_bad_term(self):
        seq = from_seqdef(parse("seq lower = 0; upper = 5 - n;"))
        lo, hi, err = seq.block(0, 10, M)
        assert len(lo) == 6
        assert isinstance(err, InvalidFuzzyNumberError) and "n=6" in str(err)
        with pytest.raises(InvalidFuzzyNumberError, match="n=6"):
            seq.terms(9, M)

    def test_from_seqdef_start_shift(self):
        seq = from_seqdef(parse("seq lower = 1/n; upper = 1/n; start = 1;"))
        assert seq.term(0, M) == crisp(1, M)
        assert seq.term(3, M) == crisp(0.25, M)
        lo, _, _ = seq.block(0, 4, M)
        assert lo[:, 0].tolist() == [1, 0.5, 1 / 3, 0.25]

    def test_log_norms_beyond_float(self):
        seq = builtin("borel_not_ep")
        logs = log_norms(seq, 160, 260)
        exact = [math.log(math.factorial(n) + 2) for n in range(160, 260)]
        np.testing.assert_allclose(logs, exact, rtol=1e-14)

    def test_repr_hides_callables(self):
        assert "function" not in repr(builtin("abel_not_cesaro"))
