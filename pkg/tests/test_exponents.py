from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given, strategies as st

from flmult.exponents import (
    Exponent,
    ExponentTriple,
    cond_base,
    cond_dprime,
    cond_dprime_dualized,
    cond_h,
    cond_prime,
    dual,
    h_functional,
    parse_rational,
    r_functional,
    reciprocal_lattice,
    triple_lattice,
)

F = Fraction
recips = st.fractions(min_value=0, max_value=1, max_denominator=60)
triples = st.builds(ExponentTriple.from_recips, recips, recips, recips)


def T(*q):
    return ExponentTriple.of(*q)


# --- parsing and construction ------------------------------------------------


@pytest.mark.parametrize(
    "text, value",
    [("3/2", F(3, 2)), ("0.3", F(3, 10)), (7, F(7)), (0.25, F(1, 4)), (" -1/4 ", F(-1, 4))],
)
def test_parse_rational(text, value):
    assert parse_rational(text) == value


@pytest.mark.parametrize("bad", ["3/0", "abc", ""])
def test_parse_rational_rejects_garbage(bad):
    with pytest.raises(ValueError):
        parse_rational(bad)


def test_parse_rational_rejects_bool_and_none():
    with pytest.raises(TypeError):
        parse_rational(True)
    with pytest.raises(TypeError):
        parse_rational(None)


def test_exponent_of_inf_forms():
    for q in ("inf", "Infinity", "∞", float("inf")):
        assert Exponent.of(q).is_inf
    assert Exponent.of("inf").recip == 0
    assert str(Exponent.of("inf")) == "inf"
    assert str(Exponent.of("4/3")) == "4/3"


def test_exponent_range_checked():
    with pytest.raises(ValueError):
        Exponent.of("1/2")
    with pytest.raises(ValueError):
        Exponent(F(3, 2))
    with pytest.raises(ValueError):
        Exponent(F(-1, 5))


def test_exponent_value():
    assert Exponent.of(4).value == 4
    assert Exponent.of("inf").value == float("inf")
    assert Exponent.of(2).as_float() == 2.0


# --- dual ---------------------------------------------------------------------


@pytest.mark.parametrize("q, qd", [(2, "2"), (1, "inf"), (4, "4/3"), ("inf", "1")])
def test_dual_examples(q, qd):
    assert dual(Exponent.of(q)) == Exponent.of(qd)


@given(recips)
def test_dual_involution(x):
    e = Exponent(x)
    assert dual(dual(e)) == e
    assert e.dual().recip + e.recip == 1


# --- R and H --------------------------------------------------------------------


@pytest.mark.parametrize(
    "q, r", [((2, 2, 2), F(1, 2)), ((1, 1, 1), F(-1)), (("inf", "inf", "inf"), F(2))]
)
def test_r_functional_examples(q, r):
    assert r_functional(T(*q)) == r


@given(triples)
def test_r_functional_permutation_invariant(q):
    values = {r_functional(ExponentTriple(*p)) for p in permutations(q)}
    assert len(values) == 1
    assert isinstance(values.pop(), Fraction)


@pytest.mark.parametrize("q, h", [((2, 2, 2), F(1, 2)), ((1, 1, 2), F(1, 2)), ((4, 3, 2), F(1, 2)),
                                  ((1, "4/3", "3/2"), F(2, 3)), ((4, 3, "inf"), F(1, 3))])
def test_h_functional_examples(q, h):
    assert h_functional(T(*q)) == h


@given(triples)
def test_h_functional_branches(q):
    x = q.recips
    h = h_functional(q)
    if all(xj >= F(1, 2) for xj in x):
        assert h == min(x)
    elif all(xj <= F(1, 2) for xj in x):
        assert h == max(x)
    else:
        assert h == F(1, 2)


# --- conditions ----------------------------------------------------------------------


@pytest.mark.parametrize("q, ok", [((2, 2, 2), True), ((1, 2, 2), True), ((4, 4, 4), False)])
def test_cond_base_examples(q, ok):
    assert cond_base(T(*q)) is ok


@pytest.mark.parametrize("q, ok", [((2, 2, 2), True), (("4/3", 4, 4), False), ((1, 1, 1), False)])
def test_cond_prime_examples(q, ok):
    assert cond_prime(T(*q)) is ok


@pytest.mark.parametrize("q, ok", [((2, 2, 2), True), (("inf", 1, 2), False), ((1, 2, 2), True)])
def test_cond_dprime_examples(q, ok):
    assert cond_dprime(T(*q)) is ok


def test_cond_dprime_dualized_examples():
    assert cond_dprime_dualized(T(2, 2, 2), 1)
    assert cond_dprime_dualized(T(1, 2, 2), 2) == cond_dprime(T(2, 2, 1))
    assert not cond_dprime_dualized(T(4, 4, 1), 0)
    with pytest.raises(ValueError):
        cond_dprime_dualized(T(2, 2, 2), 3)


def test_swapped():
    q = T(1, 2, "inf")
    assert q.swapped(2) == T("inf", 2, 1)
    assert q.swapped(0) == q


@given(triples)
def test_cond_h_implies_cond_base(q):
    # H <= 1/2 unless every 1/q_j >= 1/2, and then R <= 1/2 anyway
    if cond_h(q):
        assert cond_base(q)


def test_lattice_shapes():
    assert reciprocal_lattice(F(1, 4)) == [F(0), F(1, 4), F(1, 2), F(3, 4), F(1)]
    assert len(list(triple_lattice(F(1, 20)))) == 21**3
    with pytest.raises(ValueError):
        reciprocal_lattice(F(2, 7))


def test_lattice_is_lexicographic():
    seq = [q.recips for q in triple_lattice(F(1, 3))]
    assert seq == sorted(seq)


def test_base_and_prime_agree_on_lattice():
    mismatches = [q for q in triple_lattice(F(1, 20)) if cond_base(q) != cond_prime(q)]
    assert mismatches == []


def test_prime_reduces_to_base_analytically():
    # min(1/q_j) > 1/2 forces R = 2 - sum < 1/2, so the larger bound never matters
    for q in triple_lattice(F(1, 12)):
        if min(q.recips) > F(1, 2):
            assert r_functional(q) < F(1, 2)
