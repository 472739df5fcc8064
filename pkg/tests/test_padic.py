import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padiclab.padic import INF, PAdicScalar, Qp, ZpGrid, arith, check_prime, haar_integrate, lift_table, padic_norm, vp

P = 5
rationals = st.fractions(max_denominator=10**6).filter(lambda x: x != 0)


def test_division_unit_matches_modular_inverse():
    K = Qp(5, 3)
    x = arith(K(1), K(2), "div")
    assert x.valuation == 0 and x.unit == 63 and (2 * 63) % 125 == 1


def test_add_p_p():
    K = Qp(5, 10)
    x = arith(K(5), K(5), "add")
    assert (x.valuation, x.unit % 5) == (1, 2)


def test_sub_self_is_zero_at_precision():
    K = Qp(5, 6)
    x = K(Fraction(7, 3))
    z = arith(x, x, "sub")
    assert z.is_zero() and z.valuation >= 6


@pytest.mark.parametrize("value, expected", [(5, 0.2), (6, 1.0), (0, 0.0)])
def test_norm_examples(value, expected):
    assert padic_norm(Qp(5)(value)) == expected


def test_vp_zero_is_infinite():
    assert vp(0, 5) == INF and vp(250, 5) == 3


def test_prime_restriction():
    with pytest.raises(ValueError):
        check_prime(3)
    with pytest.raises(ValueError):
        Qp(2)


def test_haar_examples():
    assert haar_integrate(lambda s: 1.0, 5, 2) == 1.0
    assert haar_integrate(lambda s: 1.0 if s % 5 == 0 else 0.0, 5, 2) == pytest.approx(0.2, rel=1e-12)
    norm = lambda s: 5.0 ** -3 if s == 0 else 5.0 ** -vp(s, 5)
    assert haar_integrate(norm, 5, 3) == pytest.approx(0.833344, rel=1e-9)


def test_haar_table_forms_and_errors():
    table = [float(s) for s in range(25)]
    assert haar_integrate(table, 5, 2) == haar_integrate(dict(enumerate(table)), 5, 2) == 12.0
    assert haar_integrate(lift_table(table, 5, 2), 5, 3) == 12.0
    with pytest.raises(ValueError):
        haar_integrate([], 5, 2)
    with pytest.raises(ValueError):
        haar_integrate(lambda s: s % 25, 5, 1, check_refinement=True)


def test_grid():
    g = ZpGrid(5, 2)
    assert len(g) == 25 and g.mass == 0.04 and g.children(3) == [3, 28, 53, 78, 103]


def test_indeterminate_and_immutability():
    z = PAdicScalar.indeterminate(5, 4)
    assert z.is_zero() and not z.is_exact_zero
    with pytest.raises(AttributeError):
        z.unit = 1


@given(rationals, rationals)
@settings(max_examples=200, deadline=None)
def test_field_identities(a, b):
    K = Qp(P, 30)
    x, y = K(a), K(b)
    assert (x + y) - y == x
    assert (x * y) / y == x
    assert (x * y).valuation == x.valuation + y.valuation


@given(rationals)
@settings(max_examples=200, deadline=None)
def test_round_trip_residues(a):
    K = Qp(P, 12)
    x = K(a)
    assert x.valuation == vp(a.numerator, P) - vp(a.denominator, P)
    assert math.isclose(x.norm(), float(P) ** -x.valuation)
    back = x.to_fraction() - a
    assert back == 0 or vp(back.numerator, P) - vp(back.denominator, P) >= x.abs_prec
