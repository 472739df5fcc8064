import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padiclab import margulis
from padiclab.errors import DomainError
from padiclab.fractal import PointSet
from padiclab.suites import random_fractal_set

vectors = st.tuples(*(st.integers(-30, 30),) * 3).filter(any)


def test_contraction_examples():
    assert margulis.contraction_integral((0, 1, 0), 1, 0.5, 5) == pytest.approx(0.2, rel=1e-12)
    # shells |r| = 1, p^-1, <= p^-2 with masses 4/5, 4/25, 1/25 and values p^-2a, 1, p^2a
    expected = 0.8 * 5 ** -1 + 4 / 25 + 5 / 25
    assert margulis.contraction_integral((0, 0, 1), 1, 0.5, 5) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.52, rel=1e-12)
    assert margulis.contraction_integral((1, 2, 3), 2, 1e-12, 5) == pytest.approx(1.0, rel=1e-9)


def test_distribution_masses_sum_to_one():
    for w in [(1, 0, 0), (0, 0, 1), (3, 5, 25), (25, 1, 125)]:
        for k in (1, 2, 3):
            assert sum(margulis.norm_distribution(w, k, 5).values()) == 1


@given(vectors, st.sampled_from([5, 7]))
@settings(max_examples=30, deadline=None)
def test_exact_integral_matches_enumeration(w, p):
    exact = margulis.contraction_integral(w, 1, 0.6, p)
    brute = margulis.contraction_integral_enumerate(w, 1, 0.6, p, max_depth=7)
    assert exact == pytest.approx(brute, rel=1e-9)


def test_homogeneity_in_w():
    w = (1, 3, 2)
    base = margulis.contraction_integral(w, 2, 0.5, 5)
    scaled = margulis.contraction_integral(tuple(Fraction(x, 5) for x in w), 2, 0.5, 5)
    assert scaled == pytest.approx(base * 5 ** -0.5, rel=1e-12)


def test_direction_class_count():
    for p, depth in [(5, 1), (5, 2), (7, 2)]:
        assert len(margulis.direction_classes(p, depth)) == p ** (2 * depth - 2) * (p * p + p + 1)


def test_m_alpha_example():
    # smallest m with 4 * 5^(-m/8) / (5 - sqrt 5) <= 1/5 is ceil(8 log_5(20 / (5 - sqrt 5))) = 10
    assert math.ceil(8 * math.log(20 / (5 - math.sqrt(5)), 5)) == 10
    assert margulis.compute_m_alpha(0.5, 4.0, 5) == 10


def test_m_alpha_monotone_in_alpha():
    ms = [margulis.compute_m_alpha(a, 4.0, 5) for a in (0.3, 0.5, 0.7, 0.9)]
    assert ms == sorted(ms)


def test_m_alpha_verifies_on_depth_one_grid():
    dirs = margulis.direction_classes(5, 1)
    c2 = margulis.measure_c2(5, 0.5, depth=1)
    m = margulis.compute_m_alpha(0.5, c2, 5)
    assert margulis.verify_m_alpha(m, 0.5, 5, dirs) == []


def test_walk_atoms():
    nu = margulis.WalkMeasure(5, 3, 1)
    zero = margulis.walk_convolve(nu, 0)
    assert len(zero.atoms) == 1 and zero.atoms[0].mass == 1
    one = margulis.walk_convolve(nu, 1)
    assert len(one.atoms) == 5 and all(a.mass == Fraction(1, 5) for a in one.atoms)
    with pytest.raises(DomainError):
        margulis.walk_convolve(nu, 9, budget=1000)
    mc = margulis.walk_convolve(nu, 4, samples=50, seed=3)
    assert mc.total_mass == 1 and mc.monte_carlo


def test_recursion_ell_zero_and_singleton():
    nu = margulis.WalkMeasure(5, 1, 3)
    cfg = margulis.TransverseConfig([(1, 2, 3)], 0.5)
    rep0 = margulis.margulis_recursion_check(cfg, nu, 0, diagnose=True)
    assert rep0.lhs == rep0.f_identity
    # iterated-walk oracle: average over the atoms of nu^(2) at residue depth 3
    rep = margulis.margulis_recursion_check(cfg, nu, 2, with_atoms=True, diagnose=True)
    assert rep.lhs == pytest.approx(margulis.contraction_integral((1, 2, 3), 2, 0.5, 5), rel=1e-12)
    assert rep.atom_lhs == pytest.approx(rep.lhs, rel=1e-9)


def test_recursion_random_fifty_vectors():
    rng = np.random.default_rng(0)
    vecs = set()
    while len(vecs) < 50:
        w = tuple(int(x) for x in rng.integers(-500, 500, size=3))
        if any(w):
            vecs.add(w)
    cfg = margulis.TransverseConfig(sorted(vecs), 0.5)
    c2 = margulis.measure_c2(5, 0.5, depth=1)
    m = margulis.compute_m_alpha(0.5, c2, 5)
    rep = margulis.margulis_recursion_check(cfg, margulis.WalkMeasure(5, m), 2, m_alpha=m)
    assert rep.ok and rep.lhs <= rep.bound * (1 + 1e-9)


def test_recursion_rejects_small_step():
    cfg = margulis.TransverseConfig([(1, 0, 0)], 0.5)
    with pytest.raises(DomainError):
        margulis.margulis_recursion_check(cfg, margulis.WalkMeasure(5, 2), 1, m_alpha=10)


def test_config_rejects_bad_sets():
    with pytest.raises(DomainError):
        margulis.TransverseConfig([(0, 0, 0)], 0.5)
    with pytest.raises(DomainError):
        margulis.TransverseConfig([(1, 0, 0), (1, 0, 0)], 0.5)


def test_energy_identity_examples():
    F = PointSet.from_points(5, 6, [(0, 0, 0), (25, 50, 0), (0, 125, 25)])
    e, model = margulis.energy_vs_margulis(F, (0, 0, 0), 0.5)
    assert e == model
    two = PointSet.from_points(5, 6, [(25, 0, 0), (0, 0, 125)])
    e, model = margulis.energy_vs_margulis(two, (25, 0, 0), 0.5)
    assert e == model == pytest.approx(25 ** 0.5, rel=1e-12)


def test_energy_identity_random():
    base = random_fractal_set(5, 4, 0.8, np.random.default_rng(1))
    F = PointSet(5, 3, 6, tuple(tuple(25 * c for c in w) for w in base.points))
    for w0 in F.points[:5]:
        e, model = margulis.energy_vs_margulis(F, w0, 0.7)
        assert abs(e - model) <= 1e-12 * e
