import math

import numpy as np
import pytest

from padiclab import sobolev
from padiclab.errors import InequalityViolation
from padiclab.sobolev import FiniteQuotient, QuotientFunction


@pytest.fixture(scope="module")
def G():
    return FiniteQuotient(5, 2)


def const(G, c):
    return QuotientFunction(G, np.full(G.size, c))


def test_group_sizes(G):
    assert G.size == 15000 == sobolev.sl2_order(5, 2)
    assert [G.n_cosets(m) for m in range(3)] == [1, 120, 15000]
    assert G.kernel_size(1) == 125


def test_avg_examples(G, rng):
    f = G.random_function(rng)
    c = const(G, 2.5)
    assert np.allclose(sobolev.avg_project(c, 1).values, 2.5, rtol=0, atol=1e-15)
    assert np.allclose(sobolev.avg_project(f, 0).values, f.values.mean(), rtol=0, atol=1e-12)
    delta = np.zeros(G.size)
    e = G.index((1, 0, 0, 1))
    delta[e] = 1.0
    av = sobolev.avg_project(QuotientFunction(G, delta), 1).values
    coset = G.labels[1] == G.labels[1][e]
    assert np.all(av[coset] == 1 / 125) and np.all(av[~coset] == 0) and coset.sum() == 125


def test_pr_examples(G, rng):
    c = const(G, -1.5)
    assert np.all(sobolev.pr_project(c, 0).values == -1.5)
    assert np.all(sobolev.pr_project(c, 1).values == 0) and np.all(sobolev.pr_project(c, 2).values == 0)
    inv1 = sobolev.avg_project(G.random_function(rng), 1)
    assert np.max(np.abs(sobolev.pr_project(inv1, 2).values)) <= 1e-12


def test_reconstruction_and_orthogonality(G, rng):
    f = G.random_function(rng)
    prs = [sobolev.pr_project(f, m) for m in range(3)]
    assert np.max(np.abs(sum(x.values for x in prs) - f.values)) <= 1e-12
    for i in range(3):
        for j in range(i):
            assert abs(prs[i].inner(prs[j])) <= 1e-12


def test_norm_examples(G, rng):
    assert sobolev.sobolev_norm(const(G, -3.0), 5) == pytest.approx(3.0, rel=1e-12)
    f = G.random_function(rng)
    assert sobolev.sobolev_norm(f * -2.0, 5) == pytest.approx(2 * sobolev.sobolev_norm(f, 5), rel=1e-12)
    assert sobolev.sobolev_norm(f, 0) == pytest.approx(f.l2(), rel=1e-12)


def test_constants_values(G):
    c = sobolev.derived_constants(G, 5.0)
    assert c.C1 == pytest.approx(math.sqrt(1 + 120 * 5.0**-5 + 15000 * 5.0**-10), rel=1e-12)
    assert c.C4 == pytest.approx(2 * c.C1 / math.sqrt(1 - 5.0**-5), rel=1e-12)


def test_translation_by_deep_element_is_trivial(G, rng):
    f = G.random_function(rng)
    e = G.index((1, 0, 0, 1))
    assert np.array_equal(f.translate(e).values, f.values)
    rep = sobolev.verify_properties(f, f, e, 5.0, 2)
    assert rep.s3[0] == 0 and rep.ok


def test_translation_is_a_group_action(G, rng):
    f = G.random_function(rng)
    g, h = (int(x) for x in rng.integers(G.size, size=2))
    a = np.array([int(x) for x in G.elements[g]]).reshape(2, 2)
    b = np.array([int(x) for x in G.elements[h]]).reshape(2, 2)
    gh = G.index(tuple((a @ b % 25).ravel()))
    assert np.array_equal(f.translate(h).translate(g).values, f.translate(gh).values)


def test_properties_random(G, rng):
    levels = [G.level_elements(r) for r in range(3)]
    for i in range(30):
        r = i % 3
        g = int(levels[r][rng.integers(len(levels[r]))])
        assert sobolev.verify_properties(G.random_function(rng), G.random_function(rng), g, 5.0, r).ok


def test_constant_function_s1(G):
    rep = sobolev.verify_properties(const(G, 4.0), const(G, 1.0), 0, 5.0, 0)
    assert rep.s1[0] == 4.0 and rep.s1[2]


def test_small_d_is_not_enforced(G, rng):
    f = G.random_function(rng)
    rep = sobolev.verify_properties(f, f, 0, 1.0, 0, raise_on_fail=True)
    assert not rep.enforced


def test_wrong_level_rejected(G):
    with pytest.raises(ValueError):
        sobolev.verify_properties(const(G, 1.0), const(G, 1.0), G.index((1, 1, 0, 1)), 5.0, 1)


def test_s2_violation_is_reported(G, rng, monkeypatch):
    f = G.random_function(rng)
    monkeypatch.setattr(QuotientFunction, "translate", lambda self, g: self * 2.0)
    with pytest.raises(InequalityViolation):
        sobolev.verify_properties(f, f, 0, 5.0, 0)


def test_csv_round_trip(G, rng):
    f = G.random_function(rng)
    assert np.array_equal(QuotientFunction.from_csv(G, f.to_csv()).values, f.values)
