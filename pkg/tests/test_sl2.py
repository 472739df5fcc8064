import numpy as np
import pytest

from padiclab import sl2
from padiclab.errors import DomainError
from padiclab.padic import Qp
from padiclab.sl2 import RVec, SL2Elem

K = Qp(5, 20)


def vec(*xs):
    return RVec.from_ints(K, *xs)


def test_ad_u_examples():
    assert sl2.ad_u(K(1), vec(0, 0, 1)) == vec(1, -1, 1)
    assert sl2.ad_u(K(1), vec(1, 0, 0)) == vec(1, -2, 0)
    assert sl2.ad_u(K(0), vec(3, 7, 11)) == vec(3, 7, 11)


def test_ad_u_matches_conjugation(rng):
    for _ in range(50):
        r = K.random_integral(rng)
        w = RVec(*(K.random_integral(rng) for _ in range(3)))
        assert sl2.ad_u(r, w) == sl2.u_plus(r).ad(w)


def test_ad_diag_examples():
    lam = K(1) / 5
    img = sl2.ad_diag(lam, vec(0, 1, 0))
    assert img == RVec(K(0), lam * lam, K(0)) and img.norm() == 25.0
    assert sl2.ad_diag(K(1), vec(2, 3, 4)) == vec(2, 3, 4)
    assert sl2.ad_diag(lam, vec(1, 0, 0)) == vec(1, 0, 0)
    assert sl2.ad_diag(lam, vec(1, 2, 3)) == sl2.diag(lam).ad(vec(1, 2, 3))


def test_a_m_composition():
    # a_m u_r2 a_m u_r1 = a_2m u_(r1 + p^2m r2)
    r1, r2, m = K(3), K(7), 2
    am = sl2.a_elem(K, m)
    lhs = am * sl2.u_plus(r2) * am * sl2.u_plus(r1)
    assert lhs == sl2.a_elem(K, 2 * m) * sl2.u_plus(r1 + 5 ** (2 * m) * r2)


def test_level_membership_example():
    g = sl2.GElem.diagonal(SL2Elem.from_ints(K, 1, 25, 0, 1))
    assert sl2.level_membership(g, 2) and not sl2.level_membership(g, 3)
    e = sl2.group_op("identity", g)
    assert sl2.group_op("mul", g, sl2.group_op("inv", g)) == e


def test_gauss_examples():
    I = SL2Elem.identity(K)
    lo, mid, up = sl2.gauss_decompose(I, 1)
    assert lo == mid == up == I
    k = SL2Elem.from_ints(K, 1, 5, 5, 26)
    lo, mid, up = sl2.gauss_decompose(k, 1)
    assert lo == SL2Elem.from_ints(K, 1, 0, 5, 1) and mid == I and up == SL2Elem.from_ints(K, 1, 5, 0, 1)
    assert lo * mid * up == k
    with pytest.raises(DomainError):
        sl2.gauss_decompose(SL2Elem.from_ints(K, 1, 1, 0, 1), 1)


def test_random_level_is_in_level(rng):
    for n in (1, 2, 3):
        for _ in range(30):
            k = sl2.random_level(K, rng, n)
            assert k.in_level(n) and k.det() == K(1)


def test_exp_log_examples():
    assert sl2.exp_r(vec(0, 0, 0)) == SL2Elem.identity(K)
    assert sl2.exp_r(vec(0, 5, 0)) == SL2Elem.from_ints(K, 1, 5, 0, 1)
    with pytest.raises(DomainError):
        sl2.exp_r(vec(1, 0, 0))


def test_exp_log_round_trip(rng):
    for _ in range(100):
        w = RVec(*(K.random_integral(rng, 1) for _ in range(3)))
        g = sl2.exp_r(w)
        assert g.det() == K(1)
        assert sl2.log_r(g) == w


def test_exp_is_homomorphic_on_commuting_elements():
    w = vec(5, 25, 125)
    assert sl2.exp_r(w.scale(K(2))) == sl2.exp_r(w) * sl2.exp_r(w)


def test_bch_examples():
    w = vec(25, 50, 0)
    z = sl2.bch_product(w, w)
    assert all(e.is_zero() for e in z.entries())
    assert sl2.bch_product(vec(0, 25, 0), vec(0, 75, 0)) == vec(0, -50, 0)
    with pytest.raises(DomainError):
        sl2.bch_product(vec(5, 0, 0), vec(0, 0, 0))


def test_qh_membership_examples():
    I = SL2Elem.identity(K)
    assert sl2.qh_membership(I, 1, 2, 3)
    assert sl2.qh_membership(sl2.u_plus(K(5)), 1, 2, 1)       # |r| = eta
    assert not sl2.qh_membership(sl2.u_plus(K(1)), 1, 2, 1)   # |r| = p eta


def test_qh_closure(rng):
    for eta, beta, m in [(0, 1, 1), (1, 2, 2), (2, 2, 3)]:
        for _ in range(50):
            q1, q2 = sl2.random_qh(K, rng, eta, beta, m), sl2.random_qh(K, rng, eta, beta, m)
            assert sl2.qh_membership(q1 * q2, eta, beta, m)
            assert sl2.qh_membership(q1.inv(), eta, beta, m)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_containment_holds_with_lower_entry_at_level_beta_plus_2m(m):
    # conjugating u^-_s by a_m scales s by p^-2m, so |s| <= beta p^-2m keeps the product in K_H,beta
    rng = np.random.default_rng(m)
    Kc = Qp(5, 24)
    beta = 2
    for _ in range(100):
        q = sl2.random_qh(Kc, rng, beta, beta, 2 * m)
        k = sl2.random_level(Kc, rng, beta)
        r = Kc.random_integral(rng)
        assert sl2.conjugation_containment(q, k, m, r, beta).ok


def test_containment_can_fail_with_lower_entry_at_level_beta_plus_m():
    q = sl2.u_minus(K(5 ** 3))            # |s| = beta p^-m with beta = p^-2, m = 1
    rec = sl2.conjugation_containment(q, SL2Elem.identity(K), 1, K(0), 2)
    assert not rec.ok and rec.k_prime_valuation == 1
