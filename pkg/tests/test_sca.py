import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavsfl import sca
from uavsfl.physics import Allocation
from uavsfl.scenario import SystemParams

pos = st.floats(min_value=1e-3, max_value=1e3)


def test_lemma_tight_at_expansion():
    x, y, tau = 0.3, 2.0, 5.0
    assert sca.lemma1_rhs(x, y, tau, x, y, tau) == pytest.approx(tau * np.log1p(1 / (x * y)), rel=1e-14)


def test_lemma_hand_example():
    rhs = sca.lemma1_rhs(2.0, 3.0, 1.0, 1.0, 1.0, 1.0)
    assert rhs == pytest.approx(np.log(2) - 1.5, rel=1e-12)
    assert np.log(7 / 6) >= rhs


@given(pos, pos, pos, pos, pos, pos)
def test_lemma_lower_bound(x, y, tau, xb, yb, taub):
    lhs = tau * np.log1p(1 / (x * y))
    assert sca.lemma1_rhs(x, y, tau, xb, yb, taub) <= lhs * (1 + 1e-12) + 1e-12


def test_lemma_rejects_nonpositive():
    with pytest.raises(ValueError):
        sca.lemma1_rhs(0.0, 1, 1, 1, 1, 1)


def test_unit_snr_coefficients():
    # g0 chosen so that p g0 / (b u) = 1
    c = sca.coeffs_from_point(1.0, 2.0, 4.0, g0=2.0)
    assert c.lam[()] == pytest.approx(2 * np.log(2))
    assert c.mu[()] == pytest.approx(0.5)
    assert c.nu[()] == pytest.approx(np.log(2))
    assert sca.surrogate_rate(1.0, 2.0, 4.0, c) == pytest.approx(1.0, rel=1e-12)


def test_bandwidth_homogeneity():
    c1 = sca.coeffs_from_point(3.0, 1.5, 2.0, g0=7.0)
    c2 = sca.coeffs_from_point(6.0, 3.0, 2.0, g0=7.0)  # same SNR argument
    assert c2.lam == pytest.approx(2 * c1.lam)
    assert c2.mu == pytest.approx(2 * c1.mu)
    assert c2.nu == pytest.approx(4 * c1.nu)


@given(pos, pos, pos, st.floats(1e-3, 1e6))
def test_coefficients_positive(b, p, u, g0):
    c = sca.coeffs_from_point(b, p, u, g0)
    assert c.lam > 0 and c.mu > 0 and c.nu > 0


def test_make_coeffs_floors():
    prm = SystemParams()
    a = Allocation(1.0, [1e-9], [1e8], [10.0], [1.0], [0, 0], [1.0])
    c = sca.make_coeffs(a, prm)
    assert c.b_bar[0] == sca.B_FLOOR and c.p_bar[0] == sca.P_FLOOR and c.u_bar[0] == prm.u_floor
    with pytest.raises(ValueError):
        sca.make_coeffs(a.copy(p=[0.0]), prm)


def test_pi_examples():
    assert sca.pi_bound(2.0, 3.0, 2.0, 3.0) == 1.0
    assert sca.pi_bound(2.0, 6.0, 2.0, 3.0) == pytest.approx(2.25)


@given(pos, pos, pos, pos)
def test_pi_am_gm(p, u, pb, ub):
    ratio = (u / ub) * (pb / p)
    assert sca.pi_bound(p, u, pb, ub) >= ratio * (1 - 1e-12)


def test_surrogate_tight_at_expansion():
    c = sca.coeffs_from_point(8e5, 0.01, 900.0, g0=1e13)
    true = sca.true_rate_g0(8e5, 0.01, 900.0, 1e13)
    assert sca.surrogate_rate(8e5, 0.01, 900.0, c) == pytest.approx(true, rel=1e-9)


@settings(max_examples=200)
@given(st.floats(1e4, 1e7), st.floats(1e-6, 1e-2), st.floats(400, 5000),
       st.floats(0.05, 20), st.floats(0.05, 20), st.floats(0.5, 2))
def test_surrogate_minorant(bb, pb, ub, sb, sp, su):
    c = sca.coeffs_from_point(bb, pb, ub, g0=1e13)
    b, p, u = bb * sb, pb * sp, ub * su
    assert sca.surrogate_rate(b, p, u, c) <= sca.true_rate_g0(b, p, u, 1e13) * (1 + 1e-12)


def test_surrogate_concave_midpoints(rng):
    c = sca.coeffs_from_point(1e6, 1e-3, 900.0, g0=1e13)
    for _ in range(10_000):
        lo = np.array([1e5, 1e-5, 400.0])
        x1 = lo * np.exp(rng.uniform(0, 4, 3))
        x2 = lo * np.exp(rng.uniform(0, 4, 3))
        m = 0.5 * (x1 + x2)
        f = lambda x: -sca.surrogate_rate(*x, c)
        assert f(m) <= 0.5 * (f(x1) + f(x2)) + 1e-9 * abs(f(m))


def test_phi_examples():
    assert sca.phi_linearize(300.0, 300.0, 2.0, 0.72) == pytest.approx(2.0 * 0.72 / 300)
    assert sca.phi_linearize(600.0, 300.0, 2.0, 0.72) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        sca.phi_linearize(1.0, 0.0, 1.0, 1.0)


@given(st.floats(1e-3, 1e5), st.floats(1e-3, 1e5), st.floats(0, 10))
def test_phi_under_estimator(u, ub, P):
    assert sca.phi_linearize(u, ub, P, 0.72) <= P * 0.72 / u * (1 + 1e-12) + 1e-300


def test_feasibility_preserved(rng):
    # points meeting the surrogate rate and energy constraints meet the true ones
    g0, beta0, P = 1e13, 0.72, 2.0
    for _ in range(2000):
        bb, pb, ub = 10 ** rng.uniform(5, 7), 10 ** rng.uniform(-5, -2), rng.uniform(400, 3000)
        c = sca.coeffs_from_point(bb, pb, ub, g0, P, beta0)
        b, p, u = bb * rng.uniform(0.5, 2), pb * rng.uniform(0.5, 2), ub * rng.uniform(0.8, 1.2)
        t = rng.uniform(0.01, 5)
        s_bits = t * sca.surrogate_rate(b, p, u, c)
        if s_bits > 0:
            assert t * sca.true_rate_g0(b, p, u, g0) >= s_bits * (1 - 1e-12)
        E = sca.phi_linearize(u, ub, P, beta0)
        assert P * beta0 / u >= E * (1 - 1e-12)


def test_gradients_match_differences(rng):
    from uavsfl.oracle import finite_diff_check
    for _ in range(20):
        c = sca.coeffs_from_point(10 ** rng.uniform(5, 7), 10 ** rng.uniform(-5, -2), rng.uniform(400, 3000), 1e13)
        x = np.array([c.b_bar * rng.uniform(0.5, 2), c.p_bar * rng.uniform(0.5, 2), c.u_bar * rng.uniform(0.8, 1.2)])
        err = finite_diff_check(lambda z: float(sca.surrogate_rate(*z, c)),
                                lambda z: np.array([float(g) for g in sca.surrogate_rate_grad(*z, c)]), x, 1e-6)
        assert err <= 1e-5
    assert np.all(sca.phi_grad(np.ones(3), 2.0, 1.0, 0.5) == -0.125)
