import numpy as np
import pytest

from uavsfl import optimizer, physics
from uavsfl.oracle import GridSpec, OracleInfeasible, brute_force_min_power, finite_diff_check
from uavsfl.sca import coeffs_from_point, phi_grad, phi_linearize, surrogate_rate, surrogate_rate_grad
from uavsfl.scenario import default_config, generate_scenario

from conftest import make_scenario, make_user


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(t_points=2)
    s = generate_scenario(default_config(seed=0, num_users=2))
    with pytest.raises(ValueError, match="cap"):
        brute_force_min_power(s, GridSpec(max_evals=1000))
    with pytest.raises(ValueError):
        brute_force_min_power(generate_scenario(default_config(seed=0, num_users=3)))


def test_user_at_origin_picks_origin():
    s = make_scenario(make_user(0.0, 0.0))
    P, a = brute_force_min_power(s, GridSpec(q_points=11))
    assert np.array_equal(a.q, [0.0, 0.0])
    assert physics.residuals(a, s).max_violation <= 0


def test_refinement_never_worse():
    s = generate_scenario(default_config(seed=3, num_users=2))
    g = GridSpec(q_points=7, b_split=3, t_points=6, f_points=4, p_points=6)
    P1, _ = brute_force_min_power(s, g)
    P2, _ = brute_force_min_power(s, g.refined())
    assert P2 <= P1


def test_oracle_infeasible_when_cap_tiny():
    s = generate_scenario(default_config(seed=0, num_users=1, uav_pmax_w=1e-4))
    with pytest.raises(OracleInfeasible):
        brute_force_min_power(s)


@pytest.mark.parametrize("seed", range(3))
def test_optimizer_within_oracle(seed):
    s = generate_scenario(default_config(seed=200 + seed, num_users=1))
    P_star, a_star = brute_force_min_power(s)
    assert physics.residuals(a_star, s).max_violation <= 0
    a, _ = optimizer.run(s)
    assert a.uav_power <= 1.15 * P_star


def test_fd_on_surrogate_rate(rng):
    c = coeffs_from_point(2e6, 3e-3, 700.0, 1e13)
    x = np.array([1.5e6, 4e-3, 800.0])
    err = finite_diff_check(lambda z: float(surrogate_rate(*z, c)),
                            lambda z: np.array([float(g) for g in surrogate_rate_grad(*z, c)]), x)
    assert err <= 1e-5


def test_fd_linear_phi_exact():
    err = finite_diff_check(lambda z: float(phi_linearize(z[0], 500.0, 2.0, 0.72)),
                            lambda z: phi_grad(z, 500.0, 2.0, 0.72), np.array([650.0]))
    assert err <= 1e-8


def test_fd_placement_flat_overhead():
    qk, H = np.array([3.0, -2.0]), 20.0
    fn = lambda q: float((H * H + np.sum((q - qk) ** 2)) ** 1.0)
    grad = lambda q: 2.0 * (q - qk)
    assert np.all(grad(qk) == 0)
    assert finite_diff_check(fn, grad, np.array([10.0, 4.0])) <= 1e-8
