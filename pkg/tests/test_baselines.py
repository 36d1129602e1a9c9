import numpy as np
import pytest

from uavsfl import baselines, optimizer, physics
from uavsfl.baselines import Method
from uavsfl.optimizer import RunOptions
from uavsfl.scenario import default_config, generate_scenario


def test_parse_methods():
    assert Method.parse("sfl, FF,ft,fup") == [Method.SFL, Method.FF, Method.FT, Method.FUP]
    with pytest.raises(ValueError, match="unknown method"):
        Method.parse("sfl,xx")


def test_pins(default_scenario):
    s = default_scenario
    assert np.allclose(baselines.pinned_frequency(s), 0.5 * (s.cpu_min + s.cpu_max))
    assert np.allclose(baselines.pinned_time(s), optimizer.max_time_eq4(s))
    assert np.array_equal(baselines.pinned_placement(s), [0.0, 0.0])


@pytest.fixture(scope="module")
def four_runs():
    s = generate_scenario(default_config(seed=5))
    opts = RunOptions(enforce_uav_cap=False)
    return s, {m: baselines.run_baseline(s, m, opts) for m in Method}


def test_restrictions_hold(four_runs):
    s, runs = four_runs
    a_ff, _ = runs[Method.FF]
    a_ft, _ = runs[Method.FT]
    a_fup, _ = runs[Method.FUP]
    assert np.allclose(a_ff.f, baselines.pinned_frequency(s))
    assert np.allclose(a_ft.t, baselines.pinned_time(s))
    assert np.array_equal(a_fup.q, [0.0, 0.0])


def test_all_feasible_and_dominated(four_runs):
    s, runs = four_runs
    P = {m: a.uav_power for m, (a, _) in runs.items()}
    for m, (a, tr) in runs.items():
        r = physics.residuals(a, s)
        assert max(r.rate.max(), r.energy.max(), r.time.max(), r.cpu_bounds.max()) <= 1e-6, m
    for m in (Method.FF, Method.FT, Method.FUP):
        assert P[Method.SFL] <= P[m] + 1e-6
    assert P[Method.FT] >= P[Method.FF] >= P[Method.FUP]
