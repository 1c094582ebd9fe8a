import numpy as np
import pytest

from slicesim.env import (Burst, FadingParams, TrafficParams, make_env, slot_demand,
                          step_fading, step_traffic, substream)


def run_env(steps, fading, traffic, seed=7):
    state = make_env(seed, 0, [fading], [traffic])
    se = state.slices[0]
    h_db = np.empty(steps)
    on = np.empty(steps, dtype=bool)
    for t in range(steps):
        on[t] = step_traffic(se, traffic) is Burst.ON
        h_db[t], _ = step_fading(se, fading)
    return h_db, on


def lag1(x):
    x = x - x.mean()
    return float(np.dot(x[:-1], x[1:]) / np.dot(x, x))


def test_fading_statistics():
    f = FadingParams(rho=0.7, sigma_db=3.0, mean_db=-100.0)
    h_db, _ = run_env(100_000, f, TrafficParams())
    assert abs(lag1(h_db) - 0.7) < 0.02
    assert abs(h_db.mean() + 100.0) < 0.1
    assert abs(h_db.std() - 3.0) < 0.05


def test_on_fraction():
    t = TrafficParams(p_on_to_off=0.3, p_off_to_on=0.1)
    assert t.on_fraction == pytest.approx(0.25)
    _, on = run_env(100_000, FadingParams(), t)
    assert abs(on.mean() - 0.25) < 0.02


def test_linear_gain_matches_db():
    state = make_env(1, 0, [FadingParams(mean_db=-90.0)], [TrafficParams()])
    h_db, h = step_fading(state.slices[0], FadingParams(mean_db=-90.0))
    assert h == pytest.approx(10 ** (h_db / 10))


def test_initial_state():
    state = make_env(1, 0, [FadingParams(mean_db=-80.0)], [TrafficParams(initial_state=Burst.ON)])
    assert state.slices[0].h_db == -80.0
    assert state.slices[0].burst is Burst.ON


def test_substreams_are_independent_and_reproducible():
    a = substream(42, 3, 1, 0).random(5)
    assert np.array_equal(a, substream(42, 3, 1, 0).random(5))
    for other in [(42, 3, 1, 1), (42, 4, 1, 0), (42, 3, 2, 0), (43, 3, 1, 0)]:
        assert not np.array_equal(a, substream(*other).random(5))


def test_traffic_stream_does_not_depend_on_fading_draws():
    t = TrafficParams(0.3, 0.3)
    s1 = make_env(5, 0, [FadingParams()], [t]).slices[0]
    s2 = make_env(5, 0, [FadingParams()], [t]).slices[0]
    a = [step_traffic(s1, t) for _ in range(50)]
    b = []
    for _ in range(50):
        b.append(step_traffic(s2, t))
        step_fading(s2, FadingParams())
    assert a == b


def test_slot_demand():
    assert slot_demand(10.0, 100.0, 2.0, Burst.OFF) == (10.0, 100.0, 10.0)
    assert slot_demand(10.0, 100.0, 2.0, Burst.ON) == (210.0, 200.0, 10.0)


@pytest.mark.parametrize("kw", [dict(rho=1.0), dict(rho=-1.0), dict(sigma_db=-1.0)])
def test_fading_validation(kw):
    with pytest.raises(ValueError):
        FadingParams(**kw)


def test_traffic_validation():
    with pytest.raises(ValueError):
        TrafficParams(p_on_to_off=1.5)
