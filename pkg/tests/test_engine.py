import numpy as np
import pytest

from etconsensus.engine import (FORCED, INITIAL, THRESHOLD, SafetyCapExceeded, SimState, apply_broadcast_cascade,
                                control_input, initial_state, next_event_time, run_event_driven,
                                run_fixed_step_oracle)
from etconsensus.graph import network
from etconsensus.triggers import thresholds, validate_and_derive

from conftest import LAMBDAS, NETS, make_law, random_x0

SPIKE = np.array([1.0, 0, 0, 0, 0])
TAU3 = np.sqrt(0.125)


def test_control_input_examples(w3):
    assert not control_input(w3, np.full(5, 2.0)).any()
    np.testing.assert_allclose(control_input(w3, SPIKE), [-1, 0.25, 0.25, 0.25, 0.25])
    g = network("net1")
    assert abs(control_input(g, np.random.default_rng(0).normal(size=5)).sum()) < 1e-14


def test_control_input_rate(w3):
    rate = np.array([2.0, 1, 1, 1, 0.5])
    np.testing.assert_allclose(control_input(w3, SPIKE, rate), [-2, 0.25, 0.25, 0.25, 0.125])


def test_no_event_at_consensus(w3):
    law = validate_and_derive(w3, 0.0, 0.5)
    assert next_event_time(initial_state(w3, np.full(5, 0.4)), law, w3) is None


def test_complete_graph_first_event_is_simultaneous(w3):
    law = validate_and_derive(w3, 0.0, 0.5)
    t, who = next_event_time(initial_state(w3, SPIKE), law, w3)
    assert t == pytest.approx(TAU3, abs=1e-12)
    assert who == [0, 1, 2, 3, 4]


def test_consensus_run_has_only_initial_event(w3):
    law = validate_and_derive(w3, 0.5, 0.5)
    tr = run_event_driven(w3, law, np.full(5, -0.25), 10.0)
    assert len(tr.events) == 1 and tr.events[0].causes == (INITIAL,) * 5
    np.testing.assert_array_equal(tr.x_final, np.full(5, -0.25))


def _state(x, xhat, last, g):
    x, xhat = np.array(x, float), np.array(xhat, float)
    return SimState(t=1.0, x=x, xhat=xhat, u=control_input(g, xhat), last_broadcast=np.array(last, float),
                    rate=np.ones(g.n))


def test_cascade_isolated_event():
    g = network("net2")
    law = validate_and_derive(g, 0.0, 0.5)
    x = np.array([0.5, 0.1, -0.2, 0.3, 0.0])
    st = _state(x, x + [0.05, 0, 0, 0, 0], [0.5, 0, 0, 0, 0], g)
    ev = apply_broadcast_cascade(st, [0], law, g)
    assert ev.agents == (0,)
    assert st.xhat[0] == st.x[0] and st.last_broadcast[0] == 1.0


def test_cascade_chain_inside_windows():
    g = network("net2")  # ring: 1 <-> 2 <-> 3 <-> 4 <-> 5 <-> 1
    law = validate_and_derive(g, 0.0, 0.5)
    eps = law.eps[0]
    x = np.array([0.5, 0.1, -0.2, 0.3, 0.0])
    last = [0.0, 1.0 - eps / 2, 1.0 - eps / 3, 0.0, 0.0]
    st = _state(x, x + [0.05, 0, 0, 0, 0], last, g)
    ev = apply_broadcast_cascade(st, [0], law, g)
    assert ev.agents == (0, 1, 2)
    assert [ev.cause_of(i) for i in ev.agents] == [THRESHOLD, FORCED, FORCED]
    np.testing.assert_array_equal(st.u, control_input(g, st.xhat))


def test_cascade_window_is_open():
    g = network("net2")
    law = validate_and_derive(g, 0.0, 0.5)
    x = np.array([0.5, 0.1, -0.2, 0.3, 0.0])
    # exactly eps ago and exactly now both lie outside the open window
    for last in (1.0 - law.eps[1], 1.0):
        st = _state(x, x, [0.0, last, 0.0, 0.0, 0.0], g)
        assert apply_broadcast_cascade(st, [0], law, g).agents == (0,)


def test_segments_abut_and_events_ordered():
    g, law = make_law("net1", 0.5)
    tr = run_event_driven(g, law, random_x0(1), 20.0)
    np.testing.assert_array_equal(tr.t_start[1:], tr.t_end[:-1])
    assert tr.t_start[0] == 0.0 and tr.t_end[-1] == 20.0
    times = [ev.t for ev in tr.events]
    assert times == sorted(times) and all(ev.agents for ev in tr.events)


@pytest.mark.parametrize("name", NETS)
@pytest.mark.parametrize("lam", LAMBDAS)
def test_no_missed_triggers(name, lam):
    g, law = make_law(name, lam)
    tr = run_event_driven(g, law, random_x0(2), 30.0)
    for k in range(tr.n_segments):
        theta = thresholds(law, g, tr.xhat[k])
        # e^2 is convex along a segment, so its maximum sits at an endpoint
        for x in (tr.x_start[k], tr.x_end[k]):
            e = tr.xhat[k] - x
            assert np.max(e * e - theta) <= 1e-9


def test_deterministic():
    g, law = make_law("net2", 0.5)
    a = run_event_driven(g, law, random_x0(4), 20.0)
    b = run_event_driven(g, law, random_x0(4), 20.0)
    assert a.events == b.events
    np.testing.assert_array_equal(a.x_start, b.x_start)


def test_safety_cap():
    g, law = make_law("net1", 0.0)
    with pytest.raises(SafetyCapExceeded, match="cap of 20"):
        run_event_driven(g, law, random_x0(0), 50.0, event_cap=20)


def test_input_validation(w3):
    law = validate_and_derive(w3, 0.0, 0.5)
    with pytest.raises(ValueError):
        run_event_driven(w3, law, SPIKE, 0.0)
    with pytest.raises(ValueError):
        run_event_driven(w3, law, SPIKE[:3], 1.0)
    with pytest.raises(ValueError):
        run_event_driven(w3, law, SPIKE, 1.0, rate=-np.ones(5))


def test_oracle_first_event(w3):
    law = validate_and_derive(w3, 0.0, 0.5)
    tr = run_fixed_step_oracle(w3, law, SPIKE, 1.0, 1e-5)
    assert abs(tr.events[1].t - TAU3) < 1e-4


def test_oracle_consensus_has_no_events(w3):
    law = validate_and_derive(w3, 0.0, 0.5)
    tr = run_fixed_step_oracle(w3, law, np.full(5, 1.5), 2.0, 1e-3)
    assert len(tr.events) == 1
    np.testing.assert_array_equal(tr.x_final, np.full(5, 1.5))


def test_state_at_interpolates():
    g, law = make_law("net3", 0.0)
    tr = run_event_driven(g, law, SPIKE, 5.0)
    k = 3
    mid = 0.5 * (tr.t_start[k] + tr.t_end[k])
    np.testing.assert_allclose(tr.state_at(mid), 0.5 * (tr.x_start[k] + tr.x_end[k]), atol=1e-15)


def test_broadcast_times_lists_every_event():
    g, law = make_law("net4", 0.5)
    tr = run_event_driven(g, law, random_x0(5), 10.0)
    total = sum(len(tr.broadcast_times(i)) for i in range(5))
    assert total == sum(len(ev.agents) for ev in tr.events)
    assert tr.broadcast_times(0)[0] == (0.0, INITIAL)
