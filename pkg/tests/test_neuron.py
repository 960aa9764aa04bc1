import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topspark.errors import ContractViolation
from topspark.neuron import (
    NetworkState,
    NeuronParams,
    SpikeTrain,
    apply_lateral_inhibition,
    reset_state,
    step_lif,
)

from conftest import make_state


# --- params and state ------------------------------------------------------

@pytest.mark.parametrize(
    "kwargs",
    [
        {"v_th": -60.0},  # not above v_reset
        {"t_ref": 0},
        {"t_ref": 1.5},
        {"theta_plus": -0.1},
        {"tau_mem": 0.0},
        {"tau_theta": -1.0},
        {"inhibition": "lateral"},
        {"inhibition_strength": -1.0},
    ],
)
def test_params_invariants_rejected(kwargs):
    with pytest.raises(ContractViolation):
        NeuronParams(**kwargs)


def test_default_params():
    p = NeuronParams()
    assert (p.v_th, p.v_reset, p.v_rest, p.t_ref, p.theta_plus) == (-52.0, -60.0, -60.0, 5, 1.0)
    assert p.mem_decay == pytest.approx(math.exp(-1 / 100))


def test_state_check_catches_violations():
    s = make_state(3, 2)
    s.check(t_ref=5)
    s.weights[0, 0] = 1.5
    with pytest.raises(ContractViolation):
        s.check()
    s = make_state(3, 2)
    s.theta[1] = -0.1
    with pytest.raises(ContractViolation):
        s.check()
    s = make_state(3, 2)
    s.refrac_remaining[0] = 6
    with pytest.raises(ContractViolation):
        s.check(t_ref=5)


def test_spike_train_validation():
    st_ = SpikeTrain(np.array([[0, 1], [1, 1]]))
    assert (st_.t, st_.c, st_.total()) == (2, 2, 3)
    assert st_.bits.dtype == np.uint8
    with pytest.raises(ContractViolation):
        SpikeTrain(np.array([[0, 2]]))
    with pytest.raises(ContractViolation):
        SpikeTrain(np.zeros((0, 3), dtype=np.uint8))
    with pytest.raises(ContractViolation):
        SpikeTrain(np.zeros(3, dtype=np.uint8))


# --- step_lif examples -----------------------------------------------------

def test_zero_weights_stay_at_rest():
    p = NeuronParams()
    s = make_state(4, 3, p)
    out = step_lif(s, p, np.ones(4, dtype=np.uint8))
    assert not out.any()
    assert np.all(s.v_mem == p.v_rest)


def test_single_step_threshold_crossing():
    p = NeuronParams()
    s = make_state(1, 1, p, weights=[[9.0]])
    out = step_lif(s, p, np.array([1]))
    assert out.tolist() == [True]
    assert s.v_mem[0] == -60.0
    assert s.refrac_remaining[0] == p.t_ref


def test_refractory_neuron_ignores_input():
    p = NeuronParams()
    s = make_state(1, 1, p, weights=[[9.0]])
    s.refrac_remaining[0] = 3
    s.v_mem[0] = -58.0
    out = step_lif(s, p, np.array([1]))
    assert out.tolist() == [False]
    assert s.refrac_remaining[0] == 2
    assert s.v_mem[0] == -58.0


def test_leak_and_integrate_values():
    p = NeuronParams(inhibition="off")
    s = make_state(2, 1, p, weights=[[1.5], [2.0]])
    s.v_mem[0] = -56.0
    step_lif(s, p, np.array([1, 1]))
    expected = -60.0 + 4.0 * math.exp(-1 / 100) + 3.5
    assert s.v_mem[0] == pytest.approx(expected, abs=1e-12)


def test_theta_only_grows_while_learning():
    p = NeuronParams()
    s = make_state(1, 1, p, weights=[[9.0]])
    step_lif(s, p, np.array([1]), learning=False)
    assert s.theta[0] == 0.0
    reset_state(s, p)
    step_lif(s, p, np.array([1]), learning=True)
    assert s.theta[0] == p.theta_plus


def test_theta_decays_while_learning():
    p = NeuronParams(tau_theta=10.0)
    s = make_state(1, 1, p)
    s.theta[0] = 2.0
    step_lif(s, p, np.array([0]), learning=True)
    assert s.theta[0] == pytest.approx(2.0 * math.exp(-0.1))


def test_theta_raises_effective_threshold():
    p = NeuronParams()
    s = make_state(1, 1, p, weights=[[9.0]])
    s.theta[0] = 2.0
    assert not step_lif(s, p, np.array([1]))[0]


def test_dimension_mismatch():
    p = NeuronParams()
    s = make_state(3, 2, p)
    with pytest.raises(ContractViolation):
        step_lif(s, p, np.zeros(4))


def test_t_ref_one_allows_consecutive_spikes():
    p = NeuronParams(t_ref=1)
    s = make_state(1, 1, p, weights=[[9.0]])
    fired = [step_lif(s, p, np.array([1]))[0] for _ in range(3)]
    assert fired == [True, True, True]


# --- lateral inhibition ----------------------------------------------------

def test_inhibition_examples():
    p = NeuronParams()
    s = make_state(1, 3, p)
    assert not apply_lateral_inhibition(np.zeros(3, bool), s, p).any()
    one = np.array([False, True, False])
    assert apply_lateral_inhibition(one, s, p).tolist() == one.tolist()
    s.v_mem[:] = [3.0, 5.0, -70.0]
    out = apply_lateral_inhibition(np.array([True, True, False]), s, p)
    assert out.tolist() == [False, True, False]
    # losers and bystanders clamped to v_reset
    assert s.v_mem[0] == p.v_reset and s.v_mem[2] == p.v_reset


def test_inhibition_tie_goes_to_lowest_index():
    s = make_state(1, 3)
    s.v_mem[:] = [-50.0, -50.0, -50.0]
    out = apply_lateral_inhibition(np.array([False, True, True]), s)
    assert out.tolist() == [False, True, False]


def test_inhibition_off_and_soft():
    p = NeuronParams(inhibition="off")
    s = make_state(1, 3, p)
    spikes = np.array([True, True, False])
    assert apply_lateral_inhibition(spikes, s, p).tolist() == spikes.tolist()
    p = NeuronParams(inhibition="soft", inhibition_strength=3.0)
    s = make_state(1, 3, p)
    s.v_mem[:] = [-50.0, -50.0, -55.0]
    out = apply_lateral_inhibition(spikes, s, p)
    assert out.tolist() == spikes.tolist()
    assert s.v_mem[2] == -60.0  # -55 - 2*3 floored at v_reset


def test_inhibition_shape_check():
    with pytest.raises(ContractViolation):
        apply_lateral_inhibition(np.zeros(2, bool), make_state(1, 3))


def test_hard_wta_in_step():
    p = NeuronParams()
    s = make_state(1, 3, p, weights=[[9.0, 10.0, 9.5]])
    out = step_lif(s, p, np.array([1]))
    assert out.tolist() == [False, True, False]
    assert np.all(s.v_mem == p.v_reset)
    assert s.refrac_remaining.tolist() == [0, p.t_ref, 0]


# --- reset -----------------------------------------------------------------

def test_reset_state_keeps_knowledge():
    p = NeuronParams()
    s = make_state(3, 2, p, seed=1)
    w = s.weights.copy()
    s.v_mem[:] = [-55.0, -53.0]
    s.theta[:] = [0.5, 0.2]
    s.refrac_remaining[:] = [2, 1]
    s.pre_trace[:] = 0.5
    s.post_trace[:] = 0.7
    reset_state(s, p)
    assert np.all(s.v_mem == p.v_rest)
    assert np.array_equal(s.weights, w)
    assert s.theta.tolist() == [0.5, 0.2]
    assert not s.refrac_remaining.any() and not s.pre_trace.any() and not s.post_trace.any()


# --- properties ------------------------------------------------------------

micro = st.tuples(
    st.integers(1, 8),  # N
    st.integers(1, 6),  # inputs
    st.integers(1, 50),  # T
    st.integers(1, 6),  # t_ref
    st.integers(0, 2**31 - 1),
)


def _random_net(n, n_in, t_ref, seed, **extra):
    rng = np.random.default_rng(seed)
    p = NeuronParams(t_ref=t_ref, **extra)
    s = NetworkState.create(n_in, n, p, rng)
    s.weights = rng.uniform(0, 1, (n_in, n))
    return p, s, rng


@settings(max_examples=300, deadline=None)
@given(micro)
def test_refractory_silence(args):
    n, n_in, t, t_ref, seed = args
    p, s, rng = _random_net(n, n_in, t_ref, seed, v_th=-59.0)
    last = np.full(n, -10**6)
    for step in range(t):
        out = step_lif(s, p, rng.random(n_in) < 0.8, learning=True)
        assert not np.any(out & (step - last < t_ref))
        last[out] = step
        s.check(t_ref)


@settings(max_examples=300, deadline=None)
@given(micro, st.floats(0.01, 5.0))
def test_threshold_monotonicity(args, delta):
    n, n_in, t, t_ref, seed = args
    # single neuron, no learning: lowering v_th never costs spikes
    p, s, rng = _random_net(1, n_in, t_ref, seed)
    p_low = NeuronParams(t_ref=t_ref, v_th=p.v_th - delta)
    s_low = s.copy()
    inputs = rng.random((t, n_in)) < 0.7
    total, total_low = 0, 0
    for x in inputs:
        total += int(step_lif(s, p, x)[0])
        total_low += int(step_lif(s_low, p_low, x)[0])
        assert total_low >= total


@settings(max_examples=300, deadline=None)
@given(micro)
def test_wta_population_bound_and_weight_closure(args):
    n, n_in, t, t_ref, seed = args
    p, s, rng = _random_net(n, n_in, t_ref, seed, v_th=-58.0)
    w0 = s.weights.copy()
    for _ in range(t):
        assert step_lif(s, p, rng.random(n_in) < 0.9).sum() <= 1
    assert np.array_equal(s.weights, w0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-80.0, -40.0), st.integers(1, 200))
def test_leak_convergence(v0, steps):
    p = NeuronParams(v_th=1000.0)
    s = make_state(1, 1, p)
    s.v_mem[0] = v0
    gap = abs(v0 - p.v_rest)
    for _ in range(steps):
        step_lif(s, p, np.array([0]))
        new_gap = abs(s.v_mem[0] - p.v_rest)
        assert new_gap <= gap
        gap = new_gap
