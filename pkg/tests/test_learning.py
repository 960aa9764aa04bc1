import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topspark.errors import ConfigError, ContractViolation
from topspark.learning import (
    StdpConfig,
    decay_traces,
    depress_on_pre_spike,
    learning_rate_multiplier,
    normalize_weights,
    stdp1_on_post_spike,
    stdp2_on_post_spike,
)

from conftest import make_state


@pytest.mark.parametrize(
    "kwargs",
    [
        {"rule": "stdp3"},
        {"eta_pre": 0.0},
        {"eta_post": -0.1},
        {"w_max": 0.0},
        {"mu": -1.0},
        {"tau_pre": 0.0},
        {"alr_floor": 0.0},
        {"alr_floor": 1.5},
        {"norm_total": -1.0},
        {"norm_total": "sometimes"},
    ],
)
def test_config_invariants(kwargs):
    with pytest.raises(ConfigError):
        StdpConfig(**kwargs)


def test_rule_name_is_case_insensitive():
    assert StdpConfig(rule="STDP2").rule == "stdp2"


def test_norm_total_resolution():
    assert StdpConfig().resolved_norm_total(784) == pytest.approx(78.4)
    assert StdpConfig(norm_total="off").resolved_norm_total(784) is None
    assert StdpConfig(norm_total=5).resolved_norm_total(784) == 5.0


# --- traces ----------------------------------------------------------------

def test_trace_decay_one_step():
    s = make_state(1, 1)
    s.pre_trace[0] = 1.0
    decay_traces(s, StdpConfig())
    assert s.pre_trace[0] == pytest.approx(0.951229424500714, rel=1e-12)


def test_trace_reset_to_one():
    s = make_state(2, 2)
    s.pre_trace[:] = [0.3, 0.9]
    s.post_trace[:] = [0.2, 0.0]
    decay_traces(s, StdpConfig(), np.array([1, 0]), np.array([0, 1]))
    assert s.pre_trace[0] == 1.0 and s.post_trace[1] == 1.0
    assert s.pre_trace[1] < 0.9 and s.post_trace[0] < 0.2


def test_zero_trace_fixed_point():
    s = make_state(3, 2)
    for _ in range(10):
        decay_traces(s, StdpConfig(), np.zeros(3), np.zeros(2))
    assert not s.pre_trace.any() and not s.post_trace.any()


# --- stdp1 -----------------------------------------------------------------

def test_no_fire_no_change():
    s = make_state(3, 2, seed=0)
    s.pre_trace[:] = 0.7
    w = s.weights.copy()
    stdp1_on_post_spike(s, StdpConfig(), np.zeros(2, bool))
    assert np.array_equal(s.weights, w)


def test_saturated_weight_does_not_move():
    s = make_state(1, 1, weights=[[1.0]])
    s.pre_trace[0] = 1.0
    stdp1_on_post_spike(s, StdpConfig(), np.array([True]))
    assert s.weights[0, 0] == 1.0


def test_stdp1_worked_example():
    s = make_state(1, 1, weights=[[0.0]])
    s.pre_trace[0] = 0.5
    stdp1_on_post_spike(s, StdpConfig(x_target=0.4), np.array([True]))
    assert s.weights[0, 0] == pytest.approx(0.01 * 0.1 * 1.0, rel=1e-12)


def test_stdp1_only_fired_columns():
    s = make_state(2, 3, seed=1)
    s.pre_trace[:] = [1.0, 0.2]
    w = s.weights.copy()
    stdp1_on_post_spike(s, StdpConfig(), np.array([False, True, False]))
    assert np.array_equal(s.weights[:, [0, 2]], w[:, [0, 2]])
    assert np.all(s.weights[:, 1] > w[:, 1])


def test_negative_drive_depresses_and_clips():
    s = make_state(1, 1, weights=[[0.001]])
    stdp1_on_post_spike(s, StdpConfig(x_target=0.9, eta_pre=1.0), np.array([True]))
    assert s.weights[0, 0] == 0.0


# --- stdp2 -----------------------------------------------------------------

def test_multiplier_examples():
    cfg = StdpConfig(rule="stdp2", alr_floor=0.1)
    assert learning_rate_multiplier(cfg, 100, 100) == 1.0
    assert learning_rate_multiplier(cfg, 200, 100) == 0.5
    # no pre-spikes: denominator clamps to 1, m capped at 1 / alr_floor
    assert learning_rate_multiplier(cfg, 0, 100) == pytest.approx(10.0)
    assert learning_rate_multiplier(cfg, 10**6, 100) == 0.1
    with pytest.raises(ContractViolation):
        learning_rate_multiplier(cfg, -1, 100)
    with pytest.raises(ConfigError):
        learning_rate_multiplier(cfg, 10)
    assert learning_rate_multiplier(StdpConfig(reference_pre_spikes=50), 25) == 2.0


def test_stdp2_at_reference_equals_stdp1():
    a = make_state(5, 3, seed=2)
    a.pre_trace[:] = np.linspace(0, 1, 5)
    b = a.copy()
    fired = np.array([True, False, True])
    stdp1_on_post_spike(a, StdpConfig(), fired)
    stdp2_on_post_spike(b, StdpConfig(rule="stdp2"), fired, 300, 300.0)
    assert np.array_equal(a.weights, b.weights)


# --- depression --------------------------------------------------------------

def test_depression_off_by_default_and_on_when_enabled():
    s = make_state(2, 2, weights=[[0.5, 0.5], [0.5, 0.5]])
    s.post_trace[:] = [1.0, 0.0]
    depress_on_pre_spike(s, StdpConfig(), np.array([1, 1]))
    assert np.all(s.weights == 0.5)
    depress_on_pre_spike(s, StdpConfig(eta_post=0.1), np.array([1, 0]))
    assert s.weights[0, 0] == pytest.approx(0.5 - 0.1 * 0.5)
    assert s.weights[0, 1] == 0.5 and s.weights[1, 0] == 0.5


# --- normalization -----------------------------------------------------------

def test_normalize_examples():
    cfg = StdpConfig(w_max=10.0)
    s = make_state(3, 1, weights=[[1], [1], [2]])
    normalize_weights(s, cfg, total=8.0)
    assert s.weights[:, 0].tolist() == [2.0, 2.0, 4.0]
    normalize_weights(s, cfg, total=8.0)
    assert s.weights[:, 0].tolist() == [2.0, 2.0, 4.0]
    z = make_state(3, 1)
    normalize_weights(z, cfg, total=8.0)
    assert not z.weights.any()


def test_normalize_respects_w_max():
    s = make_state(4, 1, weights=[[0.1], [0.1], [0.1], [5.0]])
    normalize_weights(s, StdpConfig(w_max=1.0), total=2.0)
    col = s.weights[:, 0]
    assert col.max() <= 1.0
    assert col.sum() == pytest.approx(2.0)
    assert col[3] == 1.0


def test_normalize_off():
    s = make_state(2, 1, weights=[[0.2], [0.3]])
    normalize_weights(s, StdpConfig(norm_total="off"))
    assert s.weights[:, 0].tolist() == [0.2, 0.3]


weights_st = st.lists(st.floats(0, 1), min_size=4, max_size=24)


@settings(max_examples=200, deadline=None)
@given(weights_st, st.floats(0.1, 3.0))
def test_normalize_idempotent_and_bounded(ws, total):
    n = len(ws) // 2
    s = make_state(2, n, weights=np.array(ws[: 2 * n]))
    cfg = StdpConfig()
    normalize_weights(s, cfg, total)
    once = s.weights.copy()
    normalize_weights(s, cfg, total)
    assert np.array_equal(once, s.weights)
    assert once.min() >= 0 and once.max() <= cfg.w_max


@settings(max_examples=200, deadline=None)
@given(
    st.integers(0, 2**31 - 1),
    st.floats(0.001, 0.5),
    st.floats(0, 1),
    st.sampled_from([0.0, 0.5, 1.0, 2.0]),
)
def test_update_bounds_and_saturation(seed, eta, x_target, mu):
    rng = np.random.default_rng(seed)
    s = make_state(6, 4, weights=rng.uniform(0, 1, (6, 4)))
    s.pre_trace[:] = rng.uniform(0, 1, 6)
    cfg = StdpConfig(eta_pre=eta, x_target=x_target, mu=mu)
    before = s.weights.copy()
    fired = rng.random(4) < 0.5
    stdp1_on_post_spike(s, cfg, fired)
    assert s.weights.min() >= 0 and s.weights.max() <= 1
    dw = np.abs(s.weights - before)
    bound = eta * np.abs(s.pre_trace - x_target)[:, None] * (1 - before) ** mu
    assert np.all(dw <= bound + 1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 10_000))
def test_stdp2_reduces_to_stdp1_when_m_is_one(seed, count):
    rng = np.random.default_rng(seed)
    a = make_state(5, 3, weights=rng.uniform(0, 1, (5, 3)))
    a.pre_trace[:] = rng.uniform(0, 1, 5)
    b = a.copy()
    fired = rng.random(3) < 0.6
    stdp1_on_post_spike(a, StdpConfig(), fired)
    stdp2_on_post_spike(b, StdpConfig(rule="stdp2"), fired, count, float(count))
    assert np.array_equal(a.weights, b.weights)


def test_trace_decay_matches_closed_form():
    s = make_state(1, 1)
    s.post_trace[0] = 1.0
    for _ in range(20):
        decay_traces(s, StdpConfig())
    assert s.post_trace[0] == pytest.approx(math.exp(-1.0), rel=1e-12)
