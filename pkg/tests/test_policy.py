import numpy as np
import pytest

from advchase.arena.config import chaser_arch, escapee_arch
from advchase.policy.mirror import (MirrorMap, chaser_mirror, escapee_mirror, mirror_action, mirror_state,
                                    mirrored_actions, symmetry_gap)
from advchase.policy.mlp import MlpArch, MlpPolicy, decode, encode, forward, init_params, param_count, zero_policy


def _naive_forward(arch, vector, state):
    # independent matrix-multiply oracle over the documented flat layout
    h = np.asarray(state, dtype=np.float64)
    offset = 0
    for n_in, n_out in arch.layer_shapes():
        W = vector[offset:offset + n_in * n_out].reshape(n_out, n_in)
        offset += n_in * n_out
        b = vector[offset:offset + n_out]
        offset += n_out
        h = np.tanh(W @ h + b)
    return h


def test_param_count():
    assert param_count(chaser_arch()) == 4674
    assert param_count(escapee_arch()) == 4546
    assert param_count(MlpArch(1, (), 1)) == 2


def test_zero_policy_outputs_zero():
    policy = zero_policy(chaser_arch())
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert np.array_equal(policy.act(rng.normal(size=5)), np.zeros(2))


def test_forward_matches_naive_oracle():
    rng = np.random.default_rng(1)
    arch = chaser_arch()
    vector = rng.normal(scale=0.3, size=param_count(arch))
    policy = decode(arch, vector)
    for _ in range(20):
        s = rng.normal(size=5)
        a = forward(policy, s)
        assert np.allclose(a, _naive_forward(arch, vector, s), atol=1e-12, rtol=0)
        assert np.array_equal(a, forward(policy, s))
        assert np.all(np.abs(a) < 1)


def test_act_batch_matches_act():
    rng = np.random.default_rng(2)
    policy = decode(escapee_arch(), init_params(escapee_arch(), rng))
    states = rng.normal(size=(6, 3))
    batch = policy.act_batch(states)
    for s, a in zip(states, batch):
        assert np.allclose(policy.act(s), a, atol=1e-12, rtol=0)


def test_encode_decode():
    rng = np.random.default_rng(3)
    arch = MlpArch(4, (8, 5), 3)
    vector = rng.normal(size=param_count(arch))
    policy = decode(arch, vector)
    assert np.array_equal(encode(policy), vector)
    again = MlpPolicy.from_vector(arch, encode(policy))
    for s in rng.normal(size=(100, 4)):
        assert np.array_equal(policy.act(s), again.act(s))
    assert np.array_equal(encode(decode(arch, np.zeros(param_count(arch)))), encode(zero_policy(arch)))


def test_flat_layout_is_weights_then_bias():
    arch = MlpArch(2, (), 1)
    policy = decode(arch, np.array([0.5, -0.25, 0.1]))
    assert policy.act([1.0, 2.0])[0] == pytest.approx(np.tanh(0.5 - 0.5 + 0.1), abs=1e-15)


def test_dimension_errors():
    arch = chaser_arch()
    with pytest.raises(ValueError):
        decode(arch, np.zeros(param_count(arch) - 1))
    with pytest.raises(ValueError):
        zero_policy(arch).act(np.zeros(3))
    with pytest.raises(ValueError):
        MlpArch(5, (0,), 2)


def test_init_params():
    arch = chaser_arch()
    a = init_params(arch, np.random.default_rng(4))
    b = init_params(arch, np.random.default_rng(4))
    assert a.shape == (4674,) and np.array_equal(a, b)
    # output bias is the tail of the vector
    assert np.array_equal(a[-2:], np.zeros(2))
    # widest xavier bound is the 64 -> 2 output layer
    assert np.all(np.abs(a) <= np.sqrt(6.0 / (64 + 2)))


def test_mirror_maps():
    m = chaser_mirror()
    s = np.array([0.3, 0.2, 1.0, -0.5, 1.2])
    assert np.array_equal(mirror_state(m, s), [0.3, -0.2, 1.0, 0.5, 1.2])
    assert np.array_equal(mirror_state(m, mirror_state(m, s)), s)
    assert np.array_equal(mirror_action(m, [0.4, 0.7]), [0.4, -0.7])
    e = escapee_mirror()
    assert np.array_equal(mirror_state(e, [1.0, 2.0, 0.5]), [1.0, -2.0, -0.5])
    with pytest.raises(ValueError):
        mirror_state(m, np.zeros(3))
    with pytest.raises(ValueError):
        MirrorMap((1, 0), (1,))


def test_symmetry_gap():
    arch = chaser_arch()
    assert symmetry_gap(zero_policy(arch), chaser_mirror(), np.ones(5)) == 0.0
    policy = decode(arch, init_params(arch, np.random.default_rng(5)))
    assert symmetry_gap(policy, chaser_mirror(), np.array([0.2, 0.1, 2.0, 0.7, 2.1])) > 0


def test_mirrored_actions_match_separate_calls():
    m = chaser_mirror()
    arch = chaser_arch((8,))
    policy = decode(arch, init_params(arch, np.random.default_rng(9)))
    s = np.array([0.4, -0.3, 1.5, 0.9, 1.75])
    a, a_m = mirrored_actions(policy, m, s)
    assert np.allclose(a, policy.act(s), rtol=0, atol=1e-12)
    assert np.allclose(a_m, mirror_action(m, policy.act(mirror_state(m, s))), rtol=0, atol=1e-12)
    assert symmetry_gap(policy, m, s) == float(np.linalg.norm(a - a_m))
    with pytest.raises(ValueError):
        mirrored_actions(policy, m, np.zeros(3))
