import math

import numpy as np
import pytest

from advchase.arena.config import ArenaConfig, chaser_arch
from advchase.arena.rollout import EpisodeResult
from advchase.evaluation.metrics import (METRIC_COLUMNS, ChaseMetrics, CrossMatrix, cross_matrix_table,
                                         metrics_table)
from advchase.evaluation.suites import (generation_drops, learning_curve, run_cross_matrix, run_sine_benchmark,
                                        run_unseen_adversaries, sine_arena, standard_environments)
from advchase.policy.mlp import MlpArch, decode, init_params, zero_policy
from advchase.train.ensemble import TEST, TRAIN, AdversaryEnsemble, AdversaryRecord


def _episode(outcome, distance=1.0):
    return EpisodeResult(chaser_return=0.0, escapee_return=0.0, steps=10, catches=int(outcome == "catch"),
                         fell=outcome == "fall", escapee_escaped=outcome == "escape", outcome=outcome,
                         mean_distance=distance, mean_speed=0.5, mean_heading_error=0.1)


def _chaser(seed, hidden=(4,)):
    arch = chaser_arch(hidden)
    return decode(arch, init_params(arch, np.random.default_rng(seed)))


def _test_records(n):
    arch = MlpArch(3, (4,), 2)
    return [AdversaryRecord(f"g1-a{k}", 1, 0.8, TEST, decode(arch, init_params(arch, np.random.default_rng(k))))
            for k in range(n)]


# ---------------------------------------------------------------- metrics

def test_chase_metrics_partition():
    episodes = [_episode("fall")] + [_episode("catch", 2.0)] * 2 + [_episode("escape", 3.0)] * 5
    m = ChaseMetrics.from_episodes(episodes)
    assert (m.fall_pct, m.catch_pct, m.escape_pct) == (12.5, 25.0, 62.5)
    assert m.fall_pct + m.catch_pct + m.escape_pct == 100.0
    assert m.mean_distance == pytest.approx((1 + 4 + 15) / 8)
    assert m.episodes == 8
    assert list(m.to_dict())[:6] == METRIC_COLUMNS
    assert "escape %" in metrics_table({"policy": m})


def test_chase_metrics_errors():
    with pytest.raises(ValueError):
        ChaseMetrics.from_episodes([])
    with pytest.raises(ValueError):
        ChaseMetrics.from_episodes([_episode("timeout")])


def test_cross_matrix_normalization():
    raw = np.array([[2.0, 1.0, 4.0],
                    [1.0, 5.0, 2.0],
                    [4.0, -1.0, 8.0],
                    [3.0, 2.5, 2.0]])
    home = {"a": "cone", "b": "circular", "c": "zigzag", "d": None}
    m = CrossMatrix(["a", "b", "c", "d"], ["cone", "circular", "zigzag"], raw, home)
    assert np.array_equal(m.diagonal, [2.0, 5.0, 8.0])
    assert np.array_equal(np.diag(m.normalized[:3]), np.ones(3))
    assert m.normalized[3].tolist() == [1.5, 0.5, 0.25]
    assert m.average[3] == pytest.approx(0.75)
    rows = m.csv_rows()
    assert rows[0] == ["policy", "cone", "circular", "zigzag", "average"]
    assert len(rows) == 5 and len(m.csv_rows(normalized=False)[0]) == 4
    assert "average" in cross_matrix_table(m)

    # rescaling a column leaves its normalized entries alone
    scaled = raw.copy()
    scaled[:, 1] *= 7.0
    m2 = CrossMatrix(["a", "b", "c", "d"], ["cone", "circular", "zigzag"], scaled, home)
    assert np.allclose(m2.normalized, m.normalized, rtol=1e-15, atol=0)


@pytest.mark.parametrize("cols,home", [
    (["cone", "circular"], {"a": "cone"}),
    (["cone"], {"a": "cone", "b": "cone"}),
    (["cone"], {"a": "cone", "b": "sine"}),
])
def test_cross_matrix_needs_one_home_per_column(cols, home):
    with pytest.raises(ValueError):
        CrossMatrix(["a", "b"], cols, np.ones((2, len(cols))), home)


def test_cross_matrix_flags_negative_home_reward(caplog):
    raw = np.array([[-4.0, 1.0],
                    [-2.0, 2.0],
                    [-8.0, 3.0]])
    with caplog.at_level("WARNING"):
        m = CrossMatrix(["a", "b", "c"], ["cone", "zigzag"], raw, {"a": "cone", "b": "zigzag"})
    assert m.inverted == ["cone"]
    assert "cone" in caplog.text
    # c does worse than a in cone but scores above 1
    assert m.normalized[2, 0] == 2.0
    assert m.to_dict()["inverted"] == ["cone"]
    assert "ordering reversed in: cone" in cross_matrix_table(m)
    assert CrossMatrix(["a"], ["cone"], np.ones((1, 1)), {"a": "cone"}).inverted == []


def test_cross_matrix_zero_diagonal():
    with pytest.raises(ValueError):
        CrossMatrix(["a"], ["cone"], np.zeros((1, 1)), {"a": "cone"})


# ---------------------------------------------------------------- suites

def test_identical_policies_normalize_to_one():
    vector = _chaser(3).to_vector()
    arch = chaser_arch((4,))
    policies = {name: decode(arch, vector) for name in ("a", "b", "c", "d")}
    home = {"a": "cone", "b": "circular", "c": "zigzag"}
    m = run_cross_matrix(policies, standard_environments(), home, episodes=3, cfg=ArenaConfig(max_steps=80))
    assert m.rows == ["a", "b", "c", "d"] and m.cols == ["cone", "circular", "zigzag"]
    assert np.array_equal(m.normalized, np.ones((4, 3)))
    assert np.array_equal(m.average, np.ones(4))


def test_cross_matrix_validates_before_running():
    policies = {"a": _chaser(1), "b": _chaser(2)}
    with pytest.raises(ValueError):
        run_cross_matrix(policies, standard_environments(), {"a": "cone", "b": "circular"}, episodes=1)
    with pytest.raises(ValueError):
        run_cross_matrix(policies, standard_environments(), {"a": "cone", "x": "zigzag"}, episodes=1)


def test_adversary_environment_needs_learned_adversaries():
    with pytest.raises(ValueError):
        standard_environments(AdversaryEnsemble())
    ensemble = AdversaryEnsemble()
    ensemble.add([r.with_split(TRAIN) for r in _test_records(2)])
    envs = standard_environments(ensemble)
    assert [e.name for e in envs] == ["cone", "circular", "zigzag", "adversary"]
    assert len(envs[-1].escapees) == 2


def test_sine_benchmark_zero_policy_always_escapes():
    m, episodes = run_sine_benchmark(zero_policy(chaser_arch()), n=5, seed=1)
    assert (m.escape_pct, m.catch_pct, m.fall_pct) == (100.0, 0.0, 0.0)
    assert m.mean_speed == 0.0
    assert all(ep.steps < 10000 for ep in episodes)


def test_sine_benchmark_is_deterministic():
    policy = _chaser(4)
    a, ea = run_sine_benchmark(policy, n=3, seed=2, record=True)
    b, eb = run_sine_benchmark(policy, n=3, seed=2)
    assert a == b
    assert [e.seed for e in ea] == [e.seed for e in eb]
    assert all(len(e.trajectory) == e.steps for e in ea)
    assert sine_arena(ArenaConfig()).escape_distance == 3.0


def test_evaluation_leaves_policy_untouched():
    policy = _chaser(5)
    before = policy.to_vector().copy()
    run_unseen_adversaries(policy, _test_records(2), episodes=2, cfg=ArenaConfig(max_steps=50))
    assert np.array_equal(policy.to_vector(), before)


def test_unseen_adversaries():
    cfg = ArenaConfig(max_steps=120)
    m = run_unseen_adversaries(_chaser(6), _test_records(3), episodes=6, seed=4, cfg=cfg)
    assert m.episodes == 6
    assert math.isclose(m.fall_pct + m.catch_pct + m.escape_pct, 100.0)
    assert m == run_unseen_adversaries(_chaser(6), _test_records(3), episodes=6, seed=4, cfg=cfg)


def test_unseen_adversaries_rejects_train_or_empty():
    with pytest.raises(ValueError):
        run_unseen_adversaries(_chaser(6), [], episodes=1)
    leaked = _test_records(2)
    leaked[1] = leaked[1].with_split(TRAIN)
    with pytest.raises(ValueError):
        run_unseen_adversaries(_chaser(6), leaked, episodes=1)


def test_learning_curve_and_generation_drops():
    rows = [
        {"generation": "1", "step": "0", "mean_reward": "-1.0", "std_reward": "0.1", "catch_rate": "0.0"},
        {"generation": "1", "step": "10", "mean_reward": "2.0", "std_reward": "0.1", "catch_rate": "0.2"},
        {"generation": "2", "step": "10", "mean_reward": "0.5", "std_reward": "0.1", "catch_rate": "0.1"},
        {"generation": "2", "step": "20", "mean_reward": "3.0", "std_reward": "0.1", "catch_rate": "0.4"},
        {"generation": "3", "step": "20", "mean_reward": "1.0", "std_reward": "0.1", "catch_rate": "0.1"},
        {"generation": "3", "step": "30", "mean_reward": "2.5", "std_reward": "0.1", "catch_rate": "0.3"},
    ]
    curve = learning_curve(rows[::-1])
    assert curve["step"].tolist() == [0, 10, 10, 20, 20, 30]
    assert curve["generation"].tolist() == [1, 1, 2, 2, 3, 3]
    drops = generation_drops(curve)
    assert drops == [
        {"generation": 2, "before": 2.0, "after": 0.5, "end": 3.0, "drop": 1.5, "recovered": True},
        {"generation": 3, "before": 3.0, "after": 1.0, "end": 2.5, "drop": 2.0, "recovered": False},
    ]
    assert generation_drops(learning_curve([])) == []
