"""Desk-scale orderings between the adversarial chaser and its baselines.

Every test here trains five seeds of every mode at the desk preset, which
takes hours; run with ``pytest --runslow tests/test_acceptance.py``.
"""
import numpy as np
import pytest

from advchase.arena.config import ArenaConfig
from advchase.evaluation.suites import (generation_drops, learning_curve, run_cross_matrix, run_sine_benchmark,
                                        run_unseen_adversaries, standard_environments)
from advchase.train.adversarial import adversarial_training, open_metrics
from advchase.train.baselines import train_baseline
from advchase.train.schedule import desk_schedule
from advchase.utils.experiment_io import RunLayout

pytestmark = pytest.mark.slow

SEEDS = (0, 1, 2, 3, 4)
BASELINES = ("cone", "circular", "zigzag")
HOME = {"adversary": "adversary", "cone": "cone", "circular": "circular", "zigzag": "zigzag", "single": None}
EPISODES = 100


@pytest.fixture(scope="module")
def desk_runs(tmp_path_factory):
    cfg = ArenaConfig()
    root = tmp_path_factory.mktemp("desk")
    runs = {}
    for seed in SEEDS:
        schedule = desk_schedule(seed=seed)
        run_dir = root / f"adversary-{seed}"
        policy, ensemble = adversarial_training(schedule, cfg, run_dir, threads=0)
        policies = {"adversary": policy}
        for kind in BASELINES + ("single",):
            policies[kind] = train_baseline(kind, schedule, cfg, root / f"{kind}-{seed}", threads=0)
        runs[seed] = (run_dir, policies, ensemble)
    return cfg, runs


def _rows(run_dir, name):
    return open_metrics(RunLayout(run_dir))[name].rows()


def test_first_generation_learns(desk_runs):
    _, runs = desk_runs
    first, last, rising = [], [], 0
    for run_dir, _, _ in runs.values():
        chase = [r for r in _rows(run_dir, "optim") if r["phase"] == "chase" and r["generation"] == "1"]
        first.append(float(chase[0]["median_reward"]))
        last.append(float(chase[-1]["median_reward"]))
        probes = [r for r in _rows(run_dir, "probe") if r["generation"] == "1"]
        rising += float(probes[-1]["mean_catches"]) > float(probes[0]["mean_catches"])
    # interquartile ranges over seeds do not overlap
    assert np.percentile(first, 75) < np.percentile(last, 25)
    assert rising >= 4


def test_new_adversaries_drop_then_recover(desk_runs):
    _, runs = desk_runs
    good = 0
    for run_dir, _, _ in runs.values():
        drops = generation_drops(learning_curve(_rows(run_dir, "probe")))
        assert [d["generation"] for d in drops] == [2, 3]
        good += all(d["drop"] > 0 and d["recovered"] for d in drops)
    assert good >= 3


def test_ensemble_beats_single_on_held_out_adversaries(desk_runs):
    cfg, runs = desk_runs
    wins = 0
    for seed, (_, policies, ensemble) in runs.items():
        test_set = ensemble.test_records()
        assert len(test_set) == 8
        catch = {name: run_unseen_adversaries(p, test_set, EPISODES, seed, cfg, threads=0).catch_pct
                 for name, p in policies.items()}
        wins += all(catch["adversary"] > catch[other] for other in BASELINES + ("single",))
    assert wins >= 4


def test_adversarial_row_dominates_cross_matrix(desk_runs):
    cfg, runs = desk_runs
    wins = 0
    for seed, (_, policies, ensemble) in runs.items():
        matrix = run_cross_matrix(policies, standard_environments(ensemble), HOME, EPISODES, seed, cfg, threads=0)
        for j, env in enumerate(matrix.cols):
            assert matrix.normalized[matrix.rows.index(env), j] == 1.0
        average = dict(zip(matrix.rows, matrix.average))
        wins += all(average["adversary"] >= average[other] for other in BASELINES + ("single",))
    assert wins >= 4


def test_ensemble_beats_single_on_sine_targets(desk_runs):
    cfg, runs = desk_runs
    wins = 0
    for seed, (_, policies, _) in runs.items():
        adversary, _ = run_sine_benchmark(policies["adversary"], EPISODES, seed, cfg, threads=0)
        single, _ = run_sine_benchmark(policies["single"], EPISODES, seed, cfg, threads=0)
        for m in (adversary, single):
            assert m.fall_pct + m.catch_pct + m.escape_pct == pytest.approx(100.0)
        wins += adversary.catch_pct > single.catch_pct
    assert wins >= 4
