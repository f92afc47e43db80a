import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
import tqdm

from ..arena.config import ArenaConfig, Mode, SpawnConfig, default_circular, default_cone, default_zigzag
from ..arena.escapees import SineTarget, StaticEscapee
from ..arena.rollout import EpisodeResult, rollout
from ..policy.mlp import MlpPolicy
from ..train.ensemble import TEST, AdversaryEnsemble, AdversaryRecord
from ..utils.parallel import WorkerPool, shared
from ..utils.seeding import Tag, derive_seed
from .metrics import ChaseMetrics, CrossMatrix

__all__ = ["ChaseEnvironment", "standard_environments", "sine_environment", "sine_arena", "play_episode",
           "run_episodes", "run_sine_benchmark", "run_cross_matrix", "run_unseen_adversaries",
           "learning_curve", "generation_drops"]

logger = logging.getLogger(__name__)

# evaluation streams under Tag.EVAL
_CROSS, _SINE, _UNSEEN = 0, 1, 2


@dataclass(frozen=True)
class ChaseEnvironment:
    """Spawn rule plus the escapees an episode draws from; no escapees means sine targets."""
    name: str
    spawn: SpawnConfig
    escapees: Optional[Tuple] = None

    def draw(self, rng: np.random.Generator):
        if self.escapees is None:
            return SineTarget.sample(rng)
        return self.escapees[int(rng.integers(len(self.escapees)))]


def standard_environments(ensemble: Optional[AdversaryEnsemble] = None,
                          spawns: Optional[Dict[str, SpawnConfig]] = None) -> List[ChaseEnvironment]:
    """cone / circular / zigzag with a static escapee, plus "adversary" when an ensemble is given."""
    spawns = dict(spawns or {})
    cone = spawns.get("cone", default_cone())
    envs = [ChaseEnvironment("cone", cone, (StaticEscapee(),)),
            ChaseEnvironment("circular", spawns.get("circular", default_circular()), (StaticEscapee(),)),
            ChaseEnvironment("zigzag", spawns.get("zigzag", default_zigzag()), (StaticEscapee(),))]
    if ensemble is not None:
        learned = ensemble.learned_train_records()
        if not learned:
            raise ValueError("ensemble holds no learned Train adversaries")
        envs.append(ChaseEnvironment("adversary", cone, tuple(r.escapee() for r in learned)))
    return envs


def sine_environment() -> ChaseEnvironment:
    return ChaseEnvironment("sine", default_cone(), None)


def sine_arena(cfg: ArenaConfig) -> ArenaConfig:
    return replace(cfg, max_steps=10000, escape_distance=3.0)


@torch.no_grad()
def play_episode(policy: MlpPolicy, env: ChaseEnvironment, cfg: ArenaConfig, mode: Mode, seed: int,
                 record: bool = False) -> EpisodeResult:
    rng = np.random.default_rng(seed)
    escapee = env.draw(rng)
    return rollout(policy, escapee, cfg.with_spawn(env.spawn), mode, int(rng.integers(2 ** 63 - 1)), record=record)


def _episode_task(task):
    policy_name, env_name, mode, seed, record = task
    ctx = shared()
    return play_episode(ctx["policies"][policy_name], ctx["envs"][env_name], ctx["cfg"], mode, seed, record)


def run_episodes(policies: Dict[str, MlpPolicy], envs: Sequence[ChaseEnvironment], cfg: ArenaConfig, tasks,
                 threads: int = 1, desc: str = "Evaluating") -> List[EpisodeResult]:
    context = {"policies": dict(policies), "envs": {e.name: e for e in envs}, "cfg": cfg}
    tasks = list(tasks)
    with WorkerPool(threads, context) as workers:
        if workers.threads > 1:
            return workers.map(_episode_task, tasks)
        return [_episode_task(t) for t in tqdm.tqdm(tasks, desc=desc)]


def run_sine_benchmark(policy: MlpPolicy, n: int = 100, seed: int = 0, cfg: Optional[ArenaConfig] = None,
                       threads: int = 1, record: bool = False) -> Tuple[ChaseMetrics, List[EpisodeResult]]:
    """Chase targets running along random sine curves; episode i uses seed (seed, i) whatever the policy."""
    cfg = sine_arena(cfg or ArenaConfig())
    env = sine_environment()
    tasks = [("policy", env.name, Mode.EVALUATION, derive_seed(seed, Tag.EVAL, _SINE, i), record) for i in range(n)]
    episodes = run_episodes({"policy": policy}, [env], cfg, tasks, threads, desc="Sine benchmark")
    return ChaseMetrics.from_episodes(episodes), episodes


def run_cross_matrix(policies: Dict[str, MlpPolicy], environments: Sequence[ChaseEnvironment],
                     home: Dict[str, Optional[str]], episodes: int = 100, seed: int = 0,
                     cfg: Optional[ArenaConfig] = None, threads: int = 1) -> CrossMatrix:
    """Mean training-mode chaser reward of every policy in every environment.

    Every row of one column replays the same episode seeds. ``home`` maps a
    policy to the environment it was trained in, or None for policies that
    have no column of their own.
    """
    cfg = cfg or ArenaConfig()
    cols = [e.name for e in environments]
    rows = list(policies)
    unknown = set(home) - set(rows)
    if unknown:
        raise ValueError(f"home given for unknown policies {sorted(unknown)}")
    # validate the pairing before spending any rollouts
    CrossMatrix(rows, cols, np.ones((len(rows), len(cols))), {r: home.get(r) for r in rows})

    tasks = [(name, env, Mode.CHASE_TRAINING, derive_seed(seed, Tag.EVAL, _CROSS, j, e), False)
             for name in rows for j, env in enumerate(cols) for e in range(episodes)]
    results = run_episodes(policies, environments, cfg, tasks, threads, desc="Cross matrix")
    returns = np.array([r.chaser_return for r in results]).reshape(len(rows), len(cols), episodes)
    return CrossMatrix(rows, cols, returns.mean(axis=2), {r: home.get(r) for r in rows})


def run_unseen_adversaries(policy: MlpPolicy, test_set: Sequence[AdversaryRecord], episodes: int = 100,
                           seed: int = 0, cfg: Optional[ArenaConfig] = None, threads: int = 1,
                           spawn: Optional[SpawnConfig] = None) -> ChaseMetrics:
    if not test_set:
        raise ValueError("test set is empty")
    leaked = [r.id for r in test_set if r.split != TEST]
    if leaked:
        raise ValueError(f"adversaries {leaked} are not held out for testing")
    cfg = cfg or ArenaConfig()
    env = ChaseEnvironment("unseen", spawn or default_cone(), tuple(r.escapee() for r in test_set))
    tasks = [("policy", env.name, Mode.EVALUATION, derive_seed(seed, Tag.EVAL, _UNSEEN, e), False)
             for e in range(episodes)]
    results = run_episodes({"policy": policy}, [env], cfg, tasks, threads, desc="Unseen adversaries")
    return ChaseMetrics.from_episodes(results)


def learning_curve(rows: Sequence[dict]) -> Dict[str, np.ndarray]:
    """Probe log rows (as read from CSV) to aligned arrays ordered by step."""
    if not rows:
        return {k: np.zeros(0) for k in ("step", "generation", "mean_reward", "std_reward", "catch_rate")}
    rows = sorted(rows, key=lambda r: (int(r["step"]), int(r["generation"])))
    return {
        "step": np.array([int(r["step"]) for r in rows]),
        "generation": np.array([int(r["generation"]) for r in rows]),
        "mean_reward": np.array([float(r["mean_reward"]) for r in rows]),
        "std_reward": np.array([float(r["std_reward"]) for r in rows]),
        "catch_rate": np.array([float(r["catch_rate"]) for r in rows]),
    }


def generation_drops(curve: Dict[str, np.ndarray]) -> List[dict]:
    """Probe reward around every generation boundary.

    ``before`` is the last probe of the previous generation, ``after`` the
    first probe of the new one (the old chaser against the grown ensemble)
    and ``end`` its last probe.
    """
    gens = curve["generation"]
    reward = curve["mean_reward"]
    out = []
    for g in sorted(set(gens.tolist()))[1:]:
        prev = np.flatnonzero(gens == g - 1)
        cur = np.flatnonzero(gens == g)
        if len(prev) == 0 or len(cur) == 0:
            continue
        before, after, end = float(reward[prev[-1]]), float(reward[cur[0]]), float(reward[cur[-1]])
        out.append({"generation": int(g), "before": before, "after": after, "end": end,
                    "drop": before - after, "recovered": end >= before})
    return out
