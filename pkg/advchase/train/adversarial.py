import logging
import math
from typing import Dict, List, Optional

import numpy as np
import torch
import tqdm

from ..arena.config import ArenaConfig, Mode, SpawnConfig, chaser_arch, default_cone, default_zigzag, escapee_arch
from ..arena.escapees import PolicyEscapee
from ..arena.rollout import rollout
from ..optim.cma import CmaConfig, CmaState, ask, best, cma_init, tell
from ..policy.mlp import MlpPolicy, init_params, param_count
from ..utils.experiment_io import (Checkpoint, MetricsLog, RunLayout, append_metrics, latest_checkpoint,
                                   load_checkpoint, policy_to_dict, save_checkpoint, write_json)
from ..utils.parallel import WorkerPool, shared
from ..utils.seeding import Tag, derive_rng, derive_seed
from .ensemble import TRAIN, UNASSIGNED, AdversaryEnsemble, AdversaryRecord, split_train_test
from .schedule import TrainSchedule

__all__ = ["OPTIM_FIELDS", "PROBE_FIELDS", "chaser_fitness", "learn_to_chase", "learn_to_escape",
           "adversarial_training", "initial_chaser", "open_metrics", "resume_from"]

logger = logging.getLogger(__name__)

OPTIM_FIELDS = ["phase", "generation", "run", "iteration", "step", "best_reward", "median_reward",
                "best_so_far", "sigma", "mean_catches", "fall_rate"]
PROBE_FIELDS = ["generation", "iteration", "step", "mean_reward", "std_reward", "mean_catches",
                "catch_rate", "fall_rate"]

# CMA stream keys: (0, generation) for chase phases, (1, generation, run) for escapee runs
_CHASE_STREAM = 0
_ESCAPE_STREAM = 1


def chaser_fitness(candidate, ensemble: AdversaryEnsemble, schedule: TrainSchedule, rng: np.random.Generator,
                   cfg: ArenaConfig, stats: Optional[dict] = None) -> float:
    """Mean chaser return over ``schedule.rollouts_per_fitness`` episodes.

    Each episode faces an adversary drawn uniformly with replacement from the
    ensemble's training pool; the adversary index and the episode seed both
    come from ``rng``. ``stats`` (if given) receives mean catches and the fall
    fraction of the same episodes.
    """
    pool = ensemble.train_pool()
    assert pool, "empty training pool"
    if isinstance(candidate, MlpPolicy):
        policy = candidate
    else:
        policy = MlpPolicy.from_vector(chaser_arch(schedule.hidden_dims), candidate)
    escapees = [r.escapee() for r in pool]

    total = catches = falls = 0.0
    for _ in range(schedule.rollouts_per_fitness):
        j = int(rng.integers(len(escapees)))
        seed = int(rng.integers(2 ** 63 - 1))
        res = rollout(policy, escapees[j], cfg, Mode.CHASE_TRAINING, seed)
        total += res.chaser_return
        catches += res.catches
        falls += res.fell
    n = schedule.rollouts_per_fitness
    if stats is not None:
        stats["catches"] = catches / n
        stats["fall_rate"] = falls / n
    return total / n


def _chase_task(task):
    vector, seed = task
    ctx = shared()
    stats = {}
    f = chaser_fitness(vector, ctx["ensemble"], ctx["schedule"], np.random.default_rng(seed), ctx["cfg"], stats)
    return f, stats["catches"], stats["fall_rate"]


def _probe_task(task):
    vector, seed = task
    ctx = shared()
    rng = np.random.default_rng(seed)
    pool = ctx["ensemble"].train_pool()
    policy = MlpPolicy.from_vector(chaser_arch(ctx["schedule"].hidden_dims), vector)
    escapee = pool[int(rng.integers(len(pool)))].escapee()
    res = rollout(policy, escapee, ctx["cfg"], Mode.CHASE_TRAINING, int(rng.integers(2 ** 63 - 1)))
    return res.chaser_return, res.catches, res.fell


def _probe(workers, state: CmaState, schedule: TrainSchedule, generation: int, step: int, log: MetricsLog):
    master = schedule.seed
    # common episode seeds for every probe of a generation
    tasks = [(state.mean, derive_seed(master, Tag.PROBE, generation, e)) for e in range(schedule.probe_episodes)]
    out = np.asarray(workers.map(_probe_task, tasks), dtype=np.float64)
    append_metrics(log, {
        "generation": generation, "iteration": state.iteration, "step": step,
        "mean_reward": float(out[:, 0].mean()), "std_reward": float(out[:, 0].std()),
        "mean_catches": float(out[:, 1].mean()), "catch_rate": float((out[:, 1] > 0).mean()),
        "fall_rate": float(out[:, 2].mean()),
    })


@torch.no_grad()
def learn_to_chase(policy: MlpPolicy, ensemble: AdversaryEnsemble, schedule: TrainSchedule, generation: int,
                   cfg: ArenaConfig, iterations: Optional[int] = None, threads: int = 1,
                   logs: Optional[Dict[str, MetricsLog]] = None, state: Optional[CmaState] = None,
                   on_checkpoint=None, step_offset: int = 0) -> MlpPolicy:
    """CMA-ES on the chaser, warm-started at ``policy``; returns the best-seen candidate.

    A fresh optimizer starts at the policy's parameters with sigma reset to
    the schedule's initial sigma and identity covariance. Passing ``state``
    continues an interrupted phase instead. ``on_checkpoint(state)`` is called
    every ``schedule.checkpoint_every`` iterations.
    """
    n_iter = schedule.chaser_iterations[generation - 1] if iterations is None else iterations
    if n_iter == 0:
        return policy
    master = schedule.seed
    if state is None:
        state = cma_init(CmaConfig(dim=param_count(policy.arch), population=schedule.population,
                                   initial_sigma=schedule.initial_sigma, initial_mean=policy.to_vector(),
                                   seed=derive_seed(master, Tag.CMA, _CHASE_STREAM, generation),
                                   max_iterations=n_iter))
    logs = logs or {}
    probing = "probe" in logs and schedule.probe_every > 0 and schedule.probe_episodes > 0
    logger.info(f"generation {generation}: chase phase, {n_iter} iterations against "
                f"{len(ensemble.train_pool())} adversaries (starting at {state.iteration})")

    context = {"ensemble": ensemble, "schedule": schedule, "cfg": cfg}
    with WorkerPool(threads, context) as workers:
        if probing and state.iteration == 0:
            _probe(workers, state, schedule, generation, step_offset, logs["probe"])
        for it in tqdm.tqdm(range(state.iteration, n_iter), desc=f"Chase gen {generation}",
                            initial=state.iteration, total=n_iter):
            xs = ask(state)
            tasks = [(x, derive_seed(master, Tag.CHASE, generation, it, j)) for j, x in enumerate(xs)]
            out = np.asarray(workers.map(_chase_task, tasks), dtype=np.float64)
            tell(state, xs, -out[:, 0])
            if "optim" in logs:
                append_metrics(logs["optim"], {
                    "phase": "chase", "generation": generation, "run": 0, "iteration": state.iteration,
                    "step": step_offset + state.iteration, "best_reward": -state.last_best,
                    "median_reward": -state.last_median, "best_so_far": -state.best_f, "sigma": state.sigma,
                    "mean_catches": float(out[:, 1].mean()), "fall_rate": float(out[:, 2].mean()),
                })
            if probing and (state.iteration % schedule.probe_every == 0 or state.iteration == n_iter):
                _probe(workers, state, schedule, generation, step_offset + state.iteration, logs["probe"])
            if (on_checkpoint is not None and schedule.checkpoint_every
                    and state.iteration % schedule.checkpoint_every == 0 and state.iteration < n_iter):
                on_checkpoint(state)

    best_x, best_f = best(state)
    logger.info(f"generation {generation}: best chaser reward {-best_f:.4f}")
    return MlpPolicy.from_vector(policy.arch, best_x)


def _escape_run(k: int):
    ctx = shared()
    schedule: TrainSchedule = ctx["schedule"]
    generation, chaser, cfg = ctx["generation"], ctx["chaser"], ctx["cfg"]
    master = schedule.seed
    arch = escapee_arch(schedule.hidden_dims)

    lo, hi = schedule.escape_d_min_low, schedule.escape_d_min_high
    d_min = hi - float(derive_rng(master, Tag.D_MIN, generation, k).uniform(0.0, hi - lo))
    state = cma_init(CmaConfig(dim=param_count(arch), population=schedule.population,
                               initial_sigma=schedule.initial_sigma,
                               initial_mean=init_params(arch, derive_rng(master, Tag.INIT, generation, k)),
                               seed=derive_seed(master, Tag.CMA, _ESCAPE_STREAM, generation, k),
                               max_iterations=schedule.escapee_iterations))

    rows = []
    with torch.no_grad():
        for it in tqdm.tqdm(range(schedule.escapee_iterations), desc=f"Escape gen {generation} run {k}",
                            disable=not ctx["progress"]):
            xs = ask(state)
            # one episode seed per iteration, shared by the whole population
            seed = derive_seed(master, Tag.ESCAPE, generation, k, it)
            results = [rollout(chaser, PolicyEscapee(MlpPolicy.from_vector(arch, x)), cfg,
                               Mode.ESCAPE_TRAINING, seed, d_min=d_min) for x in xs]
            tell(state, xs, [-r.escapee_return for r in results])
            rows.append({
                "phase": "escape", "generation": generation, "run": k, "iteration": state.iteration,
                "step": it + 1, "best_reward": -state.last_best, "median_reward": -state.last_median,
                "best_so_far": -state.best_f, "sigma": state.sigma,
                "mean_catches": float(np.mean([r.catches for r in results])),
                "fall_rate": float(np.mean([r.fell for r in results])),
            })

    best_x, _ = best(state)
    policy = MlpPolicy.from_vector(arch, best_x if best_x is not None else state.mean)
    return AdversaryRecord(f"g{generation}-a{k}", generation, d_min, UNASSIGNED, policy), rows


def learn_to_escape(chaser: MlpPolicy, schedule: TrainSchedule, generation: int, cfg: ArenaConfig,
                    threads: int = 1, log: Optional[MetricsLog] = None) -> List[AdversaryRecord]:
    """Train ``adversaries_per_generation`` escapees against the frozen chaser.

    Every run draws its own catch radius, initial weights, optimizer stream
    and episode seeds from (master seed, generation, run index) only, so runs
    do not see each other and their order does not matter. Records come back
    without a Train/Test split.
    """
    K = schedule.adversaries_per_generation
    logger.info(f"generation {generation}: training {K} escapees, {schedule.escapee_iterations} iterations each")
    context = {"chaser": chaser, "schedule": schedule, "cfg": cfg, "generation": generation,
               "progress": threads == 1}
    with WorkerPool(threads, context) as workers:
        out = workers.map(_escape_run, range(K))
    records = []
    for record, rows in out:
        records.append(record)
        if log is not None:
            for row in rows:
                append_metrics(log, row)
        best_return = rows[-1]["best_so_far"] if rows else math.nan
        logger.info(f"escapee {record.id}: d_min {record.d_min_train:.3f}, best return {best_return:.4f}")
    return records


def initial_chaser(schedule: TrainSchedule) -> MlpPolicy:
    arch = chaser_arch(schedule.hidden_dims)
    return MlpPolicy.from_vector(arch, init_params(arch, derive_rng(schedule.seed, Tag.INIT, 0, 0)))


def open_metrics(layout: RunLayout) -> Dict[str, MetricsLog]:
    return {"optim": MetricsLog(layout.metrics / "optim.csv", OPTIM_FIELDS),
            "probe": MetricsLog(layout.metrics / "probe.csv", PROBE_FIELDS)}


def resume_from(layout: RunLayout, logs: Dict[str, MetricsLog]) -> Optional[Checkpoint]:
    path = latest_checkpoint(layout)
    if path is None:
        return None
    cp = load_checkpoint(path)
    for name, log in logs.items():
        log.truncate(cp.metrics_rows.get(name, 0))
    logger.info(f"resuming from {path} (generation {cp.generation}, phase {cp.phase})")
    return cp


def _row_counts(logs):
    return {name: len(log) for name, log in logs.items()}


def adversarial_training(schedule: TrainSchedule, cfg: Optional[ArenaConfig] = None, run_dir=None,
                         threads: int = 1, resume: bool = False, keep_history: bool = True,
                         spawns: Optional[Dict[str, SpawnConfig]] = None):
    """Generation loop: chase against the ensemble, then grow it with new escapees.

    Generation 1 chases the static adversary placed by the zigzag rule, later
    generations the learned adversaries placed by the cone rule. Escapees are
    trained after every generation but the last. With ``run_dir`` a checkpoint
    is written after each chase phase and each generation, metrics go to
    ``<run_dir>/metrics`` and the final policy and ensemble are saved.

    Returns (chaser policy, ensemble).
    """
    cfg = cfg or ArenaConfig()
    spawns = dict(spawns or {})
    zigzag = spawns.get("zigzag", default_zigzag())
    cone = spawns.get("cone", default_cone())
    layout = RunLayout(run_dir) if run_dir is not None else None
    logs = open_metrics(layout) if layout is not None else {}

    chaser = initial_chaser(schedule)
    ensemble = AdversaryEnsemble(keep_history=keep_history)
    start, chase_done, cma_state = 1, False, None
    cp = resume_from(layout, logs) if (resume and layout is not None) else None
    if cp is not None:
        chaser, ensemble = cp.chaser, cp.ensemble
        if cp.phase == "end":
            start = cp.generation + 1
        elif cp.phase == "chase":
            start, chase_done = cp.generation, True
        else:
            start, cma_state = cp.generation, cp.cma_state

    def save(generation, phase, iteration=None, state=None, policy=None):
        if layout is None:
            return
        save_checkpoint(layout.checkpoint_path(generation, "chase" if state is not None else phase, iteration),
                        Checkpoint(generation, phase, chaser if policy is None else policy, ensemble, state,
                                   _row_counts(logs)))

    for g in range(start, schedule.generations + 1):
        if not chase_done:
            warm = chaser
            chaser = learn_to_chase(
                warm, ensemble, schedule, g, cfg.with_spawn(zigzag if g == 1 else cone), threads=threads,
                logs=logs, state=cma_state, step_offset=sum(schedule.chaser_iterations[:g - 1]),
                on_checkpoint=lambda st, g=g, warm=warm: save(g, "chase-partial", st.iteration, st, warm))
            save(g, "chase")
        chase_done, cma_state = False, None

        if g < schedule.generations:
            records = learn_to_escape(chaser, schedule, g, cfg.with_spawn(cone), threads=threads,
                                      log=logs.get("optim"))
            if len(records) > 1:
                records = split_train_test(records, derive_rng(schedule.seed, Tag.SPLIT, g),
                                           n_test=schedule.test_per_generation)
            else:
                records = [r.with_split(TRAIN) for r in records]
            ensemble.add(records)
            logger.info(f"generation {g}: ensemble has {len(ensemble.train_records())} train / "
                        f"{len(ensemble.test_records())} test adversaries")
        save(g, "end")

    if layout is not None:
        write_json(layout.policy, policy_to_dict(chaser))
        write_json(layout.ensemble, ensemble.to_dict())
    return chaser, ensemble
