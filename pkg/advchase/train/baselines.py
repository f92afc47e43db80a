import logging
from dataclasses import replace
from typing import Dict, Optional

from ..arena.config import ArenaConfig, SpawnConfig, default_circular, default_cone, default_zigzag
from ..policy.mlp import MlpPolicy
from ..utils.experiment_io import Checkpoint, RunLayout, policy_to_dict, save_checkpoint, write_json
from .adversarial import resume_from, adversarial_training, initial_chaser, learn_to_chase, open_metrics
from .ensemble import AdversaryEnsemble
from .schedule import TrainSchedule

__all__ = ["BASELINES", "train_baseline"]

logger = logging.getLogger(__name__)

BASELINES = ("cone", "circular", "zigzag", "single")


def train_baseline(kind: str, schedule: TrainSchedule, cfg: Optional[ArenaConfig] = None, run_dir=None,
                   threads: int = 1, resume: bool = False,
                   spawns: Optional[Dict[str, SpawnConfig]] = None) -> MlpPolicy:
    """Train a comparison chaser.

    cone / circular / zigzag: one chase phase against the static escapee
    placed and respawned by the named rule, with the whole chaser budget of
    the schedule. single: the generation loop with one new escapee per
    generation, and the chaser only ever facing the newest one.
    """
    if kind not in BASELINES:
        raise ValueError(f"unknown baseline {kind!r}, expected one of {BASELINES}")
    cfg = cfg or ArenaConfig()
    spawns = dict(spawns or {})
    if kind == "single":
        policy, _ = adversarial_training(replace(schedule, adversaries_per_generation=1),
                                         cfg, run_dir, threads=threads, resume=resume, keep_history=False,
                                         spawns=spawns)
        return policy

    spawn = spawns.get(kind) or {"cone": default_cone, "circular": default_circular,
                                 "zigzag": default_zigzag}[kind]()
    layout = RunLayout(run_dir) if run_dir is not None else None
    logs = open_metrics(layout) if layout is not None else {}
    chaser, ensemble, state = initial_chaser(schedule), AdversaryEnsemble(), None
    cp = resume_from(layout, logs) if (resume and layout is not None) else None
    if cp is not None:
        chaser, ensemble, state = cp.chaser, cp.ensemble, cp.cma_state

    if cp is None or cp.phase == "chase-partial":
        def save(phase, st=None, policy=None):
            if layout is None:
                return
            save_checkpoint(layout.checkpoint_path(1, "chase" if st is not None else phase,
                                                   None if st is None else st.iteration),
                            Checkpoint(1, phase, policy, ensemble, st, {n: len(log) for n, log in logs.items()}))

        warm = chaser
        logger.info(f"{kind} baseline: {schedule.total_chaser_iterations} chase iterations")
        chaser = learn_to_chase(warm, ensemble, schedule, 1, cfg.with_spawn(spawn),
                                iterations=schedule.total_chaser_iterations, threads=threads, logs=logs,
                                state=state, on_checkpoint=lambda st: save("chase-partial", st, warm))
        save("end", policy=chaser)

    if layout is not None:
        write_json(layout.policy, policy_to_dict(chaser))
    return chaser
