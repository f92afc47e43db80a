"""Run directory persistence.

Layout of one run::

    <run>/manifest.json            resolved configuration, seed, artifact paths
    <run>/policy.json              final chaser policy
    <run>/ensemble.json            adversary ensemble (adversarial / single modes)
    <run>/checkpoints/gen-<g>.json          end of generation g
    <run>/checkpoints/gen-<g>-chase.json    after the chase phase of generation g
    <run>/checkpoints/gen-<g>-chase-<i>.json  mid-phase, after CMA iteration i
    <run>/metrics/*.csv            headered CSV, one row per iteration / probe
    <run>/trajectories/ep-<i>.csv  one row per step, plus index.csv

Checkpoints are JSON documents ``{"schema_version", "checksum", "payload"}``
where the checksum is SHA-256 over the canonical JSON of the payload. Floats
are written with ``repr`` and therefore parse back to the identical double.
"""
import csv
import datetime
import hashlib
import io
import json
import logging
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from ..policy.mlp import MlpArch, MlpPolicy

__all__ = [
    "SCHEMA_VERSION", "CheckpointError", "SchemaVersionError", "CheckpointCorruptError",
    "RunLayout", "RunManifest", "Checkpoint", "save_checkpoint", "load_checkpoint",
    "latest_checkpoint", "MetricsLog", "append_metrics", "export_trajectories", "load_trajectory",
    "load_index", "policy_to_dict", "policy_from_dict", "cma_state_to_dict", "cma_state_from_dict",
    "write_json", "read_json", "write_csv", "TRAJECTORY_HEADER",
]

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class CheckpointError(Exception):
    pass


class SchemaVersionError(CheckpointError):
    pass


class CheckpointCorruptError(CheckpointError):
    pass


def _atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        f.write(text)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def write_json(path, obj):
    _atomic_write(path, json.dumps(obj, indent=1, sort_keys=True) + "\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


class RunLayout:
    def __init__(self, root):
        self.root = Path(root)

    @property
    def manifest(self):
        return self.root / "manifest.json"

    @property
    def policy(self):
        return self.root / "policy.json"

    @property
    def ensemble(self):
        return self.root / "ensemble.json"

    @property
    def checkpoints(self):
        return self.root / "checkpoints"

    @property
    def metrics(self):
        return self.root / "metrics"

    @property
    def trajectories(self):
        return self.root / "trajectories"

    def checkpoint_path(self, generation: int, phase: str, iteration: Optional[int] = None) -> Path:
        name = f"gen-{generation}"
        if phase != "end":
            name += f"-{phase}"
        if iteration is not None:
            name += f"-{iteration}"
        return self.checkpoints / f"{name}.json"

    def is_empty(self) -> bool:
        return not self.root.exists() or not any(self.root.iterdir())


# ---------------------------------------------------------------- encoders

def policy_to_dict(policy: MlpPolicy) -> dict:
    arch = policy.arch
    return {
        "arch": {"input_dim": arch.input_dim, "hidden_dims": list(arch.hidden_dims),
                 "output_dim": arch.output_dim},
        "params": policy.to_vector().tolist(),
    }


def policy_from_dict(d: dict) -> MlpPolicy:
    arch = MlpArch(d["arch"]["input_dim"], tuple(d["arch"]["hidden_dims"]), d["arch"]["output_dim"])
    return MlpPolicy.from_vector(arch, np.asarray(d["params"], dtype=np.float64))


def _array(a):
    return None if a is None else np.asarray(a, dtype=np.float64).tolist()


def cma_state_to_dict(state) -> dict:
    p = state.params
    return {
        "params": {"lam": p.lam, "mu": p.mu, "weights": _array(p.weights), "mueff": p.mueff,
                   "cc": p.cc, "cs": p.cs, "c1": p.c1, "cmu": p.cmu, "damps": p.damps,
                   "chi_n": p.chi_n, "eigen_gap": p.eigen_gap},
        "mean": _array(state.mean), "sigma": state.sigma, "C": _array(state.C),
        "ps": _array(state.ps), "pc": _array(state.pc), "B": _array(state.B), "D": _array(state.D),
        "eigen_iteration": state.eigen_iteration, "iteration": state.iteration,
        "best_x": _array(state.best_x), "best_f": state.best_f,
        "last_best": state.last_best, "last_median": state.last_median,
        "events": [list(e) for e in state.events],
        "rng": state.rng.bit_generator.state,
    }


def cma_state_from_dict(d: dict):
    from ..optim.cma import CmaState, StrategyParams
    p = dict(d["params"])
    p["weights"] = np.asarray(p["weights"], dtype=np.float64)
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = d["rng"]
    arr = lambda k: np.asarray(d[k], dtype=np.float64)  # noqa: E731
    return CmaState(
        params=StrategyParams(**p), mean=arr("mean"), sigma=d["sigma"], C=arr("C"),
        ps=arr("ps"), pc=arr("pc"), B=arr("B"), D=arr("D"), eigen_iteration=d["eigen_iteration"],
        rng=rng, iteration=d["iteration"],
        best_x=None if d["best_x"] is None else arr("best_x"), best_f=d["best_f"],
        last_best=d["last_best"], last_median=d["last_median"],
        events=[tuple(e) for e in d["events"]],
    )


# ---------------------------------------------------------------- manifest

@dataclass
class RunManifest:
    config: dict
    master_seed: int
    mode: str
    artifacts: Dict[str, str] = field(default_factory=dict)
    created: str = field(default_factory=lambda: datetime.datetime.now(datetime.timezone.utc).isoformat())
    version: str = ""
    schema_version: int = SCHEMA_VERSION

    def save(self, path):
        write_json(path, self.__dict__)

    @classmethod
    def load(cls, path) -> "RunManifest":
        d = read_json(path)
        if d.get("schema_version") != SCHEMA_VERSION:
            raise SchemaVersionError(f"{path}: manifest schema_version {d.get('schema_version')!r}, "
                                     f"this build reads {SCHEMA_VERSION}")
        return cls(**d)


# ---------------------------------------------------------------- checkpoints

@dataclass
class Checkpoint:
    """Everything needed to continue a run from a stage boundary.

    ``phase`` is "chase" (chase phase of ``generation`` done), "end"
    (generation done) or "chase-partial" (mid chase phase, ``cma_state``
    holds the optimizer after ``cma_state.iteration`` iterations).
    """
    generation: int
    phase: str
    chaser: MlpPolicy
    ensemble: object
    cma_state: object = None
    metrics_rows: Dict[str, int] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION


def _canonical(payload) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _document(payload) -> str:
    return json.dumps({
        "schema_version": SCHEMA_VERSION,
        "checksum": hashlib.sha256(_canonical(payload)).hexdigest(),
        "payload": payload,
    }, sort_keys=True, separators=(",", ":")) + "\n"


def save_checkpoint(path, cp: Checkpoint):
    payload = {
        "generation": cp.generation,
        "phase": cp.phase,
        "chaser": policy_to_dict(cp.chaser),
        "ensemble": cp.ensemble.to_dict(),
        "cma_state": None if cp.cma_state is None else cma_state_to_dict(cp.cma_state),
        "metrics_rows": dict(cp.metrics_rows),
    }
    _atomic_write(path, _document(payload))
    logger.info(f"checkpoint written: {path}")


def load_checkpoint(path) -> Checkpoint:
    from ..train.ensemble import AdversaryEnsemble
    try:
        with open(path, "rb") as f:
            doc = json.loads(f.read().decode("utf-8"))
        payload = doc["payload"]
        checksum = doc["checksum"]
        version = doc["schema_version"]
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as e:
        raise CheckpointCorruptError(f"{path}: unreadable checkpoint ({e})") from e
    if hashlib.sha256(_canonical(payload)).hexdigest() != checksum:
        raise CheckpointCorruptError(f"{path}: checksum mismatch")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"{path}: schema_version {version!r}, this build reads {SCHEMA_VERSION}")
    try:
        return Checkpoint(
            generation=payload["generation"],
            phase=payload["phase"],
            chaser=policy_from_dict(payload["chaser"]),
            ensemble=AdversaryEnsemble.from_dict(payload["ensemble"]),
            cma_state=None if payload["cma_state"] is None else cma_state_from_dict(payload["cma_state"]),
            metrics_rows=dict(payload["metrics_rows"]),
        )
    except (ValueError, KeyError, TypeError) as e:
        raise CheckpointCorruptError(f"{path}: malformed payload ({e})") from e


_CKPT_RE = re.compile(r"^gen-(\d+)(?:-(chase))?(?:-(\d+))?\.json$")


def _stage_key(name):
    m = _CKPT_RE.match(name)
    if m is None:
        return None
    generation = int(m.group(1))
    if m.group(3) is not None:
        return (generation, 0, int(m.group(3)))
    return (generation, 1 if m.group(2) else 2, 0)


def latest_checkpoint(layout: RunLayout) -> Optional[Path]:
    if not layout.checkpoints.exists():
        return None
    keyed = [(_stage_key(p.name), p) for p in layout.checkpoints.iterdir()]
    keyed = [(k, p) for k, p in keyed if k is not None]
    if not keyed:
        return None
    return max(keyed)[1]


# ---------------------------------------------------------------- metrics

def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


class MetricsLog:
    """Append-only headered CSV with one writer.

    Every row is written in a single call, flushed and fsynced under a lock,
    so concurrent producers in one process never interleave and a crash
    leaves at most one partial trailing line, which readers drop.
    """

    def __init__(self, path, fields: List[str]):
        self.path = Path(path)
        self.fields = list(fields)
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if not self.path.exists() or self.path.stat().st_size == 0:
            _atomic_write(self.path, ",".join(self.fields) + "\n")

    def append(self, record: dict):
        unknown = set(record) - set(self.fields)
        if unknown:
            raise ValueError(f"unknown metric fields {sorted(unknown)} for {self.path.name}")
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow([_fmt(record.get(k, "")) for k in self.fields])
        line = buf.getvalue()
        with self._lock:
            with open(self.path, "a", encoding="utf-8", newline="") as f:
                f.write(line)
                f.flush()
                os.fsync(f.fileno())

    def _complete_lines(self):
        with open(self.path, "r", encoding="utf-8", newline="") as f:
            text = f.read()
        lines = text.split("\n")
        # the last element is "" for a complete file, a partial row otherwise
        return lines[:-1]

    def rows(self) -> List[dict]:
        lines = self._complete_lines()
        return list(csv.DictReader(lines))

    def __len__(self):
        return max(0, len(self._complete_lines()) - 1)

    def truncate(self, n_rows: int):
        with self._lock:
            lines = self._complete_lines()
            _atomic_write(self.path, "\n".join(lines[:n_rows + 1]) + "\n")


def append_metrics(log: MetricsLog, record: dict):
    log.append(record)


# ---------------------------------------------------------------- trajectories

TRAJECTORY_HEADER = ["t", "chaser_x", "chaser_y", "chaser_phi", "chaser_v", "chaser_omega",
                     "escapee_x", "escapee_y", "escapee_theta", "distance",
                     "chaser_reward", "escapee_reward", "caught", "fell", "done"]

INDEX_HEADER = ["episode", "file", "steps", "catches", "fell", "escaped", "outcome",
                "chaser_return", "escapee_return", "seed"]


def _trajectory_text(result) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    for r in result.trajectory:
        c, e, o = r.chaser, r.escapee, r.outcome
        w.writerow([r.t] + [_fmt(v) for v in (c.x, c.y, c.phi, c.v, c.omega, e.x, e.y, e.theta,
                                              o.distance, o.chaser_reward, o.escapee_reward)]
                   + [int(o.caught), int(o.fell), int(o.done)])
    return buf.getvalue()


def export_trajectories(path, episodes, ids=None):
    """One CSV per recorded episode plus ``index.csv`` with outcome flags."""
    path = Path(path)
    ids = list(range(len(episodes))) if ids is None else list(ids)
    index = io.StringIO()
    w = csv.writer(index, lineterminator="\n")
    w.writerow(INDEX_HEADER)
    for ep_id, result in zip(ids, episodes):
        if result.trajectory is None:
            raise ValueError(f"episode {ep_id} was not recorded")
        name = f"ep-{ep_id:04d}.csv"
        _atomic_write(path / name, _trajectory_text(result))
        w.writerow([ep_id, name, result.steps, result.catches, int(result.fell),
                    int(result.escapee_escaped), result.outcome, _fmt(result.chaser_return),
                    _fmt(result.escapee_return), result.seed])
    _atomic_write(path / "index.csv", index.getvalue())


def load_trajectory(path) -> List[dict]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    out = []
    for row in rows:
        out.append({k: (int(v) if k in ("t", "caught", "fell", "done") else float(v)) for k, v in row.items()})
    return out


def load_index(path) -> List[dict]:
    with open(Path(path) / "index.csv", "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def write_csv(path, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    _atomic_write(path, buf.getvalue())
