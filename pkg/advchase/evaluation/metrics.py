import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Sequence

import numpy as np
from texttable import Texttable

from ..arena.rollout import OUTCOMES, EpisodeResult

__all__ = ["METRIC_COLUMNS", "ChaseMetrics", "CrossMatrix", "metrics_table", "cross_matrix_table"]

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["fall_pct", "catch_pct", "escape_pct", "mean_distance", "mean_speed", "mean_heading_error"]


@dataclass(frozen=True)
class ChaseMetrics:
    fall_pct: float
    catch_pct: float
    escape_pct: float
    mean_distance: float
    mean_speed: float
    mean_heading_error: float
    episodes: int

    @classmethod
    def from_episodes(cls, episodes: Sequence[EpisodeResult]) -> "ChaseMetrics":
        """Outcome percentages plus per-episode step averages averaged over episodes."""
        if not episodes:
            raise ValueError("no episodes to aggregate")
        counts = {o: 0 for o in OUTCOMES}
        for ep in episodes:
            if ep.outcome not in counts:
                raise ValueError(f"episode outcome {ep.outcome!r} not in {OUTCOMES}")
            counts[ep.outcome] += 1
        n = len(episodes)
        pct = {o: 100.0 * c / n for o, c in counts.items()}
        return cls(
            fall_pct=pct["fall"],
            catch_pct=pct["catch"],
            escape_pct=pct["escape"],
            mean_distance=float(np.mean([ep.mean_distance for ep in episodes])),
            mean_speed=float(np.mean([ep.mean_speed for ep in episodes])),
            mean_heading_error=float(np.mean([ep.mean_heading_error for ep in episodes])),
            episodes=n,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def metrics_table(named: Dict[str, ChaseMetrics]) -> str:
    table = Texttable(max_width=0)
    table.set_deco(Texttable.HEADER)
    table.set_cols_dtype(["t"] + ["f"] * 6 + ["i"])
    table.set_precision(2)
    table.add_rows([["policy", "fall %", "catch %", "escape %", "distance", "speed", "theta", "episodes"]]
                   + [[name] + [getattr(m, c) for c in METRIC_COLUMNS] + [m.episodes] for name, m in named.items()])
    return table.draw()


@dataclass
class CrossMatrix:
    """Mean chaser reward of every policy in every environment.

    ``normalized`` divides each column by the reward of the policy trained in
    that environment; ``average`` is the row mean of the normalized entries.
    """
    rows: List[str]
    cols: List[str]
    raw: np.ndarray
    home: Dict[str, str]

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=np.float64)
        if self.raw.shape != (len(self.rows), len(self.cols)):
            raise ValueError(f"raw rewards have shape {self.raw.shape}, expected {(len(self.rows), len(self.cols))}")
        owners = {}
        for policy, env in self.home.items():
            if env is None:
                continue
            if env not in self.cols:
                raise ValueError(f"home environment {env!r} of {policy!r} is not evaluated")
            if env in owners:
                raise ValueError(f"environment {env!r} is home to both {owners[env]!r} and {policy!r}")
            owners[env] = policy
        missing = [c for c in self.cols if c not in owners]
        if missing:
            raise ValueError(f"environments without a home policy: {missing}")
        self._diag_rows = [self.rows.index(owners[c]) for c in self.cols]
        diag = self.diagonal
        if np.any(diag == 0):
            raise ValueError(f"zero diagonal reward in columns {[c for c, d in zip(self.cols, diag) if d == 0]}")
        if self.inverted:
            logger.warning(f"negative home reward in {self.inverted}, normalized ordering is reversed there")

    @property
    def diagonal(self) -> np.ndarray:
        return np.array([self.raw[r, j] for j, r in enumerate(self._diag_rows)])

    @property
    def inverted(self) -> List[str]:
        return [c for c, d in zip(self.cols, self.diagonal) if d < 0]

    @property
    def normalized(self) -> np.ndarray:
        return self.raw / self.diagonal[None, :]

    @property
    def average(self) -> np.ndarray:
        return self.normalized.mean(axis=1)

    def csv_rows(self, normalized=True) -> List[list]:
        values = self.normalized if normalized else self.raw
        header = ["policy"] + list(self.cols) + (["average"] if normalized else [])
        body = []
        for i, name in enumerate(self.rows):
            row = [name] + [float(v) for v in values[i]]
            if normalized:
                row.append(float(self.average[i]))
            body.append(row)
        return [header] + body

    def to_dict(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "home": self.home, "raw": self.raw.tolist(),
                "normalized": self.normalized.tolist(), "average": self.average.tolist(), "inverted": self.inverted}


def cross_matrix_table(matrix: CrossMatrix) -> str:
    table = Texttable(max_width=0)
    table.set_deco(Texttable.HEADER)
    table.set_cols_dtype(["t"] + ["f"] * (len(matrix.cols) + 1))
    table.set_precision(2)
    table.add_rows(matrix.csv_rows(normalized=True))
    text = table.draw()
    if matrix.inverted:
        text += f"\nnegative home reward, ordering reversed in: {', '.join(matrix.inverted)}"
    return text
