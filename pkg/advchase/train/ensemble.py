import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..arena.escapees import PolicyEscapee, StaticEscapee
from ..policy.mlp import MlpPolicy

__all__ = ["TRAIN", "TEST", "UNASSIGNED", "AdversaryRecord", "AdversaryEnsemble", "static_initial_adversary",
           "split_train_test"]

logger = logging.getLogger(__name__)

TRAIN = "train"
TEST = "test"
UNASSIGNED = "unassigned"
STATIC_ID = "static-0"


@dataclass(frozen=True)
class AdversaryRecord:
    """One escapee of the ensemble; ``policy`` is None for the static adversary."""
    id: str
    generation: int
    d_min_train: float
    split: str
    policy: Optional[MlpPolicy] = None

    def escapee(self):
        return StaticEscapee() if self.policy is None else PolicyEscapee(self.policy)

    def with_split(self, split: str) -> "AdversaryRecord":
        return AdversaryRecord(self.id, self.generation, self.d_min_train, split, self.policy)

    def to_dict(self) -> dict:
        from ..utils.experiment_io import policy_to_dict
        return {"id": self.id, "generation": self.generation, "d_min_train": self.d_min_train,
                "split": self.split, "policy": None if self.policy is None else policy_to_dict(self.policy)}

    @classmethod
    def from_dict(cls, d: dict) -> "AdversaryRecord":
        from ..utils.experiment_io import policy_from_dict
        return cls(d["id"], d["generation"], d["d_min_train"], d["split"],
                   None if d["policy"] is None else policy_from_dict(d["policy"]))


def static_initial_adversary() -> AdversaryRecord:
    return AdversaryRecord(STATIC_ID, 0, 0.5, TRAIN, None)


class AdversaryEnsemble:
    """Append-only adversary collection.

    With ``keep_history`` (the ensemble method) the chaser trains against every
    Train-split record ever added. Without it (the single-adversary ablation)
    only the newest generation's Train records form the training pool; older
    records stay in the history untouched.
    """

    def __init__(self, records: Optional[List[AdversaryRecord]] = None, keep_history: bool = True):
        self._records = list(records) if records is not None else [static_initial_adversary()]
        self.keep_history = keep_history
        statics = [r for r in self._records if r.policy is None]
        if len(statics) != 1 or statics[0].generation != 0 or statics[0].split != TRAIN:
            raise ValueError("ensemble needs exactly one static generation-0 Train record")

    @property
    def records(self) -> List[AdversaryRecord]:
        return list(self._records)

    def __len__(self):
        return len(self._records)

    def add(self, records: List[AdversaryRecord]):
        known = {r.id for r in self._records}
        for r in records:
            if r.id in known:
                raise ValueError(f"adversary {r.id} is already in the ensemble")
            if r.split not in (TRAIN, TEST):
                raise ValueError(f"adversary {r.id} has no split assigned")
            known.add(r.id)
        self._records.extend(records)

    def train_pool(self) -> List[AdversaryRecord]:
        train = [r for r in self._records if r.split == TRAIN]
        if self.keep_history:
            return train
        newest = max(r.generation for r in train)
        return [r for r in train if r.generation == newest]

    def train_records(self) -> List[AdversaryRecord]:
        return [r for r in self._records if r.split == TRAIN]

    def test_records(self) -> List[AdversaryRecord]:
        return [r for r in self._records if r.split == TEST]

    def learned_train_records(self) -> List[AdversaryRecord]:
        return [r for r in self.train_records() if r.policy is not None]

    def to_dict(self) -> dict:
        return {"keep_history": self.keep_history, "records": [r.to_dict() for r in self._records]}

    @classmethod
    def from_dict(cls, d: dict) -> "AdversaryEnsemble":
        return cls([AdversaryRecord.from_dict(r) for r in d["records"]], keep_history=d["keep_history"])


def split_train_test(records: List[AdversaryRecord], rng: np.random.Generator,
                     n_test: Optional[int] = None) -> List[AdversaryRecord]:
    """Uniformly random Train/Test assignment; half and half unless ``n_test`` is given."""
    k = len(records)
    if n_test is None:
        if k % 2:
            raise ValueError(f"cannot split {k} adversaries into equal Train/Test halves")
        n_test = k // 2
    if not 0 <= n_test <= k:
        raise ValueError(f"n_test={n_test} out of range for {k} adversaries")
    test_idx = set(rng.permutation(k)[:n_test].tolist())
    return [r.with_split(TEST if i in test_idx else TRAIN) for i, r in enumerate(records)]
