from dataclasses import dataclass, field
from typing import Optional, Tuple

__all__ = ["TrainSchedule", "paper_schedule", "desk_schedule"]


@dataclass(frozen=True)
class TrainSchedule:
    """Outer-loop budget of adversarial training.

    ``chaser_iterations[g - 1]`` CMA iterations train the chaser in generation
    g; every generation but the last then trains ``adversaries_per_generation``
    escapees for ``escapee_iterations`` iterations each.
    """
    generations: int = 3
    adversaries_per_generation: int = 8
    chaser_iterations: Tuple[int, ...] = (1000, 1000, 2000)
    escapee_iterations: int = 200
    population: int = 256
    initial_sigma: float = 0.1
    rollouts_per_fitness: int = 8
    seed: int = 0
    hidden_dims: Tuple[int, ...] = (64, 64)
    escape_d_min_low: float = 0.5
    escape_d_min_high: float = 1.0
    test_per_generation: Optional[int] = None
    probe_every: int = 10
    probe_episodes: int = 100
    checkpoint_every: int = 0

    def __post_init__(self):
        object.__setattr__(self, "chaser_iterations", tuple(int(n) for n in self.chaser_iterations))
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.generations < 1:
            raise ValueError(f"generations must be >= 1, got {self.generations}")
        if len(self.chaser_iterations) != self.generations:
            raise ValueError(f"chaser_iterations needs one entry per generation "
                             f"({self.generations}), got {self.chaser_iterations}")
        if any(n < 0 for n in self.chaser_iterations) or self.escapee_iterations < 0:
            raise ValueError("iteration counts must be >= 0")
        if self.adversaries_per_generation < 1:
            raise ValueError(f"adversaries_per_generation must be >= 1, got {self.adversaries_per_generation}")
        K, n_test = self.adversaries_per_generation, self.test_per_generation
        if n_test is not None and n_test < 0:
            raise ValueError(f"test_per_generation must be >= 0, got {n_test}")
        # a single escapee per generation always goes to Train
        if K > 1 and n_test is None and K % 2:
            raise ValueError(f"cannot split {K} adversaries into equal Train/Test halves; set test_per_generation")
        if K > 1 and n_test is not None and n_test > K:
            raise ValueError(f"test_per_generation={n_test} exceeds adversaries_per_generation={K}")
        if self.population < 4:
            raise ValueError(f"population must be >= 4, got {self.population}")
        if not self.initial_sigma > 0:
            raise ValueError(f"initial_sigma must be > 0, got {self.initial_sigma}")
        if self.rollouts_per_fitness < 1:
            raise ValueError(f"rollouts_per_fitness must be >= 1, got {self.rollouts_per_fitness}")
        if not 0 <= self.escape_d_min_low < self.escape_d_min_high:
            raise ValueError("escape catch radius range must satisfy 0 <= low < high")
        if self.probe_every < 0 or self.probe_episodes < 0 or self.checkpoint_every < 0:
            raise ValueError("probe_every, probe_episodes and checkpoint_every must be >= 0")

    @property
    def total_chaser_iterations(self) -> int:
        return sum(self.chaser_iterations)


def paper_schedule(**overrides) -> TrainSchedule:
    return TrainSchedule(**overrides)


def desk_schedule(**overrides) -> TrainSchedule:
    d = dict(population=64, chaser_iterations=(200, 200, 400), escapee_iterations=50,
             adversaries_per_generation=8, rollouts_per_fitness=4, probe_episodes=20)
    d.update(overrides)
    return TrainSchedule(**d)
