import numpy as np
import torch
import torch.nn as nn
from dataclasses import dataclass
from typing import List, Tuple

__all__ = ["MlpArch", "MlpPolicy", "param_count", "forward", "encode", "decode",
           "init_params", "zero_policy"]

# actions are normalized commands; the whole chain runs in float64 so the
# flat vector round-trips bit for bit
POLICY_DTYPE = torch.float64


@dataclass(frozen=True)
class MlpArch:
    input_dim: int
    hidden_dims: Tuple[int, ...] = (64, 64)
    output_dim: int = 2

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        dims = self.layer_dims()
        if any(d < 1 for d in dims):
            raise ValueError(f"all layer sizes must be >= 1, got {dims}")

    def layer_dims(self) -> List[int]:
        return [self.input_dim, *self.hidden_dims, self.output_dim]

    def layer_shapes(self) -> List[Tuple[int, int]]:
        dims = self.layer_dims()
        return [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]


def param_count(arch: MlpArch) -> int:
    return sum(n_in * n_out + n_out for n_in, n_out in arch.layer_shapes())


class MlpPolicy(nn.Module):
    """Fixed-topology tanh MLP.

    Every layer, the output layer included, is followed by tanh, so actions
    always lie in (-1, 1). Parameters are frozen; a policy is never trained
    by gradient, only rebuilt from a flat vector.

    Flat layout: layer-major; per layer the weight matrix row-major with rows
    indexing outputs (the ``nn.Linear`` layout), followed by the bias.
    """

    def __init__(self, arch: MlpArch):
        super().__init__()
        self.arch = arch
        layers = []
        for n_in, n_out in arch.layer_shapes():
            layers.append(nn.Linear(n_in, n_out, dtype=POLICY_DTYPE))
            layers.append(nn.Tanh())
        self.net = nn.Sequential(*layers)
        for p in self.net.parameters():
            p.requires_grad_(False)

    @classmethod
    def from_vector(cls, arch: MlpArch, vector) -> "MlpPolicy":
        vector = np.asarray(vector, dtype=np.float64)
        expected = param_count(arch)
        if vector.ndim != 1 or vector.shape[0] != expected:
            raise ValueError(f"parameter vector has shape {vector.shape}, expected ({expected},)")
        if not np.all(np.isfinite(vector)):
            raise ValueError("parameter vector contains non-finite entries")
        policy = cls(arch)
        nn.utils.vector_to_parameters(torch.from_numpy(vector.copy()), policy.net.parameters())
        return policy

    def to_vector(self) -> np.ndarray:
        return nn.utils.parameters_to_vector(self.net.parameters()).numpy().copy()

    @torch.no_grad()
    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)

    @torch.no_grad()
    def act(self, state) -> np.ndarray:
        state = np.asarray(state, dtype=np.float64)
        if state.shape != (self.arch.input_dim,):
            raise ValueError(f"state has shape {state.shape}, policy expects ({self.arch.input_dim},)")
        return self.net(torch.from_numpy(state)).numpy()

    @torch.no_grad()
    def act_batch(self, states) -> np.ndarray:
        states = np.asarray(states, dtype=np.float64)
        if states.ndim != 2 or states.shape[1] != self.arch.input_dim:
            raise ValueError(f"states have shape {states.shape}, policy expects (n, {self.arch.input_dim})")
        return self.net(torch.from_numpy(states)).numpy()

    def extra_repr(self) -> str:
        return "arch={}, n_params={}".format(self.arch, param_count(self.arch))


def forward(policy: MlpPolicy, state) -> np.ndarray:
    return policy.act(state)


def encode(policy: MlpPolicy) -> np.ndarray:
    return policy.to_vector()


def decode(arch: MlpArch, vector) -> MlpPolicy:
    return MlpPolicy.from_vector(arch, vector)


def zero_policy(arch: MlpArch) -> MlpPolicy:
    return MlpPolicy.from_vector(arch, np.zeros(param_count(arch)))


def init_params(arch: MlpArch, rng: np.random.Generator) -> np.ndarray:
    # xavier-uniform weights, zero biases
    chunks = []
    for n_in, n_out in arch.layer_shapes():
        limit = np.sqrt(6.0 / (n_in + n_out))
        chunks.append(rng.uniform(-limit, limit, size=n_out * n_in))
        chunks.append(np.zeros(n_out))
    return np.concatenate(chunks)
