"""Run configuration.

One flat key space, resolved from (lowest to highest precedence) built-in
defaults, the scale preset, a TOML file, ``--set key=value`` overrides and the
dedicated ``--seed`` / ``--threads`` flags. In TOML files the dotted keys are
written as tables::

    seed = 3
    [train]
    population = 64
    chaser_iterations = [200, 200, 400]

Keys:

    seed, threads, scale
    arena.{dt, max_steps, d_min, v_max, omega_max, a_max, a_lat_max, tau_omega,
           w1, w2, w3, reference_action, fall_penalty}
    spawn.cone.{half_angle, r_in, r_out}   spawn.circular.{r_in, r_out}
    spawn.zigzag.{n_points, advance, lateral}
    train.{generations, adversaries, chaser_iterations, escapee_iterations,
           population, initial_sigma, rollouts, hidden_dims, escape_d_min_low,
           escape_d_min_high, test_split, probe_every, probe_episodes,
           checkpoint_every}
    eval.episodes

``train.test_split`` is "half" or the number of Test adversaries per generation.
"""
import logging
import math
from typing import Dict, Iterable, Optional

import toml
from attributedict.collections import AttributeDict

from .arena.config import ArenaConfig, Circular, Cone, SpawnConfig, Zigzag
from .train.schedule import TrainSchedule

__all__ = ["DEFAULTS", "PRESETS", "resolve_config", "load_config_file", "parse_override", "arena_section",
           "arena_config_from", "spawns_from", "schedule_from", "to_toml"]

logger = logging.getLogger(__name__)

DEFAULTS = {
    "seed": 0,
    "threads": 1,
    "scale": "paper",
    "arena.dt": 0.002,
    "arena.max_steps": 2000,
    "arena.d_min": 0.5,
    "arena.v_max": 2.5,
    "arena.omega_max": 2.5,
    "arena.a_max": 4.0,
    "arena.a_lat_max": 4.0,
    "arena.tau_omega": 0.1,
    "arena.w1": 10.0,
    "arena.w2": 0.01,
    "arena.w3": 0.05,
    "arena.reference_action": [0.0, 0.0],
    "arena.fall_penalty": 10.0,
    "spawn.cone.half_angle": math.pi / 3,
    "spawn.cone.r_in": 2.0,
    "spawn.cone.r_out": 4.0,
    "spawn.circular.r_in": 2.0,
    "spawn.circular.r_out": 4.0,
    "spawn.zigzag.n_points": 8,
    "spawn.zigzag.advance": 3.0,
    "spawn.zigzag.lateral": 2.0,
    "train.generations": 3,
    "train.adversaries": 8,
    "train.chaser_iterations": [1000, 1000, 2000],
    "train.escapee_iterations": 200,
    "train.population": 256,
    "train.initial_sigma": 0.1,
    "train.rollouts": 8,
    "train.hidden_dims": [64, 64],
    "train.escape_d_min_low": 0.5,
    "train.escape_d_min_high": 1.0,
    "train.test_split": "half",
    "train.probe_every": 10,
    "train.probe_episodes": 100,
    "train.checkpoint_every": 0,
    "eval.episodes": 100,
}

PRESETS = {
    "paper": {},
    "desk": {
        "train.population": 64,
        "train.chaser_iterations": [200, 200, 400],
        "train.escapee_iterations": 50,
        "train.rollouts": 4,
        "train.probe_episodes": 20,
    },
}


def _flatten(d: dict, prefix="") -> dict:
    flat = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        else:
            flat[key] = v
    return flat


def _coerce(key, value):
    if key not in DEFAULTS:
        raise ValueError(f"unknown config key {key!r}")
    default = DEFAULTS[key]
    if key == "train.test_split":
        if value == "half" or (isinstance(value, int) and not isinstance(value, bool) and value >= 0):
            return value
        raise ValueError(f"train.test_split must be 'half' or a non-negative integer, got {value!r}")
    if isinstance(default, bool) or isinstance(default, str):
        if not isinstance(value, type(default)):
            raise ValueError(f"{key} expects {type(default).__name__}, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{key} expects an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{key} expects a number, got {value!r}")
        return float(value)
    if isinstance(default, list) and isinstance(default[0], float):
        if (not isinstance(value, list) or len(value) != len(default)
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
            raise ValueError(f"{key} expects a list of {len(default)} numbers, got {value!r}")
        return [float(v) for v in value]
    if isinstance(default, list):
        if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise ValueError(f"{key} expects a list of integers, got {value!r}")
        return list(value)
    raise NotImplementedError(key)


def load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return _flatten(toml.load(f))


def parse_override(text: str):
    """``key=value`` with the value read as a TOML literal (bare words fall back to strings)."""
    if "=" not in text:
        raise ValueError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key, raw = key.strip(), raw.strip()
    try:
        value = toml.loads(f"v = {raw}")["v"]
    except toml.TomlDecodeError:
        value = raw
    return key, value


def resolve_config(config_file=None, overrides: Iterable[str] = (), scale: Optional[str] = None,
                   seed: Optional[int] = None, threads: Optional[int] = None) -> AttributeDict:
    user = {}
    if config_file is not None:
        user.update(load_config_file(config_file))
    for text in overrides:
        key, value = parse_override(text)
        user[key] = value
    flags = {k: v for k, v in (("scale", scale), ("seed", seed), ("threads", threads)) if v is not None}

    scale = flags.get("scale", user.get("scale", DEFAULTS["scale"]))
    if scale not in PRESETS:
        raise ValueError(f"unknown scale {scale!r}, expected one of {sorted(PRESETS)}")
    resolved = dict(DEFAULTS)
    for layer in (PRESETS[scale], user, flags):
        for key, value in layer.items():
            resolved[key] = _coerce(key, value)
    return AttributeDict(resolved)


def arena_section(conf) -> dict:
    # manifests written before a key existed get its default
    return {k: conf.get(k, v) for k, v in DEFAULTS.items() if k.startswith(("arena.", "spawn."))}


def arena_config_from(conf) -> ArenaConfig:
    a = {k.split(".", 1)[1]: v for k, v in conf.items() if k.startswith("arena.")}
    return ArenaConfig(spawn=spawns_from(conf)["cone"], **a)


def spawns_from(conf) -> Dict[str, SpawnConfig]:
    def section(name):
        prefix = f"spawn.{name}."
        return {k[len(prefix):]: v for k, v in conf.items() if k.startswith(prefix)}
    return {"cone": Cone(**section("cone")), "circular": Circular(**section("circular")),
            "zigzag": Zigzag(**section("zigzag"))}


def schedule_from(conf) -> TrainSchedule:
    generations = conf["train.generations"]
    iterations = list(conf["train.chaser_iterations"])
    if len(iterations) != generations:
        raise ValueError(f"train.chaser_iterations has {len(iterations)} entries for {generations} generations")
    test_split = conf["train.test_split"]
    return TrainSchedule(
        generations=generations,
        adversaries_per_generation=conf["train.adversaries"],
        chaser_iterations=tuple(iterations),
        escapee_iterations=conf["train.escapee_iterations"],
        population=conf["train.population"],
        initial_sigma=conf["train.initial_sigma"],
        rollouts_per_fitness=conf["train.rollouts"],
        seed=conf["seed"],
        hidden_dims=tuple(conf["train.hidden_dims"]),
        escape_d_min_low=conf["train.escape_d_min_low"],
        escape_d_min_high=conf["train.escape_d_min_high"],
        test_per_generation=None if test_split == "half" else test_split,
        probe_every=conf["train.probe_every"],
        probe_episodes=conf["train.probe_episodes"],
        checkpoint_every=conf["train.checkpoint_every"],
    )


def to_toml(conf) -> str:
    nested = {}
    for key, value in conf.items():
        *parents, leaf = key.split(".")
        node = nested
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return toml.dumps(nested)
