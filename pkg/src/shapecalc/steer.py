"""Velocity laws applied at the end of every movement time step."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .geometry import Vec3, vec3


@dataclass(frozen=True)
class Keep:
    """Leave the velocity unchanged."""


@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class Constant:
    v: Vec3

    def __post_init__(self):
        object.__setattr__(self, "v", vec3(self.v))


@dataclass(frozen=True)
class Gravity:
    """Uniform acceleration ``g`` integrated over the time since the previous steer."""

    g: Vec3

    def __post_init__(self):
        object.__setattr__(self, "g", vec3(self.g))


@dataclass(frozen=True)
class Brownian:
    """Fresh Gaussian velocity each step, ``N(0, 1)`` per axis scaled by ``scale / sqrt(mass)``."""

    seed: int
    scale: float = 1.0


@dataclass(frozen=True)
class Scripted:
    """Piecewise-constant velocity: the last entry whose time is not after the clock."""

    entries: tuple[tuple[float, Vec3], ...]

    def __post_init__(self):
        ents = tuple((float(t), vec3(v)) for t, v in self.entries)
        if any(b[0] < a[0] for a, b in zip(ents, ents[1:])):
            raise ValueError("scripted steer times must be non-decreasing")
        object.__setattr__(self, "entries", ents)


Rule = Union[Keep, Zero, Constant, Gravity, Brownian, Scripted]


@dataclass(frozen=True)
class SteerSpec:
    """Per-process rules keyed by process id, plus a default for everything else."""

    rules: Mapping[int, Rule] = field(default_factory=dict)
    default: Rule = Keep()

    def rule_for(self, ids) -> Rule:
        """Rule of a (possibly compound) process: the smallest member id with its own rule wins."""
        for i in sorted(ids):
            if i in self.rules:
                return self.rules[i]
        return self.default


def steer_velocity(rule: Rule, t: float, current, mass: float, pid: int, prev_t: float,
                   step: int, eps_t: float = 1e-6) -> Vec3 | None:
    """New velocity under ``rule`` at clock ``t`` (None means keep the current one)."""
    if isinstance(rule, Keep):
        return None
    if isinstance(rule, Zero):
        return vec3((0.0, 0.0, 0.0))
    if isinstance(rule, Constant):
        return rule.v
    if isinstance(rule, Gravity):
        return vec3(np.asarray(current) + (t - prev_t) * np.asarray(rule.g))
    if isinstance(rule, Brownian):
        if math.isinf(mass):
            return vec3((0.0, 0.0, 0.0))
        bits = int(np.float64(t).view(np.uint64))
        rng = np.random.default_rng([int(rule.seed) & 0xFFFFFFFF, pid & 0xFFFFFFFF, bits & 0xFFFFFFFF, bits >> 32, step])
        return vec3(rng.normal(size=3) * (rule.scale / math.sqrt(mass)))
    if isinstance(rule, Scripted):
        out = None
        for tt, v in rule.entries:
            if tt <= t + eps_t:
                out = v
            else:
                break
        return out
    raise TypeError(f"unknown steer rule {rule!r}")
