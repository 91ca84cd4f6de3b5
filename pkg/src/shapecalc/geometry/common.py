"""Vectors, tolerances and the geometry error type shared by the kernel."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

import numpy as np


class GeometryError(ValueError):
    """Raised for malformed geometric input (degenerate polytopes, bad surfaces, ...)."""


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    def __str__(self) -> str:
        return f"({self.x!r}, {self.y!r}, {self.z!r})"


ZERO = Vec3(0.0, 0.0, 0.0)


def vec3(v: Iterable[float]) -> Vec3:
    """Coerce any length-3 iterable into a finite `Vec3`."""
    vals = tuple(float(c) for c in v)
    if len(vals) != 3:
        raise GeometryError(f"expected 3 components, got {len(vals)}")
    if not all(math.isfinite(c) for c in vals):
        raise GeometryError(f"non-finite vector {vals}")
    return Vec3(*vals)


def as_array(v) -> np.ndarray:
    return np.asarray(v, dtype=float)


@dataclass(frozen=True)
class Tolerances:
    """Absolute tolerances used by every geometric and temporal comparison.

    eps_len
        Geometric coincidence: two point sets "touch" when their distance is at
        most this, and interpenetrate only when the penetration depth exceeds it.
    eps_t
        Time resolution for contact instants and delay expiries.
    max_bisect
        Iteration cap for the first-time-of-contact bisection.
    """

    eps_len: float = 1e-9
    eps_t: float = 1e-6
    max_bisect: int = 64

    def __post_init__(self):
        if not (self.eps_len > 0 and self.eps_t > 0 and self.max_bisect > 0):
            raise ValueError("tolerances must be strictly positive")

    @classmethod
    def from_env(cls, environ: Mapping[str, str] | None = None) -> "Tolerances":
        env = os.environ if environ is None else environ
        kw = {}
        if "SHAPECALC_EPS_LEN" in env:
            kw["eps_len"] = float(env["SHAPECALC_EPS_LEN"])
        if "SHAPECALC_EPS_T" in env:
            kw["eps_t"] = float(env["SHAPECALC_EPS_T"])
        if "SHAPECALC_MAX_BISECT" in env:
            kw["max_bisect"] = int(env["SHAPECALC_MAX_BISECT"])
        return cls(**kw)


DEFAULT_TOL = Tolerances()
