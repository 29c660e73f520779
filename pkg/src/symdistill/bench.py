"""Deterministic benchmark generators: pairwise force laws and the 1-D
diffusion profile, emitted as IOTables.

Force tables carry inputs (dx, dy, r, m1, m2, q1, q2) with
r = sqrt(dx^2 + dy^2) + softening and outputs (fx, fy). The diffusion table
maps (x, t) in the unit square to u = exp(-pi^2 * alpha * t) * sin(pi * x).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .table import IOTable

FORCE_KINDS = ("spring", "inv_r", "inv_r2", "charge")

# pair separations below this are rejected when sampling
MIN_SEPARATION = 0.1
MIN_CHARGE = 0.1


@dataclass(frozen=True)
class ForceLaw:
    kind: str
    softening: float = 1e-2

    def __post_init__(self):
        if self.kind not in FORCE_KINDS:
            raise ConfigError(f"unknown force kind {self.kind!r}, pick one of {FORCE_KINDS}")
        if self.softening < 0:
            raise ConfigError("softening must be >= 0")


def _rng_of(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(int(rng))


def _sample_displacements(rng, n: int) -> np.ndarray:
    out = rng.uniform(-5.0, 5.0, size=(n, 2))
    while True:
        bad = np.hypot(out[:, 0], out[:, 1]) < MIN_SEPARATION
        if not bad.any():
            return out
        out[bad] = rng.uniform(-5.0, 5.0, size=(int(bad.sum()), 2))


def _sample_charges(rng, n: int) -> np.ndarray:
    out = rng.uniform(-1.0, 1.0, size=n)
    while True:
        bad = np.abs(out) < MIN_CHARGE
        if not bad.any():
            return out
        out[bad] = rng.uniform(-1.0, 1.0, size=int(bad.sum()))


def force_components(law: ForceLaw, dx, dy, r, m1, m2, q1, q2):
    """The (fx, fy) force components implied by the law's formula."""
    if law.kind == "spring":
        scale = 1.0 / r - 1.0
    elif law.kind == "inv_r":
        scale = 1.0 / (r * r)
    elif law.kind == "inv_r2":
        scale = m2 / (r * r * r)
    else:  # charge
        scale = q1 * q2 / (r * r * r)
    return scale * dx, scale * dy


def gen_pairwise(law: ForceLaw, n: int, rng) -> IOTable:
    """Sample n particle pairs and their pairwise force under the law."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    rng = _rng_of(rng)
    disp = _sample_displacements(rng, n)
    dx, dy = disp[:, 0], disp[:, 1]
    m1 = rng.uniform(0.5, 2.0, size=n)
    m2 = rng.uniform(0.5, 2.0, size=n)
    q1 = _sample_charges(rng, n)
    q2 = _sample_charges(rng, n)
    r = np.hypot(dx, dy) + law.softening
    fx, fy = force_components(law, dx, dy, r, m1, m2, q1, q2)
    X = np.column_stack([dx, dy, r, m1, m2, q1, q2])
    Y = np.column_stack([fx, fy])
    return IOTable(["dx", "dy", "r", "m1", "m2", "q1", "q2"], ["fx", "fy"], X, Y)


def heat_profile(x, t, alpha: float):
    """Closed-form diffusion profile on the unit interval."""
    return np.exp(-np.pi**2 * alpha * t) * np.sin(np.pi * x)


def gen_heat(n: int, alpha: float, rng) -> IOTable:
    """Sample n points of the diffusion profile, (x, t) uniform in [0,1]^2."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    if alpha <= 0:
        raise ConfigError("alpha must be > 0")
    rng = _rng_of(rng)
    x = rng.uniform(0.0, 1.0, size=n)
    t = rng.uniform(0.0, 1.0, size=n)
    u = heat_profile(x, t, alpha)
    return IOTable(["x", "t"], ["u"], np.column_stack([x, t]), u.reshape(-1, 1))
