"""Domain types: interaction kernels, scalings, system configuration and states."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class KernelFamily(str, enum.Enum):
    CONSTANT = "constant"
    POWERLAW = "powerlaw"
    TABULATED = "tabulated"


class ScalingMode(str, enum.Enum):
    FIXED = "fixed"
    NORMALIZED = "normalized"


class Condition(str, enum.Enum):
    PE = "PE"
    ISC = "ISC"


@dataclass(frozen=True)
class InteractionKernel:
    """Positive influence function phi(r) of the pairwise distance r.

    Use the ``constant``, ``powerlaw`` and ``tabulated`` constructors rather
    than building instances by hand. A power law is ``c / (1 + r)**beta``;
    a tabulated kernel interpolates linearly between breakpoints and clamps
    to the end values outside them.
    """

    family: KernelFamily
    c: float = 1.0
    beta: float = 0.0
    breakpoints: tuple = ()
    values: tuple = ()
    lipschitz_hint: Optional[float] = None

    def __post_init__(self):
        if self.family is KernelFamily.CONSTANT:
            if not self.c > 0:
                raise ValueError(f"constant kernel needs c > 0, got {self.c}")
        elif self.family is KernelFamily.POWERLAW:
            if not self.c > 0:
                raise ValueError(f"power-law kernel needs c > 0, got {self.c}")
            if not self.beta >= 0:
                raise ValueError(f"power-law kernel needs beta >= 0, got {self.beta}")
        elif self.family is KernelFamily.TABULATED:
            bp = np.asarray(self.breakpoints, dtype=float)
            vals = np.asarray(self.values, dtype=float)
            if bp.ndim != 1 or bp.size == 0 or bp.shape != vals.shape:
                raise ValueError("tabulated kernel needs matching non-empty breakpoints/values")
            if np.any(np.diff(bp) <= 0):
                raise ValueError("tabulated breakpoints must be strictly increasing")
            if bp[0] < 0:
                raise ValueError("tabulated breakpoints must be nonnegative")
            if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
                raise ValueError("tabulated values must be finite and strictly positive")
        if self.lipschitz_hint is not None and self.lipschitz_hint < 0:
            raise ValueError("lipschitz_hint must be nonnegative")

    @classmethod
    def constant(cls, c: float) -> "InteractionKernel":
        return cls(KernelFamily.CONSTANT, c=float(c))

    @classmethod
    def powerlaw(cls, c: float, beta: float) -> "InteractionKernel":
        return cls(KernelFamily.POWERLAW, c=float(c), beta=float(beta))

    @classmethod
    def tabulated(cls, breakpoints: Sequence[float], values: Sequence[float],
                  lipschitz_hint: Optional[float] = None) -> "InteractionKernel":
        return cls(KernelFamily.TABULATED,
                   breakpoints=tuple(float(b) for b in breakpoints),
                   values=tuple(float(v) for v in values),
                   lipschitz_hint=lipschitz_hint)

    @classmethod
    def from_dict(cls, spec: dict) -> "InteractionKernel":
        family = KernelFamily(spec["family"].lower())
        hint = spec.get("lipschitz_hint")
        if family is KernelFamily.CONSTANT:
            return cls(family, c=float(spec["c"]), lipschitz_hint=hint)
        if family is KernelFamily.POWERLAW:
            return cls(family, c=float(spec["c"]), beta=float(spec["beta"]), lipschitz_hint=hint)
        return cls.tabulated(spec["breakpoints"], spec["values"], lipschitz_hint=hint)

    def to_dict(self) -> dict:
        out: dict = {"family": self.family.value}
        if self.family is KernelFamily.TABULATED:
            out["breakpoints"] = list(self.breakpoints)
            out["values"] = list(self.values)
        else:
            out["c"] = self.c
            if self.family is KernelFamily.POWERLAW:
                out["beta"] = self.beta
        if self.lipschitz_hint is not None:
            out["lipschitz_hint"] = self.lipschitz_hint
        return out

    @property
    def p(self) -> float:
        """phi(0)."""
        return phi_eval(self, 0.0)

    def is_decreasing(self) -> bool:
        """True if phi is non-increasing on [0, inf)."""
        if self.family is KernelFamily.TABULATED:
            return bool(np.all(np.diff(self.values) <= 0))
        return True

    def __call__(self, r):
        """Vectorized evaluation; no sign check on ``r``."""
        r = np.asarray(r, dtype=float)
        if self.family is KernelFamily.CONSTANT:
            return np.full_like(r, self.c)
        if self.family is KernelFamily.POWERLAW:
            return self.c / (1.0 + r) ** self.beta
        return np.interp(r, self.breakpoints, self.values)


def phi_eval(kernel: InteractionKernel, r: float) -> float:
    """Evaluate the kernel at a single distance ``r >= 0``."""
    r = float(r)
    if not r >= 0:
        raise ValueError(f"distance must be nonnegative, got {r}")
    if kernel.family is KernelFamily.CONSTANT:
        return kernel.c
    if kernel.family is KernelFamily.POWERLAW:
        return kernel.c / (1.0 + r) ** kernel.beta
    return float(np.interp(r, kernel.breakpoints, kernel.values))


@dataclass(frozen=True)
class KernelBounds:
    phi_min: float
    phi_max: float
    k_min: float
    k_max: float


def kernel_bounds(kernel: InteractionKernel, scaling: ScalingMode, diameter0: float) -> KernelBounds:
    """Exact extrema of phi on ``[0, diameter0]`` and the derived K_min, K_max."""
    diameter0 = float(diameter0)
    if not diameter0 >= 0:
        raise ValueError(f"diameter0 must be nonnegative, got {diameter0}")
    if kernel.family is KernelFamily.CONSTANT:
        lo = hi = kernel.c
    elif kernel.family is KernelFamily.POWERLAW:
        hi = phi_eval(kernel, 0.0)
        lo = phi_eval(kernel, diameter0)
    else:
        # piecewise linear: extrema sit on breakpoints or interval ends
        bp = np.asarray(kernel.breakpoints)
        pts = np.concatenate(([0.0, diameter0], bp[(bp > 0) & (bp < diameter0)]))
        vals = kernel(pts)
        lo, hi = float(vals.min()), float(vals.max())
    if ScalingMode(scaling) is ScalingMode.FIXED:
        return KernelBounds(lo, hi, lo, hi)
    return KernelBounds(lo, hi, lo / hi, hi / lo)


def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[None, :, :] - positions[:, None, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def lambda_weights(kernel: InteractionKernel, scaling: ScalingMode, positions) -> np.ndarray:
    """Per-agent scaling lambda_i; the self term phi(0) is part of the normalizing sum."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    n = positions.shape[0]
    if ScalingMode(scaling) is ScalingMode.FIXED:
        return np.ones(n)
    phi = kernel(pairwise_distances(positions))
    return n / phi.sum(axis=1)


@dataclass(frozen=True)
class SystemConfig:
    n_agents: int
    dim: int
    scaling: ScalingMode = ScalingMode.FIXED
    condition: Condition = Condition.PE
    window: float = 1.0
    service: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scaling", ScalingMode(self.scaling))
        object.__setattr__(self, "condition", Condition(self.condition))
        if self.n_agents < 2:
            raise ValueError(f"need at least 2 agents, got {self.n_agents}")
        if self.dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")
        if not self.window > 0:
            raise ValueError(f"window T must be positive, got {self.window}")
        if not self.service > 0:
            raise ValueError(f"service mu must be positive, got {self.service}")
        if self.service > self.window:
            raise ValueError(f"service mu={self.service} exceeds window T={self.window}")


def _check_matrix(name: str, arr, n: Optional[int] = None) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be an N x d matrix")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} has {arr.shape[0]} rows, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FirstOrderState:
    positions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "positions", _check_matrix("positions", self.positions))

    @property
    def n_agents(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class SecondOrderState:
    positions: np.ndarray
    velocities: np.ndarray = field(default=None)

    def __post_init__(self):
        pos = _check_matrix("positions", self.positions)
        vel = _check_matrix("velocities", self.velocities, pos.shape[0])
        if vel.shape != pos.shape:
            raise ValueError("positions and velocities must have the same shape")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)

    @property
    def n_agents(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


def diameter0_of(positions) -> float:
    return float(pairwise_distances(np.atleast_2d(np.asarray(positions, float))).max())


__all__ = [
    "Condition", "FirstOrderState", "InteractionKernel", "KernelBounds", "KernelFamily",
    "ScalingMode", "SecondOrderState", "SystemConfig", "kernel_bounds", "lambda_weights",
    "pairwise_distances", "phi_eval",
]
