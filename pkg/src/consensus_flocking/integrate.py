"""Fixed-step RK4 trajectories aligned to the switching instants of the schedule."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import _backend
from .dynamics import kernel_args
from .model import FirstOrderState, InteractionKernel, SecondOrderState, SystemConfig
from .schedule import ScheduleMatrix


class NumericalError(RuntimeError):
    """Raised when the integrator produces a non-finite state."""


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray  # (K+1, N, d)
    velocities: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    @property
    def second_order(self) -> bool:
        return self.velocities is not None

    def __len__(self) -> int:
        return self.times.shape[0]

    def index_at(self, t: float) -> int:
        """Index of the recorded time nearest to ``t``."""
        k = int(np.searchsorted(self.times, t))
        if k == 0:
            return 0
        if k >= len(self.times):
            return len(self.times) - 1
        return k if self.times[k] - t < t - self.times[k - 1] else k - 1

    def state(self, k: int):
        if self.second_order:
            return SecondOrderState(self.positions[k], self.velocities[k])
        return FirstOrderState(self.positions[k])

    def write_csv(self, path, every: int = 1) -> None:
        """Columns t, agent_index, x_1..x_d[, v_1..v_d]."""
        _, n, d = self.positions.shape
        header = ["t", "agent_index"] + [f"x_{k + 1}" for k in range(d)]
        if self.second_order:
            header += [f"v_{k + 1}" for k in range(d)]
        idx = list(range(0, len(self), every))
        if idx[-1] != len(self) - 1:
            idx.append(len(self) - 1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for k in idx:
                t = repr(float(self.times[k]))
                for i in range(n):
                    row = [t, i] + [repr(float(v)) for v in self.positions[k, i]]
                    if self.second_order:
                        row += [repr(float(v)) for v in self.velocities[k, i]]
                    w.writerow(row)


def step_times(matrix: ScheduleMatrix, t_end: float, h: float, checkpoints=()) -> np.ndarray:
    """Uniform grid of pitch ``h`` merged with every switching instant in ``[0, t_end]``.

    ``checkpoints`` are extra instants that must be recorded exactly. Grid
    points closer than ``1e-9 h`` to a switching instant or checkpoint are
    dropped so that the latter is hit exactly.
    """
    tol = 1e-9 * h
    bps = np.unique(np.concatenate((matrix.breakpoints_in(0.0, t_end),
                                    np.asarray(checkpoints, dtype=float))))
    bps = bps[(bps > tol) & (bps < t_end - tol)]
    n_grid = int(np.ceil(t_end / h))
    grid = h * np.arange(1, n_grid)
    grid = grid[grid < t_end - tol]
    if bps.size:
        pos = np.searchsorted(bps, grid)
        left = np.abs(grid - bps[np.clip(pos - 1, 0, bps.size - 1)])
        right = np.abs(bps[np.clip(pos, 0, bps.size - 1)] - grid)
        grid = grid[np.minimum(left, right) >= tol]
    return np.concatenate(([0.0], np.sort(np.concatenate((grid, bps))), [float(t_end)]))


def _segments(matrix: ScheduleMatrix, times: np.ndarray):
    """Per-step index into a stack of weight matrices, one per constant stretch."""
    t_end = times[-1]
    bps = matrix.breakpoints_in(0.0, t_end)
    bps = np.unique(bps[(bps > 0) & (bps < t_end)])
    edges = np.concatenate(([0.0], bps, [t_end]))
    mids = 0.5 * (edges[:-1] + edges[1:])
    step_mids = 0.5 * (times[:-1] + times[1:])
    seg_index = np.searchsorted(bps, step_mids).astype(np.int64)
    return seg_index, matrix.sample(mids)


def simulate(config: SystemConfig, kernel: InteractionKernel, matrix: ScheduleMatrix,
             initial_state: Union[FirstOrderState, SecondOrderState], t_end: float,
             h: Optional[float] = None, *, backend: Optional[str] = None,
             seed: Optional[int] = None, config_hash: Optional[str] = None,
             checkpoints=()) -> Trajectory:
    """Integrate the failure-weighted dynamics from ``initial_state`` up to ``t_end``.

    The order of the system follows the type of ``initial_state``. ``h``
    defaults to ``1e-3 * config.window``; ``checkpoints`` are extra instants
    to land on exactly (e.g. window ends).
    """
    if h is None:
        h = 1e-3 * config.window
    if not (t_end > 0 and h > 0):
        raise ValueError("t_end and h must be positive")
    x0 = np.ascontiguousarray(initial_state.positions, dtype=float)
    if x0.shape != (config.n_agents, config.dim):
        raise ValueError(f"initial state shape {x0.shape} does not match "
                         f"config ({config.n_agents}, {config.dim})")
    if matrix.n != config.n_agents:
        raise ValueError("schedule size does not match number of agents")

    core = _backend.get(backend)
    times = step_times(matrix, float(t_end), float(h), checkpoints)
    seg_index, M_stack = _segments(matrix, times)
    args = kernel_args(kernel, config.scaling)
    meta = {"step": float(h), "seed": seed, "config_hash": config_hash,
            "backend": "python" if core is _backend.fallback else "cython"}

    if isinstance(initial_state, SecondOrderState):
        v0 = np.ascontiguousarray(initial_state.velocities, dtype=float)
        X, V, bad = core.integrate_second(x0, v0, times, seg_index, M_stack, *args)
    else:
        X, bad = core.integrate_first(x0, times, seg_index, M_stack, *args)
        V = None
    if bad >= 0:
        raise NumericalError(f"non-finite state after step {bad} "
                             f"(t={times[bad]:.6g} -> {times[bad + 1]:.6g})")
    return Trajectory(times=times, positions=np.asarray(X),
                      velocities=None if V is None else np.asarray(V), metadata=meta)
