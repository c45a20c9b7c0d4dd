"""Right-hand sides of the failure-weighted first- and second-order systems."""

from __future__ import annotations

from typing import Tuple

import numpy as np

from . import _fallback
from .model import (FirstOrderState, InteractionKernel, KernelFamily, ScalingMode,
                    SecondOrderState, SystemConfig)
from .schedule import ScheduleMatrix

_FAMILY_CODES = {
    KernelFamily.CONSTANT: _fallback.FAMILY_CONSTANT,
    KernelFamily.POWERLAW: _fallback.FAMILY_POWERLAW,
    KernelFamily.TABULATED: _fallback.FAMILY_TABULATED,
}


def kernel_args(kernel: InteractionKernel, scaling: ScalingMode) -> tuple:
    """Flatten a kernel into the positional arguments the integration cores take."""
    tab_x = np.asarray(kernel.breakpoints or (0.0,), dtype=float)
    tab_y = np.asarray(kernel.values or (1.0,), dtype=float)
    return (_FAMILY_CODES[kernel.family], float(kernel.c), float(kernel.beta), tab_x, tab_y,
            int(ScalingMode(scaling) is ScalingMode.NORMALIZED))


def _check(config: SystemConfig, matrix: ScheduleMatrix, positions: np.ndarray, t: float):
    if t < 0:
        raise ValueError("time must be nonnegative")
    if positions.shape != (config.n_agents, config.dim):
        raise ValueError(f"state shape {positions.shape} does not match "
                         f"config ({config.n_agents}, {config.dim})")
    if matrix.n != config.n_agents:
        raise ValueError("schedule size does not match number of agents")


def rhs_first_order(config: SystemConfig, kernel: InteractionKernel, matrix: ScheduleMatrix,
                    state: FirstOrderState, t: float) -> np.ndarray:
    """x_i' = lambda_i / N * sum_j M_ij(t) phi(|x_i - x_j|) (x_j - x_i)."""
    x = state.positions
    _check(config, matrix, x, t)
    return _fallback.rhs_first(x, matrix.at(t), *kernel_args(kernel, config.scaling))


def rhs_second_order(config: SystemConfig, kernel: InteractionKernel, matrix: ScheduleMatrix,
                     state: SecondOrderState, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """(x', v') with phi evaluated on position gaps and applied to velocity gaps."""
    x = state.positions
    _check(config, matrix, x, t)
    return _fallback.rhs_second(x, state.velocities, matrix.at(t),
                                *kernel_args(kernel, config.scaling))
