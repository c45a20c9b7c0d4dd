"""Diameters, extrema, projections and consensus detection."""

from __future__ import annotations

import csv
from typing import Optional, Tuple

import numpy as np

from .integrate import Trajectory
from .model import pairwise_distances


def _as_matrix(positions) -> np.ndarray:
    x = np.asarray(positions, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def diameter(positions) -> float:
    """Largest pairwise Euclidean distance."""
    return float(pairwise_distances(_as_matrix(positions)).max())


def diameters(stack: np.ndarray) -> np.ndarray:
    """Diameter of every snapshot in a ``(K, N, d)`` stack."""
    diff = stack[:, None, :, :] - stack[:, :, None, :]
    return np.sqrt(np.einsum("kijd,kijd->kij", diff, diff)).max(axis=(1, 2))


def gamma_extrema(positions) -> Tuple[float, Optional[float]]:
    """(max_i |x_i|, min_i x_i); the minimum is only defined on the line."""
    x = _as_matrix(positions)
    gmax = float(np.linalg.norm(x, axis=1).max())
    gmin = float(x[:, 0].min()) if x.shape[1] == 1 else None
    return gmax, gmin


def dx_dv(trajectory: Trajectory, t: float) -> Tuple[float, float]:
    if not trajectory.second_order:
        raise ValueError("dx_dv needs a second-order trajectory")
    k = trajectory.index_at(t)
    return diameter(trajectory.positions[k]), diameter(trajectory.velocities[k])


def projected_positions(positions, base_point, direction) -> np.ndarray:
    """Signed coordinates ``(x_i - base_point) . direction`` along a unit vector."""
    x = _as_matrix(positions)
    w = np.asarray(direction, dtype=float).ravel()
    if abs(np.linalg.norm(w) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    return (x - np.asarray(base_point, dtype=float).ravel()) @ w


def projected_diameter(positions, base_point, direction) -> float:
    y = projected_positions(positions, base_point, direction)
    return float(y.max() - y.min())


def detect_consensus(trajectory: Trajectory, eps: float) -> Optional[float]:
    """First recorded time with diameter at most ``eps``, or None."""
    d = diameters(trajectory.positions)
    hit = np.flatnonzero(d <= eps)
    return float(trajectory.times[hit[0]]) if hit.size else None


def metrics_table(trajectory: Trajectory) -> dict:
    out = {"t": trajectory.times, "diameter": diameters(trajectory.positions)}
    if trajectory.second_order:
        out["D_X"] = out["diameter"]
        out["D_V"] = diameters(trajectory.velocities)
    out["gamma_max"] = np.linalg.norm(trajectory.positions, axis=2).max(axis=1)
    return out


def write_metrics_csv(trajectory: Trajectory, path, every: int = 1) -> None:
    """Columns t, diameter[, D_X, D_V], gamma_max."""
    table = metrics_table(trajectory)
    cols = list(table)
    idx = list(range(0, len(trajectory), every))
    if idx[-1] != len(trajectory) - 1:
        idx.append(len(trajectory) - 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for k in idx:
            w.writerow([repr(float(table[c][k])) for c in cols])
