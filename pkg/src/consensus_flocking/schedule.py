"""Piecewise-constant communication weights and their PE / ISC validation."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class PiecewiseConstantSignal:
    """A [0, 1]-valued step function on ``[0, horizon)``, repeated periodically.

    ``values[k]`` holds on ``[breakpoints[k], breakpoints[k+1])``; the last
    value holds up to ``horizon``.
    """

    breakpoints: tuple
    values: tuple
    horizon: float

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or bp.size == 0 or bp.shape != vals.shape:
            raise ValueError("signal needs matching non-empty breakpoints and values")
        if bp[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not self.horizon > bp[-1]:
            raise ValueError("horizon must exceed the last breakpoint")
        if np.any(vals < 0) or np.any(vals > 1) or not np.all(np.isfinite(vals)):
            raise ValueError("signal values must lie in [0, 1]")
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in bp))
        object.__setattr__(self, "values", tuple(float(v) for v in vals))
        object.__setattr__(self, "horizon", float(self.horizon))

    @classmethod
    def constant(cls, value: float, horizon: float = 1.0) -> "PiecewiseConstantSignal":
        return cls((0.0,), (float(value),), horizon)

    @property
    def period(self) -> float:
        return self.horizon

    @property
    def is_constant(self) -> bool:
        return len(set(self.values)) == 1

    @property
    def period_mass(self) -> float:
        bp = np.append(self.breakpoints, self.horizon)
        return float(np.dot(np.diff(bp), self.values))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tm = np.mod(t, self.horizon)
        idx = np.searchsorted(self.breakpoints, tm, side="right") - 1
        out = np.asarray(self.values)[np.clip(idx, 0, len(self.values) - 1)]
        return out if out.ndim else float(out)

    def cumulative(self, t):
        """Integral of the signal over ``[0, t]`` (vectorized)."""
        t = np.asarray(t, dtype=float)
        bp = np.asarray(self.breakpoints)
        vals = np.asarray(self.values)
        # mass accumulated at the start of each interval
        starts = np.concatenate(([0.0], np.cumsum(np.diff(bp) * vals[:-1])))
        n_periods = np.floor(t / self.horizon)
        tm = t - n_periods * self.horizon
        idx = np.clip(np.searchsorted(bp, tm, side="right") - 1, 0, len(vals) - 1)
        out = n_periods * self.period_mass + starts[idx] + (tm - bp[idx]) * vals[idx]
        return out if out.ndim else float(out)

    def breakpoints_in(self, t0: float, t1: float) -> np.ndarray:
        """All switching instants of the periodic extension inside ``[t0, t1]``."""
        if self.is_constant:
            return np.empty(0)
        first = int(np.floor(t0 / self.horizon))
        last = int(np.floor(t1 / self.horizon))
        reps = np.arange(first, last + 1)[:, None] * self.horizon
        pts = (reps + np.asarray(self.breakpoints)[None, :]).ravel()
        return pts[(pts >= t0) & (pts <= t1)]

    def to_dict(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "values": list(self.values),
                "horizon": self.horizon}


def window_integral(signal: PiecewiseConstantSignal, t: float, T: float) -> float:
    """Exact integral of ``signal`` over ``[t, t + T]``."""
    if t < 0:
        raise ValueError("window start must be nonnegative")
    if not T > 0:
        raise ValueError("window length must be positive")
    return float(signal.cumulative(t + T) - signal.cumulative(t))


@dataclass(frozen=True)
class PEResult:
    holds: bool
    worst_t: float
    worst_value: float


def _window_candidates(signal: PiecewiseConstantSignal, T: float, grid_step: float) -> np.ndarray:
    P = signal.horizon
    bp = np.asarray(signal.breakpoints)
    shifted = np.mod(bp - T, P)
    grid = np.arange(0.0, P, grid_step)
    return np.unique(np.concatenate((bp, shifted, grid)))


def window_infimum(signal: PiecewiseConstantSignal, T: float,
                   grid_step: Optional[float] = None) -> Tuple[float, float]:
    """(argmin, min) of the sliding window integral over one period."""
    if signal.is_constant:
        return 0.0, signal.values[0] * T
    if grid_step is None:
        grid_step = T / 1000.0
    ts = _window_candidates(signal, T, grid_step)
    w = signal.cumulative(ts + T) - signal.cumulative(ts)
    k = int(np.argmin(w))
    return float(ts[k]), float(w[k])


def validate_pe(signal: PiecewiseConstantSignal, T: float, mu: float,
                grid_step: Optional[float] = None) -> PEResult:
    """Check that every window of length ``T`` carries at least ``mu`` of service.

    The window integral is piecewise linear in its start time with kinks where
    either window end meets a breakpoint, so the minimum over one period is
    found on those candidates; a uniform grid covers the rest.
    """
    if grid_step is not None and not grid_step > 0:
        raise ValueError("grid_step must be positive")
    t, w = window_infimum(signal, T, grid_step)
    # one ulp-scale slack so exactly-tight schedules are accepted
    return PEResult(holds=w >= mu - 1e-12 * max(1.0, T), worst_t=t, worst_value=w)


class ScheduleMatrix:
    """N x N array of signals; entry (i, j) weighs the influence of j on i.

    The diagonal is identically 1 by convention and cannot be overridden.
    """

    def __init__(self, n: int, signals: Optional[Dict[Tuple[int, int], PiecewiseConstantSignal]] = None):
        if n < 1:
            raise ValueError("matrix size must be positive")
        self.n = int(n)
        one = PiecewiseConstantSignal.constant(1.0)
        self._signals = [[one] * self.n for _ in range(self.n)]
        for (i, j), sig in (signals or {}).items():
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"pair ({i}, {j}) out of range for N={n}")
            if i != j:
                self._signals[i][j] = sig

    @classmethod
    def constant(cls, n: int, value: float) -> "ScheduleMatrix":
        sig = PiecewiseConstantSignal.constant(value)
        return cls(n, {(i, j): sig for i in range(n) for j in range(n) if i != j})

    def __getitem__(self, ij: Tuple[int, int]) -> PiecewiseConstantSignal:
        i, j = ij
        return self._signals[i][j]

    def off_diagonal(self) -> Iterable[Tuple[int, int, PiecewiseConstantSignal]]:
        for i in range(self.n):
            for j in range(self.n):
                if i != j:
                    yield i, j, self._signals[i][j]

    def at(self, t: float) -> np.ndarray:
        m = np.ones((self.n, self.n))
        for i, j, sig in self.off_diagonal():
            m[i, j] = sig(t)
        return m

    def sample(self, ts) -> np.ndarray:
        """Weights at each time in ``ts``; shape ``(len(ts), N, N)``."""
        ts = np.asarray(ts, dtype=float)
        out = np.ones((ts.size, self.n, self.n))
        for i, j, sig in self.off_diagonal():
            out[:, i, j] = sig(ts)
        return out

    def breakpoints_in(self, t0: float, t1: float) -> np.ndarray:
        pts = [sig.breakpoints_in(t0, t1) for _, _, sig in self.off_diagonal()]
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)

    def permuted(self, perm) -> "ScheduleMatrix":
        """Relabel agents: new agent ``a`` is old agent ``perm[a]``."""
        perm = list(perm)
        return ScheduleMatrix(self.n, {(a, b): self[perm[a], perm[b]]
                                       for a in range(self.n) for b in range(self.n) if a != b})

    def to_entries(self) -> list:
        return [{"i": i, "j": j, **sig.to_dict()} for i, j, sig in self.off_diagonal()]

    @classmethod
    def from_entries(cls, n: int, entries: list) -> "ScheduleMatrix":
        signals = {}
        for e in entries:
            i, j = int(e["i"]), int(e["j"])
            signals[(i, j)] = PiecewiseConstantSignal(tuple(e["breakpoints"]), tuple(e["values"]),
                                                      float(e["horizon"]))
        return cls(n, signals)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_entries(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, n: int, path) -> "ScheduleMatrix":
        with open(path) as fh:
            return cls.from_entries(n, json.load(fh))


@dataclass(frozen=True)
class ISCResult:
    holds: bool
    # (i, j) with i < j -> hub index, or None where no hub serves the pair
    witness: Dict[Tuple[int, int], Optional[int]]


def link_infima(matrix: ScheduleMatrix, T: float, grid_step: Optional[float] = None) -> np.ndarray:
    """Worst window integral of every link; the diagonal is ``T``."""
    out = np.full((matrix.n, matrix.n), float(T))
    for i, j, sig in matrix.off_diagonal():
        out[i, j] = window_infimum(sig, T, grid_step)[1]
    return out


def validate_isc(matrix: ScheduleMatrix, T: float, mu: float,
                 grid_step: Optional[float] = None) -> ISCResult:
    """Search, for every pair (i, j), a single hub k linked well to both.

    The hub may coincide with i or j, which makes per-link PE imply ISC.
    """
    ok = link_infima(matrix, T, grid_step) >= mu - 1e-12 * max(1.0, T)
    witness = {}
    for i in range(matrix.n):
        for j in range(i + 1, matrix.n):
            hubs = np.flatnonzero(ok[i] & ok[j])
            witness[(i, j)] = int(hubs[0]) if hubs.size else None
    return ISCResult(holds=all(k is not None for k in witness.values()), witness=witness)


def validate_pe_matrix(matrix: ScheduleMatrix, T: float, mu: float,
                       grid_step: Optional[float] = None) -> Dict[Tuple[int, int], PEResult]:
    return {(i, j): validate_pe(sig, T, mu, grid_step) for i, j, sig in matrix.off_diagonal()}


def gen_square_pe(T: float, mu: float, duty_phase: Optional[float] = 0.0,
                  seed: Optional[int] = None) -> PiecewiseConstantSignal:
    """Period-``T`` square wave switched on for a length ``mu`` each period.

    With ``mu > T/2`` this returns the constant signal ``mu / T`` instead.
    ``duty_phase=None`` draws the phase from ``seed``.
    """
    if not (T > 0 and mu > 0):
        raise ValueError("T and mu must be positive")
    if mu > T:
        raise ValueError(f"service mu={mu} exceeds window T={T}")
    if mu > T / 2:
        return PiecewiseConstantSignal.constant(min(1.0, mu / T), T)
    if duty_phase is None:
        duty_phase = float(np.random.default_rng(seed).uniform(0.0, 1.0))
    if not 0.0 <= duty_phase < 1.0:
        raise ValueError("duty_phase must lie in [0, 1)")
    on0 = duty_phase * T
    on1 = on0 + mu
    if on0 == 0.0:
        return PiecewiseConstantSignal((0.0, mu), (1.0, 0.0), T)
    if on1 <= T:
        if on1 == T:
            return PiecewiseConstantSignal((0.0, on0), (0.0, 1.0), T)
        return PiecewiseConstantSignal((0.0, on0, on1), (0.0, 1.0, 0.0), T)
    # on-block wraps around the period end
    return PiecewiseConstantSignal((0.0, on1 - T, on0), (1.0, 0.0, 1.0), T)


def gen_pe_matrix(n: int, T: float, mu: float, duty_phase: Optional[float] = 0.0,
                  seed: Optional[int] = None) -> ScheduleMatrix:
    """Every off-diagonal link gets a square wave; random phases when ``duty_phase`` is None."""
    rng = np.random.default_rng(seed)
    signals = {}
    for i in range(n):
        for j in range(n):
            if i != j:
                phase = float(rng.uniform()) if duty_phase is None else duty_phase
                signals[(i, j)] = gen_square_pe(T, mu, phase)
    return ScheduleMatrix(n, signals)


def gen_isc_star(n: int, T: float, mu: float, hub: int, seed: Optional[int] = None,
                 duty_phase: Optional[float] = 0.0) -> ScheduleMatrix:
    """Star topology: only links touching ``hub`` (0-based) ever carry service."""
    if not 0 <= hub < n:
        raise ValueError(f"hub {hub} out of range for N={n}")
    rng = np.random.default_rng(seed)
    zero = PiecewiseConstantSignal.constant(0.0, T)
    signals = {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if hub in (i, j):
                phase = float(rng.uniform()) if duty_phase is None else duty_phase
                signals[(i, j)] = gen_square_pe(T, mu, phase)
            else:
                signals[(i, j)] = zero
    return ScheduleMatrix(n, signals)


def write_window_csv(matrix: ScheduleMatrix, T: float, times, path) -> None:
    """Window-integral diagnostics with columns t, i, j, integral."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "i", "j", "integral"])
        for t in times:
            for i, j, sig in matrix.off_diagonal():
                w.writerow([repr(float(t)), i, j, repr(window_integral(sig, float(t), T))])
