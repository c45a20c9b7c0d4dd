"""Check simulated trajectories against the certified bounds."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .integrate import Trajectory, simulate
from .metrics import diameters
from .model import Condition, InteractionKernel, SecondOrderState, SystemConfig, kernel_bounds
from .schedule import ScheduleMatrix, validate_isc, validate_pe_matrix
from .theory import (ContractionCoefficients, FCase, FCaseKind, contraction_factor, dv_bound,
                     flocking_check, rate_sequence)

REL_TOL = 1e-7


@dataclass
class CheckRecord:
    name: str
    theoretical_bound: float
    empirical_value: float
    margin: float
    passed: bool


@dataclass
class VerificationReport:
    premise: str = "valid"
    checks: List[CheckRecord] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.premise == "valid" and all(c.passed for c in self.checks)

    def upper(self, name: str, bound: float, value: float, tol: float) -> CheckRecord:
        """Record ``value <= bound + tol``."""
        rec = CheckRecord(name, float(bound), float(value), float(bound + tol - value),
                          bool(value <= bound + tol))
        self.checks.append(rec)
        return rec

    def failures(self) -> List[CheckRecord]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        out = dict(self.extra)
        out["premise"] = self.premise
        out["checks"] = [asdict(c) for c in self.checks]
        out["pass"] = self.passed
        return _jsonable(out)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        obj = float(obj)
        return obj if math.isfinite(obj) else ("inf" if obj > 0 else "-inf" if obj < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def check_premise(matrix: ScheduleMatrix, system: SystemConfig) -> dict:
    """Validate the schedule against the declared service condition."""
    T, mu = system.window, system.service
    if system.condition is Condition.PE:
        res = validate_pe_matrix(matrix, T, mu)
        failing = [[i, j] for (i, j), r in sorted(res.items()) if not r.holds]
        worst = min((r.worst_value for r in res.values()), default=T)
        return {"condition": "PE", "holds": not failing, "failing_links": failing,
                "worst_window_integral": worst}
    res = validate_isc(matrix, T, mu)
    return {"condition": "ISC", "holds": res.holds,
            "witness": [[i, j, k] for (i, j), k in sorted(res.witness.items())]}


def window_count(horizon: float, window: float) -> int:
    return int(math.floor(horizon / window + 1e-9))


def first_order_coefficients(system: SystemConfig, kernel: InteractionKernel,
                             positions) -> ContractionCoefficients:
    d0 = float(diameters(np.asarray(positions)[None])[0])
    b = kernel_bounds(kernel, system.scaling, d0)
    return contraction_factor(system.condition, system.n_agents, system.window,
                              system.service, b.k_min, b.k_max)


def verify_rate(trajectory: Trajectory, system: SystemConfig,
                coefficients: ContractionCoefficients, report: VerificationReport,
                tol_rel: float = REL_TOL) -> None:
    """Diameter at every window end against the geometric certificate."""
    diam = diameters(trajectory.positions)
    d0 = diam[0]
    n_max = window_count(trajectory.times[-1], system.window)
    bounds = rate_sequence(coefficients, d0, n_max)
    for n in range(n_max + 1):
        k = trajectory.index_at(n * system.window)
        report.upper(f"rate[n={n}]", bounds[n], diam[k], tol_rel * d0)
    report.extra["rate_sequence"] = bounds


def verify_monotone(values: np.ndarray, name: str, report: VerificationReport, tol: float) -> None:
    """Largest one-step increase must stay below ``tol``."""
    jump = float(np.max(np.diff(values))) if values.size > 1 else 0.0
    report.upper(name, 0.0, max(jump, 0.0), tol)


def verify_dv(trajectory: Trajectory, case: FCase, kernel: InteractionKernel,
              report: VerificationReport, tol_rel: float = REL_TOL) -> None:
    """Velocity-diameter estimate at every window end."""
    dx = diameters(trajectory.positions)
    dv = diameters(trajectory.velocities)
    T = case.window
    n_max = window_count(trajectory.times[-1], T)
    seq = []
    for n in range(n_max + 1):
        k = trajectory.index_at(n * T)
        bound = dv_bound(case, kernel, dx[0], dv[0], dx[k], dv[k], T)
        seq.append(bound)
        report.upper(f"dv_bound[n={n}]", bound, dv[k], tol_rel * dv[0])
    report.extra["dv_bound_sequence"] = seq


def run_verification(system: SystemConfig, kernel: InteractionKernel, matrix: ScheduleMatrix,
                     state, horizon: float, step: float, *, backend: Optional[str] = None,
                     config_hash: Optional[str] = None) -> VerificationReport:
    report = VerificationReport()
    premise = check_premise(matrix, system)
    report.extra.update({"config_hash": config_hash, "condition": system.condition.value,
                         "scaling": system.scaling.value, "schedule_validation": premise})
    if isinstance(state, SecondOrderState) and not kernel.is_decreasing():
        # the velocity estimate is only established for non-increasing kernels
        premise["kernel_non_increasing"] = False
        premise["holds"] = False
    if not premise["holds"]:
        report.premise = "invalid-premise"
        return report

    n_max = window_count(horizon, system.window)
    checkpoints = [n * system.window for n in range(1, n_max + 1)]
    traj = simulate(system, kernel, matrix, state, horizon, step, backend=backend,
                    config_hash=config_hash, checkpoints=checkpoints)
    report.extra["steps"] = len(traj) - 1

    if isinstance(state, SecondOrderState):
        kind = FCaseKind.of(system.condition, system.scaling)
        case = FCase(kind, kernel.p, system.n_agents, system.window, system.service)
        dv = diameters(traj.velocities)
        dx = diameters(traj.positions)
        b = kernel_bounds(kernel, system.scaling, dx[0] + system.window * dv[0])
        coeffs = contraction_factor(system.condition, system.n_agents, system.window,
                                    system.service, b.k_min, b.k_max)
        report.extra.update({"gamma_tilde": coeffs.gamma_tilde, "gamma": coeffs.gamma,
                             "eta": coeffs.eta})
        verify_dv(traj, case, kernel, report)
        report.extra["rate_sequence"] = report.extra["dv_bound_sequence"]
        verify_monotone(dv, "D_V_non_increasing", report, REL_TOL * dv[0])
        verdict = flocking_check(case, kernel, dx[0], dv[0])
        report.extra["f_case"] = kind.value
        report.extra["flocking"] = {"classification": verdict.classification.value,
                                    "integral": verdict.integral_value,
                                    "guaranteed": verdict.guaranteed}
    else:
        coeffs = first_order_coefficients(system, kernel, state.positions)
        report.extra.update({"gamma_tilde": coeffs.gamma_tilde, "gamma": coeffs.gamma,
                             "eta": coeffs.eta})
        verify_rate(traj, system, coeffs, report)
        diam = diameters(traj.positions)
        verify_monotone(diam, "diameter_non_increasing", report, REL_TOL * diam[0])
    return report
