"""Closed-form guarantees: contraction factors, barriers, and the flocking criterion."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .model import Condition, InteractionKernel, KernelFamily, ScalingMode, phi_eval
from .quadrature import adaptive_simpson

QUAD_REL_TOL = 1e-10
TAIL_REL_TOL = 1e-12
TAIL_MAX = 1e9


@dataclass(frozen=True)
class ContractionCoefficients:
    gamma_tilde: float
    # gamma' divided by the initial spread beta - alpha
    gamma_prime_per_unit: float
    eta: int
    gamma: float


def _positive(**kw):
    for name, val in kw.items():
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")


def gamma_tilde(condition, n_agents: int, window: float, service: float,
                k_min: float, k_max: float) -> float:
    _positive(n_agents=n_agents, window=window, service=service, k_min=k_min, k_max=k_max)
    if service > window:
        raise ValueError(f"service mu={service} exceeds window T={window}")
    base = n_agents * (1.0 + k_max * window)
    mk = service * k_min
    if Condition(condition) is Condition.PE:
        return mk / (base + 2.0 * mk)
    return mk / (2.0 * (base + mk))


def contraction_factor(condition, n_agents: int, window: float, service: float,
                       k_min: float, k_max: float) -> ContractionCoefficients:
    cond = Condition(condition)
    gt = gamma_tilde(cond, n_agents, window, service, k_min, k_max)
    decay = math.exp(-k_max * window)
    if cond is Condition.PE:
        return ContractionCoefficients(gt, gt, 1, decay * gt)
    return ContractionCoefficients(gt, decay * gt, 2, decay * decay * gt)


def rate_bound(coefficients: ContractionCoefficients, diameter0: float, n: int) -> float:
    """Certified diameter after ``n`` windows: ``(1 - gamma)**n * diameter0``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return (1.0 - coefficients.gamma) ** n * diameter0


def rate_sequence(coefficients: ContractionCoefficients, diameter0: float, n_max: int) -> list:
    return [rate_bound(coefficients, diameter0, n) for n in range(n_max + 1)]


def remark_consistency(n_agents: int, window: float, k_min: float,
                       k_max: float) -> ContractionCoefficients:
    """PE coefficients at full service (mu = T), i.e. with no link ever failing."""
    return contraction_factor(Condition.PE, n_agents, window, window, k_min, k_max)


def psi_L(alpha: float, z: float, tau: float, k_max: float) -> float:
    """Lower barrier decaying from ``z`` toward ``alpha``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return alpha + math.exp(-k_max * tau) * (z - alpha)


def psi_R(beta: float, z: float, tau: float, k_max: float) -> float:
    """Upper barrier rising from ``z`` toward ``beta``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return beta - math.exp(-k_max * tau) * (beta - z)


class FCaseKind(str, enum.Enum):
    PE_FIXED = "PEFixed"
    PE_NORMALIZED = "PENormalized"
    ISC_FIXED = "ISCFixed"
    ISC_NORMALIZED = "ISCNormalized"

    @classmethod
    def of(cls, condition, scaling) -> "FCaseKind":
        cond, sc = Condition(condition), ScalingMode(scaling)
        if cond is Condition.PE:
            return cls.PE_FIXED if sc is ScalingMode.FIXED else cls.PE_NORMALIZED
        return cls.ISC_FIXED if sc is ScalingMode.FIXED else cls.ISC_NORMALIZED

    @property
    def condition(self) -> Condition:
        return Condition.PE if self.value.startswith("PE") else Condition.ISC

    @property
    def scaling(self) -> ScalingMode:
        return ScalingMode.FIXED if self.value.endswith("Fixed") else ScalingMode.NORMALIZED


@dataclass(frozen=True)
class FCase:
    kind: FCaseKind
    p: float
    n_agents: int
    window: float
    service: float

    def __post_init__(self):
        object.__setattr__(self, "kind", FCaseKind(self.kind))
        _positive(p=self.p, n_agents=self.n_agents, window=self.window, service=self.service)


def f_eval(case: FCase, y: float) -> float:
    """Per-window velocity contraction as a function of the smallest kernel value ``y``.

    The ISC variants are evaluated after dividing through by exp(theta1/2 * pT)
    so that large ``pT`` or small ``y`` cannot overflow.
    """
    if not y > 0:
        raise ValueError(f"y must be positive, got {y}")
    p, n, T, mu = case.p, case.n_agents, case.window, case.service
    kind = case.kind
    if kind is FCaseKind.PE_FIXED:
        return math.exp(-p * T) * mu * y / (n * (1.0 + T * p) + 2.0 * mu * y)
    if kind is FCaseKind.PE_NORMALIZED:
        return math.exp(-p * T / y) * mu * y / (n * p + n * T * p * p / y + 2.0 * mu * y)
    s = p * T if kind is FCaseKind.ISC_FIXED else p * T / y
    lin = 1.0 + s
    return mu * y * math.exp(-3.0 * s) / (2.0 * n * lin + 2.0 * mu * y * math.exp(-s))


def derived_factor(case: FCase, y: float) -> float:
    """exp(-eta K_max T) * gamma_tilde with (K_min, K_max) built from ``y`` and ``p``."""
    if not y > 0:
        raise ValueError(f"y must be positive, got {y}")
    if case.kind.scaling is ScalingMode.FIXED:
        k_min, k_max = y, case.p
    else:
        k_min, k_max = y / case.p, case.p / y
    return contraction_factor(case.kind.condition, case.n_agents, case.window,
                              case.service, k_min, k_max).gamma


def _integrand(case: FCase, kernel: InteractionKernel):
    return lambda x: f_eval(case, phi_eval(kernel, max(x, 0.0)))


def dv_bound(case: FCase, kernel: InteractionKernel, dx0: float, dv0: float,
             dxn: float, dvn: float, window: Optional[float] = None) -> float:
    """Upper bound on the velocity diameter after n windows.

    Integrates f(phi(x)) between ``dx0 + T dv0`` and ``dxn + T dvn``; the
    integral is signed, so a shrinking endpoint raises the bound above dv0.
    """
    T = case.window if window is None else float(window)
    a = dx0 + T * dv0
    b = dxn + T * dvn
    if a == b:
        return float(dv0)
    return dv0 - adaptive_simpson(_integrand(case, kernel), a, b, rel_tol=QUAD_REL_TOL) / T


class TailClass(str, enum.Enum):
    DIVERGENT = "Divergent"
    CONVERGENT = "Convergent"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class FlockingVerdict:
    guaranteed: bool
    integral_value: float
    classification: TailClass


def classify_tail(case: FCase, kernel: InteractionKernel) -> TailClass:
    """Whether f(phi(x)) has a non-integrable tail, decided in closed form where possible."""
    if kernel.family is KernelFamily.CONSTANT:
        return TailClass.DIVERGENT
    if kernel.family is KernelFamily.POWERLAW:
        if kernel.beta == 0.0:
            return TailClass.DIVERGENT
        if case.kind.scaling is ScalingMode.FIXED:
            # f(y) ~ C y near 0, so the tail behaves like (1 + x)**-beta
            return TailClass.DIVERGENT if kernel.beta <= 1.0 else TailClass.CONVERGENT
        # f(y) ~ C exp(-2pT/y) y**2 near 0, super-polynomially small for beta > 0
        return TailClass.CONVERGENT
    return TailClass.INCONCLUSIVE


def tail_integral(case: FCase, kernel: InteractionKernel, start: float) -> float:
    """Integral of f(phi(x)) over ``[start, inf)``, truncated by interval doubling."""
    g = _integrand(case, kernel)
    upper = 2.0 * (start + 1.0)
    total = adaptive_simpson(g, start, upper, rel_tol=QUAD_REL_TOL)
    while upper <= TAIL_MAX:
        added = adaptive_simpson(g, upper, 2.0 * upper, rel_tol=QUAD_REL_TOL)
        total += added
        upper *= 2.0
        if added < TAIL_REL_TOL * total:
            break
    return total


def flocking_check(case: FCase, kernel: InteractionKernel, dx0: float, dv0: float,
                   window: Optional[float] = None) -> FlockingVerdict:
    """Sufficient condition for flocking from initial position/velocity diameters."""
    if not kernel.is_decreasing():
        raise ValueError("flocking criterion requires a non-increasing kernel")
    T = case.window if window is None else float(window)
    cls = classify_tail(case, kernel)
    if cls is TailClass.DIVERGENT:
        return FlockingVerdict(True, math.inf, cls)
    integral = tail_integral(case, kernel, dx0 + T * dv0) / T
    return FlockingVerdict(bool(dv0 < integral), integral, cls)
