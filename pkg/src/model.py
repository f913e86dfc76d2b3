"""
Single-bottleneck RCP fluid model with two round-trip delay classes

Holds the parameter set, the equilibrium, the Brownian mean-queue approximation
and the Taylor coefficients of the right-hand side about equilibrium.
Rates are packets/ms and delays are ms throughout.
"""
import math
from dataclasses import dataclass, replace

from config.config import DEFAULT_CAPACITY, DEFAULT_SIGMA_SQ
from src.errors import ConsistencyError, ParameterError


@dataclass(frozen=True)
class ModelParams:
    """Protocol and network parameters of one RCP configuration"""
    a: float
    tau1: float
    tau2: float
    b: float = 0.0
    gamma: float = 1.0
    capacity: float = DEFAULT_CAPACITY
    kappa: float = 1.0
    sigma_sq: float = DEFAULT_SIGMA_SQ

    def __post_init__(self):
        checks = [
            (self.a > 0, "a must be > 0"),
            (self.capacity > 0, "capacity must be > 0"),
            (self.tau1 > 0, "tau1 must be > 0"),
            (self.tau2 > 0, "tau2 must be > 0"),
            (self.kappa > 0, "kappa must be > 0"),
            (self.b >= 0, "b must be >= 0"),
            (0 < self.gamma <= 1, "gamma must lie in (0, 1]"),
            (self.sigma_sq > 0, "sigma_sq must be > 0"),
        ]
        for ok, message in checks:
            # NaN fails every comparison, so it lands here as well
            if not ok:
                raise ParameterError(f"{message} (got {self!r})")

    @property
    def with_queue(self) -> bool:
        return self.b > 0

    @property
    def tau_sum(self) -> float:
        return self.tau1 + self.tau2

    @property
    def mean_rtt(self) -> float:
        """T̄, constant because queueing delay is neglected"""
        return 0.5 * (self.tau1 + self.tau2)

    @property
    def b_eff(self) -> float:
        return self.b * self.sigma_sq

    def with_kappa(self, kappa: float) -> "ModelParams":
        return replace(self, kappa=kappa)

    def swapped(self) -> "ModelParams":
        return replace(self, tau1=self.tau2, tau2=self.tau1)


@dataclass(frozen=True)
class Equilibrium:
    """Fixed point of the fluid model and its linear gain"""
    r_star: float
    rho_star: float
    a_tilde: float
    effective_capacity: float


@dataclass(frozen=True)
class TaylorCoefficients:
    """Partial-derivative coefficients of the RHS about equilibrium.

    x is the deviation of R(t), y of R(t - tau1) and z of R(t - tau2).
    Second and third order entries already include their factorial weights,
    e.g. xi_yy = f_yy / 2 and xi_xyy = f_xyy / 2.
    """
    xi_y: float
    xi_z: float
    xi_xy: float
    xi_xz: float
    xi_yy: float
    xi_yz: float
    xi_zz: float
    xi_xyy: float
    xi_xyz: float
    xi_xzz: float
    xi_yyz: float
    xi_yzz: float
    xi_yyy: float
    xi_zzz: float
    xi_x: float = 0.0
    xi_xx: float = 0.0
    xi_xxy: float = 0.0
    xi_xxz: float = 0.0
    xi_xxx: float = 0.0


def mean_queue(y: float, capacity: float, sigma_sq: float = 1.0) -> float:
    """Brownian approximation of the mean queue at arrival rate y"""
    if y < 0:
        raise ParameterError(f"arrival rate must be >= 0 (got {y})")
    if y >= capacity:
        raise ParameterError(
            f"queue model singular at or above capacity (y={y}, C={capacity})"
        )
    return y * sigma_sq / (2.0 * (capacity - y))


def utilization_from_b(b_eff: float) -> float:
    """ρ* = (4 + b - sqrt(b^2 + 8b)) / 4 in a cancellation-free form"""
    if b_eff <= 0:
        return 1.0
    root = math.sqrt(b_eff * b_eff + 8.0 * b_eff)
    return 1.0 - 2.0 * b_eff / (b_eff + root)


def equilibrium(params: ModelParams) -> Equilibrium:
    """Non-zero equilibrium R*, utilization ρ* and gain ã"""
    if not params.with_queue:
        target = params.gamma * params.capacity
        return Equilibrium(
            r_star=0.5 * target,
            rho_star=params.gamma,
            a_tilde=params.a / params.tau_sum,
            effective_capacity=target,
        )

    rho = utilization_from_b(params.b_eff)
    r_star = 0.5 * rho * params.capacity
    # (1 + 2R*/C) already equals the exact slope including the queue term
    a_tilde = params.a * (1.0 + rho) / params.tau_sum
    return Equilibrium(
        r_star=r_star,
        rho_star=rho,
        a_tilde=a_tilde,
        effective_capacity=params.capacity,
    )


def rho_to_b(rho_star: float, sigma_sq: float = 1.0) -> float:
    """Queue gain b giving equilibrium utilization rho_star"""
    if not 0.0 < rho_star < 1.0:
        raise ParameterError(f"rho_star must lie in (0, 1) (got {rho_star})")
    if sigma_sq <= 0:
        raise ParameterError(f"sigma_sq must be > 0 (got {sigma_sq})")
    return 2.0 * (1.0 - rho_star) ** 2 / (rho_star * sigma_sq)


def rhs(params: ModelParams, x: float, y_delayed: float) -> float:
    """κ-scaled right-hand side dR/dt for current rate x and load y"""
    eq_capacity = params.capacity if params.with_queue else params.gamma * params.capacity
    gain = params.kappa * x / (eq_capacity * params.mean_rtt)
    drive = eq_capacity - y_delayed
    if params.with_queue:
        drive -= params.b * params.capacity * mean_queue(y_delayed, params.capacity, params.sigma_sq)
    return params.a * gain * drive


def taylor_coefficients(params: ModelParams, eq: Equilibrium) -> TaylorCoefficients:
    """Coefficients of the cubic expansion about equilibrium"""
    a, t_sum = params.a, params.tau_sum
    r_star = eq.r_star

    if not params.with_queue:
        xi_lin = -a / t_sum
        xi_mixed = -a / (r_star * t_sum)
        return TaylorCoefficients(
            xi_y=xi_lin, xi_z=xi_lin,
            xi_xy=xi_mixed, xi_xz=xi_mixed,
            xi_yy=0.0, xi_yz=0.0, xi_zz=0.0,
            xi_xyy=0.0, xi_xyz=0.0, xi_xzz=0.0,
            xi_yyz=0.0, xi_yzz=0.0, xi_yyy=0.0, xi_zzz=0.0,
        )

    capacity = params.capacity
    if not 0.0 < r_star < 0.5 * capacity:
        raise ConsistencyError(
            f"R*={r_star} outside (0, C/2) for b={params.b}, C={capacity}"
        )

    slope = 1.0 + 2.0 * r_star / capacity
    spare = math.sqrt(params.b_eff * capacity * r_star)
    spare_sq = params.b_eff * capacity * r_star

    xi_lin = -a * slope / t_sum
    xi_mixed = -a * slope / (r_star * t_sum)
    xi_yz = -2.0 * a / (t_sum * spare)
    xi_xyz = -2.0 * a / (t_sum * r_star * spare)
    xi_yyz = -3.0 * a / (t_sum * spare_sq)
    xi_yyy = -a / (t_sum * spare_sq)

    return TaylorCoefficients(
        xi_y=xi_lin, xi_z=xi_lin,
        xi_xy=xi_mixed, xi_xz=xi_mixed,
        xi_yy=xi_yz / 2.0, xi_yz=xi_yz, xi_zz=xi_yz / 2.0,
        xi_xyy=xi_xyz / 2.0, xi_xyz=xi_xyz, xi_xzz=xi_xyz / 2.0,
        xi_yyz=xi_yyz, xi_yzz=xi_yyz,
        xi_yyy=xi_yyy, xi_zzz=xi_yyy,
    )
