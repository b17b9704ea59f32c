"""Mean curvature flow of equivariant hypersurfaces.

On a geodesic sphere or tube the flow moves the radius only, dr/dt = -H(r),
so the evolution is an autonomous scalar ODE. The volume form is carried
along as log(mu) with d(log mu)/dt = -H^2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import RK45

from .ambient import CurvatureTensor, tangential_coupling_batch
from .profiles import (
    Condition,
    EquivariantFamily,
    frame_diagonal,
    gradient_norm_sq,
    hopf_frame,
    mean_curvature_profile,
    spectrum_array,
)
from .shape import (
    PinchingParams,
    ShapeSpectrum,
    norm_a2,
    norm_ao2,
    pinching_q,
    simons_z,
    two_convexity_margin,
    w_and_f,
)

__all__ = [
    "FlowIntegrationError",
    "Termination",
    "StopPolicy",
    "FlowTrajectory",
    "evolve",
    "comparison_lower_bound",
    "central_difference",
    "Residuals",
    "evolution_residuals",
    "MonitorSummary",
    "monitor_report",
]


class FlowIntegrationError(RuntimeError):
    pass


class Termination(str, enum.Enum):
    CURVATURE_CAP = "CurvatureCap"
    RADIUS_FLOOR = "RadiusFloor"
    TIME_CAP = "TimeCap"


@dataclass(frozen=True)
class StopPolicy:
    """When to stop, and how finely to resolve the blow-up.

    Steps are capped at ``step_fraction / (|A|^2 + rbar)``, a fixed fraction
    of the curvature timescale H / (dH/dt). Near a point singularity this
    equals r/H to leading order and is proportional to the time left, while
    away from it the cap still resolves the faster mode of tube flows.
    """

    curvature_cap: float = 1e6
    radius_floor: float = 1e-6
    time_cap: float = 10.0
    step_fraction: float = 2e-4


@dataclass(frozen=True)
class FlowTrajectory:
    family: EquivariantFamily
    params: PinchingParams
    t: np.ndarray
    r: np.ndarray
    log_volume: np.ndarray
    lambdas: np.ndarray
    H: np.ndarray
    normA2: np.ndarray
    Q: np.ndarray
    f_sigma_eta: np.ndarray
    t_singular_estimate: float
    termination: Termination
    stop: StopPolicy = field(default_factory=StopPolicy)
    rtol: float = 1e-10
    atol: float = 1e-12

    def __len__(self) -> int:
        return self.t.size

    def spectrum(self, i: int) -> ShapeSpectrum:
        return ShapeSpectrum(self.lambdas[i])

    @property
    def m(self) -> int:
        return self.family.m

    def columns(self) -> dict[str, np.ndarray]:
        lam = self.lambdas
        H = self.H
        return {
            "t": self.t,
            "r": self.r,
            "H": H,
            "normA2": self.normA2,
            "normAo2": norm_ao2(lam),
            "Z": simons_z(lam),
            "Q": self.Q,
            "f_sigma_eta": self.f_sigma_eta,
            "lambda1": lam[:, 0],
            "lambda1_plus_lambda2": lam[:, 0] + lam[:, 1],
            "gap_ratio": (lam[:, -1] - lam[:, 1]) ** 2 / (H * H),
            "log_volume": self.log_volume,
        }


def evolve(
    family: EquivariantFamily,
    r0: float,
    params: PinchingParams | None = None,
    stop: StopPolicy | None = None,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> FlowTrajectory:
    """Integrate dr/dt = -H(r) from r0 until a stop condition triggers."""
    stop = stop or StopPolicy()
    params = params or PinchingParams(family.m)
    family.check_radius(r0)
    H0 = float(mean_curvature_profile(family, r0))
    if not H0 > 0:
        raise ValueError(f"initial mean curvature must be positive, got H(r0) = {H0}")

    mean_curvature, norm_a2_scalar = _scalar_curvatures(family)
    rbar = family.space.einstein

    def rhs(_, y):
        H = mean_curvature(y[0])
        return np.array([-H, -H * H])

    solver = RK45(
        rhs,
        0.0,
        np.array([float(r0), 0.0]),
        t_bound=stop.time_cap,
        rtol=rtol,
        atol=atol,
        max_step=stop.step_fraction / (norm_a2_scalar(r0) + rbar),
    )
    ts, rs, vols = [0.0], [float(r0)], [0.0]
    termination = Termination.TIME_CAP
    while True:
        message = solver.step()
        if solver.status == "failed":
            raise FlowIntegrationError(f"integration failed at t={solver.t!r}: {message}")
        r = float(solver.y[0])
        ts.append(float(solver.t))
        rs.append(r)
        vols.append(float(solver.y[1]))
        H = mean_curvature(r) if r > 0 else math.inf
        if H >= stop.curvature_cap:
            termination = Termination.CURVATURE_CAP
            break
        if r <= stop.radius_floor:
            termination = Termination.RADIUS_FLOOR
            break
        if solver.status == "finished":
            break
        if not (r > 0 and H > 0):
            raise FlowIntegrationError(f"mean curvature lost positivity at t={solver.t!r}")
        solver.max_step = stop.step_fraction / (norm_a2_scalar(r) + rbar)

    t = np.array(ts)
    r = np.array(rs)
    lam = spectrum_array(family, r, check=False)
    H = lam.sum(axis=1)
    traj = FlowTrajectory(
        family=family,
        params=params,
        t=t,
        r=r,
        log_volume=np.array(vols),
        lambdas=lam,
        H=H,
        normA2=norm_a2(lam),
        Q=pinching_q(lam, params),
        f_sigma_eta=w_and_f(lam, params).f_sigma_eta,
        t_singular_estimate=_singular_time(t, r, H),
        termination=termination,
        stop=stop,
        rtol=rtol,
        atol=atol,
    )
    return traj


def _scalar_curvatures(family: EquivariantFamily):
    """Plain-float H(r) and |A|^2(r); the ODE right-hand side is called ~10^5 times."""
    terms = [
        (c.multiplicity, math.sqrt(c.curvature), c.condition is Condition.SPHERE_CAP)
        for c in family.classes
    ]

    def value(c: float, cap: bool, r: float) -> float:
        return c / math.tan(c * r) if cap else -c * math.tan(c * r)

    def H(r: float) -> float:
        return sum(mult * value(c, cap, r) for mult, c, cap in terms)

    def A2(r: float) -> float:
        return sum(mult * value(c, cap, r) ** 2 for mult, c, cap in terms)

    return H, A2


def _singular_time(t: np.ndarray, r: np.ndarray, H: np.ndarray) -> float:
    """Intercept of a least-squares fit t = T - c r^2 over the last decade of H."""
    tail = H >= H[-1] / 10.0
    if tail.sum() < 3:
        tail = np.zeros_like(tail)
        tail[-3:] = True
    slope, intercept = np.polyfit(r[tail] ** 2, t[tail], 1)
    return float(intercept)


def comparison_lower_bound(H0: float, m: int, t):
    """Solution of h' = h^3/m with h(0) = H0: H0 (1 - 2 H0^2 t / m)^(-1/2)."""
    if not H0 > 0:
        raise ValueError("H0 must be positive")
    t = np.asarray(t, dtype=float)
    blowup = m / (2.0 * H0 * H0)
    if np.any(t >= blowup):
        raise ValueError(f"t at or beyond the comparison blow-up time {blowup}")
    out = H0 / np.sqrt(1.0 - 2.0 * H0 * H0 * t / m)
    return float(out) if out.ndim == 0 else out


def central_difference(t: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Second-order derivative estimate at interior nodes of a non-uniform grid."""
    h1 = np.diff(t)[:-1]
    h2 = np.diff(t)[1:]
    df1 = np.diff(f)[:-1]
    df2 = np.diff(f)[1:]
    return (h1 * df2 / h2 + h2 * df1 / h1) / (h1 + h2)


class Residuals(NamedTuple):
    resH: float
    resA2: float
    resVol: float
    grad_norm_sq: float
    simons: float


def evolution_residuals(traj: FlowTrajectory, tensor: CurvatureTensor) -> Residuals:
    """Compare finite-difference time derivatives with the evolution equations.

    On these homogeneous hypersurfaces the Laplacian terms vanish but nabla A
    does not, so the |A|^2 equation keeps its -2|nabla A|^2 term; that norm is
    taken from the type-A Codazzi form. ``simons`` is the relative mismatch
    between that norm and the one implied by Simons' identity, using both
    curvature couplings computed from ``tensor``.
    """
    if len(traj) < 3:
        raise ValueError("need at least three samples")
    family = traj.family
    if tensor.space != family.space:
        raise ValueError("tensor and trajectory live in different spaces")
    rbar = family.space.einstein
    t = traj.t
    H = traj.H[1:-1]
    A2 = traj.normA2[1:-1]

    dH = central_difference(t, traj.H)
    resH = np.max(np.abs(dH - H * (A2 + rbar)) / (1.0 + np.abs(dH)))

    frame = hopf_frame(family, traj.r[0])
    diag = frame_diagonal(family, traj.r[1:-1])
    E = np.broadcast_to(frame.tangent.T, (diag.shape[0],) + frame.tangent.T.shape)
    h = diag[:, :, None] * np.eye(family.m)
    tangential = tangential_coupling_batch(tensor, E, h)
    grad2 = gradient_norm_sq(family)
    dA2 = central_difference(t, traj.normA2)
    expected = 2.0 * A2 * (A2 + rbar) - 4.0 * tangential - 2.0 * grad2
    resA2 = np.max(np.abs(dA2 - expected) / (1.0 + np.abs(dA2)))

    dvol = central_difference(t, traj.log_volume)
    Hsq = H * H
    resVol = np.max(np.abs(dvol + Hsq) / (1.0 + Hsq))

    nu = frame.normal
    R0 = frame.tangent @ np.einsum("abcd,a,c->bd", tensor.components, nu, nu) @ frame.tangent.T
    normal = H * (diag @ np.diag(R0)) - A2 * np.trace(R0)
    lam = traj.lambdas[1:-1]
    Z = simons_z(lam)
    grad2_simons = -Z - normal - 2.0 * tangential
    # The pieces of Z and the normal term grow like H^4 and cancel to O(1);
    # measure the mismatch against the size of what cancels.
    scale = 1.0 + np.abs(H * np.sum(lam**3, axis=1)) + A2 * A2 + np.abs(normal) + 2.0 * np.abs(tangential)
    simons = np.max(np.abs(grad2_simons - grad2) / scale)
    return Residuals(float(resH), float(resA2), float(resVol), grad2, float(simons))


@dataclass(frozen=True)
class MonitorSummary:
    Q0: float
    max_Q: float
    c_prime: float
    final_H: float
    final_a2_over_h2: float
    lambda1_ratio: np.ndarray = field(repr=False)
    gap_ratio: np.ndarray = field(repr=False)
    gap_ratio_above_lowest_class: np.ndarray = field(repr=False)
    two_convexity_margin: np.ndarray = field(repr=False)

    @property
    def pinching_preserved(self) -> bool:
        return self.Q0 >= 0 or self.max_Q <= 1e-10

    def to_dict(self) -> dict:
        return {
            "Q0": self.Q0,
            "max_Q": self.max_Q,
            "pinching_preserved": self.pinching_preserved,
            "c_prime": self.c_prime,
            "final_H": self.final_H,
            "final_a2_over_h2": self.final_a2_over_h2,
            "final_lambda1_ratio": float(self.lambda1_ratio[-1]),
            "final_gap_ratio": float(self.gap_ratio[-1]),
            "final_gap_ratio_above_lowest_class": float(self.gap_ratio_above_lowest_class[-1]),
            "min_two_convexity_margin": float(np.min(self.two_convexity_margin)),
        }


def _gap_above_lowest_class(lam: np.ndarray) -> np.ndarray:
    """max (l_i - l_j)^2 over curvatures strictly above the lowest eigenvalue."""
    above = np.where(lam > lam[:, :1], lam, np.nan)
    with np.errstate(invalid="ignore"):
        lo = np.nanmin(above, axis=1)
        hi = np.nanmax(above, axis=1)
    return np.nan_to_num((hi - lo) ** 2)


def monitor_report(traj: FlowTrajectory, params: PinchingParams | None = None) -> MonitorSummary:
    params = params or traj.params
    lam = traj.lambdas
    H = traj.H
    m = traj.m
    Q = pinching_q(lam, params)
    c_prime = traj.normA2 - H * H / (m - 1) - params.eta * H * H
    return MonitorSummary(
        Q0=float(Q[0]),
        max_Q=float(Q.max()),
        c_prime=float(c_prime.max()),
        final_H=float(H[-1]),
        final_a2_over_h2=float(traj.normA2[-1] / H[-1] ** 2),
        lambda1_ratio=np.abs(lam[:, 0]) / H,
        gap_ratio=(lam[:, -1] - lam[:, 1]) ** 2 / (H * H),
        gap_ratio_above_lowest_class=_gap_above_lowest_class(lam) / (H * H),
        two_convexity_margin=two_convexity_margin(lam, params.epsilon),
    )
