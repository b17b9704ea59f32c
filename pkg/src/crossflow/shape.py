"""Scalar functionals of a principal-curvature spectrum.

Array-valued helpers accept ``lam`` with the curvatures on the last axis, so
they apply equally to one spectrum of shape (m,) or a batch of shape (N, m).
Batches are assumed sorted along the last axis wherever order matters.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .ambient import AmbientSpace

__all__ = [
    "ShapeSpectrum",
    "PinchingParams",
    "mean_curvature",
    "norm_a2",
    "trace_a3",
    "norm_ao2",
    "norm_ao2_pairwise",
    "simons_z",
    "pinched",
    "pinching_q",
    "w_and_f",
    "two_convexity_margin",
    "two_convexity_threshold",
    "two_convexity_check",
    "identity_2001_sides",
    "identity_2001_residual",
    "cylindrical_gap",
    "alpha_window",
    "dimension_gate",
    "sample_pinched_spectra",
    "EPS_GRID",
    "ETA_GRID",
    "SIGMA_GRID",
]

EPS_GRID = (1e-3, 1e-2, 1e-1)
ETA_GRID = (1e-3, 1e-2, 1e-1)
SIGMA_GRID = (0.0, 0.01, 0.1)


def mean_curvature(lam):
    return np.sum(lam, axis=-1)


def norm_a2(lam):
    lam = np.asarray(lam, dtype=float)
    return np.sum(lam * lam, axis=-1)


def trace_a3(lam):
    lam = np.asarray(lam, dtype=float)
    return np.sum(lam**3, axis=-1)


def norm_ao2(lam):
    lam = np.asarray(lam, dtype=float)
    m = lam.shape[-1]
    return norm_a2(lam) - mean_curvature(lam) ** 2 / m


def norm_ao2_pairwise(lam):
    """(1/m) sum_{i<j} (lam_i - lam_j)^2."""
    lam = np.asarray(lam, dtype=float)
    m = lam.shape[-1]
    diff = lam[..., :, None] - lam[..., None, :]
    return np.sum(diff * diff, axis=(-2, -1)) / (2.0 * m)


def simons_z(lam):
    """Reaction polynomial H tr(A^3) - |A|^4."""
    return mean_curvature(lam) * trace_a3(lam) - norm_a2(lam) ** 2


@dataclass(frozen=True)
class ShapeSpectrum:
    lambdas: np.ndarray

    def __post_init__(self):
        lam = np.sort(np.asarray(self.lambdas, dtype=float).ravel())
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)

    @property
    def m(self) -> int:
        return self.lambdas.size

    @property
    def H(self) -> float:
        return float(mean_curvature(self.lambdas))

    @property
    def normA2(self) -> float:
        return float(norm_a2(self.lambdas))

    @property
    def traceA3(self) -> float:
        return float(trace_a3(self.lambdas))

    @property
    def normAo2(self) -> float:
        return float(norm_ao2(self.lambdas))

    @property
    def Z(self) -> float:
        return float(simons_z(self.lambdas))


def _lam(spectrum) -> np.ndarray:
    if isinstance(spectrum, ShapeSpectrum):
        return spectrum.lambdas
    return np.asarray(spectrum, dtype=float)


@dataclass(frozen=True)
class PinchingParams:
    """Constants of the preserved pinching and of the auxiliary function f.

    ``beta`` defaults to ``b_eps``; ``alpha`` defaults to the midpoint of the
    admissible window intersected with [0, inf), which keeps W positive.
    """

    m: int
    epsilon: float = 1e-2
    eta: float = 1e-2
    sigma: float = 0.0
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("hypersurface dimension must be at least 3")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.eta <= 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not 0.0 <= self.sigma < 1.0:
            raise ValueError(f"sigma must lie in [0, 1), got {self.sigma}")
        if self.alpha is None:
            lo, hi, nonempty = alpha_window(self.m, self.eta)
            lo = max(lo, 0.0)
            if not nonempty or lo >= hi:
                raise ValueError(f"no admissible non-negative alpha for m={self.m}, eta={self.eta}")
            object.__setattr__(self, "alpha", 0.5 * (lo + hi))
        if self.beta is None:
            object.__setattr__(self, "beta", self.b_eps)

    @property
    def a_eps(self) -> float:
        return 1.0 / (self.m - 2 + self.epsilon)

    @property
    def b_eps(self) -> float:
        return 4.0 * (1.0 - self.epsilon)

    def alpha_in_window(self) -> bool:
        lo, hi, _ = alpha_window(self.m, self.eta)
        return lo < self.alpha < hi


def pinched(spectrum):
    """Initial pinching: H > 0 and |A|^2 < H^2/(m-2) + 4 (strict)."""
    lam = _lam(spectrum)
    m = lam.shape[-1]
    if m < 3:
        raise ValueError("pinching needs m >= 3")
    H = mean_curvature(lam)
    return (H > 0) & (norm_a2(lam) < H * H / (m - 2) + 4.0)


def pinching_q(spectrum, params: PinchingParams | float):
    """Q = |A|^2 - a_eps H^2 - b_eps; ``params`` may be a bare epsilon."""
    lam = _lam(spectrum)
    m = lam.shape[-1]
    eps = params.epsilon if isinstance(params, PinchingParams) else float(params)
    H = mean_curvature(lam)
    return norm_a2(lam) - H * H / (m - 2 + eps) - 4.0 * (1.0 - eps)


class WF(NamedTuple):
    W: np.ndarray | float
    f0: np.ndarray | float
    f_sigma_eta: np.ndarray | float


def w_and_f(spectrum, params: PinchingParams) -> WF:
    lam = _lam(spectrum)
    m = lam.shape[-1]
    H2 = mean_curvature(lam) ** 2
    W = params.alpha * H2 + params.beta
    if np.any(W <= 0):
        raise ValueError("W = alpha H^2 + beta must be positive")
    num = norm_a2(lam) - (1.0 / (m - 1) + params.eta) * H2
    f0 = num / W
    f = num / W ** (1.0 - params.sigma)
    if np.ndim(f) == 0:
        return WF(float(W), float(f0), float(f))
    return WF(W, f0, f)


def two_convexity_threshold(m: int, epsilon: float) -> float:
    """H^2 above which pinching forces lam_1 + lam_2 >= eps H / (4(m-2+eps))."""
    return 8.0 * (m - 2) * (m - 2 + epsilon) / epsilon


def two_convexity_margin(spectrum, epsilon: float):
    lam = _lam(spectrum)
    m = lam.shape[-1]
    H = mean_curvature(lam)
    return lam[..., 0] + lam[..., 1] - epsilon * H / (4.0 * (m - 2 + epsilon))


class TwoConvexity(NamedTuple):
    margin: float
    threshold_met: bool
    bound_holds: bool


def two_convexity_check(spectrum, epsilon: float, tol: float = 1e-10) -> TwoConvexity:
    lam = np.sort(_lam(spectrum))
    if lam.ndim != 1:
        raise ValueError("two_convexity_check takes a single spectrum")
    if not (mean_curvature(lam) > 0 and pinching_q(lam, epsilon) <= 0):
        raise ValueError("spectrum does not satisfy the pinching hypothesis for this epsilon")
    margin = float(two_convexity_margin(lam, epsilon))
    met = bool(mean_curvature(lam) ** 2 >= two_convexity_threshold(lam.size, epsilon))
    return TwoConvexity(margin, met, (not met) or margin >= -tol)


def identity_2001_sides(spectrum):
    """Both sides of |A|^2 - H^2/(m-1) = (sum_{1<i<j}(l_i-l_j)^2 + l_1(m l_1 - 2H))/(m-1)."""
    lam = _lam(spectrum)
    m = lam.shape[-1]
    H = mean_curvature(lam)
    lhs = norm_a2(lam) - H * H / (m - 1)
    rest = lam[..., 1:]
    diff = rest[..., :, None] - rest[..., None, :]
    pairs = np.sum(diff * diff, axis=(-2, -1)) / 2.0
    l1 = lam[..., 0]
    rhs = (pairs + l1 * (m * l1 - 2.0 * H)) / (m - 1)
    return lhs, rhs


def identity_2001_residual(spectrum):
    lam = _lam(spectrum)
    if lam.shape[-1] < 3:
        raise ValueError("identity needs m >= 3")
    lhs, rhs = identity_2001_sides(lam)
    return np.abs(lhs - rhs)


class CylindricalGap(NamedTuple):
    hypothesis: bool
    gap: float


def cylindrical_gap(spectrum, eta: float):
    """Hypothesis |lam_1| <= eta H and gap max_{i,j>=2} (lam_i - lam_j)^2."""
    lam = _lam(spectrum)
    if lam.shape[-1] < 3:
        raise ValueError("cylindrical gap needs m >= 3")
    hyp = np.abs(lam[..., 0]) <= eta * mean_curvature(lam)
    gap = (lam[..., -1] - lam[..., 1]) ** 2
    if np.ndim(gap) == 0:
        return CylindricalGap(bool(hyp), float(gap))
    return CylindricalGap(hyp, gap)


class AlphaWindow(NamedTuple):
    lo: float
    hi: float
    nonempty: bool


def alpha_window(m: int, eta: float) -> AlphaWindow:
    if m < 3:
        raise ValueError("alpha window needs m >= 3")
    lo = 2.0 / (m * (m - 2)) - eta
    hi = 3.0 / (m + 2) - 1.0 / (m - 1) - eta
    # Both ends shift by -eta, so emptiness is decided exactly at eta = 0.
    nonempty = Fraction(2, m * (m - 2)) < Fraction(3, m + 2) - Fraction(1, m - 1)
    return AlphaWindow(lo, hi, nonempty)


class DimensionGate(NamedTuple):
    ineq1: bool
    ineq2: bool
    passed: bool


def dimension_gate(space: AmbientSpace, epsilon: float | Fraction) -> DimensionGate:
    """2 b_eps - 4m < -4/a_eps and 2 r_bar < 4/a_eps, in exact rational arithmetic."""
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    m = space.m
    inv_a = m - 2 + eps
    b = 4 * (1 - eps)
    ineq1 = 2 * b - 4 * m < -4 * inv_a
    ineq2 = 2 * space.einstein < 4 * inv_a
    return DimensionGate(ineq1, ineq2, ineq1 and ineq2)


def sample_pinched_spectra(
    m: int,
    epsilon: float,
    size: int,
    rng: np.random.Generator,
    *,
    scale: tuple[float, float] = (0.1, 10.0),
    h_min: float = 0.0,
    strata: tuple[float, float, float] = (0.5, 0.25, 0.25),
) -> np.ndarray:
    """Sorted spectra (size, m) with H > h_min and Q <= 0.

    Raw draws are gaussian with a log-uniform scale. The gaussian stratum keeps a
    draw when it is already pinched and otherwise pulls it toward the umbilic
    spectrum with the same H by a uniform convex factor; the near-umbilic and
    near-boundary strata place the trace-free part at 1e-3 of, or just inside,
    the admissible radius sqrt((a_eps - 1/m) H^2 + b_eps).
    """
    if size <= 0:
        return np.empty((0, m))
    n_gauss = int(round(strata[0] * size))
    n_umb = int(round(strata[1] * size))
    n_edge = size - n_gauss - n_umb
    s = np.exp(rng.uniform(np.log(scale[0]), np.log(scale[1]), size))
    x = rng.standard_normal((size, m)) * s[:, None]
    H = x.sum(axis=1)
    x[H < 0] *= -1.0
    H = np.abs(H)
    if h_min > 0:
        # Rescale draws so that H lands log-uniformly in [h_min, h_min * scale ratio].
        target = h_min * np.exp(rng.uniform(0.0, np.log(scale[1] / scale[0]), size))
        x *= (target / np.maximum(H, 1e-300))[:, None]
        H = target
    center = (H / m)[:, None]
    tf = x - center
    radius = np.sqrt(np.sum(tf * tf, axis=1))
    a_eps = 1.0 / (m - 2 + epsilon)
    rmax = np.sqrt((a_eps - 1.0 / m) * H * H + 4.0 * (1.0 - epsilon))
    frac = np.empty(size)
    frac[:n_gauss] = np.where(
        radius[:n_gauss] <= rmax[:n_gauss],
        radius[:n_gauss] / np.maximum(rmax[:n_gauss], 1e-300),
        rng.uniform(0.0, 1.0, n_gauss),
    )
    frac[n_gauss : n_gauss + n_umb] = rng.uniform(0.0, 1e-3, n_umb)
    frac[n_gauss + n_umb :] = 1.0 - rng.uniform(1e-12, 1e-6, n_edge)
    scale_tf = frac * rmax / np.maximum(radius, 1e-300)
    lam = center + tf * scale_tf[:, None]
    lam.sort(axis=1)
    # Rounding can push boundary draws a hair outside; pull those in once more.
    q = pinching_q(lam, epsilon)
    bad = q > 0
    if np.any(bad):
        Hb = mean_curvature(lam[bad])[:, None]
        lam[bad] = Hb / m + (lam[bad] - Hb / m) * 0.999
    perm = rng.permutation(size)
    return lam[perm]
