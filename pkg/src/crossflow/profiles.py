"""Principal curvatures of geodesic spheres and of tubes around KP^k.

Along a unit-speed normal geodesic the shape operator obeys the Riccati
equation s' = -(s^2 + K(nu, X)) on each parallel eigen-direction X. In KP^n(4)
the radial curvature is 4 on the directions J_s nu and 1 on their
complement, which produces the three closed forms used here:

================  ==========  ==================  ====================
class             K(nu, .)    initial behaviour   value at radius r
================  ==========  ==================  ====================
hopf              4           focal (1/r)         2 cot 2r
radial / normal   1           focal (1/r)         cot r
core tangent      1           regular (0)         -tan r
================  ==========  ==================  ====================
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .ambient import AmbientSpace, FrameConfig, structure_maps
from .shape import ShapeSpectrum, pinching_q

__all__ = [
    "Kind",
    "Condition",
    "CurvatureClass",
    "EquivariantFamily",
    "geodesic_sphere",
    "tube",
    "radial_riccati_oracle",
    "closed_form",
    "spectrum_at",
    "spectrum_array",
    "mean_curvature_profile",
    "dH_dr",
    "norm_a2_profile",
    "dnorm_a2_dr",
    "log_volume_profile",
    "hopf_frame",
    "frame_diagonal",
    "gradient_norm_sq",
    "pinched_interval",
    "DOMAIN_MARGIN",
]

DOMAIN_MARGIN = 1e-6


class Kind(str, enum.Enum):
    SPHERE = "sphere"
    TUBE = "tube"


class Condition(str, enum.Enum):
    SPHERE_CAP = "sphere_cap"
    FOCAL_CORE = "focal_core"


class CurvatureClass(NamedTuple):
    name: str
    multiplicity: int
    curvature: float
    condition: Condition


@dataclass(frozen=True)
class EquivariantFamily:
    space: AmbientSpace
    kind: Kind
    k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.TUBE and not 0 < self.k < self.space.n:
            raise ValueError(f"tube core KP^k needs 0 < k < n, got k={self.k}, n={self.space.n}")
        if self.kind is Kind.SPHERE and self.k != 0:
            raise ValueError("geodesic spheres take no core dimension")

    @property
    def m(self) -> int:
        return self.space.m

    @property
    def r_domain(self) -> tuple[float, float]:
        return (DOMAIN_MARGIN, math.pi / 2 - DOMAIN_MARGIN)

    @property
    def classes(self) -> tuple[CurvatureClass, ...]:
        a, n = self.space.a, self.space.n
        hopf = CurvatureClass("hopf", a - 1, 4.0, Condition.SPHERE_CAP)
        if self.kind is Kind.SPHERE:
            out = (CurvatureClass("radial", a * (n - 1), 1.0, Condition.SPHERE_CAP), hopf)
        else:
            out = (
                CurvatureClass("core_tangent", a * self.k, 1.0, Condition.FOCAL_CORE),
                CurvatureClass("core_normal", a * (n - self.k - 1), 1.0, Condition.SPHERE_CAP),
                hopf,
            )
        return tuple(c for c in out if c.multiplicity > 0)

    @property
    def multiplicities(self) -> dict[str, int]:
        return {c.name: c.multiplicity for c in self.classes}

    @property
    def label(self) -> str:
        if self.kind is Kind.SPHERE:
            return f"sphere in {self.space.label}"
        return f"tube around KP^{self.k} in {self.space.label}"

    def check_radius(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        lo, hi = self.r_domain
        if np.any(~((r >= lo) & (r <= hi))):
            raise ValueError(f"radius outside ({lo}, {hi}) for {self.label}")
        return r


def geodesic_sphere(space: AmbientSpace) -> EquivariantFamily:
    return EquivariantFamily(space, Kind.SPHERE)


def tube(space: AmbientSpace, k: int) -> EquivariantFamily:
    return EquivariantFamily(space, Kind.TUBE, k)


def closed_form(curvature: float, condition: Condition | str, r):
    """sqrt(k) cot(sqrt(k) r) or -sqrt(k) tan(sqrt(k) r), and its r-derivative."""
    c = math.sqrt(curvature)
    r = np.asarray(r, dtype=float)
    if Condition(condition) is Condition.SPHERE_CAP:
        value = c / np.tan(c * r)
        deriv = -curvature / np.sin(c * r) ** 2
    else:
        value = -c * np.tan(c * r)
        deriv = -curvature / np.cos(c * r) ** 2
    return value, deriv


def _log_jacobi(curvature: float, condition: Condition, r):
    c = math.sqrt(curvature)
    if condition is Condition.SPHERE_CAP:
        return np.log(np.sin(c * r) / c)
    return np.log(np.cos(c * r))


def radial_riccati_oracle(curvature: float, r, condition: Condition | str, r_start: float = 1e-4):
    """Integrate s' = -(s^2 + curvature) outward from a near-zero radius.

    Starts at ``r_start`` from the leading-order behaviour 1/r - k r/3
    (focal at the centre) or -k r (regular at the centre); independent of
    the trigonometric closed forms.
    """
    condition = Condition(condition)
    if curvature <= 0:
        raise ValueError("radial curvature must be positive")
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    c = math.sqrt(curvature)
    pole = math.pi / c if condition is Condition.SPHERE_CAP else math.pi / (2 * c)
    if np.any(r_arr >= pole * (1 - 1e-9)):
        raise ValueError(f"radius crosses the Riccati pole at r = {pole:.12g}")
    if np.any(r_arr < r_start):
        raise ValueError(f"radius below the oracle start radius {r_start}")
    if condition is Condition.SPHERE_CAP:
        s0 = 1.0 / r_start - curvature * r_start / 3.0
    else:
        s0 = -curvature * r_start

    def blowup(_, s):
        return 1e12 - abs(s[0])

    blowup.terminal = True
    order = np.argsort(r_arr)
    sol = solve_ivp(
        lambda _, s: -(s * s + curvature),
        (r_start, float(r_arr.max())),
        [s0],
        method="DOP853",
        t_eval=r_arr[order],
        rtol=1e-13,
        atol=1e-14,
        events=blowup,
    )
    if sol.status != 0 or sol.y.shape[1] != r_arr.size:
        raise ValueError("Riccati integration hit a pole")
    out = np.empty_like(r_arr)
    out[order] = sol.y[0]
    return out.reshape(np.shape(r)) if np.ndim(r) else float(out[0])


def _class_values(family: EquivariantFamily, r):
    return [closed_form(c.curvature, c.condition, r) for c in family.classes]


def spectrum_array(family: EquivariantFamily, r, *, check: bool = True) -> np.ndarray:
    """Sorted spectra for an array of radii, shape r.shape + (m,)."""
    r = family.check_radius(r) if check else np.asarray(r, dtype=float)
    cols = []
    for cls, (value, _) in zip(family.classes, _class_values(family, r)):
        cols.extend([value] * cls.multiplicity)
    lam = np.stack(np.broadcast_arrays(*cols), axis=-1)
    return np.sort(lam, axis=-1)


def spectrum_at(family: EquivariantFamily, r: float) -> ShapeSpectrum:
    return ShapeSpectrum(spectrum_array(family, float(r)))


def mean_curvature_profile(family: EquivariantFamily, r, *, check: bool = True):
    r = family.check_radius(r) if check else np.asarray(r, dtype=float)
    return sum(c.multiplicity * v for c, (v, _) in zip(family.classes, _class_values(family, r)))


def dH_dr(family: EquivariantFamily, r):
    r = family.check_radius(r)
    return sum(c.multiplicity * dv for c, (_, dv) in zip(family.classes, _class_values(family, r)))


def norm_a2_profile(family: EquivariantFamily, r):
    r = family.check_radius(r)
    return sum(c.multiplicity * v * v for c, (v, _) in zip(family.classes, _class_values(family, r)))


def dnorm_a2_dr(family: EquivariantFamily, r):
    r = family.check_radius(r)
    return sum(
        2.0 * c.multiplicity * v * dv for c, (v, dv) in zip(family.classes, _class_values(family, r))
    )


def log_volume_profile(family: EquivariantFamily, r, *, check: bool = True):
    """log of the hypersurface volume up to an additive constant, from Jacobi fields."""
    r = family.check_radius(r) if check else np.asarray(r, dtype=float)
    return sum(c.multiplicity * _log_jacobi(c.curvature, c.condition, r) for c in family.classes)


def _frame_layout(family: EquivariantFamily):
    """Tangent basis vectors of the Hopf-adapted frame, each tagged with its class."""
    space = family.space
    a, n, d = space.a, space.n, space.dim
    Js = structure_maps(space)
    nu = np.zeros(d)
    nu[0] = 1.0
    vectors, names = [], []
    for J in Js:
        vectors.append(J @ nu)
        names.append("hopf")
    # K-lines 1..n-k-1 are normal to the core, the rest tangent to it.
    n_normal = n - 1 if family.kind is Kind.SPHERE else n - family.k - 1
    for line in range(1, n):
        name = ("radial" if family.kind is Kind.SPHERE else "core_normal") if line <= n_normal else "core_tangent"
        for c in range(a):
            e = np.zeros(d)
            e[a * line + c] = 1.0
            vectors.append(e)
            names.append(name)
    return nu, np.array(vectors), names, Js


def frame_diagonal(family: EquivariantFamily, r) -> np.ndarray:
    """Curvatures in Hopf-frame order (see ``hopf_frame``), shape r.shape + (m,)."""
    r = np.asarray(r, dtype=float)
    _, _, names, _ = _frame_layout(family)
    values = {c.name: v for c, (v, _) in zip(family.classes, _class_values(family, r))}
    return np.stack(np.broadcast_arrays(*[values[name] for name in names]), axis=-1)


def hopf_frame(family: EquivariantFamily, r: float) -> FrameConfig:
    """Frame at radius r with nu the outward radial direction and h diagonal."""
    r = float(family.check_radius(r))
    nu, tangent, names, Js = _frame_layout(family)
    values = {c.name: float(v) for c, (v, _) in zip(family.classes, _class_values(family, r))}
    h = np.diag([values[name] for name in names])
    return FrameConfig(normal=nu, tangent=tangent, h=h, structure=Js)


def gradient_norm_sq(family: EquivariantFamily) -> float:
    """|nabla A|^2 on the family, from the type-A Codazzi form of nabla A.

    These hypersurfaces satisfy
    (nabla_X A) Y = -sum_s ( <phi_s X, Y> xi_s + <xi_s, Y> phi_s X ),
    with xi_s = -J_s nu and phi_s the tangential part of J_s; the result does
    not depend on the radius.
    """
    nu, tangent, _, Js = _frame_layout(family)
    m = tangent.shape[0]
    dA = np.zeros((m, m, m))
    for J in Js:
        phi = tangent @ J @ tangent.T
        xi = tangent @ (-J @ nu)
        dA -= np.einsum("yx,c->xyc", phi, xi) + np.einsum("y,cx->xyc", xi, phi)
    return float(np.sum(dA * dA))


def pinched_interval(family: EquivariantFamily, eps: float, grid) -> list[tuple[float, float]]:
    """Maximal radius intervals where Q < 0 and H > 0, refined to 1e-8 in r.

    ``grid`` is either a point count spread over the domain or an explicit
    array of radii.
    """
    lo, hi = family.r_domain
    if np.ndim(grid) == 0:
        count = int(grid)
        if count <= 0:
            return []
        rs = np.linspace(lo, hi, max(count, 2))
    else:
        rs = np.unique(np.asarray(grid, dtype=float))
        if rs.size == 0:
            return []
        family.check_radius(rs)

    def g(r):
        lam = spectrum_array(family, r)
        H = lam.sum(axis=-1)
        return np.maximum(pinching_q(lam, eps), -H)

    inside = g(rs) < 0
    intervals = []
    i = 0
    while i < rs.size:
        if not inside[i]:
            i += 1
            continue
        j = i
        while j + 1 < rs.size and inside[j + 1]:
            j += 1
        left = rs[i] if i == 0 else brentq(lambda x: float(g(x)), rs[i - 1], rs[i], xtol=1e-10)
        right = rs[j] if j == rs.size - 1 else brentq(lambda x: float(g(x)), rs[j], rs[j + 1], xtol=1e-10)
        intervals.append((float(left), float(right)))
        i = j + 1
    return intervals
