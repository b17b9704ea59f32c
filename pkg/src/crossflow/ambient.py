"""Riemannian geometry of the projective spaces CP^n(4) and HP^n(4).

Everything is computed at a single point of the ambient space, in a fixed
orthonormal basis of the model tangent space R^{a n}. The structure
endomorphisms act block-diagonally on the K-lines of K^n (left
multiplication by i, j, k on each quaternionic block).

Curvature components use the convention ``R[X, Y, X, Y] = K(X, Y)`` for
orthonormal X, Y, so that ``Ric(Y, W) = sum_A R[A, Y, A, W]`` and the
hypersurface contractions read exactly like their index expressions, e.g.
``R_{pli}^l = sum_l R[p, l, i, l]`` in an orthonormal tangent frame.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Field",
    "AmbientSpace",
    "CurvatureTensor",
    "FrameConfig",
    "make_space",
    "parse_space",
    "structure_maps",
    "curvature_tensor",
    "sectional_curvature",
    "curvature_coupling",
    "tangential_coupling_batch",
    "random_orthonormal_bases",
    "random_adapted_frame",
    "gaussian_h",
    "spectrum_h",
]


class Field(str, enum.Enum):
    COMPLEX = "C"
    QUATERNIONIC = "H"


@dataclass(frozen=True)
class AmbientSpace:
    """The projective space KP^n with holomorphic (quaternionic) curvature 4."""

    field: Field
    n: int

    @property
    def a(self) -> int:
        """Real dimension of the scalar algebra K."""
        return 2 if self.field is Field.COMPLEX else 4

    @property
    def dim(self) -> int:
        return self.a * self.n

    @property
    def m(self) -> int:
        """Dimension of a real hypersurface."""
        return self.a * self.n - 1

    @property
    def einstein(self) -> int:
        return self.m + 3 if self.field is Field.COMPLEX else self.m + 9

    @property
    def label(self) -> str:
        return f"{'cp' if self.field is Field.COMPLEX else 'hp'}{self.n}"


def make_space(field: Field | str, n: int) -> AmbientSpace:
    field = _coerce_field(field)
    if isinstance(n, bool) or int(n) != n:
        raise TypeError(f"n must be an integer, got {n!r}")
    if n < 2:
        raise ValueError(f"projective dimension must be at least 2, got n={n}")
    return AmbientSpace(field, int(n))


def parse_space(label: str) -> AmbientSpace:
    """Parse labels such as ``cp4`` or ``HP3``."""
    text = label.strip().lower()
    if len(text) < 3 or text[:2] not in ("cp", "hp") or not text[2:].isdigit():
        raise ValueError(f"unrecognised space label {label!r}; expected e.g. 'cp4' or 'hp4'")
    return make_space(Field.COMPLEX if text[:2] == "cp" else Field.QUATERNIONIC, int(text[2:]))


def _coerce_field(field: Field | str) -> Field:
    if isinstance(field, Field):
        return field
    key = str(field).strip().lower()
    if key in ("c", "complex", "cp"):
        return Field.COMPLEX
    if key in ("h", "quaternionic", "hp"):
        return Field.QUATERNIONIC
    raise ValueError(f"unknown field {field!r}")


# Images of the basis vectors under left multiplication by i, j, k on H = R^4
# with basis (1, i, j, k); columns are images, so ij = k holds as matrices.
_QUATERNION_UNITS = (
    np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float),
    np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], dtype=float),
    np.array([[0, 0, 0, -1], [0, 0, -1, 0], [0, 1, 0, 0], [1, 0, 0, 0]], dtype=float),
)
_COMPLEX_UNIT = np.array([[0, -1], [1, 0]], dtype=float)


def structure_maps(space: AmbientSpace) -> tuple[np.ndarray, ...]:
    """Orthogonal complex structures J_s on the model tangent space.

    One map for CP^n, the triple (I, J, K) with IJ = K for HP^n.
    """
    blocks = (_COMPLEX_UNIT,) if space.field is Field.COMPLEX else _QUATERNION_UNITS
    maps = []
    for block in blocks:
        J = np.kron(np.eye(space.n), block)
        J.setflags(write=False)
        maps.append(J)
    return tuple(maps)


@dataclass(frozen=True)
class CurvatureTensor:
    space: AmbientSpace
    components: np.ndarray
    structure: tuple[np.ndarray, ...]
    # (A C),(B D) flattening of the components; turns double contractions
    # against symmetric 2-tensors into a single matrix product.
    pair_matrix: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def ricci(self) -> np.ndarray:
        return np.einsum("abad->bd", self.components)

    def __call__(self, X, Y, Z, W) -> float:
        return float(np.einsum("abcd,a,b,c,d->", self.components, X, Y, Z, W))


def curvature_tensor(space: AmbientSpace) -> CurvatureTensor:
    """Curvature tensor of KP^n(4) at the base point.

    R[X,Y,Z,W] = <X,Z><Y,W> - <X,W><Y,Z>
                 + sum_s (<X,J_s Z><Y,J_s W> - <X,J_s W><Y,J_s Z> + 2<X,J_s Y><Z,J_s W>)
    """
    d = space.dim
    g = np.eye(d)
    Js = structure_maps(space)
    R = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
    for J in Js:
        R += (
            np.einsum("ac,bd->abcd", J, J)
            - np.einsum("ad,bc->abcd", J, J)
            + 2.0 * np.einsum("ab,cd->abcd", J, J)
        )
    M = np.ascontiguousarray(np.einsum("abcd->acbd", R).reshape(d * d, d * d))
    R.setflags(write=False)
    M.setflags(write=False)
    return CurvatureTensor(space, R, Js, M)


def sectional_curvature(tensor: CurvatureTensor, X, Y) -> float:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    area2 = X @ X * (Y @ Y) - (X @ Y) ** 2
    if area2 <= 1e-12 * (X @ X) * (Y @ Y):
        raise ValueError("sectional curvature needs linearly independent vectors")
    return tensor(X, Y, X, Y) / area2


@dataclass(frozen=True)
class FrameConfig:
    """A unit normal, an orthonormal tangent frame (rows) and the matrix h_ij."""

    normal: np.ndarray
    tangent: np.ndarray
    h: np.ndarray
    structure: tuple[np.ndarray, ...] = field(repr=False, default=())

    def __post_init__(self):
        if not np.array_equal(self.h, self.h.T):
            raise ValueError("second fundamental form must be symmetric")
        basis = np.vstack([self.normal, self.tangent])
        if basis.shape[0] != basis.shape[1]:
            raise ValueError("normal plus tangent frame must span the model tangent space")
        if np.abs(basis @ basis.T - np.eye(basis.shape[0])).max() > 1e-12:
            raise ValueError("frame is not orthonormal")
        if self.h.shape != (self.tangent.shape[0],) * 2:
            raise ValueError("h does not match the tangent frame")

    @property
    def m(self) -> int:
        return self.tangent.shape[0]

    @property
    def hopf_angles(self) -> np.ndarray:
        """|<J_s nu, e_i>|, shape (number of J_s, m)."""
        return np.array([np.abs(self.tangent @ (J @ self.normal)) for J in self.structure])


def curvature_coupling(tensor: CurvatureTensor, frame: FrameConfig) -> tuple[float, float]:
    """Tangential and normal curvature terms of a second fundamental form.

    tangential = h^ij h_j^p R_pli^l - h^ij h^lp R_pilj
    normal     = H h^ij R_0i0j - |A|^2 R_0l0^l
    """
    E = frame.tangent.T
    if E.shape[0] != tensor.dim:
        raise ValueError(f"frame lives in dimension {E.shape[0]}, tensor in {tensor.dim}")
    h = frame.h
    tangential = float(tangential_coupling_batch(tensor, E[None], h[None])[0])
    nu = frame.normal
    R0 = E.T @ np.einsum("abcd,a,c->bd", tensor.components, nu, nu) @ E
    H = np.trace(h)
    normal = H * np.sum(h * R0) - np.sum(h * h) * np.trace(R0)
    return tangential, float(normal)


def tangential_coupling_batch(tensor: CurvatureTensor, E: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Vectorised tangential coupling for frames ``E`` (B, d, m) and ``h`` (B, m, m)."""
    d = tensor.dim
    hh = E @ h @ np.swapaxes(E, 1, 2)
    h2 = hh @ hh
    P = E @ np.swapaxes(E, 1, 2)
    M = tensor.pair_matrix
    B = E.shape[0]
    first = np.einsum("bi,bi->b", h2.reshape(B, d * d) @ M, P.reshape(B, d * d))
    second = np.einsum("bi,bi->b", hh.reshape(B, d * d) @ M, hh.reshape(B, d * d))
    return first - second


def random_orthonormal_bases(rng: np.random.Generator, dim: int, size: int) -> np.ndarray:
    """Haar-distributed orthogonal matrices, shape (size, dim, dim); columns are the basis."""
    G = rng.standard_normal((size, dim, dim))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diagonal(R, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    return Q * signs[:, None, :]


HSampler = Callable[[np.random.Generator, int], np.ndarray]


def gaussian_h(scale: float = 1.0) -> HSampler:
    def sample(rng: np.random.Generator, m: int) -> np.ndarray:
        G = rng.standard_normal((m, m)) * scale
        return (G + G.T) / 2.0

    return sample


def spectrum_h(eigenvalues) -> HSampler:
    """Sampler returning O diag(eigenvalues) O^T for a Haar-random rotation O."""
    lam = np.asarray(eigenvalues, dtype=float)

    def sample(rng: np.random.Generator, m: int) -> np.ndarray:
        if lam.shape != (m,):
            raise ValueError(f"expected {m} eigenvalues, got {lam.shape}")
        O = random_orthonormal_bases(rng, m, 1)[0]
        h = (O * lam) @ O.T
        return (h + h.T) / 2.0

    return sample


def random_adapted_frame(space: AmbientSpace, seed: int, h_sampler: HSampler | None = None) -> FrameConfig:
    rng = np.random.default_rng(seed)
    Q = random_orthonormal_bases(rng, space.dim, 1)[0]
    h = (h_sampler or gaussian_h())(rng, space.m)
    return FrameConfig(
        normal=Q[:, 0].copy(),
        tangent=Q[:, 1:].T.copy(),
        h=np.array(h, dtype=float),
        structure=structure_maps(space),
    )
