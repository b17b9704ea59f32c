"""Randomised certification of the pointwise inequalities and identities.

Every claim produces a :class:`TrialReport`. Certified claims are proved
statements, so a single violation means the implementation is wrong;
exploratory claims only describe data (empirical constants, interval
searches) and never affect the overall verdict.

Trials run in independent batches, each with its own child seed, and the
batch reports are merged with :func:`merge_reports`, so results depend only
on (seed, trials, batch size).
"""

from __future__ import annotations

import zlib
from dataclasses import asdict, dataclass, field
from itertools import product
from typing import Any, Callable, Iterable

import numpy as np

from .ambient import (
    AmbientSpace,
    Field,
    curvature_tensor,
    make_space,
    random_orthonormal_bases,
    sectional_curvature,
    tangential_coupling_batch,
)
from .profiles import pinched_interval, tube
from .shape import (
    EPS_GRID,
    ETA_GRID,
    SIGMA_GRID,
    ShapeSpectrum,
    alpha_window,
    dimension_gate,
    identity_2001_sides,
    mean_curvature,
    norm_a2,
    norm_ao2,
    norm_ao2_pairwise,
    pinching_q,
    sample_pinched_spectra,
    simons_z,
    two_convexity_margin,
    two_convexity_threshold,
)

__all__ = [
    "CERTIFIED",
    "EXPLORATORY",
    "TrialReport",
    "merge_reports",
    "overall_pass",
    "claim_rng",
    "validate_ambient",
    "certify_stimaI",
    "certify_identity_2001",
    "certify_normao2_identity",
    "certify_f_bound",
    "certify_two_convexity",
    "witness_negative_Z",
    "certify_negative_Z",
    "explore_bound_Z",
    "scan_dimension_gate",
    "scan_alpha_window",
    "explore_pinched_tubes",
    "run_suite",
    "default_grid",
]

CERTIFIED = "certified"
EXPLORATORY = "exploratory"

BATCH = 10_000


@dataclass
class TrialReport:
    claim_id: str
    trials: int
    violations: int
    min_slack: float
    seed: int
    tier: str = CERTIFIED
    tolerance: float = 0.0
    witness: Any = None
    data: Any = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["min_slack"] = _json_float(self.min_slack)
        return out


def _json_float(x: float):
    return float(x) if np.isfinite(x) else None


def merge_reports(a: TrialReport, b: TrialReport) -> TrialReport:
    if a.claim_id != b.claim_id:
        raise ValueError("cannot merge reports of different claims")
    return TrialReport(
        claim_id=a.claim_id,
        trials=a.trials + b.trials,
        violations=a.violations + b.violations,
        min_slack=min(a.min_slack, b.min_slack),
        seed=a.seed,
        tier=a.tier,
        tolerance=a.tolerance,
        witness=a.witness if a.witness is not None else b.witness,
        data=a.data if a.data is not None else b.data,
    )


def overall_pass(reports: Iterable[TrialReport]) -> bool:
    return all(r.passed for r in reports if r.tier == CERTIFIED)


def claim_rng(seed: int, claim_id: str) -> np.random.SeedSequence:
    """Seed sequence for one claim; independent of which other claims run."""
    return np.random.SeedSequence([int(seed), zlib.crc32(claim_id.encode())])


def _batched(
    claim_id: str,
    trials: int,
    seed: int,
    tol: float,
    run_batch: Callable[[np.random.Generator, int], tuple[np.ndarray, Callable[[int], Any]]],
    batch: int = BATCH,
) -> TrialReport:
    """Run ``run_batch`` over seeded batches; it returns slacks and a witness builder."""
    sizes = [batch] * (trials // batch) + ([trials % batch] if trials % batch else [])
    children = claim_rng(seed, claim_id).spawn(len(sizes))
    report = TrialReport(claim_id, 0, 0, np.inf, seed, CERTIFIED, tol)
    for size, child in zip(sizes, children):
        slack, witness_of = run_batch(np.random.default_rng(child), size)
        bad = slack < -tol
        witness = witness_of(int(np.argmin(slack))) if bad.any() else None
        part = TrialReport(claim_id, size, int(bad.sum()), float(slack.min()), seed, CERTIFIED, tol, witness)
        report = merge_reports(report, part)
    return report


def validate_ambient(space: AmbientSpace, trials: int, seed: int) -> list[TrialReport]:
    """Tensor symmetries, Einstein constant and sectional-curvature range."""
    R = curvature_tensor(space)
    C = R.components
    sym = max(
        np.abs(C + np.einsum("bacd->abcd", C)).max(),
        np.abs(C + np.einsum("abdc->abcd", C)).max(),
        np.abs(C - np.einsum("cdab->abcd", C)).max(),
        np.abs(C + np.einsum("acdb->abcd", C) + np.einsum("adbc->abcd", C)).max(),
    )
    ric = np.abs(R.ricci() - space.einstein * np.eye(space.dim)).max()
    reports = [
        TrialReport(f"tensor_symmetries[{space.label}]", 1, int(sym > 1e-12), -float(sym), seed, tolerance=1e-12),
        TrialReport(f"einstein_constant[{space.label}]", 1, int(ric > 1e-12), -float(ric), seed, tolerance=1e-12),
    ]

    def pairs(rng: np.random.Generator, size: int):
        Q = random_orthonormal_bases(rng, space.dim, size)
        X, Y = Q[:, :, 0], Q[:, :, 1]
        d = space.dim
        # R[X,Y,X,Y] = vec(X X^T) . M . vec(Y Y^T) with the (a c),(b d) flattening
        XX = (X[:, :, None] * X[:, None, :]).reshape(size, d * d)
        YY = (Y[:, :, None] * Y[:, None, :]).reshape(size, d * d)
        K = np.einsum("ni,ni->n", XX @ R.pair_matrix, YY)
        formula = 1.0 + 3.0 * sum(np.einsum("na,ab,nb->n", X, J, Y) ** 2 for J in R.structure)
        slack = np.minimum(np.minimum(K - 1.0, 4.0 - K), 1e-10 - np.abs(K - formula))
        return slack, lambda i: {"X": X[i].tolist(), "Y": Y[i].tolist(), "K": float(K[i])}

    reports.append(_batched(f"sectional_range[{space.label}]", trials, seed, 1e-10, pairs))
    e = np.eye(space.dim)
    extremes = [sectional_curvature(R, e[0], e[2 % space.dim] if space.a == 2 else e[4]), sectional_curvature(R, e[0], R.structure[0] @ e[0])]
    err = max(abs(extremes[0] - 1.0), abs(extremes[1] - 4.0))
    reports.append(
        TrialReport(f"sectional_extremes[{space.label}]", 2, int(err > 1e-12), -err, seed, tolerance=1e-12)
    )
    return reports


def _stratified_h(rng: np.random.Generator, size: int, m: int) -> np.ndarray:
    """Half gaussian, a quarter near-umbilic, a quarter near the pinching boundary."""
    n_gauss = size // 2
    n_umb = size // 4
    n_edge = size - n_gauss - n_umb
    G = rng.standard_normal((n_gauss, m, m)) * np.exp(rng.uniform(-2.0, 2.0, n_gauss))[:, None, None]
    gauss = (G + np.swapaxes(G, 1, 2)) / 2.0
    U = rng.standard_normal((n_umb, m, m)) * 1e-3
    umb = rng.uniform(-5.0, 5.0, n_umb)[:, None, None] * np.eye(m) + (U + np.swapaxes(U, 1, 2)) / 2.0
    lam = sample_pinched_spectra(m, 1e-2, n_edge, rng, strata=(0.0, 0.0, 1.0))
    O = random_orthonormal_bases(rng, m, n_edge)
    edge = (O * lam[:, None, :]) @ np.swapaxes(O, 1, 2)
    edge = (edge + np.swapaxes(edge, 1, 2)) / 2.0
    return np.concatenate([gauss, umb, edge])


def certify_stimaI(space: AmbientSpace, trials: int, seed: int, tol: float = 1e-9) -> TrialReport:
    """Tangential coupling >= m |A_o|^2 over random frames and symmetric h."""
    R = curvature_tensor(space)
    m = space.m

    def run(rng: np.random.Generator, size: int):
        Q = random_orthonormal_bases(rng, space.dim, size)
        E = Q[:, :, 1:]
        h = _stratified_h(rng, size, m)
        T = tangential_coupling_batch(R, E, h)
        tr = np.trace(h, axis1=1, axis2=2)
        ao2 = np.einsum("nij,nij->n", h, h) - tr * tr / m
        slack = T - m * ao2
        return slack, lambda i: {"normal": Q[i, :, 0].tolist(), "h": h[i].tolist(), "slack": float(slack[i])}

    return _batched(f"stimaI[{space.label}]", trials, seed, tol, run, batch=min(BATCH, 4_000))


def _random_spectra(rng: np.random.Generator, size: int, m: int) -> np.ndarray:
    scale = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), size))
    lam = rng.standard_normal((size, m)) * scale[:, None]
    shift = rng.standard_normal(size) * scale
    lam = lam + shift[:, None]
    lam.sort(axis=1)
    return lam


def certify_identity_2001(m: int, trials: int, seed: int, tol: float = 1e-12) -> TrialReport:
    """|A|^2 - H^2/(m-1) identity, residual scaled by max(1, |A|^2)."""

    def run(rng, size):
        lam = _random_spectra(rng, size, m)
        lhs, rhs = identity_2001_sides(lam)
        slack = -np.abs(lhs - rhs) / np.maximum(1.0, norm_a2(lam))
        return slack, lambda i: lam[i].tolist()

    return _batched(f"identity_2001[m={m}]", trials, seed, tol, run)


def certify_normao2_identity(m: int, trials: int, seed: int, tol: float = 1e-10) -> TrialReport:
    def run(rng, size):
        lam = _random_spectra(rng, size, m)
        a = norm_ao2(lam)
        b = norm_ao2_pairwise(lam)
        slack = np.minimum(-np.abs(a - b) / np.maximum(1.0, norm_a2(lam)), b)
        return slack, lambda i: lam[i].tolist()

    return _batched(f"normAo2_identity[m={m}]", trials, seed, tol, run)


def certify_f_bound(
    m: int, epsilon: float, eta: float, sigma: float, trials: int, seed: int, tol: float = 1e-10
) -> TrialReport:
    """f_{sigma,eta} <= W^sigma whenever Q <= 0, with alpha drawn across its window."""
    lo, hi, _ = alpha_window(m, eta)
    lo = max(lo, 0.0)
    if lo >= hi:
        raise ValueError(f"no non-negative alpha in the window for m={m}, eta={eta}")
    beta = 4.0 * (1.0 - epsilon)

    def run(rng, size):
        half = size // 2
        lam = np.concatenate(
            [
                sample_pinched_spectra(m, epsilon, half, rng, scale=(1e-2, 1e2)),
                sample_pinched_spectra(m, epsilon, size - half, rng, h_min=1.0, scale=(1.0, 1e4)),
            ]
        )
        alpha = rng.uniform(lo, hi, size)
        # the open window excludes its ends
        alpha[alpha == lo] = np.nextafter(lo, hi)
        H2 = mean_curvature(lam) ** 2
        W = alpha * H2 + beta
        f = (norm_a2(lam) - (1.0 / (m - 1) + eta) * H2) / W ** (1.0 - sigma)
        slack = W**sigma - f
        slack[pinching_q(lam, epsilon) > 0] = np.inf
        return slack, lambda i: {"lambdas": lam[i].tolist(), "alpha": float(alpha[i])}

    claim = f"f_le_W_sigma[m={m},eps={epsilon:g},eta={eta:g},sigma={sigma:g}]"
    return _batched(claim, trials, seed, tol, run)


def certify_two_convexity(m: int, epsilon: float, trials: int, seed: int, tol: float = 1e-10) -> TrialReport:
    """lam_1 + lam_2 >= eps H/(4(m-2+eps)) on pinched spectra beyond the H^2 threshold."""
    h_min = np.sqrt(two_convexity_threshold(m, epsilon)) * (1.0 + 1e-12)

    def run(rng, size):
        lam = sample_pinched_spectra(m, epsilon, size, rng, h_min=h_min, scale=(1.0, 1e3))
        margin = two_convexity_margin(lam, epsilon)
        met = mean_curvature(lam) ** 2 >= two_convexity_threshold(m, epsilon)
        ok = (pinching_q(lam, epsilon) <= 0) & met
        if not ok.all():
            raise RuntimeError("sampler produced spectra outside the hypothesis")
        return margin, lambda i: lam[i].tolist()

    return _batched(f"two_convexity[m={m},eps={epsilon:g}]", trials, seed, tol, run, batch=100_000)


def witness_negative_Z(m: int, eps: float, budget: int, seed: int, batch: int = 1_000) -> ShapeSpectrum | None:
    """First sampled spectrum with H > 0, Q < 0 and Z < 0, or None within ``budget``."""
    if budget <= 0:
        return None
    children = claim_rng(seed, f"negative_Z[m={m}]").spawn((budget + batch - 1) // batch)
    drawn = 0
    for child in children:
        size = min(batch, budget - drawn)
        rng = np.random.default_rng(child)
        lam = sample_pinched_spectra(m, eps, size, rng, scale=(0.05, 3.0))
        ok = (mean_curvature(lam) > 0) & (pinching_q(lam, eps) < 0) & (simons_z(lam) < 0)
        if ok.any():
            return ShapeSpectrum(lam[int(np.argmax(ok))])
        drawn += size
    return None


def certify_negative_Z(m: int, eps: float, budget: int, seed: int) -> TrialReport:
    w = witness_negative_Z(m, eps, budget, seed)
    witness = None if w is None else {"lambdas": w.lambdas.tolist(), "H": w.H, "Z": w.Z}
    slack = -w.Z if w is not None else -np.inf
    return TrialReport(f"negative_Z_witness[m={m},eps={eps:g}]", budget, int(w is None), slack, seed, witness=witness)


def explore_bound_Z(
    m: int, eps: float, eta: float, gamma_grid: Iterable[float], trials: int, seed: int
) -> list[dict]:
    """Empirical smallest K for Z >= gamma H^2 (|A|^2 - H^2/(m-1) - eta H^2) - K (H^3 + 1).

    Half the samples are generic pinched spectra, half lie beyond the
    2-convexity threshold; K is reported over all samples and per regime.
    """
    rng = np.random.default_rng(claim_rng(seed, f"bound_Z[m={m}]"))
    half = trials // 2
    low = sample_pinched_spectra(m, eps, half, rng, scale=(1e-2, 10.0))
    high = sample_pinched_spectra(
        m, eps, trials - half, rng, h_min=np.sqrt(two_convexity_threshold(m, eps)) * (1 + 1e-12), scale=(1.0, 1e3)
    )
    rows = []
    for gamma in gamma_grid:
        row = {"gamma": float(gamma), "trials": int(trials)}
        for name, lam in (("low_curvature", low), ("high_curvature", high)):
            if lam.shape[0] == 0:
                row[f"K_{name}"] = None
                continue
            H = mean_curvature(lam)
            A2 = norm_a2(lam)
            K = (gamma * H**2 * (A2 - H**2 / (m - 1) - eta * H**2) - simons_z(lam)) / (H**3 + 1.0)
            row[f"K_{name}"] = float(K.max())
        vals = [v for k, v in row.items() if k.startswith("K_") and v is not None]
        row["K"] = max(vals) if vals else None
        rows.append(row)
    return rows


def scan_dimension_gate(ns: Iterable[int], eps_grid: Iterable[float], seed: int = 0) -> TrialReport:
    """The gate passes exactly when n >= 4, for both fields."""
    rows, mismatches = [], 0
    for fld, n, eps in product((Field.COMPLEX, Field.QUATERNIONIC), ns, eps_grid):
        gate = dimension_gate(make_space(fld, n), eps)
        rows.append({"field": fld.value, "n": n, "eps": eps, "pass": gate.passed})
        mismatches += gate.passed != (n >= 4)
    return TrialReport("dimension_gate_scan", len(rows), mismatches, 0.0 if not mismatches else -1.0, seed, data=rows)


def scan_alpha_window(ms: Iterable[int] = range(5, 51), seed: int = 0) -> TrialReport:
    rows, empty, slack = [], 0, np.inf
    for m in ms:
        lo, hi, nonempty = alpha_window(m, 0.0)
        rows.append({"m": m, "lo": lo, "hi": hi})
        empty += not nonempty
        slack = min(slack, hi - lo)
    return TrialReport("alpha_window_scan", len(rows), empty, float(slack), seed, data=rows)


def explore_pinched_tubes(space: AmbientSpace, eps: float, grid: int = 2_000, seed: int = 0) -> TrialReport:
    rows = []
    for k in range(1, space.n):
        fam = tube(space, k)
        rows.append({"k": k, "intervals": pinched_interval(fam, eps, grid)})
    found = sum(bool(r["intervals"]) for r in rows)
    return TrialReport(
        f"pinched_tube_intervals[{space.label},eps={eps:g}]", len(rows), 0, float(found), seed, EXPLORATORY, data=rows
    )


def default_grid() -> dict[str, tuple[float, ...]]:
    return {"eps": EPS_GRID, "eta": ETA_GRID, "sigma": SIGMA_GRID}


def run_suite(
    space: AmbientSpace,
    params_grid: dict[str, Iterable[float]] | None,
    trials: int,
    seed: int,
    *,
    gate_ns: Iterable[int] = range(2, 9),
    witness_budget: int = 10_000,
    gamma_grid: Iterable[float] = (0.01, 0.1, 1.0),
) -> list[TrialReport]:
    grid = default_grid() if params_grid is None else {k: tuple(v) for k, v in params_grid.items()}
    for key in ("eps", "eta", "sigma"):
        if not grid.get(key):
            raise ValueError(f"parameter grid needs a nonempty {key!r} list")
    m = space.m
    reports = validate_ambient(space, min(trials, 10_000), seed)
    reports.append(certify_stimaI(space, trials, seed))
    reports.append(certify_identity_2001(m, trials, seed))
    reports.append(certify_normao2_identity(m, trials, seed))
    for eps in grid["eps"]:
        reports.append(certify_two_convexity(m, eps, trials, seed))
    for eps, eta, sigma in product(grid["eps"], grid["eta"], grid["sigma"]):
        reports.append(certify_f_bound(m, eps, eta, sigma, trials, seed))
    reports.append(certify_negative_Z(m, grid["eps"][0], witness_budget, seed))
    reports.append(scan_dimension_gate(gate_ns, grid["eps"], seed))
    reports.append(scan_alpha_window(range(5, 51), seed))

    gates = [dimension_gate(space, eps) for eps in grid["eps"]]
    reports.append(
        TrialReport(
            f"dimension_gate[{space.label}]",
            len(gates),
            sum(not g.passed for g in gates),
            0.0,
            seed,
            EXPLORATORY,
            data=[{"eps": e, "ineq1": g.ineq1, "ineq2": g.ineq2, "pass": g.passed} for e, g in zip(grid["eps"], gates)],
        )
    )
    for eps in grid["eps"]:
        table = explore_bound_Z(m, eps, grid["eta"][0], gamma_grid, min(trials, 20_000), seed)
        reports.append(TrialReport(f"bound_Z[m={m},eps={eps:g}]", min(trials, 20_000), 0, np.nan, seed, EXPLORATORY, data=table))
    reports.append(explore_pinched_tubes(space, grid["eps"][0], seed=seed))
    return reports
