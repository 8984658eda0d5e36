"""Optimal transport primitives.

Gaussian closed forms (W2 distance, transport maps, map distances in
L2 of a reference measure), exact assignment OT for empirical samples, and
entropic (Sinkhorn) OT with deterministic argmax rounding for grid densities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    DimensionMismatch,
    EmptyRow,
    NoConvergence,
    NumericalUnderflow,
    SizeMismatch,
    ValidationError,
)
from .measures import EmpiricalSample, GaussianMeasure, GridDensity, validate_spd

# Eigenvalue floor (relative to the largest eigenvalue) absorbing round-off
# when square-rooting nominally SPD matrices.
EIG_FLOOR_RTOL = 1e-12

# Squared diameter of [0,1]^2; grid transport costs are divided by this so
# the entropic penalty lambda is scale-free.
GRID_DIAMETER_SQ = 2.0


@dataclass(frozen=True)
class SpdSqrtPair:
    """Matrix square root and inverse square root of an SPD matrix."""

    sqrt: np.ndarray
    inv_sqrt: np.ndarray


@dataclass(frozen=True)
class LinearMap:
    """Linear map x -> matrix @ x."""

    matrix: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.matrix)):
            raise ValidationError("map matrix has non-finite entries")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) @ self.matrix.T


@dataclass(frozen=True)
class CouplingPlan:
    """Nonnegative coupling with prescribed marginals."""

    plan: np.ndarray
    source_weights: np.ndarray
    target_weights: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.plan, dtype=float)
        row_err = np.abs(p.sum(axis=1) - self.source_weights).max()
        col_err = np.abs(p.sum(axis=0) - self.target_weights).max()
        if max(row_err, col_err) > 1e-6:
            raise ValidationError(
                f"plan marginals off by {max(row_err, col_err):.3e} (> 1e-6)")


@dataclass(frozen=True)
class TransportAssignment:
    """Deterministic map from source cells/points onto target cells/points.

    target_index[i] is the target assigned to source i; source_weights sum
    to 1 over the retained source support.
    """

    target_index: np.ndarray
    source_weights: np.ndarray
    source_locations: np.ndarray
    target_locations: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.target_index)
        if idx.min(initial=0) < 0 or idx.max(initial=-1) >= len(self.target_locations):
            raise ValidationError("target_index out of range")
        w = np.asarray(self.source_weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValidationError("source weights must be nonnegative and sum to 1")

    def mapped_locations(self) -> np.ndarray:
        """Location each source point is sent to."""
        return self.target_locations[self.target_index]


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Square root of a symmetric PSD matrix, clipping round-off negatives."""
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    r = (v * np.sqrt(w)) @ v.T
    return 0.5 * (r + r.T)


def _psd_sqrt_batch(ms: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(ms)
    w = np.clip(w, 0.0, None)
    r = v @ (np.sqrt(w)[..., None] * np.swapaxes(v, -1, -2))
    return 0.5 * (r + np.swapaxes(r, -1, -2))


def sqrtm_spd(s) -> SpdSqrtPair:
    """Symmetric square root and inverse square root via eigendecomposition.

    Eigenvalues are floored at 1e-12 times the largest to absorb round-off.
    """
    sym = validate_spd(s)
    w, v = np.linalg.eigh(sym)
    w = np.maximum(w, EIG_FLOOR_RTOL * w[-1])
    root = (v * np.sqrt(w)) @ v.T
    inv_root = (v / np.sqrt(w)) @ v.T
    return SpdSqrtPair(0.5 * (root + root.T), 0.5 * (inv_root + inv_root.T))


def _bures_sq(cov_a: np.ndarray, cov_b: np.ndarray) -> float:
    """tr(Sa) + tr(Sb) - 2 tr((Sb^1/2 Sa Sb^1/2)^1/2), clipped at 0."""
    bh = sqrtm_spd(cov_b).sqrt
    cross = np.linalg.eigvalsh(bh @ cov_a @ bh)
    cross_tr = np.sqrt(np.clip(cross, 0.0, None)).sum()
    val = float(np.trace(cov_a) + np.trace(cov_b) - 2.0 * cross_tr)
    return max(val, 0.0)


def gaussian_w2(a: GaussianMeasure, b: GaussianMeasure) -> float:
    """Wasserstein-2 distance between Gaussian measures.

    W2^2 = |mean_a - mean_b|^2 + Bures^2(cov_a, cov_b). Arguments are
    evaluated in a canonical order so the result is exactly symmetric.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions {a.dim} and {b.dim} differ")
    if a.same_as(b):
        return 0.0
    if (a.mean.tobytes(), a.cov.tobytes()) > (b.mean.tobytes(), b.cov.tobytes()):
        a, b = b, a
    mean_sq = float(((a.mean - b.mean) ** 2).sum())
    return float(np.sqrt(mean_sq + _bures_sq(a.cov, b.cov)))


def gaussian_transport_map(from_cov, to_cov) -> tuple[LinearMap, LinearMap]:
    """Optimal transport map between centered Gaussians, and its inverse.

    The forward map T = S^-1/2 (S^1/2 Q S^1/2)^1/2 S^-1/2 pushes N(0, S)
    to N(0, Q), i.e. T S T = Q; the inverse is the same closed form with the
    roles swapped.
    """
    def closed_form(s, q):
        pair = sqrtm_spd(s)
        inner = _psd_sqrt(pair.sqrt @ q @ pair.sqrt)
        t = pair.inv_sqrt @ inner @ pair.inv_sqrt
        return LinearMap(0.5 * (t + t.T))

    from_cov = validate_spd(from_cov)
    to_cov = validate_spd(to_cov)
    if from_cov.shape != to_cov.shape:
        raise DimensionMismatch("covariance dimensions differ")
    return closed_form(from_cov, to_cov), closed_form(to_cov, from_cov)


def map_l2_distance_gaussian(cov_i, cov_j, cov_bar) -> float:
    """Squared L2(reference) distance between the two inverse transport maps
    sending N(0, cov_bar) to N(0, cov_i) and N(0, cov_j).

    Equals tr(D Sbar^-1 D) with D the difference of the sandwich roots
    (Sbar^1/2 S Sbar^1/2)^1/2, which is the variance of the difference of the
    two linear maps under the reference measure.
    """
    cov_i = validate_spd(cov_i)
    cov_j = validate_spd(cov_j)
    cov_bar = validate_spd(cov_bar)
    if not (cov_i.shape == cov_j.shape == cov_bar.shape):
        raise DimensionMismatch("covariance dimensions differ")
    pair = sqrtm_spd(cov_bar)
    delta = _psd_sqrt(pair.sqrt @ cov_i @ pair.sqrt) - _psd_sqrt(pair.sqrt @ cov_j @ pair.sqrt)
    a = pair.inv_sqrt @ delta
    return float((a * a).sum())


def assignment_ot(src: EmpiricalSample, dst: EmpiricalSample
                  ) -> tuple[TransportAssignment, float]:
    """Exact OT between equally weighted samples of the same size.

    Solves the assignment problem with squared Euclidean cost; returns the
    matching and W2 = sqrt(mean matched squared distance).
    """
    if src.size != dst.size:
        raise SizeMismatch(f"sample sizes {src.size} and {dst.size} differ")
    if src.points.shape[1] != dst.points.shape[1]:
        raise DimensionMismatch("point dimensions differ")
    diff = src.points[:, None, :] - dst.points[None, :, :]
    cost = (diff**2).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(src.size, dtype=int)
    perm[rows] = cols
    w2 = float(np.sqrt(cost[rows, cols].mean()))
    assignment = TransportAssignment(
        target_index=perm,
        source_weights=np.full(src.size, 1.0 / src.size),
        source_locations=src.points,
        target_locations=dst.points,
    )
    return assignment, w2


def _normalized_cost(loc_a: np.ndarray, loc_b: np.ndarray) -> np.ndarray:
    d = loc_a[:, None, :] - loc_b[None, :, :]
    return (d**2).sum(axis=2) / GRID_DIAMETER_SQ


def sinkhorn_core(wa: np.ndarray, wb: np.ndarray, cost: np.ndarray,
                  lam: float, max_iter: int, tol: float) -> np.ndarray:
    """Entropic scaling iterations for strictly positive marginals.

    Runs plain scaling on K = exp(-lam * cost), absorbing the scalings into
    log-domain potentials whenever an entry threatens to underflow.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    logk = -lam * cost
    k = np.exp(logk)
    f = np.zeros(len(wa))
    g = np.zeros(len(wb))
    u = np.ones(len(wa))
    v = np.ones(len(wb))
    for _ in range(max_iter):
        u = wa / (k @ v)
        v = wb / (k.T @ u)
        small = min(u.min(), v.min())
        big = max(u.max(), v.max())
        if not np.isfinite(big) or (small > 0 and (small < 1e-250 or big > 1e250)):
            # absorb scalings into the potentials and rebuild the kernel
            with np.errstate(divide="ignore"):
                f = f + np.log(u)
                g = g + np.log(v)
            if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
                raise NumericalUnderflow(
                    "scaling vector collapsed; lambda too large for the cost scale")
            k = np.exp(logk + f[:, None] + g[None, :])
            u = np.ones(len(wa))
            v = np.ones(len(wb))
        # columns are exact after the v-update; the row marginal is the
        # stale one and measures convergence
        row_err = np.abs(u * (k @ v) - wa).max()
        if row_err <= tol:
            plan = (u[:, None] * k) * v[None, :]
            return plan
    raise NoConvergence(f"marginal error above {tol} after {max_iter} iterations")


def sinkhorn_plan(a: GridDensity, b: GridDensity, lam: float = 20.0,
                  max_iter: int = 10000, tol: float = 1e-9) -> CouplingPlan:
    """Entropic OT plan between the positive-weight cells of two grid
    densities, with squared-distance cost normalized by the grid diameter."""
    _, loc_a, wa = a.support()
    _, loc_b, wb = b.support()
    cost = _normalized_cost(loc_a, loc_b)
    plan = sinkhorn_core(wa, wb, cost, lam, max_iter, tol)
    return CouplingPlan(plan=plan, source_weights=wa, target_weights=wb)


def round_plan_to_map(plan: CouplingPlan,
                      source_locations: np.ndarray | None = None,
                      target_locations: np.ndarray | None = None
                      ) -> TransportAssignment:
    """Deterministic rounding: each source goes to its argmax target in the
    plan; ties break to the lowest target index."""
    p = plan.plan
    if np.any(p.sum(axis=1) <= 0.0):
        raise EmptyRow("a retained source row carries no mass")
    idx = p.argmax(axis=1)
    m, k = p.shape
    if source_locations is None:
        source_locations = np.zeros((m, 0))
    if target_locations is None:
        target_locations = np.zeros((k, 0))
    weights = plan.source_weights / plan.source_weights.sum()
    return TransportAssignment(
        target_index=idx,
        source_weights=weights,
        source_locations=np.asarray(source_locations, dtype=float),
        target_locations=np.asarray(target_locations, dtype=float),
    )


def inverse_grid_map(mu: GridDensity, bar: GridDensity, lam: float = 20.0,
                     max_iter: int = 10000, tol: float = 1e-9) -> TransportAssignment:
    """Approximate inverse transport map, built directly in the
    barycenter-to-measure direction: Sinkhorn plan from bar to mu, rounded
    to an assignment on the barycenter support."""
    _, loc_bar, _ = bar.support()
    _, loc_mu, _ = mu.support()
    plan = sinkhorn_plan(bar, mu, lam=lam, max_iter=max_iter, tol=tol)
    return round_plan_to_map(plan, source_locations=loc_bar, target_locations=loc_mu)
