"""Composite-based estimators: SIMPLS weights, likelihood-based envelope
subspaces, composite correlation estimates, dimension selection, and the
principal-component / unit-weight alternatives.

Only the span of a weight matrix is identifiable, so all bases are returned
semi-orthogonal and every downstream estimate is invariant to orthogonal
rotations of a basis.  Dimension u = 0 on a side means the indicators carry
no information about their construct; composite estimates are then 0 by
convention rather than an error.
"""

import math
from dataclasses import dataclass
from enum import Enum
from itertools import product

import numpy as np

from ._kernels import envelope_descent, gaussian_neg_loglik
from .errors import DataError, NumericalError
from .linalg import (
    check_symmetric_pd,
    frozen_array,
    orient_first_positive,
    sym_inv_sqrt,
    sym_sqrt,
)
from .moments import Dataset, SampleMoments, compute_moments
from .results import FitResult
from .rrr import estimate_cor_regression

SEMI_ORTH_TOL = 1e-10


class WeightMethod(Enum):
    SIMPLS = "simpls"
    ENVELOPE_MLE = "envelope_mle"
    PCA = "pca"
    UNIT = "unit"


@dataclass(frozen=True, eq=False)
class CompositeWeights:
    """Semi-orthogonal bases for the composite subspaces.

    ``gamma`` (r x u_y) spans the estimated Y-side envelope, ``phi``
    (p x u_x) the X side.  ``converged`` is always True for the
    non-iterative methods.
    """

    gamma: np.ndarray
    phi: np.ndarray
    u_y: int
    u_x: int
    method: WeightMethod
    converged: bool = True

    def __post_init__(self):
        for name, u in (("gamma", self.u_y), ("phi", self.u_x)):
            mat = np.asarray(getattr(self, name), dtype=float)
            if mat.ndim == 1:
                mat = mat.reshape(-1, 1)
            if mat.ndim != 2 or mat.shape[1] != u:
                raise DataError(f"{name} must have {u} columns, got shape {mat.shape}")
            if u and np.max(np.abs(mat.T @ mat - np.eye(u))) > SEMI_ORTH_TOL:
                raise DataError(f"{name} is not semi-orthogonal")
            object.__setattr__(self, name, frozen_array(mat))


def _check_dims(m: SampleMoments, u_x, u_y):
    if not (0 <= u_x <= m.p and 0 <= u_y <= m.r):
        raise DataError(f"dimensions (u_x={u_x}, u_y={u_y}) out of range for p={m.p}, r={m.r}")


def _complete_basis(columns, dim, u):
    """Orthonormalize collected direction vectors; pad from the complement
    if deflation exhausted the cross-covariance early."""
    basis = []
    for w in columns:
        v = np.asarray(w, dtype=float).copy()
        for b in basis:
            v -= (b @ v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-10:
            basis.append(v / nv)
    if len(basis) < u:
        for e in np.eye(dim):
            if len(basis) == u:
                break
            v = e.copy()
            for b in basis:
                v -= (b @ v) * b
            nv = np.linalg.norm(v)
            if nv > 1e-8:
                basis.append(v / nv)
    return np.column_stack(basis[:u]) if u else np.zeros((dim, 0))


def _simpls_directions(cross, marg, u):
    """SIMPLS weight directions for the block whose marginal covariance is
    ``marg``; ``cross`` is (other_dim x this_dim).

    Each step takes the dominant right singular vector of the deflated
    cross-covariance, then deflates by projecting out the marg-image of the
    accepted direction (orthogonalized against earlier images).
    """
    dim = marg.shape[0]
    if u == 0:
        return np.zeros((dim, 0))
    s = np.array(cross, dtype=float)
    images = []
    weights = []
    for _ in range(u):
        _, sv, vt = np.linalg.svd(s)
        if sv[0] <= 1e-14:
            break
        w = vt[0]
        weights.append(w)
        v = marg @ w
        for b in images:
            v = v - (b @ v) * b
        nv = np.linalg.norm(v)
        if nv <= 1e-14:
            break
        v = v / nv
        images.append(v)
        s = s - np.outer(s @ v, v)
    return _complete_basis(weights, dim, u)


def simpls_weights(m: SampleMoments, u_x: int, u_y: int) -> CompositeWeights:
    """Moment-based composite weights via SIMPLS on both regressions.

    The X-side basis comes from the regression of Y on X, the Y side from
    the regression of X on Y; each basis is orthonormalized.  u = 0 yields
    an empty basis (indicators unrelated to the construct).
    """
    _check_dims(m, u_x, u_y)
    phi = _simpls_directions(m.s_yx, m.s_x, u_x)
    gamma = _simpls_directions(m.s_xy, m.s_y, u_y)
    return CompositeWeights(gamma=gamma, phi=phi, u_y=u_y, u_x=u_x, method=WeightMethod.SIMPLS)


@dataclass(frozen=True)
class EnvelopeOptions:
    max_iter: int = 2000
    grad_tol: float = 1e-10


def _envelope_inputs(m: SampleMoments, side: str):
    """(residual covariance, inverse marginal covariance) for one side."""
    if side == "x":
        marg, other, cross = m.s_x, m.s_y, m.s_yx  # cross: rows other, cols this
    else:
        marg, other, cross = m.s_y, m.s_x, m.s_xy
    try:
        resid = marg - cross.T @ np.linalg.solve(other, cross)
        inv_marg = np.linalg.inv(marg)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular moment block on the {side} side: {exc}") from None
    resid = 0.5 * (resid + resid.T)
    inv_marg = 0.5 * (inv_marg + inv_marg.T)
    return resid, inv_marg


def _fit_envelope_basis(m: SampleMoments, side: str, u: int, start, opts: EnvelopeOptions):
    dim = m.p if side == "x" else m.r
    if u == 0:
        return np.zeros((dim, 0)), True
    if u == dim:
        return np.eye(dim), True
    resid, inv_marg = _envelope_inputs(m, side)
    check_symmetric_pd(resid, f"residual covariance ({side} side)")
    basis, _f, _iters, _gnorm, converged = envelope_descent(
        np.ascontiguousarray(resid),
        np.ascontiguousarray(inv_marg),
        np.ascontiguousarray(start),
        opts.max_iter,
        opts.grad_tol,
    )
    return basis, bool(converged)


def envelope_weights_mle(
    m: SampleMoments, u_x: int, u_y: int, opts: EnvelopeOptions = EnvelopeOptions()
) -> CompositeWeights:
    """Likelihood-based envelope bases.

    Each side minimizes log det(G' S_res G) + log det(G' S^-1 G) over
    semi-orthogonal G, where S_res is the residual covariance from the
    regression on the other block and S the marginal covariance.  Descent
    starts at the SIMPLS basis, so the objective never ends up worse than
    its moment-based initialization.  Non-convergence is flagged on the
    result, never silent.
    """
    _check_dims(m, u_x, u_y)
    check_symmetric_pd(m.s_x, "s_x")
    check_symmetric_pd(m.s_y, "s_y")
    start = simpls_weights(m, u_x, u_y)
    phi, conv_x = _fit_envelope_basis(m, "x", u_x, start.phi, opts)
    gamma, conv_y = _fit_envelope_basis(m, "y", u_y, start.gamma, opts)
    return CompositeWeights(
        gamma=gamma,
        phi=phi,
        u_y=u_y,
        u_x=u_x,
        method=WeightMethod.ENVELOPE_MLE,
        converged=conv_x and conv_y,
    )


def pca_weights(m: SampleMoments) -> CompositeWeights:
    """Leading-eigenvector composites (u = 1 per side); the ML weights when
    measurement errors are isotropic."""
    _, vx = np.linalg.eigh(m.s_x)
    _, vy = np.linalg.eigh(m.s_y)
    phi = orient_first_positive(vx[:, -1]).reshape(-1, 1)
    gamma = orient_first_positive(vy[:, -1]).reshape(-1, 1)
    return CompositeWeights(gamma=gamma, phi=phi, u_y=1, u_x=1, method=WeightMethod.PCA)


def unit_weights(p: int, r: int) -> CompositeWeights:
    """Unit-weighted summed composites, normalized."""
    return CompositeWeights(
        gamma=np.full((r, 1), 1.0 / math.sqrt(r)),
        phi=np.full((p, 1), 1.0 / math.sqrt(p)),
        u_y=1,
        u_x=1,
        method=WeightMethod.UNIT,
    )


def composite_moments(m: SampleMoments, weights: CompositeWeights) -> SampleMoments:
    """Moments of the composites (phi' X, gamma' Y)."""
    phi, gamma = weights.phi, weights.gamma
    return SampleMoments(
        n=m.n,
        mean_x=phi.T @ m.mean_x,
        mean_y=gamma.T @ m.mean_y,
        s_x=phi.T @ m.s_x @ phi,
        s_y=gamma.T @ m.s_y @ gamma,
        s_yx=gamma.T @ m.s_yx @ phi,
    )


def composite_estimate(m: SampleMoments, weights: CompositeWeights) -> float:
    """First canonical correlation of the composites; 0 when a side is
    empty."""
    if weights.u_x == 0 or weights.u_y == 0:
        return 0.0
    return estimate_cor_regression(composite_moments(m, weights))


def serr_estimate(
    data: Dataset, u_x: int, u_y: int, method: WeightMethod = WeightMethod.ENVELOPE_MLE
) -> FitResult:
    """Composite estimator of the regression-scale correlation.

    Estimates composite weights (SIMPLS for the moment-based PLS estimator,
    envelope MLE for SERR), forms the composites, and applies the rank-one
    canonical-correlation estimator to their moments.  With full dimensions
    the result is identical to the plain estimator on the raw data.
    """
    m = compute_moments(data)
    _check_dims(m, u_x, u_y)
    if method is WeightMethod.SIMPLS:
        weights = simpls_weights(m, u_x, u_y)
        tag = "pls"
    elif method is WeightMethod.ENVELOPE_MLE:
        weights = envelope_weights_mle(m, u_x, u_y)
        tag = "serr"
    else:
        raise DataError(f"serr_estimate supports SIMPLS or ENVELOPE_MLE, got {method}")
    degenerate = u_x == 0 or u_y == 0
    estimate = composite_estimate(m, weights)
    return FitResult(
        method=tag,
        cor_regression=estimate,
        weights=weights,
        diagnostics={
            "u_x": u_x,
            "u_y": u_y,
            "degenerate": degenerate,
            "converged": weights.converged,
        },
    )


def _rank1_core_cov(a_x, a_y, a_yx):
    """ML rank-one cross block given free composite marginals."""
    c = sym_inv_sqrt(a_y, "composite s_y") @ a_yx @ sym_inv_sqrt(a_x, "composite s_x")
    u, sv, vt = np.linalg.svd(c)
    d1 = min(float(sv[0]), 1.0 - 1e-10)
    return sym_sqrt(a_y) @ (np.outer(u[:, 0], vt[0]) * d1) @ sym_sqrt(a_x)


def _implied_joint_cov(m: SampleMoments, weights: CompositeWeights) -> np.ndarray:
    """Envelope-structured ML covariance of (X, Y) given fitted spans."""
    p, r = m.p, m.r
    phi, gamma = weights.phi, weights.gamma
    px = phi @ phi.T
    qx = np.eye(p) - px
    py = gamma @ gamma.T
    qy = np.eye(r) - py
    sigma = np.zeros((p + r, p + r))
    sigma[:p, :p] = px @ m.s_x @ px + qx @ m.s_x @ qx
    sigma[p:, p:] = py @ m.s_y @ py + qy @ m.s_y @ qy
    if weights.u_x > 0 and weights.u_y > 0:
        a_x = phi.T @ m.s_x @ phi
        a_y = gamma.T @ m.s_y @ gamma
        a_yx = gamma.T @ m.s_yx @ phi
        cross = gamma @ _rank1_core_cov(a_x, a_y, a_yx) @ phi.T
        sigma[p:, :p] = cross
        sigma[:p, p:] = cross.T
    return 0.5 * (sigma + sigma.T)


def _parameter_count(p, r, u_x, u_y):
    """Free covariance parameters of the envelope + rank-one structure."""
    count = p * (p + 1) // 2 + r * (r + 1) // 2
    if u_x > 0 and u_y > 0:
        count += u_x + u_y - 1
    return count


def select_dimensions(
    data: Dataset, method: WeightMethod = WeightMethod.ENVELOPE_MLE
) -> tuple:
    """Pick (u_x, u_y) by BIC over the full (p+1) x (r+1) grid.

    For each cell the envelope bases are estimated, the implied
    envelope-structured covariance is assembled, and the Gaussian
    log-likelihood plus a BIC penalty on the free parameter count scores
    the cell.  Requires n > p + r so the likelihood is evaluable.
    """
    m = compute_moments(data)
    p, r = m.p, m.r
    if m.n <= p + r:
        raise DataError(f"dimension selection needs n > p + r, got n={m.n}, p+r={p + r}")
    s = m.joint
    log_n = math.log(m.n)
    best = None
    for u_x, u_y in product(range(p + 1), range(r + 1)):
        if method is WeightMethod.SIMPLS:
            weights = simpls_weights(m, u_x, u_y)
        else:
            weights = envelope_weights_mle(m, u_x, u_y)
        sigma = _implied_joint_cov(m, weights)
        nll = gaussian_neg_loglik(s, sigma, m.n)
        bic = 2.0 * nll + _parameter_count(p, r, u_x, u_y) * log_n
        if best is None or bic < best[0]:
            best = (bic, (u_x, u_y))
    return best[1]
