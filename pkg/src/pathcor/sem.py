"""Maximum-likelihood SEM fit with diagonal error covariances.

The covariance structure, under marginal constraints, is

    [[diag(d_x) + lx lx',  rho lx ly'],
     [rho ly lx',          diag(d_y) + ly ly']]

with |rho| < 1 and d > 0.  Fitting minimizes the Gaussian discrepancy
F = log det Sigma + tr(S Sigma^-1) over the unconstrained parameter vector
(lx, ly, log d_x, log d_y, atanh rho), so positivity and |rho| < 1 hold by
construction.  Fitting under the regression-constraint parameterization
leads to the same maximization problem, so only this one is implemented.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ._kernels import sem_discrepancy
from .errors import DataError
from .linalg import check_symmetric_pd, first_nonzero_sign, frozen_array
from .model import ConstraintMode, PathParams, bias_factor
from .moments import SampleMoments

# Uniqueness estimates below this are flagged as near-Heywood cases.
HEYWOOD_TOL = 1e-6

# Bounds keeping exp/tanh well away from overflow while leaving the feasible
# region effectively unconstrained.
_LOG_D_BOUND = 30.0
_ATANH_RHO_BOUND = 9.0


@dataclass(frozen=True)
class SemOptions:
    """Optimizer settings for :func:`fit_sem`.

    ``n_starts`` runs: one from principal-component loadings plus perturbed
    restarts drawn deterministically from ``seed``; the best objective wins.
    """

    max_iter: int = 500
    grad_tol: float = 1e-7
    n_starts: int = 5
    seed: int = 0


@dataclass(frozen=True, eq=False)
class SemFit:
    """Fitted SEM parameters under marginal constraints.

    ``rho`` estimates cor(xi, eta).  Loading vectors carry the
    first-nonzero-positive sign convention, with ``rho`` flipped to
    compensate.  ``heywood`` lists indicator labels whose uniqueness fell
    below the Heywood tolerance.
    """

    lambda_x: np.ndarray
    lambda_y: np.ndarray
    d_x: np.ndarray
    d_y: np.ndarray
    rho: float
    neg_loglik: float
    converged: bool
    iterations: int
    grad_norm: float
    discrepancy: float
    heywood: tuple = ()

    def __post_init__(self):
        for name in ("lambda_x", "lambda_y", "d_x", "d_y"):
            object.__setattr__(self, name, frozen_array(getattr(self, name)))


def implied_cov(lambda_x, lambda_y, d_x, d_y, rho) -> np.ndarray:
    """Model covariance of (X, Y) for given loadings, uniquenesses and rho."""
    lx = np.asarray(lambda_x, dtype=float)
    ly = np.asarray(lambda_y, dtype=float)
    p, r = lx.size, ly.size
    sigma = np.empty((p + r, p + r))
    sigma[:p, :p] = np.diag(np.asarray(d_x, dtype=float)) + np.outer(lx, lx)
    sigma[p:, p:] = np.diag(np.asarray(d_y, dtype=float)) + np.outer(ly, ly)
    sigma[:p, p:] = rho * np.outer(lx, ly)
    sigma[p:, :p] = sigma[:p, p:].T
    return sigma


def sem_structured_cov(fit: SemFit) -> np.ndarray:
    """Covariance of (X, Y) implied by a fit."""
    return implied_cov(fit.lambda_x, fit.lambda_y, fit.d_x, fit.d_y, fit.rho)


def _pca_start(s, scale_hint=0.5):
    """One-factor starting values from the leading eigenpair of s."""
    w, v = np.linalg.eigh(s)
    lead = v[:, -1] * first_nonzero_sign(v[:, -1])
    lam2 = max(w[-1] - w[:-1].mean() if w.size > 1 else w[-1] * scale_hint, 0.05 * w[-1])
    lam = lead * np.sqrt(lam2)
    d = np.clip(np.diag(s) - lam**2, 0.05 * np.diag(s), None)
    return lam, d


def _pack(lx, ly, dx, dy, rho):
    z = np.arctanh(np.clip(rho, -0.999, 0.999))
    return np.concatenate([lx, ly, np.log(dx), np.log(dy), [z]])


def _unpack(theta, p, r):
    lx = theta[:p]
    ly = theta[p : p + r]
    dx = np.exp(theta[p + r : 2 * p + r])
    dy = np.exp(theta[2 * p + r : 2 * p + 2 * r])
    rho = float(np.tanh(theta[2 * p + 2 * r]))
    return lx, ly, dx, dy, rho


def fit_sem(m: SampleMoments, opts: SemOptions = SemOptions()) -> SemFit:
    """Fit the diagonal-error SEM to sample moments by quasi-Newton
    minimization of the Gaussian discrepancy.

    Requires p >= 2 and r >= 2 (the diagonal-error structure with at least
    two nonzero loadings per side is what identifies cor(xi, eta)) and
    positive-definite marginal moment blocks.  Multi-start: the best
    objective wins; ``converged`` is False when the gradient tolerance was
    not met at the winner, never a silent success.
    """
    p, r = m.p, m.r
    if p < 2 or r < 2:
        raise DataError(f"SEM identification needs p >= 2 and r >= 2, got p={p}, r={r}")
    check_symmetric_pd(m.s_x, "s_x")
    check_symmetric_pd(m.s_y, "s_y")
    s = m.joint

    lx0, dx0 = _pca_start(m.s_x)
    ly0, dy0 = _pca_start(m.s_y)
    nx2 = float(lx0 @ lx0)
    ny2 = float(ly0 @ ly0)
    rho0 = float(lx0 @ m.s_xy @ ly0) / max(nx2 * ny2, 1e-12)
    rho0 = float(np.clip(rho0, -0.95, 0.95))

    rng = np.random.default_rng(opts.seed)
    starts = [_pack(lx0, ly0, dx0, dy0, rho0)]
    for _ in range(max(opts.n_starts - 1, 0)):
        jitter_lx = lx0 * np.exp(0.3 * rng.standard_normal(p))
        jitter_ly = ly0 * np.exp(0.3 * rng.standard_normal(r))
        jitter_dx = dx0 * np.exp(0.3 * rng.standard_normal(p))
        jitter_dy = dy0 * np.exp(0.3 * rng.standard_normal(r))
        jitter_rho = float(np.clip(rho0 + 0.2 * rng.standard_normal(), -0.95, 0.95))
        starts.append(_pack(jitter_lx, jitter_ly, jitter_dx, jitter_dy, jitter_rho))

    bounds = (
        [(None, None)] * (p + r)
        + [(-_LOG_D_BOUND, _LOG_D_BOUND)] * (p + r)
        + [(-_ATANH_RHO_BOUND, _ATANH_RHO_BOUND)]
    )

    def objective(theta):
        f, g = sem_discrepancy(theta, s, p, r)
        return f, g

    best = None
    for theta0 in starts:
        res = minimize(
            objective,
            theta0,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={
                "maxiter": opts.max_iter,
                "maxfun": 10 * opts.max_iter,
                "ftol": 1e-14,
                "gtol": min(opts.grad_tol, 1e-8) / 10.0,
            },
        )
        if best is None or res.fun < best.fun:
            best = res

    lx, ly, dx, dy, rho = _unpack(best.x, p, r)
    _, grad = sem_discrepancy(best.x, s, p, r)
    grad_norm = float(np.max(np.abs(grad)))
    converged = grad_norm < opts.grad_tol

    # Sign convention: flipping one loading vector together with rho leaves
    # the likelihood unchanged.
    sign_x = first_nonzero_sign(lx)
    sign_y = first_nonzero_sign(ly)
    lx = lx * sign_x
    ly = ly * sign_y
    rho = rho * sign_x * sign_y

    heywood = tuple(
        [f"x{i}" for i in range(p) if dx[i] < HEYWOOD_TOL]
        + [f"y{i}" for i in range(r) if dy[i] < HEYWOOD_TOL]
    )
    k = p + r
    neg_loglik = 0.5 * m.n * (k * np.log(2.0 * np.pi) + best.fun)
    return SemFit(
        lambda_x=lx,
        lambda_y=ly,
        d_x=dx,
        d_y=dy,
        rho=rho,
        neg_loglik=float(neg_loglik),
        converged=bool(converged),
        iterations=int(best.nit),
        grad_norm=grad_norm,
        discrepancy=float(best.fun),
        heywood=heywood,
    )


def path_params_from_sem(fit: SemFit) -> PathParams:
    """Marginal-constraint PathParams implied by a fit."""
    return PathParams(
        p=fit.lambda_x.size,
        r=fit.lambda_y.size,
        mu_x=np.zeros(fit.lambda_x.size),
        mu_y=np.zeros(fit.lambda_y.size),
        beta_x_xi=fit.lambda_x,
        beta_y_eta=fit.lambda_y,
        sigma_x_given_xi=np.diag(fit.d_x),
        sigma_y_given_eta=np.diag(fit.d_y),
        var_xi=1.0,
        var_eta=1.0,
        cov_xi_eta=fit.rho,
        constraint_mode=ConstraintMode.MARGINAL,
    )


def sem_implied_reg_correlation(fit: SemFit) -> float:
    """Regression-scale correlation implied by the fitted SEM: the fitted
    attenuation factor times |rho|.  Always at most |rho|."""
    if float(fit.lambda_x @ fit.lambda_x) == 0.0 or float(fit.lambda_y @ fit.lambda_y) == 0.0:
        raise DataError("degenerate fit: a loading vector is identically zero")
    return bias_factor(path_params_from_sem(fit)) * abs(fit.rho)
