"""Hot numeric kernels, optionally JIT-compiled with numba.

Two kernels dominate the Monte Carlo runtime: the Gaussian discrepancy
(value + analytic gradient) minimized by the SEM fitter, and the
projected-gradient descent that estimates envelope bases.  Both are written
in nopython-compatible numpy so the same source runs compiled or plain.

Selection: setting ``PATHCOR_DISABLE_NUMBA=1`` in the environment forces the
pure-numpy variants; otherwise numba is used when importable.  The ``*_py``
names always refer to the uncompiled functions, so both variants can be
timed side by side (see benchmarks/bench_kernels.py).
"""

import os

import numpy as np

_LOG_2PI = float(np.log(2.0 * np.pi))


def _numba_disabled():
    return os.environ.get("PATHCOR_DISABLE_NUMBA", "").strip().lower() in {
        "1",
        "true",
        "yes",
        "on",
    }


NUMBA_ENABLED = False
if not _numba_disabled():
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # numba not installed; fall back silently
        pass


def _maybe_jit(fn):
    if NUMBA_ENABLED:
        return _njit(cache=True)(fn)
    return fn


def sem_discrepancy_py(theta, s, p, r):
    """Gaussian discrepancy F = log det Sigma + tr(S Sigma^-1) and gradient.

    ``theta`` layout (length 2p + 2r + 1), marginal-constraint
    parameterization with positivity/|rho|<1 enforced by construction:

        [loadings_x (p), loadings_y (r), log d_x (p), log d_y (r), atanh rho]

    Sigma has blocks diag(d_x) + lx lx', rho lx ly' and diag(d_y) + ly ly'.
    Returns (F, dF/dtheta).
    """
    lx = theta[:p]
    ly = theta[p : p + r]
    dx = np.exp(theta[p + r : 2 * p + r])
    dy = np.exp(theta[2 * p + r : 2 * p + 2 * r])
    rho = np.tanh(theta[2 * p + 2 * r])
    m = p + r

    sigma = np.empty((m, m))
    sigma[:p, :p] = lx.reshape(-1, 1) * lx.reshape(1, -1)
    sigma[p:, p:] = ly.reshape(-1, 1) * ly.reshape(1, -1)
    cross = rho * lx.reshape(-1, 1) * ly.reshape(1, -1)
    sigma[:p, p:] = cross
    sigma[p:, :p] = cross.T
    for i in range(p):
        sigma[i, i] += dx[i]
    for i in range(r):
        sigma[p + i, p + i] += dy[i]

    _sign, logdet = np.linalg.slogdet(sigma)
    sigma_inv = np.linalg.inv(sigma)
    f = logdet + np.sum(s * sigma_inv)

    # dF/dSigma = Sigma^-1 - Sigma^-1 S Sigma^-1
    w = sigma_inv - sigma_inv @ s @ sigma_inv
    wxx = np.ascontiguousarray(w[:p, :p])
    wxy = np.ascontiguousarray(w[:p, p:])
    wyy = np.ascontiguousarray(w[p:, p:])

    grad = np.empty_like(theta)
    grad[:p] = 2.0 * (wxx @ lx + rho * (wxy @ ly))
    grad[p : p + r] = 2.0 * (wyy @ ly + rho * (wxy.T @ lx))
    for i in range(p):
        grad[p + r + i] = w[i, i] * dx[i]
    for i in range(r):
        grad[2 * p + r + i] = w[p + i, p + i] * dy[i]
    grad[2 * p + 2 * r] = 2.0 * (lx @ (wxy @ ly)) * (1.0 - rho * rho)
    return f, grad


def gaussian_neg_loglik_py(s, sigma, n):
    """Full Gaussian negative log-likelihood at covariance ``sigma``."""
    _sign, logdet = np.linalg.slogdet(sigma)
    quad = np.sum(s * np.linalg.inv(sigma))
    k = s.shape[0]
    return 0.5 * n * (k * _LOG_2PI + logdet + quad)


def envelope_objective_py(m_mat, n_mat, g):
    """log det(G' M G) + log det(G' N G); +inf when either factor is not PD."""
    a = g.T @ m_mat @ g
    b = g.T @ n_mat @ g
    s1, ld1 = np.linalg.slogdet(a)
    s2, ld2 = np.linalg.slogdet(b)
    if s1 <= 0 or s2 <= 0:
        return np.inf
    return ld1 + ld2


sem_discrepancy = _maybe_jit(sem_discrepancy_py)
gaussian_neg_loglik = _maybe_jit(gaussian_neg_loglik_py)
envelope_objective = _maybe_jit(envelope_objective_py)


def _make_envelope_descent(objective):
    def envelope_descent(m_mat, n_mat, g0, max_iter, tol):
        """Minimize the envelope objective over semi-orthogonal bases.

        Projected-gradient descent on the spanned subspace with QR
        retraction and Armijo backtracking; accepted steps never increase
        the objective.  Returns (basis, objective, iterations, grad_norm,
        converged).
        """
        g = g0.copy()
        f = objective(m_mat, n_mat, g)
        step = 1.0
        gnorm = 0.0
        iterations = 0
        converged = False
        for _ in range(max_iter):
            mg = m_mat @ g
            ng = n_mat @ g
            a = np.linalg.solve(g.T @ mg, mg.T).T
            b = np.linalg.solve(g.T @ ng, ng.T).T
            grad = 2.0 * (a + b)
            pgrad = grad - g @ (g.T @ grad)
            gnorm = np.sqrt(np.sum(pgrad * pgrad))
            if gnorm < tol:
                converged = True
                break
            iterations += 1
            step = min(2.0 * step, 1.0)
            accepted = False
            while step > 1e-16:
                trial_q, _ = np.linalg.qr(g - step * pgrad)
                trial = np.ascontiguousarray(trial_q)
                f_trial = objective(m_mat, n_mat, trial)
                if f_trial <= f - 1e-4 * step * gnorm * gnorm:
                    g = trial
                    f = f_trial
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                # No further descent at machine precision; treat as converged.
                converged = True
                break
        return g, f, iterations, gnorm, converged

    return envelope_descent


envelope_descent_py = _make_envelope_descent(envelope_objective_py)
envelope_descent = _maybe_jit(_make_envelope_descent(envelope_objective))
