"""Rank-one reduced-rank regression estimator of the construct-regression
correlation.

The reflexive model forces the cross-covariance of Y and X to have rank one,
so the ML estimator of |cor{E(xi|X), E(eta|Y)}| is the leading singular value
of the whitened cross-covariance, i.e. the first sample canonical correlation
of X and Y.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .linalg import frozen_array, orient_first_positive, sym_inv_sqrt, sym_sqrt
from .model import JointCov
from .moments import SampleMoments, standardized_cross_cov

# Relative gap below which the two leading singular values count as tied.
TIE_REL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Rank1Fit:
    """Rank-one fit of the regression of Y on X.

    ``beta_yx`` is the rank-one coefficient matrix implied by truncating the
    whitened cross-covariance to its first singular pair.  ``a_dir`` and
    ``b_dir`` are the leading left/right singular directions, each sign-fixed
    so its first nonzero entry is positive (the pair's joint sign lives in
    ``beta_yx``, which is built from the raw pair).  ``d1`` is the leading
    singular value clamped to [0, 1]; ``tied`` flags a non-generic tie in
    the leading singular value, in which case the directions are not well
    defined.
    """

    beta_yx: np.ndarray
    a_dir: np.ndarray
    b_dir: np.ndarray
    d1: float
    tied: bool = False

    def __post_init__(self):
        object.__setattr__(self, "beta_yx", frozen_array(self.beta_yx))
        object.__setattr__(self, "a_dir", frozen_array(self.a_dir))
        object.__setattr__(self, "b_dir", frozen_array(self.b_dir))


def fit_rank1(m: SampleMoments) -> Rank1Fit:
    """Fit the rank-one regression via SVD of the whitened cross-covariance.

    Ties in the leading singular value are resolved by lexicographic
    preference on the sign-normalized right direction and flagged.
    """
    c = standardized_cross_cov(m)
    u, sv, vt = np.linalg.svd(c)
    d1 = float(sv[0])

    k = 0
    tied = False
    if sv.size > 1 and d1 > 0.0 and sv[1] >= d1 * (1.0 - TIE_REL_TOL):
        tied = True
        candidates = [j for j in range(sv.size) if sv[j] >= d1 * (1.0 - TIE_REL_TOL)]
        k = max(candidates, key=lambda j: tuple(orient_first_positive(vt[j])))

    rx = sym_inv_sqrt(m.s_x, "s_x")
    beta = sym_sqrt(m.s_y) @ (np.outer(u[:, k], vt[k]) * sv[k]) @ rx
    return Rank1Fit(
        beta_yx=beta,
        a_dir=orient_first_positive(u[:, k]),
        b_dir=orient_first_positive(vt[k]),
        d1=min(max(float(sv[k]), 0.0), 1.0),
        tied=tied,
    )


def estimate_cor_regression(m: SampleMoments) -> float:
    """|cor{E(xi|X), E(eta|Y)}| estimate: the first sample canonical
    correlation of X and Y, in [0, 1]."""
    return fit_rank1(m).d1


def population_cor_regression(cov: JointCov) -> float:
    """Exact population counterpart tr^(1/2)(Sigma_XY Sigma_Y^-1 Sigma_YX
    Sigma_X^-1)."""
    try:
        m1 = np.linalg.solve(cov.sigma_y, cov.sigma_yx)
        m2 = np.linalg.solve(cov.sigma_x, cov.sigma_xy)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular indicator covariance block: {exc}") from None
    trace = float(np.sum(m1 * m2.T))
    return float(np.sqrt(max(trace, 0.0)))
