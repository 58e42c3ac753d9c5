"""Population model for two latent constructs with reflexive indicators.

A single construct drives each indicator block: X = mu_x + beta_x (xi - mu_xi)
+ error and Y = mu_y + beta_y (eta - mu_eta) + error, with the construct pair
(xi, eta) bivariate normal and all errors independent of the constructs.
Everything downstream (moment estimators, SEM, composites) consumes the joint
covariance assembled here.

Two normalizations of the construct scale are supported:

* marginal constraints: var(xi) = var(eta) = 1;
* regression constraints: var{E(xi|X)} = var{E(eta|Y)} = 1.

Conversions between the two leave the observable (X, Y) distribution and
cor(xi, eta) untouched.
"""

import json
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import ConstraintModeError, DataError, NumericalError
from .linalg import check_symmetric_pd, frozen_array, solve_psd


class ConstraintMode(Enum):
    """Normalization fixing either the construct variances or the variances
    of the construct regressions on the indicators."""

    MARGINAL = "marginal"
    REGRESSION = "regression"


@dataclass(frozen=True, eq=False)
class PathParams:
    """Full population parameterization of the reflexive model.

    Parameters
    ----------
    p, r : int
        Number of X and Y indicators.
    mu_x, mu_y : array
        Indicator means, lengths p and r.
    beta_x_xi, beta_y_eta : array
        Loading vectors, lengths p and r.
    sigma_x_given_xi, sigma_y_given_eta : array
        Symmetric positive-definite error covariances (p x p, r x r).
    var_xi, var_eta : float
        Construct variances.
    cov_xi_eta : float
        Construct covariance.
    constraint_mode : ConstraintMode
        Normalization in force.  Under MARGINAL both construct variances
        must equal 1; under REGRESSION the regression variances equal 1
        (checkable with :func:`population_reg_variances`).
    """

    p: int
    r: int
    mu_x: np.ndarray
    mu_y: np.ndarray
    beta_x_xi: np.ndarray
    beta_y_eta: np.ndarray
    sigma_x_given_xi: np.ndarray
    sigma_y_given_eta: np.ndarray
    var_xi: float
    var_eta: float
    cov_xi_eta: float
    constraint_mode: ConstraintMode

    def __post_init__(self):
        p, r = int(self.p), int(self.r)
        if p < 1 or r < 1:
            raise DataError("p and r must be positive")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "r", r)
        for name, length in (("mu_x", p), ("mu_y", r), ("beta_x_xi", p), ("beta_y_eta", r)):
            vec = frozen_array(getattr(self, name))
            if vec.shape != (length,):
                raise DataError(f"{name} must have length {length}, got shape {vec.shape}")
            object.__setattr__(self, name, vec)
        for name, dim in (("sigma_x_given_xi", p), ("sigma_y_given_eta", r)):
            mat = frozen_array(getattr(self, name))
            if mat.shape != (dim, dim):
                raise DataError(f"{name} must be {dim}x{dim}, got shape {mat.shape}")
            check_symmetric_pd(mat, name)
            object.__setattr__(self, name, mat)
        construct = np.array(
            [[self.var_xi, self.cov_xi_eta], [self.cov_xi_eta, self.var_eta]], dtype=float
        )
        check_symmetric_pd(construct, "construct covariance")
        if self.constraint_mode is ConstraintMode.MARGINAL:
            if abs(self.var_xi - 1.0) > 1e-8 or abs(self.var_eta - 1.0) > 1e-8:
                raise DataError("marginal constraints require var_xi = var_eta = 1")

    @property
    def construct_cov(self):
        return np.array(
            [[self.var_xi, self.cov_xi_eta], [self.cov_xi_eta, self.var_eta]], dtype=float
        )

    @property
    def cor_xi_eta(self):
        """Construct correlation, invariant under constraint conversion."""
        return self.cov_xi_eta / np.sqrt(self.var_xi * self.var_eta)


@dataclass(frozen=True, eq=False)
class JointCov:
    """Joint covariance of (X, Y, xi, eta), ordered X block, Y block, xi, eta."""

    p: int
    r: int
    full: np.ndarray

    def __post_init__(self):
        full = frozen_array(self.full)
        m = self.p + self.r + 2
        if full.shape != (m, m):
            raise DataError(f"full must be {m}x{m}, got shape {full.shape}")
        object.__setattr__(self, "full", full)

    @property
    def sigma_x(self):
        return self.full[: self.p, : self.p]

    @property
    def sigma_y(self):
        return self.full[self.p : self.p + self.r, self.p : self.p + self.r]

    @property
    def sigma_yx(self):
        return self.full[self.p : self.p + self.r, : self.p]

    @property
    def sigma_xy(self):
        return self.full[: self.p, self.p : self.p + self.r]

    @property
    def sigma_x_xi(self):
        return self.full[: self.p, self.p + self.r]

    @property
    def sigma_x_eta(self):
        return self.full[: self.p, self.p + self.r + 1]

    @property
    def sigma_y_xi(self):
        return self.full[self.p : self.p + self.r, self.p + self.r]

    @property
    def sigma_y_eta(self):
        return self.full[self.p : self.p + self.r, self.p + self.r + 1]

    @property
    def construct_cov(self):
        return self.full[self.p + self.r :, self.p + self.r :]

    @property
    def sigma_xy_block(self):
        """(p + r) x (p + r) covariance of the observable (X, Y)."""
        return self.full[: self.p + self.r, : self.p + self.r]


def joint_covariance(params: PathParams) -> JointCov:
    """Assemble the joint covariance of (X, Y, xi, eta).

    Blocks: Sigma_X = Sigma_{X|xi} + beta_x beta_x' var_xi, the cross block
    Sigma_YX = beta_y beta_x' cov_xi_eta (rank one), Sigma_{X,xi} =
    beta_x var_xi, Sigma_{X,eta} = beta_x cov_xi_eta, and symmetrically
    for the Y block.
    """
    p, r = params.p, params.r
    bx, by = params.beta_x_xi, params.beta_y_eta
    m = p + r + 2
    full = np.zeros((m, m))
    full[:p, :p] = params.sigma_x_given_xi + np.outer(bx, bx) * params.var_xi
    full[p : p + r, p : p + r] = params.sigma_y_given_eta + np.outer(by, by) * params.var_eta
    cross = np.outer(by, bx) * params.cov_xi_eta
    full[p : p + r, :p] = cross
    full[:p, p : p + r] = cross.T
    full[:p, p + r] = bx * params.var_xi
    full[:p, p + r + 1] = bx * params.cov_xi_eta
    full[p : p + r, p + r] = by * params.cov_xi_eta
    full[p : p + r, p + r + 1] = by * params.var_eta
    full[p + r :, : p + r] = full[: p + r, p + r :].T
    full[p + r :, p + r :] = params.construct_cov
    return JointCov(p=p, r=r, full=full)


def population_reg_variances(params: PathParams):
    """Variance ratios (var{E(xi|X)} / var_xi, var{E(eta|Y)} / var_eta).

    Each ratio equals Sigma_{xi,X} Sigma_X^-1 Sigma_{X,xi} / var_xi and lies
    in (0, 1]; under marginal constraints it is var{E(xi|X)} itself.  Raises
    NumericalError with a condition-number diagnostic when an indicator
    covariance block is singular.
    """
    cov = joint_covariance(params)
    sxxi = cov.sigma_x_xi
    syeta = cov.sigma_y_eta
    vx = float(sxxi @ solve_psd(cov.sigma_x, sxxi, "sigma_x")) / params.var_xi
    vy = float(syeta @ solve_psd(cov.sigma_y, syeta, "sigma_y")) / params.var_eta
    return vx, vy


def _signal_quadratics(params: PathParams):
    """(H_x, H_y) with H_x = Sigma_{xi,X} Sigma_{X|xi}^-1 Sigma_{X,xi}."""
    bx = params.beta_x_xi * params.var_xi
    by = params.beta_y_eta * params.var_eta
    hx = float(bx @ solve_psd(params.sigma_x_given_xi, bx, "sigma_x_given_xi"))
    hy = float(by @ solve_psd(params.sigma_y_given_eta, by, "sigma_y_given_eta"))
    return hx, hy


def bias_factor(params: PathParams) -> float:
    """Attenuation factor linking the two correlation scales.

    Under marginal constraints returns

        [H_x/(1 + H_x) * H_y/(1 + H_y)]^(1/2),

    where H_x = Sigma_{xi,X} Sigma_{X|xi}^-1 Sigma_{X,xi}.  Multiplying by
    cor(xi, eta) gives the correlation of the construct regressions on the
    indicators; the factor lies in [0, 1] and tends to 1 as loadings grow.
    """
    if params.constraint_mode is not ConstraintMode.MARGINAL:
        raise ConstraintModeError("bias_factor requires marginal constraints")
    hx, hy = _signal_quadratics(params)
    return float(np.sqrt((hx / (1.0 + hx)) * (hy / (1.0 + hy))))


def sigma2_from_h(h: float) -> float:
    """Construct variance H/(H - 1) implied by the signal quadratic H under
    regression constraints.

    H <= 1 is a domain error: it would mean var{E(xi|X)} >= var(xi), so the
    regression constraints are unattainable.
    """
    if h <= 1.0:
        raise DataError(
            f"signal quadratic H must exceed 1 under regression constraints, got {h}"
        )
    return h / (h - 1.0)


def _rescale_construct(params: PathParams, c_xi: float, c_eta: float, mode: ConstraintMode):
    """Replace (xi, eta) by (c_xi * xi, c_eta * eta); observables unchanged."""
    return replace(
        params,
        beta_x_xi=params.beta_x_xi / c_xi,
        beta_y_eta=params.beta_y_eta / c_eta,
        var_xi=params.var_xi * c_xi**2,
        var_eta=params.var_eta * c_eta**2,
        cov_xi_eta=params.cov_xi_eta * c_xi * c_eta,
        constraint_mode=mode,
    )


def convert_constraints(params: PathParams, target: ConstraintMode) -> PathParams:
    """Re-express the model under the target normalization.

    The implied (X, Y) covariance and cor(xi, eta) are preserved exactly;
    only the construct scale changes.  Converting to regression constraints
    is impossible for a degenerate signal (zero loadings).
    """
    if target is params.constraint_mode:
        return params
    if target is ConstraintMode.MARGINAL:
        c_xi = 1.0 / np.sqrt(params.var_xi)
        c_eta = 1.0 / np.sqrt(params.var_eta)
    else:
        vx, vy = population_reg_variances(params)
        wx = vx * params.var_xi  # var{E(xi|X)} on the current scale
        wy = vy * params.var_eta
        if wx <= 0.0 or wy <= 0.0:
            raise DataError(
                "conversion to regression constraints impossible: zero loading signal"
            )
        c_xi = 1.0 / np.sqrt(wx)
        c_eta = 1.0 / np.sqrt(wy)
    return _rescale_construct(params, c_xi, c_eta, target)


@dataclass(frozen=True)
class IdentifiabilityReport:
    """Per-side verdicts on whether the construct variance (hence
    cor(xi, eta)) is identified from declared error-covariance zeros."""

    x_identified: bool
    y_identified: bool
    certifying_zeros_x: tuple
    certifying_zeros_y: tuple

    @property
    def cor_identified(self):
        return self.x_identified and self.y_identified


def _expand_zeros(zeros, dim, side):
    if isinstance(zeros, str):
        if zeros != "diagonal":
            raise DataError(f"unknown zero declaration {zeros!r} for {side}")
        return [(i, j) for i in range(dim) for j in range(dim) if i != j]
    pairs = []
    for pair in zeros:
        i, j = int(pair[0]), int(pair[1])
        if i == j or not (0 <= i < dim and 0 <= j < dim):
            raise DataError(
                f"declared zero {pair} for {side} is not an off-diagonal position"
            )
        pairs.append((i, j))
    return pairs


def check_identifiability(params: PathParams, zeros_x=(), zeros_y=()) -> IdentifiabilityReport:
    """Check identifiability of the construct variances from known zeros.

    ``zeros_x`` / ``zeros_y`` declare off-diagonal positions of the error
    covariances known to be zero, either as (i, j) pairs or as the string
    ``"diagonal"`` for a fully diagonal error structure.  A side is
    identified when some declared zero (i, j) has both loadings i and j
    nonzero; a diagonal structure with at least two nonzero loadings
    therefore always certifies.
    """
    zx = _expand_zeros(zeros_x, params.p, "sigma_x_given_xi")
    zy = _expand_zeros(zeros_y, params.r, "sigma_y_given_eta")
    certify_x = tuple(
        (i, j) for i, j in zx if params.beta_x_xi[i] * params.beta_x_xi[j] != 0.0
    )
    certify_y = tuple(
        (i, j) for i, j in zy if params.beta_y_eta[i] * params.beta_y_eta[j] != 0.0
    )
    return IdentifiabilityReport(
        x_identified=bool(certify_x),
        y_identified=bool(certify_y),
        certifying_zeros_x=certify_x,
        certifying_zeros_y=certify_y,
    )


# --- JSON serialization -----------------------------------------------------

_REQUIRED_FIELDS = (
    "p",
    "r",
    "mu_x",
    "mu_y",
    "beta_x_xi",
    "beta_y_eta",
    "sigma_x_given_xi",
    "sigma_y_given_eta",
    "var_xi",
    "var_eta",
    "cov_xi_eta",
    "constraint_mode",
)


def _matrix_from_json(value, dim, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        if arr.size != dim * dim:
            raise DataError(f"{name} must have {dim * dim} entries (row-major)")
        arr = arr.reshape(dim, dim)
    elif arr.shape != (dim, dim):
        raise DataError(f"{name} must be {dim}x{dim}")
    return arr


def path_params_from_dict(doc: dict) -> PathParams:
    missing = [f for f in _REQUIRED_FIELDS if f not in doc]
    if missing:
        raise DataError(f"params document missing fields: {', '.join(missing)}")
    p, r = int(doc["p"]), int(doc["r"])
    mode = str(doc["constraint_mode"]).lower()
    if mode not in ("marginal", "regression"):
        raise DataError('constraint_mode must be "marginal" or "regression"')
    return PathParams(
        p=p,
        r=r,
        mu_x=doc["mu_x"],
        mu_y=doc["mu_y"],
        beta_x_xi=doc["beta_x_xi"],
        beta_y_eta=doc["beta_y_eta"],
        sigma_x_given_xi=_matrix_from_json(doc["sigma_x_given_xi"], p, "sigma_x_given_xi"),
        sigma_y_given_eta=_matrix_from_json(doc["sigma_y_given_eta"], r, "sigma_y_given_eta"),
        var_xi=float(doc["var_xi"]),
        var_eta=float(doc["var_eta"]),
        cov_xi_eta=float(doc["cov_xi_eta"]),
        constraint_mode=ConstraintMode(mode),
    )


def path_params_to_dict(params: PathParams) -> dict:
    """JSON-ready dict; matrices are emitted as row-major flat lists."""
    return {
        "p": params.p,
        "r": params.r,
        "mu_x": params.mu_x.tolist(),
        "mu_y": params.mu_y.tolist(),
        "beta_x_xi": params.beta_x_xi.tolist(),
        "beta_y_eta": params.beta_y_eta.tolist(),
        "sigma_x_given_xi": params.sigma_x_given_xi.ravel().tolist(),
        "sigma_y_given_eta": params.sigma_y_given_eta.ravel().tolist(),
        "var_xi": params.var_xi,
        "var_eta": params.var_eta,
        "cov_xi_eta": params.cov_xi_eta,
        "constraint_mode": params.constraint_mode.value,
    }


def load_path_params(path) -> PathParams:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise DataError(f"params document in {path} must be a JSON object")
    return path_params_from_dict(doc)


def save_path_params(params: PathParams, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(path_params_to_dict(params), fh, indent=2)
        fh.write("\n")
