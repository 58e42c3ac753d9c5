"""Sample moments of indicator data.

Covariances use divisor n (the maximum-likelihood convention) throughout,
matching the estimators built on top of them.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .linalg import frozen_array, sym_inv_sqrt


@dataclass(frozen=True, eq=False)
class Dataset:
    """n observations of (X, Y): columns 1..p are X, columns p+1..p+r are Y."""

    n: int
    p: int
    r: int
    rows: np.ndarray

    def __post_init__(self):
        rows = frozen_array(self.rows)
        if rows.ndim != 2 or rows.shape != (self.n, self.p + self.r):
            raise DataError(
                f"rows must be {self.n}x{self.p + self.r}, got shape {rows.shape}"
            )
        if self.n < 2:
            raise DataError(f"need at least 2 observations, got {self.n}")
        if not np.all(np.isfinite(rows)):
            raise DataError("dataset contains non-finite entries")
        object.__setattr__(self, "rows", rows)

    @property
    def x(self):
        return self.rows[:, : self.p]

    @property
    def y(self):
        return self.rows[:, self.p :]


@dataclass(frozen=True, eq=False)
class SampleMoments:
    """Means and covariance blocks of a sample, divisor n."""

    n: int
    mean_x: np.ndarray
    mean_y: np.ndarray
    s_x: np.ndarray
    s_y: np.ndarray
    s_yx: np.ndarray

    def __post_init__(self):
        for name in ("mean_x", "mean_y", "s_x", "s_y", "s_yx"):
            object.__setattr__(self, name, frozen_array(getattr(self, name)))

    @property
    def p(self):
        return self.mean_x.size

    @property
    def r(self):
        return self.mean_y.size

    @property
    def s_xy(self):
        return self.s_yx.T

    @property
    def joint(self):
        """(p + r) x (p + r) sample covariance of (X, Y)."""
        top = np.hstack([self.s_x, self.s_yx.T])
        bottom = np.hstack([self.s_yx, self.s_y])
        return np.vstack([top, bottom])


def compute_moments(data: Dataset) -> SampleMoments:
    """Column means and covariance blocks of a dataset (divisor n)."""
    n = data.n
    mean = data.rows.mean(axis=0)
    centered = data.rows - mean
    s = centered.T @ centered / n
    s = 0.5 * (s + s.T)
    p = data.p
    return SampleMoments(
        n=n,
        mean_x=mean[:p],
        mean_y=mean[p:],
        s_x=s[:p, :p],
        s_y=s[p:, p:],
        s_yx=s[p:, :p],
    )


def moments_from_covariance(joint, p, r, n=1000, mean=None) -> SampleMoments:
    """Wrap a (p + r) x (p + r) covariance as moments, e.g. population blocks."""
    joint = np.asarray(joint, dtype=float)
    if joint.shape != (p + r, p + r):
        raise DataError(f"joint covariance must be {p + r}x{p + r}")
    if mean is None:
        mean = np.zeros(p + r)
    mean = np.asarray(mean, dtype=float)
    return SampleMoments(
        n=n,
        mean_x=mean[:p],
        mean_y=mean[p:],
        s_x=joint[:p, :p],
        s_y=joint[p:, p:],
        s_yx=joint[p:, :p],
    )


def standardized_cross_cov(m: SampleMoments) -> np.ndarray:
    """Cross-covariance of the whitened blocks, s_y^(-1/2) s_yx s_x^(-1/2).

    Its singular values are the sample canonical correlations of X and Y.
    Raises NumericalError naming the offending block when a marginal
    covariance is singular.
    """
    ry = sym_inv_sqrt(m.s_y, "s_y")
    rx = sym_inv_sqrt(m.s_x, "s_x")
    return ry @ m.s_yx @ rx


def read_dataset_csv(path, p, r) -> Dataset:
    """Read a headerless comma-delimited dataset, X columns first.

    Dimensions are supplied by the caller; a malformed cell raises
    DataError naming the row and column.
    """
    p, r = int(p), int(r)
    if p < 1 or r < 1:
        raise DataError("p and r must be positive")
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for i, record in enumerate(csv.reader(fh)):
            if not record:
                continue
            if len(record) != p + r:
                raise DataError(
                    f"{path}: row {i + 1} has {len(record)} columns, expected {p + r}"
                )
            parsed = []
            for j, cell in enumerate(record):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: row {i + 1}, column {j + 1}: cannot parse {cell!r}"
                    ) from None
            rows.append(parsed)
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 observations, got {len(rows)}")
    return Dataset(n=len(rows), p=p, r=r, rows=np.asarray(rows, dtype=float))
