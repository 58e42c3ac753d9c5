"""Dense symmetric-matrix helpers used throughout the package."""

import numpy as np

from .errors import DataError, NumericalError

# Relative eigenvalue floor: eigenvalues below EIG_REL_FLOOR times the largest
# are treated as zero in PD checks and matrix roots.
EIG_REL_FLOOR = 1e-12


def check_symmetric_pd(m, name="matrix", rel_floor=EIG_REL_FLOOR):
    """Raise DataError unless ``m`` is symmetric positive definite."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DataError(f"{name} must be square, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(m).max())):
        raise DataError(f"{name} is not symmetric")
    w = np.linalg.eigvalsh(m)
    if w[0] <= rel_floor * max(w[-1], 0.0) or w[-1] <= 0.0:
        raise DataError(
            f"{name} is not positive definite (eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}])"
        )


def sym_sqrt(m):
    """Symmetric PSD square root; small negative eigenvalues are clipped to 0."""
    w, v = np.linalg.eigh(np.asarray(m, dtype=float))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def sym_inv_sqrt(m, name="matrix"):
    """Symmetric inverse square root via eigendecomposition.

    Raises NumericalError naming ``name`` when the matrix is numerically
    singular at the relative eigenvalue floor.
    """
    w, v = np.linalg.eigh(np.asarray(m, dtype=float))
    if w[0] <= EIG_REL_FLOOR * max(w[-1], 0.0) or w[-1] <= 0.0:
        cond = np.inf if w[0] <= 0 else w[-1] / w[0]
        raise NumericalError(
            f"{name} is numerically singular (condition number {cond:.3e})"
        )
    return (v / np.sqrt(w)) @ v.T


def solve_psd(m, b, name="matrix"):
    """Solve m @ x = b for symmetric PD ``m`` with a singularity diagnostic."""
    m = np.asarray(m, dtype=float)
    try:
        c = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        w = np.linalg.eigvalsh(m)
        cond = np.inf if w[0] <= 0 else w[-1] / w[0]
        raise NumericalError(
            f"{name} is numerically singular (condition number {cond:.3e})"
        ) from None
    y = np.linalg.solve(c, b)
    return np.linalg.solve(c.T, y)


def first_nonzero_sign(v, tol=0.0):
    """Sign of the first entry with magnitude > tol; +1 for the zero vector."""
    for x in np.asarray(v).ravel():
        if abs(x) > tol:
            return 1.0 if x > 0 else -1.0
    return 1.0


def orient_first_positive(v):
    """Copy of ``v`` scaled by +-1 so its first nonzero entry is positive."""
    v = np.array(v, dtype=float)
    return first_nonzero_sign(v) * v


def orthonormal_complement(basis):
    """Orthonormal basis of the orthogonal complement of span(basis).

    ``basis`` is d x k with k <= d; returns a d x (d-k) semi-orthogonal
    matrix.  Any completion is acceptable since only the span matters.
    """
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    d, k = basis.shape
    if k == 0:
        return np.eye(d)
    q, _ = np.linalg.qr(basis, mode="complete")
    return q[:, k:]


def frozen_array(a, dtype=float):
    """Read-only float ndarray copy (values stay immutable after validation)."""
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr
