"""Common result container returned by the fitting entry points."""

from dataclasses import dataclass, field


@dataclass(frozen=True, eq=False)
class FitResult:
    """Outcome of one estimator run.

    ``cor_regression`` is the estimate of |cor{E(xi|X), E(eta|Y)}| in
    [0, 1].  ``cor_construct`` is the estimate of cor(xi, eta) when the
    method provides one (SEM), else None.  ``weights`` carries composite
    weights for composite-based methods.  ``diagnostics`` is free-form
    (convergence flags, dimensions used, tie flags, ...).
    """

    method: str
    cor_regression: float
    cor_construct: float | None = None
    weights: object | None = None
    diagnostics: dict = field(default_factory=dict)
