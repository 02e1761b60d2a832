"""Gaussian reference objects for posterior comparison.

The reference law is Normal(center, covariance) with center theta0 plus the
information-weighted score step at the true nuisance values and covariance
equal to the inverse average information over n.  In known-variance mode the
beta part of the center coincides exactly with the least-squares coefficient
of y - m01 on x - m02.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .dgp import TrueFunctions
from .model import Dataset, ModelConfig, NuisanceValues, ThetaState, information, score
from .priors import series_design_matrix

__all__ = [
    "GaussianReference",
    "feasible_robinson",
    "oracle_reference",
    "reference_quantile",
    "wald_interval",
]


@dataclass(frozen=True)
class GaussianReference:
    """Reference normal law for the finite-dimensional posterior."""

    center: np.ndarray
    covariance: np.ndarray
    n: int

    def __post_init__(self) -> None:
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (center.shape[0], center.shape[0]):
            raise ValueError(f"covariance shape {cov.shape} does not match center")
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise ValueError("covariance must be symmetric")
        # Positive definiteness check; raises LinAlgError on failure.
        np.linalg.cholesky(cov)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "covariance", cov)

    @property
    def sd(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        chol = np.linalg.cholesky(self.covariance)
        return self.center[None, :] + rng.standard_normal((size, self.center.shape[0])) @ chol.T


def oracle_reference(
    data: Dataset, truth: TrueFunctions, config: ModelConfig
) -> GaussianReference:
    """Reference law computed at the true nuisance values (simulation use only)."""
    m0 = truth.nuisance_at(data.w)
    theta0 = ThetaState(truth.beta0, 1.0 / truth.sigma01_sq)
    info = information(data, theta0, m0, config)
    info = np.atleast_2d(info)
    try:
        info_inv = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "singular information: the centered design is degenerate"
        ) from exc
    sc = np.atleast_1d(score(data, theta0, m0, config))
    n = data.n
    delta = info_inv @ sc / math.sqrt(n)
    theta0_vec = (
        theta0.beta if config.variance_known else np.concatenate([theta0.beta, [theta0.xi]])
    )
    center = theta0_vec + delta / math.sqrt(n)
    return GaussianReference(center, info_inv / n, n)


def _nn_smooth(w: np.ndarray, targets: np.ndarray, k: int) -> np.ndarray:
    """k-nearest-neighbor regression of each target column on w (leave-self-in)."""
    from scipy.spatial.distance import cdist

    d = cdist(w, w)
    order = np.argsort(d, axis=1)[:, :k]
    return targets[order].mean(axis=1)


def feasible_robinson(
    data: Dataset,
    smoother: str = "series",
    level: int | None = None,
    n_neighbors: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Partialling-out estimator: smooth y and x on w, regress residuals.

    Returns the coefficient and its estimated covariance
    sigma_hat^2 (S'S)^{-1} with S the partialled-out design and sigma_hat^2
    the residual mean square.
    """
    if smoother == "series":
        if data.d_w != 1:
            raise ValueError("series smoother requires d_w == 1; use 'nearest-neighbor'")
        if level is None:
            level = max(1, int(math.ceil(math.log2(data.n) / 3.0)))
        design = series_design_matrix(data.w[:, 0], level)
        coef_y, *_ = np.linalg.lstsq(design, data.y, rcond=None)
        coef_x, *_ = np.linalg.lstsq(design, data.x, rcond=None)
        y_hat = design @ coef_y
        x_hat = design @ coef_x
    elif smoother == "nearest-neighbor":
        if n_neighbors is None:
            n_neighbors = max(1, int(math.ceil(data.n ** (2.0 / 3.0))))
        if n_neighbors >= data.n:
            raise ValueError("n_neighbors must be smaller than n")
        y_hat = _nn_smooth(data.w, data.y, n_neighbors)
        x_hat = _nn_smooth(data.w, data.x, n_neighbors)
    else:
        raise ValueError(f"unknown smoother {smoother!r}")
    s = data.x - x_hat
    r = data.y - y_hat
    gram = s.T @ s
    try:
        beta_hat = np.linalg.solve(gram, s.T @ r)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular partialled-out design") from exc
    resid = r - s @ beta_hat
    sigma_hat_sq = float(resid @ resid) / data.n
    vcov = sigma_hat_sq * np.linalg.inv(gram)
    return beta_hat, vcov


def reference_quantile(ref: GaussianReference, q: float) -> np.ndarray:
    """Per-coordinate q-quantile of the reference law: center + z_q * sd."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie strictly between 0 and 1")
    return ref.center + ndtri(q) * ref.sd


def wald_interval(ref: GaussianReference, level: float) -> np.ndarray:
    """Equitailed reference interval per coordinate; rows are (lo, hi)."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    alpha = 1.0 - level
    z = ndtri(1.0 - alpha / 2.0)
    lo = ref.center - z * ref.sd
    hi = ref.center + z * ref.sd
    return np.column_stack([lo, hi])
