"""Partially linear regression in the partialled-out parametrization.

The working model treats (Y, X) given W as jointly Gaussian with mean
(m1(w), m2(w)') and a covariance that couples the two equations through the
regression coefficient.  All likelihood code below uses the factorized
conditional-times-marginal form,

    Y | X, W  ~  N(m1(w) + (X - m2(w))' beta,  1/xi)
    X | W     ~  N(m2(w),  sigma02_sq * I)

which is numerically stabler than assembling and inverting the joint
covariance.  The joint form exists only as a test oracle.

Nuisance functions are carried as their values at the design points; nothing
in the likelihood depends on them anywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Dataset",
    "DiscretePopulation",
    "ModelConfig",
    "NuisanceValues",
    "ThetaState",
    "cov_matrix",
    "information",
    "kl_objective",
    "log_quasi_likelihood",
    "robinson_decompose",
    "robinson_invert",
    "score",
]

LOG_2PI = float(np.log(2.0 * np.pi))


def _as_vector(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def _as_matrix(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class ModelConfig:
    """Fixed hyperparameters of the sampling model.

    Parameters
    ----------
    sigma01_sq : outcome residual variance (used directly in known-variance
        mode; ``1/sigma01_sq`` is the reference precision otherwise).
    sigma02_sq : variance of the auxiliary X-equation.  It exists only to
        identify m2 and can be fixed arbitrarily; the X-covariance is
        ``sigma02_sq * I``.
    variance_known : when True the precision is pinned at ``1/sigma01_sq``
        and the precision coordinate is dropped from scores and information.
    xi_bounds : compact support of the precision prior (unknown-variance
        mode).
    beta_bound : half-width B of the coefficient box [-B, B]^d_x used by
        truncated samplers.
    """

    sigma01_sq: float = 1.0
    sigma02_sq: float = 1.0
    variance_known: bool = True
    xi_bounds: tuple[float, float] = (0.04, 25.0)
    beta_bound: float = 10.0

    def __post_init__(self) -> None:
        if not (self.sigma01_sq > 0 and np.isfinite(self.sigma01_sq)):
            raise ValueError("sigma01_sq must be a positive finite real")
        if not (self.sigma02_sq > 0 and np.isfinite(self.sigma02_sq)):
            raise ValueError("sigma02_sq must be a positive finite real")
        lo, hi = self.xi_bounds
        if not (0 < lo < hi and np.isfinite(hi)):
            raise ValueError("xi_bounds must satisfy 0 < lower < upper < inf")
        if not (self.beta_bound > 0):
            raise ValueError("beta_bound must be positive")

    @property
    def xi0(self) -> float:
        """Precision implied by the known residual variance."""
        return 1.0 / self.sigma01_sq


@dataclass(frozen=True)
class Dataset:
    """Observed sample: outcome y, covariates of interest x, controls w.

    Controls live in the unit hypercube; this is validated at construction
    (use :func:`plrbayes.dgp.affine_rescale_w` first for raw data).
    """

    y: np.ndarray
    x: np.ndarray
    w: np.ndarray

    def __post_init__(self) -> None:
        y = _as_vector(self.y, "y")
        x = _as_matrix(self.x, "x")
        w = _as_matrix(self.w, "w")
        n = y.shape[0]
        if n < 2:
            raise ValueError(f"need at least 2 observations, got {n}")
        if x.shape[0] != n or w.shape[0] != n:
            raise ValueError(
                f"row mismatch: y has {n}, x has {x.shape[0]}, w has {w.shape[0]}"
            )
        for name, arr in (("y", y), ("x", x), ("w", w)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("w entries must lie in [0, 1]")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d_x(self) -> int:
        return self.x.shape[1]

    @property
    def d_w(self) -> int:
        return self.w.shape[1]


@dataclass(frozen=True)
class NuisanceValues:
    """Values of the nuisance pair m = (m1, m2) at the design points."""

    m1: np.ndarray
    m2: np.ndarray

    def __post_init__(self) -> None:
        m1 = _as_vector(self.m1, "m1")
        m2 = _as_matrix(self.m2, "m2")
        if m2.shape[0] != m1.shape[0]:
            raise ValueError(
                f"m1 has {m1.shape[0]} rows but m2 has {m2.shape[0]}"
            )
        if not (np.all(np.isfinite(m1)) and np.all(np.isfinite(m2))):
            raise ValueError("nuisance values must be finite")
        object.__setattr__(self, "m1", m1)
        object.__setattr__(self, "m2", m2)

    def check_against(self, data: Dataset) -> None:
        if self.m1.shape[0] != data.n or self.m2.shape[1] != data.d_x:
            raise ValueError(
                f"nuisance values shaped ({self.m1.shape[0]}, {self.m2.shape[1]}) "
                f"do not match data with n={data.n}, d_x={data.d_x}"
            )


@dataclass(frozen=True)
class ThetaState:
    """Finite-dimensional parameter (beta, xi); xi is a precision."""

    beta: np.ndarray
    xi: float

    def __post_init__(self) -> None:
        beta = _as_vector(np.atleast_1d(self.beta), "beta")
        if not np.all(np.isfinite(beta)):
            raise ValueError("beta must be finite")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "xi", float(self.xi))

    @property
    def d_x(self) -> int:
        return self.beta.shape[0]


def cov_matrix(beta: float, config: ModelConfig) -> np.ndarray:
    """Joint 2x2 covariance of (Y, X) given W for scalar beta.

    The determinant is sigma01_sq * sigma02_sq for every beta, so the matrix
    is positive definite on the whole real line.
    """
    b = float(beta)
    s1, s2 = config.sigma01_sq, config.sigma02_sq
    return np.array([[s1 + s2 * b * b, b * s2], [b * s2, s2]])


def robinson_decompose(eta0, beta0, m02) -> np.ndarray:
    """Map (eta0, beta0, m02) to the partialled-out intercept m01 = eta0 + m02'beta0."""
    eta = _as_vector(eta0, "eta0")
    beta = _as_vector(np.atleast_1d(beta0), "beta0")
    m2 = _as_matrix(m02, "m02")
    if m2.shape != (eta.shape[0], beta.shape[0]):
        raise ValueError(
            f"m02 shape {m2.shape} does not conform to n={eta.shape[0]}, d_x={beta.shape[0]}"
        )
    return eta + m2 @ beta


def robinson_invert(m1, beta, m2) -> np.ndarray:
    """Inverse map: recover eta = m1 - m2'beta."""
    m1v = _as_vector(m1, "m1")
    betav = _as_vector(np.atleast_1d(beta), "beta")
    m2m = _as_matrix(m2, "m2")
    if m2m.shape != (m1v.shape[0], betav.shape[0]):
        raise ValueError(
            f"m2 shape {m2m.shape} does not conform to n={m1v.shape[0]}, d_x={betav.shape[0]}"
        )
    return m1v - m2m @ betav


def _residuals(data: Dataset, theta: ThetaState, m: NuisanceValues):
    """Outcome residuals r_i and centered covariates s_i = x_i - m2(w_i)."""
    m.check_against(data)
    if theta.d_x != data.d_x:
        raise ValueError(f"beta has {theta.d_x} coordinates, data has d_x={data.d_x}")
    s = data.x - m.m2
    r = data.y - m.m1 - s @ theta.beta
    return r, s

def log_quasi_likelihood(
    data: Dataset, theta: ThetaState, m: NuisanceValues, config: ModelConfig
) -> float:
    """Log of the working likelihood in factorized form.

    Sums, over observations, the conditional log-density of Y given (X, W)
    at precision xi and the marginal log-density of X given W at covariance
    sigma02_sq * I.
    """
    if not (theta.xi > 0 and np.isfinite(theta.xi)):
        raise ValueError(f"xi must be a positive finite precision, got {theta.xi}")
    r, s = _residuals(data, theta, m)
    n = data.n
    xi = theta.xi
    ll_y = 0.5 * n * (np.log(xi) - LOG_2PI) - 0.5 * xi * float(r @ r)
    dev = data.x - m.m2
    s2 = config.sigma02_sq
    ll_x = -0.5 * n * data.d_x * (LOG_2PI + np.log(s2)) - 0.5 * float(
        np.sum(dev * dev)
    ) / s2
    return float(ll_y + ll_x)


def score(
    data: Dataset, theta: ThetaState, m: NuisanceValues, config: ModelConfig
) -> np.ndarray:
    """Gradient of the log quasi-likelihood in (beta[, xi]).

    Known-variance mode returns the beta block only; otherwise the precision
    derivative n/(2 xi) - sum(r^2)/2 is appended.
    """
    r, s = _residuals(data, theta, m)
    beta_block = theta.xi * (s.T @ r)
    if config.variance_known:
        return beta_block
    xi_block = data.n / (2.0 * theta.xi) - 0.5 * float(r @ r)
    return np.concatenate([beta_block, [xi_block]])


def information(
    data: Dataset, theta: ThetaState, m: NuisanceValues, config: ModelConfig
) -> np.ndarray:
    """Average negative Hessian of the log quasi-likelihood.

    The beta block is xi * mean of s_i s_i'; in unknown-variance mode the
    beta-xi cross block is -mean of r_i s_i and the xi block is 1/(2 xi^2).
    """
    r, s = _residuals(data, theta, m)
    n = data.n
    bb = theta.xi * (s.T @ s) / n
    if config.variance_known:
        return bb
    cross = -(s.T @ r) / n
    d = data.d_x
    out = np.empty((d + 1, d + 1))
    out[:d, :d] = bb
    out[:d, d] = cross
    out[d, :d] = cross
    out[d, d] = 1.0 / (2.0 * theta.xi**2)
    return out


@dataclass(frozen=True)
class DiscretePopulation:
    """Finitely supported joint law of (Y, X, W) on a W grid.

    Each support atom is (y[i], x[i], w_points[w_index[i]]) with mass
    prob[i].  Used for population-level objectives where expectations reduce
    to finite sums.
    """

    y: np.ndarray
    x: np.ndarray
    w_index: np.ndarray
    prob: np.ndarray
    w_points: np.ndarray

    def __post_init__(self) -> None:
        y = _as_vector(self.y, "y")
        x = _as_matrix(self.x, "x")
        prob = _as_vector(self.prob, "prob")
        w_index = np.asarray(self.w_index, dtype=int)
        w_points = _as_matrix(self.w_points, "w_points")
        if y.shape[0] == 0:
            raise ValueError("population support is empty")
        if not (x.shape[0] == prob.shape[0] == w_index.shape[0] == y.shape[0]):
            raise ValueError("support arrays must share their first dimension")
        if np.any(prob <= 0):
            raise ValueError("all support probabilities must be positive")
        if abs(prob.sum() - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {prob.sum()}, expected 1")
        if w_index.min() < 0 or w_index.max() >= w_points.shape[0]:
            raise ValueError("w_index refers outside the W grid")
        marginal = np.bincount(w_index, weights=prob, minlength=w_points.shape[0])
        if np.any(marginal <= 0):
            raise ValueError("every W grid point needs positive marginal mass")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w_index", w_index)
        object.__setattr__(self, "prob", prob)
        object.__setattr__(self, "w_points", w_points)

    @property
    def n_grid(self) -> int:
        return self.w_points.shape[0]


def kl_objective(
    pop: DiscretePopulation,
    beta,
    m1_grid,
    m2_grid,
    config: ModelConfig,
) -> float:
    """Population cross-entropy -E[log p_{beta,m}(Y, X | W)].

    Differs from the expected conditional KL divergence to the truth only by
    the constant E[log p0], so argmins coincide.  m1_grid and m2_grid hold
    nuisance values at the W grid points.
    """
    betav = _as_vector(np.atleast_1d(beta), "beta")
    m1g = _as_vector(m1_grid, "m1_grid")
    m2g = _as_matrix(m2_grid, "m2_grid")
    if m1g.shape[0] != pop.n_grid or m2g.shape != (pop.n_grid, betav.shape[0]):
        raise ValueError("nuisance grids do not conform to the population W grid")
    s1, s2 = config.sigma01_sq, config.sigma02_sq
    mean_y = m1g[pop.w_index] + np.sum(
        (pop.x - m2g[pop.w_index]) * betav[None, :], axis=1
    )
    ll_y = -0.5 * (LOG_2PI + np.log(s1)) - 0.5 * (pop.y - mean_y) ** 2 / s1
    dev = pop.x - m2g[pop.w_index]
    ll_x = -0.5 * pop.x.shape[1] * (LOG_2PI + np.log(s2)) - 0.5 * np.sum(
        dev * dev, axis=1
    ) / s2
    return -float(pop.prob @ (ll_y + ll_x))
