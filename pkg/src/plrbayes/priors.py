"""Nuisance priors: Matérn Gaussian processes and bounded uniform series.

The Matérn kernel is normalized to equal the spectral integral

    kappa_a(h) = integral over R^d of exp(-i lam'h) (1 + |lam|^2)^(-a - d/2) dlam,

not the more common unit-variance convention, so closed-form values such as
kappa(0) = pi at d=1, a=1/2 are reproduced exactly.  The series prior uses a
hierarchical hat basis (constant scaling function at level 0, dyadic hats at
finer levels) with independent uniform coefficients whose envelope decays as
2^(-l(alpha0 + 1/2)); draws lie in the corresponding Hoelder-type ball by
construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gammaln, kv

__all__ = [
    "FactorizationError",
    "GramFactor",
    "MaternSpec",
    "WaveletPriorSpec",
    "basis_eval",
    "coefficient_bound",
    "default_level_cap",
    "gp_posterior_draw",
    "gram_and_factor",
    "kernel_matrix",
    "matern_kernel",
    "sample_gp",
    "sample_wavelet_prior",
    "series_design_matrix",
    "series_eval",
]


class FactorizationError(RuntimeError):
    """Gram matrix could not be factorized even after jitter escalation."""


@dataclass(frozen=True)
class MaternSpec:
    """Matérn process prior with spectral regularity ``alpha``.

    ``amplitude`` scales the covariance (so draws scale like its square
    root); ``lengthscale`` rescales distances before the kernel is applied.
    Defaults reproduce the unormalized spectral-integral kernel.
    """

    alpha: float
    lengthscale: float = 1.0
    amplitude: float = 1.0
    jitter: float = 1e-8

    def __post_init__(self) -> None:
        for name in ("alpha", "lengthscale", "amplitude", "jitter"):
            v = getattr(self, name)
            if not (v > 0 and np.isfinite(v)):
                raise ValueError(f"{name} must be a positive finite real, got {v}")


def _spectral_matern(h: np.ndarray, alpha: float, d_w: int) -> np.ndarray:
    """Value of the spectral integral at distance h >= 0 (vectorized).

    Equals (2 pi)^{d/2} 2^{1-s} / Gamma(s) * h^alpha * K_alpha(h) with
    s = alpha + d/2; the h -> 0 limit is pi^{d/2} Gamma(alpha) / Gamma(s).
    """
    h = np.asarray(h, dtype=float)
    s = alpha + 0.5 * d_w
    at_zero = math.exp(0.5 * d_w * math.log(math.pi) + gammaln(alpha) - gammaln(s))
    log_front = 0.5 * d_w * math.log(2.0 * math.pi) + (1.0 - s) * math.log(2.0) - gammaln(s)
    out = np.full(h.shape, at_zero)
    pos = h > 1e-12
    if np.any(pos):
        hp = h[pos]
        with np.errstate(over="ignore", invalid="ignore"):
            vals = math.exp(log_front) * hp**alpha * kv(alpha, hp)
        # kv underflows to 0 for very large arguments; the kernel does too.
        out[pos] = np.where(np.isfinite(vals), vals, 0.0)
    return out


def matern_kernel(ws, wt, spec: MaternSpec) -> float:
    """Covariance between process values at two points of the unit cube."""
    a = np.atleast_1d(np.asarray(ws, dtype=float))
    b = np.atleast_1d(np.asarray(wt, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"point shapes differ: {a.shape} vs {b.shape}")
    h = float(np.linalg.norm(a - b)) / spec.lengthscale
    return float(spec.amplitude * _spectral_matern(np.array([h]), spec.alpha, a.shape[0])[0])


def kernel_matrix(points: np.ndarray, spec: MaternSpec) -> np.ndarray:
    """Kernel matrix over all pairs of rows of ``points`` (n x d_w)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    h = cdist(pts, pts) / spec.lengthscale
    gram = spec.amplitude * _spectral_matern(h, spec.alpha, pts.shape[1])
    return 0.5 * (gram + gram.T)


@dataclass(frozen=True)
class GramFactor:
    """Kernel matrix at the design points with its factorizations.

    ``chol`` is the lower Cholesky factor of ``gram + jitter * I``; the
    eigendecomposition of the same matrix supports conditional updates whose
    noise level changes between calls.  ``escalations`` counts how many
    jitter ladder steps (x100 each) were needed.
    """

    gram: np.ndarray
    chol: np.ndarray
    jitter: float
    escalations: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.gram.shape[0]


_JITTER_LADDER = (1.0, 1e2, 1e4)


def gram_and_factor(points: np.ndarray, spec: MaternSpec) -> GramFactor:
    """Build the Gram matrix at the design points and factorize it.

    The jitter escalates 1e-8 -> 1e-6 -> 1e-4 (relative to ``spec.jitter``)
    before giving up; escalation signals near-duplicate design points and is
    recorded on the returned factor.
    """
    gram = kernel_matrix(points, spec)
    n = gram.shape[0]
    eye = np.eye(n)
    for step, mult in enumerate(_JITTER_LADDER):
        jitter = spec.jitter * mult
        try:
            chol = np.linalg.cholesky(gram + jitter * eye)
        except np.linalg.LinAlgError:
            continue
        lam, q = np.linalg.eigh(gram + jitter * eye)
        lam = np.clip(lam, 0.0, None)
        return GramFactor(gram, chol, jitter, step, lam, q)
    raise FactorizationError(
        f"Cholesky failed after jitter escalation up to {spec.jitter * _JITTER_LADDER[-1]:g}; "
        "the design likely contains (near-)duplicate points"
    )


def sample_gp(factor: GramFactor, rng: np.random.Generator) -> np.ndarray:
    """Draw process values at the design points (mean zero, covariance gram + jitter I)."""
    return factor.chol @ rng.standard_normal(factor.n)


def gp_posterior_draw(
    factor: GramFactor, obs: np.ndarray, noise_var: float, rng: np.random.Generator
) -> np.ndarray:
    """Draw from the conditional law of the process values given obs = f + noise.

    Works through the precomputed eigendecomposition, so the per-call noise
    variance is free to change without refactorizing.
    """
    if not (noise_var > 0 and np.isfinite(noise_var)):
        raise ValueError(f"noise_var must be positive finite, got {noise_var}")
    lam, q = factor.eigenvalues, factor.eigenvectors
    t = q.T @ np.asarray(obs, dtype=float)
    shrink = lam / (lam + noise_var)
    mean = q @ (shrink * t)
    sd = np.sqrt(lam * noise_var / (lam + noise_var))
    return mean + q @ (sd * rng.standard_normal(factor.n))


# --- hierarchical hat basis ---------------------------------------------

def basis_eval(level: int, shift: int, w) -> np.ndarray:
    """Basis function value(s) at w in [0, 1].

    Level 0 is the constant scaling function; level l >= 1, shift k holds the
    hat supported on [k 2^-l, (k+1) 2^-l] with apex value 2^(l/2).
    """
    if level < 0 or shift < 0 or shift > 2**level - 1:
        raise ValueError(f"basis index out of range: level={level}, shift={shift}")
    warr = np.asarray(w, dtype=float)
    scalar = warr.ndim == 0
    warr = np.atleast_1d(warr)
    if level == 0:
        out = np.ones_like(warr)
    else:
        t = warr * 2.0**level - shift
        hat = 1.0 - np.abs(2.0 * t - 1.0)
        out = 2.0 ** (level / 2.0) * np.where((t >= 0.0) & (t <= 1.0), np.maximum(hat, 0.0), 0.0)
    return float(out[0]) if scalar else out


def series_eval(coeffs, w) -> np.ndarray:
    """Evaluate sum_{l,k} c[l][k] * basis(l, k, w) for w in [0, 1].

    ``coeffs`` is a sequence of per-level arrays with 2^l entries at level l.
    Exploits that within a level the hat supports are disjoint.
    """
    warr = np.atleast_1d(np.asarray(w, dtype=float))
    if len(coeffs) == 0:
        return np.zeros_like(warr)
    if len(np.atleast_1d(coeffs[0])) != 1:
        raise ValueError("level 0 must have exactly one coefficient")
    out = float(np.atleast_1d(coeffs[0])[0]) * np.ones_like(warr)
    for level in range(1, len(coeffs)):
        c = np.asarray(coeffs[level], dtype=float)
        if c.shape[0] != 2**level:
            raise ValueError(
                f"level {level} must have {2**level} coefficients, got {c.shape[0]}"
            )
        k = np.clip(np.floor(warr * 2.0**level).astype(int), 0, 2**level - 1)
        t = warr * 2.0**level - k
        hat = np.maximum(1.0 - np.abs(2.0 * t - 1.0), 0.0)
        out += c[k] * 2.0 ** (level / 2.0) * hat
    return out


def series_design_matrix(w, level_cap: int) -> np.ndarray:
    """Design matrix with one column per basis function up to ``level_cap``."""
    warr = np.atleast_1d(np.asarray(w, dtype=float))
    cols = [basis_eval(0, 0, warr)]
    for level in range(1, level_cap + 1):
        for shift in range(2**level):
            cols.append(basis_eval(level, shift, warr))
    return np.column_stack(cols)


@dataclass(frozen=True)
class WaveletPriorSpec:
    """Bounded uniform series prior truncated at ``L_max`` levels.

    Coefficients at level l are uniform on +-M 2^(-l(alpha0 + 1/2)).  The
    Hoelder-ball reading of draws needs alpha0 > 1/2; smaller values run but
    warn.
    """

    alpha0: float
    M: float = 1.0
    L_max: int = 6

    def __post_init__(self) -> None:
        if not (self.alpha0 > 0 and np.isfinite(self.alpha0)):
            raise ValueError("alpha0 must be positive")
        if not (self.M > 0 and np.isfinite(self.M)):
            raise ValueError("M must be positive")
        if self.L_max < 0 or int(self.L_max) != self.L_max:
            raise ValueError("L_max must be a non-negative integer")
        if self.alpha0 <= 0.5:
            warnings.warn(
                f"series decay exponent alpha0={self.alpha0} <= 1/2: draws no longer "
                "fill a Hoelder-type ball; proceeding anyway",
                RuntimeWarning,
                stacklevel=2,
            )


def coefficient_bound(spec: WaveletPriorSpec, level: int) -> float:
    """Support half-width of the level-``level`` coefficients."""
    return spec.M * 2.0 ** (-level * (spec.alpha0 + 0.5))


def default_level_cap(n: int) -> int:
    """Default series truncation: ceil(log2 n) levels."""
    if n < 2:
        raise ValueError("need n >= 2")
    return int(math.ceil(math.log2(n)))


def sample_wavelet_prior(
    spec: WaveletPriorSpec, rng: np.random.Generator
) -> list[np.ndarray]:
    """Draw a coefficient array: level l gets 2^l iid uniforms on +-bound(l)."""
    return [
        coefficient_bound(spec, level) * rng.uniform(-1.0, 1.0, size=2**level)
        for level in range(spec.L_max + 1)
    ]
