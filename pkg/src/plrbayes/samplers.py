"""Gibbs samplers for both parametrizations of the partially linear model.

The partialled-out sampler cycles three blocks (four with unknown noise):

  1. m1 given (beta, m2, xi): Gaussian regression of y - (x - m2)'beta on w
     with noise 1/xi;
  2. m2 given (beta, m1, xi), one X coordinate at a time: Gaussian regression
     of x_k - c_k * r on w, where r is the outcome residual excluding
     coordinate k, c_k = beta_k s2 / (s1 + beta_k^2 s2), and the effective
     noise variance is s1 s2 / (s1 + beta_k^2 s2) with s1 = 1/xi and
     s2 = sigma02_sq (the conditional X-given-Y variance implied by the joint
     working model);
  3. beta given (m, xi): conjugate Gaussian from regressing y - m1 on x - m2,
     optionally truncated to the coefficient box;
  4. xi given (beta, m): Metropolis step with a truncated-Gamma proposal that
     matches the Gaussian-scale conditional, restricted to the precision
     bounds.

Nuisance blocks are conjugate multivariate-normal draws under process priors
and per-coefficient slice updates under the bounded uniform series prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, gammaincinv, ndtr, ndtri

from .model import Dataset, ModelConfig
from .priors import (
    GramFactor,
    MaternSpec,
    WaveletPriorSpec,
    coefficient_bound,
    gp_posterior_draw,
    gram_and_factor,
    sample_gp,
    sample_wavelet_prior,
    series_eval,
)

__all__ = [
    "ChainConfig",
    "ChainError",
    "PosteriorDraws",
    "SliceShrinkageError",
    "draw_beta_conditional",
    "draw_xi_conditional",
    "effective_sample_size",
    "gibbs_beta_eta",
    "gibbs_beta_m",
    "gibbs_beta_m_discrete",
    "run_chain",
    "slice_update_wavelet",
    "split_psrf",
]


class ChainError(RuntimeError):
    """Raised when a chain hits a non-recoverable numerical problem."""


class SliceShrinkageError(ChainError):
    """Slice bracket shrank past the iteration cap; likelihood is pathological."""


@dataclass(frozen=True)
class ChainConfig:
    """MCMC run-length, seeding, initialization, and beta-update policy."""

    n_iter: int
    burn_in: int
    thin: int = 1
    seed: int = 0
    init: str = "prior"
    beta_update: str = "conjugate-truncated"
    store_m: bool = False
    init_values: dict | None = None

    def __post_init__(self) -> None:
        if self.burn_in < 0 or self.burn_in >= self.n_iter:
            raise ValueError("need 0 <= burn_in < n_iter")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.init not in ("prior", "zero", "user"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.beta_update not in ("conjugate-truncated", "conjugate-flat"):
            raise ValueError(f"unknown beta_update {self.beta_update!r}")
        if self.init == "user" and not self.init_values:
            raise ValueError("init='user' requires init_values")

    @property
    def n_retained(self) -> int:
        return (self.n_iter - self.burn_in + self.thin - 1) // self.thin


@dataclass
class PosteriorDraws:
    """Retained draws plus chain metadata (seed, config, acceptance rates)."""

    beta: np.ndarray
    xi: np.ndarray | None
    m1: np.ndarray | None
    m2: np.ndarray | None
    meta: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return self.beta.shape[0]

    @property
    def d_x(self) -> int:
        return self.beta.shape[1]

    def save(self, csv_path, meta_path=None) -> None:
        """Write one CSV row per retained draw plus a JSON metadata sidecar."""
        import csv as _csv
        import json

        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = _csv.writer(fh)
            header = [f"beta{j + 1}" for j in range(self.d_x)]
            if self.xi is not None:
                header.append("xi")
            writer.writerow(header)
            for i in range(self.n_draws):
                row = [repr(float(v)) for v in self.beta[i]]
                if self.xi is not None:
                    row.append(repr(float(self.xi[i])))
                writer.writerow(row)
        if meta_path is not None:
            with open(meta_path, "w", encoding="utf-8") as fh:
                json.dump(self.meta, fh, indent=2, sort_keys=True, default=float)


# --- single-block updates -------------------------------------------------

def _truncated_normal_draw(
    mean: float, sd: float, lo: float, hi: float, rng: np.random.Generator
) -> float:
    """Inverse-CDF draw from N(mean, sd^2) restricted to [lo, hi]."""
    a = ndtr((lo - mean) / sd)
    b = ndtr((hi - mean) / sd)
    if b - a < 1e-14:
        # Essentially no mass inside: collapse to the nearer endpoint.
        return lo if abs(mean - lo) < abs(mean - hi) else hi
    u = rng.uniform(a, b)
    return mean + sd * float(ndtri(u))


def draw_beta_conditional(
    resp: np.ndarray,
    design: np.ndarray,
    xi: float,
    config: ModelConfig,
    beta_update: str,
    rng: np.random.Generator,
    max_reject: int = 40,
) -> np.ndarray:
    """Exact conjugate Gaussian draw for the linear-coefficient block.

    With a flat prior the conditional is N((S'S)^{-1} S'r, (xi S'S)^{-1}).
    Truncation to the box [-B, B]^d uses rejection while it is cheap and
    falls back to a coordinatewise truncated-normal scan (a Gibbs sweep that
    leaves the exact truncated conditional invariant) once the acceptance
    rate is too low.
    """
    design = np.atleast_2d(design)
    if design.ndim == 1:
        design = design[:, None]
    gram = design.T @ design
    try:
        chol_gram = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise ChainError("singular design in the coefficient block") from exc
    mean = np.linalg.solve(gram, design.T @ resp)
    # Covariance is (xi * gram)^{-1}; draw via a triangular solve.
    z = rng.standard_normal(mean.shape[0])
    raw = mean + np.linalg.solve(chol_gram.T, z) / math.sqrt(xi)
    if beta_update == "conjugate-flat":
        return raw
    b = config.beta_bound
    if np.all(np.abs(raw) <= b):
        return raw
    for _ in range(max_reject - 1):
        z = rng.standard_normal(mean.shape[0])
        cand = mean + np.linalg.solve(chol_gram.T, z) / math.sqrt(xi)
        if np.all(np.abs(cand) <= b):
            return cand
    # Coordinatewise scan on the exact conditional truncated normals.
    prec = xi * gram
    current = np.clip(mean, -b, b)
    for _sweep in range(3):
        for j in range(current.shape[0]):
            others = np.delete(np.arange(current.shape[0]), j)
            cond_prec = prec[j, j]
            cond_mean = mean[j] - (prec[j, others] @ (current[others] - mean[others])) / cond_prec
            current[j] = _truncated_normal_draw(
                float(cond_mean), 1.0 / math.sqrt(cond_prec), -b, b, rng
            )
    return current


def draw_xi_conditional(
    ssr: float, n: int, bounds: tuple[float, float], rng: np.random.Generator
) -> tuple[float, bool]:
    """Metropolis update of the precision with a matched truncated-Gamma proposal.

    The full conditional under a flat prior on the bounds is proportional to
    xi^(n/2) exp(-xi ssr / 2) on [lo, hi]; the proposal equals that law, so
    the acceptance probability is one.  Returns (draw, accepted).
    """
    lo, hi = bounds
    shape = 0.5 * n + 1.0
    rate = 0.5 * ssr
    if rate <= 0:
        return float(rng.uniform(lo, hi)), True
    a = gammainc(shape, rate * lo)
    b = gammainc(shape, rate * hi)
    if b - a < 1e-14:
        # Conditional mass sits (numerically) outside the support; take the
        # endpoint nearest the unconstrained mode.
        mode = (shape - 1.0) / rate
        return (lo if mode < lo else hi), True
    u = rng.uniform(a, b)
    draw = float(gammaincinv(shape, u) / rate)
    return min(max(draw, lo), hi), True


def slice_update_wavelet(
    coeffs: list[np.ndarray],
    level: int,
    shift: int,
    resid_minus: np.ndarray,
    basis_vals: np.ndarray,
    noise_var: float,
    spec: WaveletPriorSpec,
    rng: np.random.Generator,
    max_shrink: int = 100,
) -> float:
    """One slice-sampling step for a single series coefficient.

    ``resid_minus`` holds the regression target minus every other series
    term at the points where this basis function is non-zero, and
    ``basis_vals`` the basis values there.  The conditional is the Gaussian
    pseudo-likelihood restricted to the coefficient's prior support; the
    update leaves it invariant.
    """
    bound = coefficient_bound(spec, level)
    c0 = float(coeffs[level][shift])
    if abs(c0) > bound * (1.0 + 1e-12):
        raise ValueError(f"coefficient ({level},{shift}) outside its prior support")
    a = float(basis_vals @ basis_vals) / noise_var
    b = float(basis_vals @ resid_minus) / noise_var

    def logf(c: float) -> float:
        return b * c - 0.5 * a * c * c

    log_y = logf(c0) - rng.exponential()
    lo, hi = -bound, bound
    for _ in range(max_shrink):
        cand = rng.uniform(lo, hi)
        if logf(cand) >= log_y:
            coeffs[level][shift] = cand
            return cand
        if cand < c0:
            lo = cand
        else:
            hi = cand
    raise SliceShrinkageError(
        f"slice bracket for coefficient ({level},{shift}) shrank {max_shrink} times "
        "without acceptance"
    )


class _SeriesState:
    """Series nuisance component under slice updates.

    Precomputes, per basis function, the indices of the design points inside
    its support and the basis values there, and maintains the current series
    values at all design points.
    """

    def __init__(self, spec: WaveletPriorSpec, w1: np.ndarray, rng: np.random.Generator, init: str):
        self.spec = spec
        self.w1 = w1
        if init == "prior":
            self.coeffs = sample_wavelet_prior(spec, rng)
        else:
            self.coeffs = [np.zeros(2**level) for level in range(spec.L_max + 1)]
        self.support_idx: list[list[np.ndarray]] = []
        self.support_vals: list[list[np.ndarray]] = []
        n = w1.shape[0]
        all_idx = np.arange(n)
        for level in range(spec.L_max + 1):
            idx_level = []
            val_level = []
            if level == 0:
                idx_level.append(all_idx)
                val_level.append(np.ones(n))
            else:
                k = np.clip(np.floor(w1 * 2.0**level).astype(int), 0, 2**level - 1)
                t = w1 * 2.0**level - k
                hat = 2.0 ** (level / 2.0) * np.maximum(1.0 - np.abs(2.0 * t - 1.0), 0.0)
                order = np.argsort(k, kind="stable")
                sorted_k = k[order]
                cuts = np.searchsorted(sorted_k, np.arange(2**level + 1))
                for shift in range(2**level):
                    sel = order[cuts[shift] : cuts[shift + 1]]
                    idx_level.append(sel)
                    val_level.append(hat[sel])
            self.support_idx.append(idx_level)
            self.support_vals.append(val_level)
        self.values = series_eval(self.coeffs, w1)

    def update(self, target: np.ndarray, noise_var: float, rng: np.random.Generator) -> None:
        """Sweep every coefficient once against the regression target."""
        for level in range(self.spec.L_max + 1):
            for shift in range(2**level):
                idx = self.support_idx[level][shift]
                vals = self.support_vals[level][shift]
                c_old = float(self.coeffs[level][shift])
                if idx.shape[0] == 0:
                    # No data in the support: conditional equals the prior.
                    bound = coefficient_bound(self.spec, level)
                    self.coeffs[level][shift] = rng.uniform(-bound, bound)
                    continue
                resid_minus = target[idx] - (self.values[idx] - c_old * vals)
                c_new = slice_update_wavelet(
                    self.coeffs, level, shift, resid_minus, vals, noise_var, self.spec, rng
                )
                self.values[idx] += (c_new - c_old) * vals


class _GpState:
    """Process-prior nuisance component with a precomputed Gram factor."""

    def __init__(self, factor: GramFactor, rng: np.random.Generator, init: str):
        self.factor = factor
        if init == "prior":
            self.values = sample_gp(factor, rng)
        else:
            self.values = np.zeros(factor.n)

    def update(self, target: np.ndarray, noise_var: float, rng: np.random.Generator) -> None:
        self.values = gp_posterior_draw(self.factor, target, noise_var, rng)


def _make_component(prior, data: Dataset, rng: np.random.Generator, init: str):
    if isinstance(prior, MaternSpec):
        return _GpState(gram_and_factor(data.w, prior), rng, init)
    if isinstance(prior, WaveletPriorSpec):
        if data.d_w != 1:
            raise ValueError("series priors support one-dimensional controls only")
        return _SeriesState(prior, data.w[:, 0], rng, init)
    raise TypeError(f"unsupported prior specification {type(prior).__name__}")


def _init_beta(config: ModelConfig, chain: ChainConfig, d_x: int, rng: np.random.Generator):
    if chain.init == "user":
        return np.atleast_1d(np.asarray(chain.init_values.get("beta", np.zeros(d_x)), dtype=float)).copy()
    if chain.init == "zero":
        return np.zeros(d_x)
    if chain.beta_update == "conjugate-truncated":
        return rng.uniform(-config.beta_bound, config.beta_bound, size=d_x)
    return rng.standard_normal(d_x)


def _init_xi(config: ModelConfig, chain: ChainConfig, rng: np.random.Generator) -> float:
    if config.variance_known:
        return config.xi0
    if chain.init == "user" and "xi" in (chain.init_values or {}):
        return float(chain.init_values["xi"])
    if chain.init == "zero":
        return float(np.sqrt(config.xi_bounds[0] * config.xi_bounds[1]))
    return float(rng.uniform(*config.xi_bounds))


def gibbs_beta_m(
    data: Dataset,
    m1_prior,
    m2_prior,
    chain: ChainConfig,
    config: ModelConfig,
) -> PosteriorDraws:
    """Gibbs sampler for the partialled-out parametrization.

    ``m1_prior`` and ``m2_prior`` are :class:`MaternSpec` or
    :class:`WaveletPriorSpec`; the m2 prior is applied independently to every
    X coordinate.  Returns retained draws after burn-in and thinning.
    """
    rng = np.random.default_rng(chain.seed)
    d_x = data.d_x
    m1_state = _make_component(m1_prior, data, rng, chain.init)
    m2_states = [_make_component(m2_prior, data, rng, chain.init) for _ in range(d_x)]
    if chain.init == "user":
        iv = chain.init_values or {}
        if "m1" in iv:
            m1_state.values = np.asarray(iv["m1"], dtype=float).copy()
        if "m2" in iv:
            m2v = np.atleast_2d(np.asarray(iv["m2"], dtype=float))
            for k in range(d_x):
                m2_states[k].values = m2v[:, k].copy()
    beta = _init_beta(config, chain, d_x, rng)
    xi = _init_xi(config, chain, rng)
    s2 = config.sigma02_sq

    kept_beta = np.empty((chain.n_retained, d_x))
    kept_xi = np.empty(chain.n_retained) if not config.variance_known else None
    kept_m1 = np.empty((chain.n_retained, data.n)) if chain.store_m else None
    kept_m2 = np.empty((chain.n_retained, data.n, d_x)) if chain.store_m else None
    xi_accepts = 0
    xi_steps = 0
    kept = 0

    for it in range(chain.n_iter):
        try:
            m2_mat = np.column_stack([st.values for st in m2_states])
            sigma1_sq = 1.0 / xi

            # Block 1: m1 against the beta-adjusted outcome.
            target1 = data.y - (data.x - m2_mat) @ beta
            m1_state.update(target1, sigma1_sq, rng)

            # Block 2: each m2 coordinate against the tilted covariate.
            for k in range(d_x):
                m2_mat = np.column_stack([st.values for st in m2_states])
                r = data.y - m1_state.values - (data.x - m2_mat) @ beta
                r += beta[k] * (data.x[:, k] - m2_mat[:, k])
                denom = sigma1_sq + beta[k] ** 2 * s2
                c_k = beta[k] * s2 / denom
                noise = s2 * sigma1_sq / denom
                target2 = data.x[:, k] - c_k * r
                m2_states[k].update(target2, noise, rng)

            # Block 3: coefficient.
            m2_mat = np.column_stack([st.values for st in m2_states])
            design = data.x - m2_mat
            resp = data.y - m1_state.values
            beta = draw_beta_conditional(resp, design, xi, config, chain.beta_update, rng)

            # Block 4: precision, when it is a parameter.
            if not config.variance_known:
                resid = resp - design @ beta
                ssr = float(resid @ resid)
                xi, accepted = draw_xi_conditional(ssr, data.n, config.xi_bounds, rng)
                xi_steps += 1
                xi_accepts += int(accepted)
        except ChainError as exc:
            raise ChainError(f"iteration {it}: {exc}") from exc
        if not np.all(np.isfinite(beta)):
            raise ChainError(f"iteration {it}: non-finite coefficient draw")

        if it >= chain.burn_in and (it - chain.burn_in) % chain.thin == 0:
            kept_beta[kept] = beta
            if kept_xi is not None:
                kept_xi[kept] = xi
            if chain.store_m:
                kept_m1[kept] = m1_state.values
                kept_m2[kept] = np.column_stack([st.values for st in m2_states])
            kept += 1

    meta = {
        "sampler": "gibbs_beta_m",
        "seed": chain.seed,
        "n_iter": chain.n_iter,
        "burn_in": chain.burn_in,
        "thin": chain.thin,
        "beta_update": chain.beta_update,
        "xi_acceptance": (xi_accepts / xi_steps) if xi_steps else None,
    }
    return PosteriorDraws(kept_beta, kept_xi, kept_m1, kept_m2, meta)


def gibbs_beta_eta(
    data: Dataset,
    eta_prior,
    chain: ChainConfig,
    config: ModelConfig,
) -> PosteriorDraws:
    """Two-block Gibbs sampler for the original (coefficient, eta) model.

    eta given beta is a Gaussian regression of y - x'beta on w; beta given
    eta is the conjugate Gaussian regression of y - eta(w) on x.  Runs in
    known-variance mode only.
    """
    if not config.variance_known:
        raise ValueError("the (beta, eta) sampler supports known variance only")
    rng = np.random.default_rng(chain.seed)
    d_x = data.d_x
    eta_state = _make_component(eta_prior, data, rng, chain.init)
    if chain.init == "user" and "eta" in (chain.init_values or {}):
        eta_state.values = np.asarray(chain.init_values["eta"], dtype=float).copy()
    beta = _init_beta(config, chain, d_x, rng)
    xi = config.xi0
    sigma1_sq = 1.0 / xi

    kept_beta = np.empty((chain.n_retained, d_x))
    kept_eta = np.empty((chain.n_retained, data.n)) if chain.store_m else None
    kept = 0
    for it in range(chain.n_iter):
        try:
            target = data.y - data.x @ beta
            eta_state.update(target, sigma1_sq, rng)
            resp = data.y - eta_state.values
            beta = draw_beta_conditional(resp, data.x, xi, config, chain.beta_update, rng)
        except ChainError as exc:
            raise ChainError(f"iteration {it}: {exc}") from exc
        if it >= chain.burn_in and (it - chain.burn_in) % chain.thin == 0:
            kept_beta[kept] = beta
            if kept_eta is not None:
                kept_eta[kept] = eta_state.values
            kept += 1

    meta = {
        "sampler": "gibbs_beta_eta",
        "seed": chain.seed,
        "n_iter": chain.n_iter,
        "burn_in": chain.burn_in,
        "thin": chain.thin,
        "beta_update": chain.beta_update,
        "xi_acceptance": None,
    }
    return PosteriorDraws(kept_beta, None, kept_eta, None, meta)


def gibbs_beta_m_discrete(
    data: Dataset,
    m1_support: np.ndarray,
    m2_support: np.ndarray,
    chain: ChainConfig,
    config: ModelConfig,
) -> PosteriorDraws:
    """Gibbs sampler with independent discrete uniform priors on the nuisance values.

    Each m1(w_i) and m2(w_i) ranges over the given per-point candidate values
    (n x K arrays); scalar X only.  Exists so the joint chain can be compared
    against an exhaustively enumerated posterior on tiny instances.
    """
    if data.d_x != 1:
        raise ValueError("the discrete sampler handles scalar X only")
    m1_support = np.asarray(m1_support, dtype=float)
    m2_support = np.asarray(m2_support, dtype=float)
    if m1_support.shape[0] != data.n or m2_support.shape[0] != data.n:
        raise ValueError("candidate arrays must have one row per observation")
    rng = np.random.default_rng(chain.seed)
    n, k1 = m1_support.shape
    k2 = m2_support.shape[1]
    idx1 = rng.integers(k1, size=n)
    idx2 = rng.integers(k2, size=n)
    beta = _init_beta(config, chain, 1, rng)
    xi = config.xi0
    s2 = config.sigma02_sq
    x = data.x[:, 0]
    y = data.y

    kept_beta = np.empty((chain.n_retained, 1))
    kept = 0
    for it in range(chain.n_iter):
        m2_vals = m2_support[np.arange(n), idx2]
        # m1 sites: categorical over candidates under the outcome density.
        target = y - beta[0] * (x - m2_vals)
        logp = -0.5 * xi * (target[:, None] - m1_support) ** 2
        idx1 = _categorical_rows(logp, rng)
        m1_vals = m1_support[np.arange(n), idx1]
        # m2 sites: both the outcome and the covariate density involve them.
        logp = -0.5 * xi * (
            (y - m1_vals)[:, None] - beta[0] * (x[:, None] - m2_support)
        ) ** 2 - 0.5 * (x[:, None] - m2_support) ** 2 / s2
        idx2 = _categorical_rows(logp, rng)
        m2_vals = m2_support[np.arange(n), idx2]
        beta = draw_beta_conditional(
            y - m1_vals, (x - m2_vals)[:, None], xi, config, chain.beta_update, rng
        )
        if it >= chain.burn_in and (it - chain.burn_in) % chain.thin == 0:
            kept_beta[kept] = beta
            kept += 1
    meta = {
        "sampler": "gibbs_beta_m_discrete",
        "seed": chain.seed,
        "n_iter": chain.n_iter,
        "burn_in": chain.burn_in,
        "thin": chain.thin,
        "beta_update": chain.beta_update,
    }
    return PosteriorDraws(kept_beta, None, None, None, meta)


def _categorical_rows(logp: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Sample one category per row from unnormalized log-probabilities."""
    logp = logp - logp.max(axis=1, keepdims=True)
    p = np.exp(logp)
    p /= p.sum(axis=1, keepdims=True)
    u = rng.uniform(size=(p.shape[0], 1))
    return (p.cumsum(axis=1) < u).sum(axis=1)


# --- chain-level diagnostics ----------------------------------------------

def split_psrf(draws: np.ndarray) -> float:
    """Potential scale reduction factor from splitting one chain in half."""
    x = np.asarray(draws, dtype=float)
    half = x.shape[0] // 2
    if half < 2:
        return float("nan")
    chains = np.stack([x[:half], x[half : 2 * half]])
    within = chains.var(axis=1, ddof=1).mean()
    means = chains.mean(axis=1)
    between = half * means.var(ddof=1)
    if within <= 0:
        return 1.0
    var_hat = (half - 1) / half * within + between / half
    return float(math.sqrt(var_hat / within))


def effective_sample_size(draws: np.ndarray) -> float:
    """ESS from the initial positive sequence of autocorrelation pair sums."""
    x = np.asarray(draws, dtype=float)
    n = x.shape[0]
    if n < 4:
        return float(n)
    centered = x - x.mean()
    # Autocovariance via FFT.
    size = 1
    while size < 2 * n:
        size *= 2
    f = np.fft.rfft(centered, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n].real / n
    if acov[0] <= 0:
        return float(n)
    rho = acov / acov[0]
    tau = 1.0
    t = 1
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair < 0:
            break
        tau += 2.0 * pair
        t += 2
    return float(min(n, n / tau))


def run_chain(
    sampler: str,
    data: Dataset,
    chain: ChainConfig,
    config: ModelConfig,
    m1_prior=None,
    m2_prior=None,
    eta_prior=None,
) -> PosteriorDraws:
    """Dispatch a named sampler and attach convergence diagnostics to the draws."""
    if sampler == "gibbs_beta_m":
        if m1_prior is None or m2_prior is None:
            raise ValueError("gibbs_beta_m needs m1_prior and m2_prior")
        draws = gibbs_beta_m(data, m1_prior, m2_prior, chain, config)
    elif sampler == "gibbs_beta_eta":
        if eta_prior is None:
            raise ValueError("gibbs_beta_eta needs eta_prior")
        draws = gibbs_beta_eta(data, eta_prior, chain, config)
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    draws.meta["psrf_beta"] = [split_psrf(draws.beta[:, j]) for j in range(draws.d_x)]
    draws.meta["ess_beta"] = [effective_sample_size(draws.beta[:, j]) for j in range(draws.d_x)]
    return draws
