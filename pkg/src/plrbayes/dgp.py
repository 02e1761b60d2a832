"""Synthetic data generation and distributional-assumption checks.

Truth functions are either series functions from the same hierarchical basis
as the series prior (so their Hoelder-type regularity is controlled by the
coefficient decay exponent) or simple closed forms for sanity runs.  Error
families beyond the Gaussian stay mean-zero with the configured variance and
bounded or truncated support, hence subgaussian.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .model import Dataset, NuisanceValues
from .priors import WaveletPriorSpec, sample_wavelet_prior, series_design_matrix, series_eval

__all__ = [
    "AssumptionReport",
    "ConstantFunction",
    "DgpSpec",
    "SeriesFunction",
    "SineFunction",
    "TrueFunctions",
    "affine_rescale_w",
    "make_holder_function",
    "read_csv",
    "simulate",
    "validate_assumptions",
    "write_csv",
]

ERROR_FAMILIES = ("gaussian", "scaled-uniform", "scaled-laplace-truncated")
W_LAWS = ("uniform", "tilted")

_LAPLACE_CUT = 4.0
# Variance of a standard Laplace truncated to [-4, 4].
_LAPLACE_TRUNC_VAR = (2.0 - 26.0 * math.exp(-4.0)) / (1.0 - math.exp(-4.0))


def _first_coordinate(w) -> np.ndarray:
    arr = np.asarray(w, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, 0]
    return np.atleast_1d(arr)


@dataclass(frozen=True)
class SeriesFunction:
    """Function built from the hierarchical hat basis.

    Depends on the first control coordinate only (a valid smooth-in-the-cube
    function for any d_w).
    """

    coeffs: tuple
    alpha0: float
    M: float

    def __call__(self, w) -> np.ndarray:
        return series_eval(list(self.coeffs), _first_coordinate(w))

    @property
    def level_cap(self) -> int:
        return len(self.coeffs) - 1


@dataclass(frozen=True)
class SineFunction:
    """amplitude * sin(2 pi frequency w1 + phase); an infinitely smooth truth."""

    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0

    def __call__(self, w) -> np.ndarray:
        w1 = _first_coordinate(w)
        return self.amplitude * np.sin(2.0 * math.pi * self.frequency * w1 + self.phase)


@dataclass(frozen=True)
class ConstantFunction:
    value: float = 0.0

    def __call__(self, w) -> np.ndarray:
        return np.full(_first_coordinate(w).shape[0], self.value)


def make_holder_function(
    alpha0: float, M: float, level_cap: int, seed: int
) -> SeriesFunction:
    """Random series function with coefficient envelope M 2^(-l(alpha0+1/2)).

    Deterministic in the seed; coefficients are uniform within the envelope.
    """
    rng = np.random.default_rng(seed)
    import warnings as _warnings

    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore", RuntimeWarning)
        spec = WaveletPriorSpec(alpha0=alpha0, M=M, L_max=level_cap)
    coeffs = sample_wavelet_prior(spec, rng)
    return SeriesFunction(tuple(coeffs), alpha0, M)


@dataclass(frozen=True)
class _ComposedM01:
    """m01 derived from (eta0, beta0, m02) via m01 = eta0 + m02'beta0."""

    eta0: object
    m02: tuple
    beta0: tuple

    def __call__(self, w) -> np.ndarray:
        out = np.asarray(self.eta0(w), dtype=float).copy()
        for fn, b in zip(self.m02, self.beta0):
            out += b * np.asarray(fn(w), dtype=float)
        return out


@dataclass(frozen=True)
class TrueFunctions:
    """True regression objects: coefficient, partialled-out nuisances, noise level."""

    beta0: np.ndarray
    m01: object
    m02: tuple
    sigma01_sq: float = 1.0

    def __post_init__(self) -> None:
        beta0 = np.atleast_1d(np.asarray(self.beta0, dtype=float))
        m02 = tuple(self.m02) if isinstance(self.m02, (tuple, list)) else (self.m02,)
        if beta0.shape[0] != len(m02):
            raise ValueError(
                f"beta0 has {beta0.shape[0]} coordinates but m02 has {len(m02)} components"
            )
        if not (self.sigma01_sq > 0):
            raise ValueError("sigma01_sq must be positive")
        object.__setattr__(self, "beta0", beta0)
        object.__setattr__(self, "m02", m02)

    @classmethod
    def from_eta(cls, beta0, eta0, m02, sigma01_sq: float = 1.0) -> "TrueFunctions":
        """Build the truth from the original parametrization (beta0, eta0, m02)."""
        beta0 = np.atleast_1d(np.asarray(beta0, dtype=float))
        m02 = tuple(m02) if isinstance(m02, (tuple, list)) else (m02,)
        m01 = _ComposedM01(eta0, m02, tuple(float(b) for b in beta0))
        return cls(beta0, m01, m02, sigma01_sq)

    @property
    def d_x(self) -> int:
        return self.beta0.shape[0]

    def m01_values(self, w) -> np.ndarray:
        return np.asarray(self.m01(w), dtype=float)

    def m02_values(self, w) -> np.ndarray:
        return np.column_stack([np.asarray(fn(w), dtype=float) for fn in self.m02])

    def eta0_values(self, w) -> np.ndarray:
        return self.m01_values(w) - self.m02_values(w) @ self.beta0

    def nuisance_at(self, w) -> NuisanceValues:
        return NuisanceValues(self.m01_values(w), self.m02_values(w))


@dataclass(frozen=True)
class DgpSpec:
    """Sampling design: size, dimensions, error family, control law, seed."""

    n: int
    d_x: int = 1
    d_w: int = 1
    error_family: str = "gaussian"
    w_law: str = "uniform"
    x_noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.d_x < 1 or self.d_w < 1:
            raise ValueError("d_x and d_w must be at least 1")
        if self.error_family not in ERROR_FAMILIES:
            raise ValueError(
                f"unknown error_family {self.error_family!r}; choose from {ERROR_FAMILIES}"
            )
        if self.w_law not in W_LAWS:
            raise ValueError(f"unknown w_law {self.w_law!r}; choose from {W_LAWS}")
        if not (self.x_noise_sd > 0):
            raise ValueError("x_noise_sd must be positive")


def _draw_w(rng: np.random.Generator, n: int, d_w: int, law: str) -> np.ndarray:
    u = rng.uniform(size=(n, d_w))
    if law == "uniform":
        return u
    # Density (1 + w/2) / 1.25 on [0, 1]: bounded in [0.8, 1.2].
    return 2.0 * (np.sqrt(1.0 + 1.25 * u) - 1.0)


def _draw_errors(
    rng: np.random.Generator, size, family: str, sd: float
) -> np.ndarray:
    if family == "gaussian":
        return rng.normal(0.0, sd, size=size)
    if family == "scaled-uniform":
        half = math.sqrt(3.0) * sd
        return rng.uniform(-half, half, size=size)
    # Truncated Laplace: redraw outside the cut, then scale to the target sd.
    z = rng.laplace(0.0, 1.0, size=size)
    bad = np.abs(z) > _LAPLACE_CUT
    while np.any(bad):
        z[bad] = rng.laplace(0.0, 1.0, size=int(bad.sum()))
        bad = np.abs(z) > _LAPLACE_CUT
    return sd / math.sqrt(_LAPLACE_TRUNC_VAR) * z


def simulate(spec: DgpSpec, truth: TrueFunctions) -> Dataset:
    """Generate a dataset with X centered at m02(W) and Y at the partialled-out mean."""
    if truth.d_x != spec.d_x:
        raise ValueError(f"truth has d_x={truth.d_x} but spec requests d_x={spec.d_x}")
    rng = np.random.default_rng(spec.seed)
    w = _draw_w(rng, spec.n, spec.d_w, spec.w_law)
    m01 = truth.m01_values(w)
    m02 = truth.m02_values(w)
    eps2 = _draw_errors(rng, (spec.n, spec.d_x), spec.error_family, spec.x_noise_sd)
    x = m02 + eps2
    u = _draw_errors(rng, spec.n, spec.error_family, math.sqrt(truth.sigma01_sq))
    y = m01 + eps2 @ truth.beta0 + u
    return Dataset(y, x, w)


def affine_rescale_w(w) -> np.ndarray:
    """Affinely map each control column onto [0, 1] (constant columns map to 0.5)."""
    arr = np.asarray(w, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    lo = arr.min(axis=0)
    hi = arr.max(axis=0)
    span = hi - lo
    out = np.empty_like(arr)
    for j in range(arr.shape[1]):
        if span[j] <= 0:
            out[:, j] = 0.5
        else:
            out[:, j] = (arr[:, j] - lo[j]) / span[j]
    return out


@dataclass(frozen=True)
class AssumptionReport:
    """Checkable parts of the sampling assumptions plus degenerate-design flag.

    The regularity of the conditional density of (Y, X) given W cannot be
    checked from a finite sample; that condition is recorded as untestable.
    """

    eig_min: float
    eig_max: float
    fourth_moment_y: float
    fourth_moment_x: float
    degenerate_design: bool
    m2_source: str
    n: int
    untestable: tuple = (
        "existence and log-moment of the conditional density of (Y, X) given W",
    )

    def to_dict(self) -> dict:
        return {
            "eig_min": self.eig_min,
            "eig_max": self.eig_max,
            "fourth_moment_y": self.fourth_moment_y,
            "fourth_moment_x": self.fourth_moment_x,
            "degenerate_design": self.degenerate_design,
            "m2_source": self.m2_source,
            "n": self.n,
            "untestable": list(self.untestable),
        }


def _series_projection(data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Crude series estimates of E[Y|W] and E[X|W] (first control coordinate)."""
    level = max(1, int(math.ceil(math.log2(data.n) / 3.0)))
    design = series_design_matrix(data.w[:, 0], level)
    coef_y, *_ = np.linalg.lstsq(design, data.y, rcond=None)
    coef_x, *_ = np.linalg.lstsq(design, data.x, rcond=None)
    return design @ coef_y, design @ coef_x


def validate_assumptions(
    data: Dataset, truth: TrueFunctions | None = None
) -> AssumptionReport:
    """Report design eigenvalues, projection-error moments, and degeneracy.

    With a known truth the projections use it; otherwise a series smoother
    stands in.  Failures are flags in the report, never exceptions.
    """
    if truth is not None:
        m1_hat = truth.m01_values(data.w)
        m2_hat = truth.m02_values(data.w)
        source = "truth"
    else:
        m1_hat, m2_hat = _series_projection(data)
        source = "series-estimate"
    resid_x = data.x - m2_hat
    resid_y = data.y - m1_hat
    gram = resid_x.T @ resid_x / data.n
    eigvals = np.linalg.eigvalsh(gram)
    eig_min = float(eigvals.min())
    eig_max = float(eigvals.max())
    degenerate = eig_min < 1e-8 * max(1.0, eig_max)
    return AssumptionReport(
        eig_min=eig_min,
        eig_max=eig_max,
        fourth_moment_y=float(np.mean(resid_y**4)),
        fourth_moment_x=float(np.mean(np.sum(resid_x**2, axis=1) ** 2)),
        degenerate_design=degenerate,
        m2_source=source,
        n=data.n,
    )


def write_csv(data: Dataset, path) -> None:
    """Write the dataset as CSV with header y, x1.., w1.. and '.' decimals."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = (
            ["y"]
            + [f"x{j + 1}" for j in range(data.d_x)]
            + [f"w{j + 1}" for j in range(data.d_w)]
        )
        writer.writerow(header)
        for i in range(data.n):
            writer.writerow(
                [repr(float(v)) for v in (data.y[i], *data.x[i], *data.w[i])]
            )


def read_csv(path) -> Dataset:
    """Read a dataset CSV, rejecting schema problems and non-finite values precisely."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "y":
            raise ValueError(f"{path}: first column must be 'y', got {header[:1]}")
        d_x = sum(1 for h in header if h.startswith("x"))
        d_w = sum(1 for h in header if h.startswith("w"))
        expected = ["y"] + [f"x{j + 1}" for j in range(d_x)] + [f"w{j + 1}" for j in range(d_w)]
        if header != expected or d_x < 1 or d_w < 1:
            raise ValueError(
                f"{path}: header must be y, x1..x{{d_x}}, w1..w{{d_w}}; got {header}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric field ({exc})") from None
            for col, v in zip(header, vals):
                if not np.isfinite(v):
                    raise ValueError(
                        f"{path}:{lineno}: non-finite value {v!r} in column {col}"
                    )
            rows.append(vals)
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 data rows, got {len(rows)}")
    arr = np.asarray(rows, dtype=float)
    return Dataset(arr[:, 0], arr[:, 1 : 1 + d_x], arr[:, 1 + d_x :])
