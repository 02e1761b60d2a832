"""Experiment configuration: file parsing, canonical hashing, seed streams.

Configs are TOML or JSON files.  Hashing serializes the parsed mapping
canonically (sorted keys, compact separators, shortest-round-trip floats)
before digesting, so the 64-bit hash is stable across platforms.  Every
derived random stream comes from ``spawn_seed(master, index, tag)``; no two
(index, tag) pairs share a stream.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass

import numpy as np

from .dgp import (
    ConstantFunction,
    DgpSpec,
    SeriesFunction,
    SineFunction,
    TrueFunctions,
    make_holder_function,
)
from .model import ModelConfig
from .priors import MaternSpec, WaveletPriorSpec, default_level_cap
from .samplers import ChainConfig

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised only on 3.10
    import tomli as tomllib

__all__ = [
    "ExperimentConfig",
    "apply_overrides",
    "canonical_hash",
    "hash64",
    "load_config",
    "spawn_seed",
]


def hash64(*parts) -> int:
    """Stable 64-bit hash of a tuple of primitives (platform-independent)."""
    payload = json.dumps([str(p) for p in parts], separators=(",", ":")).encode()
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "big")


def spawn_seed(master_seed: int, index: int, tag: str = "") -> int:
    """Derive the seed of stream ``index`` (with a purpose tag) from the master seed."""
    return hash64(master_seed, index, tag)


def canonical_hash(obj) -> str:
    """Canonical 64-bit hex digest of a JSON-serializable mapping."""
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.blake2b(payload.encode(), digest_size=8).hexdigest()


def load_config(path) -> dict:
    """Parse a TOML or JSON config file with filename-carrying errors."""
    text_path = str(path)
    try:
        if text_path.endswith(".json"):
            with open(path, "r", encoding="utf-8") as fh:
                return json.load(fh)
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{text_path}: malformed config ({exc})") from None


def _parse_literal(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, overrides) -> dict:
    """Apply ``section.key=value`` overrides; values parse as JSON literals."""
    out = json.loads(json.dumps(cfg))  # deep copy of plain data
    for item in overrides or ():
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        keys = dotted.strip().split(".")
        node = out
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ValueError(f"override {dotted!r} descends through a non-table entry")
        node[keys[-1]] = _parse_literal(raw.strip())
    return out


def _build_truth_fn(entry: dict, default_n: int):
    kind = entry.get("kind", "series")
    if kind == "series":
        level_cap = entry.get("level_cap")
        if level_cap is None:
            level_cap = default_level_cap(default_n)
        return make_holder_function(
            alpha0=float(entry["alpha0"]),
            M=float(entry.get("M", 1.0)),
            level_cap=int(level_cap),
            seed=int(entry.get("seed", 0)),
        )
    if kind == "sine":
        return SineFunction(
            amplitude=float(entry.get("amplitude", 1.0)),
            frequency=float(entry.get("frequency", 1.0)),
            phase=float(entry.get("phase", 0.0)),
        )
    if kind == "constant":
        return ConstantFunction(float(entry.get("value", 0.0)))
    if kind == "zero":
        return ConstantFunction(0.0)
    raise ValueError(f"unknown truth kind {kind!r}")


def _build_prior(entry: dict, n: int):
    kind = entry.get("kind", "matern")
    if kind == "matern":
        return MaternSpec(
            alpha=float(entry["alpha"]),
            lengthscale=float(entry.get("lengthscale", 1.0)),
            amplitude=float(entry.get("amplitude", 1.0)),
            jitter=float(entry.get("jitter", 1e-8)),
        )
    if kind == "wavelet":
        l_max = entry.get("L_max")
        if l_max is None:
            l_max = default_level_cap(n)
        return WaveletPriorSpec(
            alpha0=float(entry["alpha0"]),
            M=float(entry.get("M", 1.0)),
            L_max=int(l_max),
        )
    raise ValueError(f"unknown prior kind {kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Typed view over a parsed config mapping.

    The raw mapping is kept for hashing; builder methods construct the
    component objects on demand.
    """

    raw: dict

    @property
    def hash(self) -> str:
        return canonical_hash(self.raw)

    @property
    def master_seed(self) -> int:
        return int(self._section("experiment").get("master_seed", 0))

    @property
    def sampler(self) -> str:
        return str(self._section("experiment").get("sampler", "gibbs_beta_m"))

    @property
    def name(self) -> str:
        return str(self._section("experiment").get("name", "experiment"))

    @property
    def output_dir(self) -> str:
        return str(self._section("experiment").get("output_dir", "."))

    def _section(self, key: str) -> dict:
        value = self.raw.get(key, {})
        if not isinstance(value, dict):
            raise ValueError(f"config section {key!r} must be a table")
        return value

    def diagnostics_option(self, key: str, default):
        return self._section("diagnostics").get(key, default)

    def build_model_config(self) -> ModelConfig:
        sec = self._section("model")
        return ModelConfig(
            sigma01_sq=float(sec.get("sigma01_sq", 1.0)),
            sigma02_sq=float(sec.get("sigma02_sq", 1.0)),
            variance_known=bool(sec.get("variance_known", True)),
            xi_bounds=tuple(sec.get("xi_bounds", (0.04, 25.0))),
            beta_bound=float(sec.get("beta_bound", 10.0)),
        )

    def build_dgp_spec(self, seed: int | None = None) -> DgpSpec:
        sec = self._section("dgp")
        return DgpSpec(
            n=int(sec["n"]),
            d_x=int(sec.get("d_x", 1)),
            d_w=int(sec.get("d_w", 1)),
            error_family=str(sec.get("error_family", "gaussian")),
            w_law=str(sec.get("w_law", "uniform")),
            x_noise_sd=float(sec.get("x_noise_sd", 1.0)),
            seed=self.master_seed if seed is None else int(seed),
        )

    def build_truth(self) -> TrueFunctions:
        sec = self._section("truth")
        n = int(self._section("dgp")["n"])
        beta0 = np.atleast_1d(np.asarray(sec.get("beta0", [1.0]), dtype=float))
        sigma01_sq = float(sec.get("sigma01_sq", self._section("model").get("sigma01_sq", 1.0)))
        m02_entries = sec.get("m02")
        if isinstance(m02_entries, dict):
            m02_entries = [m02_entries]
        if m02_entries is None or len(m02_entries) != beta0.shape[0]:
            raise ValueError("truth.m02 must list one function per beta0 coordinate")
        m02 = tuple(_build_truth_fn(e, n) for e in m02_entries)
        if "eta0" in sec:
            eta0 = _build_truth_fn(sec["eta0"], n)
            return TrueFunctions.from_eta(beta0, eta0, m02, sigma01_sq)
        m01 = _build_truth_fn(sec["m01"], n)
        return TrueFunctions(beta0, m01, m02, sigma01_sq)

    def build_priors(self) -> dict:
        sec = self._section("priors")
        n = int(self._section("dgp")["n"])
        out = {}
        for key in ("m1", "m2", "eta"):
            if key in sec:
                out[key] = _build_prior(sec[key], n)
        return out

    def build_chain_config(self, seed: int | None = None) -> ChainConfig:
        sec = self._section("chain")
        return ChainConfig(
            n_iter=int(sec.get("n_iter", 3000)),
            burn_in=int(sec.get("burn_in", 1000)),
            thin=int(sec.get("thin", 1)),
            seed=self.master_seed if seed is None else int(seed),
            init=str(sec.get("init", "prior")),
            beta_update=str(sec.get("beta_update", "conjugate-truncated")),
            store_m=bool(sec.get("store_m", False)),
        )
