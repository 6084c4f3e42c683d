"""Seeded synthetic firm-year panels that satisfy the full identity exactly.

Generation scheme, per firm ``f`` (``f = 0 .. n_firms-1``):

* Random stream: ``numpy.random.Generator(PCG64(s_f))`` where ``s_f`` is the
  ``f``-th child of ``SeedSequence(seed).spawn(n_firms)``.
* From that stream, in this order: one standard normal for the opening size,
  then a ``(4, n_years)`` standard-normal block and a ``(2, n_years)``
  uniform block. Rows of the normal block drive cash flow, rest magnitude,
  other asset growth and a spare; rows of the uniform block drive the mixed
  sign draw and the small-negative fraction.
* ``TA_start = base_assets_location * exp(0.3 z)``. Year ``t`` uses the
  previous year's total assets ``L`` (``TA_start`` for the first year).
* Scaled cash flow ``c = cf_location * exp(cf_spread * z)`` (log-normal,
  median ``cf_location``); ``cash_flow = c L``.
* Scaled rest ``r`` by mode, with ``E = exp(0.5 z)``:
  ``zero`` 0; ``all_positive`` ``rest_scale c E``; ``all_negative_small``
  ``-c u`` with ``u`` uniform in ``[0, 1)``; ``all_negative_large``
  ``-c (1 + rest_scale E)``; ``mixed`` ``+rest_scale c E`` with probability
  ``mix_fraction``, else ``-rest_scale c E``.
* The rest ``R = r L`` is split into identity components with fixed weights:
  ``d_ltd 0.40 R``, ``d_capital_stock 0.20 R``, ``depreciation -0.15 R``,
  ``dividends -0.05 R``, ``d_working_capital -0.15 R``, ``d_ofa -0.05 R``.
  ``investment = cash_flow + R``.
* ``dTA = investment + L * (0.02 + 0.05 z)`` (other asset growth), floored so
  total assets never fall below 5% of the previous year; ``dTF = dTA``.
* The first year carries no ``d_total_assets`` so the usable sample has
  ``n_firms * (n_years - 1)`` observations under lagged scaling.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, ZeroDenominator
from .panel import Panel, build_panel
from .prep import Observations, as_observations, rest_columns

REST_MODES = ("zero", "all_positive", "all_negative_small", "all_negative_large", "mixed")
SPLIT_WEIGHTS = {
    "d_ltd": 0.40,
    "d_capital_stock": 0.20,
    "depreciation": -0.15,
    "dividends": -0.05,
    "d_working_capital": -0.15,
    "d_ofa": -0.05,
}
REST_SPREAD = 0.5
SIZE_SPREAD = 0.3
OTHER_GROWTH = (0.02, 0.05)
MIN_ASSET_RATIO = 0.05


@dataclass(frozen=True)
class SimulationConfig:
    n_firms: int = 200
    n_years: int = 6
    seed: int = 42
    cf_location: float = 0.08
    cf_spread: float = 0.5
    rest_mode: str = "mixed"
    rest_scale: float = 0.5
    mix_fraction: float = 0.5
    base_assets_location: float = 1000.0
    start_year: int = 2000
    label: str = "synthetic"

    def validate(self) -> None:
        if self.n_firms < 1 or self.n_years < 2:
            raise ConfigError("need n_firms >= 1 and n_years >= 2")
        if self.n_usable < 10:
            raise ConfigError(f"panel would have {self.n_usable} usable observations, need at least 10")
        if self.rest_mode not in REST_MODES:
            raise ConfigError(f"rest_mode must be one of {REST_MODES}")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not (self.cf_location > 0 and self.cf_spread >= 0):
            raise ConfigError("cf_location must be positive and cf_spread nonnegative")
        if not (self.rest_scale >= 0) or math.isinf(self.rest_scale):
            raise ConfigError("rest_scale must be finite and nonnegative")
        if self.rest_mode in ("all_positive", "all_negative_large", "mixed") and self.rest_scale == 0:
            raise ConfigError(f"rest_mode {self.rest_mode!r} needs rest_scale > 0")
        if self.rest_mode == "mixed" and not (0 < self.mix_fraction < 1):
            raise ConfigError("mix_fraction must lie in (0, 1) for mixed mode")
        if not self.base_assets_location > 0:
            raise ConfigError("base_assets_location must be positive")

    @property
    def n_usable(self) -> int:
        return self.n_firms * (self.n_years - 1)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "SimulationConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _draws(config: SimulationConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-firm substream draws stacked as (firm, ...) arrays."""
    T = config.n_years
    size = np.empty(config.n_firms)
    normals = np.empty((config.n_firms, 4, T))
    uniforms = np.empty((config.n_firms, 2, T))
    children = np.random.SeedSequence(config.seed).spawn(config.n_firms)
    for f, child in enumerate(children):
        g = np.random.Generator(np.random.PCG64(child))
        size[f] = g.standard_normal()
        normals[f] = g.standard_normal((4, T))
        uniforms[f] = g.random((2, T))
    return size, normals, uniforms


def _scaled_rest(config: SimulationConfig, c: np.ndarray, z: np.ndarray, u_sign, u_frac) -> np.ndarray:
    mode = config.rest_mode
    E = np.exp(REST_SPREAD * z)
    if mode == "zero":
        return np.zeros_like(c)
    if mode == "all_positive":
        return config.rest_scale * c * E
    if mode == "all_negative_small":
        # u in [0, 1) keeps rest in (-cf, 0]
        return -c * u_frac
    if mode == "all_negative_large":
        return -c * (1.0 + config.rest_scale * E)
    sign = np.where(u_sign < config.mix_fraction, 1.0, -1.0)
    return sign * config.rest_scale * c * E


def simulate_panel(config: SimulationConfig) -> Panel:
    """Generate a flow-mode panel; bit-identical for a given config."""
    config.validate()
    F, T = config.n_firms, config.n_years
    size, normals, uniforms = _draws(config)

    c = config.cf_location * np.exp(config.cf_spread * normals[:, 0, :])
    r = _scaled_rest(config, c, normals[:, 1, :], uniforms[:, 0, :], uniforms[:, 1, :])
    growth = OTHER_GROWTH[0] + OTHER_GROWTH[1] * normals[:, 2, :]

    lagged = np.empty((F, T))
    total = np.empty((F, T))
    prev = config.base_assets_location * np.exp(SIZE_SPREAD * size)
    cash_flow = np.empty((F, T))
    rest = np.empty((F, T))
    for t in range(T):
        lagged[:, t] = prev
        cash_flow[:, t] = c[:, t] * prev
        rest[:, t] = r[:, t] * prev
        d_ta = cash_flow[:, t] + rest[:, t] + growth[:, t] * prev
        d_ta = np.maximum(d_ta, (MIN_ASSET_RATIO - 1.0) * prev)
        total[:, t] = prev + d_ta
        prev = total[:, t]

    comps = {name: w * rest for name, w in SPLIT_WEIGHTS.items()}
    investment = cash_flow + rest
    d_ta = total - lagged
    d_ta[:, 0] = np.nan

    firm_ids = np.array([f"F{f:06d}" for f in range(F)])
    cols = {
        "firm_id": np.repeat(firm_ids, T),
        "year": np.tile(np.arange(config.start_year, config.start_year + T, dtype=np.int64), F),
        "total_assets": total.ravel(),
        "investment": investment.ravel(),
        "cash_flow": cash_flow.ravel(),
        **{name: v.ravel() for name, v in comps.items()},
        "d_total_assets": d_ta.ravel(),
        "d_total_funds": d_ta.ravel().copy(),
    }
    return build_panel(cols, provenance=config.label, schema_mode="flow")


def expected_origin_slope(data) -> float:
    """Closed-form through-origin slope ``1 + sum(cf * rest) / sum(cf^2)``.

    Accepts a :class:`Panel` (unscaled money values) or prepared
    :class:`Observations` / sequences of observations (scaled values).
    """
    if isinstance(data, Panel):
        cf = data["cash_flow"]
        rest, _ = rest_columns(data)
    else:
        obs = data if isinstance(data, Observations) else as_observations(data)
        cf, rest = obs.cf, obs.rest
    denom = kernels.compensated_dot(cf, cf)
    if denom == 0:
        raise ZeroDenominator("sum of squared cash flows is zero")
    return 1.0 + kernels.compensated_dot(cf, rest) / denom


def metadata(config: SimulationConfig, created: str | None = None) -> dict:
    return {
        "generator": "asiaudit.synth",
        "rng": "numpy PCG64, per-firm SeedSequence.spawn substreams",
        "numpy_version": np.__version__,
        "config": config.to_dict(),
        "created": created,
    }
