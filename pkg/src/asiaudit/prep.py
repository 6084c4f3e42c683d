"""Analysis-ready observations: scaling, the identity rest, sign dummy, trimming."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError, DomainError, EmptyPanel, TooFewObservations
from .panel import COMPONENTS, FirmYearRecord, Panel, derive_delta_totals, difference_panel

SCALE_BASES = ("lagged_total_assets", "current_total_assets")
MIN_TRIM_OBS = 10


class IdentityViolationWarning(UserWarning):
    pass


class NonpositiveScalingBase(DataError):
    code = "nonpositive_base"


@dataclass(frozen=True)
class PrepConfig:
    scale_base: str = "lagged_total_assets"
    trim_fraction: float = 0.01
    identity_tolerance: float = 1e-6

    def __post_init__(self):
        if self.scale_base not in SCALE_BASES:
            raise ValueError(f"scale_base must be one of {SCALE_BASES}")
        if not (0.0 <= self.trim_fraction < 0.25):
            raise ValueError("trim_fraction must lie in [0, 0.25)")
        if not (self.identity_tolerance > 0):
            raise ValueError("identity_tolerance must be positive")


@dataclass(frozen=True)
class Observation:
    firm_id: str
    year: int
    inv: float
    cf: float
    rest: float
    dummy: int
    ducf: float
    investment: float = math.nan
    cash_flow: float = math.nan
    d_total_assets: float = math.nan
    d_total_funds: float = math.nan


_OBS_FLOATS = ("inv", "cf", "rest", "ducf", "investment", "cash_flow", "d_total_assets", "d_total_funds")


@dataclass(frozen=True, eq=False)
class Observations:
    """Column-wise collection of :class:`Observation` rows."""

    firm_id: np.ndarray
    year: np.ndarray
    inv: np.ndarray
    cf: np.ndarray
    rest: np.ndarray
    dummy: np.ndarray
    ducf: np.ndarray
    investment: np.ndarray
    cash_flow: np.ndarray
    d_total_assets: np.ndarray
    d_total_funds: np.ndarray

    def __len__(self) -> int:
        return len(self.inv)

    def __getitem__(self, i: int) -> Observation:
        return Observation(
            firm_id=str(self.firm_id[i]),
            year=int(self.year[i]),
            dummy=int(self.dummy[i]),
            **{name: float(getattr(self, name)[i]) for name in _OBS_FLOATS},
        )

    def __iter__(self) -> Iterator[Observation]:
        for i in range(len(self)):
            yield self[i]

    def take(self, mask_or_index) -> "Observations":
        return Observations(**{f: getattr(self, f)[mask_or_index] for f in _FIELDS})

    @classmethod
    def from_arrays(cls, inv, cf, firm_id=None, year=None, **extra) -> "Observations":
        """Build observations from scaled ``inv`` and ``cf``; rest and dummy follow."""
        inv = np.asarray(inv, dtype=np.float64)
        cf = np.asarray(cf, dtype=np.float64)
        n = len(inv)
        rest = inv - cf
        dummy = (rest > 0).astype(np.int8)
        nan = np.full(n, np.nan)
        return cls(
            firm_id=np.asarray(firm_id if firm_id is not None else [f"obs{i}" for i in range(n)], dtype=str),
            year=np.asarray(year if year is not None else np.zeros(n), dtype=np.int64),
            inv=inv,
            cf=cf,
            rest=rest,
            dummy=dummy,
            ducf=dummy * cf,
            investment=np.asarray(extra.get("investment", nan), dtype=np.float64),
            cash_flow=np.asarray(extra.get("cash_flow", nan), dtype=np.float64),
            d_total_assets=np.asarray(extra.get("d_total_assets", nan), dtype=np.float64),
            d_total_funds=np.asarray(extra.get("d_total_funds", nan), dtype=np.float64),
        )


_FIELDS = tuple(Observations.__dataclass_fields__)


def as_observations(obj) -> Observations:
    if isinstance(obj, Observations):
        return obj
    rows: Sequence[Observation] = list(obj)
    cols = {f: np.array([getattr(r, f) for r in rows]) for f in _FIELDS}
    cols["firm_id"] = cols["firm_id"].astype(str)
    cols["year"] = cols["year"].astype(np.int64)
    cols["dummy"] = cols["dummy"].astype(np.int8)
    for name in _OBS_FLOATS:
        cols[name] = cols[name].astype(np.float64)
    return Observations(**cols)


@dataclass(frozen=True)
class RemovalEntry:
    reason: str
    firm_id: str
    year: int

    def to_dict(self) -> dict:
        return {"reason": self.reason, "firm_id": self.firm_id, "year": self.year}


# --------------------------------------------------------------------------
# per-record operations
# --------------------------------------------------------------------------


def components_rest(d_ltd, d_capital_stock, depreciation, dividends, d_working_capital, d_ofa):
    """The parenthesised remainder of the full identity (works on arrays)."""
    return d_ltd + d_capital_stock - depreciation - dividends - d_working_capital - d_ofa


def _identity_gap_exceeds(residual, comp, investment, cash_flow, tolerance):
    scale = np.maximum.reduce([np.abs(investment), np.abs(cash_flow), np.abs(comp)])
    return np.abs(comp - residual) > tolerance * scale


def compute_rest(record: FirmYearRecord, tolerance: float = 1e-6) -> float:
    """Return the identity rest of one record.

    With all six components present the component sum is returned, after
    checking it against ``investment - cash_flow``; on disagreement the
    residual wins and an :class:`IdentityViolationWarning` is issued.
    """
    if record.investment is None or record.cash_flow is None:
        raise DomainError("compute_rest needs investment and cash_flow")
    residual = record.investment - record.cash_flow
    if not record.has_components():
        return residual
    comp = components_rest(*(getattr(record, c) for c in COMPONENTS))
    if _identity_gap_exceeds(residual, comp, record.investment, record.cash_flow, tolerance):
        warnings.warn(
            f"identity violation for ({record.firm_id}, {record.year}): "
            f"components give {comp!r}, investment - cash_flow gives {residual!r}",
            IdentityViolationWarning,
            stacklevel=2,
        )
        return residual
    return comp


def sign_dummy(rest: float) -> int:
    if math.isnan(rest):
        raise DomainError("sign of NaN rest is undefined")
    return 1 if rest > 0 else 0


def scale_observation(record: FirmYearRecord, base: float, tolerance: float = 1e-6) -> Observation:
    if not (base > 0) or math.isinf(base):
        raise NonpositiveScalingBase(f"scaling base {base!r} for ({record.firm_id}, {record.year}) is not positive")
    compute_rest(record, tolerance)
    inv = record.investment / base
    cf = record.cash_flow / base
    rest = inv - cf
    dummy = sign_dummy(rest)
    return Observation(
        firm_id=record.firm_id,
        year=record.year,
        inv=inv,
        cf=cf,
        rest=rest,
        dummy=dummy,
        ducf=dummy * cf,
        investment=record.investment,
        cash_flow=record.cash_flow,
        d_total_assets=math.nan if record.d_total_assets is None else record.d_total_assets,
        d_total_funds=math.nan if record.d_total_funds is None else record.d_total_funds,
    )


# --------------------------------------------------------------------------
# panel-level operations
# --------------------------------------------------------------------------


def rest_columns(panel: Panel, tolerance: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`compute_rest`: returns ``(rest, violation_mask)``."""
    inv = panel["investment"]
    cf = panel["cash_flow"]
    residual = inv - cf
    comps = [panel.get(c) for c in COMPONENTS]
    present = np.logical_and.reduce([~np.isnan(c) for c in comps])
    comp = components_rest(*comps)
    with np.errstate(invalid="ignore"):
        violation = present & _identity_gap_exceeds(residual, comp, inv, cf, tolerance)
    rest = np.where(present & ~violation, comp, residual)
    return rest, violation


def trim_panel(
    observations, trim_fraction: float = 0.01
) -> tuple[Observations, list[RemovalEntry]]:
    """Drop observations whose ``inv`` or ``cf`` falls outside the pooled
    ``[trim_fraction, 1 - trim_fraction]`` percentile band (linear
    interpolation, Hyndman-Fan type 7). Bands are computed once, before any
    removal."""
    obs = as_observations(observations)
    if len(obs) < MIN_TRIM_OBS:
        raise TooFewObservations(f"trimming needs at least {MIN_TRIM_OBS} observations (got {len(obs)})")
    if not (0.0 <= trim_fraction < 0.25):
        raise ValueError("trim_fraction must lie in [0, 0.25)")
    if trim_fraction == 0:
        return obs, []
    q = [trim_fraction, 1.0 - trim_fraction]
    inv_lo, inv_hi = np.quantile(obs.inv, q, method="linear")
    cf_lo, cf_hi = np.quantile(obs.cf, q, method="linear")
    out_inv = (obs.inv < inv_lo) | (obs.inv > inv_hi)
    out_cf = (obs.cf < cf_lo) | (obs.cf > cf_hi)
    report = [
        RemovalEntry("trimmed_inv" if out_inv[i] else "trimmed_cf", str(obs.firm_id[i]), int(obs.year[i]))
        for i in np.flatnonzero(out_inv | out_cf)
    ]
    return obs.take(~(out_inv | out_cf)), report


@dataclass(frozen=True, eq=False)
class Prepared:
    observations: Observations
    report: tuple[RemovalEntry, ...] = field(default=())
    n_input: int = 0


def build_observations(panel: Panel, config: PrepConfig = PrepConfig()) -> Prepared:
    """Scale a panel into observations without trimming."""
    if len(panel) == 0:
        raise EmptyPanel()
    if panel.schema_mode == "level":
        panel = difference_panel(panel)
    panel = derive_delta_totals(panel, config.identity_tolerance)

    fid, yr = panel.firm_id, panel.year
    ta = panel["total_assets"]
    dta = panel["d_total_assets"]
    missing_prior = panel["missing_prior_year"].astype(bool)
    if config.scale_base == "lagged_total_assets":
        base = ta - dta
    else:
        base = ta.copy()

    report: list[RemovalEntry] = []
    no_base = np.isnan(base)
    with np.errstate(invalid="ignore"):
        nonpos = ~no_base & ~(base > 0)
    for i in np.flatnonzero(no_base):
        report.append(RemovalEntry("missing_prior_year", str(fid[i]), int(yr[i])))
    for i in np.flatnonzero(nonpos):
        report.append(RemovalEntry("nonpositive_base", str(fid[i]), int(yr[i])))

    _, violation = rest_columns(panel, config.identity_tolerance)
    for i in np.flatnonzero(violation):
        report.append(RemovalEntry("identity_violation", str(fid[i]), int(yr[i])))

    keep = ~(no_base | nonpos)
    b = base[keep]
    investment = panel["investment"][keep]
    cash_flow = panel["cash_flow"][keep]
    shares_ok = ~missing_prior[keep]
    obs = Observations.from_arrays(
        investment / b,
        cash_flow / b,
        firm_id=fid[keep],
        year=yr[keep],
        investment=investment,
        cash_flow=cash_flow,
        d_total_assets=np.where(shares_ok, dta[keep], np.nan),
        d_total_funds=np.where(shares_ok, panel["d_total_funds"][keep], np.nan),
    )
    if len(obs) == 0:
        raise EmptyPanel("no observation has a usable scaling base")
    return Prepared(obs, tuple(report), len(panel))


def prepare(panel: Panel, config: PrepConfig = PrepConfig()) -> Prepared:
    """Full preprocessing: differencing if needed, scaling, rest, trimming."""
    built = build_observations(panel, config)
    obs = built.observations
    report = list(built.report)
    if config.trim_fraction > 0:
        obs, removed = trim_panel(obs, config.trim_fraction)
        report.extend(removed)
    return Prepared(obs, tuple(report), built.n_input)
