"""Restricted vs. unrestricted FHP comparison and the incremental-fit statistics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import (
    AsiAuditError,
    DegenerateDummy,
    DomainError,
    EmptyPanel,
    InvalidNesting,
    StageError,
    ZeroDenominator,
)
from .linmodel import RESTRICTED, UNRESTRICTED, RegressionResult, f_sf, ols_fit
from .panel import Panel
from .prep import Observations, PrepConfig, RemovalEntry, as_observations, prepare

CONVENTIONAL_LEVELS = (0.01, 0.05, 0.10)
# relative slack for rounding when the added regressor explains nothing
NESTING_SLACK = 1e-12


@dataclass(frozen=True)
class AsiDiagnostic:
    label: str
    restricted: RegressionResult
    unrestricted: RegressionResult | None
    m: int
    f_if: float | None
    f_if_pvalue: float | None
    delta_power: float | None
    share_inv_dta: float | None
    share_cf_dtf: float | None
    h1_rejected_at: float | None
    degenerate: str | None = None
    n_input: int = 0
    n_removed: int = 0
    removal_counts: dict = field(default_factory=dict)

    @property
    def is_degenerate(self) -> bool:
        return self.degenerate is not None


def run_restricted(observations) -> RegressionResult:
    return ols_fit(observations, RESTRICTED)


def run_unrestricted(observations) -> RegressionResult:
    return ols_fit(observations, UNRESTRICTED)


def incremental_f(rss_r: float, rss_u: float, m: int = 1, n: int = 0, k: int = 3) -> float:
    """``((RSS_R - RSS_U) / m) / (RSS_U / (n - k))``."""
    if m < 1:
        raise DomainError("m must be at least 1")
    if n <= k:
        raise DomainError(f"need n > k (n={n}, k={k})")
    if not rss_u > 0:
        raise DomainError("RSS of the unrestricted model must be positive")
    gain = rss_r - rss_u
    if gain < 0:
        if -gain > NESTING_SLACK * rss_u:
            raise InvalidNesting(f"restricted RSS {rss_r!r} is below unrestricted RSS {rss_u!r}")
        gain = 0.0
    return (gain / m) / (rss_u / (n - k))


def delta_explanatory_power(r2_r: float, r2_u: float) -> float:
    """Share of the unrestricted R^2 not explained by the restricted model."""
    if not (0 < r2_u <= 1):
        raise DomainError(f"unrestricted R^2 must lie in (0, 1] (got {r2_u})")
    if not (0 <= r2_r <= r2_u):
        raise DomainError(f"need 0 <= R^2_R <= R^2_U (got {r2_r}, {r2_u})")
    return (r2_u - r2_r) / r2_u


def decomposition_shares(observations) -> tuple[float, float]:
    """Aggregate ``(sum investment / sum dTA, sum cash_flow / sum dTF)``.

    Only records with the relevant delta total present contribute.
    """
    obs = as_observations(observations)
    has_ta = ~np.isnan(obs.d_total_assets) & ~np.isnan(obs.investment)
    has_tf = ~np.isnan(obs.d_total_funds) & ~np.isnan(obs.cash_flow)
    if not has_ta.any() or not has_tf.any():
        raise ZeroDenominator("no record carries the change in total assets/funds")
    dta = kernels.compensated_sum(obs.d_total_assets[has_ta])
    dtf = kernels.compensated_sum(obs.d_total_funds[has_tf])
    if dta == 0 or dtf == 0:
        raise ZeroDenominator("aggregate change in total assets/funds is zero")
    inv = kernels.compensated_sum(obs.investment[has_ta])
    cf = kernels.compensated_sum(obs.cash_flow[has_tf])
    return inv / dta, cf / dtf


def h1_level(pvalue: float) -> float | None:
    """Smallest conventional level at which ``b2 = 0`` is rejected."""
    if pvalue is None or math.isnan(pvalue):
        return None
    for level in CONVENTIONAL_LEVELS:
        if pvalue < level:
            return level
    return None


def _stage(name: str, fn, *args):
    try:
        return fn(*args)
    except DegenerateDummy:
        raise
    except AsiAuditError as exc:
        raise StageError(name, exc) from exc


def diagnose_observations(
    observations: Observations,
    label: str = "",
    m: int = 1,
    n_input: int = 0,
    report: tuple[RemovalEntry, ...] = (),
) -> AsiDiagnostic:
    """Run both regressions and the comparison on prepared observations."""
    obs = as_observations(observations)
    if len(obs) == 0:
        raise EmptyPanel()
    restricted = _stage("restricted", run_restricted, obs)
    try:
        shares = decomposition_shares(obs)
    except ZeroDenominator:
        shares = (None, None)
    counts: dict[str, int] = {}
    for entry in report:
        counts[entry.reason] = counts.get(entry.reason, 0) + 1
    removed = sum(v for r, v in counts.items() if r != "identity_violation")
    common = dict(
        label=label,
        restricted=restricted,
        m=m,
        share_inv_dta=shares[0],
        share_cf_dtf=shares[1],
        n_input=n_input or len(obs),
        n_removed=removed,
        removal_counts=counts,
    )
    try:
        unrestricted = _stage("unrestricted", run_unrestricted, obs)
    except DegenerateDummy as exc:
        return AsiDiagnostic(
            unrestricted=None,
            f_if=None,
            f_if_pvalue=None,
            delta_power=None,
            h1_rejected_at=None,
            degenerate=exc.reason,
            **common,
        )

    n, k = unrestricted.n, unrestricted.k
    f_if = _stage("incremental_f", incremental_f, restricted.rss, unrestricted.rss, m, n, k)
    p = f_sf(f_if, m, n - k)
    r2_r, r2_u = restricted.r2, unrestricted.r2
    if r2_r > r2_u and r2_r - r2_u <= NESTING_SLACK:
        r2_r = r2_u
    try:
        dp = delta_explanatory_power(r2_r, r2_u)
    except DomainError:
        dp = None
    return AsiDiagnostic(
        unrestricted=unrestricted,
        f_if=f_if,
        f_if_pvalue=p,
        delta_power=dp,
        h1_rejected_at=h1_level(unrestricted.pvalue("ducf")),
        degenerate=None,
        **common,
    )


def diagnose(panel: Panel, prep_config: PrepConfig = PrepConfig(), m: int = 1) -> AsiDiagnostic:
    """End-to-end audit of one panel: preprocessing, both fits, statistics."""
    if panel is None or len(panel) == 0:
        raise EmptyPanel()
    try:
        prepared = prepare(panel, prep_config)
    except AsiAuditError as exc:
        raise StageError("prep", exc) from exc
    return diagnose_observations(
        prepared.observations, panel.provenance, m, prepared.n_input, prepared.report
    )


# --------------------------------------------------------------------------
# JSON (de)serialisation
# --------------------------------------------------------------------------


def _enc(v):
    if isinstance(v, float):
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
    return v


def _dec(v):
    if v is None:
        return math.nan
    if v == "inf":
        return math.inf
    if v == "-inf":
        return -math.inf
    return float(v)


_RR_FLOAT_SEQ = ("coefficients", "std_errors", "t_stats", "p_values")
_RR_FLOATS = ("rss", "tss", "r2", "overall_f", "overall_f_pvalue")


def result_to_dict(r: RegressionResult) -> dict:
    d = asdict(r)
    for name in _RR_FLOAT_SEQ:
        d[name] = [_enc(v) for v in d[name]]
    for name in _RR_FLOATS:
        d[name] = _enc(d[name])
    d["cov"] = [[_enc(v) for v in row] for row in d["cov"]]
    d["names"] = list(d["names"])
    d["sig_1pct"] = list(d["sig_1pct"])
    return d


def result_from_dict(d: dict) -> RegressionResult:
    kw = dict(d)
    kw["names"] = tuple(d["names"])
    for name in _RR_FLOAT_SEQ:
        kw[name] = tuple(_dec(v) for v in d[name])
    for name in _RR_FLOATS:
        kw[name] = _dec(d[name])
    kw["cov"] = tuple(tuple(_dec(v) for v in row) for row in d.get("cov", ()))
    kw["sig_1pct"] = tuple(bool(v) for v in d["sig_1pct"])
    return RegressionResult(**kw)


_DIAG_OPTIONAL_FLOATS = ("f_if", "f_if_pvalue", "delta_power", "share_inv_dta", "share_cf_dtf", "h1_rejected_at")


def diagnostic_to_dict(diag: AsiDiagnostic) -> dict:
    out = {
        "label": diag.label,
        "restricted": result_to_dict(diag.restricted),
        "unrestricted": None if diag.unrestricted is None else result_to_dict(diag.unrestricted),
        "m": diag.m,
        "degenerate": diag.degenerate,
        "n_input": diag.n_input,
        "n_removed": diag.n_removed,
        "removal_counts": dict(sorted(diag.removal_counts.items())),
    }
    for name in _DIAG_OPTIONAL_FLOATS:
        out[name] = _enc(getattr(diag, name))
    return out


def diagnostic_from_dict(d: dict) -> AsiDiagnostic:
    kw = {name: (None if d.get(name) is None else _dec(d[name])) for name in _DIAG_OPTIONAL_FLOATS}
    return AsiDiagnostic(
        label=d.get("label", ""),
        restricted=result_from_dict(d["restricted"]),
        unrestricted=None if d.get("unrestricted") is None else result_from_dict(d["unrestricted"]),
        m=int(d.get("m", 1)),
        degenerate=d.get("degenerate"),
        n_input=int(d.get("n_input", 0)),
        n_removed=int(d.get("n_removed", 0)),
        removal_counts=dict(d.get("removal_counts", {})),
        **kw,
    )
