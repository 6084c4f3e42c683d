"""Firm-year panel data model, CSV ingestion and per-firm differencing.

A :class:`Panel` stores its data column-wise (numpy arrays, ``NaN`` for an
absent optional value) sorted by ``firm_id`` then ``year``. Row-level
warnings travel with the panel as :class:`Diagnostic` records.

Flow schema columns::

    firm_id, year, total_assets, investment, cash_flow            (required)
    d_ltd, d_capital_stock, depreciation, dividends,
    d_working_capital, d_ofa, d_total_assets, d_total_funds       (optional)

Level schema columns::

    firm_id, year, total_assets, cash_flow                        (required)
    investment | long_term_assets                                 (one required)
    ltd, capital_stock, working_capital, ofa, total_funds         (optional levels)
    depreciation, dividends                                       (optional flows)

``investment`` is taken as given. Depending on the source it is either gross
capital expenditure or the change in long-term assets; in level mode a missing
``investment`` column is replaced by the first difference of
``long_term_assets``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np
import pandas as pd

from .errors import DuplicateKey, EmptyPanel, MissingColumn, ParseError

COMPONENTS = ("d_ltd", "d_capital_stock", "depreciation", "dividends", "d_working_capital", "d_ofa")
FLOW_REQUIRED = ("firm_id", "year", "total_assets", "investment", "cash_flow")
FLOW_OPTIONAL = COMPONENTS + ("d_total_assets", "d_total_funds")
FLOW_COLUMNS = FLOW_REQUIRED + FLOW_OPTIONAL

LEVEL_REQUIRED = ("firm_id", "year", "total_assets", "cash_flow")
LEVEL_STOCKS = {
    "ltd": "d_ltd",
    "capital_stock": "d_capital_stock",
    "working_capital": "d_working_capital",
    "ofa": "d_ofa",
    "total_funds": "d_total_funds",
}
LEVEL_FLOWS = ("investment", "depreciation", "dividends")
LEVEL_COLUMNS = LEVEL_REQUIRED + ("long_term_assets",) + LEVEL_FLOWS + tuple(LEVEL_STOCKS)

SCHEMA_MODES = ("flow", "level")


@dataclass(frozen=True)
class Diagnostic:
    """One structured warning or error, serialised as a JSON line."""

    code: str
    message: str
    row: int | None = None
    firm_id: str | None = None
    year: int | None = None

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "row": self.row,
            "firm_id": self.firm_id,
            "year": self.year,
            "message": self.message,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)


@dataclass(frozen=True)
class FirmYearRecord:
    firm_id: str
    year: int
    total_assets: float
    investment: float | None
    cash_flow: float
    d_ltd: float | None = None
    d_capital_stock: float | None = None
    depreciation: float | None = None
    dividends: float | None = None
    d_working_capital: float | None = None
    d_ofa: float | None = None
    d_total_assets: float | None = None
    d_total_funds: float | None = None

    def has_components(self) -> bool:
        return all(getattr(self, name) is not None for name in COMPONENTS)


_RECORD_FLOATS = ("total_assets", "investment", "cash_flow") + FLOW_OPTIONAL


def _opt(v: float) -> float | None:
    return None if math.isnan(v) else float(v)


@dataclass(frozen=True, eq=False)
class Panel:
    """Immutable, sorted firm-year panel held as numpy columns."""

    columns: Mapping[str, np.ndarray]
    provenance: str = ""
    schema_mode: str = "flow"
    diagnostics: tuple[Diagnostic, ...] = field(default=())

    def __post_init__(self):
        if self.schema_mode not in SCHEMA_MODES:
            raise ValueError(f"schema_mode must be one of {SCHEMA_MODES}")
        cols = dict(self.columns)
        n = len(cols["firm_id"])
        for name, arr in cols.items():
            if len(arr) != n:
                raise ValueError(f"column {name!r} has length {len(arr)}, expected {n}")
            arr.flags.writeable = False
        object.__setattr__(self, "columns", cols)

    def __len__(self) -> int:
        return len(self.columns["firm_id"])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def get(self, name: str) -> np.ndarray:
        """Column ``name``, or an all-NaN float column when absent."""
        if name in self.columns:
            return self.columns[name]
        return np.full(len(self), np.nan)

    @property
    def firm_id(self) -> np.ndarray:
        return self.columns["firm_id"]

    @property
    def year(self) -> np.ndarray:
        return self.columns["year"]

    def record(self, i: int) -> FirmYearRecord:
        kw = {name: _opt(self.get(name)[i]) for name in _RECORD_FLOATS}
        return FirmYearRecord(firm_id=str(self.firm_id[i]), year=int(self.year[i]), **kw)

    def records(self) -> Iterator[FirmYearRecord]:
        for i in range(len(self)):
            yield self.record(i)

    def replace(self, columns=None, diagnostics=(), **kw) -> "Panel":
        cols = dict(self.columns)
        if columns:
            cols.update(columns)
        return Panel(
            columns=cols,
            provenance=kw.get("provenance", self.provenance),
            schema_mode=kw.get("schema_mode", self.schema_mode),
            diagnostics=self.diagnostics + tuple(diagnostics),
        )

    def scaled(self, factor: float) -> "Panel":
        """Multiply every monetary column by ``factor``."""
        cols = {
            name: (arr * factor if name not in ("firm_id", "year") else arr)
            for name, arr in self.columns.items()
        }
        return Panel(cols, self.provenance, self.schema_mode, self.diagnostics)


def _sort_order(firm_id: np.ndarray, year: np.ndarray) -> np.ndarray:
    return np.lexsort((year, firm_id))


def build_panel(
    columns: Mapping[str, np.ndarray],
    provenance: str = "",
    schema_mode: str = "flow",
    diagnostics=(),
) -> Panel:
    """Sort columns into canonical order and check key uniqueness."""
    firm_id = np.asarray(columns["firm_id"]).astype(str)
    year = np.asarray(columns["year"], dtype=np.int64)
    if len(firm_id) == 0:
        raise EmptyPanel()
    order = _sort_order(firm_id, year)
    cols = {"firm_id": firm_id[order], "year": year[order]}
    for name, arr in columns.items():
        if name in cols:
            continue
        cols[name] = np.asarray(arr, dtype=np.float64)[order]
    same = (cols["firm_id"][1:] == cols["firm_id"][:-1]) & (cols["year"][1:] == cols["year"][:-1])
    if same.any():
        i = int(np.flatnonzero(same)[0]) + 1
        raise DuplicateKey(str(cols["firm_id"][i]), int(cols["year"][i]))
    return Panel(cols, provenance, schema_mode, tuple(diagnostics))


def panel_from_records(records, provenance: str = "", schema_mode: str = "flow") -> Panel:
    records = list(records)
    if not records:
        raise EmptyPanel()
    cols: dict[str, np.ndarray] = {
        "firm_id": np.array([r.firm_id for r in records], dtype=str),
        "year": np.array([r.year for r in records], dtype=np.int64),
    }
    for name in _RECORD_FLOATS:
        vals = [getattr(r, name) for r in records]
        if name in FLOW_REQUIRED or any(v is not None for v in vals):
            cols[name] = np.array([np.nan if v is None else v for v in vals], dtype=np.float64)
    return build_panel(cols, provenance, schema_mode)


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------


def _to_float(raw: np.ndarray) -> np.ndarray:
    """Correctly rounded str -> float; unparseable cells become NaN."""
    try:
        return raw.astype(np.float64)
    except ValueError:
        out = np.empty(len(raw))
        for i, v in enumerate(raw):
            try:
                out[i] = float(v)
            except ValueError:
                out[i] = np.nan
        return out


def _required_columns(schema_mode: str, header: list[str]) -> tuple[str, ...]:
    if schema_mode == "flow":
        return FLOW_REQUIRED
    req = LEVEL_REQUIRED
    if "investment" not in header and "long_term_assets" not in header:
        raise MissingColumn("investment")
    return req


def ingest_csv(
    path,
    schema_mode: str = "flow",
    provenance: str | None = None,
    strict: bool = False,
) -> Panel:
    """Read a panel from CSV.

    Rows whose fields cannot be parsed are dropped and reported as
    ``parse_error`` diagnostics (``row`` is the 1-based line number in the
    file); with ``strict=True`` the first such row raises :class:`ParseError`.
    """
    if schema_mode not in SCHEMA_MODES:
        raise ValueError(f"schema_mode must be one of {SCHEMA_MODES}")
    path = Path(path)
    df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8", skipinitialspace=True)
    df.columns = [c.strip() for c in df.columns]
    header = list(df.columns)
    required = _required_columns(schema_mode, header)
    for name in required:
        if name not in header:
            raise MissingColumn(name)
    known = FLOW_COLUMNS if schema_mode == "flow" else LEVEL_COLUMNS
    present = [c for c in known if c in header]

    n = len(df)
    bad = np.zeros(n, dtype=bool)
    problems: list[Diagnostic] = []
    line = np.arange(n) + 2

    def flag(mask: np.ndarray, column: str, raw: pd.Series):
        for i in np.flatnonzero(mask & ~bad):
            if strict:
                raise ParseError(int(line[i]), column, raw.iloc[i])
            problems.append(
                Diagnostic(
                    "parse_error",
                    f"cannot parse column {column!r} (value {raw.iloc[i]!r}); row rejected",
                    row=int(line[i]),
                )
            )
        bad[mask] = True

    firm = df["firm_id"].str.strip()
    flag((firm == "").to_numpy(), "firm_id", df["firm_id"])

    cols: dict[str, np.ndarray] = {}
    ystr = df["year"].str.strip()
    yval = _to_float(np.where(ystr == "", "nan", ystr.to_numpy(dtype=str)))
    ybad = ~np.isfinite(yval) | (yval != np.round(yval))
    flag(ybad, "year", df["year"])

    for name in present:
        if name in ("firm_id", "year"):
            continue
        raw = df[name].str.strip().to_numpy(dtype=str)
        empty = raw == ""
        vals = _to_float(np.where(empty, "nan", raw))
        invalid = (~empty & ~np.isfinite(vals)) | (empty & (name in required))
        flag(invalid, name, df[name])
        vals[empty] = np.nan
        cols[name] = vals

    keep = ~bad
    if not keep.any():
        raise EmptyPanel(f"{path}: no parseable rows")
    cols = {k: v[keep] for k, v in cols.items()}
    cols["firm_id"] = firm.to_numpy()[keep].astype(str)
    cols["year"] = yval[keep].astype(np.int64)
    # optional columns that are empty throughout carry no information
    for name in list(cols):
        if name not in required and name not in ("firm_id", "year") and np.isnan(cols[name]).all():
            del cols[name]
    return build_panel(cols, provenance if provenance is not None else path.stem, schema_mode, problems)


def _fmt(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def write_csv(panel: Panel, path) -> None:
    """Write ``panel`` in its own schema; floats are written round-trip exact."""
    known = FLOW_COLUMNS if panel.schema_mode == "flow" else LEVEL_COLUMNS
    names = [c for c in known if c in panel]
    frame = {"firm_id": panel.firm_id, "year": panel.year}
    for name in names:
        if name not in frame:
            frame[name] = [_fmt(v) for v in panel[name]]
    pd.DataFrame(frame, columns=names).to_csv(path, index=False, lineterminator="\n")


# --------------------------------------------------------------------------
# differencing
# --------------------------------------------------------------------------


def _has_predecessor(panel: Panel) -> np.ndarray:
    """``out[i]`` is true when row ``i-1`` is the same firm's previous year."""
    fid, yr = panel.firm_id, panel.year
    out = np.zeros(len(panel), dtype=bool)
    out[1:] = (fid[1:] == fid[:-1]) & (yr[1:] == yr[:-1] + 1)
    return out


def difference_panel(panel: Panel) -> Panel:
    """Convert a level-mode panel into flows by per-firm first differences.

    The first year of every contiguous run is dropped. Firms with a single
    year and gaps in a firm's history are reported as diagnostics.
    """
    if panel.schema_mode != "level":
        raise ValueError("difference_panel expects a level-mode panel")
    fid, yr = panel.firm_id, panel.year
    pred = _has_predecessor(panel)
    diags: list[Diagnostic] = []

    same_firm = np.zeros(len(panel), dtype=bool)
    same_firm[1:] = fid[1:] == fid[:-1]
    gap = same_firm & ~pred
    for i in np.flatnonzero(gap):
        diags.append(
            Diagnostic(
                "non_consecutive_years",
                f"gap between {yr[i - 1]} and {yr[i]}; no difference taken across it",
                firm_id=str(fid[i]),
                year=int(yr[i]),
            )
        )
    firms, counts = np.unique(fid, return_counts=True)
    for f in firms[counts == 1]:
        diags.append(Diagnostic("single_year_firm", "firm has one year only; dropped", firm_id=str(f)))

    idx = np.flatnonzero(pred)
    prev = idx - 1
    cols: dict[str, np.ndarray] = {
        "firm_id": fid[idx],
        "year": yr[idx],
        "total_assets": panel["total_assets"][idx],
        "cash_flow": panel["cash_flow"][idx],
    }
    if "investment" in panel:
        cols["investment"] = panel["investment"][idx]
    else:
        lta = panel["long_term_assets"]
        cols["investment"] = lta[idx] - lta[prev]
    for name in ("depreciation", "dividends"):
        if name in panel:
            cols[name] = panel[name][idx]
    for level, delta in LEVEL_STOCKS.items():
        if level in panel:
            cols[delta] = panel[level][idx] - panel[level][prev]
    ta = panel["total_assets"]
    cols["d_total_assets"] = ta[idx] - ta[prev]
    if len(idx) == 0:
        raise EmptyPanel("no firm has two consecutive years")
    return Panel(cols, panel.provenance, "flow", panel.diagnostics + tuple(diags))


def derive_delta_totals(panel: Panel, tolerance: float = 1e-6) -> Panel:
    """Populate ``d_total_assets`` and ``d_total_funds`` and check their equality.

    Adds boolean-valued float columns ``missing_prior_year`` and
    ``funds_violation``. Supplied ``d_total_funds`` values must match
    ``d_total_assets`` to ``tolerance`` relative to the larger magnitude.
    """
    if panel.schema_mode != "flow":
        raise ValueError("derive_delta_totals expects a flow-mode panel")
    n = len(panel)
    dta = panel.get("d_total_assets").copy()
    pred = _has_predecessor(panel)
    ta = panel["total_assets"]
    fill = np.isnan(dta) & pred
    idx = np.flatnonzero(fill)
    dta[idx] = ta[idx] - ta[idx - 1]
    missing = np.isnan(dta)

    diags: list[Diagnostic] = []
    for i in np.flatnonzero(missing):
        diags.append(
            Diagnostic(
                "missing_prior_year",
                "prior-year total_assets unavailable; excluded from share computations",
                firm_id=str(panel.firm_id[i]),
                year=int(panel.year[i]),
            )
        )

    dtf_in = panel.get("d_total_funds")
    supplied = ~np.isnan(dtf_in)
    dtf = np.where(supplied, dtf_in, dta)
    scale = np.maximum(np.abs(dta), np.abs(dtf))
    with np.errstate(invalid="ignore"):
        violation = supplied & ~missing & (np.abs(dtf - dta) > tolerance * scale)
    for i in np.flatnonzero(violation):
        diags.append(
            Diagnostic(
                "identity_violation",
                f"d_total_funds {dtf[i]!r} differs from d_total_assets {dta[i]!r}",
                firm_id=str(panel.firm_id[i]),
                year=int(panel.year[i]),
            )
        )
    return panel.replace(
        columns={
            "d_total_assets": dta,
            "d_total_funds": dtf,
            "missing_prior_year": missing.astype(np.float64),
            "funds_violation": violation.astype(np.float64),
        },
        diagnostics=diags,
    )
