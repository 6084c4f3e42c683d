"""Table-style audit reports over one or many diagnostics."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, fields

from .asi_diag import AsiDiagnostic, diagnostic_from_dict, diagnostic_to_dict

SCHEMA_VERSION = 1
FORMATS = ("text", "csv", "json", "markdown")
SIG_MARK = "^a"
LEGEND = "^a significance at the 1% level"


@dataclass(frozen=True)
class Table1Row:
    panel_label: str
    restricted_cf_coef: float
    restricted_cf_t: float
    unrestricted_cf_coef: float | None
    unrestricted_cf_t: float | None
    ducf_coef: float | None
    ducf_t: float | None
    f_restricted: float
    f_unrestricted: float | None
    r2_restricted: float
    r2_unrestricted: float | None
    rss_restricted: float
    rss_unrestricted: float | None
    f_if: float | None
    f_if_pvalue: float | None
    delta_power: float | None
    share_inv_dta: float | None
    share_cf_dtf: float | None
    sig_flags: dict
    degenerate: str | None = None


def table_row(diag: AsiDiagnostic) -> Table1Row:
    r, u = diag.restricted, diag.unrestricted
    sig = {
        "restricted_cf": r.sig_1pct[r.index("cf")],
        "f_restricted": r.overall_f_pvalue < 0.01,
    }
    if u is not None:
        sig.update(
            unrestricted_cf=u.sig_1pct[u.index("cf")],
            ducf=u.sig_1pct[u.index("ducf")],
            f_unrestricted=u.overall_f_pvalue < 0.01,
            f_if=diag.f_if_pvalue is not None and diag.f_if_pvalue < 0.01,
        )
    return Table1Row(
        panel_label=diag.label,
        restricted_cf_coef=r.coef("cf"),
        restricted_cf_t=r.tstat("cf"),
        unrestricted_cf_coef=None if u is None else u.coef("cf"),
        unrestricted_cf_t=None if u is None else u.tstat("cf"),
        ducf_coef=None if u is None else u.coef("ducf"),
        ducf_t=None if u is None else u.tstat("ducf"),
        f_restricted=r.overall_f,
        f_unrestricted=None if u is None else u.overall_f,
        r2_restricted=r.r2,
        r2_unrestricted=None if u is None else u.r2,
        rss_restricted=r.rss,
        rss_unrestricted=None if u is None else u.rss,
        f_if=diag.f_if,
        f_if_pvalue=diag.f_if_pvalue,
        delta_power=diag.delta_power,
        share_inv_dta=diag.share_inv_dta,
        share_cf_dtf=diag.share_cf_dtf,
        sig_flags=sig,
        degenerate=diag.degenerate,
    )


def _mean(values) -> float | None:
    vals = [v for v in values if v is not None and not math.isnan(v)]
    if not vals:
        return None
    return math.fsum(vals) / len(vals)


def total_mean(diagnostics) -> dict:
    """Unformatted Total-mean values; degenerate panels have no delta_power."""
    diagnostics = list(diagnostics)
    return {
        "delta_power": _mean(d.delta_power for d in diagnostics),
        "share_inv_dta": _mean(d.share_inv_dta for d in diagnostics),
        "share_cf_dtf": _mean(d.share_cf_dtf for d in diagnostics),
    }


def _num(v, digits=2, sig=False) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float) and math.isinf(v):
        s = "inf" if v > 0 else "-inf"
    else:
        s = f"{v:.{digits}f}"
    return s + (f" {SIG_MARK}" if sig else "")


def _pct(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{100.0 * v:.2f}%"


COLUMNS = ["", "cf coef", "cf t", "ducf coef", "ducf t", "F", "R2 / d.exp.power", "RSS", "F_IF", "%inv/dTA", "%cf/dTF"]


def _block(row: Table1Row) -> list[list[str]]:
    """Rows of one panel block, laid out in ``COLUMNS`` order."""
    s = row.sig_flags
    blank = [""] * (len(COLUMNS) - 1)
    restricted = [
        "cf (restricted)",
        _num(row.restricted_cf_coef),
        _num(row.restricted_cf_t, sig=s["restricted_cf"]),
        "",
        "",
        _num(row.f_restricted, sig=s["f_restricted"]),
        _pct(row.r2_restricted),
        _num(row.rss_restricted),
        "",
        "",
        "",
    ]
    shares = ["% of full AI"] + [""] * 8 + [_pct(row.share_inv_dta), _pct(row.share_cf_dtf)]
    if row.degenerate is not None:
        tag = f"DEGENERATE({row.degenerate})"
        unrestricted = ["ducf (unrestricted)", tag] + [""] * 9
        fit = ["Incremental fit"] + [""] * 5 + [tag] + [""] * 4
    else:
        unrestricted = [
            "ducf (unrestricted)",
            _num(row.unrestricted_cf_coef),
            _num(row.unrestricted_cf_t, sig=s["unrestricted_cf"]),
            _num(row.ducf_coef),
            _num(row.ducf_t, sig=s["ducf"]),
            _num(row.f_unrestricted, sig=s["f_unrestricted"]),
            _pct(row.r2_unrestricted),
            _num(row.rss_unrestricted),
            "",
            "",
            "",
        ]
        fit = ["Incremental fit"] + [""] * 5 + [_pct(row.delta_power), "", _num(row.f_if, sig=s["f_if"]), "", ""]
    return [[f"Panel: {row.panel_label}"] + blank, restricted, unrestricted, shares, fit]


def _layout(rows: list[Table1Row], mean: dict) -> list[list[str]]:
    body = [line for row in rows for line in _block(row)]
    body.append(
        ["Total mean"] + [""] * 5 + [_pct(mean["delta_power"]), "", "", _pct(mean["share_inv_dta"]), _pct(mean["share_cf_dtf"])]
    )
    return body


def _render_text(body: list[list[str]]) -> str:
    table = [COLUMNS] + body
    widths = [max(len(r[i]) for r in table) for i in range(len(COLUMNS))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in table]
    lines.append("")
    lines.append(LEGEND)
    return "\n".join(lines) + "\n"


def _render_markdown(body: list[list[str]]) -> str:
    esc = lambda c: c.replace("|", "\\|")
    lines = ["| " + " | ".join(COLUMNS) + " |", "|" + "---|" * len(COLUMNS)]
    for r in body:
        cells = [f"**{esc(r[0])}**" if r[0].startswith(("Panel:", "Total mean")) else esc(r[0])] + [esc(c) for c in r[1:]]
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append(LEGEND)
    return "\n".join(lines) + "\n"


def _render_csv(rows: list[Table1Row], mean: dict) -> str:
    names = [f.name for f in fields(Table1Row) if f.name != "sig_flags"] + ["sig_flags"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in rows:
        vals = []
        for name in names:
            v = getattr(row, name)
            if name == "sig_flags":
                v = ";".join(k for k, flag in sorted(v.items()) if flag)
            elif name in ("delta_power", "share_inv_dta", "share_cf_dtf", "r2_restricted", "r2_unrestricted"):
                v = _pct(v)
            elif name == "f_if_pvalue":
                v = "" if v is None else f"{v:.3g}"
            elif name == "degenerate":
                v = "" if v is None else f"DEGENERATE({v})"
            elif isinstance(v, float):
                v = _num(v)
            elif v is None:
                v = ""
            vals.append(v)
        w.writerow(vals)
    total = {n: "" for n in names}
    total["panel_label"] = "Total mean"
    for key in ("delta_power", "share_inv_dta", "share_cf_dtf"):
        total[key] = _pct(mean[key])
    w.writerow([total[n] for n in names])
    return buf.getvalue()


def report_document(diagnostics) -> dict:
    diagnostics = list(diagnostics)
    return {
        "schema_version": SCHEMA_VERSION,
        "diagnostics": [diagnostic_to_dict(d) for d in diagnostics],
        "total_mean": total_mean(diagnostics),
    }


def render_table(diagnostics, format: str = "text") -> str:
    """Render diagnostics as text, csv, json or markdown.

    Degenerate panels show ``DEGENERATE(<reason>)`` in place of the
    unrestricted results.
    """
    diagnostics = list(diagnostics)
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    if format == "json":
        return json.dumps(report_document(diagnostics), indent=2) + "\n"
    rows = [table_row(d) for d in diagnostics]
    mean = total_mean(diagnostics)
    if format == "csv":
        return _render_csv(rows, mean)
    body = _layout(rows, mean)
    return _render_text(body) if format == "text" else _render_markdown(body)


def load_report(text_or_path) -> list[AsiDiagnostic]:
    """Parse a JSON report (string or path) back into diagnostics."""
    if isinstance(text_or_path, str) and text_or_path.lstrip().startswith("{"):
        doc = json.loads(text_or_path)
    else:
        with open(text_or_path, encoding="utf-8") as fh:
            doc = json.load(fh)
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema_version {version!r}")
    return [diagnostic_from_dict(d) for d in doc["diagnostics"]]
