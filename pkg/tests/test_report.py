import csv
import dataclasses
import io
import json
import math

import numpy as np
import pytest

from asiaudit.asi_diag import diagnose, diagnose_observations, diagnostic_to_dict
from asiaudit.prep import Observations
from asiaudit.report import (
    LEGEND,
    SCHEMA_VERSION,
    SIG_MARK,
    load_report,
    render_table,
    report_document,
    table_row,
    total_mean,
)
from helpers import TABLE1, TABLE1_MEAN


@pytest.fixture(scope="module")
def base_diag(mixed_panel):
    return diagnose(mixed_panel)


@pytest.fixture(scope="module")
def degenerate_diag():
    cf = np.linspace(0.05, 0.3, 20)
    return diagnose_observations(Observations.from_arrays(cf * 1.3, cf), label="pos")


def published_diagnostics(base):
    return [dataclasses.replace(base, label=label, delta_power=pct / 100) for label, _, _, pct in TABLE1]


def test_total_mean_of_published_column(base_diag):
    diags = published_diagnostics(base_diag)
    mean = total_mean(diags)["delta_power"]
    assert abs(100 * mean - TABLE1_MEAN) <= 0.05
    assert f"{100 * mean:.2f}%" == "83.57%"
    text = render_table(diags, "text")
    assert text.count("Total mean") == 1
    assert "83.57%" in text.split("Total mean")[1].splitlines()[0]


def test_total_mean_is_exact_mean(base_diag):
    diags = published_diagnostics(base_diag)
    vals = [d.delta_power for d in diags]
    assert abs(total_mean(diags)["delta_power"] - sum(vals) / len(vals)) <= 1e-12


def test_single_diagnostic_mean_equals_itself(base_diag):
    mean = total_mean([base_diag])
    assert mean["delta_power"] == base_diag.delta_power
    assert mean["share_inv_dta"] == base_diag.share_inv_dta
    assert mean["share_cf_dtf"] == base_diag.share_cf_dtf


def test_degenerate_row_is_explicit(base_diag, degenerate_diag):
    for fmt in ("text", "markdown", "csv"):
        out = render_table([base_diag, degenerate_diag], fmt)
        assert "DEGENERATE(all_positive)" in out, fmt
    # degenerate panels do not drag the mean
    assert total_mean([base_diag, degenerate_diag])["delta_power"] == base_diag.delta_power


def test_significance_marker_and_legend(base_diag):
    text = render_table([base_diag], "text")
    assert SIG_MARK in text
    assert text.rstrip().endswith(LEGEND)
    row = table_row(base_diag)
    assert row.sig_flags["ducf"] is True


def test_percentages_two_decimals(base_diag):
    text = render_table([base_diag], "markdown")
    assert f"{100 * base_diag.delta_power:.2f}%" in text
    assert f"{100 * base_diag.share_inv_dta:.2f}%" in text
    assert text.startswith("|")


def test_csv_one_row_per_panel_plus_mean(base_diag, degenerate_diag):
    rows = list(csv.DictReader(io.StringIO(render_table([base_diag, degenerate_diag], "csv"))))
    assert len(rows) == 3
    assert rows[-1]["panel_label"] == "Total mean"
    assert rows[0]["delta_power"] == f"{100 * base_diag.delta_power:.2f}%"
    assert rows[1]["degenerate"] == "DEGENERATE(all_positive)"
    assert rows[1]["f_if"] == ""


def test_json_round_trip_bit_exact(base_diag, degenerate_diag):
    text = render_table([base_diag, degenerate_diag], "json")
    doc = json.loads(text)
    assert doc["schema_version"] == SCHEMA_VERSION
    back = load_report(text)
    assert back[0] == base_diag
    assert diagnostic_to_dict(back[1]) == diagnostic_to_dict(degenerate_diag)
    assert doc["total_mean"] == total_mean([base_diag, degenerate_diag])


def test_json_is_strict(base_diag):
    json.loads(render_table([base_diag], "json"), parse_constant=lambda c: pytest.fail(c))


def test_load_report_from_path(tmp_path, base_diag):
    path = tmp_path / "r.json"
    path.write_text(render_table([base_diag], "json"))
    assert load_report(path) == [base_diag]


def test_load_report_rejects_other_schema():
    with pytest.raises(ValueError):
        load_report(json.dumps({"schema_version": 99, "diagnostics": []}))


def test_unknown_format(base_diag):
    with pytest.raises(ValueError):
        render_table([base_diag], "html")


def test_render_is_deterministic(base_diag):
    assert render_table([base_diag], "text") == render_table([base_diag], "text")
    assert json.dumps(report_document([base_diag])) == json.dumps(report_document([base_diag]))


def test_infinite_f_renders(base_diag):
    exact = dataclasses.replace(
        base_diag, restricted=dataclasses.replace(base_diag.restricted, overall_f=math.inf)
    )
    assert "inf" in render_table([exact], "text")
    back = load_report(render_table([exact], "json"))
    assert back[0].restricted.overall_f == math.inf
