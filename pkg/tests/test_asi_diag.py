import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asiaudit.asi_diag import (
    AsiDiagnostic,
    decomposition_shares,
    delta_explanatory_power,
    diagnose,
    diagnose_observations,
    diagnostic_from_dict,
    diagnostic_to_dict,
    h1_level,
    incremental_f,
    run_restricted,
    run_unrestricted,
)
from asiaudit.errors import DegenerateDummy, DomainError, EmptyPanel, InvalidNesting, StageError, ZeroDenominator
from asiaudit.linmodel import ORIGIN, ols_fit
from asiaudit.panel import build_panel
from asiaudit.prep import Observations, PrepConfig
from asiaudit.synth import SimulationConfig, simulate_panel
from helpers import TABLE1, TABLE1_MEAN

DATA = Path(__file__).parent / "data"


def test_incremental_f_hand_example():
    assert incremental_f(10.0, 8.0, 1, 12, 3) == pytest.approx(2.25, rel=1e-15)


def test_incremental_f_no_gain():
    assert incremental_f(8.0, 8.0, 1, 12, 3) == 0.0


def test_incremental_f_back_solved_panel():
    # n - k = 7599
    f = incremental_f(61_500.0, 46_519.0, 1, 7602, 3)
    assert f == pytest.approx(2447, abs=1)


def test_incremental_f_errors():
    with pytest.raises(InvalidNesting):
        incremental_f(7.0, 8.0, 1, 12, 3)
    with pytest.raises(DomainError):
        incremental_f(10.0, 0.0, 1, 12, 3)
    with pytest.raises(DomainError):
        incremental_f(10.0, 8.0, 1, 3, 3)
    with pytest.raises(DomainError):
        incremental_f(10.0, 8.0, 0, 12, 3)


def test_incremental_f_rounding_slack():
    rss = 3.0
    assert incremental_f(rss * (1 - 1e-15), rss, 1, 12, 3) == 0.0


@pytest.mark.parametrize("label, r2_r, r2_u, pct", TABLE1)
def test_delta_power_reproduces_published_column(label, r2_r, r2_u, pct):
    assert abs(100 * delta_explanatory_power(r2_r, r2_u) - pct) <= 0.05


def test_delta_power_mean():
    mean = sum(100 * delta_explanatory_power(r, u) for _, r, u, _ in TABLE1) / len(TABLE1)
    assert abs(mean - TABLE1_MEAN) <= 0.05


def test_delta_power_examples():
    assert delta_explanatory_power(0.016, 0.255) == pytest.approx(0.9373, abs=5e-5)
    assert delta_explanatory_power(0.080, 0.378) == pytest.approx(0.7884, abs=5e-5)
    assert delta_explanatory_power(0.0, 0.135) == 1.0


def test_delta_power_domain():
    with pytest.raises(DomainError):
        delta_explanatory_power(0.0, 0.0)
    with pytest.raises(DomainError):
        delta_explanatory_power(0.3, 0.2)


def _with_totals(inv, cf, dta, dtf=None):
    n = len(inv)
    return Observations.from_arrays(
        np.ones(n),
        np.ones(n),
        investment=np.asarray(inv, float),
        cash_flow=np.asarray(cf, float),
        d_total_assets=np.asarray(dta, float),
        d_total_funds=np.asarray(dta if dtf is None else dtf, float),
    )


def test_shares_hand_sums():
    s_inv, s_cf = decomposition_shares(_with_totals([2, 1], [5, 3], [10, 10]))
    assert s_inv == pytest.approx(0.15, rel=1e-15)
    assert s_cf == pytest.approx(0.40, rel=1e-15)


def test_shares_full_attribution():
    s_inv, _ = decomposition_shares(_with_totals([3, 4, 5], [1, 1, 1], [3, 4, 5]))
    assert s_inv == 1.0


def test_shares_zero_denominator():
    with pytest.raises(ZeroDenominator):
        decomposition_shares(_with_totals([1, 1], [1, 1], [5, -5]))
    with pytest.raises(ZeroDenominator):
        decomposition_shares(_with_totals([1], [1], [math.nan]))


@pytest.mark.parametrize("p, level", [(0.2, None), (0.07, 0.10), (0.03, 0.05), (1e-9, 0.01), (math.nan, None)])
def test_h1_level(p, level):
    assert h1_level(p) == level


def test_zero_rest_restricted_is_identity():
    panel = simulate_panel(SimulationConfig(n_firms=50, n_years=4, seed=3, rest_mode="zero"))
    d = diagnose(panel)
    assert d.degenerate == "all_nonpositive"
    assert d.unrestricted is None and d.f_if is None
    assert d.restricted.coef("cf") == pytest.approx(1.0, abs=1e-9)
    assert d.restricted.r2 >= 1 - 1e-12


def test_origin_slope_for_proportional_rest():
    cf = np.linspace(0.05, 0.3, 40)
    obs = Observations.from_arrays(1.5 * cf, cf)
    assert ols_fit(obs, ORIGIN).coefficients[0] == pytest.approx(1.5, rel=1e-12)


def test_unrestricted_even_rows_positive():
    cf = np.linspace(0.05, 0.3, 40)
    rest = np.where(np.arange(40) % 2 == 0, 0.3, -0.2) * cf + 0.001 * np.sin(np.arange(40))
    obs = Observations.from_arrays(cf + rest, cf)
    u = run_unrestricted(obs)
    assert math.isfinite(u.coef("ducf"))
    assert run_restricted(obs).rss >= u.rss


def test_unrestricted_degenerate_reasons():
    cf = np.linspace(0.05, 0.3, 20)
    with pytest.raises(DegenerateDummy, match="all_positive"):
        run_unrestricted(Observations.from_arrays(cf * 1.2, cf))
    d = diagnose_observations(Observations.from_arrays(cf * 0.7, cf))
    assert d.degenerate == "all_nonpositive" and d.is_degenerate


def test_diagnose_empty_panel():
    with pytest.raises(EmptyPanel):
        diagnose(None)


def test_diagnose_wraps_prep_errors():
    panel = simulate_panel(SimulationConfig(n_firms=2, n_years=6, seed=1))
    # 10 usable rows pass, but a tighter panel is too small to trim
    tiny = panel.replace({k: v[:6] for k, v in panel.columns.items()})
    with pytest.raises(StageError) as exc:
        diagnose(tiny)
    assert exc.value.stage == "prep"


def test_mixed_seed42_against_golden(mixed_panel):
    golden = json.loads((DATA / "golden_diag_seed42.json").read_text())
    assert golden["header"]["config"] == SimulationConfig(
        n_firms=200, n_years=6, seed=42, rest_mode="mixed", rest_scale=0.5
    ).to_dict()
    g = golden["values"]
    d = diagnose(mixed_panel)
    assert d.degenerate is None
    assert d.f_if_pvalue < 1e-6
    assert d.delta_power > 0.5
    assert d.unrestricted.n == g["n"]
    np.testing.assert_allclose(d.unrestricted.coefficients, g["unrestricted_coef"], rtol=1e-10)
    np.testing.assert_allclose(d.unrestricted.t_stats, g["unrestricted_t"], rtol=1e-10)
    np.testing.assert_allclose(d.restricted.coefficients, g["restricted_coef"], rtol=1e-10)
    for key in ("f_if", "delta_power", "share_inv_dta", "share_cf_dtf"):
        assert getattr(d, key) == pytest.approx(g[key], rel=1e-10), key
    assert d.restricted.rss == pytest.approx(g["restricted_rss"], rel=1e-10)
    assert d.unrestricted.rss == pytest.approx(g["unrestricted_rss"], rel=1e-10)
    assert d.h1_rejected_at == 0.01


def test_matches_statsmodels_on_prepared(mixed_panel):
    sm = pytest.importorskip("statsmodels.api")
    from asiaudit.prep import prepare

    obs = prepare(mixed_panel).observations
    X = np.column_stack([np.ones(len(obs)), obs.cf, obs.ducf])
    ref = sm.OLS(obs.inv, X).fit()
    restricted = sm.OLS(obs.inv, X[:, :2]).fit()
    f, p, _ = ref.compare_f_test(restricted)
    d = diagnose_observations(obs)
    assert d.f_if == pytest.approx(f, rel=1e-9)
    np.testing.assert_allclose(d.unrestricted.p_values, ref.pvalues, rtol=1e-6, atol=1e-300)


def _check_nesting(d: AsiDiagnostic):
    u, r = d.unrestricted, d.restricted
    assert u.rss <= r.rss * (1 + 1e-12)
    assert u.r2 >= r.r2 - 1e-12
    assert d.f_if >= 0
    t2 = u.tstat("ducf") ** 2
    assert abs(d.f_if - t2) <= 1e-6 * max(t2, 1e-300)
    assert 0 <= d.delta_power <= 1


@settings(max_examples=25, deadline=None)
@given(
    st.integers(0, 2**63 - 1),
    st.sampled_from(["mixed", "all_positive", "all_negative_small"]),
    st.floats(0.05, 2.0),
    st.floats(0.1, 0.9),
)
def test_nesting_identities(seed, mode, scale, mix):
    cfg = SimulationConfig(n_firms=40, n_years=4, seed=seed, rest_mode=mode, rest_scale=scale, mix_fraction=mix)
    d = diagnose(simulate_panel(cfg))
    if d.is_degenerate:
        assert mode != "mixed" or d.restricted is not None
        return
    _check_nesting(d)


def _scaled_panel(panel, lam):
    keys = ("firm_id", "year")
    return panel.replace({c: (v if c in keys else v * lam) for c, v in panel.columns.items()})


@pytest.mark.parametrize("lam", [1e-3, 1.0, 1e6])
def test_scale_invariance(mixed_panel, lam):
    a = diagnose(mixed_panel)
    b = diagnose(_scaled_panel(mixed_panel, lam))
    for key in ("f_if", "delta_power", "share_inv_dta", "share_cf_dtf"):
        assert getattr(b, key) == pytest.approx(getattr(a, key), rel=1e-9)
    for ra, rb in ((a.restricted, b.restricted), (a.unrestricted, b.unrestricted)):
        assert rb.r2 == pytest.approx(ra.r2, rel=1e-9)
        assert rb.overall_f == pytest.approx(ra.overall_f, rel=1e-9)
        np.testing.assert_allclose(rb.t_stats, ra.t_stats, rtol=1e-9)
        np.testing.assert_allclose(rb.coefficients, ra.coefficients, rtol=1e-9)


def test_json_round_trip_bit_exact(mixed_panel):
    d = diagnose(mixed_panel)
    back = diagnostic_from_dict(json.loads(json.dumps(diagnostic_to_dict(d))))
    assert back == d


def test_json_round_trip_degenerate():
    cf = np.linspace(0.05, 0.3, 20)
    d = diagnose_observations(Observations.from_arrays(cf * 0.7, cf), label="neg")
    text = json.dumps(diagnostic_to_dict(d), allow_nan=False)
    back = diagnostic_from_dict(json.loads(text))
    assert back.degenerate == "all_nonpositive"
    assert back.unrestricted is None
    assert diagnostic_to_dict(back) == diagnostic_to_dict(d)
