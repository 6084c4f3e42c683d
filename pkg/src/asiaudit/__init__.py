"""Audit investment-cash flow regressions for accounting semi-identity bias."""

from .asi_diag import (
    AsiDiagnostic,
    decomposition_shares,
    delta_explanatory_power,
    diagnose,
    incremental_f,
    run_restricted,
    run_unrestricted,
)
from .kernels import BACKEND
from .linmodel import DesignSpec, RegressionResult, f_cdf, ols, ols_fit, t_cdf
from .panel import FirmYearRecord, Panel, derive_delta_totals, difference_panel, ingest_csv, write_csv
from .prep import Observation, Observations, PrepConfig, compute_rest, prepare, scale_observation, sign_dummy, trim_panel
from .report import render_table
from .synth import SimulationConfig, expected_origin_slope, simulate_panel

__version__ = "0.1.0"
