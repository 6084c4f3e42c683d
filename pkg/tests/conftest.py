import numpy as np
import pytest

from asiaudit.panel import build_panel
from asiaudit.synth import SimulationConfig, simulate_panel


@pytest.fixture
def flow_csv(tmp_path):
    def _write(text, name="panel.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture(scope="session")
def mixed_panel():
    return simulate_panel(SimulationConfig(n_firms=200, n_years=6, seed=42, rest_mode="mixed", rest_scale=0.5))


@pytest.fixture
def worked_example_panel():
    # invest 5, cash flow 7, rest -2, opening assets 100
    return build_panel(
        {
            "firm_id": np.array(["A"]),
            "year": np.array([2001]),
            "total_assets": np.array([105.0]),
            "investment": np.array([5.0]),
            "cash_flow": np.array([7.0]),
            "d_total_assets": np.array([5.0]),
        },
        provenance="worked-example",
    )


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
