import pytest

from sweep_engine import ParamGrid, run_sweep
from ui_components import EnhancedConsole, threshold_report


def wavy(x, y):
    return x * y


@pytest.fixture
def result():
    grid = ParamGrid.from_ranges("xi", (0.0, 1.0), 3, "zeta", (0.0, 1.0), 3)
    return run_sweep(grid, wavy, value_name="R", levels=(0.5,))


def test_threshold_report(result):
    assert threshold_report(result, 0.9) == "1 cell(s) reach 0.9"
    assert threshold_report(result, 2.0) == "no cell reaches 2 (best 1.0000)"


def test_threshold_report_without_finished_cells():
    grid = ParamGrid("xi", "zeta", [0.0, 1.0], [0.0, 1.0])
    failed = run_sweep(grid, lambda x, y: 1 / 0)
    assert threshold_report(failed, 0.9) == "no finished cells"


def test_sweep_summary_lists_counts_and_extremes(result, capsys):
    EnhancedConsole().print_sweep_summary(result, extra={"R > 0.9": threshold_report(result, 0.9)})
    out = capsys.readouterr().out
    assert "done" in out
    assert "zeta=1" in out
    assert "1 cell(s) reach 0.9" in out


def test_frequency_values_are_shown_in_hz(capsys):
    grid = ParamGrid("lambda_m", "intensity_W_m2", [1e-6], [1e13])
    result = run_sweep(grid, lambda x, y: 2 * 3.141592653589793 * 1.5e9, value_name="value_rad_s")
    EnhancedConsole().print_sweep_summary(result, unit="rad/s")
    assert "1.5 GHz" in capsys.readouterr().out
