import numpy as np
import pandas as pd
import pytest

from errors import CheckpointError, ConfigError, UndefinedCellError
from evaluators.bandwidth import BandwidthEvaluator
from sweep_engine import (
    CellStatus,
    ParamGrid,
    extract_contours,
    failures_path,
    run_sweep,
    write_contours_csv,
    write_failures_csv,
    write_values_csv,
)


def plane(x, y):
    return 2.0 * x + 3.0 * y


def log_of_y(x, y):
    return float(np.log10(y))


class Interrupted(BaseException):
    """Stands in for a SIGINT in the middle of a sweep"""


class CountingEvaluator:
    def __init__(self, fail_after=None):
        self.calls = 0
        self.fail_after = fail_after

    def __call__(self, x, y):
        self.calls += 1
        if self.fail_after is not None and self.calls > self.fail_after:
            raise Interrupted()
        return plane(x, y)


def small_grid(nx=4, ny=5):
    return ParamGrid.from_ranges("x", (0.0, 1.0), nx, "y", (10.0, 20.0), ny)


# ────────────────────────────── Grids ──────────────────────────────── #
def test_single_cell_grid():
    grid = ParamGrid.from_ranges("x", (1.0, 1.0), 1, "y", (2.0, 2.0), 1)
    result = run_sweep(grid, plane, levels=(5.0,))
    assert result.values.tolist() == [[8.0]]
    assert result.contours == {}
    assert result.count(CellStatus.DONE) == 1


@pytest.mark.parametrize("kwargs", [
    {"x_range": (1.0, 1.0), "nx": 3},
    {"x_range": (1.0, 2.0), "nx": 1},
    {"x_range": (1.0, 2.0), "nx": 0},
    {"x_range": (-1.0, 2.0), "nx": 3, "x_spacing": "log"},
    {"x_range": (1.0, 2.0), "nx": 3, "x_spacing": "cubic"},
])
def test_bad_ranges_are_config_errors(kwargs):
    with pytest.raises(ConfigError):
        ParamGrid.from_ranges(
            "x", kwargs["x_range"], kwargs["nx"], "y", (0.0, 1.0), 2, x_spacing=kwargs.get("x_spacing", "linear")
        )


def test_axes_must_be_monotone():
    with pytest.raises(ConfigError):
        ParamGrid("x", "y", [1.0, 3.0, 2.0], [1.0])


def test_cells_run_x_outer():
    assert list(small_grid(2, 2).indices()) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_values_frame_is_row_major(tmp_path):
    result = run_sweep(small_grid(2, 3), plane)
    path = write_values_csv(result, tmp_path / "values.csv")
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["x", "y", "value"]
    assert frame["x"].tolist() == [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
    assert frame["value"].tolist() == pytest.approx([plane(x, y) for x, y in zip(frame["x"], frame["y"])])


# ────────────────────────────── Cell states ────────────────────────── #
def poisoned(x, y):
    if x == 1.0 and y == 10.0:
        raise ValueError("poisoned cell")
    return plane(x, y)


def masked_corner(x, y):
    if x == 0.0 and y == 10.0:
        raise UndefinedCellError("undefined here")
    return plane(x, y)


def test_failing_cell_does_not_stop_the_sweep(tmp_path):
    result = run_sweep(small_grid(), poisoned)
    assert result.grid.status[3, 0] == CellStatus.FAILED.value
    assert np.isnan(result.values[3, 0])
    assert result.count(CellStatus.DONE) == 19
    assert "ValueError: poisoned cell" in result.failures[(3, 0)]

    frame = pd.read_csv(write_failures_csv(result, tmp_path / "failures.csv"))
    assert frame.to_dict("records") == [{"i": 3, "j": 0, "error": "ValueError: poisoned cell"}]


def test_undefined_cell_is_masked_not_failed():
    result = run_sweep(small_grid(), masked_corner)
    assert result.grid.status[0, 0] == CellStatus.MASKED.value
    assert result.count(CellStatus.MASKED) == 1
    assert not result.failures


def test_non_finite_value_fails_the_cell():
    result = run_sweep(small_grid(2, 2), lambda x, y: float("inf") if x == 0.0 else 1.0)
    assert result.count(CellStatus.FAILED) == 2
    assert "non-finite" in result.failures[(0, 0)]


def test_extreme_cells_skip_undone_cells():
    result = run_sweep(small_grid(), poisoned)
    value, x, y = result.max_cell()
    assert (value, x, y) == (plane(1.0, 20.0), 1.0, 20.0)
    assert result.min_cell() == (plane(0.0, 10.0), 0.0, 10.0)


# ────────────────────────────── Checkpoints ────────────────────────── #
def test_interrupted_sweep_resumes_without_repeating_cells(tmp_path):
    reference_dir = tmp_path / "reference"
    resumed_dir = tmp_path / "resumed"
    reference_dir.mkdir()
    resumed_dir.mkdir()

    reference = run_sweep(small_grid(), plane, checkpoint_path=reference_dir / "checkpoint.csv")
    write_values_csv(reference, reference_dir / "values.csv")

    checkpoint = resumed_dir / "checkpoint.csv"
    with pytest.raises(Interrupted):
        run_sweep(small_grid(), CountingEvaluator(fail_after=10), checkpoint_path=checkpoint, checkpoint_every=3)
    saved = pd.read_csv(checkpoint)
    assert (saved["status"] == "done").sum() == 9
    assert sorted(p.name for p in resumed_dir.iterdir()) == ["checkpoint.csv"]

    counter = CountingEvaluator()
    resumed = run_sweep(small_grid(), counter, checkpoint_path=checkpoint, checkpoint_every=3)
    assert counter.calls == 11
    write_values_csv(resumed, resumed_dir / "values.csv")

    assert (resumed_dir / "values.csv").read_bytes() == (reference_dir / "values.csv").read_bytes()
    assert checkpoint.read_bytes() == (reference_dir / "checkpoint.csv").read_bytes()


def test_finished_checkpoint_needs_no_evaluations(tmp_path):
    checkpoint = tmp_path / "checkpoint.csv"
    run_sweep(small_grid(), plane, checkpoint_path=checkpoint)
    counter = CountingEvaluator()
    run_sweep(small_grid(), counter, checkpoint_path=checkpoint)
    assert counter.calls == 0


def test_failed_cells_are_retried_on_resume(tmp_path):
    checkpoint = tmp_path / "checkpoint.csv"
    first = run_sweep(small_grid(), poisoned, checkpoint_path=checkpoint)
    assert failures_path(checkpoint).exists()
    assert first.count(CellStatus.FAILED) == 1

    counter = CountingEvaluator()
    second = run_sweep(small_grid(), counter, checkpoint_path=checkpoint)
    assert counter.calls == 1
    assert second.count(CellStatus.DONE) == 20


def test_failure_log_is_cleared_once_every_cell_succeeds(tmp_path):
    checkpoint = tmp_path / "checkpoint.csv"
    first = run_sweep(small_grid(), poisoned, checkpoint_path=checkpoint)
    assert first.failures
    assert len(pd.read_csv(failures_path(checkpoint))) == 1

    second = run_sweep(small_grid(), plane, checkpoint_path=checkpoint)
    assert second.failures == {}
    assert not failures_path(checkpoint).exists()


def test_restart_ignores_the_checkpoint(tmp_path):
    checkpoint = tmp_path / "checkpoint.csv"
    run_sweep(small_grid(), plane, checkpoint_path=checkpoint)
    counter = CountingEvaluator()
    run_sweep(small_grid(), counter, checkpoint_path=checkpoint, restart=True)
    assert counter.calls == 20


def test_checkpoint_for_another_grid_is_rejected(tmp_path):
    checkpoint = tmp_path / "checkpoint.csv"
    run_sweep(small_grid(), plane, checkpoint_path=checkpoint)
    other = ParamGrid.from_ranges("x", (0.0, 2.0), 4, "y", (10.0, 20.0), 5)
    with pytest.raises(CheckpointError):
        run_sweep(other, plane, checkpoint_path=checkpoint)


@pytest.mark.parametrize("content", [
    "not,a,checkpoint\n1,2,3\n",
    "x,y,value,status\n0.0,10.0,1.0,done\n",
    "",
])
def test_corrupted_checkpoint_is_rejected(tmp_path, content):
    checkpoint = tmp_path / "checkpoint.csv"
    checkpoint.write_text(content, encoding="utf-8")
    with pytest.raises(CheckpointError):
        run_sweep(small_grid(), plane, checkpoint_path=checkpoint)


def test_checkpoint_with_unknown_state_is_rejected(tmp_path):
    checkpoint = tmp_path / "checkpoint.csv"
    run_sweep(small_grid(), plane, checkpoint_path=checkpoint)
    frame = pd.read_csv(checkpoint, float_precision="round_trip")
    frame.loc[0, "status"] = "exploded"
    frame.to_csv(checkpoint, index=False)
    with pytest.raises(CheckpointError):
        run_sweep(small_grid(), plane, checkpoint_path=checkpoint)


def test_progress_reports_every_cell():
    seen = []
    run_sweep(small_grid(2, 2), plane, progress=lambda done, total: seen.append((done, total)))
    assert seen == [(1, 4), (2, 4), (3, 4), (4, 4)]


def test_worker_pool_matches_in_process_run():
    def grid():
        return ParamGrid.from_ranges("lambda_m", (900e-9, 1100e-9), 3, "intensity_W_m2", (1e12, 1e14), 2,
                                     y_spacing="log")

    serial = run_sweep(grid(), BandwidthEvaluator(), workers=1)
    parallel = run_sweep(grid(), BandwidthEvaluator(), workers=2)
    assert np.array_equal(serial.values, parallel.values)
    assert np.array_equal(serial.grid.status, parallel.grid.status)


# ────────────────────────────── Contours ───────────────────────────── #
def test_contour_vertices_lie_on_the_level():
    grid = ParamGrid.from_ranges("x", (0.0, 1.0), 5, "y", (10.0, 20.0), 5)
    result = run_sweep(grid, plane, levels=(45.0,))
    segments = result.contours[45.0]
    assert len(segments) == 1
    for x, y in segments[0]:
        assert plane(x, y) == pytest.approx(45.0, abs=1e-9)


def test_log_axis_is_contoured_in_log_space():
    grid = ParamGrid.from_ranges("x", (0.0, 1.0), 3, "y", (1e12, 1e15), 4, y_spacing="log")
    result = run_sweep(grid, log_of_y, levels=(13.5,))
    points = np.vstack(result.contours[13.5])
    np.testing.assert_allclose(points[:, 1], 10 ** 13.5, rtol=1e-9)


def test_level_outside_the_data_has_no_segments():
    result = run_sweep(small_grid(), plane, levels=(1e6,))
    assert result.contours[1e6] == []


def test_masked_cells_are_left_out_of_contours():
    result = run_sweep(small_grid(), masked_corner, levels=(40.0,))
    for polyline in result.contours[40.0]:
        assert np.all(np.isfinite(polyline))


def test_contours_need_a_2x2_grid():
    result = run_sweep(ParamGrid("x", "y", [0.0, 1.0], [5.0]), plane)
    with pytest.raises(ConfigError):
        extract_contours(result, [1.0])


def test_contours_csv_layout(tmp_path):
    result = run_sweep(small_grid(), plane, levels=(40.0, 45.0))
    frame = pd.read_csv(write_contours_csv(result, tmp_path / "contours.csv"))
    assert list(frame.columns) == ["level", "segment_id", "x", "y"]
    assert sorted(frame["level"].unique()) == [40.0, 45.0]
    assert frame["segment_id"].nunique() == sum(len(v) for v in result.contours.values())
