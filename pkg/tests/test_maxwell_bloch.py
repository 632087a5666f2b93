import dataclasses
import math

import numpy as np
import pandas as pd
import pytest
from scipy.integrate import trapezoid

from errors import ConfigError, DataFileError, EchoTruncatedError, IntegrationError
from maxwell_bloch import (
    TRACE_COLUMNS,
    EchoMetrics,
    SimulationConfig,
    control_profile,
    echo_metrics,
    efficiency_map,
    make_config,
    read_config_file,
    read_grid_dump,
    retrieved_fraction,
    simulate,
    substep_count,
    write_grid_dump,
    write_traces_csv,
)
from sweep_engine import CellStatus
from tests.conftest import FAST


@pytest.fixture(scope="module")
def fast_record():
    return simulate(make_config(**FAST))


def energy(trace, t):
    return float(trapezoid(np.abs(trace) ** 2, t))


def truncated(record, k):
    """The first k samples of a run, as a shorter window would have recorded them"""
    return dataclasses.replace(
        record, t=record.t[:k], input_trace=record.input_trace[:k], output_trace=record.output_trace[:k]
    )


# ────────────────────────────── Control field ──────────────────────────── #
def test_control_profile_flips_at_reversal():
    assert control_profile(200.0, 0.1, 0.5, 0.16) == 100 + 0j
    assert control_profile(200.0, 0.2, 0.5, 0.16) == -100 + 0j
    assert control_profile(200.0, 0.2, 0.5, 0.16, reverse=False) == 100 + 0j
    assert control_profile(200.0, 0.2, 0.0, 0.16) == 0


def test_control_profile_over_the_medium():
    z = np.linspace(0.0, 1.0, 5)
    profile = control_profile(1250.0, 0.0, z, 0.16)
    assert isinstance(profile, np.ndarray)
    np.testing.assert_allclose(profile, 1250.0 * z)


# ────────────────────────────── Config ─────────────────────────────────── #
def test_defaults_describe_the_reference_run():
    config = SimulationConfig()
    assert (config.optical_depth, config.gradient_strength) == (2500.0, 1250.0)
    assert (config.pulse_center, config.reversal_time, config.total_time) == (0.048, 0.16, 0.5)
    assert config.linewidth == pytest.approx(2 * math.pi * 5.75e6)


@pytest.mark.parametrize("values", [
    {"pulse_center": 0.2},
    {"reversal_time": 0.6},
    {"nz": 1},
    {"optical_depth": -5.0},
    {"bogus": 1},
])
def test_bad_configs_are_config_errors(values):
    with pytest.raises(ConfigError):
        make_config(**values)


def test_read_config_file(tmp_path):
    path = tmp_path / "run.txt"
    path.write_text(
        "# fig point\noptical_depth = 300\nprobe_detuning = 100 MHz\nnz = 64\n"
        "reverse_gradient = no\ncontrol_mode = uniform\n",
        encoding="utf-8",
    )
    values = read_config_file(path)
    assert values == {
        "optical_depth": 300.0,
        "probe_detuning": pytest.approx(2 * math.pi * 100e6),
        "nz": 64,
        "reverse_gradient": False,
        "control_mode": "uniform",
    }


@pytest.mark.parametrize("text,lineno", [
    ("nz = 64\nwobble = 3\n", 2),
    ("optical_depth = 300\n\nnz = 6.5\n", 3),
    ("store_full = maybe\n", 1),
    ("probe_detuning = 100\n", 1),
])
def test_config_file_errors_carry_the_line(tmp_path, text, lineno):
    path = tmp_path / "run.txt"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(DataFileError) as info:
        read_config_file(path)
    assert info.value.lineno == lineno


# ────────────────────────────── Step control ───────────────────────────── #
def test_default_grid_needs_no_substeps():
    assert substep_count(SimulationConfig()) == (1, 0)


def test_coarse_time_grid_is_halved():
    assert substep_count(make_config(nt=201)) == (8, 3)


def test_step_controller_gives_up():
    with pytest.raises(IntegrationError) as info:
        substep_count(make_config(nt=201, max_halvings=2))
    assert info.value.z == pytest.approx(1.0)


# ────────────────────────────── Solver ─────────────────────────────────── #
def test_record_shapes(fast_record):
    assert fast_record.t.shape == (FAST["nt"],)
    assert fast_record.z.shape == (FAST["nz"],)
    assert fast_record.probe.shape == (FAST["nt"], FAST["nz"])
    assert fast_record.dt == pytest.approx(0.5 / (FAST["nt"] - 1))
    np.testing.assert_allclose(fast_record.probe[:, 0], fast_record.input_trace)
    np.testing.assert_allclose(fast_record.probe[:, -1], fast_record.output_trace)


def test_zero_probe_gives_no_output():
    record = simulate(make_config(**FAST, probe_amplitude=0.0))
    assert np.all(record.output_trace == 0)
    assert echo_metrics(record) == EchoMetrics(0.0, None, None, None)


def test_response_is_linear_in_the_probe(fast_record):
    scaled = simulate(make_config(**FAST, probe_amplitude=3 * fast_record.config.probe_amplitude))
    np.testing.assert_allclose(
        scaled.output_trace, 3 * fast_record.output_trace, rtol=1e-9, atol=1e-12 * np.max(np.abs(scaled.output_trace))
    )
    assert retrieved_fraction(scaled) == pytest.approx(retrieved_fraction(fast_record), rel=1e-9)


def test_no_output_before_the_pulse_arrives(fast_record):
    config = fast_record.config
    early = fast_record.t < config.pulse_center - 5 * config.pulse_width
    assert np.max(np.abs(fast_record.output_trace[early])) < 1e-6 * np.max(np.abs(fast_record.input_trace))


def test_shorter_window_reproduces_the_start_of_a_longer_one(fast_record):
    short = simulate(make_config(**{**FAST, "total_time": 0.25, "nt": 401}))
    reference = fast_record.output_trace[:401]
    np.testing.assert_allclose(short.output_trace, reference, rtol=1e-7, atol=1e-9 * np.max(np.abs(reference)))


def test_medium_is_passive(fast_record):
    assert energy(fast_record.output_trace, fast_record.t) <= 1.001 * energy(fast_record.input_trace, fast_record.t)


def test_input_fwhm_matches_the_gaussian(fast_record):
    metrics = echo_metrics(fast_record, check_truncation=False)
    expected = 2 * fast_record.config.pulse_width * math.sqrt(math.log(2) / 2)
    assert metrics.input_fwhm == pytest.approx(expected, rel=0.02)


def test_reversal_is_what_retrieves_the_echo(fast_record):
    held = simulate(make_config(**FAST, reverse_gradient=False))
    assert retrieved_fraction(held) < retrieved_fraction(fast_record)


def test_echo_cut_off_by_the_window_is_an_error(fast_record):
    after = fast_record.t >= fast_record.config.reversal_time
    peak = int(np.flatnonzero(after)[np.argmax(np.abs(fast_record.output_trace[after]))])
    assert peak > int(np.flatnonzero(after)[0]) + 1

    cut = truncated(fast_record, peak + 1)
    with pytest.raises(EchoTruncatedError):
        echo_metrics(cut)
    assert echo_metrics(cut, check_truncation=False).efficiency > 0


def test_metrics_stay_in_range(fast_record):
    metrics = echo_metrics(fast_record, check_truncation=False)
    assert 0.0 < metrics.efficiency <= 1.001
    assert metrics.echo_center > fast_record.config.reversal_time


# ────────────────────────────── Export ─────────────────────────────────── #
def test_traces_csv(tmp_path, fast_record):
    frame = pd.read_csv(write_traces_csv(fast_record, tmp_path / "traces.csv"))
    assert list(frame.columns) == TRACE_COLUMNS
    assert len(frame) == FAST["nt"]
    np.testing.assert_allclose(frame["abs2_out"], np.abs(fast_record.output_trace) ** 2, rtol=1e-12)


def test_grid_dump_round_trip(tmp_path, fast_record):
    path = write_grid_dump(fast_record, tmp_path / "grid.bin")
    assert path.stat().st_size == 64 + 8 * FAST["nt"] * FAST["nz"]
    info, data = read_grid_dump(path)
    assert (info["nt"], info["nz"]) == (FAST["nt"], FAST["nz"])
    assert info["dt"] == fast_record.dt
    assert info["dz"] == fast_record.dz
    np.testing.assert_allclose(data, fast_record.probe, rtol=0, atol=1e-6 * np.max(np.abs(fast_record.probe)))


def test_grid_dump_needs_the_full_field(tmp_path):
    record = simulate(make_config(**FAST, store_full=False))
    assert record.probe is None
    with pytest.raises(ConfigError):
        write_grid_dump(record, tmp_path / "grid.bin")


@pytest.mark.parametrize("payload", [b"NOTAGRID" + bytes(56), b"short"])
def test_reading_a_foreign_file_fails(tmp_path, payload):
    path = tmp_path / "grid.bin"
    path.write_bytes(payload)
    with pytest.raises(ConfigError):
        read_grid_dump(path)


# ────────────────────────────── Efficiency map ─────────────────────────── #
def test_efficiency_map_cell_is_one_simulation(fast_config, fast_record):
    result = efficiency_map((200.0, 200.0), (200.0, 200.0), (1, 1), base_config=fast_config)
    assert result.value_name == "R"
    assert result.values[0, 0] == pytest.approx(retrieved_fraction(fast_record), rel=1e-12)


def test_small_efficiency_map(fast_config):
    result = efficiency_map((100.0, 300.0), (150.0, 250.0), (2, 2), base_config=fast_config)
    assert result.count(CellStatus.DONE) == 4
    assert np.all((result.values >= 0) & (result.values <= 1.001))


def test_efficiency_map_rejects_non_positive_ranges(fast_config):
    with pytest.raises(ConfigError):
        efficiency_map((0.0, 300.0), (150.0, 250.0), (2, 2), base_config=fast_config)


# ────────────────────────────── Reference run ──────────────────────────── #
@pytest.fixture(scope="module")
def reference_record():
    return simulate(SimulationConfig())


@pytest.mark.slow
def test_reference_echo(reference_record):
    config = reference_record.config
    metrics = echo_metrics(reference_record)
    assert metrics.echo_center == pytest.approx(2 * config.reversal_time - config.pulse_center, abs=0.02)
    assert 0.26 <= metrics.echo_center <= 0.29
    assert 0.70 <= metrics.efficiency <= 0.85
    assert metrics.echo_fwhm == pytest.approx(metrics.input_fwhm, rel=0.2)


@pytest.mark.slow
def test_reference_point_without_reversal_retrieves_little():
    held = simulate(SimulationConfig(reverse_gradient=False, store_full=False))
    assert retrieved_fraction(held) < 0.05


@pytest.mark.slow
@pytest.mark.parametrize("xi", [2250.0, 2500.0, 2750.0])
@pytest.mark.parametrize("zeta", [1125.0, 1250.0, 1375.0])
def test_echo_time_near_the_reference_point(xi, zeta):
    config = make_config(optical_depth=xi, gradient_strength=zeta, store_full=False)
    metrics = echo_metrics(simulate(config), check_truncation=False)
    assert metrics.echo_center == pytest.approx(2 * config.reversal_time - config.pulse_center, abs=0.02)


@pytest.mark.slow
def test_reference_efficiency_converges(reference_record):
    fine = simulate(SimulationConfig(nz=1024, nt=4001, store_full=False))
    assert retrieved_fraction(fine) == pytest.approx(retrieved_fraction(reference_record), rel=0.01)


@pytest.mark.slow
def test_efficiency_map_over_the_full_window():
    result = efficiency_map((100.0, 4000.0), (100.0, 2500.0), (6, 6), workers=4)
    assert result.count(CellStatus.DONE) == 36
    assert np.all((result.values >= 0) & (result.values <= 1.001))
