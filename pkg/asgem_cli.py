#!/usr/bin/env python3
"""
ASGEM Command Line Interface
-----------------------------------------
Command-line front end for the ac-Stark gradient echo memory simulator:
 ▸ wigner    exact 3j / 6j symbols
 ▸ stark     ground-state light shifts, memory bandwidth and scattering at one point
 ▸ map       checkpointed 2-D sweeps with iso-level contours
 ▸ simulate  one Maxwell-Bloch gradient echo run
"""

import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import click
import pandas as pd
from dotenv import load_dotenv
from pydantic import ValidationError

from angular_momentum import HalfInt, wigner_3j, wigner_6j
from atomic_data import AtomicLine, load_line, load_line_file
from errors import (
    EXIT_USAGE,
    AngularMomentumError,
    ASGEMError,
    ConfigError,
    EchoTruncatedError,
    OutputConflictError,
    UnitError,
    exit_code_for,
)
from evaluator_registry import get_evaluator_registry
from manifest import MANIFEST_NAME, RunManifest
from maxwell_bloch import (
    echo_metrics,
    efficiency_map,
    make_config,
    read_config_file,
    simulate,
    write_grid_dump,
    write_traces_csv,
)
from stark import (
    ANCHOR_INTENSITY,
    ANCHOR_WAVELENGTH,
    StarkBeam,
    anchor_in_window,
    bandwidth_map,
    ground_state_shift,
    memory_bandwidth,
    scattering_estimate,
    scattering_map,
    scattering_rate,
)
from sweep_engine import (
    atomic_write_csv,
    failures_path,
    write_contours_csv,
    write_failures_csv,
    write_values_csv,
)
from ui_components import EnhancedConsole, threshold_report, ui
from units import format_frequency, parse_quantity, parse_range

logger = logging.getLogger(__name__)

# Load environment variables from .env file
load_dotenv()

# ────────────────────────────── 0. Config ────────────────────────────── #
CONFIG = {
    "wigner_digits": 15,
    "grid": "20x20",
    "checkpoint_every": 10,
    "efficiency_threshold": 0.9,
}

COMMANDS = {
    "wigner": "Wigner 3j/6j symbol, e.g. `asgem wigner 3j 1 1 0 0 0 0`",
    "stark": "Light shifts, Delta_bw and Gamma_sc at one wavelength/intensity",
    "map": "Sweep stark-bw, stark-scatter or efficiency over a 2-D grid",
    "simulate": "One gradient echo run: traces CSV, R, echo centre and width",
}

OUTPUT_FILES = {
    "values": "values.csv",
    "contours": "contours.csv",
    "failures": "failures.csv",
    "checkpoint": "checkpoint.csv",
    "shifts": "shifts.csv",
    "traces": "traces.csv",
    "grid": "grid.bin",
}

# simulation option -> SimulationConfig field
SIMULATION_FLAGS = {
    "xi": "optical_depth",
    "zeta": "gradient_strength",
    "t_rev": "reversal_time",
    "t_max": "total_time",
    "t0": "pulse_center",
    "kappa": "pulse_width",
    "nz": "nz",
    "nt": "nt",
    "probe_amp": "probe_amplitude",
    "delta_p": "probe_detuning",
    "delta_c": "control_detuning",
    "gamma": "decoherence",
    "linewidth": "linewidth",
    "control_mode": "control_mode",
    "control_rabi": "control_rabi",
    "max_halvings": "max_halvings",
}

err_ui = EnhancedConsole(stderr=True)


# ────────────────────────────── 1. Parameter types ───────────────────── #
class Quantity(click.ParamType):
    """A number with a unit, converted to SI; `lo:hi` when as_range is set"""

    def __init__(self, kind: str, as_range: bool = False):
        self.kind = kind
        self.as_range = as_range
        self.name = f"{kind} range" if as_range else kind

    def convert(self, value, param, ctx):
        if not isinstance(value, str):
            return value
        try:
            return parse_range(value, self.kind) if self.as_range else parse_quantity(value, self.kind)
        except UnitError as e:
            self.fail(str(e), param, ctx)


class GridShape(click.ParamType):
    name = "NxM"

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            nx, ny = (int(part) for part in value.lower().split("x"))
        except ValueError:
            self.fail(f"grid must look like NxM, got {value!r}", param, ctx)
        if nx < 1 or ny < 1:
            self.fail(f"grid dimensions must be >= 1, got {value!r}", param, ctx)
        return nx, ny


class ASGEMGroup(click.Group):
    """Maps simulator exceptions onto the documented exit codes"""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except ASGEMError as e:
            err_ui.print_error(str(e))
            ctx.exit(exit_code_for(e))
        except ValidationError as e:
            err_ui.print_error("invalid arguments", details=str(e))
            ctx.exit(EXIT_USAGE)


# ────────────────────────────── 2. Helpers ───────────────────────────── #
def configure_logging(verbosity: int) -> None:
    """WARNING by default, INFO with -v, DEBUG with -vv; ASGEM_LOG_LEVEL wins"""
    level_name = os.getenv("ASGEM_LOG_LEVEL") or {0: "WARNING", 1: "INFO"}.get(verbosity, "DEBUG")
    level = logging.getLevelName(level_name.upper())
    if not isinstance(level, int):
        level = logging.WARNING

    try:
        from rich.console import Console
        from rich.logging import RichHandler
        handler: logging.Handler = RichHandler(console=Console(stderr=True), show_path=False)
        fmt = "%(message)s"
    except ImportError:
        handler = logging.StreamHandler(sys.stderr)
        fmt = "%(levelname)s %(name)s: %(message)s"
    logging.basicConfig(level=level, format=fmt, datefmt="[%X]", handlers=[handler], force=True)


def prepare_out_dir(out: Path, force: bool = False, resume: bool = False) -> None:
    """
    Make sure `out` may receive results

    Raises:
        OutputConflictError: out holds earlier results and neither --force nor a
            resumable --resume was given
    """
    if out.exists() and not out.is_dir():
        raise OutputConflictError(f"{out} exists and is not a directory")
    if out.exists() and any(out.iterdir()) and not force:
        if not (resume and (out / OUTPUT_FILES["checkpoint"]).exists()):
            hint = "no checkpoint to resume from; use --force" if resume else "use --resume or --force"
            raise OutputConflictError(f"output directory {out} already holds results ({hint})")
    out.mkdir(parents=True, exist_ok=True)


def resolve_lines(options: Dict[str, Any]) -> Tuple[AtomicLine, Tuple[AtomicLine, ...]]:
    if options["line_file"]:
        line = load_line_file(options["line_file"])
    else:
        line = load_line(options["species"], options["line"])
    extra = [load_line(options["species"], label) for label in options["extra_line"]]
    extra += [load_line_file(path) for path in options["extra_line_file"]]
    return line, tuple(extra)


def line_manifest(options: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "species": options["species"],
        "line": options["line"],
        "line_file": str(options["line_file"]) if options["line_file"] else None,
        "extra_line": list(options["extra_line"]),
        "extra_line_file": [str(p) for p in options["extra_line_file"]],
        "polarization": options["polarization"],
        "counter_rotating": options["counter_rotating"],
    }


def load_simulation_file(path: Path) -> Dict[str, Any]:
    """A `key = value unit` file, or the manifest.json of an earlier run"""
    path = Path(path)
    if path.suffix.lower() == ".json" or path.is_dir():
        config = RunManifest.load(path).config
        values = config.get("simulation", config)
        if not isinstance(values, dict):
            raise ConfigError(f"{path} holds no simulation config")
        return dict(values)
    return read_config_file(path)


def simulation_values(options: Dict[str, Any], skip: Sequence[str] = ()) -> Dict[str, Any]:
    """Merge defaults < --config file < flags into SimulationConfig keyword values"""
    values: Dict[str, Any] = {}
    if options.get("config"):
        values.update(load_simulation_file(options["config"]))
    for flag, field in SIMULATION_FLAGS.items():
        if flag in skip:
            continue
        if options.get(flag) is not None:
            values[field] = options[flag]
    if options.get("no_reversal"):
        values["reverse_gradient"] = False
    return values


def line_options(command):
    """Atomic-line options shared by stark and map"""
    decorators = [
        click.option("--species", default="rb87", show_default=True, help="Species name."),
        click.option("--line", default="D1", show_default=True, help="Line label."),
        click.option("--line-file", type=click.Path(exists=True, dir_okay=False, path_type=Path),
                     help="Data file describing the line."),
        click.option("--extra-line", multiple=True, metavar="LABEL",
                     help="Add another line of the same species, e.g. D2."),
        click.option("--extra-line-file", multiple=True,
                     type=click.Path(exists=True, dir_okay=False, path_type=Path),
                     help="Add another line from a data file."),
        click.option("--polarization", type=click.IntRange(-1, 1), default=0, show_default=True,
                     help="q of the Stark beam."),
        click.option("--counter-rotating", is_flag=True, help="Include the -1/(omega_l + omega) term."),
    ]
    for decorator in reversed(decorators):
        command = decorator(command)
    return command


def simulation_options(with_axes: bool = True):
    """Physics and grid overrides shared by simulate and map efficiency"""
    def apply(command):
        decorators = []
        if with_axes:
            decorators += [
                click.option("--xi", type=float, help="Optical depth (default 2500)."),
                click.option("--zeta", type=float, help="Gradient strength (default 1250)."),
            ]
        decorators += [
            click.option("--t-rev", type=float, help="Reversal time in tau (default 0.16)."),
            click.option("--t-max", type=float, help="Window length in tau (default 0.5)."),
            click.option("--t0", type=float, help="Input pulse centre in tau (default 0.048)."),
            click.option("--kappa", type=float, help="Input pulse width in tau (default 0.005)."),
            click.option("--nz", type=int, help="Spatial nodes (default 512)."),
            click.option("--nt", type=int, help="Output time samples (default 2001)."),
            click.option("--probe-amp", type=Quantity("frequency"), help="Peak probe Rabi frequency, e.g. 5kHz."),
            click.option("--delta-p", type=Quantity("frequency"), help="Probe detuning, e.g. 200MHz."),
            click.option("--delta-c", type=Quantity("frequency"), help="Control detuning, e.g. 50MHz."),
            click.option("--gamma", type=Quantity("frequency"), help="Ground coherence decay rate."),
            click.option("--linewidth", type=Quantity("frequency"), help="Natural linewidth Gamma."),
            click.option("--control-mode", type=click.Choice(["gradient", "uniform"])),
            click.option("--control-rabi", type=Quantity("frequency"), help="Rabi frequency of the uniform control."),
            click.option("--max-halvings", type=int, help="Allowed time-step halvings (default 12)."),
            click.option("--no-reversal", is_flag=True, help="Keep the gradient sign fixed."),
            click.option("--config", type=click.Path(exists=True, path_type=Path),
                         help="key = value config file or manifest.json to start from."),
        ]
        for decorator in reversed(decorators):
            command = decorator(command)
        return command
    return apply


# ────────────────────────────── 3. Commands ──────────────────────────── #
@click.group(cls=ASGEMGroup, invoke_without_command=True, context_settings={"help_option_names": ["-h", "--help"]})
@click.option("-v", "--verbose", count=True, help="-v for INFO, -vv for DEBUG logging.")
@click.pass_context
def cli(ctx: click.Context, verbose: int):
    """ac-Stark gradient echo memory simulator"""
    configure_logging(verbose)
    if ctx.invoked_subcommand is None:
        ui.print_help(COMMANDS)


@cli.command(context_settings={"ignore_unknown_options": True})
@click.argument("kind", type=click.Choice(["3j", "6j"]))
@click.argument("values", nargs=-1, type=click.UNPROCESSED)
def wigner(kind: str, values: Tuple[str, ...]):
    """Print a Wigner 3j or 6j symbol; arguments like 1, -1/2 or 3/2"""
    if len(values) != 6:
        raise click.UsageError(f"wigner {kind} takes 6 arguments, got {len(values)}")
    try:
        args = [HalfInt.of(text) for text in values]
    except AngularMomentumError as e:
        raise click.BadParameter(str(e), param_hint="VALUES")

    symbol = wigner_3j if kind == "3j" else wigner_6j
    click.echo(f"{symbol(*args):.{CONFIG['wigner_digits']}g}")


@cli.command()
@click.option("--wavelength", type=Quantity("length"), required=True, help="Stark beam wavelength, e.g. 1064nm.")
@click.option("--intensity", type=Quantity("intensity"), required=True, help="Intensity in W/m2, e.g. 5e13.")
@line_options
@click.option("--out", type=click.Path(file_okay=False, path_type=Path),
              help="Directory for shifts.csv and manifest.json.")
@click.option("--force", is_flag=True, help="Overwrite an existing output directory.")
def stark(wavelength: float, intensity: float, out: Optional[Path], force: bool, **options):
    """Ground-state light shifts, memory bandwidth and scattering at one point"""
    line, extra = resolve_lines(options)
    beam = StarkBeam(wavelength=wavelength, intensity=intensity, polarization=options["polarization"])
    physics = {"extra_lines": extra, "counter_rotating": options["counter_rotating"]}

    shift = ground_state_shift(beam, line, **physics)
    scattering = scattering_rate(beam, line, **physics)
    estimate = scattering_estimate(shift, line) if shift.detuning else None
    bandwidth = memory_bandwidth(shift)

    ui.print_shift_table(shift, scattering)
    ui.print_bandwidth(bandwidth, shift.detuning)
    ui.print(f"Max Gamma_sc/2pi = {format_frequency(scattering.max_rate)}")
    if estimate is not None:
        ui.print(f"Two-level estimate (Gamma/Delta)*|shift|: max {format_frequency(estimate.max_rate)}")

    if out is None:
        return
    prepare_out_dir(out, force=force)
    frame = pd.DataFrame({
        "F": [str(state.F) for state in shift.states],
        "m_F": [str(state.m_F) for state in shift.states],
        "shift_rad_s": shift.shifts,
        "gamma_sc_rad_s": scattering.rates,
        "gamma_sc_estimate_rad_s": estimate.rates if estimate is not None else 0.0,
    })
    atomic_write_csv(frame, out / OUTPUT_FILES["shifts"])
    RunManifest(
        command="stark",
        config={
            "wavelength_m": wavelength,
            "intensity_W_m2": intensity,
            **line_manifest(options),
            "bandwidth_rad_s": bandwidth.bandwidth,
            "max_gamma_sc_rad_s": scattering.max_rate,
        },
        outputs=[OUTPUT_FILES["shifts"]],
    ).write(out)
    ui.print_success(f"Wrote {out / OUTPUT_FILES['shifts']}")


@cli.command("map")
@click.argument("kind", type=click.Choice(get_evaluator_registry().list_evaluators()))
@click.option("--wavelength", "wavelength_range", type=Quantity("length", as_range=True),
              help="lo:hi, e.g. 850nm:1200nm (linear).")
@click.option("--intensity", "intensity_range", type=Quantity("intensity", as_range=True),
              help="lo:hi in W/m2 (log-spaced).")
@click.option("--xi", "xi_range", type=Quantity("dimensionless", as_range=True), help="lo:hi optical depth.")
@click.option("--zeta", "zeta_range", type=Quantity("dimensionless", as_range=True), help="lo:hi gradient strength.")
@click.option("--grid", type=GridShape(), default=CONFIG["grid"], show_default=True)
@click.option("--levels", help="Comma-separated contour levels, e.g. 1GHz or 0.9.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True, help="Output directory.")
@click.option("--workers", type=click.IntRange(min=1), default=1, envvar="ASGEM_WORKERS", show_default=True,
              help="Worker processes (env ASGEM_WORKERS).")
@click.option("--checkpoint-every", type=click.IntRange(min=1), default=CONFIG["checkpoint_every"],
              show_default=True, help="Cells between checkpoint writes.")
@click.option("--resume", is_flag=True, help="Continue from checkpoint.csv in --out.")
@click.option("--restart", is_flag=True, help="Ignore an existing checkpoint.")
@click.option("--force", is_flag=True, help="Overwrite an existing output directory.")
@click.option("--quiet", is_flag=True, help="No progress bar.")
@line_options
@simulation_options(with_axes=False)
def map_command(kind: str, wavelength_range, intensity_range, xi_range, zeta_range, grid, levels, out: Path,
                workers: int, checkpoint_every: int, resume: bool, restart: bool, force: bool, quiet: bool,
                **options):
    """Sweep a map over a 2-D grid, with checkpoints and contours"""
    schema = get_evaluator_registry().get_evaluator_info(kind)["axis_schema"]
    is_stark = kind.startswith("stark")

    if is_stark:
        if xi_range or zeta_range:
            raise ConfigError("--xi/--zeta are the axes of the efficiency map; use --wavelength/--intensity")
        x_range = wavelength_range or schema["x"]["default"]
        y_range = intensity_range or schema["y"]["default"]
    else:
        if wavelength_range or intensity_range:
            raise ConfigError("--wavelength/--intensity are the axes of the Stark maps; use --xi/--zeta")
        x_range = xi_range or schema["x"]["default"]
        y_range = zeta_range or schema["y"]["default"]

    if levels:
        level_kind = "frequency" if is_stark else "dimensionless"
        contour_levels = tuple(parse_quantity(part, level_kind) for part in levels.split(",") if part.strip())
    else:
        contour_levels = tuple(schema["value"].get("levels", ()))

    prepare_out_dir(out, force=force, resume=resume)
    sweep_options = {
        "levels": contour_levels,
        "checkpoint_path": out / OUTPUT_FILES["checkpoint"],
        "workers": workers,
        "checkpoint_every": checkpoint_every,
        "restart": restart or force,
    }
    config: Dict[str, Any] = {
        "kind": kind,
        "x_name": schema["x"]["name"],
        "x_range": list(x_range),
        "y_name": schema["y"]["name"],
        "y_range": list(y_range),
        "grid": list(grid),
        "levels": list(contour_levels),
        "workers": workers,
        "checkpoint_every": checkpoint_every,
    }

    with ui.sweep_progress(f"map {kind}", enabled=not quiet) as progress:
        if is_stark:
            line, extra = resolve_lines(options)
            config.update(line_manifest(options))
            runner = bandwidth_map if kind == "stark-bw" else scattering_map
            result = runner(
                x_range, y_range, grid,
                polarization=options["polarization"], line=line, extra_lines=extra,
                counter_rotating=options["counter_rotating"], progress=progress, **sweep_options,
            )
        else:
            base = make_config(**simulation_values(options, skip=("xi", "zeta")))
            config["simulation"] = base.model_dump()
            result = efficiency_map(x_range, y_range, grid, base_config=base, progress=progress, **sweep_options)

    write_values_csv(result, out / OUTPUT_FILES["values"])
    write_contours_csv(result, out / OUTPUT_FILES["contours"])
    write_failures_csv(result, out / OUTPUT_FILES["failures"])
    outputs = [OUTPUT_FILES[name] for name in ("values", "contours", "failures", "checkpoint")]
    sidecar = failures_path(out / OUTPUT_FILES["checkpoint"])
    if sidecar.exists():
        outputs.append(sidecar.name)
    RunManifest(command="map", config=config, outputs=outputs).write(out)

    summary: Dict[str, str] = {}
    if is_stark and anchor_in_window(result):
        label = schema["value"].get("label", result.value_name)
        summary["anchor 1064 nm, 5e13 W/m2"] = anchor_report(kind, label, line, extra, options)
    if not is_stark:
        threshold = CONFIG["efficiency_threshold"]
        summary[f"R > {threshold:g}"] = threshold_report(result, threshold)
    ui.print_sweep_summary(result, unit=schema["value"].get("unit", ""), extra=summary)
    ui.print_success(f"Wrote {len(outputs) + 1} files to {out}")


def anchor_report(kind: str, label: str, line: AtomicLine, extra: Tuple[AtomicLine, ...],
                  options: Dict[str, Any]) -> str:
    """The mapped quantity evaluated exactly at the 1064 nm / 5e13 W/m^2 operating point"""
    evaluator = get_evaluator_registry().create(
        kind, line=line, polarization=options["polarization"],
        extra_lines=extra, counter_rotating=options["counter_rotating"],
    )
    try:
        value = evaluator(ANCHOR_WAVELENGTH, ANCHOR_INTENSITY)
    except ASGEMError as e:
        return f"undefined ({e})"
    return f"{label}/2pi = {format_frequency(value)}"


@cli.command("simulate")
@simulation_options(with_axes=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path),
              help="Directory for traces.csv and manifest.json.")
@click.option("--force", is_flag=True, help="Overwrite an existing output directory.")
@click.option("--dump-grid", is_flag=True, help="Also write the full probe field to grid.bin.")
def simulate_command(out: Optional[Path], force: bool, dump_grid: bool, **options):
    """One gradient echo run: traces CSV, efficiency, echo centre and width"""
    values = simulation_values(options)
    values["store_full"] = dump_grid
    config = make_config(**values)

    if out is not None:
        prepare_out_dir(out, force=force)

    record = simulate(config)
    try:
        metrics = echo_metrics(record)
    except EchoTruncatedError as e:
        raise EchoTruncatedError(f"{e} (--t-max is {config.total_time:g} tau)") from e

    ui.print_echo_metrics(metrics, config)

    if out is None:
        return
    outputs = [write_traces_csv(record, out / OUTPUT_FILES["traces"]).name]
    if dump_grid:
        outputs.append(write_grid_dump(record, out / OUTPUT_FILES["grid"]).name)
    RunManifest(
        command="simulate",
        config={
            "simulation": config.model_dump(),
            "efficiency": metrics.efficiency,
            "echo_center": metrics.echo_center,
            "echo_fwhm": metrics.echo_fwhm,
        },
        outputs=outputs,
    ).write(out)
    ui.print_success(f"Wrote {', '.join(outputs)} and {MANIFEST_NAME} to {out}")


def main() -> None:
    cli(prog_name="asgem")


if __name__ == "__main__":
    main()
