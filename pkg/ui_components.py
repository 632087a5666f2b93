"""
UI Components for the ASGEM CLI

Rich-formatted tables, panels and progress bars for shift tables, memory
bandwidth summaries, echo metrics and sweep reports. Falls back to plain print
when rich is not installed.
"""

from contextlib import contextmanager
from typing import Any, Callable, Dict, Iterator, Optional

import numpy as np

from sweep_engine import CellStatus
from units import format_frequency

try:
    from rich.box import ROUNDED
    from rich.console import Console
    from rich.panel import Panel
    from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn, TimeRemainingColumn
    from rich.table import Table
    RICH_AVAILABLE = True
except ImportError:
    RICH_AVAILABLE = False


class EnhancedConsole:
    """Console with rich formatting for ASGEM results"""

    def __init__(self, stderr: bool = False):
        self.console = Console(stderr=stderr) if RICH_AVAILABLE else None

        # Theme colors
        self.colors = {
            'primary': '#0066cc',
            'success': '#00cc66',
            'warning': '#ff9900',
            'error': '#cc0066',
            'stark': '#ff6b35',
            'echo': '#4a90e2',
            'sweep': '#9b59b6',
        }

        self.icons = {
            'success': '✅',
            'error': '❌',
            'stark': '🔦',
            'echo': '〰️',
            'sweep': '🗺️',
        }

    def print(self, *args, **kwargs):
        if self.console:
            self.console.print(*args, **kwargs)
        else:
            print(*args, **kwargs)

    def print_panel(self, content: Any, title: str = "", style: str = "primary", expand: bool = False):
        """Print content in a styled panel"""
        if not RICH_AVAILABLE:
            print(f"\n=== {title} ===")
            print(content)
            print("=" * (len(title) + 8))
            return

        panel = Panel(
            content,
            title=f"[bold]{title}[/bold]" if title else "",
            border_style=self.colors.get(style, style),
            box=ROUNDED,
            expand=expand,
        )
        self.console.print(panel)

    def print_error(self, message: str, details: Optional[str] = None):
        if not RICH_AVAILABLE:
            print(f"ERROR: {message}")
            if details:
                print(f"Details: {details}")
            return

        error_text = f"{self.icons['error']} [bold red]Error:[/bold red] {message}"
        if details:
            error_text += f"\n[dim]{details}[/dim]"
        self.console.print(error_text)

    def print_success(self, message: str):
        if not RICH_AVAILABLE:
            print(f"✓ {message}")
            return
        self.console.print(f"{self.icons['success']} [bold green]{message}[/bold green]")

    # ────────────────────────── Stark results ────────────────────────── #
    def print_shift_table(self, shift, scattering=None, title: str = "Ground-state light shifts"):
        """One row per |F, m_F>: shift (and scattering rate) in linear frequency"""
        rows = []
        for k, state in enumerate(shift.states):
            row = [str(state.F), str(state.m_F), format_frequency(shift.shifts[k])]
            if scattering is not None:
                row.append(format_frequency(scattering.rates[k]))
            rows.append(row)

        headers = ["F", "m_F", "shift / 2pi"] + (["Gamma_sc / 2pi"] if scattering is not None else [])
        if not RICH_AVAILABLE:
            print(title)
            print("  ".join(f"{h:>16}" for h in headers))
            for row in rows:
                print("  ".join(f"{cell:>16}" for cell in row))
            return

        table = Table(title=f"{self.icons['stark']} {title}", box=ROUNDED, header_style="bold blue")
        for header in headers:
            table.add_column(header, justify="right", style="cyan" if header in ("F", "m_F") else "white")
        for row in rows:
            table.add_row(*row)
        self.console.print(table)

    def print_bandwidth(self, bandwidth, detuning: float):
        lines = [
            f"Memory bandwidth  Delta_bw/2pi = [bold]{format_frequency(bandwidth.bandwidth)}[/bold]",
            f"Clock shift       (F={bandwidth.upper_F} - F={bandwidth.lower_F}) m=0: "
            f"{format_frequency(bandwidth.clock_shift)}",
            f"Zeeman spread     F={bandwidth.lower_F}: {format_frequency(bandwidth.lower_spread)}"
            f"   F={bandwidth.upper_F}: {format_frequency(bandwidth.upper_spread)}",
            f"Laser detuning    {format_frequency(detuning)}",
        ]
        self.print_panel("\n".join(lines), title="Memory bandwidth", style="stark")

    # ────────────────────────── Echo results ─────────────────────────── #
    def print_echo_metrics(self, metrics, config):
        def tau(value):
            return "n/a" if value is None else f"{value:.5g} tau"

        lines = [
            f"Efficiency R       [bold]{metrics.efficiency:.4f}[/bold]",
            f"Echo centroid      {tau(metrics.echo_center)}"
            f"   (2 t_rev - t0 = {2 * config.reversal_time - config.pulse_center:.5g} tau)",
            f"Echo FWHM          {tau(metrics.echo_fwhm)}",
            f"Input FWHM         {tau(metrics.input_fwhm)}",
            f"xi = {config.optical_depth:g}   zeta = {config.gradient_strength:g}"
            f"   grid nz={config.nz} nt={config.nt}",
        ]
        self.print_panel("\n".join(lines), title=f"{self.icons['echo']} Gradient echo", style="echo")

    # ────────────────────────── Sweep results ────────────────────────── #
    def print_sweep_summary(self, result, unit: str = "", extra: Optional[Dict[str, str]] = None):
        """Counts by status, extremes of the finished cells and contour segment counts"""
        def show(value: float) -> str:
            if unit == "rad/s":
                return format_frequency(value)
            return f"{value:.6g}"

        stats: Dict[str, str] = {
            "cells": f"{result.grid.size} ({result.grid.shape[0]} x {result.grid.shape[1]})",
        }
        for status in CellStatus:
            stats[status.value] = str(result.count(status))
        for label, cell in (("max", result.max_cell()), ("min", result.min_cell())):
            if cell is not None:
                value, x, y = cell
                stats[label] = f"{show(value)} at {result.grid.x_name}={x:.6g}, {result.grid.y_name}={y:.6g}"
        for level, segments in result.contours.items():
            stats[f"contour {show(level)}"] = f"{len(segments)} segment(s)"
        stats.update(extra or {})

        if not RICH_AVAILABLE:
            for key, value in stats.items():
                print(f"  {key:<24} {value}")
            return

        table = Table(title=f"{self.icons['sweep']} {result.value_name} map", box=ROUNDED, show_header=False)
        table.add_column("Metric", style="bold cyan")
        table.add_column("Value", style="green")
        for key, value in stats.items():
            table.add_row(key, value)
        self.console.print(table)

    @contextmanager
    def sweep_progress(self, description: str, enabled: bool = True) -> Iterator[Optional[Callable[[int, int], None]]]:
        """Yield a (completed, total) callback that drives a progress bar"""
        if not (RICH_AVAILABLE and enabled):
            yield None
            return

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeRemainingColumn(),
            console=self.console,
            transient=True,
        ) as progress:
            task = progress.add_task(description, total=None)

            def update(completed: int, total: int) -> None:
                progress.update(task, completed=completed, total=total)

            yield update

    def print_help(self, commands: Dict[str, str]):
        """Print the command overview"""
        if not RICH_AVAILABLE:
            print("\nAvailable Commands:")
            for cmd, desc in commands.items():
                print(f"  {cmd:<15} - {desc}")
            return

        table = Table(title="Available Commands", box=ROUNDED, show_header=True, header_style="bold blue")
        table.add_column("Command", style="cyan", no_wrap=True)
        table.add_column("Description", style="white")
        for cmd, desc in commands.items():
            table.add_row(f"[bold]{cmd}[/bold]", desc)
        self.console.print(table)


# Global console instance
ui = EnhancedConsole()


def threshold_report(result, level: float) -> str:
    """Whether any finished cell reaches `level`, and where the best one is"""
    best = result.max_cell()
    if best is None:
        return "no finished cells"
    value, x, y = best
    reached = int(np.count_nonzero(result.done_mask & (np.nan_to_num(result.values, nan=-np.inf) >= level)))
    if reached:
        return f"{reached} cell(s) reach {level:g}"
    return f"no cell reaches {level:g} (best {value:.4f})"

