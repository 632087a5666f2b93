"""
Sweep Engine for ASGEM

Runs an evaluator over every cell of a 2-D parameter grid, in-process or on a
process pool, and checkpoints the partially filled grid so an interrupted sweep
resumes without re-evaluating finished cells. Iso-contours of the finished map are
extracted with contourpy's marching squares.

Cells are laid out row-major with the x index outer. A cell ends up
`done` (finite value), `masked` (value undefined, e.g. on a resonance) or
`failed` (the evaluator raised; message kept in a sidecar CSV).
"""

import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from contourpy import LineType, contour_generator

from errors import CheckpointError, ConfigError, UndefinedCellError

logger = logging.getLogger(__name__)

DEFAULT_CHECKPOINT_EVERY = 10
SPACINGS = ("linear", "log")

Evaluator = Callable[[float, float], float]
ProgressCallback = Callable[[int, int], None]
PathLike = Union[str, Path]


class CellStatus(str, Enum):
    PENDING = "pending"
    DONE = "done"
    FAILED = "failed"
    MASKED = "masked"


# ────────────────────────────── Grid types ─────────────────────────────── #
@dataclass
class ParamGrid:
    x_name: str
    y_name: str
    x_values: np.ndarray
    y_values: np.ndarray
    x_spacing: str = "linear"
    y_spacing: str = "linear"
    status: Optional[np.ndarray] = None

    def __post_init__(self):
        self.x_values = np.asarray(self.x_values, dtype=float)
        self.y_values = np.asarray(self.y_values, dtype=float)
        for name, values, spacing in (
            (self.x_name, self.x_values, self.x_spacing),
            (self.y_name, self.y_values, self.y_spacing),
        ):
            if values.ndim != 1 or values.size == 0:
                raise ConfigError(f"axis {name} must be a non-empty 1-D list")
            if spacing not in SPACINGS:
                raise ConfigError(f"axis {name}: unknown spacing {spacing!r}")
            if not np.all(np.isfinite(values)):
                raise ConfigError(f"axis {name} holds non-finite values")
            steps = np.diff(values)
            if values.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
                raise ConfigError(f"axis {name} must be strictly monotone")
            if spacing == "log" and np.any(values <= 0):
                raise ConfigError(f"log-spaced axis {name} must be positive")
        if self.status is None:
            self.status = np.full(self.shape, CellStatus.PENDING.value, dtype="<U7")

    @classmethod
    def from_ranges(
        cls,
        x_name: str,
        x_range: Tuple[float, float],
        nx: int,
        y_name: str,
        y_range: Tuple[float, float],
        ny: int,
        x_spacing: str = "linear",
        y_spacing: str = "linear",
    ) -> "ParamGrid":
        """Build a grid from (lo, hi) ranges; a 1-point axis needs lo == hi"""
        return cls(
            x_name, y_name,
            _axis(x_name, x_range, nx, x_spacing),
            _axis(y_name, y_range, ny, y_spacing),
            x_spacing, y_spacing,
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return self.x_values.size, self.y_values.size

    @property
    def size(self) -> int:
        return self.x_values.size * self.y_values.size

    def indices(self) -> Iterator[Tuple[int, int]]:
        """Row-major cell order, x index outer"""
        for i in range(self.x_values.size):
            for j in range(self.y_values.size):
                yield i, j


def _axis(name: str, bounds: Tuple[float, float], n: int, spacing: str) -> np.ndarray:
    lo, hi = float(bounds[0]), float(bounds[1])
    if n < 1:
        raise ConfigError(f"axis {name} needs at least one point")
    if n == 1:
        if lo != hi:
            raise ConfigError(f"axis {name} has one point but a range {lo}:{hi}")
        return np.array([lo])
    if lo == hi:
        raise ConfigError(f"degenerate range for {name}: min = max = {lo} with {n} points")
    if spacing == "log":
        if lo <= 0 or hi <= 0:
            raise ConfigError(f"log-spaced axis {name} must be positive")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


@dataclass
class ContourResult:
    grid: ParamGrid
    values: np.ndarray
    value_name: str = "value"
    levels: Tuple[float, ...] = ()
    contours: Dict[float, List[np.ndarray]] = field(default_factory=dict)
    failures: Dict[Tuple[int, int], str] = field(default_factory=dict)

    @property
    def done_mask(self) -> np.ndarray:
        return self.grid.status == CellStatus.DONE.value

    def count(self, status: CellStatus) -> int:
        return int(np.sum(self.grid.status == status.value))

    def max_cell(self) -> Optional[Tuple[float, float, float]]:
        """(value, x, y) of the largest done cell"""
        return self._extreme_cell(np.argmax)

    def min_cell(self) -> Optional[Tuple[float, float, float]]:
        return self._extreme_cell(np.argmin)

    def _extreme_cell(self, pick) -> Optional[Tuple[float, float, float]]:
        mask = self.done_mask
        if not mask.any():
            return None
        fill = -np.inf if pick is np.argmax else np.inf
        flat = np.where(mask, self.values, fill).ravel()
        i, j = np.unravel_index(pick(flat), self.values.shape)
        return float(self.values[i, j]), float(self.grid.x_values[i]), float(self.grid.y_values[j])

    def to_frame(self, with_status: bool = False) -> pd.DataFrame:
        xs, ys = np.meshgrid(self.grid.x_values, self.grid.y_values, indexing="ij")
        frame = pd.DataFrame({
            self.grid.x_name: xs.ravel(),
            self.grid.y_name: ys.ravel(),
            self.value_name: self.values.ravel(),
        })
        if with_status:
            frame["status"] = self.grid.status.ravel()
        return frame


# ────────────────────────────── Evaluation ─────────────────────────────── #
def _evaluate_cell(evaluator: Evaluator, i: int, j: int, x: float, y: float) -> Tuple[int, int, str, float, str]:
    """Evaluate one cell; module-level so process pools can pickle it"""
    try:
        value = float(evaluator(x, y))
    except UndefinedCellError as e:
        return i, j, CellStatus.MASKED.value, float("nan"), str(e)
    except Exception as e:
        return i, j, CellStatus.FAILED.value, float("nan"), f"{type(e).__name__}: {e}"
    if not np.isfinite(value):
        return i, j, CellStatus.FAILED.value, float("nan"), f"non-finite value {value!r}"
    return i, j, CellStatus.DONE.value, value, ""


def _evaluate_all(
    evaluator: Evaluator, grid: ParamGrid, cells: Sequence[Tuple[int, int]], workers: int
) -> Iterator[Tuple[int, int, str, float, str]]:
    if workers <= 1 or len(cells) <= 1:
        for i, j in cells:
            yield _evaluate_cell(evaluator, i, j, grid.x_values[i], grid.y_values[j])
        return

    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {
            pool.submit(_evaluate_cell, evaluator, i, j, float(grid.x_values[i]), float(grid.y_values[j])): (i, j)
            for i, j in cells
        }
        for future in as_completed(futures):
            i, j = futures[future]
            try:
                yield future.result()
            except Exception as e:
                logger.warning(f"Worker failed on cell ({i}, {j}): {e}")
                yield i, j, CellStatus.FAILED.value, float("nan"), f"{type(e).__name__}: {e}"


# ────────────────────────────── Checkpoints ────────────────────────────── #
def failures_path(checkpoint_path: PathLike) -> Path:
    path = Path(checkpoint_path)
    return path.with_name(f"{path.stem}.failures.csv")


def atomic_write_csv(frame: pd.DataFrame, path: PathLike) -> None:
    """Write a CSV through a temporary file and an atomic rename"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            frame.to_csv(handle, index=False)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _failures_frame(failures: Dict[Tuple[int, int], str]) -> pd.DataFrame:
    rows = [{"i": i, "j": j, "error": message} for (i, j), message in sorted(failures.items())]
    return pd.DataFrame(rows, columns=["i", "j", "error"])


def write_checkpoint(result: ContourResult, path: PathLike) -> None:
    atomic_write_csv(result.to_frame(with_status=True), path)
    sidecar = failures_path(path)
    if result.failures:
        atomic_write_csv(_failures_frame(result.failures), sidecar)
    elif sidecar.exists():
        sidecar.unlink()
    logger.debug(f"Checkpoint written to {path} ({result.count(CellStatus.DONE)}/{result.grid.size} done)")


def load_checkpoint(grid: ParamGrid, value_name: str, path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    """
    Read values and statuses back from a checkpoint

    Raises:
        CheckpointError: unreadable file, wrong columns, or axes that differ from `grid`
    """
    expected = [grid.x_name, grid.y_name, value_name, "status"]
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except Exception as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}")

    if list(frame.columns) != expected:
        raise CheckpointError(f"checkpoint {path} has columns {list(frame.columns)}, expected {expected}")
    if len(frame) != grid.size:
        raise CheckpointError(f"checkpoint {path} has {len(frame)} rows, expected {grid.size}")

    xs, ys = np.meshgrid(grid.x_values, grid.y_values, indexing="ij")
    try:
        same_axes = np.array_equal(frame[grid.x_name].to_numpy(float), xs.ravel()) and np.array_equal(
            frame[grid.y_name].to_numpy(float), ys.ravel()
        )
    except (TypeError, ValueError):
        same_axes = False
    if not same_axes:
        raise CheckpointError(f"checkpoint {path} was written for a different grid")

    status = frame["status"].astype(str).to_numpy()
    allowed = {s.value for s in CellStatus}
    if not set(status) <= allowed:
        raise CheckpointError(f"checkpoint {path} holds unknown cell states {sorted(set(status) - allowed)}")
    try:
        values = frame[value_name].to_numpy(float)
    except (TypeError, ValueError) as e:
        raise CheckpointError(f"checkpoint {path} holds non-numeric values: {e}")
    done = status == CellStatus.DONE.value
    if not np.all(np.isfinite(values[done])):
        raise CheckpointError(f"checkpoint {path} marks non-finite cells as done")

    return values.reshape(grid.shape), status.reshape(grid.shape).astype("<U7")


def run_sweep(
    grid: ParamGrid,
    evaluator: Evaluator,
    checkpoint_path: Optional[PathLike] = None,
    value_name: str = "value",
    levels: Sequence[float] = (),
    workers: int = 1,
    checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY,
    restart: bool = False,
    progress: Optional[ProgressCallback] = None,
) -> ContourResult:
    """
    Evaluate every pending cell of a grid

    Args:
        grid: the parameter grid; its status array is filled in place
        evaluator: picklable callable (x, y) -> float; raising UndefinedCellError masks the cell
        checkpoint_path: CSV rewritten atomically every `checkpoint_every` completed cells
        value_name: header of the value column
        levels: iso-levels extracted once the sweep finishes (skipped for grids under 2x2)
        workers: process count; 1 evaluates in-process
        restart: ignore an existing checkpoint instead of resuming from it
        progress: called with (completed, total) after every cell

    Returns:
        ContourResult with values, statuses, failures and contours

    Raises:
        CheckpointError: existing checkpoint is unusable and restart is False
    """
    values = np.full(grid.shape, np.nan)
    grid.status = np.full(grid.shape, CellStatus.PENDING.value, dtype="<U7")

    if checkpoint_path is not None and Path(checkpoint_path).exists():
        if restart:
            logger.info(f"Restart requested, discarding checkpoint {checkpoint_path}")
        else:
            values, grid.status = load_checkpoint(grid, value_name, checkpoint_path)
            logger.info(f"Resuming from {checkpoint_path}")

    result = ContourResult(grid, values, value_name, tuple(float(level) for level in levels))
    # failed cells are retried on resume
    todo = [
        (i, j) for i, j in grid.indices()
        if grid.status[i, j] in (CellStatus.PENDING.value, CellStatus.FAILED.value)
    ]
    for i, j in todo:
        grid.status[i, j] = CellStatus.PENDING.value
        values[i, j] = np.nan

    total = grid.size
    completed = total - len(todo)
    logger.info(f"Sweep {grid.x_name} x {grid.y_name}: {len(todo)} of {total} cells to evaluate")

    since_checkpoint = 0
    for i, j, status, value, message in _evaluate_all(evaluator, grid, todo, workers):
        grid.status[i, j] = status
        values[i, j] = value
        if status == CellStatus.FAILED.value:
            result.failures[(i, j)] = message
            logger.warning(f"Cell ({i}, {j}) failed: {message}")
        completed += 1
        since_checkpoint += 1
        if checkpoint_path is not None and since_checkpoint >= max(1, checkpoint_every):
            write_checkpoint(result, checkpoint_path)
            since_checkpoint = 0
        if progress is not None:
            progress(completed, total)

    if checkpoint_path is not None:
        write_checkpoint(result, checkpoint_path)

    if result.levels and min(grid.shape) >= 2:
        result.contours = extract_contours(result, result.levels)
    return result


# ────────────────────────────── Contours ───────────────────────────────── #
def extract_contours(result: ContourResult, levels: Sequence[float]) -> Dict[float, List[np.ndarray]]:
    """
    Iso-contour polylines of the done cells by marching squares

    Log-spaced axes are contoured in log10 space so segments interpolate linearly
    in the plotted coordinate. Each polyline is an (n, 2) array of (x, y) vertices.

    Raises:
        ConfigError: the grid is smaller than 2x2
    """
    grid = result.grid
    nx, ny = grid.shape
    if nx < 2 or ny < 2:
        raise ConfigError(f"contour extraction needs at least a 2x2 grid, got {nx}x{ny}")

    x = np.log10(grid.x_values) if grid.x_spacing == "log" else grid.x_values.copy()
    y = np.log10(grid.y_values) if grid.y_spacing == "log" else grid.y_values.copy()
    z = np.where(result.done_mask, result.values, np.nan)
    x_order, y_order = np.argsort(x), np.argsort(y)
    z = z[np.ix_(x_order, y_order)]
    x, y = x[x_order], y[y_order]

    contours: Dict[float, List[np.ndarray]] = {float(level): [] for level in levels}
    masked = np.ma.masked_invalid(z.T)
    if masked.count() == 0:
        return contours

    generator = contour_generator(x=x, y=y, z=masked, line_type=LineType.Separate)
    for level in contours:
        polylines = []
        for line in generator.lines(level):
            points = np.array(line, dtype=float)
            if grid.x_spacing == "log":
                points[:, 0] = 10.0 ** points[:, 0]
            if grid.y_spacing == "log":
                points[:, 1] = 10.0 ** points[:, 1]
            polylines.append(points)
        contours[level] = polylines
    return contours


# ────────────────────────────── Export ─────────────────────────────────── #
def write_values_csv(result: ContourResult, path: PathLike) -> Path:
    """Value grid as `x,y,value`, row-major; masked and failed cells are empty"""
    atomic_write_csv(result.to_frame(), path)
    return Path(path)


def write_contours_csv(result: ContourResult, path: PathLike) -> Path:
    """Contour vertices as `level,segment_id,x,y`"""
    rows = []
    segment_id = 0
    for level in result.levels:
        for polyline in result.contours.get(level, []):
            for x, y in polyline:
                rows.append({"level": level, "segment_id": segment_id, "x": x, "y": y})
            segment_id += 1
    atomic_write_csv(pd.DataFrame(rows, columns=["level", "segment_id", "x", "y"]), path)
    return Path(path)


def write_failures_csv(result: ContourResult, path: PathLike) -> Path:
    atomic_write_csv(_failures_frame(result.failures), path)
    return Path(path)
