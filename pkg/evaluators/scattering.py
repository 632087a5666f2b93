from typing import Dict, Optional, Sequence

from atomic_data import AtomicLine, load_line
from evaluators.base import BaseEvaluator
from stark import SCATTERING_LEVEL, StarkBeam, scattering_rate


class ScatteringEvaluator(BaseEvaluator):
    def __init__(
        self,
        line: Optional[AtomicLine] = None,
        polarization: int = 0,
        extra_lines: Sequence[AtomicLine] = (),
        counter_rotating: bool = False,
    ):
        self.line = line or load_line()
        self.polarization = polarization
        self.extra_lines = tuple(extra_lines)
        self.counter_rotating = counter_rotating

    @property
    def name(self) -> str:
        return "stark-scatter"

    @property
    def description(self) -> str:
        return "Largest ground-state scattering rate Gamma_sc (rad/s) over Stark-beam wavelength and intensity"

    @property
    def axis_schema(self) -> Dict:
        return {
            "x": {"name": "lambda_m", "unit": "m", "spacing": "linear", "default": (850e-9, 1200e-9)},
            "y": {"name": "intensity_W_m2", "unit": "W/m2", "spacing": "log", "default": (1e12, 1e15)},
            "value": {"name": "value_rad_s", "label": "max Gamma_sc", "unit": "rad/s", "levels": (SCATTERING_LEVEL,)},
        }

    def evaluate(self, x: float, y: float) -> float:
        beam = StarkBeam(wavelength=x, intensity=y, polarization=self.polarization)
        return scattering_rate(
            beam, self.line, extra_lines=self.extra_lines, counter_rotating=self.counter_rotating
        ).max_rate
