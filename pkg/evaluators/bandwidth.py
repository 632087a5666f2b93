from typing import Dict, Optional, Sequence

from atomic_data import AtomicLine, load_line
from evaluators.base import BaseEvaluator
from stark import BANDWIDTH_LEVEL, StarkBeam, ground_state_shift, memory_bandwidth


class BandwidthEvaluator(BaseEvaluator):
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
        return "stark-bw"

    @property
    def description(self) -> str:
        return "Memory bandwidth Delta_bw (rad/s) over Stark-beam wavelength and intensity"

    @property
    def axis_schema(self) -> Dict:
        return {
            "x": {"name": "lambda_m", "unit": "m", "spacing": "linear", "default": (850e-9, 1200e-9)},
            "y": {"name": "intensity_W_m2", "unit": "W/m2", "spacing": "log", "default": (1e12, 1e15)},
            "value": {"name": "value_rad_s", "label": "Delta_bw", "unit": "rad/s", "levels": (BANDWIDTH_LEVEL,)},
        }

    def evaluate(self, x: float, y: float) -> float:
        beam = StarkBeam(wavelength=x, intensity=y, polarization=self.polarization)
        shift = ground_state_shift(
            beam, self.line, extra_lines=self.extra_lines, counter_rotating=self.counter_rotating
        )
        return memory_bandwidth(shift).bandwidth
