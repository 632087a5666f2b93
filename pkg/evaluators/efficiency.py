from typing import Dict, Optional

from evaluators.base import BaseEvaluator
from maxwell_bloch import SimulationConfig, echo_metrics, simulate


class EfficiencyEvaluator(BaseEvaluator):
    """Storage-and-retrieval efficiency R of one gradient-echo run"""

    def __init__(self, base_config: Optional[SimulationConfig] = None):
        self.base_config = base_config or SimulationConfig()

    @property
    def name(self) -> str:
        return "efficiency"

    @property
    def description(self) -> str:
        return "Echo efficiency R over optical depth xi and gradient strength zeta"

    @property
    def axis_schema(self) -> Dict:
        return {
            "x": {"name": "xi", "unit": "", "spacing": "linear", "default": (100.0, 4000.0)},
            "y": {"name": "zeta", "unit": "", "spacing": "linear", "default": (100.0, 2500.0)},
            "value": {"name": "R", "label": "R", "unit": "", "levels": (0.9,)},
        }

    def evaluate(self, x: float, y: float) -> float:
        config = self.base_config.model_copy(
            update={"optical_depth": float(x), "gradient_strength": float(y), "store_full": False}
        )
        # the map keeps going when a weak echo has a long tail
        return echo_metrics(simulate(config), check_truncation=False).efficiency
