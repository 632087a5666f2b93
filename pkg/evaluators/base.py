from abc import ABC, abstractmethod
from typing import Dict, Tuple


class BaseEvaluator(ABC):
    """A cell function for the sweep engine: (x, y) -> scalar"""

    @property
    @abstractmethod
    def name(self) -> str:
        """Evaluator name that matches the regex ^[a-zA-Z0-9_-]{1,64}$"""
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        """What the map shows"""
        pass

    @property
    @abstractmethod
    def axis_schema(self) -> Dict:
        """Axes and value column: {'x': {...}, 'y': {...}, 'value': {...}}

        Axis entries carry name, unit, spacing ('linear' or 'log') and default
        (lo, hi); the value entry carries name, unit and the default contour levels.
        """
        pass

    @abstractmethod
    def evaluate(self, x: float, y: float) -> float:
        """Value of one cell"""
        pass

    def __call__(self, x: float, y: float) -> float:
        return self.evaluate(x, y)

    @property
    def x_name(self) -> str:
        return self.axis_schema["x"]["name"]

    @property
    def y_name(self) -> str:
        return self.axis_schema["y"]["name"]

    @property
    def value_name(self) -> str:
        return self.axis_schema["value"]["name"]

    @property
    def x_spacing(self) -> str:
        return self.axis_schema["x"].get("spacing", "linear")

    @property
    def y_spacing(self) -> str:
        return self.axis_schema["y"].get("spacing", "linear")

    @property
    def default_levels(self) -> Tuple[float, ...]:
        return tuple(self.axis_schema["value"].get("levels", ()))
