"""
Evaluator Discovery for ASGEM

Finds the map evaluators in the evaluators/ package, validates them against the
BaseEvaluator interface, and builds the registry the sweep commands look names up in.
"""

import importlib
import inspect
import logging
import re
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Type

from errors import ConfigError
from evaluators.base import BaseEvaluator

logger = logging.getLogger(__name__)

EVALUATORS_DIR = Path(__file__).resolve().parent / "evaluators"
_NAME_PATTERN = re.compile(r'^[a-zA-Z0-9_-]{1,64}$')


class EvaluatorRegistry:
    """Discovers and instantiates evaluators from the evaluators directory"""

    def __init__(self, evaluators_dir: Optional[Path] = None):
        self.evaluators_dir = Path(evaluators_dir) if evaluators_dir else EVALUATORS_DIR
        self.discovered: Dict[str, Type[BaseEvaluator]] = {}
        self.registry: Dict[str, Dict[str, Any]] = {}

    def discover_evaluators(self) -> Dict[str, Type[BaseEvaluator]]:
        """
        Import every evaluators/*.py module and collect BaseEvaluator subclasses

        Returns:
            Dict mapping evaluator names to evaluator classes
        """
        self.discovered.clear()

        if not self.evaluators_dir.exists():
            logger.debug(f"Evaluators directory {self.evaluators_dir} does not exist")
            return {}

        package_root = str(self.evaluators_dir.parent)
        if package_root not in sys.path:
            sys.path.insert(0, package_root)

        for module_file in sorted(self.evaluators_dir.glob("*.py")):
            if module_file.name.startswith("_") or module_file.name == "base.py":
                continue

            module_name = f"{self.evaluators_dir.name}.{module_file.stem}"
            try:
                module = importlib.import_module(module_name)
            except Exception as e:
                logger.error(f"Error importing {module_name}: {e}")
                continue

            for name, obj in inspect.getmembers(module, inspect.isclass):
                if obj is BaseEvaluator or not issubclass(obj, BaseEvaluator) or obj.__module__ != module_name:
                    continue
                if self._validate_evaluator(obj):
                    instance = obj()
                    self.discovered[instance.name] = obj
                    logger.debug(f"Discovered evaluator: {instance.name}")
                else:
                    logger.debug(f"Evaluator {name} failed validation")

        logger.debug(f"Discovered {len(self.discovered)} evaluators")
        return self.discovered

    def _validate_evaluator(self, evaluator_class: Type[BaseEvaluator]) -> bool:
        """Instantiate with defaults and check the interface and the axis schema"""
        try:
            instance = evaluator_class()

            if not getattr(instance, 'name', None):
                logger.error(f"Evaluator {evaluator_class.__name__} missing or empty 'name' property")
                return False
            if not _NAME_PATTERN.match(instance.name):
                logger.error(f"Evaluator {evaluator_class.__name__} has invalid name format: {instance.name}")
                return False
            if not getattr(instance, 'description', None):
                logger.error(f"Evaluator {evaluator_class.__name__} missing or empty 'description' property")
                return False
            if not callable(getattr(instance, 'evaluate', None)):
                logger.error(f"Evaluator {evaluator_class.__name__} missing or non-callable 'evaluate' method")
                return False

            schema = instance.axis_schema
            if not isinstance(schema, dict) or not {'x', 'y', 'value'} <= set(schema):
                logger.error(f"Evaluator {evaluator_class.__name__} axis_schema needs 'x', 'y' and 'value' entries")
                return False
            for axis in ('x', 'y'):
                entry = schema[axis]
                if not entry.get('name') or entry.get('spacing', 'linear') not in ('linear', 'log'):
                    logger.error(f"Evaluator {evaluator_class.__name__} has a malformed '{axis}' axis")
                    return False
                lo, hi = entry.get('default', (None, None))
                if lo is None or hi is None or not lo < hi:
                    logger.error(f"Evaluator {evaluator_class.__name__} '{axis}' axis needs a default (lo, hi) range")
                    return False
            if not schema['value'].get('name'):
                logger.error(f"Evaluator {evaluator_class.__name__} value column has no name")
                return False

            return True

        except Exception as e:
            logger.error(f"Error validating evaluator {evaluator_class.__name__}: {e}")
            return False

    def create_registry(self) -> Dict[str, Dict[str, Any]]:
        """Registry entries: name, description, axis_schema and class"""
        self.registry.clear()

        for evaluator_name, evaluator_class in self.discovered.items():
            try:
                instance = evaluator_class()
                self.registry[evaluator_name] = {
                    'name': instance.name,
                    'description': instance.description,
                    'axis_schema': instance.axis_schema,
                    'class': evaluator_class,
                }
            except Exception as e:
                logger.error(f"Error creating registry entry for {evaluator_name}: {e}")

        return self.registry

    def create(self, evaluator_name: str, **options: Any) -> BaseEvaluator:
        """
        Instantiate a registered evaluator

        Raises:
            ConfigError: the name is not registered
        """
        if evaluator_name not in self.registry:
            known = ", ".join(sorted(self.registry)) or "none"
            raise ConfigError(f"unknown evaluator '{evaluator_name}' (available: {known})")
        return self.registry[evaluator_name]['class'](**options)

    def list_evaluators(self) -> List[str]:
        return sorted(self.registry)

    def get_evaluator_info(self, evaluator_name: str) -> Dict[str, Any]:
        return self.registry.get(evaluator_name, {})


# Global instance for easy access
_evaluator_registry = None


def get_evaluator_registry() -> EvaluatorRegistry:
    """Get the global EvaluatorRegistry instance"""
    global _evaluator_registry
    if _evaluator_registry is None:
        _evaluator_registry = EvaluatorRegistry()
        _evaluator_registry.discover_evaluators()
        _evaluator_registry.create_registry()
    return _evaluator_registry


def create_evaluator(evaluator_name: str, **options: Any) -> BaseEvaluator:
    """Instantiate an evaluator by name"""
    return get_evaluator_registry().create(evaluator_name, **options)


def list_evaluators() -> List[str]:
    """List all available evaluator names"""
    return get_evaluator_registry().list_evaluators()
