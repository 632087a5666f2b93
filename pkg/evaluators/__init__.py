# Sweep evaluators for ASGEM maps
from .base import BaseEvaluator

__all__ = ['BaseEvaluator']
