"""Reference implementations of literature models."""
from .heuristics import HEURISTICS, heuristic_choice, heuristic_prediction
from .models import (REGISTRY, Baseline, BaselineKind, baseline_nll, baseline_simulate,
                     get_baseline, run_agent)

__all__ = ["HEURISTICS", "heuristic_choice", "heuristic_prediction", "REGISTRY", "Baseline",
           "BaselineKind", "baseline_nll", "baseline_simulate", "get_baseline", "run_agent"]
