"""Receding-horizon planning over learned dynamics."""

from .mppi import MppiPlanner, PlannerConfig, mppi_iterate, plan_weights, smoothed_noise
from .pets import PetsAgent

__all__ = [
    "MppiPlanner",
    "PetsAgent",
    "PlannerConfig",
    "mppi_iterate",
    "plan_weights",
    "smoothed_noise",
]
