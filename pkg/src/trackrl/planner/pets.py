"""Planning agent: probabilistic ensemble plus receding-horizon optimizer.

The agent owns the learned dynamics and a stateful planner. Acting plans
through sampled ensemble rollouts from the current vehicle state; learning
is periodic ensemble refits on the transitions gathered so far.
"""

import numpy as np

from ..errors import UsageError
from ..model import (
    ProbabilisticEnsemble,
    rollout_returns,
    train_ensemble,
    transition_dataset,
)
from .mppi import MppiPlanner


class PetsAgent:
    """MPPI over ensemble rollouts; no value function, no policy net."""

    def __init__(self, track, env_cfg, model_cfg, planner_cfg, rng):
        self.track = track
        self.env_cfg = env_cfg
        self.planner_cfg = planner_cfg
        self.ensemble = ProbabilisticEnsemble(model_cfg, rng)
        self.planner = MppiPlanner(planner_cfg, env_cfg.delta_max)
        self.trained = False

    def episode_start(self):
        self.planner.reset()

    def act(self, sv, pose, arc, rng):
        """Plan from the current vehicle state; returns the action delta."""
        if not self.trained:
            raise UsageError("planning before the first model fit")

        def evaluate(plans):
            return rollout_returns(self.track, self.ensemble, sv, pose, arc,
                                   plans, self.env_cfg,
                                   self.planner_cfg.particles, rng)

        action, _ = self.planner.plan_action(evaluate, rng)
        return np.clip(action, -self.env_cfg.delta_max, self.env_cfg.delta_max)

    def fit_model(self, sv, actions, sv_next, rng):
        inputs, targets = transition_dataset(sv, actions, sv_next)
        stats = train_ensemble(self.ensemble, inputs, targets, rng)
        self.trained = True
        return stats
