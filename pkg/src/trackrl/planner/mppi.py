"""Sampling-based plan refinement over action-delta sequences.

Candidate plans are the current plan plus temporally smoothed Gaussian
noise, clamped to the per-step increment bound. Scores become weights
through an exponential tilt (max-subtracted for stability) and the next
plan is the weighted average. The executed action is the first step of
the refined plan; the kept plan shifts forward one step with a zero
appended.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError


@dataclass
class PlannerConfig:
    samples: int = 200        # candidate plans per refinement
    horizon: int = 10         # steps per plan
    iterations: int = 2       # refinements per executed action
    temperature: float = 20.0
    sigma: float = 0.08       # exploration noise scale per action dim
    smooth: float = 0.7       # low-pass momentum for temporal smoothing
    particles: int = 5        # model rollouts per candidate

    def __post_init__(self):
        if self.samples < 1 or self.horizon < 1 or self.iterations < 1:
            raise ConfigError("planner needs samples, horizon, iterations >= 1")
        if self.temperature <= 0 or self.sigma <= 0:
            raise ConfigError("planner temperature and sigma must be positive")
        if not 0.0 <= self.smooth < 1.0:
            raise ConfigError("planner smoothing must lie in [0, 1)")
        if self.particles < 1:
            raise ConfigError("planner needs at least one particle")


def plan_weights(returns, temperature):
    """Exponential-tilt weights, normalized to sum to one.

    The maximum return is subtracted before the exponential, so weights
    are invariant to adding a constant to every return and never
    overflow. As temperature approaches zero the weights collapse onto
    the best plan.
    """
    returns = np.asarray(returns, dtype=np.float64)
    if temperature <= 0.0:
        raise ConfigError("temperature must be positive")
    z = (returns - returns.max()) / temperature
    w = np.exp(z)
    return w / w.sum()


def smoothed_noise(rng, samples, horizon, dims, sigma, smooth):
    """Low-pass filtered Gaussian exploration noise.

    eps_t = smooth * eps_{t-1} + (1 - smooth) * nu_t with nu_t drawn from
    Gaussian(0, sigma^2) and a zero initial filter state. High smoothing
    trades per-step amplitude for temporal correlation, which keeps the
    perturbed plans actuator-friendly.
    """
    nu = rng.standard_normal((samples, horizon, dims)) * sigma
    eps = np.empty_like(nu)
    prev = np.zeros((samples, dims))
    for t in range(horizon):
        prev = smooth * prev + (1.0 - smooth) * nu[:, t]
        eps[:, t] = prev
    return eps


def mppi_iterate(plan, evaluate_fn, cfg, rng, bound):
    """One refinement pass. Returns (new_plan, info).

    plan: (horizon, dims) current mean plan.
    evaluate_fn: plans (samples, horizon, dims) -> returns (samples,).
    bound: per-step action-delta clamp.
    """
    eps = smoothed_noise(rng, cfg.samples, plan.shape[0], plan.shape[1],
                         cfg.sigma, cfg.smooth)
    plans = np.clip(plan[None] + eps, -bound, bound)
    returns = np.asarray(evaluate_fn(plans), dtype=np.float64)
    if returns.shape != (cfg.samples,):
        raise ConfigError(
            f"evaluate_fn returned shape {returns.shape}, "
            f"expected ({cfg.samples},)")
    w = plan_weights(returns, cfg.temperature)
    new_plan = np.einsum("k,khd->hd", w, plans)
    info = {"weights": w, "returns": returns,
            "best_return": float(returns.max())}
    return new_plan, info


class MppiPlanner:
    """Stateful receding-horizon planner."""

    def __init__(self, cfg, bound, dims=2):
        self.cfg = cfg
        self.bound = float(bound)
        self.dims = dims
        self.reset()

    def reset(self):
        self.plan = np.zeros((self.cfg.horizon, self.dims))

    def plan_action(self, evaluate_fn, rng):
        """Refine the kept plan and pop its first action."""
        plan = self.plan
        info = {}
        for _ in range(self.cfg.iterations):
            plan, info = mppi_iterate(plan, evaluate_fn, self.cfg, rng,
                                      self.bound)
        action = plan[0].copy()
        self.plan = np.vstack([plan[1:], np.zeros((1, self.dims))])
        return action, info
