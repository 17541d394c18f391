"""Split one-step prediction: learned vehicle dynamics, exact bookkeeping.

A model only predicts the ten dynamic vehicle-frame fields. Everything
else in an imagined step reuses the environment's own exact machinery:
the control-increment rule, the midpoint-yaw pose update, footpoint
projection, deviation assembly, and the reward. With an oracle model
(the true integrator) an imagined step reproduces the environment step
bit for bit; with a learned ensemble only the dynamic-field prediction
differs.
"""

import numpy as np

from ..env.geometry import D_ECT, compute_deviation, find_footpoint
from ..env.reward import reward
from ..env.sim import build_observation
from ..env.vehicle import (
    DYN,
    N_DYN,
    VX,
    VY,
    YAW_RATE,
    advance_pose,
    apply_action,
    integrate_vehicle,
)
from .ensemble import model_inputs


class TrueRatesModel:
    """Oracle drop-in for an ensemble: the exact vehicle integrator.

    Deterministic and memberless; ``member`` and ``noise`` are accepted
    and ignored so it is call-compatible with ProbabilisticEnsemble.
    """

    fitted = True  # the oracle needs no training
    members = 1

    def __init__(self, vehicle_params, dt, substeps):
        self.p = vehicle_params
        self.dt = dt
        self.substeps = substeps

    def next_dyn(self, sv_after_action, member=None, noise=None):
        del member, noise
        out = integrate_vehicle(sv_after_action, self.p, self.dt, self.substeps)
        return out[..., DYN]


def split_step(track, model, sv, pose, arc, action, cfg,
               member=None, noise=None):
    """Advance a batch of imagined states by one control interval.

    Args:
        track: Track shared with the real environment.
        model: object with next_dyn(sv_after_action, member, noise).
        sv: (n, 22) vehicle states.
        pose: (n, 3) global poses.
        arc: (n,) previous footpoint arcs (the projection hint).
        action: (n, 2) raw action deltas; clipped like the env.
        cfg: EnvConfig.
        member, noise: forwarded to the model.
    Returns:
        (sv2, pose2, arc2, dev2, r, breach): next states, footpoint arcs,
        deviation vectors, rewards, and cross-track breach flags.
    """
    action = np.clip(np.asarray(action, dtype=np.float64),
                     -cfg.delta_max, cfg.delta_max)
    sv_a = apply_action(sv, action)
    sv2 = sv_a.copy()
    sv2[..., DYN] = model.next_dyn(sv_a, member=member, noise=noise)
    pose2 = advance_pose(pose, sv2[..., VX], sv2[..., VY],
                         sv2[..., YAW_RATE], cfg.dt)
    fp2 = find_footpoint(track, pose2[..., :2], hint_arc=arc)
    dev2 = compute_deviation(track, pose2, sv2, fp2,
                             cfg.wp_spacing, cfg.n_wp)
    r = reward(sv2, dev2, cfg.weights)
    breach = np.abs(dev2[..., D_ECT]) > cfg.ect_threshold
    return sv2, pose2, np.asarray(fp2.arc), dev2, r, breach


def rollout_returns(track, ensemble, sv0, pose0, arc0, plans, cfg,
                    n_particles, rng):
    """Score candidate action plans by sampled model rollouts.

    Each plan is copied onto ``n_particles`` particles; every particle
    keeps one ensemble member for its whole trajectory and samples the
    member's predictive distribution at each step. Returns are undiscounted
    sums; a particle that breaches the cross-track bound collects zero
    reward from then on.

    Args:
        plans: (k, horizon, 2) candidate action-delta sequences.
    Returns:
        (k,) mean return over particles.
    """
    k, horizon, _ = plans.shape
    n = k * n_particles
    sv = np.broadcast_to(sv0, (n, np.shape(sv0)[-1])).copy()
    pose = np.broadcast_to(pose0, (n, 3)).copy()
    arc = np.broadcast_to(arc0, (n,)).copy()
    member = rng.integers(0, ensemble.members, size=n)
    alive = np.ones(n, dtype=bool)
    total = np.zeros(n)
    for t in range(horizon):
        a = np.repeat(plans[:, t, :], n_particles, axis=0)
        noise = rng.standard_normal((n, N_DYN))
        sv, pose, arc, _, r, breach = split_step(
            track, ensemble, sv, pose, arc, a, cfg,
            member=member, noise=noise)
        total += np.where(alive, r, 0.0)
        alive &= ~breach
    return total.reshape(k, n_particles).mean(axis=1)


def imagined_observation(sv, dev):
    return build_observation(sv, dev)


def transition_dataset(sv, actions, sv_next):
    """Model-fitting pairs from raw transitions.

    Inputs are the dynamic fields with the post-increment controls; targets
    are the per-step deltas of the dynamic fields. ``actions`` are raw
    control deltas in environment units.
    """
    sv = np.asarray(sv, dtype=np.float64)
    sv_next = np.asarray(sv_next, dtype=np.float64)
    sv_a = apply_action(sv, np.asarray(actions, dtype=np.float64))
    return model_inputs(sv_a), sv_next[..., DYN] - sv[..., DYN]
