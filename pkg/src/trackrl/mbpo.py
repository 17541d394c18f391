"""Dyna-style training: learned-model branches feeding an off-policy learner.

Real transitions flow into the replay buffer as usual. Every fixed number
of environment steps the probabilistic ensemble is refit on all real data
and a batch of short imagined rollouts is branched off uniformly sampled
real states, using the split scheme: the net predicts only the vehicle
rates, while pose integration, track projection, and the reward stay
exact. The learner then trains on batches mixing a small real fraction
with synthetic transitions.
"""

import math
from dataclasses import dataclass

import numpy as np

from .buffer import ReplayBuffer
from .env.sim import OBS_DIM
from .env.vehicle import N_DYN, SV_DIM
from .errors import ConfigError, UsageError
from .model import (
    imagined_observation,
    split_step,
    train_ensemble,
    transition_dataset,
)

LEARNER_FIELDS = {"obs": OBS_DIM, "action": 2, "reward": 0,
                  "obs2": OBS_DIM, "done": 0}
REAL_FIELDS = {**LEARNER_FIELDS, "pose": 3, "arc": 0}

# observation index of the cross-track error
_OBS_ECT = SV_DIM


@dataclass
class MbpoConfig:
    retrain_every: int = 500   # env steps between model refits
    rollout_len: int = 3       # imagined steps per branch
    rollouts: int = 400        # branches generated per refit
    capacity: int = 100_000    # synthetic buffer size
    real_frac: float = 0.05    # real share of each learner batch

    def __post_init__(self):
        if self.retrain_every < 1:
            raise ConfigError("retrain cadence must be positive")
        if self.rollout_len < 1:
            raise ConfigError("rollout length must be at least 1")
        if self.rollouts < 1:
            raise ConfigError("branch count must be positive")
        if not 0.0 <= self.real_frac <= 1.0:
            raise ConfigError("real fraction must lie in [0, 1]")


def synthetic_buffer(cfg):
    return ReplayBuffer(cfg.capacity, LEARNER_FIELDS)


def branch_rollouts(track, model, real, policy_fn, env_cfg, mbpo_cfg,
                    synth, rng):
    """Imagine short rollouts from stored real states into `synth`.

    Branch states are drawn uniformly from the real buffer together with
    their stored pose and footpoint arc, so imagined poses line up with
    the track exactly. Each step draws its own random ensemble member per
    branch and samples that member's predictive distribution. A branch
    ends early when the imagined cross-track error exceeds the threshold;
    such steps are stored with done set and nothing after them is kept.

    Args:
        policy_fn: (obs batch, rng) -> actions in (-1, 1) per dim.
    Returns:
        number of transitions appended.
    """
    if not getattr(model, "fitted", False):
        raise UsageError("cannot branch rollouts from an untrained model")
    if len(real) == 0:
        raise UsageError("cannot branch rollouts from an empty buffer")

    idx = rng.integers(0, len(real), size=mbpo_cfg.rollouts)
    rows = real.rows(idx)
    obs = rows["obs"]
    sv = obs[:, :SV_DIM].copy()
    pose = rows["pose"].copy()
    arc = rows["arc"].copy()
    alive = np.abs(obs[:, _OBS_ECT]) <= env_cfg.ect_threshold

    emitted = 0
    for _ in range(mbpo_cfg.rollout_len):
        if not alive.any():
            break
        cur_obs = obs[alive]
        a = policy_fn(cur_obs, rng)
        a_env = a * env_cfg.delta_max
        k = len(cur_obs)
        member = rng.integers(0, model.members, size=k)
        noise = rng.standard_normal((k, N_DYN))
        sv2, pose2, arc2, dev2, r, breach = split_step(
            track, model, sv[alive], pose[alive], arc[alive], a_env,
            env_cfg, member=member, noise=noise)
        obs2 = imagined_observation(sv2, dev2)
        synth.add_batch(obs=cur_obs, action=a, reward=r, obs2=obs2,
                        done=breach.astype(np.float64))
        emitted += k

        live_rows = np.flatnonzero(alive)
        sv[live_rows] = sv2
        pose[live_rows] = pose2
        arc[live_rows] = arc2
        obs[live_rows] = obs2
        alive[live_rows] = ~breach
    return emitted


def mixed_batch(real, synth, batch, real_frac, rng):
    """A learner batch of ceil(real_frac*batch) real rows plus synthetic.

    Rows are shuffled so provenance carries no positional signal.
    """
    n_real = int(math.ceil(real_frac * batch))
    if n_real > batch:
        n_real = batch
    n_syn = batch - n_real
    if len(real) < n_real:
        raise UsageError(
            f"real buffer holds {len(real)} rows, needs {n_real}")
    if len(synth) < n_syn:
        raise UsageError(
            f"synthetic buffer holds {len(synth)} rows, needs {n_syn}")

    parts = []
    if n_real:
        br = real.sample(n_real, rng)
        parts.append({k: br[k] for k in LEARNER_FIELDS})
    if n_syn:
        parts.append(synth.sample(n_syn, rng))
    out = {k: np.concatenate([p[k] for p in parts]) for k in LEARNER_FIELDS}
    order = rng.permutation(batch)
    return {k: v[order] for k, v in out.items()}


class _MixedView:
    """Buffer facade handing the learner mixed real/synthetic batches."""

    def __init__(self, real, synth, batch, real_frac):
        self.real = real
        self.synth = synth
        self.batch = batch
        self.real_frac = real_frac
        self.n_real = min(int(math.ceil(real_frac * batch)), batch)

    def __len__(self):
        if len(self.real) < self.n_real:
            return 0
        if len(self.synth) < self.batch - self.n_real:
            return 0
        return len(self.real) + len(self.synth)

    def sample(self, batch, rng):
        return mixed_batch(self.real, self.synth, batch, self.real_frac, rng)


class MbpoController:
    """Sequential per-step state machine around an off-policy learner.

    ``observe`` stores the real transition, refits the model and
    regenerates branch rollouts on the configured cadence, then runs the
    learner's full gradient work for the step on mixed batches. Model
    training reads only real data; synthetic rows never reach the real
    buffer.
    """

    def __init__(self, track, env_cfg, agent, ensemble, cfg, real=None):
        if cfg.capacity < agent.cfg.batch_size:
            raise ConfigError(
                f"synthetic capacity {cfg.capacity} below learner batch "
                f"size {agent.cfg.batch_size}")
        self.track = track
        self.env_cfg = env_cfg
        self.agent = agent
        self.ensemble = ensemble
        self.cfg = cfg
        self.real = real if real is not None else ReplayBuffer(
            10 ** 6, REAL_FIELDS)
        self.synth = synthetic_buffer(cfg)
        self.view = _MixedView(self.real, self.synth,
                               agent.cfg.batch_size, cfg.real_frac)
        self.env_steps = 0
        self.retrains = 0

    def _policy_fn(self, obs, rng):
        a, _ = self.agent.sample_actions_np(self.agent.scale_obs(obs), rng)
        return a

    def observe(self, obs, action, reward, obs2, done, pose, arc, rng,
                learn=True):
        """Record one real transition and do this step's training work.

        With ``learn`` false the transition is stored and the model
        retrain cadence still ticks, but the policy learner is skipped;
        used while a scripted exploration policy is driving.
        """
        self.real.add(obs=obs, action=action, reward=reward, obs2=obs2,
                      done=done, pose=pose, arc=arc)
        self.env_steps += 1
        stats = {}
        if self.env_steps % self.cfg.retrain_every == 0:
            stats["model"] = self.retrain(rng)
        if learn:
            learner = self.agent.agent_step(self.view, rng)
            if learner is not None:
                stats["learner"] = learner
        return stats

    def retrain(self, rng):
        """Refit the ensemble on all real data, then refresh rollouts."""
        rows = self.real.get_all()
        sv = rows["obs"][:, :SV_DIM]
        sv2 = rows["obs2"][:, :SV_DIM]
        a_env = rows["action"] * self.env_cfg.delta_max
        inputs, targets = transition_dataset(sv, a_env, sv2)
        train_stats = train_ensemble(self.ensemble, inputs, targets, rng)
        self.retrains += 1
        emitted = branch_rollouts(self.track, self.ensemble, self.real,
                                  self._policy_fn, self.env_cfg, self.cfg,
                                  self.synth, rng)
        train_stats["synthetic"] = emitted
        return train_stats
