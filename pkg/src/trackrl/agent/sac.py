"""Soft actor-critic with a configurable critic ensemble.

One implementation covers both model-free learners: the two-critic
variant takes the min over both critics everywhere and runs one gradient
round per environment step, and the large-ensemble variant takes the min
over a fresh random subset of target critics inside the bootstrap
target, aggregates the full ensemble by its mean in the policy
objective, and runs many gradient rounds per step.

Observations are divided by fixed characteristic scales before entering
any network. Policy actions live in (-1, 1) per dimension; callers scale
them to the environment's increment bound.
"""

import json
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, TrainingError, UsageError
from ..nn import autodiff as ad
from ..nn.adam import AdamState, adam_step
from ..nn.heads import squashed_gaussian_sample, squashed_gaussian_sample_np
from ..nn.mlp import Mlp, load_mlp, save_mlp


@dataclass
class AgentConfig:
    n_critics: int = 2
    subset: int = 2           # in-target min subset size
    utd: int = 1              # critic gradient rounds per environment step
    gamma: float = 0.99
    tau: float = 0.005
    lr: float = 3e-4
    batch_size: int = 512
    target_entropy: float = -2.0
    reg_lat: float = 100.0    # squared-action penalty, lateral dim
    reg_long: float = 100.0   # squared-action penalty, longitudinal dim
    policy_agg: str = "min"   # critic aggregation in the policy loss
    hidden: tuple = (512, 512, 512)
    policy_hidden: tuple = None   # falls back to hidden
    critic_hidden: tuple = None   # falls back to hidden
    dtype: type = np.float32

    def __post_init__(self):
        if self.policy_hidden is None:
            self.policy_hidden = tuple(self.hidden)
        if self.critic_hidden is None:
            self.critic_hidden = tuple(self.hidden)
        if not 1 <= self.subset <= self.n_critics:
            raise ConfigError(
                f"subset size {self.subset} must lie in [1, {self.n_critics}]")
        if self.utd < 1:
            raise ConfigError("UTD ratio must be at least 1")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("discount must lie in (0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError("target smoothing must lie in (0, 1]")
        if self.policy_agg not in ("min", "mean"):
            raise ConfigError(f"unknown policy aggregation {self.policy_agg!r}")


def soft_update(online, target, tau):
    """Polyak-average online parameters into target parameters, in place."""
    for o, t in zip(online, target):
        t *= 1.0 - tau
        t += tau * o


class SacAgent:
    """Maximum-entropy actor-critic over scaled observations."""

    def __init__(self, obs_dim, act_dim, cfg, obs_scale, rng):
        self.cfg = cfg
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.obs_scale = np.asarray(obs_scale, dtype=np.float64)
        if self.obs_scale.shape != (obs_dim,):
            raise ConfigError(
                f"obs scale must have shape ({obs_dim},), "
                f"got {self.obs_scale.shape}")

        dt = cfg.dtype
        self.policy = Mlp.create([obs_dim, *cfg.policy_hidden, 2 * act_dim],
                                 members=1, head="gaussian", rng=rng, dtype=dt)
        self.critics = Mlp.create([obs_dim + act_dim, *cfg.critic_hidden, 1],
                                  members=cfg.n_critics, head="linear",
                                  rng=rng, dtype=dt)
        self.targets = self.critics.copy()
        self.log_temp = np.zeros(1)
        self.policy_adam = AdamState(self.policy.params(), lr=cfg.lr)
        self.critic_adam = AdamState(self.critics.params(), lr=cfg.lr)
        self.temp_adam = AdamState([self.log_temp], lr=cfg.lr)
        if act_dim == 2:
            self._reg = np.array([cfg.reg_lat, cfg.reg_long])
        else:
            self._reg = np.full(act_dim, cfg.reg_lat)

    @property
    def temperature(self):
        return float(np.exp(self.log_temp[0]))

    def scale_obs(self, obs):
        return np.asarray(obs, dtype=np.float64) / self.obs_scale

    def _policy_out_np(self, obs_scaled):
        out = self.policy.forward_member_np(
            obs_scaled.astype(self.cfg.dtype), 0).astype(np.float64)
        return out[..., :self.act_dim], out[..., self.act_dim:]

    def act(self, obs, rng=None, deterministic=False):
        """Action in (-1, 1) per dimension for a single observation."""
        x = self.scale_obs(obs)[None]
        mean, log_std = self._policy_out_np(x)
        if deterministic:
            return np.tanh(mean[0])
        if rng is None:
            raise UsageError("stochastic act needs an rng")
        noise = rng.standard_normal(mean.shape)
        a, _ = squashed_gaussian_sample_np(mean, log_std, noise)
        return a[0]

    def sample_actions_np(self, obs_scaled, rng):
        """Squashed policy samples and log-probs for a scaled obs batch."""
        mean, log_std = self._policy_out_np(obs_scaled)
        noise = rng.standard_normal(mean.shape)
        return squashed_gaussian_sample_np(mean, log_std, noise)

    def compute_target(self, batch, rng):
        """Bootstrap targets y = r + g*(1-done)*(min_subset Q' - temp*logpi).

        The subset of target critics is drawn fresh, without replacement,
        on every call and shared across the batch. Online critics are
        never consulted.
        """
        cfg = self.cfg
        obs2 = self.scale_obs(batch["obs2"])
        a2, logp2 = self.sample_actions_np(obs2, rng)
        subset = rng.choice(cfg.n_critics, size=cfg.subset, replace=False)
        x2 = np.concatenate([obs2, a2], axis=-1)
        q2 = self.targets.forward_np(x2).astype(np.float64)  # (N, B, 1)
        qmin = q2[subset].min(axis=0)
        soft = qmin - self.temperature * logp2
        r = np.asarray(batch["reward"], dtype=np.float64).reshape(-1, 1)
        done = np.asarray(batch["done"], dtype=np.float64).reshape(-1, 1)
        return r + cfg.gamma * (1.0 - done) * soft

    def _critic_loss(self, tape, batch, y):
        """Summed per-critic mean squared error to y, as a tape Var."""
        cfg = self.cfg
        obs = self.scale_obs(batch["obs"])
        x = np.concatenate([obs, batch["action"]], axis=-1).astype(cfg.dtype)
        yt = np.asarray(y, dtype=cfg.dtype).reshape(1, -1, 1)
        params = self.critics.tape_params(tape)
        q = self.critics.forward(tape, x, params)  # (N, B, 1)
        d = ad.sub(q, yt)
        # sum over critics of per-critic MSE == N * global mean
        loss = ad.mul(ad.vmean(ad.mul(d, d)), float(cfg.n_critics))
        return loss, params

    def critic_update(self, batch, y):
        """One Adam step on the summed per-critic mean squared error to y."""
        tape = ad.Tape()
        loss, params = self._critic_loss(tape, batch, y)
        if not np.isfinite(loss.data):
            raise TrainingError("non-finite critic loss")
        grads = ad.backward(tape, loss)
        adam_step(self.critics.params(), [grads.of(p) for p in params],
                  self.critic_adam)
        return float(loss.data)

    def _policy_loss(self, tape, batch, noise):
        """E[temp*logpi - Q_agg + reg . a^2] as a tape Var.

        Actions are reparameterized samples, so the critic signal reaches
        the policy through the action input; critic parameters stay
        constants here.
        """
        cfg = self.cfg
        xo = self.scale_obs(batch["obs"]).astype(cfg.dtype)
        params = self.policy.tape_params(tape)
        out = self.policy.forward(tape, xo, params)  # (1, B, 2A)
        mean = ad.narrow(out, -1, 0, self.act_dim)
        log_std = ad.narrow(out, -1, self.act_dim, self.act_dim)
        a, logp = squashed_gaussian_sample(
            tape, mean, log_std, noise.astype(cfg.dtype))

        cparams = self.critics.tape_params(tape)
        xq = ad.concat([xo[None], a], axis=-1)  # (1, B, obs+A)
        q = self.critics.forward(tape, xq, cparams)  # (N, B, 1)
        if cfg.policy_agg == "min":
            q_agg = ad.vmin(q, axis=0)
        else:
            q_agg = ad.vmean(q, axis=0)

        reg = ad.vsum(ad.mul(ad.mul(a, a), self._reg.astype(cfg.dtype)),
                      axis=-1, keepdims=True)
        inner = ad.add(ad.sub(ad.mul(logp, float(self.temperature)), q_agg),
                       reg)
        return ad.vmean(inner), params, logp

    def policy_update(self, batch, rng):
        """One Adam step on E[temp*logpi - Q_agg + reg . a^2]."""
        noise = rng.standard_normal((len(batch["obs"]), self.act_dim))
        tape = ad.Tape()
        loss, params, logp = self._policy_loss(tape, batch, noise)
        if not np.isfinite(loss.data):
            raise TrainingError("non-finite policy loss")
        grads = ad.backward(tape, loss)
        adam_step(self.policy.params(), [grads.of(p) for p in params],
                  self.policy_adam)
        return float(loss.data), logp.data.astype(np.float64).reshape(-1, 1)

    def temperature_update(self, logp):
        """Dual step toward the entropy target.

        Minimizes E[-exp(lt) * (logpi + target_entropy)] in the
        log-temperature lt; the exact gradient is used directly.
        """
        err = float(np.mean(logp) + self.cfg.target_entropy)
        loss = -np.exp(self.log_temp[0]) * err
        grad = np.array([-np.exp(self.log_temp[0]) * err])
        adam_step([self.log_temp], [grad], self.temp_adam)
        return float(loss)

    def soft_update_targets(self):
        soft_update(self.critics.params(), self.targets.params(),
                    self.cfg.tau)

    def agent_step(self, buffer, rng):
        """All gradient work for one environment step.

        Runs `utd` critic rounds (fresh batch, fresh target subset, Polyak
        update after each) and then a single policy and temperature update
        on the last batch. Below one full batch of stored transitions this
        is a no-op.
        """
        cfg = self.cfg
        if len(buffer) < cfg.batch_size:
            return None
        batch = None
        closs = 0.0
        for _ in range(cfg.utd):
            batch = buffer.sample(cfg.batch_size, rng)
            y = self.compute_target(batch, rng)
            closs = self.critic_update(batch, y)
            self.soft_update_targets()
        ploss, logp = self.policy_update(batch, rng)
        self.temperature_update(logp)
        return {"critic_loss": closs, "policy_loss": ploss,
                "temperature": self.temperature}

    def save(self, f):
        save_mlp(f, self.policy)
        save_mlp(f, self.critics)
        save_mlp(f, self.targets)
        extra = {"log_temp": float(self.log_temp[0]),
                 "obs_scale": self.obs_scale.tolist()}
        f.write((json.dumps(extra, sort_keys=True) + "\n").encode("utf-8"))

    def load_params(self, f):
        dt = self.cfg.dtype
        self.policy = load_mlp(f, dtype=dt)
        self.critics = load_mlp(f, dtype=dt)
        self.targets = load_mlp(f, dtype=dt)
        extra = json.loads(f.readline().decode("utf-8"))
        self.log_temp[0] = extra["log_temp"]
        self.obs_scale = np.asarray(extra["obs_scale"], dtype=np.float64)
        self.policy_adam = AdamState(self.policy.params(), lr=self.cfg.lr)
        self.critic_adam = AdamState(self.critics.params(), lr=self.cfg.lr)


def sac_config(**overrides):
    """Two-critic configuration: min aggregation, one round per step."""
    base = dict(n_critics=2, subset=2, utd=1, policy_agg="min")
    base.update(overrides)
    return AgentConfig(**base)


def redq_config(**overrides):
    """Ensemble configuration: in-target subset min, mean aggregation,
    many gradient rounds per step."""
    base = dict(n_critics=10, subset=2, utd=20, policy_agg="mean")
    base.update(overrides)
    return AgentConfig(**base)
