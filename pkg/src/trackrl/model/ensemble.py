"""Probabilistic ensemble over one-step changes of the dynamic vehicle fields.

Each member is a Gaussian net predicting the per-step delta of the ten
dynamic entries of the vehicle state from those entries plus the two
post-increment controls. Training uses per-member bootstrap resampling of
a shared training split, a shared holdout for early stopping, and warm
starts across retrains.
"""

from dataclasses import dataclass

import numpy as np

from ..env.vehicle import CTRL, DYN, N_DYN
from ..errors import ConfigError
from ..nn import autodiff as ad
from ..nn.adam import AdamState, adam_step
from ..nn.heads import gaussian_nll
from ..nn.mlp import Mlp
from .normalizer import Normalizer

MODEL_IN = N_DYN + 2  # dynamic fields + c_lat, c_long


@dataclass
class ModelConfig:
    hidden: tuple = (256, 256, 256, 256)
    members: int = 5
    lr: float = 3e-4
    batch_size: int = 512
    epochs: int = 100
    patience: int = 5
    holdout_frac: float = 0.1
    logvar_min: float = -10.0
    logvar_max: float = 2.0
    dtype: type = np.float32


def model_inputs(sv_after_action):
    """Feature vector for the dynamics net: dyn fields and new controls."""
    sv = np.asarray(sv_after_action)
    return np.concatenate([sv[..., DYN], sv[..., CTRL]], axis=-1)


def _soft_clamp_np(lv, lo, hi):
    lv = hi - np.logaddexp(0.0, hi - lv)
    return lo + np.logaddexp(0.0, lv - lo)


def _soft_clamp(lv, lo, hi):
    lv = ad.sub(hi, ad.softplus(ad.sub(hi, lv)))
    return ad.add(lo, ad.softplus(ad.sub(lv, lo)))


class ProbabilisticEnsemble:
    """Mean/log-variance ensemble in normalized input and target space."""

    def __init__(self, cfg=None, rng=None):
        self.cfg = cfg or ModelConfig()
        rng = rng or np.random.default_rng(0)
        sizes = [MODEL_IN, *self.cfg.hidden, 2 * N_DYN]
        self.mlp = Mlp.create(sizes, members=self.cfg.members,
                              head="mean_logvar", rng=rng,
                              dtype=self.cfg.dtype)
        self.in_norm = Normalizer(MODEL_IN)
        self.tgt_norm = Normalizer(N_DYN)
        self.adam = None

    @property
    def members(self):
        return self.cfg.members

    @property
    def fitted(self):
        """True once the ensemble has been trained at least once."""
        return self.adam is not None

    def forward_norm_np(self, x_norm):
        """All-member forward on normalized inputs.

        x_norm: (batch, in) shared across members, or (members, batch, in).
        Returns (mean, logvar), each (members, batch, N_DYN), float64, with
        the log-variance soft-clamped into the configured range.
        """
        out = self.mlp.forward_np(x_norm.astype(self.cfg.dtype)).astype(np.float64)
        mean = out[..., :N_DYN]
        logvar = _soft_clamp_np(out[..., N_DYN:],
                                self.cfg.logvar_min, self.cfg.logvar_max)
        return mean, logvar

    def next_dyn(self, sv_after_action, member, noise=None):
        """Predict the next dynamic fields for a batch of states.

        Args:
            sv_after_action: (n, 22) states with controls already updated.
            member: (n,) int member assignment per row.
            noise: (n, N_DYN) standard normal draws, or None for the mean.
        Returns:
            (n, N_DYN) predicted next values of the dynamic fields.
        """
        x = self.in_norm.normalize(model_inputs(sv_after_action))
        mean, logvar = self.forward_norm_np(x)
        rows = np.arange(x.shape[0])
        m = mean[member, rows]
        if noise is not None:
            m = m + np.exp(0.5 * logvar[member, rows]) * noise
        delta = self.tgt_norm.denormalize(m)
        return np.asarray(sv_after_action)[..., DYN] + delta

    def moment_match(self, sv_after_action):
        """Mixture mean and variance of the predicted delta across members."""
        x = self.in_norm.normalize(model_inputs(sv_after_action))
        mean, logvar = self.forward_norm_np(x)
        mu = mean.mean(axis=0)
        var = np.exp(logvar).mean(axis=0) + np.square(mean).mean(axis=0) - mu ** 2
        return (self.tgt_norm.denormalize(mu),
                var * np.square(self.tgt_norm.std))

    def holdout_nll(self, x_norm, y_norm):
        """Mean per-sample NLL on a shared normalized holdout."""
        mean, logvar = self.forward_norm_np(x_norm)
        inv = np.exp(-logvar)
        nll = 0.5 * (np.square(y_norm[None] - mean) * inv + logvar
                     + np.log(2 * np.pi))
        return float(nll.sum(axis=-1).mean())

    def save(self, f):
        from ..nn.mlp import save_mlp
        save_mlp(f, self.mlp)
        self.in_norm.save(f)
        self.tgt_norm.save(f)

    def load_params(self, f):
        from ..nn.mlp import load_mlp
        loaded = load_mlp(f, dtype=self.cfg.dtype)
        if loaded.sizes != self.mlp.sizes:
            raise ConfigError(
                f"checkpoint net sizes {loaded.sizes} do not match "
                f"configured {self.mlp.sizes}")
        self.mlp = loaded
        self.in_norm = Normalizer.load(f)
        self.tgt_norm = Normalizer.load(f)


def ensemble_nll_loss(ens, tape, xb, yb):
    """Gaussian NLL training loss on the tape.

    xb, yb: (members, batch, dim) normalized inputs and targets.
    Returns (loss Var, tape-wrapped parameter list).
    """
    cfg = ens.cfg
    params = ens.mlp.tape_params(tape)
    out = ens.mlp.forward(tape, tape.leaf(xb), params)
    mean = ad.narrow(out, -1, 0, N_DYN)
    logvar = _soft_clamp(ad.narrow(out, -1, N_DYN, N_DYN),
                         cfg.logvar_min, cfg.logvar_max)
    loss = ad.vmean(gaussian_nll(tape, mean, logvar, tape.leaf(yb)))
    return loss, params


def train_ensemble(ens, inputs, targets, rng):
    """Fit the ensemble to (input, target-delta) pairs.

    Normalizers are refit to the full dataset each call. Every member
    trains on its own bootstrap resample of the shared training split;
    a shared holdout drives early stopping with best-epoch restore.
    Weights warm-start from their current values.

    Returns a stats dict (epochs run, best holdout NLL, dataset size).
    """
    cfg = ens.cfg
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    n = inputs.shape[0]
    if n < 16:
        raise ConfigError(f"need at least 16 transitions to fit, got {n}")

    ens.in_norm.fit(inputs)
    ens.tgt_norm.fit(targets)
    x = ens.in_norm.normalize(inputs).astype(cfg.dtype)
    y = ens.tgt_norm.normalize(targets).astype(cfg.dtype)

    perm = rng.permutation(n)
    n_hold = max(1, int(round(n * cfg.holdout_frac)))
    hold, train = perm[:n_hold], perm[n_hold:]
    n_train = train.size
    boot = train[rng.integers(0, n_train, size=(cfg.members, n_train))]

    if ens.adam is None:
        ens.adam = AdamState(ens.mlp.params(), lr=cfg.lr)
    adam = ens.adam
    batch = min(cfg.batch_size, n_train)

    best_nll = ens.holdout_nll(x[hold].astype(np.float64),
                               y[hold].astype(np.float64))
    best_params = [p.copy() for p in ens.mlp.params()]
    best_epoch = 0
    since_best = 0
    epochs_run = 0

    for epoch in range(1, cfg.epochs + 1):
        epochs_run = epoch
        order = np.stack([rng.permutation(n_train) for _ in range(cfg.members)])
        for start in range(0, n_train - batch + 1, batch):
            idx = boot[np.arange(cfg.members)[:, None],
                       order[:, start:start + batch]]
            xb, yb = x[idx], y[idx]  # (members, batch, dim)
            tape = ad.Tape()
            loss, params = ensemble_nll_loss(ens, tape, xb, yb)
            grads = ad.backward(tape, loss)
            adam_step(ens.mlp.params(), [grads.of(p) for p in params], adam)

        nll = ens.holdout_nll(x[hold].astype(np.float64),
                              y[hold].astype(np.float64))
        if nll < best_nll:
            best_nll = nll
            best_epoch = epoch
            best_params = [p.copy() for p in ens.mlp.params()]
            since_best = 0
        else:
            since_best += 1
            if since_best > cfg.patience:
                break

    for p, bp in zip(ens.mlp.params(), best_params):
        p[...] = bp
    return {"epochs": epochs_run, "best_epoch": best_epoch,
            "holdout_nll": best_nll, "n": n}
