"""Gaussian output heads: tanh-squashed sampling and diagonal NLL.

Each helper comes in two flavours: a plain-numpy fast path for acting and
planning, and a tape version used inside loss construction.
"""

import numpy as np

from . import autodiff as ad

# Policy log-std clamp interval.
LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0

_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)
_LOG_2 = np.log(2.0)


def clamp_log_std(log_std):
    return np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)


def squashed_gaussian_sample_np(mean, log_std, noise):
    """Reparameterized tanh-squashed Gaussian sample.

    Args:
        mean, log_std: (..., d); log_std is clamped internally.
        noise: (..., d) standard normal draws (zeros give the mode path).
    Returns:
        (action in (-1,1)^d, log_prob summed over d with shape (..., 1))
    """
    log_std = clamp_log_std(log_std)
    u = mean + np.exp(log_std) * noise
    action = np.tanh(u)
    z = (u - mean) * np.exp(-log_std)
    log_gauss = -0.5 * z * z - log_std - _HALF_LOG_2PI
    # log(1 - tanh(u)^2) = 2*(log 2 - u - softplus(-2u)), overflow-safe.
    squash = 2.0 * (_LOG_2 - u - _softplus_np(-2.0 * u))
    logp = (log_gauss - squash).sum(axis=-1, keepdims=True)
    return action, logp


def _softplus_np(x):
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def squashed_gaussian_sample(tape, mean, log_std, noise):
    """Tape version of squashed_gaussian_sample_np.

    mean and log_std are Vars; noise is a constant array.  Gradients flow
    to mean and log_std through both the action and its log-probability.
    """
    log_std = ad.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)
    u = ad.add(mean, ad.mul(ad.exp(log_std), noise))
    action = ad.tanh(u)
    z = ad.mul(ad.sub(u, mean), ad.exp(ad.mul(log_std, -1.0)))
    log_gauss = ad.sub(ad.mul(ad.mul(z, z), -0.5),
                       ad.add(log_std, _HALF_LOG_2PI))
    squash = ad.mul(ad.sub(ad.sub(_LOG_2, u), ad.softplus(ad.mul(u, -2.0))),
                    2.0)
    logp = ad.vsum(ad.sub(log_gauss, squash), axis=-1, keepdims=True)
    return action, logp


def gaussian_nll_np(mean, log_var, target):
    """Diagonal-Gaussian negative log-likelihood, summed over the last axis.

    0.5 * sum[(target - mean)^2 * exp(-log_var) + log_var] + 0.5*d*log(2*pi)
    """
    d = mean.shape[-1]
    err = target - mean
    core = (err * err * np.exp(-log_var) + log_var).sum(axis=-1)
    return 0.5 * core + d * _HALF_LOG_2PI


def gaussian_nll(tape, mean, log_var, target):
    """Tape version; mean and log_var are Vars, target a constant array."""
    d = mean.data.shape[-1]
    err = ad.sub(target, mean)
    core = ad.vsum(
        ad.add(ad.mul(ad.mul(err, err), ad.exp(ad.mul(log_var, -1.0))),
               log_var),
        axis=-1)
    return ad.add(ad.mul(core, 0.5), d * _HALF_LOG_2PI)
