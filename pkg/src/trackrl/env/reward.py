"""Per-step reward: survival bonus minus weighted deviation penalties."""

from dataclasses import dataclass

import numpy as np

from .vehicle import AY
from .geometry import D_ECT, D_EGAMMA, D_EVX


@dataclass
class RewardWeights:
    """r = r_surv - w_ct*e_ct^2 - w_vx*e_vx^2 - w_gamma*|e_gamma| - w_ay*|ay|

    The survival constant dominates: staying alive at moderate error beats
    terminating.  Episode length x r_surv is the theoretical optimum return.
    """

    r_surv: float = 50.0
    w_ct: float = 10.0     # 1/m^2
    w_vx: float = 2.0      # s^2/m^2
    w_gamma: float = 5.0   # 1/rad
    w_ay: float = 1.0      # s^2/m


def reward(sv, dev, w):
    """Vectorized over any shared leading batch shape."""
    sv = np.asarray(sv)
    dev = np.asarray(dev)
    e_ct = dev[..., D_ECT]
    e_vx = dev[..., D_EVX]
    e_gamma = dev[..., D_EGAMMA]
    ay = sv[..., AY]
    return (w.r_surv
            - w.w_ct * e_ct * e_ct
            - w.w_vx * e_vx * e_vx
            - w.w_gamma * np.abs(e_gamma)
            - w.w_ay * np.abs(ay))
