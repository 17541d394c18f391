"""Dense MLP stacks: construction, forward passes and checkpoint I/O.

An ``Mlp`` holds `members` structurally identical networks as stacked
arrays of shape (members, fan_in, fan_out) so that critic ensembles and
probabilistic-ensemble models evaluate in a handful of batched matmuls.
Single networks are just the members=1 case.
"""

import json

import numpy as np

from . import autodiff as ad
from ..errors import ConfigError

HEADS = ("linear", "gaussian", "mean_logvar")


class Mlp:
    """A stack of dense networks with rectifier hidden layers."""

    def __init__(self, weights, biases, head, sizes):
        self.weights = weights
        self.biases = biases
        self.head = head
        self.sizes = list(sizes)
        self.members = weights[0].shape[0]

    @classmethod
    def create(cls, sizes, members, head, rng, dtype=np.float64):
        """Fan-in scaled uniform weights, zero biases.

        Args:
            sizes: layer widths [d_in, hidden..., d_out].
            members: number of stacked networks.
            head: one of "linear" | "gaussian" | "mean_logvar".
            rng: numpy Generator.
        """
        if head not in HEADS:
            raise ConfigError(f"unknown head tag {head!r}")
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ConfigError(f"bad layer sizes {sizes}")
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(members, fan_in, fan_out))
            weights.append(w.astype(dtype))
            biases.append(np.zeros((members, 1, fan_out), dtype=dtype))
        return cls(weights, biases, head, sizes)

    @property
    def dtype(self):
        return self.weights[0].dtype

    def params(self):
        """Flat parameter list [W0, b0, W1, b1, ...] (live arrays)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def set_params(self, params):
        for i in range(len(self.weights)):
            self.weights[i] = params[2 * i]
            self.biases[i] = params[2 * i + 1]

    def copy(self):
        return Mlp([w.copy() for w in self.weights],
                   [b.copy() for b in self.biases], self.head, self.sizes)

    def _check_input(self, x):
        if x.shape[-1] != self.sizes[0]:
            raise ConfigError(
                f"input dim {x.shape[-1]} != first layer dim {self.sizes[0]}")

    def forward_np(self, x):
        """Plain numpy forward pass.

        Args:
            x: (batch, d_in) shared across members, or (members, batch, d_in).
        Returns:
            (members, batch, d_out)
        """
        x = np.asarray(x, dtype=self.dtype)
        self._check_input(x)
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                np.maximum(h, 0.0, out=h)
        return h

    def forward_member_np(self, x, member):
        """Forward a (batch, d_in) input through one member only."""
        x = np.asarray(x, dtype=self.dtype)
        self._check_input(x)
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w[member] + b[member, 0]
            if i < last:
                np.maximum(h, 0.0, out=h)
        return h

    def forward(self, tape, x, params=None):
        """Tape-recorded forward pass.

        Args:
            tape: autodiff Tape.
            x: Var or ndarray, (batch, d_in) or (members, batch, d_in).
            params: optional list of Vars (from tape_params) to differentiate
                through; plain arrays are used as constants when omitted.
        Returns:
            Var of shape (members, batch, d_out).
        """
        data = x.data if isinstance(x, ad.Var) else np.asarray(x)
        self._check_input(data)
        if params is None:
            params = self.params()
        h = x if isinstance(x, ad.Var) else tape.leaf(data.astype(self.dtype))
        last = len(self.weights) - 1
        for i in range(len(self.weights)):
            h = ad.add(ad.matmul(h, params[2 * i]), params[2 * i + 1])
            if i < last:
                h = ad.relu(h)
        return h

    def tape_params(self, tape):
        """Wrap the live parameter arrays as tape leaves (no copies)."""
        return [ad.Var(tape, p) for p in self.params()]


def mlp_forward(mlp, x):
    """Convenience single-network forward: (batch, d_in) -> (batch, d_out)."""
    out = mlp.forward_np(np.atleast_2d(np.asarray(x)))
    if mlp.members != 1:
        return out
    return out[0]


def save_mlp(f, mlp):
    """Write header (layer sizes, head tag) then row-major float64 blobs."""
    header = {
        "kind": "mlp",
        "sizes": [int(s) for s in mlp.sizes],
        "members": int(mlp.members),
        "head": mlp.head,
        "hidden_act": "relu",
    }
    f.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
    for w, b in zip(mlp.weights, mlp.biases):
        f.write(np.ascontiguousarray(w, dtype=np.float64).tobytes())
        f.write(np.ascontiguousarray(b, dtype=np.float64).tobytes())


def load_mlp(f, dtype=np.float64):
    header = json.loads(f.readline().decode("utf-8"))
    if header.get("kind") != "mlp":
        raise ConfigError("not an mlp checkpoint")
    sizes = header["sizes"]
    members = header["members"]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = np.frombuffer(f.read(members * fan_in * fan_out * 8), dtype=np.float64)
        weights.append(w.reshape(members, fan_in, fan_out).astype(dtype))
        b = np.frombuffer(f.read(members * fan_out * 8), dtype=np.float64)
        biases.append(b.reshape(members, 1, fan_out).astype(dtype))
    mlp = Mlp(weights, biases, header["head"], sizes)
    for p in mlp.params():
        if not np.isfinite(p).all():
            raise ConfigError("checkpoint contains non-finite parameters")
    return mlp
