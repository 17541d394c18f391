"""Reverse-mode automatic differentiation on numpy arrays.

A ``Tape`` records operations in execution order; ``backward`` replays them
in reverse to accumulate exact gradients of a scalar loss with respect to
every leaf it can reach.  Only the dense-MLP vocabulary needed by the
learners is implemented: elementwise arithmetic, matmul (2-D/3-D with
leading-axis broadcasting), a few nonlinearities, reductions, concat,
slicing and a min-gather.  Arrays keep whatever float dtype they came in
with, so the same graph code runs in float64 for gradient checks and in
float32 for throughput.
"""

import numpy as np

from ..errors import ConfigError


class Tape:
    """Execution-ordered record of differentiable operations."""

    __slots__ = ("_nodes",)

    def __init__(self):
        self._nodes = []

    def leaf(self, data, dtype=None):
        """Wrap an array as a differentiable input (no copy when possible)."""
        arr = np.asarray(data, dtype=dtype) if dtype else np.asarray(data)
        if not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        return Var(self, arr)


class Var:
    """A node on a tape: array data plus backward bookkeeping."""

    __slots__ = ("tape", "data", "_parents", "_bwd")

    def __init__(self, tape, data, parents=(), bwd=None):
        self.tape = tape
        self.data = data
        self._parents = parents
        self._bwd = bwd
        if bwd is not None:
            tape._nodes.append(self)

    @property
    def shape(self):
        return self.data.shape

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        if isinstance(other, Var):
            raise ConfigError("division between tape variables is not supported")
        return mul(self, 1.0 / np.asarray(other))

    def __matmul__(self, other):
        return matmul(self, other)


class Grads:
    """Gradient lookup produced by ``backward``."""

    __slots__ = ("_table",)

    def __init__(self, table):
        self._table = table

    def of(self, var):
        entry = self._table.get(id(var))
        if entry is None:
            return np.zeros_like(var.data)
        return entry[1]


def backward(tape, loss):
    """Accumulate d(loss)/d(leaf) for every leaf reachable from ``loss``."""
    if not isinstance(loss, Var) or loss.data.size != 1:
        raise ConfigError("backward requires a scalar tape variable as loss")
    # Entries hold (var, grad); keeping the var alive pins its id() key.
    table = {id(loss): (loss, np.ones_like(loss.data))}
    for node in reversed(tape._nodes):
        entry = table.pop(id(node), None)
        if entry is None:
            continue
        g_out = entry[1]
        for parent, g in zip(node._parents, node._bwd(g_out)):
            if g is None:
                continue
            have = table.get(id(parent))
            table[id(parent)] = (parent, g if have is None else have[1] + g)
    return Grads(table)


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` (inverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _data(x):
    # Python scalars stay scalars: wrapping them in 0-d arrays would upcast
    # float32 graphs to float64 under numpy's promotion rules.
    return x.data if isinstance(x, Var) else x


def _tape_of(*args):
    for a in args:
        if isinstance(a, Var):
            return a.tape
    raise ConfigError("operation needs at least one tape variable")


def add(a, b):
    ad, bd = _data(a), _data(b)
    out = ad + bd
    parents, sides = [], []
    for x, xd in ((a, ad), (b, bd)):
        if isinstance(x, Var):
            parents.append(x)
            sides.append(xd.shape)

    def bwd(g):
        return tuple(_unbroadcast(g, s) for s in sides)

    return Var(_tape_of(a, b), out, tuple(parents), bwd)


def sub(a, b):
    ad, bd = _data(a), _data(b)
    out = ad - bd
    parents, signs = [], []
    for x, sign in ((a, 1.0), (b, -1.0)):
        if isinstance(x, Var):
            parents.append(x)
            signs.append((sign, _data(x).shape))

    def bwd(g):
        return tuple(_unbroadcast(sign * g, s) for sign, s in signs)

    return Var(_tape_of(a, b), out, tuple(parents), bwd)


def mul(a, b):
    ad, bd = _data(a), _data(b)
    out = ad * bd
    parents, factors = [], []
    if isinstance(a, Var):
        parents.append(a)
        factors.append((bd, ad.shape))
    if isinstance(b, Var):
        parents.append(b)
        factors.append((ad, bd.shape))

    def bwd(g):
        return tuple(_unbroadcast(g * f, s) for f, s in factors)

    return Var(_tape_of(a, b), out, tuple(parents), bwd)


def matmul(a, b):
    ad = a.data if isinstance(a, Var) else np.asarray(a)
    bd = b.data if isinstance(b, Var) else np.asarray(b)
    if ad.ndim < 2 or bd.ndim < 2:
        raise ConfigError("matmul operands must be at least 2-D")
    out = ad @ bd
    parents, modes = [], []
    if isinstance(a, Var):
        parents.append(a)
        modes.append("a")
    if isinstance(b, Var):
        parents.append(b)
        modes.append("b")

    def bwd(g):
        grads = []
        for m in modes:
            if m == "a":
                grads.append(_unbroadcast(g @ np.swapaxes(bd, -1, -2), ad.shape))
            else:
                grads.append(_unbroadcast(np.swapaxes(ad, -1, -2) @ g, bd.shape))
        return tuple(grads)

    return Var(_tape_of(a, b), out, tuple(parents), bwd)


def _unary(x, out, dfn):
    def bwd(g):
        return (g * dfn(),)

    return Var(x.tape, out, (x,), bwd)


def exp(x):
    out = np.exp(x.data)
    return _unary(x, out, lambda: out)


def log(x):
    return _unary(x, np.log(x.data), lambda: 1.0 / x.data)


def tanh(x):
    out = np.tanh(x.data)
    return _unary(x, out, lambda: 1.0 - out * out)


def relu(x):
    out = np.maximum(x.data, 0.0)
    return _unary(x, out, lambda: (x.data > 0.0).astype(x.data.dtype))


def softplus(x):
    # log(1 + e^x), computed without overflow for large |x|.
    d = x.data
    out = np.maximum(d, 0.0) + np.log1p(np.exp(-np.abs(d)))

    def dfn():
        p = np.exp(-np.abs(d))
        return np.where(d >= 0, 1.0 / (1.0 + p), p / (1.0 + p))

    return _unary(x, out, dfn)


def clip(x, lo, hi):
    """Clamp with zero gradient outside [lo, hi]."""
    out = np.clip(x.data, lo, hi)
    inside = ((x.data > lo) & (x.data < hi)).astype(x.data.dtype)
    return _unary(x, out, lambda: inside)


def vsum(x, axis=None, keepdims=False):
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def bwd(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.data.shape).copy(),)

    return Var(x.tape, np.asarray(out), (x,), bwd)


def vmean(x, axis=None, keepdims=False):
    n = x.data.size if axis is None else x.data.shape[axis]
    return mul(vsum(x, axis=axis, keepdims=keepdims), 1.0 / n)


def vmin(x, axis):
    """Minimum along one axis; gradient flows to the first minimizer."""
    idx = np.argmin(x.data, axis=axis)
    keep = np.expand_dims(idx, axis)
    out = np.take_along_axis(x.data, keep, axis=axis).squeeze(axis=axis)

    def bwd(g):
        z = np.zeros_like(x.data)
        np.put_along_axis(z, keep, np.expand_dims(g, axis), axis=axis)
        return (z,)

    return Var(x.tape, out, (x,), bwd)


def concat(parts, axis=-1):
    datas = [p.data if isinstance(p, Var) else np.asarray(p) for p in parts]
    out = np.concatenate(datas, axis=axis)
    sizes = [d.shape[axis] for d in datas]
    offsets = np.cumsum([0] + sizes)
    parents, spans = [], []
    for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
        if isinstance(p, Var):
            parents.append(p)
            spans.append((int(lo), int(hi)))

    def bwd(g):
        moved = np.moveaxis(g, axis, 0)
        return tuple(
            np.moveaxis(moved[lo:hi], 0, axis) for lo, hi in spans
        )

    return Var(_tape_of(*parts), out, tuple(parents), bwd)


def narrow(x, axis, start, length):
    """Contiguous slice along one axis."""
    sl = [slice(None)] * x.data.ndim
    sl[axis] = slice(start, start + length)
    sl = tuple(sl)
    out = x.data[sl]

    def bwd(g):
        z = np.zeros_like(x.data)
        z[sl] = g
        return (z,)

    return Var(x.tape, out, (x,), bwd)


def detach(x):
    """Block gradient flow: the result is a fresh leaf with the same data."""
    return Var(x.tape, x.data)
