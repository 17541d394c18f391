"""Per-dimension affine normalization fitted to a dataset."""

import json

import numpy as np

from ..errors import ConfigError

STD_FLOOR = 1e-8


class Normalizer:
    """Shift-and-scale transform with a floored standard deviation.

    The floor keeps constant dimensions (zero variance) from blowing up
    the inverse transform; such dimensions normalize to ~0 and roundtrip
    exactly.
    """

    def __init__(self, dim):
        self.dim = int(dim)
        self.mean = np.zeros(self.dim)
        self.std = np.ones(self.dim)

    def fit(self, data):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != self.dim:
            raise ConfigError(
                f"normalizer expects (n, {self.dim}) data, got {data.shape}")
        self.mean = data.mean(axis=0)
        self.std = np.maximum(data.std(axis=0), STD_FLOOR)
        return self

    def normalize(self, x):
        return (x - self.mean) / self.std

    def denormalize(self, x):
        return x * self.std + self.mean

    def scale_only(self, x):
        """Scale a difference or spread quantity (no shift)."""
        return x * self.std

    def save(self, f):
        header = {"kind": "normalizer", "dim": self.dim}
        f.write((json.dumps(header) + "\n").encode())
        f.write(self.mean.astype(np.float64).tobytes())
        f.write(self.std.astype(np.float64).tobytes())

    @classmethod
    def load(cls, f):
        header = json.loads(f.readline().decode())
        if header.get("kind") != "normalizer":
            raise ConfigError(f"expected a normalizer block, got {header}")
        out = cls(header["dim"])
        n = out.dim * 8
        out.mean = np.frombuffer(f.read(n), dtype=np.float64).copy()
        out.std = np.frombuffer(f.read(n), dtype=np.float64).copy()
        if not (np.all(np.isfinite(out.mean)) and np.all(np.isfinite(out.std))):
            raise ConfigError("normalizer block contains non-finite values")
        return out
