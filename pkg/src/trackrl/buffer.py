"""Fixed-capacity transition storage with uniform batch sampling.

One class serves both the real replay buffer (which carries pose and arc
alongside each transition so imagined rollouts can branch from stored
states) and the synthetic buffer of model-generated transitions. Storage
is preallocated; once full, the oldest rows are overwritten first.
"""

import numpy as np

from .errors import ConfigError, UsageError


class ReplayBuffer:
    """Ring buffer over named float64 arrays.

    Args:
        capacity: maximum number of stored transitions.
        fields: mapping name -> per-row width; width 0 stores scalars.
    """

    def __init__(self, capacity, fields):
        if capacity < 1:
            raise ConfigError(f"capacity must be positive, got {capacity}")
        self.capacity = int(capacity)
        self.fields = dict(fields)
        self.data = {}
        for name, width in self.fields.items():
            shape = (self.capacity,) if width == 0 else (self.capacity, width)
            self.data[name] = np.zeros(shape)
        self.n = 0
        self.ptr = 0

    def __len__(self):
        return self.n

    def add(self, **values):
        """Append one transition; extra or missing fields are errors."""
        if set(values) != set(self.fields):
            raise UsageError(
                f"expected fields {sorted(self.fields)}, got {sorted(values)}")
        i = self.ptr
        for name, v in values.items():
            self.data[name][i] = v
        self.ptr = (i + 1) % self.capacity
        self.n = min(self.n + 1, self.capacity)

    def add_batch(self, **values):
        """Append many transitions at once, evicting oldest on wrap."""
        if set(values) != set(self.fields):
            raise UsageError(
                f"expected fields {sorted(self.fields)}, got {sorted(values)}")
        first = next(iter(values.values()))
        m = len(first)
        if m > self.capacity:
            # only the newest `capacity` rows can survive
            values = {k: np.asarray(v)[m - self.capacity:]
                      for k, v in values.items()}
            m = self.capacity
        end = self.ptr + m
        if end <= self.capacity:
            sl = slice(self.ptr, end)
            for name, v in values.items():
                self.data[name][sl] = v
        else:
            head = self.capacity - self.ptr
            for name, v in values.items():
                v = np.asarray(v)
                self.data[name][self.ptr:] = v[:head]
                self.data[name][:end - self.capacity] = v[head:]
        self.ptr = end % self.capacity
        self.n = min(self.n + m, self.capacity)

    def sample(self, batch, rng):
        """Uniform without-replacement sample of `batch` stored rows."""
        if batch > self.n:
            raise UsageError(
                f"cannot sample {batch} from {self.n} stored transitions")
        idx = rng.choice(self.n, size=batch, replace=False)
        return {name: arr[idx].copy() for name, arr in self.data.items()}

    def rows(self, idx):
        """Gather specific stored rows by index (newest-agnostic)."""
        idx = np.asarray(idx)
        if self.n == 0 or idx.max(initial=-1) >= self.n:
            raise UsageError("row index beyond stored range")
        return {name: arr[idx].copy() for name, arr in self.data.items()}

    def get_all(self):
        """Views of every stored row, oldest-to-insertion order not
        guaranteed once the buffer has wrapped."""
        return {name: arr[:self.n] for name, arr in self.data.items()}
