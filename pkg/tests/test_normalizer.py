"""Affine normalizer: roundtrip exactness and degenerate dimensions."""

import io

import numpy as np
import pytest

from trackrl.errors import ConfigError
from trackrl.model import Normalizer


def test_roundtrip_tight():
    rng = np.random.default_rng(0)
    data = rng.standard_normal((500, 7)) * rng.uniform(0.1, 50, 7) + 3
    nm = Normalizer(7).fit(data)
    x = rng.standard_normal((40, 7)) * 20
    back = nm.denormalize(nm.normalize(x))
    assert np.max(np.abs(back - x)) < 1e-12
    z = nm.normalize(data)
    assert np.max(np.abs(z.mean(axis=0))) < 1e-12
    assert np.max(np.abs(z.std(axis=0) - 1)) < 1e-9


def test_constant_dimension_floored():
    data = np.ones((100, 3))
    data[:, 1] = 42.0
    nm = Normalizer(3).fit(data)
    assert np.all(nm.std >= 1e-8)
    back = nm.denormalize(nm.normalize(data))
    assert np.max(np.abs(back - data)) < 1e-12


def test_shape_validation():
    with pytest.raises(ConfigError):
        Normalizer(4).fit(np.zeros((10, 3)))


def test_save_load_roundtrip():
    rng = np.random.default_rng(1)
    nm = Normalizer(5).fit(rng.standard_normal((50, 5)) * 3 + 1)
    buf = io.BytesIO()
    nm.save(buf)
    buf.seek(0)
    back = Normalizer.load(buf)
    assert np.array_equal(back.mean, nm.mean)
    assert np.array_equal(back.std, nm.std)


def test_scale_only_is_linear_part():
    rng = np.random.default_rng(2)
    nm = Normalizer(3).fit(rng.standard_normal((50, 3)) * 5 + 2)
    d = np.array([1.0, -2.0, 0.5])
    assert np.allclose(nm.scale_only(d), d * nm.std, atol=0, rtol=0)
