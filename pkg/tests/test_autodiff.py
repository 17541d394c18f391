"""Reverse-mode autodiff checked against central differences.

Every op gets a finite-difference comparison in float64. Inputs are
sampled away from non-differentiable points (relu kinks, clip edges,
vmin ties) so the analytic and numeric gradients agree to tight
tolerance.
"""

import numpy as np
import pytest

import trackrl.nn.autodiff as ad
from _helpers import numeric_grad, rel_err

TOL = 1e-7


def check_op(build, shapes, rng, tol=TOL, shift=0.0):
    """Gradcheck a scalar-valued graph builder against finite differences.

    build(tape, *vars) must return a scalar Var. Each input is resampled
    with an offset to dodge kinks when shift is nonzero.
    """
    xs = [rng.standard_normal(s) + shift for s in shapes]
    for i in range(len(xs)):
        def f(x, i=i):
            tape = ad.Tape()
            vs = [tape.leaf(np.array(v, dtype=np.float64)) for v in xs]
            vs[i] = tape.leaf(np.array(x, dtype=np.float64))
            return float(build(tape, *vs).data)

        tape = ad.Tape()
        vs = [tape.leaf(np.array(v, dtype=np.float64)) for v in xs]
        loss = build(tape, *vs)
        grads = ad.backward(tape, loss)
        got = grads.of(vs[i])
        want = numeric_grad(f, xs[i])
        assert rel_err(got, want) < tol, f"input {i}: rel err {rel_err(got, want)}"


def test_add_sub_mul():
    rng = np.random.default_rng(0)
    check_op(lambda t, a, b: ad.vsum(ad.mul(ad.add(a, b), ad.sub(a, b))),
             [(3, 4), (3, 4)], rng)


def test_broadcast_add():
    rng = np.random.default_rng(1)
    check_op(lambda t, a, b: ad.vsum(ad.mul(ad.add(a, b), ad.add(a, b))),
             [(5, 3), (1, 3)], rng)


def test_scalar_mul_div():
    rng = np.random.default_rng(2)
    check_op(lambda t, a: ad.vsum(ad.mul(a, 2.5)), [(4,)], rng)
    check_op(lambda t, a: ad.vsum(a / 3.0), [(4,)], rng)


def test_matmul_2d():
    rng = np.random.default_rng(3)
    check_op(lambda t, a, b: ad.vsum(ad.matmul(a, b)), [(3, 4), (4, 2)], rng)


def test_matmul_3d_stacked():
    rng = np.random.default_rng(4)
    check_op(lambda t, a, b: ad.vsum(ad.matmul(a, b)),
             [(5, 3, 4), (5, 4, 2)], rng)


def test_matmul_broadcast_lead():
    rng = np.random.default_rng(5)
    check_op(lambda t, a, b: ad.vsum(ad.matmul(a, b)), [(3, 4), (5, 4, 2)], rng)


def test_exp_log():
    rng = np.random.default_rng(6)
    check_op(lambda t, a: ad.vsum(ad.exp(a)), [(3, 3)], rng)
    check_op(lambda t, a: ad.vsum(ad.log(a)), [(3, 3)], rng, shift=3.0)


def test_tanh_softplus():
    rng = np.random.default_rng(7)
    check_op(lambda t, a: ad.vsum(ad.tanh(a)), [(4, 2)], rng)
    check_op(lambda t, a: ad.vsum(ad.softplus(a)), [(4, 2)], rng)


def test_softplus_extreme_args_finite():
    tape = ad.Tape()
    x = tape.leaf(np.array([-800.0, 0.0, 800.0]))
    y = ad.softplus(x)
    assert np.all(np.isfinite(y.data))
    assert y.data[0] == pytest.approx(0.0, abs=1e-300)
    assert y.data[2] == pytest.approx(800.0)
    g = ad.backward(tape, ad.vsum(y)).of(x)
    assert np.all(np.isfinite(g))


def test_relu_away_from_kink():
    rng = np.random.default_rng(8)
    check_op(lambda t, a: ad.vsum(ad.relu(a)), [(6, 6)], rng, shift=0.5)
    check_op(lambda t, a: ad.vsum(ad.relu(a)), [(6, 6)], rng, shift=-0.5)


def test_clip_interior_and_exterior_grad():
    tape = ad.Tape()
    x = tape.leaf(np.array([-2.0, -0.5, 0.5, 2.0]))
    y = ad.clip(x, -1.0, 1.0)
    g = ad.backward(tape, ad.vsum(y)).of(x)
    assert np.array_equal(g, np.array([0.0, 1.0, 1.0, 0.0]))


def test_vsum_axes():
    rng = np.random.default_rng(9)
    check_op(lambda t, a: ad.vsum(ad.mul(ad.vsum(a, axis=0, keepdims=True), 1.5)),
             [(3, 4)], rng)
    check_op(lambda t, a: ad.vsum(ad.exp(ad.vsum(a, axis=1))), [(2, 3)], rng)


def test_vmean():
    rng = np.random.default_rng(10)
    check_op(lambda t, a: ad.vmean(ad.mul(a, a)), [(7,)], rng)


def test_vmin_axis_gather():
    rng = np.random.default_rng(11)
    # well-separated values avoid argmin ties under fd perturbation
    base = np.array([[3.0, 1.0, 2.0], [0.5, 4.0, 6.0]])
    def f(x):
        tape = ad.Tape()
        v = tape.leaf(np.array(x, dtype=np.float64))
        return float(ad.vsum(ad.vmin(v, axis=0)).data)
    tape = ad.Tape()
    v = tape.leaf(base.copy())
    loss = ad.vsum(ad.vmin(v, axis=0))
    g = ad.backward(tape, loss).of(v)
    want = numeric_grad(f, base)
    assert rel_err(g, want) < TOL
    assert g.sum() == pytest.approx(3.0)


def test_concat_narrow():
    rng = np.random.default_rng(12)
    check_op(lambda t, a, b: ad.vsum(ad.mul(ad.concat([a, b], axis=1),
                                            ad.concat([b, a], axis=1))),
             [(2, 3), (2, 3)], rng)
    check_op(lambda t, a: ad.vsum(ad.narrow(a, axis=1, start=1, length=2)),
             [(3, 5)], rng)


def test_detach_blocks_gradient():
    tape = ad.Tape()
    x = tape.leaf(np.array([2.0, 3.0]))
    y = ad.mul(ad.detach(x), x)
    g = ad.backward(tape, ad.vsum(y)).of(x)
    assert np.array_equal(g, np.array([2.0, 3.0]))


def test_unreached_leaf_gets_zeros():
    tape = ad.Tape()
    x = tape.leaf(np.ones((2, 2)))
    z = tape.leaf(np.ones(3))
    g = ad.backward(tape, ad.vsum(x))
    assert np.array_equal(g.of(z), np.zeros(3))


def test_grad_accumulation_diamond():
    # x used twice: d/dx (x*x + x) = 2x + 1
    tape = ad.Tape()
    x = tape.leaf(np.array([1.5, -2.0]))
    loss = ad.vsum(ad.add(ad.mul(x, x), x))
    g = ad.backward(tape, loss).of(x)
    assert np.allclose(g, 2 * x.data + 1, rtol=0, atol=1e-15)


def test_float32_graph_stays_float32():
    tape = ad.Tape()
    x = tape.leaf(np.ones((2, 2), dtype=np.float32))
    y = ad.mul(ad.add(x, 1.0), 0.5)
    assert y.data.dtype == np.float32
    g = ad.backward(tape, ad.vsum(y)).of(x)
    assert g.dtype == np.float32


def test_composite_network_loss_gradcheck():
    """One hidden-layer net with tanh head and mse loss, end to end."""
    rng = np.random.default_rng(13)
    x = rng.standard_normal((8, 3))
    t = rng.standard_normal((8, 2))

    def build(tape, w1, b1, w2, b2):
        h = ad.relu(ad.add(ad.matmul(tape.leaf(x), w1), b1))
        y = ad.tanh(ad.add(ad.matmul(h, w2), b2))
        d = ad.sub(y, tape.leaf(t))
        return ad.vmean(ad.mul(d, d))

    check_op(build, [(3, 5), (1, 5), (5, 2), (1, 2)], rng, tol=1e-6, shift=0.1)
