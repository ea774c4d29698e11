"""Kernel tests against independent loop-based oracles and finite differences."""

import numpy as np
import pytest

from symlat import kernels


def conv1d_ref(x, filters, bias):
    """Triple-loop valid convolution, the reference for the vectorized kernel."""
    L, v = x.shape
    q, m, _ = filters.shape
    out = np.zeros((L - m + 1, q))
    for k in range(L - m + 1):
        for j in range(q):
            acc = 0.0
            for l in range(m):
                for c in range(v):
                    acc += x[k + l, c] * filters[j, l, c]
            out[k, j] = acc + bias[j]
    return out


def pool2d_ref(x, window, op):
    """Window-loop pooling with truncated trailing windows."""
    R, C = x.shape
    rows = -(-R // window)
    cols = -(-C // window)
    out = np.zeros((rows, cols))
    for i in range(rows):
        for j in range(cols):
            block = x[i * window:(i + 1) * window, j * window:(j + 1) * window]
            out[i, j] = block.mean() if op == "avg" else block.max()
    return out


def numeric_grad(f, x, eps=1e-6):
    """Central-difference gradient of scalar f at x, coordinate by coordinate."""
    g = np.zeros_like(x, dtype=float)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f(x)
        flat[i] = orig - eps
        lo = f(x)
        flat[i] = orig
        gf[i] = (hi - lo) / (2 * eps)
    return g


class TestConv1d:
    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(8, 2))
        filters = rng.normal(size=(4, 3, 2))
        bias = rng.normal(size=4)
        out = kernels.conv1d_forward(x, filters, bias)
        ref = conv1d_ref(x, filters, bias)
        assert out.shape == (6, 4)
        np.testing.assert_allclose(out, ref, rtol=1e-12, atol=1e-12)

    def test_single_window(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(5, 3))
        filters = rng.normal(size=(2, 5, 3))
        bias = np.zeros(2)
        out = kernels.conv1d_forward(x, filters, bias)
        assert out.shape == (1, 2)
        np.testing.assert_allclose(out, conv1d_ref(x, filters, bias), rtol=1e-12)

    def test_batched_matches_per_sample(self):
        rng = np.random.default_rng(11)
        xb = rng.normal(size=(5, 9, 2))
        filters = rng.normal(size=(3, 4, 2))
        bias = rng.normal(size=3)
        out = kernels.conv1d_forward(xb, filters, bias)
        for b in range(5):
            np.testing.assert_allclose(
                out[b], kernels.conv1d_forward(xb[b], filters, bias), rtol=1e-12
            )

    def test_kernel_longer_than_input_rejected(self):
        with pytest.raises(ValueError):
            kernels.conv1d_forward(np.zeros((3, 1)), np.zeros((2, 5, 1)), np.zeros(2))

    def test_variate_mismatch_rejected(self):
        with pytest.raises(ValueError):
            kernels.conv1d_forward(np.zeros((8, 2)), np.zeros((2, 3, 4)), np.zeros(2))

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(21)
        x = rng.normal(size=(10, 2))
        filters = rng.normal(size=(3, 4, 2))
        bias = rng.normal(size=3)
        w = rng.normal(size=(7, 3))  # projection to a scalar

        def loss_x(xv):
            return float((kernels.conv1d_forward(xv, filters, bias) * w).sum())

        def loss_f(fv):
            return float((kernels.conv1d_forward(x, fv, bias) * w).sum())

        def loss_b(bv):
            return float((kernels.conv1d_forward(x, filters, bv) * w).sum())

        gx, gf, gb = kernels.conv1d_backward(w.copy(), x, filters)
        np.testing.assert_allclose(gx, numeric_grad(loss_x, x.copy()), atol=1e-7)
        np.testing.assert_allclose(gf, numeric_grad(loss_f, filters.copy()), atol=1e-7)
        np.testing.assert_allclose(gb, numeric_grad(loss_b, bias.copy()), atol=1e-7)

    def test_backward_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            kernels.conv1d_backward(np.zeros((5, 3)), np.zeros((8, 2)), np.zeros((3, 3, 2)))


class TestDense:
    def test_identity_passthrough(self):
        x = np.array([1.0, -2.0, 3.0])
        w = np.eye(3)
        b = np.array([0.5, 0.5, 0.5])
        np.testing.assert_allclose(kernels.dense_forward(x, w, b), x + 0.5)

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=6)
        w = rng.normal(size=(4, 6))
        b = rng.normal(size=4)
        s = rng.normal(size=4)

        def loss_x(xv):
            return float(kernels.dense_forward(xv, w, b) @ s)

        def loss_w(wv):
            return float(kernels.dense_forward(x, wv, b) @ s)

        gx, gw, gb = kernels.dense_backward(s.copy(), x, w)
        np.testing.assert_allclose(gx, numeric_grad(loss_x, x.copy()), atol=1e-7)
        np.testing.assert_allclose(gw, numeric_grad(loss_w, w.copy()), atol=1e-7)
        np.testing.assert_allclose(gb, s, atol=1e-12)

    def test_batched(self):
        rng = np.random.default_rng(6)
        xb = rng.normal(size=(7, 5))
        w = rng.normal(size=(3, 5))
        b = rng.normal(size=3)
        out = kernels.dense_forward(xb, w, b)
        for i in range(7):
            np.testing.assert_allclose(out[i], kernels.dense_forward(xb[i], w, b))


class TestPooling:
    @pytest.mark.parametrize("shape", [(6, 8), (7, 9), (5, 5), (3, 4)])
    @pytest.mark.parametrize("window", [2, 3])
    def test_avg_matches_loop_oracle(self, shape, window):
        rng = np.random.default_rng(sum(shape) + window)
        x = rng.normal(size=shape)
        out = kernels.avgpool2d_forward(x, window)
        np.testing.assert_allclose(out, pool2d_ref(x, window, "avg"), rtol=1e-12)

    @pytest.mark.parametrize("shape", [(6, 8), (7, 9), (5, 5)])
    @pytest.mark.parametrize("window", [2, 3])
    def test_max_matches_loop_oracle(self, shape, window):
        rng = np.random.default_rng(sum(shape) * window)
        x = rng.normal(size=shape)
        out = kernels.maxpool2d_forward(x, window)
        np.testing.assert_allclose(out, pool2d_ref(x, window, "max"), rtol=1e-12)

    def test_avg_backward_distributes_uniformly(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(5, 7))

        def loss(xv):
            return float(kernels.avgpool2d_forward(xv, 2).sum())

        g = kernels.avgpool2d_backward(np.ones((3, 4)), x.shape, 2)
        np.testing.assert_allclose(g, numeric_grad(loss, x.copy()), atol=1e-8)

    def test_max_backward_routes_to_first_argmax(self):
        x = np.array([[1.0, 1.0], [1.0, 1.0]])  # all tied: row-major first wins
        out, switches = kernels.maxpool2d_forward(x, 2, return_switches=True)
        g = kernels.maxpool2d_backward(np.ones((1, 1)), x.shape, 2, switches)
        np.testing.assert_allclose(g, [[1.0, 0.0], [0.0, 0.0]])

    def test_max_backward_matches_finite_differences(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(7, 5))  # distinct values, so max is differentiable

        def loss(xv):
            return float(kernels.maxpool2d_forward(xv, 2).sum())

        _, switches = kernels.maxpool2d_forward(x, 2, return_switches=True)
        g = kernels.maxpool2d_backward(np.ones((4, 3)), x.shape, 2, switches)
        np.testing.assert_allclose(g, numeric_grad(loss, x.copy()), atol=1e-8)

    def test_window_larger_than_input_rejected(self):
        with pytest.raises(ValueError):
            kernels.avgpool2d_forward(np.zeros((2, 2)), 3)
        with pytest.raises(ValueError):
            kernels.avgpool2d_forward(np.zeros((4, 4)), 0)

    def test_batched_matches_per_sample(self):
        rng = np.random.default_rng(17)
        xb = rng.normal(size=(4, 7, 9))
        out = kernels.avgpool2d_forward(xb, 2)
        for b in range(4):
            np.testing.assert_allclose(out[b], kernels.avgpool2d_forward(xb[b], 2))


class TestSoftmaxCrossEntropy:
    def test_uniform_logits(self):
        loss, grad = kernels.softmax_cross_entropy(np.zeros(4), 2)
        assert loss == pytest.approx(np.log(4.0), rel=1e-12)
        np.testing.assert_allclose(grad, [0.25, 0.25, -0.75, 0.25], atol=1e-12)

    def test_loss_nonnegative_and_grad_sums_to_zero(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            c = int(rng.integers(2, 6))
            logits = rng.normal(scale=5.0, size=c)
            label = int(rng.integers(c))
            loss, grad = kernels.softmax_cross_entropy(logits, label)
            assert loss >= 0.0
            assert abs(grad.sum()) < 1e-12

    def test_shift_invariance(self):
        logits = np.array([1.0, -2.0, 0.5])
        l1, g1 = kernels.softmax_cross_entropy(logits, 0)
        l2, g2 = kernels.softmax_cross_entropy(logits + 1000.0, 0)
        assert l1 == pytest.approx(l2, rel=1e-9)
        np.testing.assert_allclose(g1, g2, atol=1e-12)

    def test_extreme_logits_stay_finite(self):
        loss, grad = kernels.softmax_cross_entropy(np.array([1e4, -1e4]), 1)
        assert np.isfinite(loss) and np.all(np.isfinite(grad))

    def test_grad_matches_finite_differences(self):
        rng = np.random.default_rng(29)
        logits = rng.normal(size=5)

        def loss(z):
            return float(kernels.softmax_cross_entropy(z, 3)[0])

        _, grad = kernels.softmax_cross_entropy(logits, 3)
        np.testing.assert_allclose(grad, numeric_grad(loss, logits.copy()), atol=1e-8)

    def test_non_finite_logits_rejected(self):
        with pytest.raises(ValueError):
            kernels.softmax_cross_entropy(np.array([np.nan, 0.0]), 0)
        with pytest.raises(ValueError):
            kernels.softmax_cross_entropy(np.array([np.inf, 0.0]), 1)

    def test_batched(self):
        rng = np.random.default_rng(31)
        logits = rng.normal(size=(6, 4))
        labels = rng.integers(0, 4, size=6)
        loss, grad = kernels.softmax_cross_entropy(logits, labels)
        for i in range(6):
            li, gi = kernels.softmax_cross_entropy(logits[i], int(labels[i]))
            assert loss[i] == pytest.approx(li, rel=1e-12)
            np.testing.assert_allclose(grad[i], gi, atol=1e-12)


class TestAdam:
    def test_matches_scalar_recurrence(self):
        """Ten steps on one scalar against the update rule written out longhand."""
        lr, b1, b2, eps = 1e-2, 0.9, 0.999, 1e-8
        params = {"w": np.array([0.5])}
        state = kernels.adam_init(params, lr=lr)
        rng = np.random.default_rng(37)
        w = 0.5
        m = vv = 0.0
        for t in range(1, 11):
            g = float(rng.normal())
            params = kernels.adam_step(params, {"w": np.array([g])}, state)
            m = b1 * m + (1 - b1) * g
            vv = b2 * vv + (1 - b2) * g * g
            mhat = m / (1 - b1**t)
            vhat = vv / (1 - b2**t)
            w = w - lr * mhat / (np.sqrt(vhat) + eps)
            assert params["w"][0] == pytest.approx(w, abs=1e-15)

    def test_first_step_size_is_lr(self):
        """For gradients well above eps, |Δw| of step 1 is lr at any scale."""
        for scale in (0.1, 1.0, 1e6):
            params = {"w": np.array([0.0])}
            state = kernels.adam_init(params, lr=1e-3)
            out = kernels.adam_step(params, {"w": np.array([scale])}, state)
            assert abs(out["w"][0]) == pytest.approx(1e-3, rel=1e-6)

    def test_key_mismatch_rejected(self):
        params = {"w": np.zeros(2)}
        state = kernels.adam_init(params, lr=1e-3)
        with pytest.raises(ValueError):
            kernels.adam_step(params, {"b": np.zeros(2)}, state)

    def test_deterministic(self):
        def run():
            params = {"w": np.linspace(-1, 1, 5)}
            state = kernels.adam_init(params, lr=1e-2)
            rng = np.random.default_rng(0)
            for _ in range(20):
                params = kernels.adam_step(params, {"w": rng.normal(size=5)}, state)
            return params["w"]

        a, b = run(), run()
        assert np.array_equal(a, b)


class TestGradCheck:
    def test_linear_function_exact(self):
        rng = np.random.default_rng(41)
        a = rng.normal(size=8)
        params = {"x": rng.normal(size=8)}

        def fn(p):
            return float(a @ p["x"]), {"x": a.copy()}

        report = kernels.grad_check(fn, params, tolerance=1e-10, n_probes=8, seed=1)
        assert report.passed
        assert report.max_rel_error < 1e-10

    def test_corrupted_backward_detected(self):
        rng = np.random.default_rng(43)
        a = rng.normal(size=8)
        params = {"x": rng.normal(size=8)}

        def fn(p):
            return float(a @ p["x"]), {"x": a * 1.5}  # wrong by 50%

        report = kernels.grad_check(fn, params, tolerance=1e-4, n_probes=8, seed=1)
        assert not report.passed
        assert report.max_rel_error > 1e-4

    def test_quadratic_within_tolerance(self):
        params = {"x": np.array([0.3, -1.2, 2.0])}

        def fn(p):
            x = p["x"]
            return float((x**2).sum()), {"x": 2 * x}

        report = kernels.grad_check(fn, params, tolerance=1e-6, n_probes=3, seed=2)
        assert report.passed
