"""Engine ops against finite differences and closed-form gradients."""

import numpy as np
import pytest

from atfnet.errors import GradcheckFailure, ShapeMismatch
from atfnet.nn import autodiff as ad


def check(forward, leaves, tolerance=1e-5):
    report = ad.gradcheck(forward, leaves, tolerance=tolerance)
    assert report.passed, (report.worst_name, report.max_rel_error)
    return report


class TestElementwise:
    def test_add_mul_closed_form(self):
        x = ad.parameter([2.0, -3.0], "x")
        loss = ad.sum_(ad.square(x * 2.0 - 1.0))
        loss.backward()
        np.testing.assert_allclose(x.grad, 2 * (np.array([2.0, -3.0]) * 2 - 1) * 2)

    def test_broadcast_add(self):
        a = ad.parameter(np.random.default_rng(0).normal(size=(3, 4)), "a")
        b = ad.parameter(np.random.default_rng(1).normal(size=4), "b")
        probe = np.random.default_rng(2).normal(size=(3, 4))
        check(lambda: ad.sum_((a + b) * probe), [a, b])

    def test_broadcast_mul_keepdims_column(self):
        a = ad.parameter(np.random.default_rng(3).normal(size=(3, 4)), "a")
        s = ad.parameter(np.random.default_rng(4).normal(size=(3, 1)), "s")
        probe = np.random.default_rng(5).normal(size=(3, 4))
        check(lambda: ad.sum_(a * s * probe), [a, s])

    def test_div_sqrt_exp(self):
        a = ad.parameter(np.abs(np.random.default_rng(6).normal(size=5)) + 0.5, "a")
        b = ad.parameter(np.abs(np.random.default_rng(7).normal(size=5)) + 0.5, "b")
        check(lambda: ad.sum_(ad.exp(ad.sqrt(a) / b) + b / a), [a, b])

    def test_relu_gradient_mask(self):
        x = ad.parameter([-2.0, -0.5, 0.5, 2.0], "x")
        loss = ad.sum_(ad.relu(x))
        loss.backward()
        np.testing.assert_array_equal(x.grad, [0.0, 0.0, 1.0, 1.0])

    def test_magnitude_at_origin_is_subgradient_zero(self):
        re = ad.parameter([0.0, 3.0], "re")
        im = ad.parameter([0.0, 4.0], "im")
        loss = ad.sum_(ad.magnitude(re, im))
        loss.backward()
        np.testing.assert_allclose(re.grad, [0.0, 0.6])
        np.testing.assert_allclose(im.grad, [0.0, 0.8])

    def test_magnitude_fd(self):
        re = ad.parameter(np.random.default_rng(8).normal(size=6), "re")
        im = ad.parameter(np.random.default_rng(9).normal(size=6), "im")
        probe = np.random.default_rng(10).normal(size=6)
        check(lambda: ad.sum_(ad.magnitude(re, im) * probe), [re, im])


class TestMatmul:
    def test_plain_2d(self):
        a = ad.parameter(np.random.default_rng(0).normal(size=(3, 4)), "a")
        b = ad.parameter(np.random.default_rng(1).normal(size=(4, 2)), "b")
        probe = np.random.default_rng(2).normal(size=(3, 2))
        check(lambda: ad.sum_(ad.matmul(a, b) * probe), [a, b])

    def test_batched_left_operand(self):
        a = ad.parameter(np.random.default_rng(3).normal(size=(5, 3, 4)), "a")
        b = ad.parameter(np.random.default_rng(4).normal(size=(4, 2)), "b")
        probe = np.random.default_rng(5).normal(size=(5, 3, 2))
        check(lambda: ad.sum_(ad.matmul(a, b) * probe), [a, b])

    def test_both_batched(self):
        a = ad.parameter(np.random.default_rng(6).normal(size=(2, 3, 4)), "a")
        b = ad.parameter(np.random.default_rng(7).normal(size=(2, 4, 3)), "b")
        probe = np.random.default_rng(8).normal(size=(2, 3, 3))
        check(lambda: ad.sum_(ad.matmul(a, b) * probe), [a, b])

    def test_inner_dim_mismatch(self):
        a = ad.Tensor(np.zeros((2, 3)))
        b = ad.Tensor(np.zeros((4, 2)))
        with pytest.raises(ShapeMismatch):
            ad.matmul(a, b)

    def test_value_against_numpy(self):
        rng = np.random.default_rng(9)
        a, b = rng.normal(size=(6, 3)), rng.normal(size=(3, 5))
        np.testing.assert_array_equal(ad.matmul(ad.Tensor(a), ad.Tensor(b)).data,
                                      a @ b)


class TestShapeOps:
    def test_reshape_round_trip(self):
        a = ad.parameter(np.random.default_rng(0).normal(size=(2, 6)), "a")
        probe = np.random.default_rng(1).normal(size=(3, 4))
        check(lambda: ad.sum_(ad.reshape(a, (3, 4)) * probe), [a])

    def test_transpose_last(self):
        a = ad.parameter(np.random.default_rng(2).normal(size=(2, 3, 4)), "a")
        probe = np.random.default_rng(3).normal(size=(2, 4, 3))
        check(lambda: ad.sum_(ad.transpose_last(a) * probe), [a])

    def test_take_last_scatter(self):
        a = ad.parameter(np.random.default_rng(4).normal(size=(3, 2)), "a")
        loss = ad.sum_(ad.square(ad.take_last(a, 1)))
        loss.backward()
        assert np.all(a.grad[:, 0] == 0)
        np.testing.assert_allclose(a.grad[:, 1], 2 * a.data[:, 1])

    def test_concat_last(self):
        a = ad.parameter(np.random.default_rng(5).normal(size=(3, 2)), "a")
        b = ad.parameter(np.random.default_rng(6).normal(size=(3, 4)), "b")
        probe = np.random.default_rng(7).normal(size=(3, 6))
        check(lambda: ad.sum_(ad.concat_last([a, b]) * probe), [a, b])

    def test_unfold_last_values_and_grads(self):
        x = ad.parameter(np.arange(8.0), "x")
        windows = ad.unfold_last(x, 4, 2)
        np.testing.assert_array_equal(
            windows.data, [[0, 1, 2, 3], [2, 3, 4, 5], [4, 5, 6, 7]])
        probe = np.random.default_rng(8).normal(size=(3, 4))
        check(lambda: ad.sum_(ad.unfold_last(x, 4, 2) * probe), [x])

    def test_unfold_too_long(self):
        with pytest.raises(ShapeMismatch):
            ad.unfold_last(ad.Tensor(np.zeros(3)), 4, 1)


class TestReductionsSoftmax:
    def test_sum_axis_keepdims(self):
        a = ad.parameter(np.random.default_rng(0).normal(size=(3, 4)), "a")
        probe = np.random.default_rng(1).normal(size=(3, 1))
        check(lambda: ad.sum_(ad.sum_(a, axis=-1, keepdims=True) * probe), [a])

    def test_mean_matches_numpy(self):
        a = ad.Tensor(np.arange(12.0).reshape(3, 4))
        np.testing.assert_allclose(ad.mean_(a).data, 5.5)
        np.testing.assert_allclose(ad.mean_(a, axis=-1).data, [1.5, 5.5, 9.5])

    def test_softmax_rows_sum_to_one(self):
        a = ad.Tensor(np.random.default_rng(2).normal(size=(5, 7)) * 10)
        out = ad.softmax_last(a).data
        np.testing.assert_allclose(out.sum(axis=-1), np.ones(5), atol=1e-12)
        assert np.all(out >= 0)

    def test_softmax_gradcheck(self):
        a = ad.parameter(np.random.default_rng(3).normal(size=(2, 5)), "a")
        probe = np.random.default_rng(4).normal(size=(2, 5))
        check(lambda: ad.sum_(ad.softmax_last(a) * probe), [a])

    def test_softmax_shift_invariance(self):
        a = np.random.default_rng(5).normal(size=(2, 5))
        lhs = ad.softmax_last(ad.Tensor(a)).data
        rhs = ad.softmax_last(ad.Tensor(a + 100.0)).data
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestBackwardMechanics:
    def test_diamond_graph_accumulates(self):
        x = ad.parameter([3.0], "x")
        y = x * 2.0
        loss = ad.sum_(y * y + y)
        loss.backward()
        # d/dx (4x^2 + 2x) = 8x + 2
        np.testing.assert_allclose(x.grad, [26.0])

    def test_backward_requires_scalar(self):
        x = ad.parameter([1.0, 2.0], "x")
        with pytest.raises(ShapeMismatch):
            (x * 2.0).backward()

    def test_gradcheck_detects_fault(self):
        # a deliberately corrupted gradient must fail the check
        x = ad.parameter(np.random.default_rng(6).normal(size=4), "x")

        def forward():
            out = ad.square(x)
            original = out._backward

            def corrupted(g):
                original(g * 1.01)

            out._backward = corrupted
            return ad.sum_(out)

        report = ad.gradcheck(forward, [x])
        assert not report.passed
        with pytest.raises(GradcheckFailure):
            report.require()
