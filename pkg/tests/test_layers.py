"""Complex and real layers: value oracles, gradchecks, RevIN, Adam."""

import numpy as np
import pytest

from atfnet.errors import ShapeMismatch
from atfnet.nn import autodiff as ad
from atfnet.nn.adam import Adam
from atfnet.nn.complex_ops import CTensor, c_constant, c_numpy
from atfnet.nn.layers import (
    EPSILON,
    AttentionScale,
    ComplexFeedForward,
    ComplexLayerNorm,
    CsaAttention,
    EncoderLayerConfig,
    FieldKind,
    RealEncoderLayer,
    complex_layernorm,
    complex_linear,
    revin_freq_denormalize,
    revin_freq_normalize,
    revin_time_denormalize,
    revin_time_normalize,
)


def complex_probe_loss(out: CTensor, rng):
    pr = rng.normal(size=out.re.data.shape)
    pi = rng.normal(size=out.im.data.shape)
    return ad.sum_(out.re * pr) + ad.sum_(out.im * pi)


def assert_gradcheck(forward, leaves, tolerance=1e-5):
    report = ad.gradcheck(forward, leaves, tolerance=tolerance)
    assert report.passed, (report.worst_name, report.max_rel_error)


class TestComplexLinear:
    def test_identity_map(self):
        w = ad.parameter(np.stack([np.eye(3), np.zeros((3, 3))], axis=-1), "w",
                         is_complex=True)
        x = c_constant(np.random.default_rng(0).normal(size=(4, 3))
                       + 1j * np.random.default_rng(1).normal(size=(4, 3)))
        out = complex_linear(x, w)
        np.testing.assert_allclose(c_numpy(out), c_numpy(x), atol=1e-15)

    def test_rotation_by_i(self):
        w = ad.parameter(np.array([[[0.0, 1.0]]]), "w", is_complex=True)
        x = c_constant(np.array([[1.0 + 1.0j]]))
        out = complex_linear(x, w)
        np.testing.assert_allclose(c_numpy(out), [[-1.0 + 1.0j]], atol=1e-15)

    def test_matches_numpy_complex_matmul(self):
        rng = np.random.default_rng(2)
        wc = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
        bc = rng.normal(size=5) + 1j * rng.normal(size=5)
        xc = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
        w = ad.parameter(np.stack([wc.real, wc.imag], axis=-1), "w",
                         is_complex=True)
        b = ad.parameter(np.stack([bc.real, bc.imag], axis=-1), "b",
                         is_complex=True)
        out = complex_linear(c_constant(xc), w, b)
        np.testing.assert_allclose(c_numpy(out), xc @ wc + bc, atol=1e-12)

    def test_real_only_inputs_reproduce_real_layer(self):
        # imaginary planes zero: complex map degenerates to the real one
        rng = np.random.default_rng(3)
        wr = rng.normal(size=(3, 4))
        xr = rng.normal(size=(6, 3))
        w = ad.parameter(np.stack([wr, np.zeros_like(wr)], axis=-1), "w",
                         is_complex=True)
        out = complex_linear(CTensor(ad.Tensor(xr), ad.Tensor(np.zeros_like(xr))), w)
        np.testing.assert_array_equal(out.re.data, xr @ wr)
        np.testing.assert_array_equal(out.im.data, np.zeros((6, 4)))

    def test_gradcheck(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            w = ad.parameter(rng.normal(size=(3, 2, 2)), "w", is_complex=True)
            b = ad.parameter(rng.normal(size=(2, 2)), "b", is_complex=True)
            xr = ad.parameter(rng.normal(size=(4, 3)), "xr")
            xi = ad.parameter(rng.normal(size=(4, 3)), "xi")
            assert_gradcheck(
                lambda: complex_probe_loss(
                    complex_linear(CTensor(xr, xi), w, b), np.random.default_rng(99)),
                [w, b, xr, xi])

    def test_shape_mismatch(self):
        w = ad.parameter(np.zeros((3, 2, 2)), "w", is_complex=True)
        x = c_constant(np.zeros((4, 5), dtype=complex))
        with pytest.raises(ShapeMismatch):
            complex_linear(x, w)


class TestCsaAttention:
    def _attention(self, seed, heads=2, scale=AttentionScale.NONE):
        rng = np.random.default_rng(seed)
        cfg = EncoderLayerConfig(model_dim=4, head_dim=2, num_heads=heads,
                                 ffn_dim=8, attention_scale=scale)
        return CsaAttention("csa", cfg, rng), rng

    def test_single_token_collapses_to_linear(self):
        attn, rng = self._attention(0, heads=1)
        x = c_constant(rng.normal(size=(1, 4)) + 1j * rng.normal(size=(1, 4)))
        out = attn(x)
        # softmax over one key is 1: output is V projected by wo
        wv = attn.wv[0].data[..., 0] + 1j * attn.wv[0].data[..., 1]
        wo = attn.wo.data[..., 0] + 1j * attn.wo.data[..., 1]
        want = (c_numpy(x) @ wv) @ wo
        np.testing.assert_allclose(c_numpy(out), want, atol=1e-12)

    def test_zero_queries_give_uniform_attention(self):
        attn, rng = self._attention(1, heads=1)
        attn.wq[0].data[:] = 0.0
        attn.wk[0].data[:] = 0.0
        x = c_constant(rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4)))
        out = attn(x)
        wv = attn.wv[0].data[..., 0] + 1j * attn.wv[0].data[..., 1]
        wo = attn.wo.data[..., 0] + 1j * attn.wo.data[..., 1]
        v = c_numpy(x) @ wv
        want = np.repeat(v.mean(axis=0, keepdims=True), 5, axis=0) @ wo
        np.testing.assert_allclose(c_numpy(out), want, atol=1e-12)

    def test_attention_rows_stochastic(self):
        # modulus logits are real and nonnegative; softmax rows sum to one
        rng = np.random.default_rng(2)
        logits = ad.magnitude(ad.Tensor(rng.normal(size=(6, 6))),
                              ad.Tensor(rng.normal(size=(6, 6))))
        rows = ad.softmax_last(logits).data
        assert np.all(rows >= 0)
        np.testing.assert_allclose(rows.sum(axis=-1), np.ones(6), atol=1e-12)

    def test_gradcheck_params_and_inputs(self):
        for seed in range(10):
            attn, rng = self._attention(100 + seed)
            xr = ad.parameter(rng.normal(size=(3, 4)), "xr")
            xi = ad.parameter(rng.normal(size=(3, 4)), "xi")
            assert_gradcheck(
                lambda: complex_probe_loss(attn(CTensor(xr, xi)),
                                           np.random.default_rng(1234)),
                attn.parameters() + [xr, xi])

    def test_scaled_variant_changes_output(self):
        attn_plain, rng = self._attention(7)
        attn_scaled, _ = self._attention(7, scale=AttentionScale.INV_SQRT_D)
        x = c_constant(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        plain = c_numpy(attn_plain(x))
        scaled = c_numpy(attn_scaled(x))
        assert np.abs(plain - scaled).max() > 1e-9

    def test_conjugate_keys_variant(self):
        rng = np.random.default_rng(8)
        cfg = EncoderLayerConfig(model_dim=4, head_dim=2, num_heads=1, ffn_dim=8,
                                 conjugate_keys=True)
        attn = CsaAttention("csa", cfg, rng)
        x = c_constant(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        out = attn(x)
        assert np.all(np.isfinite(c_numpy(out)))


class TestComplexLayerNorm:
    def test_constant_token_maps_to_beta(self):
        rng = np.random.default_rng(0)
        gamma = ad.parameter(rng.normal(size=(4, 2)), "gamma", is_complex=True)
        beta = ad.parameter(rng.normal(size=(4, 2)), "beta", is_complex=True)
        token = c_constant(np.full((1, 4), 2.0 + 3.0j))
        out = complex_layernorm(token, gamma, beta)
        want = beta.data[:, 0] + 1j * beta.data[:, 1]
        np.testing.assert_allclose(c_numpy(out)[0], want, atol=1e-12)

    def test_normalized_token_unchanged_by_unit_affine(self):
        # zero complex mean and unit magnitude-deviation: identity to 1e-9
        rng = np.random.default_rng(1)
        z = rng.normal(size=8) + 1j * rng.normal(size=8)
        z = z - z.mean()
        mags = np.abs(z)
        z = z / mags.std()
        gamma = np.zeros((8, 2))
        gamma[:, 0] = 1.0
        out = complex_layernorm(
            c_constant(z[None, :]),
            ad.parameter(gamma, "g", is_complex=True),
            ad.parameter(np.zeros((8, 2)), "b", is_complex=True))
        np.testing.assert_allclose(c_numpy(out)[0], z, atol=1e-9)

    def test_gradcheck(self):
        for seed in range(10):
            rng = np.random.default_rng(300 + seed)
            ln = ComplexLayerNorm("ln", 4)
            ln.gamma.data = np.ascontiguousarray(rng.normal(size=(4, 2)))
            ln.beta.data = np.ascontiguousarray(rng.normal(size=(4, 2)))
            xr = ad.parameter(rng.normal(size=(3, 4)), "xr")
            xi = ad.parameter(rng.normal(size=(3, 4)), "xi")
            assert_gradcheck(
                lambda: complex_probe_loss(ln(CTensor(xr, xi)),
                                           np.random.default_rng(777)),
                ln.parameters() + [xr, xi])


class TestComplexFeedForward:
    def test_zero_input_rides_on_biases(self):
        rng = np.random.default_rng(0)
        ffn = ComplexFeedForward("ffn", 3, 6, rng)
        zero = c_constant(np.zeros((2, 3), dtype=complex))
        out = c_numpy(ffn(zero))
        b1 = ffn.inner.b.data[:, 0] + 1j * ffn.inner.b.data[:, 1]
        w2 = ffn.outer.w.data[..., 0] + 1j * ffn.outer.w.data[..., 1]
        b2 = ffn.outer.b.data[:, 0] + 1j * ffn.outer.b.data[:, 1]
        activated = np.maximum(b1.real, 0) + 1j * np.maximum(b1.imag, 0)
        np.testing.assert_allclose(out[0], activated @ w2 + b2, atol=1e-12)

    def test_real_only_path_stays_real_with_real_weights(self):
        rng = np.random.default_rng(1)
        ffn = ComplexFeedForward("ffn", 3, 6, rng)
        for p in ffn.parameters():
            p.data[..., 1] = 0.0
        x = CTensor(ad.Tensor(rng.normal(size=(4, 3))),
                    ad.Tensor(np.zeros((4, 3))))
        out = ffn(x)
        np.testing.assert_array_equal(out.im.data, np.zeros((4, 3)))

    def test_gradcheck(self):
        for seed in range(10):
            rng = np.random.default_rng(500 + seed)
            ffn = ComplexFeedForward("ffn", 4, 8, rng)
            xr = ad.parameter(rng.normal(size=(3, 4)), "xr")
            xi = ad.parameter(rng.normal(size=(3, 4)), "xi")
            assert_gradcheck(
                lambda: complex_probe_loss(ffn(CTensor(xr, xi)),
                                           np.random.default_rng(888)),
                ffn.parameters() + [xr, xi])


class TestRevin:
    def test_freq_round_trip(self):
        rng = np.random.default_rng(0)
        f = c_constant(rng.normal(size=9) + 1j * rng.normal(size=9))
        normed, state = revin_freq_normalize(f)
        back = revin_freq_denormalize(normed, state)
        np.testing.assert_allclose(c_numpy(back), c_numpy(f), atol=1e-9)

    def test_freq_constant_spectrum(self):
        f = c_constant(np.full(7, 1.5 - 0.5j))
        normed, state = revin_freq_normalize(f)
        assert abs(float(state.std.data) - EPSILON) < 1e-12
        np.testing.assert_allclose(c_numpy(normed), np.zeros(7), atol=1e-9)
        back = revin_freq_denormalize(normed, state)
        np.testing.assert_allclose(c_numpy(back), c_numpy(f), atol=1e-12)

    def test_freq_std_from_magnitudes(self):
        rng = np.random.default_rng(1)
        values = rng.normal(size=11) + 1j * rng.normal(size=11)
        _, state = revin_freq_normalize(c_constant(values))
        mags = np.abs(values)
        want = np.sqrt(mags.var() + EPSILON ** 2)
        np.testing.assert_allclose(float(state.std.data), want, rtol=1e-12)

    def test_time_round_trip_and_stats(self):
        rng = np.random.default_rng(2)
        x = ad.Tensor(rng.normal(size=512))
        normed, state = revin_time_normalize(x)
        back = revin_time_denormalize(normed, state)
        np.testing.assert_allclose(back.data, x.data, atol=1e-9)
        # standard-normal window: mean near 0, std near 1 (sample statistics)
        assert abs(float(state.mean_re.data)) < 0.15
        assert abs(float(state.std.data) - 1.0) < 0.15
        np.testing.assert_allclose(normed.data.mean(), 0.0, atol=1e-12)

    def test_time_zero_series(self):
        x = ad.Tensor(np.zeros(16))
        normed, state = revin_time_normalize(x)
        np.testing.assert_array_equal(normed.data, np.zeros(16))
        assert abs(float(state.std.data) - EPSILON) < 1e-15
        back = revin_time_denormalize(normed, state)
        np.testing.assert_array_equal(back.data, np.zeros(16))

    def test_batched_stats_are_per_row(self):
        rng = np.random.default_rng(3)
        x = ad.Tensor(rng.normal(size=(4, 32)) * np.arange(1, 5)[:, None])
        normed, state = revin_time_normalize(x)
        assert state.std.data.shape == (4, 1)
        back = revin_time_denormalize(normed, state)
        np.testing.assert_allclose(back.data, x.data, atol=1e-9)

    def test_gradcheck_pair(self):
        for seed in range(10):
            rng = np.random.default_rng(700 + seed)
            fr = ad.parameter(rng.normal(size=7), "fr")
            fi = ad.parameter(rng.normal(size=7), "fi")
            probe = rng.normal(size=7)

            def forward():
                normed, state = revin_freq_normalize(CTensor(fr, fi))
                scaled = CTensor(normed.re * 2.0, normed.im * 0.5)
                back = revin_freq_denormalize(scaled, state)
                return (ad.sum_(normed.re * probe) + ad.sum_(back.re * probe)
                        + ad.sum_(back.im * probe[::-1].copy()))

            assert_gradcheck(forward, [fr, fi])


class TestRealEncoderLayer:
    def test_gradcheck(self):
        cfg = EncoderLayerConfig(model_dim=4, head_dim=2, num_heads=2, ffn_dim=8,
                                 attention_scale=AttentionScale.INV_SQRT_D,
                                 field=FieldKind.REAL)
        for seed in range(10):
            rng = np.random.default_rng(900 + seed)
            layer = RealEncoderLayer("enc", cfg, rng)
            x = ad.parameter(rng.normal(size=(3, 4)), "x")
            probe = rng.normal(size=(3, 4))
            assert_gradcheck(lambda: ad.sum_(layer(x) * probe),
                             layer.parameters() + [x])

    def test_deterministic_forward(self):
        cfg = EncoderLayerConfig(model_dim=4, head_dim=2, num_heads=2, ffn_dim=8,
                                 field=FieldKind.REAL)
        layer = RealEncoderLayer("enc", cfg, np.random.default_rng(0))
        x = ad.Tensor(np.random.default_rng(1).normal(size=(5, 4)))
        np.testing.assert_array_equal(layer(x).data, layer(x).data)


class TestAdam:
    def test_zero_grad_leaves_params(self):
        p = ad.parameter([1.0, -2.0], "p")
        opt = Adam([p], lr=0.1)
        opt.zero_grad()
        opt.step()
        np.testing.assert_array_equal(p.data, [1.0, -2.0])

    def test_first_step_moves_by_lr_sign(self):
        p = ad.parameter([5.0], "p")
        opt = Adam([p], lr=0.01)
        p.grad = np.array([3.0])
        opt.step()
        # bias-corrected m/sqrt(v) = sign(g) up to eps
        np.testing.assert_allclose(p.data, [5.0 - 0.01], rtol=1e-6)

    def test_quadratic_bowl_converges(self):
        p = ad.parameter([4.0, -3.0], "p")
        opt = Adam([p], lr=0.01)
        for _ in range(5000):
            opt.zero_grad()
            loss = ad.sum_(ad.square(p))
            loss.backward()
            opt.step()
            if float(ad.sum_(ad.square(p)).data) < 1e-6:
                break
        assert float(np.sum(p.data ** 2)) < 1e-6

    def test_lr_zero_is_identity(self):
        p = ad.parameter(np.random.default_rng(0).normal(size=8), "p")
        before = p.data.copy()
        opt = Adam([p], lr=0.0)
        for _ in range(5):
            p.grad = np.random.default_rng(1).normal(size=8)
            opt.step()
        np.testing.assert_array_equal(p.data, before)
