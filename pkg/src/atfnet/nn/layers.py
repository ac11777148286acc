"""Neural layers over the tape: complex and real encoder pieces plus RevIN.

Complex parameters are single tensors whose last axis stores the [real, imag]
planes; forward code splits them on the tape so gradients reach both planes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch
from . import autodiff as ad
from .autodiff import Tensor, parameter
from .complex_ops import (
    CTensor,
    c_add,
    c_concat_last,
    c_from_planes,
    c_magnitude,
    c_matmul,
    c_mul,
    c_transpose_last,
)

EPSILON = 1e-5


class AttentionScale(enum.Enum):
    NONE = "none"
    INV_SQRT_D = "inv_sqrt_d"


class FieldKind(enum.Enum):
    COMPLEX = "complex"
    REAL = "real"


@dataclass(frozen=True)
class EncoderLayerConfig:
    """Dimensions and variant switches for one encoder layer."""

    model_dim: int
    head_dim: int
    num_heads: int
    ffn_dim: int
    attention_scale: AttentionScale = AttentionScale.NONE
    field: FieldKind = FieldKind.COMPLEX
    conjugate_keys: bool = False

    def __post_init__(self):
        for label, value in (("model_dim", self.model_dim),
                             ("head_dim", self.head_dim),
                             ("num_heads", self.num_heads),
                             ("ffn_dim", self.ffn_dim)):
            if value < 1:
                raise ValueError(f"{label} must be positive, got {value}")


def uniform_init(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


# ---------------------------------------------------------------------------
# complex layers


def complex_linear(x: CTensor, w: Tensor, b: Tensor | None = None) -> CTensor:
    """Affine map with true complex multiplication.

    ``w`` is plane-stored [d_in, d_out, 2], ``b`` is [d_out, 2]; ``x`` is a
    (re, im) pair shaped [..., n, d_in].
    """
    if x.re.data.shape[-1] != w.data.shape[0]:
        raise ShapeMismatch(
            f"complex_linear: input dim {x.re.data.shape[-1]} vs weight {w.data.shape}"
        )
    wr, wi = c_from_planes(w)
    out = CTensor(
        ad.matmul(x.re, wr) - ad.matmul(x.im, wi),
        ad.matmul(x.re, wi) + ad.matmul(x.im, wr),
    )
    if b is not None:
        br, bi = c_from_planes(b)
        out = CTensor(out.re + br, out.im + bi)
    return out


class ComplexLinear:
    def __init__(self, name, d_in, d_out, rng, bias=True):
        self.w = parameter(uniform_init(rng, (d_in, d_out, 2), 2 * d_in),
                           name=f"{name}.w", is_complex=True)
        self.b = None
        if bias:
            self.b = parameter(np.zeros((d_out, 2)), name=f"{name}.b", is_complex=True)

    def __call__(self, x: CTensor) -> CTensor:
        return complex_linear(x, self.w, self.b)

    def parameters(self):
        return [self.w] if self.b is None else [self.w, self.b]


def csa_attention(tokens: CTensor, wq, wk, wv, wo,
                  scale=AttentionScale.NONE, conjugate_keys=False) -> CTensor:
    """Multi-head attention with modulus logits over complex projections.

    Per head h: Q, K, V are complex projections of the tokens; the attention
    matrix is the row softmax of |Q K^T| (plain transpose by default, entrywise
    modulus, optionally scaled by 1/sqrt(head_dim)); each head is the real
    attention matrix times the complex V. Heads concatenate and project by wo.
    """
    heads = []
    head_dim = wq[0].data.shape[1]
    factor = 1.0 / np.sqrt(head_dim) if scale is AttentionScale.INV_SQRT_D else None
    for q_w, k_w, v_w in zip(wq, wk, wv):
        q = complex_linear(tokens, q_w)
        k = complex_linear(tokens, k_w)
        v = complex_linear(tokens, v_w)
        if conjugate_keys:
            k = CTensor(k.re, -k.im)
        logits = c_magnitude(c_matmul(q, c_transpose_last(k)))
        if factor is not None:
            logits = logits * factor
        attn = ad.softmax_last(logits)
        heads.append(CTensor(ad.matmul(attn, v.re), ad.matmul(attn, v.im)))
    return complex_linear(c_concat_last(heads), wo)


class CsaAttention:
    def __init__(self, name, cfg: EncoderLayerConfig, rng):
        d, h = cfg.model_dim, cfg.num_heads
        hd = cfg.head_dim
        self.cfg = cfg
        self.wq = [parameter(uniform_init(rng, (d, hd, 2), 2 * d),
                             name=f"{name}.h{i}.wq", is_complex=True) for i in range(h)]
        self.wk = [parameter(uniform_init(rng, (d, hd, 2), 2 * d),
                             name=f"{name}.h{i}.wk", is_complex=True) for i in range(h)]
        self.wv = [parameter(uniform_init(rng, (d, hd, 2), 2 * d),
                             name=f"{name}.h{i}.wv", is_complex=True) for i in range(h)]
        self.wo = parameter(uniform_init(rng, (h * hd, d, 2), 2 * h * hd),
                            name=f"{name}.wo", is_complex=True)

    def __call__(self, tokens: CTensor) -> CTensor:
        return csa_attention(tokens, self.wq, self.wk, self.wv, self.wo,
                             scale=self.cfg.attention_scale,
                             conjugate_keys=self.cfg.conjugate_keys)

    def parameters(self):
        params = []
        for i in range(self.cfg.num_heads):
            params.extend([self.wq[i], self.wk[i], self.wv[i]])
        params.append(self.wo)
        return params


def complex_layernorm(tokens: CTensor, gamma: Tensor, beta: Tensor,
                      epsilon=EPSILON) -> CTensor:
    """Per-token normalization: complex mean, magnitude-based deviation.

    Each token is centered by its complex mean over the feature axis, divided
    by the standard deviation of the magnitudes of the centered entries (with
    an epsilon guard inside the root), then transformed by the complex affine
    pair (gamma, beta).
    """
    mean_re = ad.mean_(tokens.re, axis=-1, keepdims=True)
    mean_im = ad.mean_(tokens.im, axis=-1, keepdims=True)
    centered = CTensor(tokens.re - mean_re, tokens.im - mean_im)
    mags = c_magnitude(centered)
    mag_mean = ad.mean_(mags, axis=-1, keepdims=True)
    var = ad.mean_(ad.square(mags - mag_mean), axis=-1, keepdims=True)
    denom = ad.sqrt(var + epsilon * epsilon)
    normed = CTensor(centered.re / denom, centered.im / denom)
    return c_add(c_mul(normed, c_from_planes(gamma)), c_from_planes(beta))


class ComplexLayerNorm:
    def __init__(self, name, dim):
        gamma = np.zeros((dim, 2))
        gamma[:, 0] = 1.0
        self.gamma = parameter(gamma, name=f"{name}.gamma", is_complex=True)
        self.beta = parameter(np.zeros((dim, 2)), name=f"{name}.beta", is_complex=True)

    def __call__(self, tokens: CTensor) -> CTensor:
        return complex_layernorm(tokens, self.gamma, self.beta)

    def parameters(self):
        return [self.gamma, self.beta]


def split_relu(x: CTensor) -> CTensor:
    """ReLU applied independently to the real and imaginary planes."""
    return CTensor(ad.relu(x.re), ad.relu(x.im))


def complex_ffn(tokens: CTensor, w1, b1, w2, b2) -> CTensor:
    return complex_linear(split_relu(complex_linear(tokens, w1, b1)), w2, b2)


class ComplexFeedForward:
    def __init__(self, name, dim, ffn_dim, rng):
        self.inner = ComplexLinear(f"{name}.in", dim, ffn_dim, rng)
        self.outer = ComplexLinear(f"{name}.out", ffn_dim, dim, rng)

    def __call__(self, tokens: CTensor) -> CTensor:
        return self.outer(split_relu(self.inner(tokens)))

    def parameters(self):
        return self.inner.parameters() + self.outer.parameters()


class CsaEncoderLayer:
    """Post-norm encoder layer: attention and feed-forward sublayers with
    residual connections, each followed by complex layer normalization."""

    def __init__(self, name, cfg: EncoderLayerConfig, rng):
        self.attn = CsaAttention(f"{name}.attn", cfg, rng)
        self.ln1 = ComplexLayerNorm(f"{name}.ln1", cfg.model_dim)
        self.ffn = ComplexFeedForward(f"{name}.ffn", cfg.model_dim, cfg.ffn_dim, rng)
        self.ln2 = ComplexLayerNorm(f"{name}.ln2", cfg.model_dim)

    def __call__(self, tokens: CTensor) -> CTensor:
        tokens = self.ln1(c_add(tokens, self.attn(tokens)))
        return self.ln2(c_add(tokens, self.ffn(tokens)))

    def parameters(self):
        return (self.attn.parameters() + self.ln1.parameters()
                + self.ffn.parameters() + self.ln2.parameters())


# ---------------------------------------------------------------------------
# real layers


def real_linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    if x.data.shape[-1] != w.data.shape[0]:
        raise ShapeMismatch(
            f"real_linear: input dim {x.data.shape[-1]} vs weight {w.data.shape}"
        )
    out = ad.matmul(x, w)
    return out if b is None else out + b


class RealLinear:
    def __init__(self, name, d_in, d_out, rng, bias=True):
        self.w = parameter(uniform_init(rng, (d_in, d_out), d_in), name=f"{name}.w")
        self.b = parameter(np.zeros(d_out), name=f"{name}.b") if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        return real_linear(x, self.w, self.b)

    def parameters(self):
        return [self.w] if self.b is None else [self.w, self.b]


class RealAttention:
    def __init__(self, name, cfg: EncoderLayerConfig, rng):
        d, h, hd = cfg.model_dim, cfg.num_heads, cfg.head_dim
        self.cfg = cfg
        self.wq = [parameter(uniform_init(rng, (d, hd), d),
                             name=f"{name}.h{i}.wq") for i in range(h)]
        self.wk = [parameter(uniform_init(rng, (d, hd), d),
                             name=f"{name}.h{i}.wk") for i in range(h)]
        self.wv = [parameter(uniform_init(rng, (d, hd), d),
                             name=f"{name}.h{i}.wv") for i in range(h)]
        self.wo = parameter(uniform_init(rng, (h * hd, d), h * hd), name=f"{name}.wo")

    def __call__(self, tokens: Tensor) -> Tensor:
        factor = (1.0 / np.sqrt(self.cfg.head_dim)
                  if self.cfg.attention_scale is AttentionScale.INV_SQRT_D else None)
        heads = []
        for q_w, k_w, v_w in zip(self.wq, self.wk, self.wv):
            q = ad.matmul(tokens, q_w)
            k = ad.matmul(tokens, k_w)
            v = ad.matmul(tokens, v_w)
            logits = ad.matmul(q, ad.transpose_last(k))
            if factor is not None:
                logits = logits * factor
            heads.append(ad.matmul(ad.softmax_last(logits), v))
        return ad.matmul(ad.concat_last(heads), self.wo)

    def parameters(self):
        params = []
        for i in range(self.cfg.num_heads):
            params.extend([self.wq[i], self.wk[i], self.wv[i]])
        params.append(self.wo)
        return params


def real_layernorm(x: Tensor, gamma: Tensor, beta: Tensor, epsilon=EPSILON) -> Tensor:
    mean = ad.mean_(x, axis=-1, keepdims=True)
    centered = x - mean
    var = ad.mean_(ad.square(centered), axis=-1, keepdims=True)
    return centered / ad.sqrt(var + epsilon * epsilon) * gamma + beta


class RealLayerNorm:
    def __init__(self, name, dim):
        self.gamma = parameter(np.ones(dim), name=f"{name}.gamma")
        self.beta = parameter(np.zeros(dim), name=f"{name}.beta")

    def __call__(self, x: Tensor) -> Tensor:
        return real_layernorm(x, self.gamma, self.beta)

    def parameters(self):
        return [self.gamma, self.beta]


class RealFeedForward:
    def __init__(self, name, dim, ffn_dim, rng):
        self.inner = RealLinear(f"{name}.in", dim, ffn_dim, rng)
        self.outer = RealLinear(f"{name}.out", ffn_dim, dim, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.outer(ad.relu(self.inner(x)))

    def parameters(self):
        return self.inner.parameters() + self.outer.parameters()


class RealEncoderLayer:
    def __init__(self, name, cfg: EncoderLayerConfig, rng):
        self.attn = RealAttention(f"{name}.attn", cfg, rng)
        self.ln1 = RealLayerNorm(f"{name}.ln1", cfg.model_dim)
        self.ffn = RealFeedForward(f"{name}.ffn", cfg.model_dim, cfg.ffn_dim, rng)
        self.ln2 = RealLayerNorm(f"{name}.ln2", cfg.model_dim)

    def __call__(self, tokens: Tensor) -> Tensor:
        tokens = self.ln1(tokens + self.attn(tokens))
        return self.ln2(tokens + self.ffn(tokens))

    def parameters(self):
        return (self.attn.parameters() + self.ln1.parameters()
                + self.ffn.parameters() + self.ln2.parameters())


# ---------------------------------------------------------------------------
# reversible instance normalization


@dataclass
class RevinState:
    """Per-instance statistics captured by normalize, reused by denormalize.

    ``mean_im`` is None for the time-domain variant. All entries are tape
    tensors so gradients flow through the restored statistics.
    """

    mean_re: Tensor
    mean_im: Tensor | None
    std: Tensor
    epsilon: float = EPSILON


def revin_freq_normalize(f: CTensor, epsilon=EPSILON):
    """Normalize a half spectrum by its complex mean and the deviation of its
    bin magnitudes (epsilon-guarded inside the root)."""
    mean_re = ad.mean_(f.re, axis=-1, keepdims=True)
    mean_im = ad.mean_(f.im, axis=-1, keepdims=True)
    mags = c_magnitude(f)
    mag_mean = ad.mean_(mags, axis=-1, keepdims=True)
    var = ad.mean_(ad.square(mags - mag_mean), axis=-1, keepdims=True)
    std = ad.sqrt(var + epsilon * epsilon)
    normalized = CTensor((f.re - mean_re) / std, (f.im - mean_im) / std)
    return normalized, RevinState(mean_re, mean_im, std, epsilon)


def revin_freq_denormalize(f: CTensor, state: RevinState) -> CTensor:
    return CTensor(f.re * state.std + state.mean_re,
                   f.im * state.std + state.mean_im)


def revin_time_normalize(x: Tensor, epsilon=EPSILON):
    mean = ad.mean_(x, axis=-1, keepdims=True)
    centered = x - mean
    var = ad.mean_(ad.square(centered), axis=-1, keepdims=True)
    std = ad.sqrt(var + epsilon * epsilon)
    return centered / std, RevinState(mean, None, std, epsilon)


def revin_time_denormalize(x: Tensor, state: RevinState) -> Tensor:
    return x * state.std + state.mean_re
