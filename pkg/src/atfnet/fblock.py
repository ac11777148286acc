"""Frequency-domain forecaster.

Pipeline: horizon-aligned half spectrum -> frequency RevIN -> complex
embedding -> stacked complex encoder layers with modulus-logit attention ->
projection back to spectrum bins -> RevIN restore -> inverse-transform tail.
The inverse-transform tail is a fixed linear map of the bin planes, so the
whole block lives on the tape and is differentiable end to end.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .nn import autodiff as ad
from .nn.autodiff import Tensor
from .nn.complex_ops import CTensor, c_reshape
from .nn.layers import (
    AttentionScale,
    ComplexLinear,
    CsaEncoderLayer,
    EncoderLayerConfig,
    FieldKind,
    revin_freq_denormalize,
    revin_freq_normalize,
)
from .spectral import half_spectrum_len, idft_tail_matrices, _forward_basis


class Tokenization(enum.Enum):
    # one token per spectrum bin (attention runs across bins)
    BINS = "bins"
    # the literal single-token reading: the whole spectrum embeds to one vector
    FULL_SPECTRUM = "full_spectrum"


@dataclass(frozen=True)
class FBlockConfig:
    lookback: int
    horizon: int
    model_dim: int
    head_dim: int
    heads: int
    layers: int
    ffn_dim: int
    tokenization: Tokenization = Tokenization.BINS
    attention_scale: AttentionScale = AttentionScale.NONE
    conjugate_keys: bool = False

    def __post_init__(self):
        if self.lookback < 1 or self.horizon < 0:
            raise InvalidInput("lookback must be >= 1 and horizon >= 0")
        for label, value in (("model_dim", self.model_dim),
                             ("head_dim", self.head_dim),
                             ("heads", self.heads),
                             ("ffn_dim", self.ffn_dim)):
            if value < 1:
                raise InvalidInput(f"{label} must be positive")
        if self.layers < 0:
            raise InvalidInput("layers must be nonnegative")

    @property
    def spectrum_len(self) -> int:
        return half_spectrum_len(self.lookback + self.horizon)

    def encoder_layer_config(self) -> EncoderLayerConfig:
        return EncoderLayerConfig(
            model_dim=self.model_dim,
            head_dim=self.head_dim,
            num_heads=self.heads,
            ffn_dim=self.ffn_dim,
            attention_scale=self.attention_scale,
            field=FieldKind.COMPLEX,
            conjugate_keys=self.conjugate_keys,
        )


def fblock_param_count(config: FBlockConfig) -> int:
    """Closed-form count of real scalars, used by checkpoint validation."""
    d = config.model_dim
    n_bins = config.spectrum_len
    if config.tokenization is Tokenization.BINS:
        embed = 2 * d + 2 * d            # [1, D, 2] weight + [D, 2] bias
        project = 2 * d                  # [D, 1, 2] weight, bias-free
    else:
        embed = 2 * n_bins * d + 2 * d
        project = 2 * d * n_bins
    attn = 8 * config.heads * d * config.head_dim
    norms = 2 * (2 * d + 2 * d)
    ffn = 4 * d * config.ffn_dim + 2 * config.ffn_dim + 2 * d
    return embed + project + config.layers * (attn + norms + ffn)


class FBlock:
    def __init__(self, config: FBlockConfig, rng: np.random.Generator):
        self.config = config
        n_bins = config.spectrum_len
        # the projection is bias-free: a shared bias adds the same constant to
        # every bin, which the inverse-transform tail cannot see (it lands on
        # sample 0 only), leaving a parameter with identically zero gradient
        if config.tokenization is Tokenization.BINS:
            self.embed = ComplexLinear("fblock.embed", 1, config.model_dim, rng)
            self.project = ComplexLinear("fblock.proj", config.model_dim, 1, rng,
                                         bias=False)
        else:
            self.embed = ComplexLinear("fblock.embed", n_bins, config.model_dim, rng)
            self.project = ComplexLinear("fblock.proj", config.model_dim, n_bins, rng,
                                         bias=False)
        layer_cfg = config.encoder_layer_config()
        self.encoder = [CsaEncoderLayer(f"fblock.enc{i}", layer_cfg, rng)
                        for i in range(config.layers)]
        # fixed forward basis (input samples -> half spectrum) and tail map
        self._basis = _forward_basis(n_bins, config.lookback,
                                     config.lookback + config.horizon)
        tail_re, tail_im = idft_tail_matrices(config.lookback, config.horizon)
        self._tail_re = tail_re.T.copy()
        self._tail_im = tail_im.T.copy()

    def parameters(self):
        params = self.embed.parameters()
        for layer in self.encoder:
            params.extend(layer.parameters())
        params.extend(self.project.parameters())
        return params

    def spectrum_of(self, x: np.ndarray) -> np.ndarray:
        """Horizon-aligned half spectra of a [..., lookback] batch."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.config.lookback:
            raise InvalidInput(
                f"expected windows of length {self.config.lookback}, got {x.shape[-1]}"
            )
        return x @ self._basis.T

    def forward(self, x: np.ndarray) -> Tensor:
        """Forecast tail of shape [..., horizon] for windows [..., lookback]."""
        spectra = self.spectrum_of(x)
        f = CTensor(Tensor(spectra.real.copy()), Tensor(spectra.imag.copy()))
        f, state = revin_freq_normalize(f)
        lead = f.re.data.shape[:-1]
        n_bins = self.config.spectrum_len
        if self.config.tokenization is Tokenization.BINS:
            tokens = c_reshape(f, lead + (n_bins, 1))
        else:
            tokens = c_reshape(f, lead + (1, n_bins))
        tokens = self.embed(tokens)
        for layer in self.encoder:
            tokens = layer(tokens)
        out = self.project(tokens)
        out = c_reshape(out, lead + (n_bins,))
        out = revin_freq_denormalize(out, state)
        # inverse-transform tail as a fixed linear map of the bin planes
        re_rows = ad.reshape(out.re, lead + (1, n_bins))
        im_rows = ad.reshape(out.im, lead + (1, n_bins))
        tail = (ad.matmul(re_rows, Tensor(self._tail_re))
                + ad.matmul(im_rows, Tensor(self._tail_im)))
        return ad.reshape(tail, lead + (self.config.horizon,))
