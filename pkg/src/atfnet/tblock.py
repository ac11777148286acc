"""Time-domain forecaster.

Pipeline: time RevIN -> overlapping patches -> per-patch linear embedding plus
learnable positional embeddings -> real transformer encoder (scaled dot-product
attention) -> flatten -> linear head -> RevIN restore.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, PatchTooLong
from .nn import autodiff as ad
from .nn.autodiff import Tensor, parameter
from .nn.layers import (
    AttentionScale,
    EncoderLayerConfig,
    FieldKind,
    RealEncoderLayer,
    RealLinear,
    revin_time_denormalize,
    revin_time_normalize,
)


@dataclass(frozen=True)
class TBlockConfig:
    lookback: int
    horizon: int
    patch_len: int = 16
    stride: int = 8
    model_dim: int = 64
    head_dim: int = 16
    heads: int = 4
    layers: int = 2
    ffn_dim: int = 128

    def __post_init__(self):
        if self.lookback < 1 or self.horizon < 0:
            raise InvalidInput("lookback must be >= 1 and horizon >= 0")
        if self.patch_len < 1 or self.stride < 1:
            raise InvalidInput("patch_len and stride must be positive")
        if self.patch_len > self.lookback:
            raise PatchTooLong(
                f"patch_len {self.patch_len} exceeds lookback {self.lookback}"
            )
        for label, value in (("model_dim", self.model_dim),
                             ("head_dim", self.head_dim),
                             ("heads", self.heads),
                             ("ffn_dim", self.ffn_dim)):
            if value < 1:
                raise InvalidInput(f"{label} must be positive")
        if self.layers < 0:
            raise InvalidInput("layers must be nonnegative")

    @property
    def num_patches(self) -> int:
        return (self.lookback - self.patch_len) // self.stride + 1

    def encoder_layer_config(self) -> EncoderLayerConfig:
        return EncoderLayerConfig(
            model_dim=self.model_dim,
            head_dim=self.head_dim,
            num_heads=self.heads,
            ffn_dim=self.ffn_dim,
            attention_scale=AttentionScale.INV_SQRT_D,
            field=FieldKind.REAL,
        )


def make_patches(x, patch_len: int, stride: int) -> np.ndarray:
    """Rows are x[j*stride : j*stride + patch_len]; trailing remainder drops."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidInput("make_patches expects a one-dimensional series")
    if patch_len > x.shape[0]:
        raise PatchTooLong(
            f"patch_len {patch_len} exceeds series length {x.shape[0]}"
        )
    offsets = np.arange(0, x.shape[0] - patch_len + 1, stride)
    return x[offsets[:, None] + np.arange(patch_len)[None, :]].copy()


def tblock_param_count(config: TBlockConfig) -> int:
    """Closed-form count of real scalars, used by checkpoint validation."""
    d = config.model_dim
    embed = config.patch_len * d + d
    positional = config.num_patches * d
    attn = 4 * config.heads * d * config.head_dim
    norms = 2 * (d + d)
    ffn = 2 * d * config.ffn_dim + config.ffn_dim + d
    head = config.num_patches * d * config.horizon + config.horizon
    return embed + positional + config.layers * (attn + norms + ffn) + head


class TBlock:
    def __init__(self, config: TBlockConfig, rng: np.random.Generator):
        self.config = config
        self.embed = RealLinear("tblock.embed", config.patch_len, config.model_dim, rng)
        self.positional = parameter(
            rng.uniform(-0.02, 0.02, size=(config.num_patches, config.model_dim)),
            name="tblock.pos",
        )
        layer_cfg = config.encoder_layer_config()
        self.encoder = [RealEncoderLayer(f"tblock.enc{i}", layer_cfg, rng)
                        for i in range(config.layers)]
        self.head = RealLinear("tblock.head",
                               config.num_patches * config.model_dim,
                               config.horizon, rng)

    def parameters(self):
        params = self.embed.parameters() + [self.positional]
        for layer in self.encoder:
            params.extend(layer.parameters())
        params.extend(self.head.parameters())
        return params

    def forward(self, x: np.ndarray) -> Tensor:
        """Forecast of shape [..., horizon] for windows [..., lookback]."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.config.lookback:
            raise InvalidInput(
                f"expected windows of length {self.config.lookback}, got {x.shape[-1]}"
            )
        lead = x.shape[:-1]
        normalized, state = revin_time_normalize(Tensor(x.copy()))
        patches = ad.unfold_last(normalized, self.config.patch_len, self.config.stride)
        tokens = self.embed(patches) + self.positional
        for layer in self.encoder:
            tokens = layer(tokens)
        flat = ad.reshape(tokens,
                          lead + (1, self.config.num_patches * self.config.model_dim,))
        out = ad.reshape(self.head(flat), lead + (self.config.horizon,))
        return revin_time_denormalize(out, state)
