"""Two-branch ensemble: frequency and time forecasters blended per window by
dominant-harmonic energy weights, plus the binary checkpoint format."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigMismatch, CorruptCheckpoint, InvalidInput, NoDominantFrequency
from .fblock import FBlock, FBlockConfig, Tokenization, fblock_param_count
from .nn.autodiff import Tensor
from .nn.layers import AttentionScale
from .tblock import TBlock, TBlockConfig, tblock_param_count
from .weighting import DEFAULT_N_HARMONICS, EnergyWeights, harmonic_weights

CHECKPOINT_MAGIC = b"ATFN"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class WeightingConfig:
    n_harmonics: int | None = DEFAULT_N_HARMONICS  # None: every in-range harmonic
    pitch: str = "naive"

    def __post_init__(self):
        if self.pitch != "naive":
            raise InvalidInput(f"unknown pitch detector {self.pitch!r}")
        if self.n_harmonics is not None and self.n_harmonics < 1:
            raise InvalidInput("n_harmonics must be positive or None")


@dataclass(frozen=True)
class AtfnetConfig:
    lookback: int
    horizon: int
    fblock: FBlockConfig
    tblock: TBlockConfig
    weighting: WeightingConfig = field(default_factory=WeightingConfig)

    def __post_init__(self):
        if (self.fblock.lookback, self.fblock.horizon) != (self.lookback, self.horizon):
            raise InvalidInput("frequency branch disagrees on lookback/horizon")
        if (self.tblock.lookback, self.tblock.horizon) != (self.lookback, self.horizon):
            raise InvalidInput("time branch disagrees on lookback/horizon")

    def to_dict(self) -> dict:
        return {
            "lookback": self.lookback,
            "horizon": self.horizon,
            "fblock": {
                "model_dim": self.fblock.model_dim,
                "head_dim": self.fblock.head_dim,
                "heads": self.fblock.heads,
                "layers": self.fblock.layers,
                "ffn_dim": self.fblock.ffn_dim,
                "tokenization": self.fblock.tokenization.value,
                "attention_scale": self.fblock.attention_scale.value,
                "conjugate_keys": self.fblock.conjugate_keys,
            },
            "tblock": {
                "patch_len": self.tblock.patch_len,
                "stride": self.tblock.stride,
                "model_dim": self.tblock.model_dim,
                "head_dim": self.tblock.head_dim,
                "heads": self.tblock.heads,
                "layers": self.tblock.layers,
                "ffn_dim": self.tblock.ffn_dim,
            },
            "weighting": {
                "n_harmonics": self.weighting.n_harmonics,
                "pitch": self.weighting.pitch,
            },
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, raw: dict) -> "AtfnetConfig":
        lookback = int(raw["lookback"])
        horizon = int(raw["horizon"])
        f = raw.get("fblock", {})
        t = raw.get("tblock", {})
        w = raw.get("weighting", {})
        fcfg = FBlockConfig(
            lookback=lookback,
            horizon=horizon,
            model_dim=int(f.get("model_dim", 32)),
            head_dim=int(f.get("head_dim", 8)),
            heads=int(f.get("heads", 4)),
            layers=int(f.get("layers", 2)),
            ffn_dim=int(f.get("ffn_dim", 64)),
            tokenization=Tokenization(f.get("tokenization", "bins")),
            attention_scale=AttentionScale(f.get("attention_scale", "none")),
            conjugate_keys=bool(f.get("conjugate_keys", False)),
        )
        tcfg = TBlockConfig(
            lookback=lookback,
            horizon=horizon,
            patch_len=int(t.get("patch_len", 16)),
            stride=int(t.get("stride", 8)),
            model_dim=int(t.get("model_dim", 64)),
            head_dim=int(t.get("head_dim", 16)),
            heads=int(t.get("heads", 4)),
            layers=int(t.get("layers", 2)),
            ffn_dim=int(t.get("ffn_dim", 128)),
        )
        n_harm = w.get("n_harmonics", DEFAULT_N_HARMONICS)
        wcfg = WeightingConfig(
            n_harmonics=None if n_harm is None else int(n_harm),
            pitch=w.get("pitch", "naive"),
        )
        return cls(lookback, horizon, fcfg, tcfg, wcfg)


@dataclass
class ForecastBundle:
    """Blended forecast plus both branch outputs and the per-window weights.

    Tensors keep the tape alive for training; ``weights`` is one EnergyWeights
    per leading-axis window (a single entry for an unbatched window).
    """

    y_hat: Tensor
    y_f: Tensor
    y_t: Tensor
    weights: list[EnergyWeights]


class ATFNet:
    """Channel-independent two-branch forecaster; one model serves all channels."""

    def __init__(self, config: AtfnetConfig, rng: np.random.Generator):
        self.config = config
        self.fblock = FBlock(config.fblock, rng)
        self.tblock = TBlock(config.tblock, rng)

    def parameters(self):
        return self.fblock.parameters() + self.tblock.parameters()

    def window_weights(self, window: np.ndarray) -> EnergyWeights:
        """Blend weights of one window; constant input falls back to the time
        branch (w_f = 0)."""
        try:
            return harmonic_weights(window, self.config.weighting.n_harmonics)
        except NoDominantFrequency:
            return EnergyWeights(0.0, 1.0, 0, (), 0.0)

    def forward(self, x: np.ndarray) -> ForecastBundle:
        """Run both branches on windows [..., lookback] and blend them.

        The blend weights are computed from the raw input windows and treated
        as constants: no gradient flows into the weighting path.
        """
        x = np.asarray(x, dtype=np.float64)
        rows = x.reshape(-1, x.shape[-1]) if x.ndim > 1 else x[None, :]
        weights = [self.window_weights(row) for row in rows]
        w_f = np.array([w.w_f for w in weights])
        w_t = np.array([w.w_t for w in weights])
        if x.ndim > 1:
            w_f = w_f.reshape(x.shape[:-1] + (1,))
            w_t = w_t.reshape(x.shape[:-1] + (1,))
        else:
            w_f = w_f[0]
            w_t = w_t[0]
        y_f = self.fblock.forward(x)
        y_t = self.tblock.forward(x)
        y_hat = y_t * w_t + y_f * w_f
        return ForecastBundle(y_hat, y_f, y_t, weights)

    def predict(self, x: np.ndarray):
        """Numpy forecasts (y_hat, y_f, y_t, weights) without keeping the tape."""
        bundle = self.forward(x)
        return (bundle.y_hat.data.copy(), bundle.y_f.data.copy(),
                bundle.y_t.data.copy(), bundle.weights)


def init_params(config: AtfnetConfig, seed: int) -> ATFNet:
    """Deterministically initialized model: projection weights uniform in
    [-1/sqrt(fan_in), +1/sqrt(fan_in)] over the flattened real planes, biases
    zero, positional embeddings uniform in [-0.02, 0.02]."""
    rng = np.random.default_rng(seed)
    return ATFNet(config, rng)


def expected_param_count(config: AtfnetConfig) -> int:
    return fblock_param_count(config.fblock) + tblock_param_count(config.tblock)


def save_checkpoint(model: ATFNet, path):
    """Binary checkpoint: magic, version, canonical config JSON, then each
    parameter as (name, shape, row-major float64 little-endian payload)."""
    out = bytearray()
    out += CHECKPOINT_MAGIC
    out += struct.pack("<I", CHECKPOINT_VERSION)
    config_bytes = model.config.canonical_json().encode("utf-8")
    out += struct.pack("<I", len(config_bytes))
    out += config_bytes
    params = model.parameters()
    out += struct.pack("<I", len(params))
    for p in params:
        name_bytes = p.name.encode("utf-8")
        out += struct.pack("<I", len(name_bytes))
        out += name_bytes
        out += struct.pack("<I", p.data.ndim)
        for dim in p.data.shape:
            out += struct.pack("<I", dim)
        out += np.ascontiguousarray(p.data).astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(out))


class _Cursor:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CorruptCheckpoint("checkpoint truncated")
        chunk = self.blob[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_checkpoint(path) -> ATFNet:
    """Rebuild a model from its checkpoint; bit-exact parameter round trip."""
    with open(path, "rb") as fh:
        blob = fh.read()
    cur = _Cursor(blob)
    if cur.take(4) != CHECKPOINT_MAGIC:
        raise CorruptCheckpoint("bad magic")
    version = cur.u32()
    if version != CHECKPOINT_VERSION:
        raise CorruptCheckpoint(f"unsupported format version {version}")
    try:
        config = AtfnetConfig.from_dict(json.loads(cur.take(cur.u32()).decode("utf-8")))
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise CorruptCheckpoint(f"unreadable config: {exc}") from exc
    n_params = cur.u32()
    stored = []
    for _ in range(n_params):
        name = cur.take(cur.u32()).decode("utf-8")
        ndim = cur.u32()
        shape = tuple(cur.u32() for _ in range(ndim))
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        payload = cur.take(8 * count)
        data = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(shape)
        stored.append((name, data))
    if cur.pos != len(blob):
        raise CorruptCheckpoint("trailing bytes after parameter table")

    model = init_params(config, seed=0)
    params = model.parameters()
    if len(params) != len(stored):
        raise ConfigMismatch(
            f"checkpoint holds {len(stored)} parameters, config implies {len(params)}"
        )
    for p, (name, data) in zip(params, stored):
        if p.name != name or p.data.shape != data.shape:
            raise ConfigMismatch(
                f"parameter {name!r} with shape {data.shape} does not match "
                f"config-implied {p.name!r} with shape {p.data.shape}"
            )
        p.data = np.ascontiguousarray(data)
    return model
