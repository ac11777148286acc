from .adam import Adam, adam_step
from .autodiff import GradcheckReport, Tensor, constant, gradcheck, parameter
from .complex_ops import CTensor, c_constant, c_from_planes, c_magnitude, c_numpy
from .layers import (
    EPSILON,
    AttentionScale,
    ComplexFeedForward,
    ComplexLayerNorm,
    ComplexLinear,
    CsaAttention,
    CsaEncoderLayer,
    EncoderLayerConfig,
    FieldKind,
    RealEncoderLayer,
    RealLayerNorm,
    RealLinear,
    RevinState,
    complex_ffn,
    complex_layernorm,
    complex_linear,
    csa_attention,
    real_layernorm,
    real_linear,
    revin_freq_denormalize,
    revin_freq_normalize,
    revin_time_denormalize,
    revin_time_normalize,
    split_relu,
    uniform_init,
)

__all__ = [
    "Adam",
    "adam_step",
    "GradcheckReport",
    "Tensor",
    "constant",
    "gradcheck",
    "parameter",
    "CTensor",
    "c_constant",
    "c_from_planes",
    "c_magnitude",
    "c_numpy",
    "EPSILON",
    "AttentionScale",
    "ComplexFeedForward",
    "ComplexLayerNorm",
    "ComplexLinear",
    "CsaAttention",
    "CsaEncoderLayer",
    "EncoderLayerConfig",
    "FieldKind",
    "RealEncoderLayer",
    "RealLayerNorm",
    "RealLinear",
    "RevinState",
    "complex_ffn",
    "complex_layernorm",
    "complex_linear",
    "csa_attention",
    "real_layernorm",
    "real_linear",
    "revin_freq_denormalize",
    "revin_freq_normalize",
    "revin_time_denormalize",
    "revin_time_normalize",
    "split_relu",
    "uniform_init",
]
