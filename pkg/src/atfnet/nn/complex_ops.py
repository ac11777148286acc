"""Complex arithmetic over paired real tape tensors.

A complex quantity is a (re, im) pair of equally shaped tensors. True complex
multiplication is used throughout: (a+bi)(c+di) = (ac-bd) + (ad+bc)i, so
gradients reach all four real/imag planes of every factor.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


class CTensor(NamedTuple):
    re: Tensor
    im: Tensor

    @property
    def shape(self):
        return self.re.data.shape


def c_constant(values: np.ndarray) -> CTensor:
    values = np.asarray(values, dtype=np.complex128)
    return CTensor(Tensor(values.real.copy()), Tensor(values.imag.copy()))


def c_numpy(a: CTensor) -> np.ndarray:
    return a.re.data + 1j * a.im.data


def c_from_planes(t: Tensor) -> CTensor:
    """Split a [..., 2] plane-stored parameter into its (re, im) pair."""
    if t.data.shape[-1] != 2:
        raise ValueError("plane-stored complex tensor must end with axis of size 2")
    return CTensor(ad.take_last(t, 0), ad.take_last(t, 1))


def c_add(a: CTensor, b: CTensor) -> CTensor:
    return CTensor(a.re + b.re, a.im + b.im)


def c_sub(a: CTensor, b: CTensor) -> CTensor:
    return CTensor(a.re - b.re, a.im - b.im)


def c_mul(a: CTensor, b: CTensor) -> CTensor:
    return CTensor(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)


def c_matmul(a: CTensor, b: CTensor) -> CTensor:
    return CTensor(
        ad.matmul(a.re, b.re) - ad.matmul(a.im, b.im),
        ad.matmul(a.re, b.im) + ad.matmul(a.im, b.re),
    )


def c_conj(a: CTensor) -> CTensor:
    return CTensor(a.re, -a.im)


def c_scale(a: CTensor, s) -> CTensor:
    """Multiply by a real scalar/tensor (broadcasting)."""
    return CTensor(a.re * s, a.im * s)


def c_div_real(a: CTensor, s) -> CTensor:
    return CTensor(a.re / s, a.im / s)


def c_magnitude(a: CTensor) -> Tensor:
    return ad.magnitude(a.re, a.im)


def c_mean_last(a: CTensor, keepdims=False) -> CTensor:
    return CTensor(ad.mean_(a.re, axis=-1, keepdims=keepdims),
                   ad.mean_(a.im, axis=-1, keepdims=keepdims))


def c_transpose_last(a: CTensor) -> CTensor:
    return CTensor(ad.transpose_last(a.re), ad.transpose_last(a.im))


def c_reshape(a: CTensor, shape) -> CTensor:
    return CTensor(ad.reshape(a.re, shape), ad.reshape(a.im, shape))


def c_concat_last(parts) -> CTensor:
    return CTensor(ad.concat_last([p.re for p in parts]),
                   ad.concat_last([p.im for p in parts]))
