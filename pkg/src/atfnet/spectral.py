"""Exact DFT/iDFT kernels, the horizon-aligned transform, and spectral energy.

All transforms are direct summations evaluated as basis-matrix products in
float64; no fast-transform shortcuts, so results are reproducible bit-for-bit
across runs on the same platform.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ImaginaryResidueTooLarge, InvalidInput

IMAG_RESIDUE_TOL = 1e-6


class SpectrumLayout(enum.Enum):
    FULL = "full"
    HALF_NON_REDUNDANT = "half"


def half_spectrum_len(total_len: int) -> int:
    """Number of non-redundant bins of a real series on a length-n grid."""
    return total_len // 2 + 1


@dataclass(frozen=True)
class ComplexSpectrum:
    """Spectrum of a real series, tagged with the frequency grid it lives on.

    ``total_len`` is the length of the grid the bins are evaluated on; for the
    horizon-aligned transform it exceeds ``source_len`` by the forecast horizon.
    A half layout keeps only the first ``total_len // 2 + 1`` bins.
    """

    values: np.ndarray
    source_len: int
    total_len: int
    layout: SpectrumLayout

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        object.__setattr__(self, "values", values)
        if values.ndim != 1:
            raise InvalidInput("spectrum values must be one-dimensional")
        if self.source_len < 1:
            raise InvalidInput("source_len must be positive")
        if self.total_len < self.source_len:
            raise InvalidInput("total_len must be at least source_len")
        if self.layout is SpectrumLayout.FULL:
            expected = self.total_len
        else:
            expected = half_spectrum_len(self.total_len)
        if values.shape[0] != expected:
            raise InvalidInput(
                f"{self.layout.value} spectrum on a length-{self.total_len} grid "
                f"must hold {expected} bins, got {values.shape[0]}"
            )


def as_real_series(x) -> np.ndarray:
    """Validate and convert to a 1-D float64 array; raises InvalidInput."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise InvalidInput("series must be a non-empty one-dimensional array")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("series contains non-finite values")
    return arr


def _forward_basis(n_bins: int, n_samples: int, grid_len: int) -> np.ndarray:
    # E[k, n] = exp(-2*pi*i*k*n / grid_len)
    k = np.arange(n_bins, dtype=np.float64)[:, None]
    n = np.arange(n_samples, dtype=np.float64)[None, :]
    return np.exp(-2j * np.pi * k * n / grid_len)


def dft(x) -> ComplexSpectrum:
    """Full spectrum of a real series on its own length-L grid."""
    x = as_real_series(x)
    length = x.shape[0]
    values = _forward_basis(length, length, length) @ x.astype(np.complex128)
    return ComplexSpectrum(values, length, length, SpectrumLayout.FULL)


def idft(spectrum: ComplexSpectrum) -> np.ndarray:
    """Inverse transform of a full spectrum back to a real series.

    The imaginary residue of each sample must satisfy
    ``|Im| < IMAG_RESIDUE_TOL * (1 + |Re|)``; a violation signals a spectrum
    that lost conjugate symmetry and raises ImaginaryResidueTooLarge.
    """
    if spectrum.layout is not SpectrumLayout.FULL:
        raise InvalidInput("idft requires a full-layout spectrum")
    n = spectrum.total_len
    samples = np.conj(_forward_basis(n, n, n)).T @ spectrum.values / n
    bad = np.abs(samples.imag) >= IMAG_RESIDUE_TOL * (1.0 + np.abs(samples.real))
    if np.any(bad):
        worst = int(np.argmax(np.abs(samples.imag)))
        raise ImaginaryResidueTooLarge(
            f"imaginary residue {samples.imag[worst]:.3e} at sample {worst}"
        )
    return samples.real.copy()


def extended_dft(x, horizon: int) -> ComplexSpectrum:
    """Half spectrum of ``x`` evaluated on the length-(L+horizon) grid.

    Equals the first ``(L+horizon)//2 + 1`` bins of the DFT of ``x`` zero-padded
    to the full grid length, which is the test oracle for this kernel.
    """
    x = as_real_series(x)
    if horizon < 0:
        raise InvalidInput("horizon must be nonnegative")
    length = x.shape[0]
    total = length + horizon
    n_bins = half_spectrum_len(total)
    values = _forward_basis(n_bins, length, total) @ x.astype(np.complex128)
    return ComplexSpectrum(values, length, total, SpectrumLayout.HALF_NON_REDUNDANT)


def take_half(spectrum: ComplexSpectrum) -> ComplexSpectrum:
    """Keep the non-redundant bins of a full spectrum."""
    if spectrum.layout is not SpectrumLayout.FULL:
        raise InvalidInput("take_half requires a full-layout spectrum")
    n_bins = half_spectrum_len(spectrum.total_len)
    return ComplexSpectrum(
        spectrum.values[:n_bins].copy(),
        spectrum.source_len,
        spectrum.total_len,
        SpectrumLayout.HALF_NON_REDUNDANT,
    )


def expand_half_to_full(spectrum: ComplexSpectrum) -> ComplexSpectrum:
    """Reconstruct the full spectrum by conjugate symmetry.

    The DC bin's imaginary part is forced to exactly zero, as is the Nyquist
    bin's when the grid length is even.
    """
    if spectrum.layout is not SpectrumLayout.HALF_NON_REDUNDANT:
        raise InvalidInput("expand_half_to_full requires a half-layout spectrum")
    n = spectrum.total_len
    half = spectrum.values
    full = np.zeros(n, dtype=np.complex128)
    full[: half.shape[0]] = half
    full[0] = half[0].real
    if n % 2 == 0:
        full[n // 2] = half[n // 2].real
    for k in range(1, (n - 1) // 2 + 1):
        full[n - k] = np.conj(full[k])
    return ComplexSpectrum(full, spectrum.source_len, n, SpectrumLayout.FULL)


def energy_time(x) -> float:
    """Sum of squared sample values."""
    x = as_real_series(x)
    return float(np.dot(x, x))


def energy_freq(spectrum: ComplexSpectrum) -> float:
    """Sum of squared bin magnitudes over a full spectrum."""
    if spectrum.layout is not SpectrumLayout.FULL:
        raise InvalidInput("energy_freq requires a full-layout spectrum")
    return float(np.sum(np.abs(spectrum.values) ** 2))


def idft_tail_matrices(lookback: int, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Real matrices (Ar, Ai) mapping half-spectrum planes to the forecast tail.

    For a half spectrum F on the length-(lookback+horizon) grid, the last
    ``horizon`` samples of ``idft(expand_half_to_full(F))`` equal
    ``Ar @ Re(F) + Ai @ Im(F)``. The imaginary planes of the DC bin (and the
    Nyquist bin on even grids) carry zero weight, mirroring the symmetry
    expansion that discards them.
    """
    n = lookback + horizon
    n_bins = half_spectrum_len(n)
    samples = np.arange(lookback, n, dtype=np.float64)[:, None]
    k = np.arange(n_bins, dtype=np.float64)[None, :]
    theta = 2.0 * np.pi * k * samples / n
    ar = 2.0 * np.cos(theta) / n
    ai = -2.0 * np.sin(theta) / n
    ar[:, 0] = 1.0 / n
    ai[:, 0] = 0.0
    if n % 2 == 0:
        nyquist = n // 2
        ar[:, nyquist] = np.cos(np.pi * samples[:, 0]) / n
        ai[:, nyquist] = 0.0
    return ar, ai
