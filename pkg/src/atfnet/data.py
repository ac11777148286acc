"""CSV ingestion, chronological splits, sliding windows, and synthetic signals.

CSV files follow the common long-horizon benchmark layout: first column is a
timestamp (ignored for modeling), remaining columns are variates. Values are
z-scored per channel with statistics from the training slice only; metrics are
computed in this normalized space.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstantChannel, InvalidInput, ParseError, TooShort
from .weighting import PeriodicDecomposition

MIN_CHANNEL_STD = 1e-8


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.7
    val_frac: float = 0.1
    test_frac: float = 0.2

    def __post_init__(self):
        total = self.train_frac + self.val_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise InvalidInput(f"split fractions sum to {total}, expected 1")
        if min(self.train_frac, self.val_frac, self.test_frac) < 0:
            raise InvalidInput("split fractions must be nonnegative")


@dataclass(frozen=True)
class Dataset:
    """Z-scored multichannel series with contiguous chronological splits."""

    channel_names: tuple
    values: np.ndarray            # [time, channels], normalized
    split: SplitSpec
    norm_mean: np.ndarray         # per-channel, from the train slice
    norm_std: np.ndarray
    boundaries: tuple             # (n_train, n_train + n_val)

    @property
    def n_time(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    def part_range(self, part: str) -> tuple[int, int]:
        n_train, n_trainval = self.boundaries
        if part == "train":
            return 0, n_train
        if part == "val":
            return n_train, n_trainval
        if part == "test":
            return n_trainval, self.n_time
        raise InvalidInput(f"unknown split part {part!r}")


@dataclass(frozen=True)
class SeriesWindow:
    """One (lookback, target) pair for one channel, in normalized space.

    ``origin`` is the global time index of the first lookback sample; the
    window lies wholly inside its split part.
    """

    channel: int
    lookback: np.ndarray
    target: np.ndarray
    origin: int


def read_csv_matrix(path):
    """Raw parse: (channel_names, float matrix [time, channels]).

    The first column is treated as a timestamp and skipped. Any cell that does
    not parse as a finite number raises ParseError with its 0-based data row
    and column.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TooShort("empty CSV") from None
        if len(header) < 2:
            raise InvalidInput("CSV needs a timestamp column plus >= 1 variate")
        names = tuple(header[1:])
        rows = []
        for r, record in enumerate(reader):
            if len(record) != len(header):
                raise ParseError(r, len(record), f"row {r} has {len(record)} cells")
            parsed = []
            for c, cell in enumerate(record[1:]):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(r, c + 1) from None
                if not math.isfinite(value):
                    raise ParseError(r, c + 1, f"non-finite value at row {r}")
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise TooShort("CSV has no data rows")
    return names, np.asarray(rows, dtype=np.float64)


def load_csv(path, split: SplitSpec | None = None) -> Dataset:
    """Load, split chronologically, and z-score with train-slice statistics.

    Channels that are constant on the train slice raise ConstantChannel.
    """
    split = split or SplitSpec()
    names, raw = read_csv_matrix(path)
    n = raw.shape[0]
    n_train = int(math.floor(n * split.train_frac))
    n_val = int(math.floor(n * split.val_frac))
    if n_train < 2:
        raise TooShort(f"train slice has {n_train} rows; need at least 2")
    train = raw[:n_train]
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    for idx, s in enumerate(std):
        if s < MIN_CHANNEL_STD:
            raise ConstantChannel(names[idx])
    values = (raw - mean) / std
    return Dataset(names, values, split, mean, std, (n_train, n_train + n_val))


def windows(dataset: Dataset, lookback: int, horizon: int, part: str,
            stride: int = 1):
    """All windows of one split part, every channel, chronological order.

    At stride 1 each channel yields max(0, part_len - lookback - horizon + 1)
    windows; an empty list is fine.
    """
    if lookback < 1 or horizon < 1 or stride < 1:
        raise InvalidInput("lookback, horizon, and stride must be positive")
    lo, hi = dataset.part_range(part)
    span = lookback + horizon
    out = []
    last_start = hi - span
    for channel in range(dataset.n_channels):
        column = dataset.values[:, channel]
        for origin in range(lo, last_start + 1, stride):
            out.append(SeriesWindow(
                channel=channel,
                lookback=column[origin:origin + lookback].copy(),
                target=column[origin + lookback:origin + span].copy(),
                origin=origin,
            ))
    return out


def synth_tone(length: int, period: float, amplitude: float = 1.0,
               phase: float = 0.0, noise_sigma: float = 0.0,
               seed: int = 0) -> np.ndarray:
    """Sinusoid with optional additive Gaussian noise."""
    if length < 1 or period <= 0:
        raise InvalidInput("length must be >= 1 and period positive")
    n = np.arange(length, dtype=np.float64)
    x = amplitude * np.sin(2.0 * np.pi * n / period + phase)
    if noise_sigma > 0:
        x = x + np.random.default_rng(seed).normal(0.0, noise_sigma, size=length)
    return x


def synth_decomposition(period: int, repetitions: int, energy_ratio: float,
                        seed: int = 0) -> PeriodicDecomposition:
    """Random periodic-plus-residual split with an exact energy ratio.

    The periodic part is a random trigonometric polynomial over harmonics
    1..ceil(period/2)-1 of the period, tiled so periodicity holds bit-for-bit.
    The residual is centered Gaussian noise rescaled so that the periodic to
    residual energy ratio equals ``energy_ratio`` to machine precision; both
    parts are zero-mean.
    """
    if energy_ratio <= 0:
        raise InvalidInput("energy_ratio must be positive")
    if period < 3 or repetitions < 1:
        raise InvalidInput("period must be >= 3 and repetitions >= 1")
    n_harmonics = (period + 1) // 2 - 1  # ceil(period/2) - 1, below Nyquist
    rng = np.random.default_rng(seed)
    base = np.zeros(period)
    t = np.arange(period, dtype=np.float64)
    for m in range(1, n_harmonics + 1):
        a, b = rng.normal(size=2)
        base += a * np.cos(2.0 * np.pi * m * t / period)
        base += b * np.sin(2.0 * np.pi * m * t / period)
    periodic = np.tile(base, repetitions)
    energy_p = float(np.dot(periodic, periodic))
    if energy_p == 0.0:
        raise InvalidInput("degenerate periodic part (zero energy)")

    residual = rng.normal(size=period * repetitions)
    residual -= residual.mean()
    energy_r = float(np.dot(residual, residual))
    residual *= np.sqrt(energy_p / (energy_ratio * energy_r))
    return PeriodicDecomposition(periodic, residual, energy_ratio,
                                 period, repetitions)


def write_csv(path, names, values: np.ndarray, start="2021-01-01T00:00:00",
              step_hours: int = 1):
    """Write a matrix as a benchmark-layout CSV with dummy ISO-8601 stamps."""
    import datetime as dt

    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    if values.shape[0] == 1 and len(names) == 1:
        values = values.T
    t0 = dt.datetime.fromisoformat(start)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", *names])
        for i, row in enumerate(values):
            stamp = (t0 + dt.timedelta(hours=step_hours * i)).isoformat()
            writer.writerow([stamp] + [repr(float(v)) for v in row])
