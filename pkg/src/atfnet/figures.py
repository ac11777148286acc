"""Figure rendering for the CLI report path.

Every report command saves a PNG next to its delimited output; the CSV/JSON
stays the primary artifact. Rendering is headless (Agg) and file-only.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_FIGSIZE = (7.0, 4.0)


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_series(path, values: np.ndarray, names, title="series"):
    values = np.atleast_2d(np.asarray(values))
    if values.shape[0] == 1 and len(names) == 1:
        values = values.T if values.shape[1] != 1 else values
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for idx, name in enumerate(names):
        ax.plot(values[:, idx], lw=0.9, label=str(name))
    ax.set_xlabel("time index")
    ax.set_ylabel("value")
    ax.set_title(title)
    if len(names) <= 8:
        ax.legend(loc="best", fontsize=8)
    return _finish(fig, path)


def save_weights(path, rows):
    """Bar chart of per-channel blend weights from analyze rows."""
    channels = [str(r["channel_id"]) for r in rows]
    w_f = [float(r["w_f"]) for r in rows]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    pos = np.arange(len(channels))
    ax.bar(pos, w_f, color="tab:blue", label="w_f (frequency branch)")
    ax.bar(pos, [1.0 - w for w in w_f], bottom=w_f, color="tab:orange",
           label="w_t (time branch)")
    ax.set_xticks(pos)
    ax.set_xticklabels(channels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("blend weight")
    ax.set_ylim(0, 1)
    ax.set_title("harmonic energy weighting per channel")
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, path)


def save_history(path, records):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    epochs = [r.epoch for r in records]
    ax.plot(epochs, [r.train_mse for r in records], label="train MSE", lw=1.2)
    ax.plot(epochs, [r.val_mse for r in records], label="val MSE", lw=1.2)
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE")
    ax.set_yscale("log")
    ax.set_title("training history")
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, path)


def save_horizon_mse(path, per_horizon_mse):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    steps = np.arange(1, len(per_horizon_mse) + 1)
    ax.plot(steps, per_horizon_mse, marker="o", ms=3, lw=1.0)
    ax.set_xlabel("forecast step")
    ax.set_ylabel("MSE")
    ax.set_title("error by forecast step")
    return _finish(fig, path)


def save_forecast(path, rows, channel_names):
    """Branch and blended forecasts per channel from forecast rows."""
    channels = sorted({r["channel"] for r in rows})
    fig, axes = plt.subplots(len(channels), 1,
                             figsize=(7.0, 2.6 * len(channels)), squeeze=False)
    for ax, channel in zip(axes[:, 0], channels):
        sub = [r for r in rows if r["channel"] == channel]
        steps = [r["step"] for r in sub]
        ax.plot(steps, [r["y_f"] for r in sub], label="frequency branch", lw=1.0)
        ax.plot(steps, [r["y_t"] for r in sub], label="time branch", lw=1.0)
        ax.plot(steps, [r["y_hat"] for r in sub], label="blended", lw=1.6,
                color="black")
        ax.set_title(f"channel {channel_names[channel]} "
                     f"(w_f={sub[0]['w_f']:.3f})", fontsize=9)
        ax.legend(loc="best", fontsize=7)
    axes[-1, 0].set_xlabel("forecast step")
    return _finish(fig, path)


def save_error_curves(path, rows):
    """Median estimator error against sample size, log-log."""
    ns = [r.n for r in rows]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(ns, [r.complex_median_error for r in rows],
            marker="o", ms=4, label="complex least squares")
    ax.plot(ns, [r.split_gamma1_median_error for r in rows],
            marker="s", ms=4, label="split estimator (real slope)")
    ax.plot(ns, [r.split_delta1_median_error for r in rows],
            marker="^", ms=4, label="split estimator (imag slope)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("sample count n")
    ax.set_ylabel("median error")
    ax.set_title("estimator consistency")
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, path)


def save_sweep(path, rows):
    """Test MSE against look-back length."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot([r["lookback"] for r in rows], [r["mse"] for r in rows],
            marker="o", ms=4)
    ax.set_xlabel("look-back length")
    ax.set_ylabel("test MSE")
    ax.set_title("look-back sweep")
    return _finish(fig, path)
