"""Command-line interface: synthesis, analysis, training, evaluation,
forecasting, gradient checks, the estimator demo, and the look-back sweep.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Diagnostics go to stderr; every run writes one manifest alongside its outputs
and a rendered figure next to each delimited report.
"""

from __future__ import annotations

import os

# cap BLAS parallelism before numpy loads; default single-threaded for
# reproducible kernels
_THREADS = os.environ.get("ATFNET_THREADS", "1")
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
             "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
    os.environ.setdefault(_var, _THREADS)

import argparse  # noqa: E402
import csv  # noqa: E402
import datetime  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402
from dataclasses import asdict, dataclass  # noqa: E402

import numpy as np  # noqa: E402

from . import figures  # noqa: E402
from .cvnn import (  # noqa: E402
    REPORT_COLUMNS,
    ComplexRegressionProblem,
    consistency_report,
)
from .data import (  # noqa: E402
    load_csv,
    read_csv_matrix,
    synth_decomposition,
    synth_tone,
    windows,
    write_csv,
)
from .errors import (  # noqa: E402
    AtfnetError,
    ConfigMismatch,
    ConstantChannel,
    CorruptCheckpoint,
    EmptySplit,
    GradcheckFailure,
    ImaginaryResidueTooLarge,
    InvalidInput,
    NoDominantFrequency,
    NonFiniteLoss,
    ParseError,
    PatchTooLong,
    ShapeMismatch,
    SingularDesign,
    TooShort,
)
from .model import (  # noqa: E402
    ATFNet,
    AtfnetConfig,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from .training import TrainConfig, evaluate, train  # noqa: E402
from .weighting import harmonic_weights  # noqa: E402

_DATA_ERRORS = (ParseError, ConstantChannel, TooShort, EmptySplit, InvalidInput,
                CorruptCheckpoint, ConfigMismatch, PatchTooLong,
                FileNotFoundError, IsADirectoryError, json.JSONDecodeError)
_NUMERIC_ERRORS = (NonFiniteLoss, GradcheckFailure, ImaginaryResidueTooLarge,
                   SingularDesign, NoDominantFrequency, ShapeMismatch)


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    started_utc: str
    finished_utc: str
    artifacts: list


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_manifest(primary_path, command, config: dict, seed, started, artifacts):
    manifest = RunManifest(
        command=command,
        config=config,
        seed=int(seed),
        started_utc=started,
        finished_utc=_now(),
        artifacts=[str(a) for a in artifacts],
    )
    path = f"{primary_path}.manifest.json"
    with open(path, "w") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
    return path


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"usage error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_model_config(args) -> AtfnetConfig:
    raw = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            raw = json.load(fh)
    if getattr(args, "lookback", None) is not None:
        raw["lookback"] = args.lookback
    if getattr(args, "horizon", None) is not None:
        raw["horizon"] = args.horizon
    raw.setdefault("lookback", 96)
    raw.setdefault("horizon", 24)
    return AtfnetConfig.from_dict(raw)


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args):
    started = _now()
    if args.kind == "tone":
        series = synth_tone(args.length, args.period, amplitude=args.amplitude,
                            noise_sigma=args.noise_sigma, seed=args.seed)
    elif args.kind == "decomp":
        if args.length % args.period:
            raise InvalidInput("decomp needs length divisible by period")
        decomp = synth_decomposition(int(args.period),
                                     args.length // int(args.period),
                                     args.energy_ratio, seed=args.seed)
        series = decomp.series
    else:  # noise
        series = np.random.default_rng(args.seed).normal(size=args.length)
    write_csv(args.out, [args.kind], series)
    figure = figures.save_series(f"{args.out}.png", series.reshape(-1, 1),
                                 [args.kind], title=f"synthetic {args.kind}")
    config = {"kind": args.kind, "length": args.length, "period": args.period,
              "amplitude": args.amplitude, "noise_sigma": args.noise_sigma,
              "energy_ratio": args.energy_ratio}
    _write_manifest(args.out, "synth", config, args.seed, started,
                    [args.out, figure])
    return 0


def cmd_analyze(args):
    started = _now()
    names, raw = read_csv_matrix(args.data)
    if raw.shape[0] < args.lookback:
        raise TooShort(
            f"need at least {args.lookback} rows, file has {raw.shape[0]}"
        )
    n_harmonics = None if args.harmonics == "all" else int(args.harmonics)
    rows = []
    for channel, name in enumerate(names):
        window = raw[-args.lookback:, channel]
        try:
            w = harmonic_weights(window, n_harmonics)
            rows.append({"channel_id": name, "fundamental_index": w.fundamental_index,
                         "w_f": w.w_f, "w_t": w.w_t,
                         "E_h": float(sum(w.harmonic_energies)),
                         "E_f": w.total_energy})
        except NoDominantFrequency:
            rows.append({"channel_id": name, "fundamental_index": 0,
                         "w_f": 0.0, "w_t": 1.0, "E_h": 0.0, "E_f": 0.0})
    header = ["channel_id", "fundamental_index", "w_f", "w_t", "E_h", "E_f"]
    _write_rows(args.out, header, [[r[h] for h in header] for r in rows])
    figure = figures.save_weights(f"{args.out}.png", rows)
    config = {"data": args.data, "lookback": args.lookback,
              "harmonics": args.harmonics}
    _write_manifest(args.out, "analyze", config, 0, started, [args.out, figure])
    return 0


def cmd_train(args):
    started = _now()
    model_config = _load_model_config(args)
    dataset = load_csv(args.data)
    model = init_params(model_config, args.seed)
    train_config = TrainConfig(lr=args.lr, batch_size=args.batch_size,
                               max_epochs=args.epochs, patience=args.patience,
                               seed=args.seed)
    model, history = train(model, dataset, train_config)
    save_checkpoint(model, args.out_checkpoint)
    history_path = f"{args.out_checkpoint}.history.csv"
    _write_rows(history_path, ["epoch", "train_mse", "val_mse"],
                [[r.epoch, r.train_mse, r.val_mse] for r in history.records])
    figure = figures.save_history(f"{args.out_checkpoint}.history.png",
                                  history.records)
    config = {"model": model_config.to_dict(),
              "train": {"lr": args.lr, "batch_size": args.batch_size,
                        "max_epochs": args.epochs, "patience": args.patience},
              "data": args.data}
    _write_manifest(args.out_checkpoint, "train", config, args.seed, started,
                    [args.out_checkpoint, history_path, figure])
    print(f"best epoch {history.best_epoch}, "
          f"final val MSE {history.records[-1].val_mse:.6g}", file=sys.stderr)
    return 0


def cmd_eval(args):
    started = _now()
    model = load_checkpoint(args.checkpoint)
    dataset = load_csv(args.data)
    report = evaluate(model, dataset, args.split)
    with open(args.out, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
    figure = figures.save_horizon_mse(f"{args.out}.png", report.per_horizon_mse)
    config = {"data": args.data, "checkpoint": args.checkpoint,
              "split": args.split, "model": model.config.to_dict()}
    _write_manifest(args.out, "eval", config, 0, started, [args.out, figure])
    return 0


def cmd_forecast(args):
    started = _now()
    model = load_checkpoint(args.checkpoint)
    dataset = load_csv(args.data)
    lookback = model.config.lookback
    if args.origin < 0 or args.origin + lookback > dataset.n_time:
        raise InvalidInput(
            f"origin {args.origin} leaves no full look-back window "
            f"(need {lookback} rows of {dataset.n_time})"
        )
    x = dataset.values[args.origin:args.origin + lookback, :].T
    y_hat, y_f, y_t, weights = model.predict(x)
    rows = []
    for channel in range(dataset.n_channels):
        mean = dataset.norm_mean[channel]
        std = dataset.norm_std[channel]
        w = weights[channel]
        raw_f = y_f[channel] * std + mean
        raw_t = y_t[channel] * std + mean
        # blend after denormalization so the emitted identity is exact
        raw_hat = w.w_t * raw_t + w.w_f * raw_f
        for step in range(model.config.horizon):
            rows.append({"channel": channel, "step": step,
                         "y_f": float(raw_f[step]), "y_t": float(raw_t[step]),
                         "w_f": w.w_f, "y_hat": float(raw_hat[step])})
    header = ["channel", "step", "y_f", "y_t", "w_f", "y_hat"]
    _write_rows(args.out, header, [[r[h] for h in header] for r in rows])
    figure = figures.save_forecast(f"{args.out}.png", rows, dataset.channel_names)
    config = {"data": args.data, "checkpoint": args.checkpoint,
              "origin": args.origin, "model": model.config.to_dict()}
    _write_manifest(args.out, "forecast", config, 0, started, [args.out, figure])
    return 0


def _gradcheck_suite(seed: int):
    """Layer-by-layer finite-difference checks at small dimensions."""
    from .fblock import FBlock, FBlockConfig
    from .nn import autodiff as ad
    from .nn.complex_ops import CTensor
    from .nn.layers import (
        ComplexFeedForward,
        ComplexLayerNorm,
        CsaAttention,
        EncoderLayerConfig,
        RealEncoderLayer,
        AttentionScale,
        FieldKind,
        complex_linear,
        revin_freq_denormalize,
        revin_freq_normalize,
        revin_time_denormalize,
        revin_time_normalize,
    )
    from .tblock import TBlock, TBlockConfig

    rng = np.random.default_rng(seed)
    results = []

    def probe_pair(shape):
        return rng.normal(size=shape), rng.normal(size=shape)

    # complex linear
    w = ad.parameter(rng.normal(size=(3, 2, 2)), "w", is_complex=True)
    b = ad.parameter(rng.normal(size=(2, 2)), "b", is_complex=True)
    xr = ad.parameter(rng.normal(size=(4, 3)), "xr")
    xi = ad.parameter(rng.normal(size=(4, 3)), "xi")
    pr, pi = probe_pair((4, 2))

    def f():
        out = complex_linear(CTensor(xr, xi), w, b)
        return ad.sum_(out.re * pr) + ad.sum_(out.im * pi)

    results.append(("complex_linear", ad.gradcheck(f, [w, b, xr, xi])))

    # complex spectrum attention
    cfg = EncoderLayerConfig(model_dim=4, head_dim=2, num_heads=2, ffn_dim=8)
    attn = CsaAttention("csa", cfg, rng)
    xr = ad.parameter(rng.normal(size=(3, 4)), "xr")
    xi = ad.parameter(rng.normal(size=(3, 4)), "xi")
    pr, pi = probe_pair((3, 4))

    def f():
        out = attn(CTensor(xr, xi))
        return ad.sum_(out.re * pr) + ad.sum_(out.im * pi)

    results.append(("csa_attention", ad.gradcheck(f, attn.parameters() + [xr, xi])))

    # complex layer norm (random affine, else the probe loss is degenerate)
    ln = ComplexLayerNorm("ln", 4)
    ln.gamma.data = np.ascontiguousarray(rng.normal(size=(4, 2)))
    ln.beta.data = np.ascontiguousarray(rng.normal(size=(4, 2)))

    def f():
        out = ln(CTensor(xr, xi))
        return ad.sum_(out.re * pr) + ad.sum_(out.im * pi)

    results.append(("complex_layernorm",
                    ad.gradcheck(f, ln.parameters() + [xr, xi])))

    # complex feed-forward
    ffn = ComplexFeedForward("ffn", 4, 8, rng)

    def f():
        out = ffn(CTensor(xr, xi))
        return ad.sum_(out.re * pr) + ad.sum_(out.im * pi)

    results.append(("complex_ffn", ad.gradcheck(f, ffn.parameters() + [xr, xi])))

    # frequency RevIN pair
    fr = ad.parameter(rng.normal(size=7), "fr")
    fi = ad.parameter(rng.normal(size=7), "fi")
    qr, qi = probe_pair(7)

    def f():
        normed, state = revin_freq_normalize(CTensor(fr, fi))
        restored = revin_freq_denormalize(
            CTensor(normed.re * 1.5, normed.im * 0.5), state)
        return (ad.sum_(normed.re * qr) + ad.sum_(normed.im * qi)
                + ad.sum_(restored.re * qi) + ad.sum_(restored.im * qr))

    results.append(("revin_freq", ad.gradcheck(f, [fr, fi])))

    # time RevIN pair
    xt = ad.parameter(rng.normal(size=12), "xt")
    qt = rng.normal(size=12)

    def f():
        normed, state = revin_time_normalize(xt)
        restored = revin_time_denormalize(normed * 2.0, state)
        return ad.sum_(normed * qt) + ad.sum_(restored * qt[::-1].copy())

    results.append(("revin_time", ad.gradcheck(f, [xt])))

    # real encoder layer
    real_cfg = EncoderLayerConfig(model_dim=4, head_dim=2, num_heads=2, ffn_dim=8,
                                  attention_scale=AttentionScale.INV_SQRT_D,
                                  field=FieldKind.REAL)
    enc = RealEncoderLayer("enc", real_cfg, rng)
    xq = ad.parameter(rng.normal(size=(3, 4)), "xq")
    pq = rng.normal(size=(3, 4))

    def f():
        return ad.sum_(enc(xq) * pq)

    results.append(("real_encoder_layer", ad.gradcheck(f, enc.parameters() + [xq])))

    # both blocks end to end at tiny dims (looser 1e-4 tolerance)
    fb = FBlock(FBlockConfig(lookback=8, horizon=4, model_dim=4, head_dim=4,
                             heads=1, layers=1, ffn_dim=8), rng)
    xw = rng.normal(size=8)
    pw = rng.normal(size=4)

    def f():
        return ad.sum_(fb.forward(xw) * pw)

    results.append(("fblock_end_to_end",
                    ad.gradcheck(f, fb.parameters(), tolerance=1e-4)))

    tb = TBlock(TBlockConfig(lookback=16, horizon=4, patch_len=8, stride=4,
                             model_dim=4, head_dim=2, heads=2, layers=1,
                             ffn_dim=8), rng)
    xw = rng.normal(size=16)

    def f():
        return ad.sum_(tb.forward(xw) * pw)

    results.append(("tblock_end_to_end",
                    ad.gradcheck(f, tb.parameters(), tolerance=1e-4)))
    return results


def cmd_gradcheck(args):
    started = _now()
    results = _gradcheck_suite(args.seed)
    rows = []
    all_passed = True
    for name, report in results:
        status = "pass" if report.passed else "fail"
        all_passed &= report.passed
        rows.append([name, report.n_scalars, report.max_rel_error,
                     report.tolerance, status])
        print(f"{name:22s} {report.max_rel_error:.3e} "
              f"(tol {report.tolerance:.0e}) {status}")
    _write_rows(args.out, ["layer", "n_scalars", "max_rel_error",
                           "tolerance", "status"], rows)
    _write_manifest(args.out, "gradcheck", {"seed": args.seed}, args.seed,
                    started, [args.out])
    return 0 if all_passed else 3


def cmd_cvnn_demo(args):
    started = _now()
    problem = ComplexRegressionProblem(
        true_beta0=1.0 + 1.0j,
        true_beta1=1.0 + 1.0j * args.beta1_imag,
        n=max(args.sizes),
        input_corr=args.corr,
        noise_sigma=args.noise_sigma,
    )
    rows = consistency_report(problem, args.sizes, args.trials, seed=args.seed)
    _write_rows(args.out, list(REPORT_COLUMNS),
                [[r.n, r.trials, r.complex_median_error,
                  r.complex_median_beta1_error, r.split_gamma1_median_error,
                  r.split_delta1_median_error] for r in rows])
    figure = figures.save_error_curves(f"{args.out}.png", rows)
    first, last = rows[0], rows[-1]
    print(f"complex estimator: median error {first.complex_median_error:.4f} "
          f"at n={first.n} -> {last.complex_median_error:.4f} at n={last.n}")
    print(f"split estimator slope bias at n={last.n}: "
          f"{last.split_gamma1_median_error:.4f} "
          f"(theory {abs(args.corr * args.beta1_imag):.4f})")
    config = {"corr": args.corr, "beta1_imag": args.beta1_imag,
              "trials": args.trials, "sizes": list(args.sizes),
              "noise_sigma": args.noise_sigma}
    _write_manifest(args.out, "cvnn-demo", config, args.seed, started,
                    [args.out, figure])
    return 0


def cmd_sweep_lookback(args):
    started = _now()
    dataset = load_csv(args.data)
    rows = []
    for lookback in args.lookbacks:
        raw = {}
        if args.config:
            with open(args.config) as fh:
                raw = json.load(fh)
        raw["lookback"] = lookback
        raw["horizon"] = args.horizon
        model_config = AtfnetConfig.from_dict(raw)
        model = init_params(model_config, args.seed)
        model, history = train(model, dataset, TrainConfig(
            lr=args.lr, batch_size=args.batch_size, max_epochs=args.epochs,
            patience=args.patience, seed=args.seed))
        report = evaluate(model, dataset, "test")
        rows.append({"lookback": lookback, "mse": report.mse, "mae": report.mae,
                     "epochs_run": len(history.records)})
        print(f"lookback {lookback}: test MSE {report.mse:.6g}", file=sys.stderr)
    header = ["lookback", "mse", "mae", "epochs_run"]
    _write_rows(args.out, header, [[r[h] for h in header] for r in rows])
    figure = figures.save_sweep(f"{args.out}.png", rows)
    config = {"data": args.data, "lookbacks": list(args.lookbacks),
              "horizon": args.horizon, "epochs": args.epochs}
    _write_manifest(args.out, "sweep-lookback", config, args.seed, started,
                    [args.out, figure])
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="atfnet",
                     description="time/frequency ensemble forecaster")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic series CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("tone", "decomp", "noise"), default="tone")
    p.add_argument("--length", type=int, default=720)
    p.add_argument("--period", type=float, default=24.0)
    p.add_argument("--lambda", dest="energy_ratio", type=float, default=9.0,
                   help="periodic-to-residual energy ratio for --kind decomp")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("analyze", help="per-channel harmonic energy weights")
    p.add_argument("--data", required=True)
    p.add_argument("--lookback", type=int, default=96)
    p.add_argument("--harmonics", default="6",
                   help="harmonic count or 'all'")
    p.add_argument("--out", default="weights.csv")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("train", help="train a model on a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="JSON model config; flags override")
    p.add_argument("--out-checkpoint", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lookback", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=3)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--out", default="eval_report.json")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("forecast", help="forecast from one look-back window")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--origin", type=int, required=True,
                   help="time index of the first look-back sample")
    p.add_argument("--out", default="forecast.csv")
    p.set_defaults(handler=cmd_forecast)

    p = sub.add_parser("gradcheck", help="finite-difference checks per layer")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="gradcheck_report.csv")
    p.set_defaults(handler=cmd_gradcheck)

    p = sub.add_parser("cvnn-demo",
                       help="complex vs split-real least squares comparison")
    p.add_argument("--corr", type=float, default=0.8)
    p.add_argument("--beta1-imag", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--noise-sigma", type=float, default=1.0)
    p.add_argument("--sizes", type=lambda s: tuple(int(v) for v in s.split(",")),
                   default=(1000, 2500, 4000, 10000))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="cvnn_report.csv")
    p.set_defaults(handler=cmd_cvnn_demo)

    p = sub.add_parser("sweep-lookback",
                       help="test MSE across look-back lengths")
    p.add_argument("--data", required=True)
    p.add_argument("--lookbacks", type=lambda s: tuple(int(v) for v in s.split(",")),
                   default=(48, 96, 192))
    p.add_argument("--horizon", type=int, default=24)
    p.add_argument("--config", help="JSON model config applied to every run")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(handler=cmd_sweep_lookback)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except AtfnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
