"""Command-line front end.

Single-stage commands read and write fixed file names inside ``--out-dir``,
so they chain: ``synth``, ``keypoints``, ``compress``, ``segment``,
``classify``. ``run`` does all of them in one go from a series and a label
file. ``sweep`` and ``stability`` produce the parameter-sensitivity tables.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

from . import pipeline as pl
from ._io import atomic_write_text, fmt_num
from .classify import CLASSIFIERS
from .compress import dp_compress, load_cts, save_cts
from .config import BASELINES, SIL_SPACES, PipelineConfig, load_config
from .errors import DependencyError, PipelineError
from .keypoints import correct_series, load_keypoints, save_keypoints
from .segment import load_periods, save_periods, segment_and_annotate
from .series import SynthConfig, load_labels, load_series, save_boundaries, save_labels, save_series, synth_pts
from .stability import (
    DECREASING,
    endpoint_stability,
    monotonicity_index,
    sweep_epsilon,
    sweep_lambda,
)

OUT_ENV = "PSEUDOPERIODIC_OUT"

SERIES_CSV = "series.csv"
LABELS_CSV = "labels.csv"
BOUNDARIES_CSV = "boundaries.csv"

DEFAULT_EPS_SWEEP = (1, 2, 3, 4, 5)
DEFAULT_LAM_SWEEP = tuple(range(5, 55, 5))

# (dest, flag, type, help) for every config field settable from the command line
OVERRIDES = [
    ("epsilon", "--epsilon", float, "turning-angle threshold in radians"),
    ("lam", "--lambda", float, "compression tolerance"),
    ("t_scale", "--t-scale", float, "time-axis scale for geometry"),
    ("v_scale", "--v-scale", float, "value-axis scale for geometry"),
    ("k_min", "--k-min", int, None),
    ("k_max", "--k-max", int, None),
    ("eta", "--eta", float, "minimum overall mean silhouette"),
    ("xi", "--xi", float, "minimum period-cluster mean silhouette"),
    ("cv_folds", "--folds", int, None),
    ("u0", "--u0", float, "initial valley bound"),
    ("alpha", "--alpha", float, "valley bound growth factor"),
    ("n_trees", "--n-trees", int, None),
    ("restarts", "--restarts", int, "k-means restarts per k"),
    ("workers", "--workers", int, None),
]


def _values(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", type=Path, help=f"artifact directory (default ${OUT_ENV} or ./out)")
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--classifier", choices=CLASSIFIERS)
    common.add_argument("--baseline", choices=BASELINES)
    common.add_argument("--sil-space", dest="sil_space", choices=SIL_SPACES)
    common.add_argument(
        "--standardize", action=argparse.BooleanOptionalAction, default=None,
        help="z-score features before gnb/lda",
    )
    for dest, flag, kind, help_ in OVERRIDES:
        common.add_argument(flag, dest=dest, type=kind, help=help_)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="pseudoperiodic", description="Anomaly detection in pseudo-periodic series.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate a labelled synthetic series")
    s.add_argument("--n-periods", type=int, default=100)
    s.add_argument("--base-period-len", type=int, default=60)
    s.add_argument("--amplitude", type=float, default=100.0)
    s.add_argument("--anomaly-rate", type=float, default=0.1)
    s.add_argument("--jitter", type=float, default=0.05)
    s.add_argument("--dropout-rate", type=float, default=0.0)
    s.add_argument("--peak-jitter", type=float, default=0.0)

    for name, help_ in [
        ("keypoints", "detect and recover key-points"),
        ("compress", "compress key-points"),
        ("segment", "find periods and annotate them"),
        ("classify", "cross-validate a classifier on annotated periods"),
        ("stability", "monotonicity and endpoint-stability indices"),
        ("sweep", "breakpoint counts over a parameter range"),
        ("run", "the whole pipeline"),
    ]:
        c = sub.add_parser(name, parents=[common], help=help_)
        if name in ("keypoints", "stability", "sweep", "run"):
            c.add_argument("--series", type=Path)
        if name in ("segment", "run"):
            c.add_argument("--labels", type=Path)
        if name == "sweep":
            c.add_argument("--param", choices=("epsilon", "lambda"), required=True)
            c.add_argument("--values", type=_values)
        if name == "stability":
            c.add_argument("--deletion-step", type=int, default=100)
            c.add_argument("--levels", type=int, default=10)
    return p


def resolve_config(args):
    cfg = load_config(args.config) if args.config else PipelineConfig()
    names = [d for d, *_ in OVERRIDES] + ["seed", "classifier", "baseline", "sil_space", "standardize"]
    return cfg.with_overrides(**{n: getattr(args, n, None) for n in names})


def out_dir_of(args):
    if args.out_dir is not None:
        return args.out_dir
    return Path(os.environ.get(OUT_ENV, "out"))


def _require(path, command):
    if not Path(path).exists():
        raise DependencyError(f"missing {path}; run `{command}` first")
    return path


def _input(args, attr, out, default_name, producer):
    given = getattr(args, attr, None)
    if given is not None:
        if not given.exists():
            raise FileNotFoundError(given)
        return given
    return _require(out / default_name, producer)


# --------------------------------------------------------------------------
# commands


def cmd_synth(args, cfg, out):
    sc = SynthConfig(
        n_periods=args.n_periods,
        base_period_len=args.base_period_len,
        amplitude=args.amplitude,
        anomaly_rate=args.anomaly_rate,
        jitter=args.jitter,
        dropout_rate=args.dropout_rate,
        seed=cfg.seed,
        peak_jitter=args.peak_jitter,
    )
    res = synth_pts(sc)
    save_series(res.series, out / SERIES_CSV)
    save_labels(res.labels, out / LABELS_CSV)
    save_boundaries(res.boundaries, out / BOUNDARIES_CSV)
    counts = {"points": len(res.series), "periods": sc.n_periods, "abnormal": res.labels.labels.count("Ab")}
    outputs = {"series": SERIES_CSV, "labels": LABELS_CSV, "boundaries": BOUNDARIES_CSV}
    pl.write_manifest(out, "synth", cfg, {}, outputs, counts, {"synth": vars(sc)})


def cmd_keypoints(args, cfg, out):
    src = _input(args, "series", out, SERIES_CSV, "synth")
    with pl.stage("load"):
        ts = load_series(src)
    with pl.stage("keypoints"):
        kps = correct_series(ts, cfg.epsilon, cfg.scale)
        save_keypoints(kps, out / pl.KEYPOINTS_CSV)
    counts = {"raw": len(ts), "keypoints": len(kps), "recovered": kps.n_recovered}
    pl.write_manifest(out, "keypoints", cfg, {"series": src}, {"keypoints": pl.KEYPOINTS_CSV}, counts)


def cmd_compress(args, cfg, out):
    src = _require(out / pl.KEYPOINTS_CSV, "keypoints")
    with pl.stage("compress"):
        kps = load_keypoints(src, cfg.epsilon)
        cts = dp_compress(kps, cfg.lam, cfg.scale)
        save_cts(cts, out / pl.CTS_CSV)
    counts = {"keypoints": len(kps), "cts": len(cts)}
    pl.write_manifest(out, "compress", cfg, {"keypoints": src}, {"cts": pl.CTS_CSV}, counts)


def cmd_segment(args, cfg, out):
    src = _require(out / pl.CTS_CSV, "compress")
    labels = _input(args, "labels", out, LABELS_CSV, "synth")
    with pl.stage("cluster"):
        cts = load_cts(src, cfg.lam)
        idx, clusters = pl.find_periods(cts, cfg)
        pl.write_json(clusters, out / pl.CLUSTERS_JSON)
    with pl.stage("segment"):
        rows = segment_and_annotate(cts, idx, load_labels(labels))
        save_periods(rows, out / pl.PERIODS_CSV)
    counts = {"cts": len(cts), "period_points": int(idx.size), "periods": len(rows)}
    outputs = {"clusters": pl.CLUSTERS_JSON, "periods": pl.PERIODS_CSV}
    pl.write_manifest(out, "segment", cfg, {"cts": src, "labels": labels}, outputs, counts)


def cmd_classify(args, cfg, out):
    src = _require(out / pl.PERIODS_CSV, "segment")
    with pl.stage("classify"):
        ds, res = pl.classify_periods(load_periods(src), cfg)
        pl.write_json(pl.metrics_report(ds, res), out / pl.METRICS_JSON)
    counts = {"periods": len(ds), "folds": len(res.folds), "skipped_folds": len(res.skipped)}
    pl.write_manifest(out, "classify", cfg, {"periods": src}, {"metrics": pl.METRICS_JSON}, counts)


def cmd_sweep(args, cfg, out):
    src = _input(args, "series", out, SERIES_CSV, "synth")
    ts = load_series(src)
    with pl.stage("sweep"):
        if args.param == "epsilon":
            res = sweep_epsilon(ts, args.values or DEFAULT_EPS_SWEEP, cfg.scale)
        else:
            res = sweep_lambda(ts, args.values or DEFAULT_LAM_SWEEP, cfg.epsilon, cfg.scale)
    name = f"sweep_{args.param}.csv"
    lines = [f"{args.param},count"] + [f"{fmt_num(x)},{c}" for x, c in zip(res.values, res.counts)]
    atomic_write_text(out / name, "\n".join(lines) + "\n")
    counts = {"rows": len(res.counts)}
    pl.write_manifest(out, "sweep", cfg, {"series": src}, {"sweep": name}, counts, {"param": args.param})


def cmd_stability(args, cfg, out):
    src = _input(args, "series", out, SERIES_CSV, "synth")
    ts = load_series(src)
    with pl.stage("stability"):
        eps = sweep_epsilon(ts, DEFAULT_EPS_SWEEP, cfg.scale)
        lam = sweep_lambda(ts, DEFAULT_LAM_SWEEP, cfg.epsilon, cfg.scale)
        run = endpoint_stability(ts, cfg.epsilon, cfg.lam, args.deletion_step, args.levels, cfg.scale)
    report = {
        "epsilon_sweep": {"values": list(eps.values), "counts": list(eps.counts)},
        "lambda_sweep": {"values": list(lam.values), "counts": list(lam.counts)},
        "M_D_epsilon": monotonicity_index(eps, DECREASING),
        "M_D_lambda": monotonicity_index(lam, DECREASING),
        "S": run.S,
        "deletion_step": run.deletion_step,
        "levels_evaluated": run.levels,
        "levels_skipped": list(run.skipped),
    }
    pl.write_json(report, out / "stability.json")
    lines = ["level_length,breakpoints,shift_sum,term"]
    lines += [
        f"{n},{c},{fmt_num(s)},{fmt_num(t)}"
        for n, c, s, t in zip(run.lengths, run.counts, run.shift_sums, run.per_level)
    ]
    atomic_write_text(out / "stability_levels.csv", "\n".join(lines) + "\n")
    outputs = {"stability": "stability.json", "levels": "stability_levels.csv"}
    pl.write_manifest(out, "stability", cfg, {"series": src}, outputs, {"levels": run.levels})


def cmd_run(args, cfg, out):
    series = _input(args, "series", out, SERIES_CSV, "synth")
    labels = _input(args, "labels", out, LABELS_CSV, "synth")
    pl.run_pipeline(series, labels, cfg, out)


COMMANDS = {
    "synth": cmd_synth,
    "keypoints": cmd_keypoints,
    "compress": cmd_compress,
    "segment": cmd_segment,
    "classify": cmd_classify,
    "sweep": cmd_sweep,
    "stability": cmd_stability,
    "run": cmd_run,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        out = out_dir_of(args)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, cfg, out)
    except PipelineError as exc:
        where = getattr(exc, "stage", None)
        prefix = f"{where}: " if where else ""
        print(f"error: {prefix}{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return DependencyError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
