"""End-to-end runs: correct, compress, find periods, annotate, classify.

Every stage writes one artifact into the output directory and the run ends
with a manifest naming inputs, outputs (with content hashes), the config
and per-stage counts. Nothing time- or host-dependent goes into any file,
so identical inputs give byte-identical outputs.
"""

import hashlib
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ._io import atomic_write_text, dumps_fixed
from .classify import Dataset, kfold_cv
from .clustering import feature_vectors, silhouette_values, sweep_k
from .compress import dp_compress, save_cts
from .errors import InsufficientPeriodsError, PipelineError
from .keypoints import correct_series, save_keypoints
from .segment import save_periods, segment_and_annotate
from .series import load_labels, load_series
from .stability import angle_baseline, valley_baseline

KEYPOINTS_CSV = "keypoints.csv"
CTS_CSV = "cts.csv"
CLUSTERS_JSON = "clusters.json"
PERIODS_CSV = "periods.csv"
METRICS_JSON = "metrics.json"
MANIFEST_JSON = "manifest.json"


@contextmanager
def stage(name):
    """Tag any pipeline error escaping the block with the stage it came from."""
    try:
        yield
    except PipelineError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        raise


def file_sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_json(obj, path):
    atomic_write_text(path, dumps_fixed(obj) + "\n")


def write_manifest(out_dir, command, cfg, inputs, outputs, counts, extra=None):
    """Manifest naming every input and output file with its hash, plus the config and seed."""
    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "config": asdict(cfg),
        "config_hash": cfg.digest(),
        "seed": cfg.seed,
        "inputs": {k: {"path": str(p), "sha256": file_sha256(p)} for k, p in inputs.items()},
        "outputs": {k: {"file": name, "sha256": file_sha256(out_dir / name)} for k, name in outputs.items()},
        "counts": counts,
    }
    if extra:
        manifest.update(extra)
    path = out_dir / (MANIFEST_JSON if command == "run" else f"manifest_{command}.json")
    write_json(manifest, path)
    return path


# --------------------------------------------------------------------------
# stages


def find_periods(cts, cfg):
    """Period point indices into ``cts`` plus a clustering report, for the configured baseline."""
    if len(cts) < 4:
        raise InsufficientPeriodsError(f"compressed series has only {len(cts)} points")
    X = feature_vectors(cts)
    amps = cts.v[1:-1]
    # silhouettes are scored on the clustered vectors unless raw (t, v) coordinates are asked for
    raw = cts.points[1:-1] if cfg.sil_space == "raw" else None
    report = {"baseline": cfg.baseline}
    if cfg.baseline == "valley":
        idx = valley_baseline(cts, cfg.u0, cfg.alpha)
        member = np.zeros(len(cts), dtype=int)
        member[idx] = 1
        member = member[1:-1]
        # quality of the valley / non-valley split, measured like the other baselines
        msil = None
        if 0 < member.sum() < member.size:
            msil = float(silhouette_values(X if raw is None else raw, member).mean())
        report.update(k=2, overall_msil=msil, per_cluster_msil=None, chosen_cluster=None)
    else:
        if cfg.baseline == "angle":
            cl, sel = angle_baseline(cts, cfg.k_range, cfg.eta, cfg.xi, seed=cfg.seed, restarts=cfg.restarts)
        else:
            cl, sel = sweep_k(
                X, cfg.k_range, cfg.eta, cfg.xi, seed=cfg.seed, restarts=cfg.restarts,
                amplitudes=amps, sil_points=raw, workers=cfg.workers,
            )
        if cl is None:
            raise InsufficientPeriodsError("too few distinct points to cluster")
        idx = sel.period_point_indices
        report.update(
            k=cl.k,
            overall_msil=cl.overall_msil,
            per_cluster_msil=[float(m) for m in cl.per_cluster_msil],
            chosen_cluster=sel.chosen_cluster,
        )
        if not sel.found:
            raise InsufficientPeriodsError(
                f"no period cluster: best overall msil {cl.overall_msil:.4f} at k={cl.k} "
                f"(eta={cfg.eta}, xi={cfg.xi})"
            )
    idx = np.asarray(idx, dtype=int)
    report["n_period_points"] = int(idx.size)
    report["period_times"] = [float(t) for t in cts.t[idx]]
    return idx, report


def classify_periods(rows, cfg):
    ds = Dataset.from_periods(rows)
    res = kfold_cv(
        ds, cfg.cv_folds, cfg.classifier, seed=cfg.seed, n_trees=cfg.n_trees,
        standardize=cfg.standardize, workers=cfg.workers,
    )
    return ds, res


def metrics_report(ds, res):
    out = res.to_dict()
    out["acc"] = out["pooled"]["acc"]
    out["n_periods"] = len(ds)
    out["n_abnormal"] = int(ds.y.sum())
    return out


def run_pipeline(series_path, labels_path, cfg, out_dir):
    """Run every stage and write all artifacts plus the manifest; returns the report dict."""
    out_dir = Path(out_dir)
    with stage("load"):
        ts = load_series(series_path)
        track = load_labels(labels_path)
        track.validate_against(ts)
    with stage("keypoints"):
        kps = correct_series(ts, cfg.epsilon, cfg.scale)
        save_keypoints(kps, out_dir / KEYPOINTS_CSV)
    with stage("compress"):
        cts = dp_compress(kps, cfg.lam, cfg.scale)
        save_cts(cts, out_dir / CTS_CSV)
    with stage("cluster"):
        idx, clusters = find_periods(cts, cfg)
        write_json(clusters, out_dir / CLUSTERS_JSON)
    with stage("segment"):
        rows = segment_and_annotate(cts, idx, track)
        save_periods(rows, out_dir / PERIODS_CSV)
    with stage("classify"):
        ds, res = classify_periods(rows, cfg)
        metrics = metrics_report(ds, res)
        write_json(metrics, out_dir / METRICS_JSON)

    counts = {
        "raw": len(ts),
        "keypoints": len(kps),
        "recovered": kps.n_recovered,
        "cts": len(cts),
        "period_points": int(idx.size),
        "periods": len(rows),
        "abnormal_periods": int(ds.y.sum()),
    }
    outputs = {
        "keypoints": KEYPOINTS_CSV,
        "cts": CTS_CSV,
        "clusters": CLUSTERS_JSON,
        "periods": PERIODS_CSV,
        "metrics": METRICS_JSON,
    }
    inputs = {"series": series_path, "labels": labels_path}
    write_manifest(out_dir, "run", cfg, inputs, outputs, counts)
    return {"counts": counts, "clusters": clusters, "metrics": metrics}
