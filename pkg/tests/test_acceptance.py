"""Acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured value so
the run log doubles as a report. Run with ``pytest tests/test_acceptance.py -v``
or directly with ``python tests/test_acceptance.py``.
"""

import math
import shutil
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import brute_silhouette, polyline_distance, random_triangle, rational_metrics  # noqa: E402
from pseudoperiodic.classify import ConfusionCounts, Dataset, compute_metrics, kfold_cv  # noqa: E402
from pseudoperiodic.cli import main as cli_main  # noqa: E402
from pseudoperiodic.clustering import feature_vectors, silhouette_values, sweep_k  # noqa: E402
from pseudoperiodic.compress import dp_compress  # noqa: E402
from pseudoperiodic.keypoints import INSERT, correct_series, recover_missing  # noqa: E402
from pseudoperiodic.segment import segment_and_annotate  # noqa: E402
from pseudoperiodic.series import SynthConfig, TimeSeries, synth_pts  # noqa: E402
from pseudoperiodic.stability import (  # noqa: E402
    angle_baseline,
    endpoint_stability,
    monotonicity_index,
    sweep_epsilon,
    sweep_lambda,
)

EPSILON = 1.0
LAMBDA = 10.0


@pytest.fixture
def report(request):
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def emit(n, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {title} ({detail})"
        if capman is not None:
            with capman.global_and_fixture_disabled():
                print("\n" + line)
        else:
            print(line)
        assert ok, line

    return emit


def pipeline_cts(res):
    return dp_compress(correct_series(res.series, EPSILON), LAMBDA)


def test_01_monotonicity(report):
    worst_time, indices = 0.0, []
    for seed in range(3):
        ts = synth_pts(SynthConfig(n_periods=1710, dropout_rate=0.1, seed=seed)).series
        assert len(ts) >= 100_000
        t0 = time.perf_counter()
        eps = sweep_epsilon(ts, [1, 2, 3, 4, 5])
        lam = sweep_lambda(ts, range(5, 55, 5), epsilon=EPSILON)
        worst_time = max(worst_time, time.perf_counter() - t0)
        indices += [monotonicity_index(eps), monotonicity_index(lam)]
    ok = all(m == 100 for m in indices) and worst_time < 10
    report(1, "epsilon and lambda sweeps give M_D = 100", ok,
           f"M_D values {sorted(set(indices))}, slowest series {worst_time:.2f}s for 1e5 points")


def test_02_missing_keypoint_recovery(report):
    rng = np.random.default_rng(2024)
    eps = 0.05
    errors = []
    while len(errors) < 1000:
        tri = random_triangle(rng, eps)
        if tri is None:
            continue
        p1, p2, p3, p4, X = tri
        rec = recover_missing(p1, p2, p3, p4, eps)
        errors.append(math.dist(rec.point, X) if rec.kind == INSERT else math.inf)
    hits = sum(e < 1e-9 for e in errors)
    report(2, "hidden apex rebuilt within 1e-9", hits == 1000,
           f"{hits}/1000 trials, max error {max(errors):.2e}")


def test_03_endpoint_stability(report):
    scores = []
    for seed in range(3):
        ts = synth_pts(SynthConfig(n_periods=300, dropout_rate=0.1, seed=seed)).series
        scores.append(endpoint_stability(ts, EPSILON, LAMBDA, deletion_step=60, levels=10).S)
    report(3, "S >= 99 over 10 prefix-deletion levels", min(scores) >= 99,
           "S per series " + ", ".join(f"{s:.4f}" for s in scores))


def test_04_silhouette_oracle(report):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(3, 201))
        k = int(rng.integers(2, 7))
        d = int(rng.integers(1, 5))
        X = rng.normal(size=(n, d)) * rng.uniform(0.1, 100)
        if rng.random() < 0.3:
            X = np.round(X)  # duplicates
        labels = rng.integers(0, k, size=n)
        labels[: min(k, n)] = np.arange(min(k, n))
        worst = max(worst, float(np.max(np.abs(silhouette_values(X, labels) - brute_silhouette(X, labels)))))
    report(4, "silhouettes match the double-loop oracle to 1e-12", worst <= 1e-12,
           f"200 instances, max abs difference {worst:.1e}")


def test_05_period_cluster_selection(report):
    runs, exact, msils = 20, 0, []
    for seed in range(runs):
        res = synth_pts(SynthConfig(n_periods=100, dropout_rate=0.1, anomaly_rate=0.1, seed=seed))
        cts = pipeline_cts(res)
        cl, sel = sweep_k(feature_vectors(cts), amplitudes=cts.v[1:-1], seed=seed)
        if sel.found:
            msils.append(float(cl.per_cluster_msil[sel.chosen_cluster]))
            exact += cts.t[sel.period_point_indices].tolist() == res.boundaries
        else:
            msils.append(-1.0)
    ok = exact / runs >= 0.95 and min(msils) > 0.8
    report(5, "selected cluster equals true period boundaries", ok,
           f"{exact}/{runs} exact, lowest selected msil {min(msils):.4f}")


def test_06_fv_versus_angle(report):
    runs, wins, gaps = 50, 0, []
    for seed in range(runs):
        res = synth_pts(SynthConfig(n_periods=100, dropout_rate=0.1, peak_jitter=0.2, seed=seed))
        cts = pipeline_cts(res)
        fv, _ = sweep_k(feature_vectors(cts), amplitudes=cts.v[1:-1], seed=seed)
        an, _ = angle_baseline(cts, seed=seed)
        wins += fv.overall_msil >= an.overall_msil
        gaps.append(fv.overall_msil - an.overall_msil)
    report(6, "FV overall msil >= angle overall msil on noisy peaks", wins >= 0.9 * runs,
           f"{wins}/{runs} runs, mean gap {np.mean(gaps):+.4f}")


def test_07_end_to_end_classification(report):
    results = []
    for seed in range(3):
        res = synth_pts(SynthConfig(n_periods=500, dropout_rate=0.1, anomaly_rate=0.1, seed=seed))
        cts = pipeline_cts(res)
        _, sel = sweep_k(feature_vectors(cts), amplitudes=cts.v[1:-1], seed=seed)
        ds = Dataset.from_periods(segment_and_annotate(cts, sel.period_point_indices, res.labels))
        for name in ("forest", "gnb"):
            m = kfold_cv(ds, 10, name, seed=seed).pooled
            results.append((name, m.acc, m.sen))
    ok = all(acc > 0.9 and sen > 0.85 for _, acc, sen in results)
    worst_acc = min(r[1] for r in results)
    worst_sen = min(r[2] for r in results)
    report(7, "10-fold forest and GNB reach acc > 0.90, sen > 0.85", ok,
           f"worst acc {worst_acc:.4f}, worst sen {worst_sen:.4f} over 3 series")


def test_08_metrics_exactness(report):
    rng = np.random.default_rng(8)
    mismatches = 0
    for _ in range(1000):
        tp, tn, fp, fn = (int(x) for x in rng.integers(0, 10**6, size=4) * (rng.random(4) < 0.8))
        if tp + tn + fp + fn == 0:
            tn = 1
        m = compute_metrics(ConfusionCounts(tp, tn, fp, fn))
        exact = rational_metrics(tp, tn, fp, fn)
        mismatches += any(getattr(m, k) != float(v) for k, v in exact.items())
    report(8, "metrics equal the rational oracle exactly", mismatches == 0,
           f"{1000 - mismatches}/1000 confusion tables")


def test_09_cli_determinism(report, tmp_path):
    work = tmp_path / "out"
    commands = [
        ["synth", "--n-periods", "80", "--dropout-rate", "0.2", "--seed", "9"],
        ["keypoints"],
        ["compress"],
        ["segment", "--seed", "9"],
        ["classify", "--seed", "9", "--n-trees", "30"],
        ["sweep", "--param", "epsilon"],
        ["sweep", "--param", "lambda"],
        ["stability", "--deletion-step", "60", "--levels", "5"],
        ["run", "--seed", "9", "--n-trees", "30", "--workers", "3"],
        ["run", "--seed", "9", "--baseline", "angle", "--classifier", "gnb"],
    ]

    def snapshot():
        return {p.name: p.read_bytes() for p in work.iterdir()}

    first = None
    for attempt in range(2):
        if work.exists():
            shutil.rmtree(work)
        for cmd in commands:
            assert cli_main(cmd + ["--out-dir", str(work)]) == 0, cmd
        snap = snapshot()
        if first is None:
            first = snap
    differing = sorted(k for k in first.keys() | snap.keys() if first.get(k) != snap.get(k))
    report(9, "repeated CLI runs give byte-identical artifacts", not differing,
           f"{len(first)} files compared" + (f", differing: {differing}" if differing else ""))


def test_10_dp_error_bound(report):
    rng = np.random.default_rng(10)
    worst_excess = -math.inf
    for _ in range(1000):
        n = int(rng.integers(2, 120))
        t = np.cumsum(rng.uniform(0.1, 5, size=n))
        v = np.cumsum(rng.normal(0, rng.uniform(0.1, 20), size=n))
        lam = float(rng.choice([0.0, rng.uniform(0, 1), rng.uniform(0, 50)]))
        cts = dp_compress(TimeSeries(t, v), lam)
        kept = set(cts.index.tolist())
        for i in range(n):
            if i not in kept:
                worst_excess = max(worst_excess, polyline_distance((t[i], v[i]), cts.t, cts.v) - lam)
    ok = worst_excess <= 1e-9
    report(10, "every dropped point lies within lambda of the output", ok,
           f"1000 series, max (distance - lambda) {worst_excess:.2e}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
