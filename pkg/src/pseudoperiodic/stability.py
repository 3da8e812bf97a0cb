"""Parameter-stability indices and baseline period detectors.

The monotonicity index measures how consistently the number of breakpoints
falls (or rises) along a parameter sweep; endpoint stability measures how
far breakpoints move when growing prefixes of the series are deleted. The
two baselines segment a series from turning angles alone or from valleys
under an adaptive upper bound.
"""

import bisect
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import DEFAULT_ETA, DEFAULT_RESTARTS, DEFAULT_XI, sweep_k
from .compress import dp_compress
from .errors import ContractError
from .keypoints import _signed_turn, correct_series

log = logging.getLogger(__name__)

DECREASING = "decreasing"
INCREASING = "increasing"


@dataclass(frozen=True)
class SweepResult:
    values: tuple
    counts: tuple

    def __post_init__(self):
        if len(self.values) != len(self.counts):
            raise ContractError("values and counts differ in length")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ContractError("sweep values must be strictly increasing")


def breakpoint_count(ts, epsilon, lam=None, scale=(1.0, 1.0)):
    """Interior points left after key-point correction, and after compression when ``lam`` is given.

    The first and last samples are always kept and are not counted.
    """
    kps = correct_series(ts, epsilon, scale)
    if lam is not None:
        kps = dp_compress(kps, lam, scale)
    return len(kps) - 2


def sweep_epsilon(ts, values, scale=(1.0, 1.0)):
    values = tuple(float(x) for x in values)
    return SweepResult(values, tuple(breakpoint_count(ts, e, scale=scale) for e in values))


def sweep_lambda(ts, values, epsilon=1.0, scale=(1.0, 1.0)):
    """Compression sweep on one fixed key-point series."""
    values = tuple(float(x) for x in values)
    kps = correct_series(ts, epsilon, scale)
    return SweepResult(values, tuple(len(dp_compress(kps, lam, scale)) - 2 for lam in values))


def monotonicity_index(counts, direction=DECREASING):
    """Decreasing (or increasing) monotonicity index on a 0-100 scale.

    Each step contributes its count change relative to the mean of the two
    counts; the index is one minus the ratio of wrong-way to right-way
    contributions. A flat sequence scores 100. A sequence with more
    wrong-way than right-way change scores below 0 and is logged, not
    clamped.
    """
    if isinstance(counts, SweepResult):
        counts = counts.counts
    c = [float(x) for x in counts]
    if len(c) < 2:
        raise ContractError("monotonicity needs at least 2 counts")
    t_minus = t_plus = 0.0
    for prev, cur in zip(c, c[1:]):
        dv = cur - prev
        if dv == 0:
            continue
        h = (cur + prev) / 2
        if dv < 0:
            t_minus -= dv / h
        else:
            t_plus += dv / h
    good, bad = (t_minus, t_plus) if direction == DECREASING else (t_plus, t_minus)
    if bad == 0:
        return 100.0
    if good == 0:
        log.warning("monotonicity index undefined: every step goes the wrong way")
        return -math.inf
    value = (1 - bad / good) * 100
    if value < 0:
        log.warning("monotonicity index %.4f is below 0", value)
    return value


# --------------------------------------------------------------------------
# endpoint stability


@dataclass(frozen=True)
class StabilityRun:
    deletion_step: int
    levels: int
    shift_sums: tuple  # per evaluated level
    lengths: tuple  # remaining series length per evaluated level
    counts: tuple  # breakpoints per evaluated level
    skipped: tuple = ()
    S: float = 100.0
    per_level: tuple = field(default_factory=tuple)  # each level's term of the average


def stability_score(shift_sums, counts, lengths):
    """``100 * (1 - mean_d(shift_sum_d / (n_d * l_d)))``."""
    if not shift_sums:
        raise ContractError("no evaluated levels")
    terms = [s / (n * l) for s, n, l in zip(shift_sums, counts, lengths)]
    return 100.0 * (1.0 - sum(terms) / len(terms)), tuple(terms)


def _breakpoints(ts, epsilon, lam, scale):
    cts = dp_compress(correct_series(ts, epsilon, scale), lam, scale)
    return cts.t[1:-1].tolist()  # the two ends are artefacts of where the series was cut


def match_shifts(recomputed, reference, penalty):
    """Greedy one-to-one matching in time order; returns the summed time shifts.

    Each recomputed breakpoint takes the nearest reference breakpoint not
    earlier than the previous match. Breakpoints left without a partner
    cost ``penalty`` each.
    """
    total = 0.0
    j = 0
    for b in recomputed:
        if j >= len(reference):
            total += penalty
            continue
        pos = bisect.bisect_left(reference, b, lo=j)
        cands = [i for i in (pos - 1, pos) if j <= i < len(reference)]
        best = min(cands, key=lambda i: (abs(reference[i] - b), i))
        total += abs(reference[best] - b)
        j = best + 1
    return total


def endpoint_stability(ts, epsilon=1.0, lam=10.0, deletion_step=100, levels=10, scale=(1.0, 1.0)):
    """Breakpoint stability under repeated deletion of ``deletion_step`` leading samples."""
    if levels < 1:
        raise ContractError("levels must be at least 1")
    if deletion_step < 0 or deletion_step * levels >= len(ts):
        raise ContractError("deletion_step * levels must be smaller than the series length")
    ref = _breakpoints(ts, epsilon, lam, scale)
    shifts, lengths, counts, skipped = [], [], [], []
    for d in range(1, levels + 1):
        cut = ts.drop_prefix(d * deletion_step)
        bps = _breakpoints(cut, epsilon, lam, scale) if len(cut) >= 4 else []
        if len(bps) < 2:
            log.warning("level %d skipped: fewer than 2 breakpoints", d)
            skipped.append(d)
            continue
        n, length = len(bps), len(cut)
        start = bisect.bisect_left(ref, float(cut.t[0]))
        shifts.append(match_shifts(bps, ref[start:], penalty=length / n))
        lengths.append(length)
        counts.append(n)
    if not shifts:
        raise ContractError("every deletion level was skipped")
    S, terms = stability_score(shifts, counts, lengths)
    return StabilityRun(
        deletion_step, len(shifts), tuple(shifts), tuple(lengths), tuple(counts), tuple(skipped), S, terms
    )


# --------------------------------------------------------------------------
# baseline period detectors


def turning_angles(cts):
    """Turning angle of every interior point against its compressed neighbours."""
    t, v = cts.t.tolist(), cts.v.tolist()
    return np.array([abs(_signed_turn(t[i - 1], v[i - 1], t[i], v[i], t[i + 1], v[i + 1])) for i in range(1, len(t) - 1)])


def angle_baseline(
    cts, k_range=range(2, 9), eta=DEFAULT_ETA, xi=DEFAULT_XI, seed=0, restarts=DEFAULT_RESTARTS
):
    """Period points from clustering the scalar turning angles of the interior points.

    Returns ``(clustering, selection)`` exactly like :func:`sweep_k`.
    """
    if len(cts) < 3:
        raise ContractError("angle baseline needs at least 3 points")
    angles = turning_angles(cts)
    return sweep_k(angles, k_range, eta, xi, seed=seed, restarts=restarts, amplitudes=cts.v[1:-1])


DEFAULT_U0 = 50.0
DEFAULT_ALPHA = 1.1


def valley_baseline(ts, u0=DEFAULT_U0, alpha=DEFAULT_ALPHA):
    """Indices of valley points under an adaptive upper bound.

    A local minimum is accepted when it lies below the current bound; the
    bound then becomes ``alpha`` times the mean of all accepted valleys.
    For a negative mean that would tighten the bound instead of relaxing
    it, so the margin is taken on the magnitude: ``m + (alpha - 1) * |m|``.
    """
    v = np.asarray(ts.v, dtype=float)
    if u0 <= v.min():
        log.warning("no point lies below the initial bound %s", u0)
        return np.zeros(0, dtype=int)
    bound = float(u0)
    total = 0.0
    out = []
    for i in range(1, v.size - 1):
        if v[i] < v[i - 1] and v[i] <= v[i + 1] and v[i] < bound:
            out.append(i)
            total += v[i]
            m = total / len(out)
            bound = m + (alpha - 1) * abs(m)
    return np.array(out, dtype=int)
