"""Time-series data model, CSV ingestion and a synthetic pseudo-periodic generator.

Time values are treated as a real-valued index. Every threshold downstream
(turning angle, compression tolerance, shifts) is expressed in the same
units as ``t`` and ``v``.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_text, fmt_num
from .errors import ContractError, OrderingError, ParseError, ValueRangeError

NORMAL = "N"
ABNORMAL = "Ab"
LABELS = (NORMAL, ABNORMAL)


def _check_increasing(t, what):
    if t.size > 1:
        bad = np.flatnonzero(np.diff(t) <= 0)
        if bad.size:
            i = int(bad[0]) + 1
            raise OrderingError(
                f"{what}: t must be strictly increasing (t[{i - 1}]={t[i - 1]!r}, t[{i}]={t[i]!r})"
            )


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Ordered ``(t, v)`` samples with strictly increasing, finite ``t``."""

    t: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        v = np.asarray(self.v, dtype=float).reshape(-1)
        if t.shape != v.shape:
            raise ContractError("t and v must have the same length")
        if t.size == 0:
            raise ContractError("a time series needs at least one point")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueRangeError("time series contains NaN or infinite values")
        _check_increasing(t, "series")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)

    def __len__(self):
        return self.t.size

    @property
    def points(self):
        return np.column_stack([self.t, self.v])

    def span(self):
        return float(self.t[0]), float(self.t[-1])

    def drop_prefix(self, n):
        """Series without its first ``n`` samples."""
        return TimeSeries(self.t[n:], self.v[n:])

    def equals(self, other):
        return np.array_equal(self.t, other.t) and np.array_equal(self.v, other.v)


@dataclass(frozen=True, eq=False)
class LabelTrack:
    """Point label events; each event states N or Ab from its time onwards."""

    t: np.ndarray
    labels: tuple

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        labels = tuple(self.labels)
        if t.size != len(labels):
            raise ContractError("t and labels must have the same length")
        if not np.all(np.isfinite(t)):
            raise ValueRangeError("label track contains NaN or infinite times")
        for lab in labels:
            if lab not in LABELS:
                raise ValueRangeError(f"unknown label {lab!r}; expected one of {LABELS}")
        _check_increasing(t, "labels")
        t.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.labels)

    def validate_against(self, ts):
        """Raise if any event falls outside the time span of ``ts``."""
        lo, hi = ts.span()
        outside = (self.t < lo) | (self.t > hi)
        if np.any(outside):
            i = int(np.flatnonzero(outside)[0])
            raise ContractError(f"label event at t={self.t[i]!r} outside series span [{lo}, {hi}]")


def _read_rows(path, header):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        if [c.strip() for c in first] != list(header):
            raise ParseError(f"expected header {','.join(header)!r}, got {','.join(first)!r}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
            yield lineno, [c.strip() for c in row]


def _parse_float(text, lineno):
    try:
        x = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line=lineno) from None
    if not math.isfinite(x):
        raise ValueRangeError(f"line {lineno}: non-finite value {text!r}")
    return x


def load_series(path):
    """Read a ``t,v`` CSV file. Rows must already be sorted by ``t``."""
    ts, vs = [], []
    for lineno, (t, v) in _read_rows(path, ("t", "v")):
        ts.append(_parse_float(t, lineno))
        vs.append(_parse_float(v, lineno))
        if len(ts) > 1 and ts[-1] <= ts[-2]:
            raise OrderingError(f"line {lineno}: t={t} does not increase over previous t={fmt_num(ts[-2])}")
    if not ts:
        raise ParseError("no data rows", line=2)
    return TimeSeries(np.array(ts), np.array(vs))


def series_to_csv(ts):
    lines = ["t,v"]
    lines += [f"{fmt_num(t)},{fmt_num(v)}" for t, v in zip(ts.t, ts.v)]
    return "\n".join(lines) + "\n"


def save_series(ts, path):
    atomic_write_text(path, series_to_csv(ts))


def load_labels(path):
    ts, labels = [], []
    for lineno, (t, lab) in _read_rows(path, ("t", "label")):
        ts.append(_parse_float(t, lineno))
        if lab not in LABELS:
            raise ValueRangeError(f"line {lineno}: unknown label {lab!r}")
        labels.append(lab)
        if len(ts) > 1 and ts[-1] <= ts[-2]:
            raise OrderingError(f"line {lineno}: t={t} does not increase over previous t={fmt_num(ts[-2])}")
    return LabelTrack(np.array(ts), tuple(labels))


def save_labels(track, path):
    lines = ["t,label"] + [f"{fmt_num(t)},{lab}" for t, lab in zip(track.t, track.labels)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def save_boundaries(times, path):
    atomic_write_text(path, "t\n" + "".join(f"{fmt_num(t)}\n" for t in times))


def load_boundaries(path):
    return [_parse_float(t, lineno) for lineno, (t,) in _read_rows(path, ("t",))]


# --------------------------------------------------------------------------
# synthetic generator


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic ECG-like generator.

    ``jitter`` bounds the difference between consecutive period lengths as a
    fraction of ``base_period_len``. ``peak_jitter`` perturbs peak sharpness:
    each beat's R and T amplitudes and the widths of the R flanks and the T
    wave are scaled by independent factors in ``[1 - peak_jitter, 1 + peak_jitter]``.
    ``dropout_rate`` is the per-beat probability of deleting the T-wave apex
    sample. ``offset`` shifts the whole signal vertically.
    """

    n_periods: int = 100
    base_period_len: int = 60
    amplitude: float = 100.0
    anomaly_rate: float = 0.1
    jitter: float = 0.05
    dropout_rate: float = 0.0
    seed: int = 0
    peak_jitter: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        for name in ("anomaly_rate", "jitter", "dropout_rate", "peak_jitter"):
            x = getattr(self, name)
            if not 0.0 <= x <= 1.0:
                raise ContractError(f"{name} must lie in [0, 1], got {x}")
        if self.n_periods < 2:
            raise ContractError("n_periods must be at least 2")
        if self.amplitude <= 0:
            raise ContractError("amplitude must be positive")
        f = 1 + self.peak_jitter
        tpl = _Template.for_base(self.base_period_len).widened(f, f, f)
        half = int(math.floor(self.jitter * self.base_period_len / 2))
        if self.base_period_len - half < tpl.min_len:
            raise ContractError(
                f"base_period_len={self.base_period_len} with jitter={self.jitter} leaves "
                f"periods shorter than the template minimum {tpl.min_len}"
            )


@dataclass(frozen=True)
class _Template:
    # offsets relative to the R peak, in samples
    rise: int
    fall: int
    j: int
    t_on: int
    t_half: int

    @classmethod
    def for_base(cls, b):
        def part(frac):
            return max(2, int(round(frac * b)))

        fall = part(0.05)
        j = fall + part(0.067)
        return cls(rise=part(0.05), fall=fall, j=j, t_on=j + part(0.133), t_half=part(0.133))

    def widened(self, rise_f=1.0, fall_f=1.0, t_f=1.0):
        """Same beat with the R flanks and T half-width scaled (at least 2 samples each)."""

        def w(x, f):
            return max(2, int(round(x * f)))

        fall = w(self.fall, fall_f)
        j = fall + (self.j - self.fall)
        return _Template(w(self.rise, rise_f), fall, j, j + (self.t_on - self.j), w(self.t_half, t_f))

    @property
    def t_peak(self):
        return self.t_on + self.t_half

    @property
    def t_off(self):
        return self.t_on + 2 * self.t_half

    @property
    def min_len(self):
        # T offset, at least two flat samples, then the next Q onset
        return self.t_off + 2 + self.rise


@dataclass(frozen=True, eq=False)
class SynthResult:
    """Output of :func:`synth_pts`; unpacks as ``(series, labels, boundaries)``."""

    series: TimeSeries
    labels: LabelTrack
    boundaries: list
    vertices: np.ndarray  # every template corner, before dropout
    dropped: np.ndarray  # (t, v) of deleted samples
    kinds: list = field(default_factory=list)  # per period: "N", "PAC" or "PVC"

    def __iter__(self):
        return iter((self.series, self.labels, self.boundaries))


PAC_FRACTION = 0.65
PVC_T_GAIN = -2.4  # inverted T wave, 2.4x the normal T amplitude


def synth_pts(cfg):
    """Generate a piecewise-linear ECG-like series with labelled periods.

    Each beat is flat - Q onset - R spike - S dip - return - T wave - flat.
    Period boundaries are the R peaks. Anomalous periods are either
    premature (PAC: length cut to 65% of the base) or carry an inverted,
    deeper T wave (PVC). Vertices sit on integer times and the signal is
    sampled at every integer, so each corner is an exact sample unless it
    was dropped.
    """
    rng = np.random.default_rng(cfg.seed)
    b = cfg.base_period_len
    tpl = _Template.for_base(b)
    half = int(math.floor(cfg.jitter * b / 2))
    n = cfg.n_periods
    A = float(cfg.amplitude)

    lengths = b + rng.integers(-half, half + 1, size=n)
    anomalous = rng.random(n) < cfg.anomaly_rate
    kind_draw = rng.random(n) < 0.5
    kinds = []
    pj = cfg.peak_jitter
    widest = tpl.widened(1 + pj, 1 + pj, 1 + pj)
    pac_len = max(int(round(PAC_FRACTION * b)), widest.min_len)
    for i in range(n):
        if not anomalous[i]:
            kinds.append(NORMAL)
        elif kind_draw[i]:
            kinds.append("PAC")
            lengths[i] = pac_len
        else:
            kinds.append("PVC")

    r_amp = A * (1 + pj * rng.uniform(-1, 1, size=n + 1))
    t_amp = 0.25 * A * (1 + pj * rng.uniform(-1, 1, size=n + 1))
    widths = 1 + pj * rng.uniform(-1, 1, size=(n + 1, 3))
    drop = rng.random(n + 1) < cfg.dropout_rate

    lead = max(widest.rise + 2, b // 2)
    peaks = lead + np.concatenate([[0], np.cumsum(lengths)])
    end = int(peaks[-1]) + widest.min_len

    verts = [(0.0, 0.0)]
    dropped_t = []
    for i, p in enumerate(peaks):
        p = int(p)
        beat = tpl.widened(*widths[i]) if pj > 0 else tpl
        t_wave = t_amp[i]
        if i < n and kinds[i] == "PVC":
            t_wave = PVC_T_GAIN * t_wave
        verts += [
            (p - beat.rise, 0.0),
            (p, r_amp[i]),
            (p + beat.fall, -0.3 * A),
            (p + beat.j, 0.0),
            (p + beat.t_on, 0.0),
            (p + beat.t_peak, t_wave),
            (p + beat.t_off, 0.0),
        ]
        if drop[i]:
            dropped_t.append(p + beat.t_peak)
    verts.append((float(end), 0.0))
    verts = np.array(verts, dtype=float)

    t = np.arange(end + 1, dtype=float)
    v = np.interp(t, verts[:, 0], verts[:, 1])
    keep = np.ones(t.size, dtype=bool)
    keep[np.array(dropped_t, dtype=int)] = False
    dropped = np.column_stack([t[~keep], v[~keep]])
    off = float(cfg.offset)
    series = TimeSeries(t[keep], v[keep] + off)

    label_t = peaks[:-1] + lengths // 2
    labels = LabelTrack(label_t.astype(float), tuple(NORMAL if k == NORMAL else ABNORMAL for k in kinds))
    verts[:, 1] += off
    dropped[:, 1] += off
    return SynthResult(
        series=series,
        labels=labels,
        boundaries=[float(p) for p in peaks],
        vertices=verts,
        dropped=dropped,
        kinds=kinds,
    )
