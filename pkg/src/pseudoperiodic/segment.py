"""Split a compressed series into periods, summarise them and attach labels."""

from dataclasses import astuple, dataclass, fields

import numpy as np

from ._io import atomic_write_text, fmt_num
from .errors import ContractError, InsufficientPeriodsError, NoLabelsError, ParseError
from .series import ABNORMAL, LABELS, NORMAL, _read_rows


@dataclass(frozen=True, eq=False)
class Period:
    """Closed slice of a compressed series between two consecutive period points."""

    t: np.ndarray
    v: np.ndarray
    index: int

    def __post_init__(self):
        if len(self.t) < 2:
            raise ContractError("a period needs at least 2 points")

    @property
    def start(self):
        return float(self.t[0])

    @property
    def end(self):
        return float(self.t[-1])


@dataclass(frozen=True)
class PeriodSummary:
    h_min: float
    t_min: float
    h_max: float
    t_max: float
    h_mean: float
    p_minmax: float
    p_l: float

    def as_array(self):
        return np.array(astuple(self), dtype=float)


SUMMARY_FIELDS = tuple(f.name for f in fields(PeriodSummary))


def split_periods(cts, period_point_indices):
    """Periods between consecutive period points; partial ends are dropped."""
    idx = np.asarray(period_point_indices, dtype=int)
    if idx.size < 2:
        raise InsufficientPeriodsError(f"need at least 2 period points, got {idx.size}")
    if np.any(np.diff(idx) <= 0):
        raise ContractError("period point indices must be strictly increasing")
    if idx[0] < 0 or idx[-1] >= len(cts):
        raise ContractError("period point index out of range")
    return [
        Period(cts.t[a : b + 1], cts.v[a : b + 1], i) for i, (a, b) in enumerate(zip(idx[:-1], idx[1:]))
    ]


def summarize_period(pd):
    """Seven-value summary; ties on the extremes resolve to the earliest point."""
    i_min = int(np.argmin(pd.v))
    i_max = int(np.argmax(pd.v))
    t_min, t_max = float(pd.t[i_min]), float(pd.t[i_max])
    return PeriodSummary(
        h_min=float(pd.v[i_min]),
        t_min=t_min,
        h_max=float(pd.v[i_max]),
        t_max=t_max,
        h_mean=float(np.mean(pd.v)),
        p_minmax=abs(t_max - t_min),
        p_l=float(pd.t[-1] - pd.t[0]),
    )


def logical_multiply(labels):
    """``Ab`` if any label is ``Ab``, else ``N``."""
    labels = list(labels)
    if not labels:
        raise ContractError("logical_multiply needs at least one label")
    return ABNORMAL if ABNORMAL in labels else NORMAL


def annotate_period(pd, track):
    """Label of a period from point label events.

    Events inside the closed period span are combined with
    :func:`logical_multiply`. A period without events takes the state in
    force at its start, i.e. the latest earlier event, or failing that the
    first event after it.
    """
    if len(track) == 0:
        raise NoLabelsError("label track is empty")
    lo = int(np.searchsorted(track.t, pd.start, side="left"))
    hi = int(np.searchsorted(track.t, pd.end, side="right"))
    if hi > lo:
        return logical_multiply(track.labels[lo:hi])
    if lo > 0:
        return track.labels[lo - 1]
    return track.labels[hi]


@dataclass(frozen=True)
class AnnotatedPeriod:
    start: float
    end: float
    summary: PeriodSummary
    label: str


def segment_and_annotate(cts, period_point_indices, track):
    periods = split_periods(cts, period_point_indices)
    return [AnnotatedPeriod(p.start, p.end, summarize_period(p), annotate_period(p, track)) for p in periods]


PERIOD_HEADER = ("start", "end") + SUMMARY_FIELDS + ("label",)


def save_periods(rows, path):
    lines = [",".join(PERIOD_HEADER)]
    for r in rows:
        nums = (r.start, r.end) + astuple(r.summary)
        lines.append(",".join(fmt_num(x) for x in nums) + "," + r.label)
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_periods(path):
    rows = []
    for lineno, cells in _read_rows(path, PERIOD_HEADER):
        try:
            nums = [float(c) for c in cells[:-1]]
        except ValueError:
            raise ParseError("non-numeric period field", line=lineno) from None
        if cells[-1] not in LABELS:
            raise ParseError(f"unknown label {cells[-1]!r}", line=lineno)
        rows.append(AnnotatedPeriod(nums[0], nums[1], PeriodSummary(*nums[2:]), cells[-1]))
    return rows
