"""Douglas-Peucker compression of a key-point series."""

import math
from dataclasses import dataclass

import numpy as np

from ._io import atomic_write_text, fmt_num
from .errors import ContractError, GeometryError
from .keypoints import KeyPointSeries
from .series import TimeSeries, _check_increasing, _read_rows


@dataclass(frozen=True, eq=False)
class CompressedSeries:
    """Order-preserving subset of a key-point series.

    ``index`` holds the positions of the kept points in the input series.
    """

    t: np.ndarray
    v: np.ndarray
    index: np.ndarray
    lam: float

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.v, dtype=float)
        _check_increasing(t, "compressed series")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "index", np.asarray(self.index, dtype=int))

    def __len__(self):
        return self.t.size

    @property
    def points(self):
        return np.column_stack([self.t, self.v])

    def to_series(self):
        return TimeSeries(self.t, self.v)


def perpendicular_distance(p, a, b):
    """Distance from ``p`` to the infinite line through ``a`` and ``b``."""
    dx, dy = float(b[0]) - float(a[0]), float(b[1]) - float(a[1])
    norm = math.hypot(dx, dy)
    if norm == 0:
        raise GeometryError("line endpoints coincide")
    return abs(dx * (float(p[1]) - float(a[1])) - dy * (float(p[0]) - float(a[0]))) / norm


def segment_distances(x, y, ax, ay, bx, by):
    """Vectorised distance from points ``(x, y)`` to the closed segment ``ab``."""
    dx, dy = bx - ax, by - ay
    den = dx * dx + dy * dy
    u = np.clip(((x - ax) * dx + (y - ay) * dy) / den, 0.0, 1.0)
    return np.hypot(x - (ax + u * dx), y - (ay + u * dy))


# distances this far above lambda are rounding noise, relative to the coordinate magnitude
ROUNDOFF = 1e-12


def _dp_keep(x, y, lam):
    n = x.size
    lam = lam + ROUNDOFF * max(1.0, float(np.max(np.abs(x))), float(np.max(np.abs(y))))
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        d = segment_distances(x[lo + 1 : hi], y[lo + 1 : hi], x[lo], y[lo], x[hi], y[hi])
        j = int(np.argmax(d))  # first maximum: ties go to the smallest index
        if d[j] > lam:
            f = lo + 1 + j
            keep[f] = True
            stack.append((f, hi))
            stack.append((lo, f))
    return keep


def dp_compress(kps, lam, scale=(1.0, 1.0)):
    """Douglas-Peucker simplification with tolerance ``lam``.

    The farthest point from the chord is measured to the chord *segment*,
    so every dropped point ends up within ``lam`` of the output polyline.
    Accepts a :class:`KeyPointSeries` or a :class:`TimeSeries`.
    """
    if len(kps) < 2:
        raise ContractError("dp_compress needs at least 2 points")
    if lam < 0:
        raise ContractError("lambda must be non-negative")
    x = kps.t * float(scale[0])
    y = kps.v * float(scale[1])
    idx = np.flatnonzero(_dp_keep(x, y, float(lam)))
    return CompressedSeries(kps.t[idx], kps.v[idx], idx, float(lam))


def max_deviation(t, v, cts, scale=(1.0, 1.0)):
    """Largest distance from any input point to the compressed polyline.

    Each input point is measured against the output segment spanning its
    time index, which is the segment DP tested it against.
    """
    sx, sy = float(scale[0]), float(scale[1])
    seg = np.clip(np.searchsorted(cts.t, t, side="right") - 1, 0, len(cts) - 2)
    d = segment_distances(
        t * sx, v * sy, cts.t[seg] * sx, cts.v[seg] * sy, cts.t[seg + 1] * sx, cts.v[seg + 1] * sy
    )
    return float(d.max()) if d.size else 0.0


def save_cts(cts, path):
    lines = ["t,v"] + [f"{fmt_num(t)},{fmt_num(v)}" for t, v in zip(cts.t, cts.v)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_cts(path, lam=float("nan")):
    ts, vs = [], []
    for _, (t, v) in _read_rows(path, ("t", "v")):
        ts.append(float(t))
        vs.append(float(v))
    return CompressedSeries(np.array(ts), np.array(vs), np.arange(len(ts)), lam)
