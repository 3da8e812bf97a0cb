"""Key-point detection and recovery of missing key-points.

A point is a key-point when the series turns by more than ``epsilon``
radians there, measured from the most recent key-point. When a sharp corner
was never sampled, its two neighbours both turn by a noticeable amount; the
missing corner is rebuilt as the apex of the triangle whose base is the
segment between those neighbours and whose base angles are their turning
angles (law of sines, solved as a two-circle intersection).

All geometry runs on ``(t * t_scale, v * v_scale)``; angles depend on the
aspect ratio, so the scale is explicit rather than guessed.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._io import atomic_write_text, fmt_num
from .errors import ContractError, DegenerateTriangleError, GeometryError, ParseError
from .series import TimeSeries, _check_increasing, _read_rows

OBSERVED = "observed"
RECOVERED = "recovered"

DEGENERATE_SIN = 1e-12


@dataclass(frozen=True, eq=False)
class KeyPointSeries:
    t: np.ndarray
    v: np.ndarray
    recovered: np.ndarray  # bool mask, True where the point was inferred
    epsilon: float

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.v, dtype=float)
        rec = np.asarray(self.recovered, dtype=bool)
        if not (t.shape == v.shape == rec.shape):
            raise ContractError("t, v and recovered must have the same length")
        _check_increasing(t, "key-points")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "recovered", rec)

    def __len__(self):
        return self.t.size

    @property
    def n_recovered(self):
        return int(self.recovered.sum())

    def to_series(self):
        return TimeSeries(self.t, self.v)


def _signed_turn(ax, ay, bx, by, cx, cy):
    ux, uy = bx - ax, by - ay
    wx, wy = cx - bx, cy - by
    return math.atan2(ux * wy - uy * wx, ux * wx + uy * wy)


def _scaled(p, scale):
    return float(p[0]) * scale[0], float(p[1]) * scale[1]


def turning_angle(prev, mid, nxt, scale=(1.0, 1.0)):
    """Turning angle at ``mid`` in radians: pi minus the interior angle, in ``[0, pi]``.

    >>> round(turning_angle((0, 0), (1, 1), (2, 2)), 12)
    0.0
    """
    a, b, c = (_scaled(p, scale) for p in (prev, mid, nxt))
    if a == b or b == c:
        raise GeometryError(f"coincident points in angle computation: {prev}, {mid}, {nxt}")
    if not (a[0] < b[0] < c[0]):
        raise ContractError("turning_angle requires strictly increasing t")
    return abs(_signed_turn(*a, *b, *c))


def detect_keypoints(ts, epsilon, scale=(1.0, 1.0)):
    """Key-points of ``ts`` without any recovery.

    Scans left to right anchored on the last accepted key-point: sample
    ``i`` is kept when the turn from the anchor through ``i`` to sample
    ``i + 1`` exceeds ``epsilon``. Both endpoints are always kept.
    """
    if len(ts) < 2:
        raise ContractError("detect_keypoints needs at least 2 points")
    if epsilon <= 0:
        raise ContractError("epsilon must be positive")
    x = (ts.t * scale[0]).tolist()
    y = (ts.v * scale[1]).tolist()
    keep = [0]
    a = 0
    for i in range(1, len(x) - 1):
        if abs(_signed_turn(x[a], y[a], x[i], y[i], x[i + 1], y[i + 1])) > epsilon:
            keep.append(i)
            a = i
    keep.append(len(x) - 1)
    idx = np.array(keep)
    return KeyPointSeries(ts.t[idx], ts.v[idx], np.zeros(idx.size, dtype=bool), epsilon)


# --------------------------------------------------------------------------
# missing key-point recovery

KEEP_P2 = "KeepP2"
KEEP_P3 = "KeepP3"
KEEP_BOTH = "KeepBoth"
KEEP_BOTH_NO_INSERT = "KeepBothNoInsert"
INSERT = "Insert"
NEITHER = "Neither"


@dataclass(frozen=True)
class Recovery:
    kind: str
    point: tuple = None  # (t, v) for INSERT


def _circle_intersections(c1, r1, c2, r2):
    dx, dy = c2[0] - c1[0], c2[1] - c1[1]
    d = math.hypot(dx, dy)
    a = (r1 * r1 - r2 * r2 + d * d) / (2 * d)
    h2 = r1 * r1 - a * a
    tol = 1e-12 * max(r1, r2) ** 2
    if h2 < -tol:
        return []
    mx, my = c1[0] + a * dx / d, c1[1] + a * dy / d
    if h2 <= tol:
        return [(mx, my)]
    h = math.sqrt(h2)
    ox, oy = -dy * h / d, dx * h / d
    return [(mx + ox, my + oy), (mx - ox, my - oy)]


def _line_distance(p, a, b):
    dx, dy = b[0] - a[0], b[1] - a[1]
    return abs(dx * (p[1] - a[1]) - dy * (p[0] - a[0])) / math.hypot(dx, dy)


def _recover_scaled(p1, p2, p3, p4, epsilon):
    s2 = _signed_turn(*p1, *p2, *p3)
    s3 = _signed_turn(*p2, *p3, *p4)
    a2, a3 = abs(s2), abs(s3)
    if a2 <= epsilon:
        return Recovery(KEEP_P3) if a3 > epsilon else Recovery(NEITHER)
    if a3 <= epsilon:
        return Recovery(KEEP_P2)
    total = a2 + a3
    sin_apex = math.sin(math.pi - total)
    if abs(sin_apex) < DEGENERATE_SIN:
        raise DegenerateTriangleError(f"turning angles sum to pi within tolerance ({a2!r} + {a3!r})")
    if total > math.pi:
        return Recovery(KEEP_BOTH_NO_INSERT)
    # a hidden corner turns the same way as both of its neighbours
    if (s2 > 0) != (s3 > 0):
        return Recovery(KEEP_BOTH)
    q = math.hypot(p3[0] - p2[0], p3[1] - p2[1]) / sin_apex
    sols = _circle_intersections(p2, q * math.sin(a3), p3, q * math.sin(a2))
    sols = [s for s in sols if p2[0] < s[0] < p3[0]]
    if not sols:
        return Recovery(KEEP_BOTH)
    best = min(sols, key=lambda s: _line_distance(s, p1, p2))
    return Recovery(INSERT, best)


def recover_missing(p1, p2, p3, p4, epsilon, scale=(1.0, 1.0)):
    """Decide which of ``p2``/``p3`` are key-points, or rebuild a missing one.

    ``p1`` and ``p4`` are established key-points. Returns a :class:`Recovery`
    whose ``kind`` is one of ``KeepP2``, ``KeepP3``, ``Neither`` (neither
    turns by more than ``epsilon``), ``Insert`` (with the rebuilt point),
    ``KeepBoth`` (both turn sharply but no apex fits strictly between them)
    or ``KeepBothNoInsert`` (the turns add up to more than pi).

    Raises:
        DegenerateTriangleError: the two turns sum to pi, so the apex is at
            infinity.
    """
    pts = [(float(p[0]), float(p[1])) for p in (p1, p2, p3, p4)]
    if not all(pts[i][0] < pts[i + 1][0] for i in range(3)):
        raise ContractError("recover_missing requires strictly increasing t")
    scaled = [(p[0] * scale[0], p[1] * scale[1]) for p in pts]
    rec = _recover_scaled(*scaled, epsilon)
    if rec.kind == INSERT:
        x, y = rec.point
        return Recovery(INSERT, (x / scale[0], y / scale[1]))
    return rec


def correct_series(ts, epsilon, scale=(1.0, 1.0)):
    """Key-point series of ``ts`` with missing corners rebuilt.

    Single left-to-right pass over windows ``(anchor, i, i + 1, i + 2)``
    where the anchor is the last confirmed key-point. A rebuilt corner
    replaces both window samples and becomes the new anchor. Runs of
    several missing corners collapse into one rebuilt point.
    """
    n = len(ts)
    if n < 4:
        raise ContractError(f"correct_series needs at least 4 points, got {n}")
    if epsilon <= 0:
        raise ContractError("epsilon must be positive")
    sx, sy = float(scale[0]), float(scale[1])
    x = (ts.t * sx).tolist()
    y = (ts.v * sy).tolist()
    # observed key-points are kept by source index so they come back bit-exact
    src = [0]
    rebuilt = {}
    ax, ay = x[0], y[0]
    i = 1
    while i <= n - 2:
        if i == n - 2:
            if abs(_signed_turn(ax, ay, x[i], y[i], x[i + 1], y[i + 1])) > epsilon:
                src.append(i)
            break
        try:
            d = _recover_scaled((ax, ay), (x[i], y[i]), (x[i + 1], y[i + 1]), (x[i + 2], y[i + 2]), epsilon)
        except DegenerateTriangleError:
            d = Recovery(KEEP_BOTH)
        if d.kind == INSERT:
            ax, ay = d.point
            rebuilt[len(src)] = (ax / sx, ay / sy)
            src.append(-1)
            i += 2
        elif d.kind in (KEEP_P2, KEEP_BOTH, KEEP_BOTH_NO_INSERT):
            ax, ay = x[i], y[i]
            src.append(i)
            i += 1
        else:
            i += 1
    src.append(n - 1)
    src = np.array(src)
    rec = src < 0
    t = ts.t[np.where(rec, 0, src)].copy()
    v = ts.v[np.where(rec, 0, src)].copy()
    for j, (tj, vj) in rebuilt.items():
        t[j], v[j] = tj, vj
    return KeyPointSeries(t, v, rec, epsilon)


def repair_series(ts, kps):
    """``ts`` with every recovered key-point of ``kps`` merged back in as a sample."""
    t = np.concatenate([ts.t, kps.t[kps.recovered]])
    v = np.concatenate([ts.v, kps.v[kps.recovered]])
    order = np.argsort(t, kind="stable")
    return TimeSeries(t[order], v[order])


def save_keypoints(kps, path):
    lines = ["t,v,origin"]
    for t, v, r in zip(kps.t, kps.v, kps.recovered):
        lines.append(f"{fmt_num(t)},{fmt_num(v)},{RECOVERED if r else OBSERVED}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_keypoints(path, epsilon=float("nan")):
    ts, vs, rec = [], [], []
    for lineno, (t, v, origin) in _read_rows(path, ("t", "v", "origin")):
        try:
            ts.append(float(t))
            vs.append(float(v))
        except ValueError:
            raise ParseError(f"not a number in {t!r},{v!r}", line=lineno) from None
        if origin not in (OBSERVED, RECOVERED):
            raise ParseError(f"unknown origin {origin!r}", line=lineno)
        rec.append(origin == RECOVERED)
    return KeyPointSeries(np.array(ts), np.array(vs), np.array(rec, dtype=bool), epsilon)
