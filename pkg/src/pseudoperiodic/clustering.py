"""Period-point discovery: feature vectors, k-means++ clustering and silhouette validation.

Every interior point of a compressed series gets a four-value vector of
amplitude and time deltas to its neighbours. The vectors are clustered with
k-means++ seeding followed by Lloyd iterations; silhouettes score each
cluster, and the tightest cluster above the quality thresholds supplies the
period points.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ParameterError, UndefinedSilhouetteError

log = logging.getLogger(__name__)

FEATURE_NAMES = ("vdiff1", "vdiff2", "tdiff1", "tdiff2")

DEFAULT_ETA = 0.4
DEFAULT_XI = 0.8
DEFAULT_RESTARTS = 8
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 300
TIE_TOL = 1e-12


def feature_vectors(cts):
    """``(n - 2, 4)`` array of ``(vdiff1, vdiff2, tdiff1, tdiff2)`` for interior points.

    Row ``j`` belongs to point ``j + 1`` of ``cts``.
    """
    if len(cts) < 3:
        raise ContractError("feature vectors need at least 3 points")
    dv = np.diff(cts.v)
    dt = np.diff(cts.t)
    return np.column_stack([dv[:-1], dv[1:], dt[:-1], dt[1:]])


def _as_2d(vectors):
    X = np.asarray(vectors, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X


def _n_distinct(X):
    return np.unique(X, axis=0).shape[0]


def kmeanspp_indices(vectors, k, rng, first=None):
    """Row indices picked by k-means++ seeding.

    The first index is uniform (or ``first`` if given); each later one is
    drawn with probability proportional to the squared distance to the
    nearest index already chosen.
    """
    X = _as_2d(vectors)
    n = X.shape[0]
    if k < 1:
        raise ParameterError("k must be at least 1")
    if k > _n_distinct(X):
        raise ParameterError(f"k={k} exceeds the number of distinct vectors ({_n_distinct(X)})")
    chosen = [int(rng.integers(n)) if first is None else int(first)]
    d2 = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        p = d2 / d2.sum()
        nxt = int(rng.choice(n, p=p))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return np.array(chosen)


def kmeanspp_seed(vectors, k, rng):
    """``k`` initial centres by k-means++ seeding."""
    X = _as_2d(vectors)
    return X[kmeanspp_indices(X, k, rng)].copy()


@dataclass(frozen=True, eq=False)
class Clustering:
    k: int
    assignments: np.ndarray
    centers: np.ndarray
    objective: float
    history: list  # objective after every assignment step
    per_point_sil: np.ndarray = None
    per_cluster_msil: np.ndarray = None
    overall_msil: float = None

    def members(self, c):
        return np.flatnonzero(self.assignments == c)


def _assign(X, centers):
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(X.shape[0]), labels]


def _repair_empty(X, labels, d2, centers):
    k = centers.shape[0]
    while True:
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return
        movable = counts[labels] > 1
        cand = np.where(movable, d2, -1.0)
        far = int(np.argmax(cand))
        j = int(empty[0])
        centers[j] = X[far]
        labels[far] = j
        d2[far] = 0.0


def _lloyd(X, centers, max_iter, tol):
    centers = centers.copy()
    k = centers.shape[0]
    history = []
    for _ in range(max_iter):
        labels, d2 = _assign(X, centers)
        _repair_empty(X, labels, d2, centers)
        history.append(float(d2.sum()))
        new = np.zeros_like(centers)
        np.add.at(new, labels, X)
        new /= np.bincount(labels, minlength=k)[:, None]
        shift = float(np.sqrt(((new - centers) ** 2).sum(axis=1)).max())
        centers = new
        if shift < tol:
            break
    labels, d2 = _assign(X, centers)
    _repair_empty(X, labels, d2, centers)
    history.append(float(d2.sum()))
    return labels, centers, history


def kmeans_cluster(vectors, k, rng, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL, sil_points=None):
    """k-means++ seeding then Lloyd iterations, with silhouettes when ``k >= 2``.

    ``sil_points`` optionally supplies different coordinates (one row per
    vector) for the silhouette computation.
    """
    X = _as_2d(vectors)
    seeds = kmeanspp_seed(X, k, rng)
    labels, centers, history = _lloyd(X, seeds, max_iter, tol)
    return _finish(X, k, labels, centers, history, sil_points)


def _finish(X, k, labels, centers, history, sil_points=None, with_sil=True):
    if k < 2 or not with_sil:
        return Clustering(k, labels, centers, history[-1], history)
    P = X if sil_points is None else _as_2d(sil_points)
    sil = silhouette_values(P, labels)
    msil = np.array([sil[labels == c].mean() for c in range(k)])
    return Clustering(k, labels, centers, history[-1], history, sil, msil, float(sil.mean()))


# --------------------------------------------------------------------------
# silhouettes


def _cluster_distance_sums(X, labels, rows, weights, k):
    onehot = np.zeros((X.shape[0], k))
    onehot[np.arange(X.shape[0]), labels] = weights
    step = max(1, int(4_000_000 // max(1, X.shape[0] * X.shape[1])))
    out = np.empty((rows.size, k))
    for s in range(0, rows.size, step):
        r = rows[s : s + step]
        D = np.sqrt(((X[r, None, :] - X[None, :, :]) ** 2).sum(axis=2))
        out[s : s + step] = D @ onehot
    return out


def silhouette_values(vectors, assignments):
    """Silhouette of every point under Euclidean distance.

    ``a`` is the mean distance to the other members of the own cluster,
    ``b`` the smallest mean distance to the members of another cluster.
    Points in singleton clusters score 0. Identical rows are collapsed
    before the pairwise pass, which only changes summation order.
    """
    X = _as_2d(vectors)
    labels = np.asarray(assignments, dtype=int)
    ids, labels = np.unique(labels, return_inverse=True)
    k = ids.size
    if k < 2:
        raise UndefinedSilhouetteError("silhouettes need at least 2 clusters")
    keyed = np.column_stack([X, labels])
    uniq, inverse, counts = np.unique(keyed, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    U, ulab = uniq[:, :-1], uniq[:, -1].astype(int)
    sums = _cluster_distance_sums(U, ulab, np.arange(U.shape[0]), counts.astype(float), k)
    sizes = np.bincount(labels, minlength=k).astype(float)
    own = sizes[ulab]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = sums[np.arange(U.shape[0]), ulab] / (own - 1)
        other = sums / sizes[None, :]
    other[np.arange(U.shape[0]), ulab] = np.inf
    b = other.min(axis=1)
    den = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(den > 0, (b - a) / den, 0.0)
    s[own == 1] = 0.0
    return s[inverse]


def silhouette(i, assignments, vectors):
    """Silhouette of point ``i`` alone."""
    X = _as_2d(vectors)
    labels = np.asarray(assignments, dtype=int)
    ids = np.unique(labels)
    if ids.size < 2:
        raise UndefinedSilhouetteError("silhouettes need at least 2 clusters")
    own = labels == labels[i]
    if own.sum() == 1:
        return 0.0
    d = np.sqrt(((X - X[i]) ** 2).sum(axis=1))
    a = d[own].sum() / (own.sum() - 1)
    b = min(d[labels == c].mean() for c in ids if c != labels[i])
    den = max(a, b)
    return float((b - a) / den) if den > 0 else 0.0


# --------------------------------------------------------------------------
# period cluster selection


@dataclass(frozen=True, eq=False)
class PeriodSelection:
    chosen_cluster: int = None
    period_point_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    eta: float = DEFAULT_ETA
    xi: float = DEFAULT_XI

    @property
    def found(self):
        return self.chosen_cluster is not None


def select_period_cluster(clustering, eta=DEFAULT_ETA, xi=DEFAULT_XI, positions=None, amplitudes=None):
    """Pick the period cluster of a clustering, or none.

    Rejects the whole clustering when its mean silhouette is below ``eta``;
    otherwise takes the cluster with the highest mean silhouette, provided
    it exceeds ``xi``. Clusters tied on that maximum are separated by the
    higher mean of ``amplitudes`` and then by the earliest member, so the
    result never depends on cluster numbering.

    ``positions`` maps vector rows to series indices (default ``row + 1``,
    the interior points of a compressed series).
    """
    if clustering.overall_msil is None:
        return PeriodSelection(eta=eta, xi=xi)
    n = clustering.assignments.size
    pos = np.arange(1, n + 1) if positions is None else np.asarray(positions, dtype=int)
    if clustering.overall_msil < eta:
        return PeriodSelection(eta=eta, xi=xi)
    msil = clustering.per_cluster_msil
    top = float(msil.max())
    tied = [c for c in range(clustering.k) if msil[c] >= top - TIE_TOL]

    def rank(c):
        m = clustering.members(c)
        amp = float(np.mean(amplitudes[m])) if amplitudes is not None else 0.0
        return (-amp, int(pos[m].min()))

    best = min(tied, key=rank)
    if not msil[best] > xi:
        return PeriodSelection(eta=eta, xi=xi)
    idx = np.sort(pos[clustering.members(best)])
    return PeriodSelection(best, idx, eta, xi)


def _task_rng(seed, k, restart):
    return np.random.default_rng([int(seed), int(k), int(restart)])


def _best_of_restarts(X, k, seed, restarts, max_iter, tol, sil_points):
    best = None
    for r in range(restarts):
        seeds = kmeanspp_seed(X, k, _task_rng(seed, k, r))
        labels, centers, history = _lloyd(X, seeds, max_iter, tol)
        if best is None or history[-1] < best[2][-1]:
            best = (labels, centers, history)
    labels, centers, history = best
    return _finish(X, k, labels, centers, history, sil_points)


def sweep_k(
    vectors,
    k_range=range(2, 9),
    eta=DEFAULT_ETA,
    xi=DEFAULT_XI,
    seed=0,
    restarts=DEFAULT_RESTARTS,
    positions=None,
    amplitudes=None,
    sil_points=None,
    max_iter=DEFAULT_MAX_ITER,
    tol=DEFAULT_TOL,
    workers=1,
):
    """Cluster for every ``k`` and keep the best qualifying result.

    Each ``k`` keeps the lowest-objective of ``restarts`` seeded runs, the
    seed of each run being derived from ``(seed, k, restart)``. Among the
    values of ``k`` whose clustering yields a period cluster, the one with
    the highest overall mean silhouette wins (smaller ``k`` on ties).

    Returns ``(clustering, selection)``. When no ``k`` qualifies the
    selection is empty and the clustering is the one with the highest mean
    silhouette, or ``None`` if no ``k`` was feasible.
    """
    X = _as_2d(vectors)
    n = X.shape[0]
    distinct = _n_distinct(X) if n else 0
    ks = [k for k in k_range if 2 <= k <= min(n - 1, distinct)]
    if not ks:
        return None, PeriodSelection(eta=eta, xi=xi)

    def run(k):
        return _best_of_restarts(X, k, seed, restarts, max_iter, tol, sil_points)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, ks))
    else:
        results = [run(k) for k in ks]

    best, best_sel, fallback = None, None, None
    for cl in results:
        sel = select_period_cluster(cl, eta, xi, positions=positions, amplitudes=amplitudes)
        log.debug("k=%d overall msil=%.4f selected=%s", cl.k, cl.overall_msil, sel.chosen_cluster)
        if fallback is None or cl.overall_msil > fallback.overall_msil:
            fallback = cl
        if sel.found and (best is None or cl.overall_msil > best.overall_msil):
            best, best_sel = cl, sel
    if best is None:
        return fallback, PeriodSelection(eta=eta, xi=xi)
    return best, best_sel
