"""Supervised period classification and cross-validated evaluation.

Labels are encoded as integers with ``1 = Ab`` (the positive class) and
``0 = N``. Every classifier breaks exact ties towards ``N``.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ContractError, TrainingError
from .segment import SUMMARY_FIELDS
from .series import ABNORMAL, NORMAL

log = logging.getLogger(__name__)

CLASSIFIERS = ("gnb", "lda", "tree", "forest")


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray  # 1 = Ab, 0 = N

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=int)
        if X.ndim != 2 or X.shape[0] != y.size:
            raise ContractError("X must be (n, d) with one label per row")
        if not np.all(np.isin(y, (0, 1))):
            raise ContractError("labels must be 0 (N) or 1 (Ab)")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.y.size

    @classmethod
    def from_periods(cls, rows):
        X = np.array([r.summary.as_array() for r in rows]).reshape(-1, len(SUMMARY_FIELDS))
        y = np.array([1 if r.label == ABNORMAL else 0 for r in rows], dtype=int)
        return cls(X, y)


def label_name(code):
    return ABNORMAL if code == 1 else NORMAL


def _require_classes(y, minimum):
    counts = np.bincount(y, minlength=2)
    if counts.min() == 0:
        raise TrainingError("training set contains a single class")
    if counts.min() < minimum:
        raise TrainingError(f"each class needs at least {minimum} training samples, got {counts.tolist()}")


class _Standardizer:
    def fit(self, X):
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > 0, std, 1.0)
        return self

    def transform(self, X):
        return (X - self.mean_) / self.scale_


class GaussianNB:
    """Gaussian naive Bayes with a per-feature variance floor."""

    def __init__(self, standardize=True, var_floor=1e-9):
        self.standardize = standardize
        self.var_floor = var_floor

    def fit(self, X, y):
        X, y = np.asarray(X, dtype=float), np.asarray(y, dtype=int)
        _require_classes(y, 2)
        self.scaler_ = _Standardizer().fit(X) if self.standardize else None
        Z = self.scaler_.transform(X) if self.scaler_ else X
        floor = self.var_floor * (Z.var(axis=0) + 1e-12)
        self.log_prior_ = np.log(np.bincount(y, minlength=2) / y.size)
        self.mean_ = np.array([Z[y == c].mean(axis=0) for c in (0, 1)])
        self.var_ = np.array([Z[y == c].var(axis=0) for c in (0, 1)]) + floor
        return self

    def log_posterior(self, X):
        Z = np.asarray(X, dtype=float)
        Z = self.scaler_.transform(Z) if self.scaler_ else Z
        ll = -0.5 * (
            np.log(2 * np.pi * self.var_)[None, :, :]
            + (Z[:, None, :] - self.mean_[None, :, :]) ** 2 / self.var_[None, :, :]
        ).sum(axis=2)
        return ll + self.log_prior_[None, :]

    def predict(self, X):
        lp = self.log_posterior(np.atleast_2d(X))
        return (lp[:, 1] > lp[:, 0]).astype(int)


class LDA:
    """Two-class linear discriminant with a ridge on the pooled covariance."""

    def __init__(self, standardize=True, ridge=1e-6):
        self.standardize = standardize
        self.ridge = ridge

    def fit(self, X, y):
        X, y = np.asarray(X, dtype=float), np.asarray(y, dtype=int)
        _require_classes(y, 1)
        self.scaler_ = _Standardizer().fit(X) if self.standardize else None
        Z = self.scaler_.transform(X) if self.scaler_ else X
        mu = np.array([Z[y == c].mean(axis=0) for c in (0, 1)])
        resid = Z - mu[y]
        dof = max(y.size - 2, 1)
        S = resid.T @ resid / dof
        d = S.shape[0]
        S = S + self.ridge * np.trace(S) / d * np.eye(d)
        if np.linalg.cond(S) > 1e14:
            raise TrainingError("pooled covariance is singular even after regularisation")
        w = np.linalg.solve(S, mu[1] - mu[0])
        prior = np.bincount(y, minlength=2) / y.size
        self.w_ = w
        self.b_ = -0.5 * (mu[1] + mu[0]) @ w + math.log(prior[1] / prior[0])
        return self

    @property
    def coef_(self):
        """Discriminant direction in the original feature units."""
        return self.w_ / self.scaler_.scale_ if self.scaler_ else self.w_

    def decision_function(self, X):
        Z = np.atleast_2d(np.asarray(X, dtype=float))
        Z = self.scaler_.transform(Z) if self.scaler_ else Z
        return Z @ self.w_ + self.b_

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(int)


def _best_split(X, y, features, min_leaf):
    """Lowest weighted Gini split over ``features``; ties keep the first found."""
    n = y.size
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        pos = np.cumsum(ys)[:-1]
        n_left = np.arange(1, n)
        valid = xs[1:] > xs[:-1]
        valid &= (n_left >= min_leaf) & (n - n_left >= min_leaf)
        if not valid.any():
            continue
        n_right = n - n_left
        pos_r = ys.sum() - pos
        impurity = (2.0 * pos * (n_left - pos) / n_left + 2.0 * pos_r * (n_right - pos_r) / n_right) / n
        impurity = np.where(valid, impurity, np.inf)
        j = int(np.argmin(impurity))
        if best is None or impurity[j] < best[0]:
            best = (impurity[j], f, 0.5 * (xs[j] + xs[j + 1]))
    return best


class DecisionTree:
    """CART tree with Gini impurity and axis-aligned thresholds."""

    def __init__(self, max_depth=None, min_samples_split=2, min_samples_leaf=1, max_features=None, rng=None):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.rng = rng

    def fit(self, X, y):
        X, y = np.asarray(X, dtype=float), np.asarray(y, dtype=int)
        if y.size == 0:
            raise TrainingError("empty training set")
        d = X.shape[1]
        m = d if self.max_features is None else min(d, int(self.max_features))
        rng = self.rng if self.rng is not None else np.random.default_rng(0)
        self.feature_, self.threshold_, self.left_, self.right_, self.value_ = [], [], [], [], []

        def leaf(ys):
            self.feature_.append(-1)
            self.threshold_.append(0.0)
            self.left_.append(-1)
            self.right_.append(-1)
            pos = int(ys.sum())
            self.value_.append(1 if pos > ys.size - pos else 0)
            return len(self.feature_) - 1

        def grow(idx, depth):
            ys = y[idx]
            pos = int(ys.sum())
            if (
                pos in (0, ys.size)
                or ys.size < self.min_samples_split
                or (self.max_depth is not None and depth >= self.max_depth)
            ):
                return leaf(ys)
            feats = np.sort(rng.choice(d, size=m, replace=False)) if m < d else np.arange(d)
            split = _best_split(X[idx], ys, feats, self.min_samples_leaf)
            if split is None:
                return leaf(ys)
            _, f, thr = split
            node = leaf(ys)
            self.feature_[node], self.threshold_[node] = int(f), float(thr)
            go_left = X[idx, f] <= thr
            self.left_[node] = grow(idx[go_left], depth + 1)
            self.right_[node] = grow(idx[~go_left], depth + 1)
            return node

        grow(np.arange(y.size), 0)
        for name in ("feature_", "threshold_", "left_", "right_", "value_"):
            setattr(self, name, np.array(getattr(self, name)))
        return self

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(X.shape[0], dtype=int)
        while True:
            inner = self.feature_[node] >= 0
            if not inner.any():
                return self.value_[node]
            n = node[inner]
            go_left = X[inner, self.feature_[n]] <= self.threshold_[n]
            node[inner] = np.where(go_left, self.left_[n], self.right_[n])

    @property
    def depth(self):
        def walk(i):
            return 0 if self.feature_[i] < 0 else 1 + max(walk(self.left_[i]), walk(self.right_[i]))

        return walk(0)


class RandomForest:
    """Bagged CART trees voting by majority (ties go to N)."""

    def __init__(self, n_trees=100, max_features="sqrt", bootstrap=True, max_depth=None, rng=None):
        self.n_trees = n_trees
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.max_depth = max_depth
        self.rng = rng

    def fit(self, X, y):
        X, y = np.asarray(X, dtype=float), np.asarray(y, dtype=int)
        if y.size == 0:
            raise TrainingError("empty training set")
        d = X.shape[1]
        m = math.ceil(math.sqrt(d)) if self.max_features == "sqrt" else self.max_features
        rng = self.rng if self.rng is not None else np.random.default_rng(0)
        self.trees_ = []
        for _ in range(self.n_trees):
            idx = rng.integers(0, y.size, size=y.size) if self.bootstrap else np.arange(y.size)
            tree = DecisionTree(max_depth=self.max_depth, max_features=m, rng=rng)
            self.trees_.append(tree.fit(X[idx], y[idx]))
        return self

    def votes(self, X):
        return np.sum([t.predict(X) for t in self.trees_], axis=0)

    def predict(self, X):
        return (2 * self.votes(X) > len(self.trees_)).astype(int)


def make_classifier(name, rng=None, n_trees=100, standardize=True):
    if name == "gnb":
        return GaussianNB(standardize=standardize)
    if name == "lda":
        return LDA(standardize=standardize)
    if name == "tree":
        return DecisionTree(rng=rng)
    if name == "forest":
        return RandomForest(n_trees=n_trees, rng=rng)
    raise ContractError(f"unknown classifier {name!r}; expected one of {CLASSIFIERS}")


def train_gnb(train):
    return GaussianNB().fit(train.X, train.y)


def predict_gnb(model, features):
    return model.predict(features)


def train_lda(train):
    return LDA().fit(train.X, train.y)


def predict_lda(model, features):
    return model.predict(features)


def train_tree(train, rng=None, **params):
    return DecisionTree(rng=rng, **params).fit(train.X, train.y)


def train_forest(train, n_trees=100, rng=None, **params):
    return RandomForest(n_trees=n_trees, rng=rng, **params).fit(train.X, train.y)


# --------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ContractError("confusion counts must be non-negative")

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn

    @classmethod
    def from_predictions(cls, y_true, y_pred):
        t, p = np.asarray(y_true, dtype=int), np.asarray(y_pred, dtype=int)
        return cls(
            tp=int(np.sum((t == 1) & (p == 1))),
            tn=int(np.sum((t == 0) & (p == 0))),
            fp=int(np.sum((t == 0) & (p == 1))),
            fn=int(np.sum((t == 1) & (p == 0))),
        )

    def __add__(self, other):
        return ConfusionCounts(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class Metrics:
    acc: float
    sen: float
    spe: float
    pre: float  # prevalence of true positives: tp / total
    fmea: float


def _ratio(num, den):
    return num / den if den else 0.0


def compute_metrics(c):
    """Accuracy, sensitivity, specificity, prevalence and F-measure.

    Each value is a single integer division, so it is the correctly rounded
    float of the exact ratio. ``0/0`` yields 0.
    """
    if c.total <= 0:
        raise ContractError("no evaluated samples")
    return Metrics(
        acc=_ratio(c.tp + c.tn, c.total),
        sen=_ratio(c.tp, c.tp + c.fn),
        spe=_ratio(c.tn, c.fp + c.tn),
        pre=_ratio(c.tp, c.total),
        # 2PR/(P+R) with P = tp/(tp+fp) and R = tp/(tp+fn) reduces to this
        fmea=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
    )


# --------------------------------------------------------------------------
# cross-validation


def stratified_folds(y, k, rng):
    """Fold id per sample; class counts per fold differ by at most one."""
    y = np.asarray(y, dtype=int)
    fold = np.empty(y.size, dtype=int)
    start = 0
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        fold[idx] = (start + np.arange(idx.size)) % k
        start = (start + idx.size) % k
    return fold


@dataclass(frozen=True)
class CVResult:
    classifier: str
    k: int
    pooled: Metrics
    counts: ConfusionCounts
    folds: list
    skipped: list = field(default_factory=list)
    predictions: np.ndarray = None

    def to_dict(self):
        return {
            "classifier": self.classifier,
            "k": self.k,
            "pooled": asdict(self.pooled),
            "counts": asdict(self.counts),
            "folds": [
                {"fold": i, **asdict(m)} for i, m in self.folds
            ],
            "skipped": [{"fold": i, "reason": r} for i, r in self.skipped],
        }


def kfold_cv(ds, k=10, classifier="forest", seed=0, n_trees=100, standardize=True, workers=1):
    """Stratified k-fold cross-validation with pooled confusion counts.

    Each fold's model gets its own generator seeded from ``(seed, fold)``.
    Folds whose training split lacks a usable class are skipped and listed
    in ``skipped``.
    """
    if not 2 <= k <= len(ds):
        raise ContractError(f"k must lie in [2, {len(ds)}], got {k}")
    if classifier not in CLASSIFIERS:
        raise ContractError(f"unknown classifier {classifier!r}")
    fold = stratified_folds(ds.y, k, np.random.default_rng([int(seed), 0x5EED]))

    def run(f):
        test = fold == f
        model = make_classifier(
            classifier, rng=np.random.default_rng([int(seed), f]), n_trees=n_trees, standardize=standardize
        )
        try:
            model.fit(ds.X[~test], ds.y[~test])
        except TrainingError as exc:
            return f, None, str(exc)
        return f, model.predict(ds.X[test]), None

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            outcomes = list(pool.map(run, range(k)))
    else:
        outcomes = [run(f) for f in range(k)]

    pred = np.full(len(ds), -1)
    folds, skipped = [], []
    pooled = ConfusionCounts()
    for f, p, err in outcomes:
        if err is not None:
            log.warning("fold %d skipped: %s", f, err)
            skipped.append((f, err))
            continue
        test = fold == f
        pred[test] = p
        c = ConfusionCounts.from_predictions(ds.y[test], p)
        pooled = pooled + c
        folds.append((f, compute_metrics(c)))
    if pooled.total == 0:
        raise TrainingError("every fold was skipped")
    return CVResult(classifier, k, compute_metrics(pooled), pooled, folds, skipped, pred)
