"""Gaussian Bayes classification, ROC sweeps, subset search, KNN baseline.

Features are standardized by the training mean and deviation, then each
class gets a full-covariance Gaussian density with a small ridge; the
classifier takes the largest log posterior. ROC curves come from adding
a scalar offset to the positive class's log posterior and sweeping it
over every distinct sample margin.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import DEFECTIVE, KNOT, NON_DEFECTIVE, NON_KNOT, Sample
from .errors import DataError, NumericalError

ELONGATED_DEFECT = "elongated_defect"
RIDGE_REL = 1e-6
_RIDGE_ABS = 1e-12

LEVEL_CLASSES = {
    1: (DEFECTIVE, NON_DEFECTIVE),
    2: (KNOT, NON_KNOT),
    3: ("dry_knot", "sound_knot"),
}


@dataclass
class BayesModel:
    """Per-class Gaussian densities over standardized features."""

    classes: tuple[str, ...]
    features: tuple[str, ...]
    priors: np.ndarray
    means: np.ndarray          # (k, d), standardized space
    covariances: np.ndarray    # (k, d, d), ridge included
    scale_mean: np.ndarray     # (d,)
    scale_std: np.ndarray      # (d,)
    meta: dict = field(default_factory=dict)
    _inverses: np.ndarray | None = field(default=None, repr=False)
    _log_dets: np.ndarray | None = field(default=None, repr=False)

    def _ensure_factors(self):
        if self._inverses is None:
            inverses = []
            log_dets = []
            for cov in self.covariances:
                sign, logdet = np.linalg.slogdet(cov)
                if sign <= 0:
                    raise NumericalError("covariance not positive definite")
                inverses.append(np.linalg.inv(cov))
                log_dets.append(logdet)
            self._inverses = np.array(inverses)
            self._log_dets = np.array(log_dets)

    def vector(self, fv: dict) -> np.ndarray | None:
        """Feature vector in model order, or None if anything is missing."""
        try:
            return np.array([fv[name] for name in self.features], dtype=np.float64)
        except KeyError:
            return None

    def log_posteriors(self, X: np.ndarray) -> np.ndarray:
        """Unnormalized log posterior per class, shape (n, k)."""
        self._ensure_factors()
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Z = (X - self.scale_mean) / self.scale_std
        d = len(self.features)
        out = np.empty((len(Z), len(self.classes)))
        for ci in range(len(self.classes)):
            diff = Z - self.means[ci]
            quad = np.einsum("ni,ij,nj->n", diff, self._inverses[ci], diff)
            out[:, ci] = (
                math.log(self.priors[ci])
                - 0.5 * (quad + self._log_dets[ci] + d * math.log(2.0 * math.pi))
            )
        return out


def fit_gaussian_bayes(
    X: np.ndarray,
    y,
    feature_names,
    classes=None,
    ridge_rel: float = RIDGE_REL,
    meta: dict | None = None,
) -> BayesModel:
    """Fit class priors, means, and ridged full covariances.

    Requires at least d + 2 samples per class. The ridge is
    ridge_rel * trace/d (with a tiny absolute floor so zero-variance
    degenerate data still yields a usable model).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (n, d) aligned with y")
    classes = tuple(classes) if classes is not None else tuple(sorted(set(y)))
    d = X.shape[1]
    scale_mean = X.mean(axis=0)
    scale_std = X.std(axis=0)
    scale_std = np.where(scale_std > 0, scale_std, 1.0)
    Z = (X - scale_mean) / scale_std
    priors, means, covs = [], [], []
    for cls in classes:
        rows = Z[y == cls]
        if len(rows) == 0:
            raise DataError(f"class {cls!r} absent from training data")
        if len(rows) < d + 2:
            raise DataError(
                f"class {cls!r} has {len(rows)} samples; need at least {d + 2} for {d} features"
            )
        cov = np.cov(rows, rowvar=False, bias=True).reshape(d, d)
        ridge = max(ridge_rel * np.trace(cov) / d, _RIDGE_ABS)
        covs.append(cov + ridge * np.eye(d))
        means.append(rows.mean(axis=0))
        priors.append(len(rows) / len(X))
    model = BayesModel(
        classes=classes,
        features=tuple(feature_names),
        priors=np.array(priors),
        means=np.array(means),
        covariances=np.array(covs),
        scale_mean=scale_mean,
        scale_std=scale_std,
        meta=meta or {},
    )
    model._ensure_factors()  # validate positive definiteness now
    return model


def classify(model: BayesModel, x) -> tuple[str, float]:
    """Label with the largest log posterior, and the top-two margin."""
    if isinstance(x, dict):
        vec = model.vector(x)
        if vec is None:
            raise ValueError("feature vector is missing model features")
        x = vec
    post = model.log_posteriors(np.atleast_2d(x))[0]
    order = np.argsort(post, kind="stable")[::-1]
    margin = float(post[order[0]] - post[order[1]]) if len(post) > 1 else math.inf
    # argmax with first-in-class-order tie-break
    best = int(np.argmax(post))
    return model.classes[best], margin


def classify_batch(model: BayesModel, X: np.ndarray) -> list[str]:
    post = model.log_posteriors(X)
    return [model.classes[i] for i in np.argmax(post, axis=1)]


@dataclass(frozen=True)
class ROCCurve:
    """Operating points (P_f, P_d) along the boundary-shift sweep."""

    offsets: np.ndarray
    pf: np.ndarray
    pd: np.ndarray

    def auc(self) -> float:
        return float(np.trapz(self.pd, self.pf))


def binary_scores(model: BayesModel, X: np.ndarray, positive: str) -> np.ndarray:
    """Log-posterior margin of the positive class over the other class."""
    if len(model.classes) != 2:
        raise ValueError("binary_scores needs a two-class model")
    pos = model.classes.index(positive)
    post = model.log_posteriors(X)
    return post[:, pos] - post[:, 1 - pos]


def roc_curve(model: BayesModel, X: np.ndarray, y, positive: str) -> ROCCurve:
    """Sweep a boundary offset over all distinct margins (plus +/-inf).

    A sample is called positive when margin + offset > 0; P_d and P_f are
    the positive rates over the true-positive and true-negative samples.
    """
    y = np.asarray(y)
    is_pos = y == positive
    if not is_pos.any() or is_pos.all():
        raise DataError("roc_curve needs test samples from both classes")
    scores = binary_scores(model, X, positive)
    offsets = np.concatenate(
        [[-np.inf], np.sort(np.unique(-scores)), [np.inf]]
    )
    pf = np.empty(len(offsets))
    pd = np.empty(len(offsets))
    pos_scores = scores[is_pos]
    neg_scores = scores[~is_pos]
    for i, offset in enumerate(offsets):
        pd[i] = np.mean(pos_scores > -offset)
        pf[i] = np.mean(neg_scores > -offset)
    return ROCCurve(offsets=offsets, pf=pf, pd=pd)


# --- feature-subset search ---------------------------------------------------


@dataclass
class SubsetSearchResult:
    subset: tuple[str, ...]
    weighted: float
    macro: float
    evaluated: int
    ranking: list[tuple[tuple[str, ...], float, float]]


def _accuracy_scores(actual, predicted) -> tuple[float, float]:
    actual = np.asarray(actual)
    predicted = np.asarray(predicted)
    weighted = float(np.mean(predicted == actual))
    per_class = [
        float(np.mean(predicted[actual == cls] == cls)) for cls in np.unique(actual)
    ]
    return weighted, float(np.mean(per_class))


def subset_search(
    train: list[Sample],
    validate: list[Sample],
    pool,
    label_of,
    max_size: int = 5,
    default_label: str | None = None,
) -> SubsetSearchResult:
    """Exhaustively score every feature subset of size 1..max_size.

    Samples missing a subset feature are dropped from training; at
    validation they are assigned default_label when given, otherwise
    excluded. Subsets are ranked by weighted (class-size weighted)
    accuracy; ties prefer smaller subsets, then lexicographic order.
    Macro accuracy is reported alongside.
    """
    pool = sorted(pool)
    if not pool:
        raise ValueError("empty feature pool")
    train_labels = np.array([label_of(s) for s in train])
    val_labels = np.array([label_of(s) for s in validate])
    train_cols = {
        f: np.array([s.features.get(f, np.nan) for s in train]) for f in pool
    }
    val_cols = {
        f: np.array([s.features.get(f, np.nan) for s in validate]) for f in pool
    }
    classes = tuple(sorted(set(train_labels)))
    ranking = []
    evaluated = 0
    for size in range(1, max_size + 1):
        for subset in itertools.combinations(pool, size):
            evaluated += 1
            Xtr = np.column_stack([train_cols[f] for f in subset])
            ok = np.isfinite(Xtr).all(axis=1)
            Xtr, ytr = Xtr[ok], train_labels[ok]
            if any(np.sum(ytr == c) < size + 2 for c in classes):
                continue
            try:
                model = fit_gaussian_bayes(Xtr, ytr, subset, classes=classes)
            except (DataError, NumericalError):
                continue
            Xv = np.column_stack([val_cols[f] for f in subset])
            have = np.isfinite(Xv).all(axis=1)
            predicted = np.empty(len(validate), dtype=object)
            if have.any():
                predicted[have] = classify_batch(model, Xv[have])
            if default_label is not None:
                predicted[~have] = default_label
                included = np.ones(len(validate), dtype=bool)
            else:
                included = have
            if not included.any():
                continue
            weighted, macro = _accuracy_scores(
                val_labels[included], predicted[included]
            )
            ranking.append((subset, weighted, macro))
    if not ranking:
        raise DataError("no feasible feature subset (too few training samples?)")
    ranking.sort(key=lambda item: (-item[1], len(item[0]), item[0]))
    best = ranking[0]
    return SubsetSearchResult(
        subset=best[0],
        weighted=best[1],
        macro=best[2],
        evaluated=evaluated,
        ranking=ranking,
    )


# --- KNN baseline ------------------------------------------------------------


@dataclass
class KnnModel:
    """Nearest-neighbor reference classifier over standardized features."""

    features: tuple[str, ...]
    k: int
    points: np.ndarray
    labels: np.ndarray
    scale_mean: np.ndarray
    scale_std: np.ndarray


def fit_knn(X: np.ndarray, y, feature_names, k: int = 5) -> KnnModel:
    X = np.asarray(X, dtype=np.float64)
    if len(X) == 0:
        raise DataError("KNN needs a nonempty training set")
    scale_mean = X.mean(axis=0)
    scale_std = X.std(axis=0)
    scale_std = np.where(scale_std > 0, scale_std, 1.0)
    return KnnModel(
        features=tuple(feature_names),
        k=k,
        points=(X - scale_mean) / scale_std,
        labels=np.asarray(y),
        scale_mean=scale_mean,
        scale_std=scale_std,
    )


def classify_knn(model: KnnModel, x) -> str:
    """Majority vote of the k nearest neighbors; vote ties fall to the
    single nearest neighbor's label."""
    x = np.asarray(x, dtype=np.float64)
    z = (x - model.scale_mean) / model.scale_std
    d2 = ((model.points - z) ** 2).sum(axis=1)
    order = np.argsort(d2, kind="stable")[: model.k]
    votes = Counter(model.labels[i] for i in order)
    top = votes.most_common()
    if len(top) > 1 and top[0][1] == top[1][1]:
        return model.labels[order[0]]
    return top[0][0]


# --- hierarchy ----------------------------------------------------------------


@dataclass
class HierarchyModel:
    """Level models: defect detection, knotness, and knot dryness."""

    level1: BayesModel
    level2: BayesModel | None = None
    level3: BayesModel | None = None


def hierarchical_classify(h: HierarchyModel, fv: dict) -> str:
    """Run the levels in order with short-circuiting.

    A window missing a level-1 feature is non-defective (no support
    region is evidence of clean surface). Missing features at later
    levels fall to that level's majority outcome: non-knot at level 2,
    dry at level 3.
    """
    vec = h.level1.vector(fv)
    if vec is None:
        return NON_DEFECTIVE
    label, _ = classify(h.level1, vec)
    if label == NON_DEFECTIVE:
        return NON_DEFECTIVE
    if h.level2 is None:
        return DEFECTIVE
    vec = h.level2.vector(fv)
    if vec is None:
        return ELONGATED_DEFECT
    label, _ = classify(h.level2, vec)
    if label == NON_KNOT:
        return ELONGATED_DEFECT
    if h.level3 is None:
        return KNOT
    vec = h.level3.vector(fv)
    if vec is None:
        return "dry_knot"
    label, _ = classify(h.level3, vec)
    return label


# --- serialization -------------------------------------------------------------

_FORMAT = "grainspect-bayes-model"
_VERSION = 1


def save_model(model: BayesModel, path) -> None:
    doc = {
        "format": _FORMAT,
        "version": _VERSION,
        "classes": list(model.classes),
        "features": list(model.features),
        "priors": model.priors.tolist(),
        "means": model.means.tolist(),
        "covariances": model.covariances.tolist(),
        "scale_mean": model.scale_mean.tolist(),
        "scale_std": model.scale_std.tolist(),
        "meta": model.meta,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_model(path) -> BayesModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"unreadable model file: {path}: {exc}") from exc
    if doc.get("format") != _FORMAT:
        raise DataError(f"{path}: not a grainspect model file")
    if doc.get("version") != _VERSION:
        raise DataError(f"{path}: unsupported model version {doc.get('version')}")
    return BayesModel(
        classes=tuple(doc["classes"]),
        features=tuple(doc["features"]),
        priors=np.array(doc["priors"]),
        means=np.array(doc["means"]),
        covariances=np.array(doc["covariances"]),
        scale_mean=np.array(doc["scale_mean"]),
        scale_std=np.array(doc["scale_std"]),
        meta=doc.get("meta", {}),
    )
