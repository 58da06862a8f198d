"""Regularized linear models on feature vectors, with one-versus-all classification.

Squared loss throughout: ridge (p=2) solves the normal equations in closed
form, lasso (p=1) runs coordinate descent to a small duality gap.  Objective
convention: sum of squared residuals plus lambda * sum |w|^p, intercept
unpenalized.  Features are standardized with train-split statistics before
fitting, since scattering orders live on very different scales.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionError, RegularizationRequiredError, SplitError

__all__ = [
    "Dataset",
    "LinearModel",
    "OvaResult",
    "fit",
    "predict",
    "classify_ova",
    "split_indices",
    "write_features_csv",
    "read_features_csv",
    "LAMBDA_GRID",
]

LABEL_COLUMN = "__label__"
LAMBDA_GRID = tuple(10.0**e for e in range(-4, 3))


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with labels and a seeded train/test split."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple = ()
    provenance: str = "raw"
    train_idx: np.ndarray = field(default=None)
    test_idx: np.ndarray = field(default=None)
    split_seed: int = 0

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2 or len(y) != X.shape[0]:
            raise DimensionError("features must be 2D with one label per row")
        if np.isnan(X).all(axis=1).any():
            raise DimensionError("dataset contains an all-NaN row")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if self.train_idx is None:
            tr, te = split_indices(len(y), len(y), 0, self.split_seed)
            object.__setattr__(self, "train_idx", tr)
            object.__setattr__(self, "test_idx", te)

    def train(self):
        return self.features[self.train_idx], self.labels[self.train_idx]

    def test(self):
        return self.features[self.test_idx], self.labels[self.test_idx]


def split_indices(total: int, n_train: int, n_test: int, seed: int):
    """Disjoint seeded permutation split."""
    if n_train + n_test > total:
        raise SplitError(f"{n_train}+{n_test} rows requested from {total}")
    perm = np.random.default_rng(seed).permutation(total)
    return perm[:n_train], perm[n_train : n_train + n_test]


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def from_data(cls, X: np.ndarray) -> "Standardizer":
        std = X.std(axis=0)
        return cls(mean=X.mean(axis=0), std=np.where(std > 1e-12, std, 1.0))

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


@dataclass(frozen=True)
class LinearModel:
    """Weights in standardized feature space, one column per output."""

    weights: np.ndarray          # (n_features, n_outputs)
    intercepts: np.ndarray       # (n_outputs,)
    penalty_exponent: int        # p in {1, 2}
    strength: float              # lambda
    standardizer: Standardizer
    objective: float
    classes: tuple = ()          # class ids for OVA models, empty for regression


def _ridge_solve(X, y, lam):
    n, d = X.shape
    gram = X.T @ X + lam * np.eye(d)
    rhs = X.T @ y
    if lam == 0.0:
        if np.linalg.matrix_rank(gram) < d:
            raise RegularizationRequiredError(
                "design matrix is singular; fit requires lambda > 0"
            )
    try:
        return np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise RegularizationRequiredError(str(exc)) from exc


def _lasso_cd(X, y, lam, tol=1e-6, max_iter=10000):
    """Coordinate descent on sum (y - Xw)^2 + lam * |w|_1 to duality gap tol.

    Equivalent to the standard 1/2||r||^2 + (lam/2)|w|_1 formulation; the gap
    is evaluated for the objective as written and normalized by max(1, f(w)).
    """
    n, d = X.shape
    w = np.zeros(d)
    col2 = (X**2).sum(axis=0)
    r = y.copy()
    alpha = lam / 2.0  # soft threshold of the equivalent (1/2)||r||^2 problem
    for _ in range(max_iter):
        for k in range(d):
            if col2[k] == 0.0:
                continue
            old = w[k]
            rho_k = X[:, k] @ r + col2[k] * old
            new = np.sign(rho_k) * max(abs(rho_k) - alpha, 0.0) / col2[k]
            if new != old:
                r += X[:, k] * (old - new)
                w[k] = new
        primal = r @ r + lam * np.abs(w).sum()
        # feasible dual point: residual scaled until |X^T v| <= alpha
        xtr = X.T @ r
        scale = min(1.0, alpha / max(np.abs(xtr).max(), 1e-300))
        v = scale * r
        dual = (y @ y) - ((y - v) @ (y - v))
        if primal - dual <= tol * max(1.0, primal):
            break
    return w


def fit(X: np.ndarray, y: np.ndarray, penalty_exponent: int = 2, strength: float = 1e-3,
        standardizer: Standardizer | None = None) -> LinearModel:
    """Fit one linear model (regression targets or +-1 class scores)."""
    if strength < 0:
        raise ValueError("lambda must be >= 0")
    if penalty_exponent not in (1, 2):
        raise ValueError("penalty exponent p must be 1 or 2")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if standardizer is None:
        standardizer = Standardizer.from_data(X)
    Xs = standardizer.apply(X)
    targets = y if y.ndim == 2 else y[:, None]
    intercepts = targets.mean(axis=0)
    centered = targets - intercepts
    cols = []
    for c in range(centered.shape[1]):
        if penalty_exponent == 2:
            cols.append(_ridge_solve(Xs, centered[:, c], strength))
        else:
            cols.append(_lasso_cd(Xs, centered[:, c], strength))
    W = np.stack(cols, axis=1)
    resid = centered - Xs @ W
    objective = float((resid**2).sum() + strength * (np.abs(W) ** penalty_exponent).sum())
    return LinearModel(
        weights=W,
        intercepts=intercepts,
        penalty_exponent=penalty_exponent,
        strength=strength,
        standardizer=standardizer,
        objective=objective,
    )


def predict(model: LinearModel, X: np.ndarray) -> np.ndarray:
    scores = model.standardizer.apply(np.asarray(X, dtype=np.float64)) @ model.weights
    return scores + model.intercepts


@dataclass(frozen=True)
class OvaResult:
    model: LinearModel
    train_accuracy: float
    test_accuracy: float
    strength: float

    def predict_classes(self, X: np.ndarray) -> np.ndarray:
        scores = predict(self.model, X)
        return np.asarray(self.model.classes)[np.argmax(scores, axis=1)]


def _accuracy(model: LinearModel, X, y) -> float:
    scores = predict(model, X)
    pred = np.asarray(model.classes)[np.argmax(scores, axis=1)]
    return float(np.mean(pred == y))


def classify_ova(dataset: Dataset, penalty_exponent: int = 2, strength="auto",
                 holdout_fraction: float = 0.2) -> OvaResult:
    """One-versus-all linear classification with seeded lambda selection.

    Each class gets a +-1 target column; prediction takes the max score.
    strength="auto" picks the best lambda on a held-out slice of the train
    split over LAMBDA_GRID (seeded, deterministic).
    """
    X_train, y_train = dataset.train()
    X_test, y_test = dataset.test()
    classes = tuple(sorted(np.unique(dataset.labels).tolist()))
    if len(classes) < 2:
        raise SplitError("need at least two classes")
    missing = set(classes) - set(np.unique(y_train).tolist())
    if missing:
        raise SplitError(f"classes absent from train split: {sorted(missing)}")

    def targets_for(y):
        return np.stack([np.where(y == c, 1.0, -1.0) for c in classes], axis=1)

    if strength == "auto":
        n_hold = max(1, int(holdout_fraction * len(y_train)))
        inner, hold = split_indices(len(y_train), len(y_train) - n_hold, n_hold, dataset.split_seed + 1)
        best = (None, -1.0)
        for lam in LAMBDA_GRID:
            m = replace(fit(X_train[inner], targets_for(y_train[inner]), penalty_exponent, lam),
                        classes=classes)
            acc = _accuracy(m, X_train[hold], y_train[hold])
            if acc > best[1]:
                best = (lam, acc)
        strength = best[0]

    model = replace(fit(X_train, targets_for(y_train), penalty_exponent, float(strength)),
                    classes=classes)
    return OvaResult(
        model=model,
        train_accuracy=_accuracy(model, X_train, y_train),
        test_accuracy=_accuracy(model, X_test, y_test),
        strength=float(strength),
    )


# ---------------------------------------------------------------------------
# Feature CSV: header of path labels (plus __label__), one row per sample.
# ---------------------------------------------------------------------------


def write_features_csv(path, features: np.ndarray, feature_names, labels=None) -> None:
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    names = list(feature_names)
    if len(names) != features.shape[1]:
        raise DimensionError(f"{len(names)} names for {features.shape[1]} columns")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = names + ([LABEL_COLUMN] if labels is not None else [])
        writer.writerow(header)
        for i, row in enumerate(features):
            out = [f"{v:.17g}" for v in row]
            if labels is not None:
                out.append(str(labels[i]))
            writer.writerow(out)


def read_features_csv(path):
    """Returns (features, feature_names, labels-or-None)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        has_labels = header and header[-1] == LABEL_COLUMN
        names = header[:-1] if has_labels else header
        rows, labels = [], []
        for row in reader:
            if not row:
                continue
            if has_labels:
                rows.append([float(v) for v in row[:-1]])
                labels.append(row[-1])
            else:
                rows.append([float(v) for v in row])
    feats = np.asarray(rows, dtype=np.float64)
    lab = None
    if has_labels:
        try:
            lab = np.asarray([int(v) for v in labels])
        except ValueError:
            lab = np.asarray(labels)
    return feats, tuple(names), lab
