"""Linear classifiers, metrics, cross-validation, and the paired statistics.

Training targets use the sign convention green = +1, flagged = -1. The
logistic trainer minimizes the ridge-penalized log-loss with deterministic
full-batch gradient descent (backtracking line search, unpenalized bias); the
SVM trainer is a Pegasos-style subgradient pass over seeded shuffles. Both
are deterministic given their seed.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps
from scipy.special import expit

from .corpus import FLAGGED, GREEN
from .errors import DataError

_LABEL_SIGN = {GREEN: 1.0, FLAGGED: -1.0}


def labels_to_signs(labels) -> np.ndarray:
    try:
        return np.array([_LABEL_SIGN[l] for l in labels])
    except KeyError as exc:
        raise DataError(f"unknown label {exc.args[0]!r}") from exc


@dataclass
class Standardizer:
    """Column-wise z-scoring with statistics taken from training rows only."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, rows: np.ndarray) -> "Standardizer":
        rows = np.asarray(rows, dtype=float)
        if rows.size == 0:
            raise DataError("cannot standardize an empty training set")
        mean = rows.mean(axis=0)
        std = rows.std(axis=0)  # population stdev
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean=mean, std=std)

    def transform(self, rows: np.ndarray) -> np.ndarray:
        return (np.asarray(rows, dtype=float) - self.mean) / self.std


def standardize(train_rows, apply_rows) -> tuple[np.ndarray, np.ndarray]:
    """z-score both row sets using mean/std fitted on train_rows alone."""
    scaler = Standardizer.fit(train_rows)
    return scaler.transform(train_rows), scaler.transform(apply_rows)


@dataclass
class LinearModel:
    kind: str  # logreg | svm | majority
    weights: np.ndarray
    bias: float
    reg_lambda: float = 0.0
    seed: int = 0
    final_loss: float = 0.0
    n_iter: int = 0
    majority_label: str | None = None
    train_green_rate: float = 0.5

    def margins(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.kind == "majority":
            constant = 1.0 if self.majority_label == GREEN else -1.0
            return np.full(X.shape[0], constant)
        return X @ self.weights + self.bias

    def scores_green(self, X: np.ndarray) -> np.ndarray:
        """Monotone score for P(green): a probability for logreg, a margin otherwise."""
        if self.kind == "majority":
            return np.full(np.asarray(X).shape[0], self.train_green_rate)
        m = self.margins(X)
        return expit(m) if self.kind == "logreg" else m

    def predict(self, X: np.ndarray) -> list[str]:
        if self.kind == "majority":
            return [self.majority_label] * np.asarray(X).shape[0]
        return [GREEN if m > 0 else FLAGGED for m in self.margins(X)]


def _check_training_inputs(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise DataError("X and y row counts differ")
    if not np.isfinite(X).all():
        raise DataError("non-finite feature value in training data")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DataError("training labels contain a single class")
    return X, y


def logreg_loss_grad(w, b, X, y, reg_lambda):
    """Ridge-penalized mean log-loss and its gradient (bias unpenalized)."""
    m = X @ w + b
    z = y * m
    loss = float(np.mean(np.logaddexp(0.0, -z)) + 0.5 * reg_lambda * (w @ w))
    s = expit(-z)
    coef = -(y * s) / len(y)
    gw = X.T @ coef + reg_lambda * w
    gb = float(coef.sum())
    return loss, gw, gb


def train_logreg(X, y, reg_lambda=1.0, max_iter=500, tol=1e-6, seed=0) -> LinearModel:
    """Full-batch gradient descent with backtracking line search.

    The accepted iterate never increases the objective, and iteration stops
    once the gradient norm drops to *tol*.
    """
    X, y = _check_training_inputs(X, y)
    w = np.zeros(X.shape[1])
    b = 0.0
    loss, gw, gb = logreg_loss_grad(w, b, X, y, reg_lambda)
    step = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        gnorm_sq = float(gw @ gw) + gb * gb
        if math.sqrt(gnorm_sq) <= tol:
            it -= 1
            break
        step = min(step * 2.0, 1e6)
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            loss_new, gw_new, gb_new = logreg_loss_grad(w_new, b_new, X, y, reg_lambda)
            if loss_new <= loss - 1e-4 * step * gnorm_sq or step < 1e-14:
                break
            step *= 0.5
        w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
    return LinearModel(
        kind="logreg",
        weights=w,
        bias=b,
        reg_lambda=reg_lambda,
        seed=seed,
        final_loss=loss,
        n_iter=it,
        train_green_rate=float(np.mean(y > 0)),
    )


def svm_objective(w, b, X, y, reg_lambda):
    margins = y * (X @ w + b)
    hinge = np.maximum(0.0, 1.0 - margins)
    return float(0.5 * reg_lambda * (w @ w) + hinge.mean())


def svm_subgradient(w, b, X, y, reg_lambda):
    """Full-batch subgradient of the SVM objective (reference for the trainer)."""
    margins = y * (X @ w + b)
    active = margins < 1.0
    gw = reg_lambda * w - (X[active].T @ y[active]) / len(y)
    gb = -float(y[active].sum()) / len(y)
    return gw, gb


def train_svm(X, y, reg_lambda=0.01, epochs=50, seed=0) -> LinearModel:
    """Pegasos-style single-sample subgradient descent with seeded shuffles."""
    X, y = _check_training_inputs(X, y)
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    w = np.zeros(X.shape[1])
    b = 0.0
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (reg_lambda * t)
            if y[i] * (X[i] @ w + b) < 1.0:
                w = (1.0 - eta * reg_lambda) * w + eta * y[i] * X[i]
                b += eta * y[i]
            else:
                w = (1.0 - eta * reg_lambda) * w
    return LinearModel(
        kind="svm",
        weights=w,
        bias=b,
        reg_lambda=reg_lambda,
        seed=seed,
        final_loss=svm_objective(w, b, X, y, reg_lambda),
        n_iter=epochs,
        train_green_rate=float(np.mean(y > 0)),
    )


def majority_baseline(y) -> LinearModel:
    """Constant predictor of the majority training class; ties go to green."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise DataError("empty training labels")
    green_rate = float(np.mean(y > 0))
    label = GREEN if green_rate >= 0.5 else FLAGGED
    return LinearModel(
        kind="majority",
        weights=np.zeros(0),
        bias=0.0,
        majority_label=label,
        train_green_rate=green_rate,
    )


@dataclass
class MetricsReport:
    per_class: dict[str, dict[str, float]]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: dict[str, dict[str, int]]  # confusion[true][pred] = count

    def to_dict(self) -> dict:
        return {
            "per_class": self.per_class,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "confusion": self.confusion,
        }


def macro_prf(y_true, y_pred) -> MetricsReport:
    """Two-class precision/recall/F1 with unweighted macro averaging.

    A class that is never predicted gets precision 0; a class absent from
    y_true gets recall 0; F1 is 0 whenever P + R = 0.
    """
    if len(y_true) != len(y_pred):
        raise DataError("y_true and y_pred lengths differ")
    if not y_true:
        raise DataError("empty label sequences")
    classes = (FLAGGED, GREEN)
    confusion = {t: {p: 0 for p in classes} for t in classes}
    for t, p in zip(y_true, y_pred):
        confusion[t][p] += 1
    per_class = {}
    for cls in classes:
        tp = confusion[cls][cls]
        fp = sum(confusion[o][cls] for o in classes if o != cls)
        fn = sum(confusion[cls][o] for o in classes if o != cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = {"precision": precision, "recall": recall, "f1": f1}
    return MetricsReport(
        per_class=per_class,
        macro_precision=sum(v["precision"] for v in per_class.values()) / 2,
        macro_recall=sum(v["recall"] for v in per_class.values()) / 2,
        macro_f1=sum(v["f1"] for v in per_class.values()) / 2,
        confusion=confusion,
    )


@dataclass
class ModelSpec:
    """What to train inside each CV fold.

    kind "custom" routes to *trainer*, a callable (X, y_signs, seed) returning
    any object with ``scores_green`` and ``predict`` methods; this is the hook
    for plugging in external learners.
    """

    kind: str = "logreg"
    reg_lambda: float = 1.0
    max_iter: int = 500
    tol: float = 1e-6
    epochs: int = 50
    trainer: object = None


def train_model(spec: ModelSpec, X, y_signs, seed: int):
    if spec.kind == "logreg":
        return train_logreg(
            X, y_signs, reg_lambda=spec.reg_lambda, max_iter=spec.max_iter,
            tol=spec.tol, seed=seed,
        )
    if spec.kind == "svm":
        return train_svm(X, y_signs, reg_lambda=spec.reg_lambda, epochs=spec.epochs, seed=seed)
    if spec.kind == "majority":
        return majority_baseline(y_signs)
    if spec.kind == "custom":
        if spec.trainer is None:
            raise DataError("ModelSpec kind 'custom' requires a trainer callable")
        return spec.trainer(X, y_signs, seed)
    raise DataError(f"unknown model kind {spec.kind!r}")


@dataclass
class CvResult:
    fold_metrics: list[MetricsReport]
    mean_metrics: MetricsReport
    oof_scores: np.ndarray
    oof_pred: list[str]
    fold_of: np.ndarray
    seed: int
    spec: ModelSpec
    fold_standardizers: list[Standardizer]
    y_true: list[str]
    y_q: np.ndarray | None = None

    @property
    def macro_f1_per_fold(self) -> list[float]:
        return [m.macro_f1 for m in self.fold_metrics]


def _mean_metrics(reports: list[MetricsReport]) -> MetricsReport:
    classes = (FLAGGED, GREEN)
    per_class = {
        cls: {
            key: float(np.mean([r.per_class[cls][key] for r in reports]))
            for key in ("precision", "recall", "f1")
        }
        for cls in classes
    }
    confusion = {
        t: {p: sum(r.confusion[t][p] for r in reports) for p in classes} for t in classes
    }
    return MetricsReport(
        per_class=per_class,
        macro_precision=float(np.mean([r.macro_precision for r in reports])),
        macro_recall=float(np.mean([r.macro_recall for r in reports])),
        macro_f1=float(np.mean([r.macro_f1 for r in reports])),
        confusion=confusion,
    )


def assign_folds(labels, k: int, seed: int, stratified: bool = True) -> np.ndarray:
    """Fold ids per sample: per-class round-robin after a seeded shuffle."""
    n = len(labels)
    if n < k:
        raise DataError(f"cannot split {n} samples into {k} folds")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=int)
    if stratified:
        for cls in (FLAGGED, GREEN):
            idx = np.array([i for i, l in enumerate(labels) if l == cls], dtype=int)
            if idx.size == 0:
                continue
            idx = rng.permutation(idx)
            for pos, i in enumerate(idx):
                fold_of[i] = pos % k
    else:
        perm = rng.permutation(n)
        for pos, i in enumerate(perm):
            fold_of[i] = pos % k
    return fold_of


def kfold_cv(
    features,
    labels,
    spec: ModelSpec,
    k: int = 5,
    seed: int = 0,
    stratified: bool = True,
    y_q=None,
) -> CvResult:
    """Stratified k-fold cross-validation with train-only standardization.

    For each fold the standardizer and model see training rows only; the held
    out fold is scored and its out-of-fold scores kept for downstream ROC
    analysis.
    """
    X = np.asarray(features, dtype=float)
    labels = list(labels)
    if len(set(labels)) < 2:
        raise DataError("cross-validation needs both classes present")
    fold_of = assign_folds(labels, k, seed, stratified)
    y_signs = labels_to_signs(labels)
    for f in range(k):
        train_y = y_signs[fold_of != f]
        if not (np.any(train_y > 0) and np.any(train_y < 0)):
            raise DataError(
                f"fold {f}: training split is missing a class; use a smaller k"
            )

    n = X.shape[0]
    oof_scores = np.zeros(n)
    oof_pred: list[str | None] = [None] * n
    fold_metrics = []
    fold_standardizers = []
    for f in range(k):
        train_idx = np.flatnonzero(fold_of != f)
        test_idx = np.flatnonzero(fold_of == f)
        scaler = Standardizer.fit(X[train_idx])
        fold_standardizers.append(scaler)
        model = train_model(spec, scaler.transform(X[train_idx]), y_signs[train_idx],
                            seed=seed + f)
        X_test = scaler.transform(X[test_idx])
        preds = model.predict(X_test)
        scores = model.scores_green(X_test)
        for j, i in enumerate(test_idx):
            oof_scores[i] = scores[j]
            oof_pred[i] = preds[j]
        fold_metrics.append(macro_prf([labels[i] for i in test_idx], preds))

    return CvResult(
        fold_metrics=fold_metrics,
        mean_metrics=_mean_metrics(fold_metrics),
        oof_scores=oof_scores,
        oof_pred=oof_pred,
        fold_of=fold_of,
        seed=seed,
        spec=spec,
        fold_standardizers=fold_standardizers,
        y_true=labels,
        y_q=None if y_q is None else np.asarray(y_q, dtype=float),
    )


def compare_models(per_fold_a, per_fold_b, m_comparisons: int = 1):
    """Paired two-sided Student t-test with Bonferroni adjustment.

    Significance is assessed on per-fold scores from CV runs that shared fold
    assignments (optionally pooled over repeated seeded CV).
    """
    a = np.asarray(per_fold_a, dtype=float)
    b = np.asarray(per_fold_b, dtype=float)
    if a.shape != b.shape:
        raise DataError("per-fold score lists differ in length")
    n = a.size
    if n < 2:
        raise DataError("paired t-test needs at least two folds")
    d = a - b
    sd = d.std(ddof=1)
    if sd == 0.0:
        warnings.warn("zero-variance differences in paired t-test", stacklevel=2)
        if d.mean() != 0.0:
            t = math.copysign(math.inf, d.mean())
            p = 0.0
        else:
            t, p = 0.0, 1.0
    else:
        t = float(d.mean() / (sd / math.sqrt(n)))
        p = float(2.0 * sps.t.sf(abs(t), n - 1))
    return t, p, min(1.0, p * m_comparisons)


def pearson(x, y):
    """Sample Pearson correlation with a two-sided t-distribution p-value.

    Zero variance in either input yields (0, 1) with a warning.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DataError("pearson inputs differ in length")
    n = x.size
    if n < 3:
        raise DataError("pearson needs at least 3 points")
    dx = x - x.mean()
    dy = y - y.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx == 0.0 or vy == 0.0:
        warnings.warn("zero variance in pearson input", stacklevel=2)
        return 0.0, 1.0
    rho = float((dx @ dy) / math.sqrt(vx * vy))
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = float(2.0 * sps.t.sf(abs(t), n - 2))
    return rho, p
