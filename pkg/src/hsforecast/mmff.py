"""Two-layer multi-model forecasting framework (MMFF).

The first layer fits every pool learner on the features; the second layer
(the blender) maps the vector of first-layer forecasts to the final forecast.
Blenders are trained on out-of-fold first-layer forecasts so a blender never
sees a forecast made by a model that was trained on the same row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, NotStandardized, TooFewSamples
from .features import FeatureDataset, Scaler, fit_scaler
from .learners import POOL, LearnerSpec, TrainedLearner, derive_seed, pool_rank, predict, train
from .parallel import parallel_map


@dataclass(frozen=True)
class FirstLayerBank:
    specs: tuple[LearnerSpec, ...]
    models: tuple[TrainedLearner, ...]

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([predict(m, X) for m in self.models]).reshape(X.shape[0], len(self.models))


@dataclass(frozen=True)
class StackMatrix:
    values: np.ndarray  # N x n_models out-of-fold forecasts
    folds: np.ndarray  # fold id of each row

    @property
    def k_folds(self) -> int:
        return int(self.folds.max()) + 1 if self.folds.size else 0


@dataclass(frozen=True)
class MmffModel:
    first_layer: FirstLayerBank
    blender_spec: LearnerSpec
    blender: TrainedLearner
    stack_scaler: Scaler
    cv_scores: dict[str, tuple[float, float]] = field(default_factory=dict)
    # every fitted blender (including the selected one), keyed by spec name
    blenders: dict[str, TrainedLearner] = field(default_factory=dict)

    @property
    def blender_name(self) -> str:
        return self.blender_spec.name


def kfold_assignment(n: int, k: int, seed: int) -> np.ndarray:
    """Seeded random partition of ``range(n)`` into ``k`` folds of near-equal size."""
    perm = np.random.default_rng(derive_seed(seed, "folds")).permutation(n)
    folds = np.empty(n, dtype=np.int64)
    folds[perm] = np.arange(n) % k
    return folds


def _check_inputs(dataset: FeatureDataset, pool: Sequence[LearnerSpec], k_folds: int) -> None:
    if len(dataset) < k_folds or k_folds < 2:
        raise TooFewSamples(f"{len(dataset)} rows cannot be split into {k_folds} folds")
    if not dataset.standardized and any(s.needs_standardized for s in pool):
        raise NotStandardized("ANN/SVM learners need standardized features")


def _fit_task(task):
    spec, X, y, seed = task
    return train(spec, X, y, seed)


def train_first_layer(dataset: FeatureDataset, pool: Sequence[LearnerSpec] = POOL,
                      k_folds: int = 10, seed: int = 0,
                      jobs: int = 1) -> tuple[FirstLayerBank, StackMatrix]:
    """Fit the bank on all rows and fill the out-of-fold stack matrix."""
    pool = tuple(pool)
    _check_inputs(dataset, pool, k_folds)
    X, y = dataset.X, dataset.y
    folds = kfold_assignment(len(y), k_folds, seed)

    tasks = [(spec, X, y, derive_seed(seed, "first", spec.name, "full")) for spec in pool]
    for f in range(k_folds):
        tr = folds != f
        tasks += [(spec, X[tr], y[tr], derive_seed(seed, "first", spec.name, f)) for spec in pool]
    fitted = parallel_map(_fit_task, tasks, jobs)

    bank = FirstLayerBank(pool, tuple(fitted[: len(pool)]))
    stack = np.empty((len(y), len(pool)))
    for f in range(k_folds):
        te = folds == f
        for j in range(len(pool)):
            model = fitted[len(pool) * (f + 1) + j]
            stack[te, j] = predict(model, X[te])
    return bank, StackMatrix(stack, folds)


def cv_metrics(y: np.ndarray, pred: np.ndarray) -> tuple[float, float]:
    """(nMAE, nRMSE) in percent, normalized by the mean target (1 if it is not positive)."""
    norm = float(np.mean(y))
    if not norm > 0:
        norm = 1.0
    err = pred - y
    return (100.0 * float(np.mean(np.abs(err))) / norm,
            100.0 * float(np.sqrt(np.mean(err * err))) / norm)


def _blender_input(spec: LearnerSpec, scaler: Scaler, Z: np.ndarray) -> np.ndarray:
    """Only ANN/SVM blenders see the standardized stack."""
    return scaler.transform(Z) if spec.needs_standardized else Z


def _fit_blender(spec: LearnerSpec, Z: np.ndarray, y: np.ndarray, seed: int) -> tuple[Scaler, TrainedLearner]:
    scaler = fit_scaler(Z)
    return scaler, train(spec, _blender_input(spec, scaler, Z), y, seed)


def _blender_cv_task(task):
    spec, Z, y, folds, seed = task
    oof = np.empty(y.size)
    for f in range(int(folds.max()) + 1):
        tr, te = folds != f, folds == f
        scaler, model = _fit_blender(spec, Z[tr], y[tr], derive_seed(seed, "blender-cv", spec.name, f))
        oof[te] = np.maximum(predict(model, _blender_input(spec, scaler, Z[te])), 0.0)
    return cv_metrics(y, oof)


def select_blender(stack: StackMatrix, y: np.ndarray, candidates: Sequence[LearnerSpec] = POOL,
                   k_folds: int | None = None, seed: int = 0,
                   jobs: int = 1) -> tuple[LearnerSpec, dict[str, tuple[float, float]]]:
    """Cross-validate each candidate blender on the stack; lowest nRMSE wins.

    Ties go to the lower nMAE, then to the earlier position in the fixed pool
    order. Candidates are scored on the stack's own folds unless ``k_folds``
    asks for a different count.
    """
    candidates = tuple(candidates)
    if not candidates:
        raise ValueError("no candidate blenders")
    y = np.asarray(y, dtype=float)
    folds = stack.folds
    if k_folds is not None and k_folds != stack.k_folds:
        if y.size < k_folds:
            raise TooFewSamples(f"{y.size} rows cannot be split into {k_folds} folds")
        folds = kfold_assignment(y.size, k_folds, derive_seed(seed, "blender-folds"))
    tasks = [(spec, stack.values, y, folds, seed) for spec in candidates]
    scores = dict(zip((s.name for s in candidates), parallel_map(_blender_cv_task, tasks, jobs)))
    order = sorted(range(len(candidates)),
                   key=lambda i: (scores[candidates[i].name][1], scores[candidates[i].name][0],
                                  pool_rank(candidates[i]), i))
    return candidates[order[0]], scores


def fit_blenders(stack: StackMatrix, y: np.ndarray, specs: Iterable[LearnerSpec],
                 seed: int) -> tuple[Scaler, dict[str, TrainedLearner]]:
    """Fit blenders on the full out-of-fold stack (one shared input scaler)."""
    scaler = fit_scaler(stack.values)
    Z = stack.values
    return scaler, {s.name: train(s, _blender_input(s, scaler, Z), y, derive_seed(seed, "blender", s.name))
                    for s in specs}


def train_mmff(dataset: FeatureDataset, pool: Sequence[LearnerSpec] = POOL, k_folds: int = 10,
               seed: int = 0, candidates: Sequence[LearnerSpec] | None = None,
               select: bool = True, jobs: int = 1) -> MmffModel:
    """First layer + blender selection + final blender fit on the out-of-fold stack.

    With ``select=False`` no cross-validation is run and the first candidate
    becomes the active blender (all candidates are still fitted).
    """
    candidates = tuple(pool if candidates is None else candidates)
    bank, stack = train_first_layer(dataset, pool, k_folds, seed, jobs)
    if select:
        best, scores = select_blender(stack, dataset.y, candidates, seed=seed, jobs=jobs)
    else:
        best, scores = candidates[0], {}
    scaler, blenders = fit_blenders(stack, dataset.y, candidates, seed)
    return MmffModel(bank, best, blenders[best.name], scaler, scores, blenders)


def with_blender(model: MmffModel, name: str) -> MmffModel:
    """Same MMFF with a different (already fitted) active blender."""
    spec = model.blenders[name].spec
    return MmffModel(model.first_layer, spec, model.blenders[name], model.stack_scaler,
                     model.cv_scores, model.blenders)


def mmff_predict(model: MmffModel, x: np.ndarray, blender: str | None = None) -> np.ndarray | float:
    """Blend first-layer forecasts for one feature vector or a matrix of them; clamps at 0."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != model.first_layer.models[0].input_dim:
        raise DimensionMismatch(
            f"expected {model.first_layer.models[0].input_dim} features, got {X.shape[1]}")
    est = model.blender if blender is None else model.blenders[blender]
    Z = _blender_input(est.spec, model.stack_scaler, model.first_layer.predict(X))
    out = np.maximum(predict(est, Z), 0.0)
    return float(out[0]) if single else out

