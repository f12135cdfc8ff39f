"""The nine-model regression pool behind one ``train``/``predict`` contract."""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from ..errors import DimensionMismatch, NonFiniteInput, TooFewSamples
from .ann import fit_network
from .boosting import fit_gbm
from .forest import fit_forest
from .svr import fit_svr

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LearnerSpec:
    family: str
    variant: str
    hyperparams: tuple[tuple[str, Any], ...] = ()

    @classmethod
    def make(cls, family: str, variant: str, **hyperparams) -> "LearnerSpec":
        return cls(family, variant, tuple(sorted(hyperparams.items())))

    def hp(self) -> dict[str, Any]:
        return dict(self.hyperparams)

    @property
    def name(self) -> str:
        return POOL_NAMES.get((self.family, self.variant), f"{self.family}-{self.variant}")

    @property
    def needs_standardized(self) -> bool:
        return self.family in ("ANN", "SVM")


@dataclass(frozen=True)
class TrainedLearner:
    spec: LearnerSpec
    input_dim: int
    params: Any
    converged: bool = True


# (family, variant) -> display name, in pool order
POOL_NAMES: dict[tuple[str, str], str] = {
    ("ANN", "standard"): "ANN1",
    ("ANN", "momentum"): "ANN2",
    ("ANN", "resilient"): "ANN3",
    ("SVM", "rbf"): "SVM1",
    ("SVM", "linear"): "SVM2",
    ("GBM", "squared"): "GBM1",
    ("GBM", "laplace"): "GBM2",
    ("GBM", "tdist"): "GBM3",
    ("RF", "cart"): "RF",
}
POOL: tuple[LearnerSpec, ...] = tuple(LearnerSpec(f, v) for f, v in POOL_NAMES)
POOL_BY_NAME: dict[str, LearnerSpec] = {s.name: s for s in POOL}


def pool_rank(spec: LearnerSpec) -> int:
    """Position in the fixed pool order; specs outside the pool sort last."""
    key = (spec.family, spec.variant)
    return list(POOL_NAMES).index(key) if key in POOL_NAMES else len(POOL_NAMES)


def derive_seed(seed: int, *tags: Any) -> int:
    """Deterministic 32-bit seed from a global seed and identifying tags."""
    key = tuple(zlib.crc32(repr(t).encode()) for t in tags)
    return int(np.random.SeedSequence(int(seed), spawn_key=key).generate_state(1)[0])


def _fit_ann(spec, X, y, seed):
    net = fit_network(X, y, variant=spec.variant, seed=seed, **spec.hp())
    return net, net.converged


def _fit_svm(spec, X, y, seed):
    svr = fit_svr(X, y, kernel=spec.variant, **spec.hp())
    return svr, svr.converged


def _fit_gbm(spec, X, y, seed):
    return fit_gbm(X, y, loss=spec.variant, seed=seed, **spec.hp()), True


def _fit_rf(spec, X, y, seed):
    return fit_forest(X, y, seed=seed, **spec.hp()), True


def _predict_params(params, X):
    return params.predict(X)


Fitter = Callable[[LearnerSpec, np.ndarray, np.ndarray, int], tuple[Any, bool]]
Predictor = Callable[[Any, np.ndarray], np.ndarray]

FAMILIES: dict[str, tuple[Fitter, Predictor]] = {
    "ANN": (_fit_ann, _predict_params),
    "SVM": (_fit_svm, _predict_params),
    "GBM": (_fit_gbm, _predict_params),
    "RF": (_fit_rf, _predict_params),
}


def register_family(family: str, fit: Fitter, predict: Predictor) -> None:
    """Make an extra learner family available to ``train``/``predict``."""
    FAMILIES[family] = (fit, predict)


def _check_matrix(X, y=None):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)) or (y is not None and not np.all(np.isfinite(y))):
        raise NonFiniteInput("inputs contain NaN or infinity")
    return X


def train(spec: LearnerSpec, X: np.ndarray, y: np.ndarray, seed: int = 0) -> TrainedLearner:
    y = np.asarray(y, dtype=float)
    X = _check_matrix(X, y)
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"{X.shape[0]} rows but {y.size} targets")
    if y.size < 2:
        raise TooFewSamples(f"need at least 2 samples, got {y.size}")
    if spec.family not in FAMILIES:
        raise ValueError(f"unknown learner family {spec.family!r}")
    fit, _ = FAMILIES[spec.family]
    params, converged = fit(spec, X, y, derive_seed(seed, spec, "fit"))
    if not converged:
        log.debug("%s hit its iteration cap; keeping the last iterate", spec.name)
    return TrainedLearner(spec, X.shape[1], params, converged)


def predict(model: TrainedLearner, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape[0] == 0:
        return np.empty(0)
    X = _check_matrix(X)
    if X.shape[1] != model.input_dim:
        raise DimensionMismatch(f"model expects {model.input_dim} columns, got {X.shape[1]}")
    _, pred = FAMILIES[model.spec.family]
    return np.asarray(pred(model.params, X), dtype=float)
