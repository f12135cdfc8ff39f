import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.svm import SVR
from sklearn.tree import DecisionTreeRegressor

from hsforecast.errors import DimensionMismatch, NonFiniteInput, TooFewSamples
from hsforecast.learners import POOL, POOL_BY_NAME, LearnerSpec, derive_seed, predict, train
from hsforecast.learners.ann import fit_network
from hsforecast.learners.boosting import fit_gbm
from hsforecast.learners.cart import grow_tree
from hsforecast.learners.forest import fit_forest
from hsforecast.learners.svr import fit_svr

POOL_IDS = [s.name for s in POOL]


def linear_task(n=500, d=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    return X, 2.0 * X[:, 0] + 1.0


def r2(y, p):
    return 1.0 - np.sum((y - p) ** 2) / np.sum((y - y.mean()) ** 2)


def test_pool_order():
    assert POOL_IDS == ["ANN1", "ANN2", "ANN3", "SVM1", "SVM2", "GBM1", "GBM2", "GBM3", "RF"]


def test_derive_seed_is_order_free_and_distinct():
    assert derive_seed(1, "a", 2) == derive_seed(1, "a", 2)
    assert len({derive_seed(1, "a", k) for k in range(100)}) == 100
    assert derive_seed(1, "a") != derive_seed(2, "a")


@pytest.mark.parametrize("spec", POOL, ids=POOL_IDS)
def test_linear_r2(spec):
    X, y = linear_task(d=1)
    model = train(spec, X[:400], y[:400], seed=0)
    assert r2(y[400:], predict(model, X[400:])) >= 0.9


@pytest.mark.parametrize("spec", POOL, ids=POOL_IDS)
def test_constant_target(spec):
    X, _ = linear_task(n=60)
    c = 317.25
    pred = predict(train(spec, X, np.full(60, c), seed=1), X)
    tol = 1e-3 if spec.family in ("ANN", "SVM") else 1e-6
    assert np.max(np.abs(pred - c)) < tol


@pytest.mark.parametrize("spec", POOL, ids=POOL_IDS)
def test_deterministic(spec):
    X, y = linear_task(n=80, seed=5)
    y = y + np.sin(3 * X[:, 1])
    a = predict(train(spec, X, y, seed=3), X)
    b = predict(train(spec, X, y, seed=3), X)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("spec", POOL, ids=POOL_IDS)
def test_predict_contract(spec):
    X, y = linear_task(n=30)
    model = train(spec, X, y)
    assert predict(model, np.empty((0, 3))).shape == (0,)
    with pytest.raises(DimensionMismatch):
        predict(model, np.zeros((2, 4)))
    assert np.all(np.isfinite(predict(model, X * 10)))


def test_train_errors():
    spec = POOL_BY_NAME["RF"]
    with pytest.raises(TooFewSamples):
        train(spec, np.zeros((1, 2)), np.zeros(1))
    with pytest.raises(NonFiniteInput):
        train(spec, np.array([[0.0], [np.nan]]), np.zeros(2))
    with pytest.raises(NonFiniteInput):
        train(spec, np.zeros((2, 1)), np.array([0.0, np.inf]))
    with pytest.raises(DimensionMismatch):
        train(spec, np.zeros((3, 1)), np.zeros(2))


def test_hyperparams_pass_through():
    X, y = linear_task(n=50)
    spec = LearnerSpec.make("GBM", "squared", n_rounds=0)
    assert spec.name == "GBM1"
    assert np.allclose(predict(train(spec, X, y), X), y.mean())


def test_cart_matches_sklearn_at_depth_3():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((300, 4))
    y = np.sin(X[:, 0]) + X[:, 1] ** 2 + 0.1 * rng.standard_normal(300)
    tree, _ = grow_tree(X, y, max_depth=3, min_leaf=1)
    ref = DecisionTreeRegressor(max_depth=3, random_state=0).fit(X, y)
    Xt = rng.standard_normal((200, 4))
    assert np.allclose(tree.predict(Xt), ref.predict(Xt), atol=1e-12)


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_cart_memorizes_distinct_points(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((40, 2))
    y = rng.standard_normal(40)
    tree, leaves = grow_tree(X, y)
    assert np.array_equal(tree.predict(X), y)
    assert np.array_equal(tree.value[leaves], y)


def test_single_tree_forest_memorizes():
    X, _ = linear_task(n=50, d=2, seed=9)
    y = np.random.default_rng(9).standard_normal(50)
    forest = fit_forest(X, y, n_trees=1, min_leaf=1, mtry=2, bootstrap=False)
    assert np.array_equal(forest.predict(X), y)


def test_forest_is_mean_of_trees():
    X, y = linear_task(n=120, seed=2)
    forest = fit_forest(X, y + np.cos(X[:, 2]), n_trees=25, seed=4)
    Xt = linear_task(n=30, seed=3)[0]
    per_tree = forest.tree_predictions(Xt)
    assert per_tree.shape == (25, 30)
    assert np.array_equal(forest.predict(Xt), per_tree.mean(axis=0))


def test_gbm_zero_rounds_is_mean():
    X, y = linear_task(n=40)
    assert np.all(fit_gbm(X, y, "squared", n_rounds=0).predict(X) == y.mean())


def test_gbm_squared_mse_non_increasing():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((200, 3))
    y = X[:, 0] * X[:, 1] + rng.standard_normal(200)
    trace = []
    fit_gbm(X, y, "squared", trace=trace)
    assert len(trace) == 100
    assert np.all(np.diff(trace) <= 1e-12)
    assert trace[-1] < np.var(y)


def outlier_fixture(seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2, 2, (300, 2))
    f = lambda A: 3 * A[:, 0] + np.sin(2 * A[:, 1])  # noqa: E731
    y = f(X) + 0.1 * rng.standard_normal(300)
    Xt = rng.uniform(-2, 2, (300, 2))
    y_out = y.copy()
    y_out[0] += 1e6
    return X, y, y_out, Xt, f(Xt)


def gbm_degradation(loss):
    X, y, y_out, Xt, yt = outlier_fixture()
    clean = np.mean(np.abs(fit_gbm(X, y, loss).predict(Xt) - yt))
    dirty = np.mean(np.abs(fit_gbm(X, y_out, loss).predict(Xt) - yt))
    return dirty / clean


def test_gbm_laplace_robust_to_outlier():
    assert gbm_degradation("laplace") < 2.0
    assert gbm_degradation("squared") > 2.0


def test_svm_linear_is_affine():
    X, y = linear_task(n=200, seed=4)
    model = train(POOL_BY_NAME["SVM2"], X, y + 0.3 * np.sin(X[:, 1]))
    rng = np.random.default_rng(0)
    x1, x2 = rng.standard_normal((2, 50, 3))
    for a in (-1.5, 0.0, 0.3, 1.0, 2.0):
        lhs = predict(model, a * x1 + (1 - a) * x2)
        rhs = a * predict(model, x1) + (1 - a) * predict(model, x2)
        assert np.allclose(lhs, rhs, atol=1e-8, rtol=0)


@pytest.mark.parametrize("kernel", ["rbf", "linear"])
def test_svr_matches_sklearn(kernel):
    rng = np.random.default_rng(21)
    X = rng.standard_normal((150, 3))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] + 0.1 * rng.standard_normal(150)
    ys = (y - y.mean()) / y.std()
    ours = fit_svr(X, y, kernel=kernel)
    ref = SVR(kernel=kernel, C=1.0, epsilon=0.1 / y.std(), gamma=1.0 / 3, tol=1e-3).fit(X, ys)
    Xt = rng.standard_normal((100, 3))
    ref_pred = ref.predict(Xt) * y.std() + y.mean()
    assert np.max(np.abs(ours.predict(Xt) - ref_pred)) < 0.02 * y.std()


@pytest.mark.parametrize("variant", ["standard", "momentum", "resilient"])
def test_ann_fits_linear_toy(variant):
    X, y = linear_task(n=200, d=2, seed=1)
    net = fit_network(X, y, variant, seed=2)
    assert np.mean((net.predict(X) - y) ** 2) < 1e-3
