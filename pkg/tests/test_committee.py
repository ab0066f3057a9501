import numpy as np
import pytest
from sklearn.discriminant_analysis import LinearDiscriminantAnalysis
from sklearn.gaussian_process import GaussianProcessClassifier
from sklearn.gaussian_process.kernels import RBF
from sklearn.linear_model import LogisticRegression
from sklearn.svm import SVC

from kdpp_al import committee as cm
from kdpp_al.committee.learners import fit_gpc, fit_logistic, fit_svm, gpc_gamma, median_distance
from kdpp_al.committee.smo import kernel_matrix


def separated(seed, n=20, k=2, d=2, gap=5.0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % k
    centers = gap * np.eye(max(k, d))[:k, :d] if k <= d else gap * rng.standard_normal((k, d))
    return centers[y] + 0.3 * rng.standard_normal((n, d)), y


def xor_data(seed, n=40):
    rng = np.random.default_rng(seed)
    x = rng.choice([-1.0, 1.0], size=(n, 2)) + 0.1 * rng.standard_normal((n, 2))
    return x, (np.sign(x[:, 0]) != np.sign(x[:, 1])).astype(int)


@pytest.mark.parametrize("kind", cm.KINDS)
def test_separable_training_accuracy(kind):
    x, y = separated(0)
    model = cm.fit(kind, x, y, 2)
    assert np.mean(model.predict(x) == y) == 1.0
    assert model.converged


@pytest.mark.parametrize("kind", cm.KINDS)
def test_multiclass_separable(kind):
    x, y = separated(1, n=45, k=3, d=3, gap=6.0)
    model = cm.fit(kind, x, y, 3)
    assert model.decision_scores(x).shape == (45, 3)
    assert np.mean(model.predict(x) == y) == 1.0


def test_xor_linear_svm_limited():
    x, y = xor_data(2)
    # brute-force oracle: best accuracy of any line through a fine grid of directions
    best = 0.0
    for th in np.linspace(0, np.pi, 721):
        proj = x @ np.array([np.cos(th), np.sin(th)])
        for b in np.concatenate([proj - 1e-9, proj + 1e-9]):
            pred = (proj > b).astype(int)
            best = max(best, np.mean(pred == y), np.mean(pred != y))
    acc = np.mean(cm.fit("svm_linear", x, y, 2).predict(x) == y)
    assert acc <= 0.75 and acc <= best + 1e-12


@pytest.mark.parametrize("kind", cm.KINDS)
def test_deterministic(kind):
    x, y = separated(3, n=30)
    a = cm.fit(kind, x, y, 2).decision_scores(x)
    b = cm.fit(kind, x, y, 2).decision_scores(x)
    np.testing.assert_array_equal(a, b)


def test_predict_training_point_and_shape():
    x, y = separated(4)
    model = cm.fit("svm_rbf", x, y, 2)
    i0 = int(np.flatnonzero(y == 0)[0])
    assert cm.predict(model, x[i0:i0 + 1])[0] == 0
    assert cm.predict(model, np.zeros((7, 2))).shape == (7,)
    with pytest.raises(ValueError):
        model.predict(np.zeros((3, 5)))


def test_tie_goes_to_lower_class():
    model = cm.TrainedModel("const", 3, 1, (lambda x: np.ones((x.shape[0], 3)),), native=True)
    assert model.predict(np.zeros((2, 1))).tolist() == [0, 0]


def test_single_class_rejected():
    with pytest.raises(ValueError):
        cm.fit("logistic", np.zeros((4, 2)), np.zeros(4, dtype=int), 2)


def test_binary_ovr_matches_underlying_classifier():
    x, y = xor_data(5)
    model = cm.fit("svm_rbf", x, y, 2)
    scorer, _ = fit_svm(x, y.astype(float), "rbf", gamma=0.5)
    np.testing.assert_array_equal(model.predict(x), (scorer(x) > 0).astype(int))


def test_absent_class_scores_dominated():
    x, y = separated(6, n=30, k=3, d=3)
    keep = y != 1
    for kind in cm.KINDS:
        model = cm.fit(kind, x[keep], y[keep], 3)
        assert not np.any(model.predict(x) == 1)


def test_vote_matrix():
    x, y = separated(7, n=40)
    committee = cm.fit_committee(cm.KINDS, x, y, 2)
    xu = np.random.default_rng(0).standard_normal((34, 2)) * 3
    v = cm.vote_matrix(committee, xu)
    assert v.shape == (34, 6)
    np.testing.assert_array_equal(cm.vote_matrix(committee[:1], xu)[:, 0], committee[0].predict(xu))
    # every member fits the separable training set exactly, so votes are unanimous
    v = cm.vote_matrix(committee, x)
    assert np.all(v == v[:, :1])
    with pytest.raises(ValueError):
        cm.vote_matrix([], xu)
    with pytest.raises(ValueError):
        cm.vote_matrix(committee, np.zeros((0, 2)))


def test_unknown_hyper_rejected():
    x, y = separated(8)
    with pytest.raises(ValueError):
        cm.fit("logistic", x, y, 2, {"logistic.C": 3})


# -- independent implementations as oracles -------------------------------------

@pytest.mark.parametrize("kernel", ["linear", "rbf", "poly"])
def test_svm_matches_sklearn(kernel):
    x, y = xor_data(9, n=60)
    x = x + 0.4 * np.random.default_rng(1).standard_normal(x.shape)
    scorer, ok = fit_svm(x, y.astype(float), kernel, c=1.0, gamma=0.5, degree=3, coef0=1.0,
                         tol=1e-6)
    ref = SVC(C=1.0, kernel=kernel, gamma=0.5, degree=3, coef0=1.0, tol=1e-6).fit(x, y)
    assert ok
    np.testing.assert_allclose(scorer(x), ref.decision_function(x), atol=1e-4)


def test_logistic_matches_sklearn():
    rng = np.random.default_rng(10)
    x = rng.standard_normal((80, 3))
    y = (x @ np.array([1.0, -2.0, 0.5]) + rng.standard_normal(80) > 0).astype(int)
    l2 = 0.05
    scorer, ok = fit_logistic(x, y.astype(float), l2=l2, tol=1e-10)
    # mean loss + l2/2 |w|^2  <=>  C = 1 / (n l2)
    ref = LogisticRegression(C=1.0 / (80 * l2), tol=1e-12, max_iter=10_000).fit(x, y)
    assert ok
    np.testing.assert_allclose(scorer.w, ref.coef_[0], atol=1e-5)
    assert scorer.b == pytest.approx(ref.intercept_[0], abs=1e-5)


def test_lda_agrees_with_sklearn():
    rng = np.random.default_rng(11)
    y = rng.integers(0, 3, 150)
    x = np.array([[0, 0], [2, 1], [0, 3]])[y] + rng.standard_normal((150, 2))
    model = cm.fit("lda", x, y, 3)
    ref = LinearDiscriminantAnalysis().fit(x, y)
    grid = rng.uniform(-3, 5, (500, 2))
    assert np.mean(model.predict(grid) == ref.predict(grid)) >= 0.99


def test_gpc_latent_mode_matches_sklearn():
    x, y = xor_data(12, n=50)
    x = x + 0.3 * np.random.default_rng(2).standard_normal(x.shape)
    ell = median_distance(x)
    scorer, ok = fit_gpc(x, y.astype(float), max_iter=100, tol=1e-12)
    ref = GaussianProcessClassifier(RBF(ell), optimizer=None).fit(x, y)
    assert ok
    assert gpc_gamma(x) == pytest.approx(1 / (2 * ell * ell))
    np.testing.assert_allclose(scorer(x), ref.base_estimator_.f_cached, atol=1e-6)


def test_gram_matrix_oracle():
    rng = np.random.default_rng(13)
    x, z = rng.standard_normal((5, 3)), rng.standard_normal((4, 3))
    d2 = ((x[:, None] - z[None]) ** 2).sum(-1)
    np.testing.assert_allclose(kernel_matrix(x, z, "rbf", 0.7), np.exp(-0.7 * d2), rtol=1e-12)
    np.testing.assert_allclose(kernel_matrix(x, z, "poly", 0.5, 2, 1.0), (0.5 * x @ z.T + 1) ** 2)
