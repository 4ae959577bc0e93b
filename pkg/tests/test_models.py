import numpy as np
import pytest

from nftmarket.models import (
    AdaBoostStumps,
    FeatureTransform,
    OlsRegression,
    auc_score,
    boxcox_apply,
    boxcox_mle_lambda,
    evaluate_classifier,
    f1_score,
    ols_fit,
    random_oversample,
    temporal_split,
)


class TestBoxcox:
    def test_lambda_one_is_shift(self):
        x = np.array([1.0, 2.0, 5.0])
        np.testing.assert_allclose(boxcox_apply(x, 1.0), x - 1.0)

    def test_lambda_zero_is_log(self):
        x = np.array([1.0, 2.0, 5.0])
        np.testing.assert_allclose(boxcox_apply(x, 0.0), np.log(x))

    def test_lognormal_mle_near_zero_vs_grid_oracle(self):
        rng = np.random.default_rng(0)
        x = np.exp(rng.standard_normal(20_000) * 0.8 + 1.0)
        lam_hat = boxcox_mle_lambda(x)
        # oracle: profile log-likelihood on a grid over [-2, 2]
        logx = np.log(x)
        n = len(x)
        grid = np.linspace(-2, 2, 801)
        llf = [
            -n / 2 * np.log(boxcox_apply(x, lam).var()) + (lam - 1) * logx.sum()
            for lam in grid
        ]
        lam_grid = grid[int(np.argmax(llf))]
        assert lam_hat == pytest.approx(lam_grid, abs=0.05)
        assert abs(lam_hat) < 0.05


class TestFeatureTransform:
    def test_log1p_zero_preserved_and_minmax(self):
        X = np.array([[0.0], [1.0], [10.0]])
        ft = FeatureTransform(columns=("k_buyer",)).fit(X)
        out = ft.transform(X)
        assert out[0, 0] == 0.0
        assert out[-1, 0] == 1.0

    def test_output_in_unit_interval_with_clipping(self):
        rng = np.random.default_rng(1)
        train = np.column_stack([rng.uniform(2, 10, 200), rng.uniform(-1, 1, 200)])
        test = np.column_stack([rng.uniform(0, 30, 50), rng.uniform(-5, 5, 50)])
        ft = FeatureTransform(columns=("median_price", "vis_pca_1")).fit(train)
        out = ft.transform(test)
        assert out.min() >= 0.0 and out.max() <= 1.0
        assert (out == 0.0).any() and (out == 1.0).any()  # clipping engaged

    def test_boxcox_column_uses_train_lambda(self):
        rng = np.random.default_rng(2)
        train = np.exp(rng.standard_normal((500, 1)))
        ft = FeatureTransform(columns=("pr_buyer",)).fit(train)
        assert abs(ft.lambdas_[0]) < 0.3
        out = ft.transform(train)
        assert out.shape == (500, 1)
        assert out.min() == 0.0 and out.max() == 1.0

    def test_shift_makes_strictly_positive(self):
        X = np.array([[0.0], [0.5], [2.0]])
        ft = FeatureTransform(columns=("p_resale",)).fit(X)
        assert ft.shifts_[0] > 0
        out = ft.transform(X)
        assert np.all(np.isfinite(out))

    def test_zero_variance_dropped_with_warning(self):
        X = np.column_stack([np.ones(10), np.arange(10.0)])
        with pytest.warns(RuntimeWarning, match="zero-variance"):
            ft = FeatureTransform(columns=("vis_pca_1", "vis_pca_2")).fit(X)
        assert ft.kept_columns_ == ("vis_pca_2",)
        assert ft.transform(X).shape == (10, 1)

    def test_passthrough_column_untouched_before_scaling(self):
        X = np.array([[-2.0], [0.0], [2.0]])
        ft = FeatureTransform(columns=("vis_pca_3",)).fit(X)
        np.testing.assert_allclose(ft.transform(X).ravel(), [0.0, 0.5, 1.0])


class TestOls:
    def test_exact_recovery(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(0, 1, size=(200, 3))
        beta = np.array([2.0, -1.0, 0.5])
        y = 0.7 + X @ beta
        report = ols_fit(X, y, feature_names=["a", "b", "c"])
        assert report.r2_adj == pytest.approx(1.0, abs=1e-9)
        np.testing.assert_allclose(report.beta, [0.7, 2.0, -1.0, 0.5], atol=1e-9)

    def test_pure_noise_r2_adj_near_zero(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(0, 1, size=(10_000, 5))
        y = rng.standard_normal(10_000)
        report = ols_fit(X, y)
        assert abs(report.r2_adj) < 0.01

    def test_normal_equations(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(0, 1, size=(300, 4))
        y = X @ np.array([1.0, 2.0, -3.0, 0.2]) + rng.standard_normal(300)
        model = OlsRegression().fit(X, y)
        design = np.column_stack([np.ones(300), X])
        grad = design.T @ (y - design @ model.beta_)
        assert np.abs(grad).max() < 1e-8

    def test_rank_deficient_names_columns(self):
        rng = np.random.default_rng(6)
        x0 = rng.uniform(0, 1, 100)
        X = np.column_stack([x0, 2 * x0, rng.uniform(0, 1, 100)])
        with pytest.raises(ValueError, match="collinear"):
            ols_fit(X, rng.standard_normal(100))

    def test_needs_enough_samples(self):
        with pytest.raises(ValueError, match="samples"):
            ols_fit(np.ones((4, 3)) * np.arange(3), np.ones(4))

    def test_significance_flags(self):
        rng = np.random.default_rng(7)
        n = 2000
        strong = rng.uniform(0, 1, n)
        noise_col = rng.uniform(0, 1, n)
        y = 3.0 * strong + rng.standard_normal(n)
        report = ols_fit(np.column_stack([strong, noise_col]), y, feature_names=["strong", "noise"])
        assert report.significance[report.feature_names.index("strong")] == "<0.01"
        assert report.significance[report.feature_names.index("noise")] == ">0.05"

    def test_noise_column_barely_moves_adjusted_r2(self):
        rng = np.random.default_rng(8)
        n = 10_000
        x = rng.uniform(0, 1, n)
        y = 2.0 * x + rng.standard_normal(n)
        base = ols_fit(x.reshape(-1, 1), y).r2_adj
        widened = ols_fit(np.column_stack([x, rng.uniform(0, 1, n)]), y).r2_adj
        assert widened - base < 0.005

    def test_predict(self):
        X = np.arange(20.0).reshape(-1, 1)
        y = 3.0 + 2.0 * X.ravel()
        model = OlsRegression().fit(X, y)
        np.testing.assert_allclose(model.predict(np.array([[100.0]])), [203.0], atol=1e-8)


class TestAdaBoost:
    def test_separable_one_round(self):
        X = np.concatenate([np.linspace(0, 0.4, 50), np.linspace(0.6, 1.0, 50)]).reshape(-1, 1)
        y = np.concatenate([np.zeros(50), np.ones(50)])
        model = AdaBoostStumps(n_estimators=100).fit(X, y)
        assert len(model.stumps_) == 1  # perfect stump stops training
        assert f1_score(y, model.predict(X)) == 1.0

    def test_accepted_rounds_below_half_error(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(0, 1, size=(500, 3))
        y = (X[:, 0] + 0.3 * rng.standard_normal(500) > 0.5).astype(int)
        model = AdaBoostStumps(n_estimators=50).fit(X, y)
        assert model.stumps_
        assert all(err < 0.5 for err in model.train_errors_)

    def test_noise_auc_near_half(self):
        rng = np.random.default_rng(10)
        X_train = rng.uniform(0, 1, size=(5000, 4))
        y_train = rng.integers(0, 2, 5000)
        X_test = rng.uniform(0, 1, size=(10_000, 4))
        y_test = rng.integers(0, 2, 10_000)
        model = AdaBoostStumps(n_estimators=30).fit(X_train, y_train)
        report = evaluate_classifier(model, X_test, y_test)
        assert report.auc == pytest.approx(0.5, abs=0.03)

    def test_learning_rate_scales_alpha(self):
        X = np.linspace(0, 1, 40).reshape(-1, 1)
        y = (X.ravel() > 0.48).astype(int)
        full = AdaBoostStumps(n_estimators=1, learning_rate=1.0).fit(X, y)
        half = AdaBoostStumps(n_estimators=1, learning_rate=0.5).fit(X, y)
        assert half.stumps_[0].alpha == pytest.approx(full.stumps_[0].alpha * 0.5)

    def test_rejects_bad_labels(self):
        with pytest.raises(ValueError):
            AdaBoostStumps().fit(np.ones((4, 1)), np.array([1, 2, 1, 2]))

    def test_deterministic(self):
        rng = np.random.default_rng(11)
        X = rng.uniform(0, 1, size=(300, 5))
        y = (X[:, 1] > 0.6).astype(int)
        s1 = AdaBoostStumps(n_estimators=20).fit(X, y).decision_function(X)
        s2 = AdaBoostStumps(n_estimators=20).fit(X, y).decision_function(X)
        np.testing.assert_array_equal(s1, s2)


class TestMetrics:
    def test_perfect_classifier(self):
        y = np.array([0, 1, 0, 1])
        scores = np.array([-1.0, 2.0, -0.5, 1.5])
        assert f1_score(y, (scores > 0).astype(int)) == 1.0
        assert auc_score(y, scores) == 1.0

    def test_constant_positive_f1(self):
        # oracle: direct confusion arithmetic, F1 = 2*pi/(1+pi)
        y = np.array([1] * 30 + [0] * 70)
        pred = np.ones(100, dtype=int)
        pi = 0.3
        assert f1_score(y, pred) == pytest.approx(2 * pi / (1 + pi))

    def test_reversed_scores_flip_auc(self):
        rng = np.random.default_rng(12)
        y = rng.integers(0, 2, 500)
        scores = rng.standard_normal(500) + y
        auc = auc_score(y, scores)
        assert auc_score(y, -scores) == pytest.approx(1 - auc, abs=1e-12)

    def test_tie_averaging(self):
        y = np.array([0, 1])
        scores = np.array([0.5, 0.5])
        assert auc_score(y, scores) == 0.5

    def test_single_class_auc_none(self):
        assert auc_score(np.ones(5), np.arange(5)) is None

    def test_evaluate_counts(self):
        X = np.array([[0.0], [1.0], [0.2], [0.9]])
        y = np.array([0, 1, 1, 0])
        model = AdaBoostStumps(n_estimators=5).fit(np.array([[0.0], [1.0]]), np.array([0, 1]))
        report = evaluate_classifier(model, X, y)
        assert report.tp + report.fp + report.tn + report.fn == 4


class _Row:
    def __init__(self, t_s, nft_id):
        self.t_s = t_s
        self.nft_id = nft_id


class TestTemporalSplit:
    def test_95_5(self):
        rows = [_Row(i, f"n{i}") for i in range(100)]
        train, test = temporal_split(rows, 0.95)
        assert len(train) == 95 and len(test) == 5

    def test_id_tiebreak_when_equal_times(self):
        rows = [_Row(5, f"n{i:03d}") for i in range(10)]
        train, test = temporal_split(rows, 0.8)
        assert [r.nft_id for r in test] == ["n008", "n009"]

    def test_time_ordering(self):
        rng = np.random.default_rng(13)
        rows = [_Row(int(rng.integers(0, 1000)), f"n{i}") for i in range(200)]
        train, test = temporal_split(rows, 0.95)
        assert max(r.t_s for r in train) <= min(r.t_s for r in test)


class TestOversample:
    def test_balances_exactly(self):
        rng = np.random.default_rng(14)
        X = rng.uniform(size=(100, 2))
        y = np.array([1] * 10 + [0] * 90)
        X2, y2 = random_oversample(X, y, seed=0)
        assert int((y2 == 1).sum()) == 90 and int((y2 == 0).sum()) == 90

    def test_balanced_input_unchanged(self):
        X = np.arange(8.0).reshape(4, 2)
        y = np.array([0, 1, 0, 1])
        X2, y2 = random_oversample(X, y, seed=0)
        np.testing.assert_array_equal(X2, X)

    def test_duplicates_are_exact_copies(self):
        rng = np.random.default_rng(15)
        X = rng.uniform(size=(50, 3))
        y = np.array([1] * 5 + [0] * 45)
        X2, y2 = random_oversample(X, y, seed=1)
        originals = {tuple(row) for row in X[y == 1]}
        for row in X2[50:]:
            assert tuple(row) in originals

    def test_single_class_error(self):
        with pytest.raises(ValueError):
            random_oversample(np.ones((3, 1)), np.ones(3), seed=0)
