"""Regression and classification models over NFT feature rows.

Feature columns are normalized toward Gaussian shape (log1p on degree
and price columns, Box-Cox on the rate-like columns) and min-max scaled
to [0, 1] with statistics frozen on the training split.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy import stats
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from nftmarket.validation import as_float_matrix, check_consistent_length, check_fitted

LOG1P_COLUMNS = ("k_buyer", "k_seller", "median_price")
BOXCOX_COLUMNS = ("pr_buyer", "pr_seller", "p_resale")

_BOXCOX_SHIFT_EPS = 1e-9
_MIN_POSITIVE = 1e-12


def boxcox_apply(x: np.ndarray, lam: float) -> np.ndarray:
    """Box-Cox power transform; lam=0 is the log limit."""
    x = np.maximum(x, _MIN_POSITIVE)
    if lam == 0.0:
        return np.log(x)
    return (x**lam - 1.0) / lam


def boxcox_mle_lambda(x: np.ndarray) -> float:
    """Maximum-likelihood Box-Cox exponent for strictly positive data."""
    if np.all(x == x[0]):
        return 1.0
    return float(stats.boxcox_normmax(x, method="mle"))


class FeatureTransform(BaseEstimator, TransformerMixin):
    """Column-wise normalization with train-frozen parameters.

    log1p on ``log1p_columns``, Box-Cox (with a shift making values
    strictly positive) on ``boxcox_columns``, passthrough elsewhere;
    then min-max to [0, 1] using training-split extrema, with transform
    output clipped into [0, 1]. Training columns without variance are
    dropped with a warning.
    """

    def __init__(
        self,
        columns: Sequence[str],
        log1p_columns: Sequence[str] = LOG1P_COLUMNS,
        boxcox_columns: Sequence[str] = BOXCOX_COLUMNS,
    ):
        self.columns = tuple(columns)
        self.log1p_columns = tuple(log1p_columns)
        self.boxcox_columns = tuple(boxcox_columns)

    def _pre_scale(self, X: np.ndarray) -> np.ndarray:
        out = np.empty_like(X)
        for j, name in enumerate(self.columns):
            col = X[:, j]
            if name in self.log1p_columns:
                out[:, j] = np.log1p(col)
            elif name in self.boxcox_columns:
                shifted = col + self.shifts_[j]
                out[:, j] = boxcox_apply(shifted, self.lambdas_[j])
            else:
                out[:, j] = col
        return out

    def fit(self, X, y=None):
        X = as_float_matrix(X)
        if X.shape[1] != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} columns, got {X.shape[1]}")
        p = X.shape[1]
        self.shifts_ = np.zeros(p)
        self.lambdas_ = np.ones(p)
        for j, name in enumerate(self.columns):
            if name in self.boxcox_columns:
                col = X[:, j]
                lo = col.min()
                if lo <= 0:
                    self.shifts_[j] = _BOXCOX_SHIFT_EPS - lo
                self.lambdas_[j] = boxcox_mle_lambda(col + self.shifts_[j])
        pre = self._pre_scale(X)
        self.mins_ = pre.min(axis=0)
        self.maxs_ = pre.max(axis=0)
        spans = self.maxs_ - self.mins_
        kept = spans > 0
        if not np.all(kept):
            dead = [self.columns[j] for j in np.flatnonzero(~kept)]
            warnings.warn(f"dropping zero-variance features: {dead}", RuntimeWarning, stacklevel=2)
        self.kept_mask_ = kept
        self.kept_columns_ = tuple(c for c, k in zip(self.columns, kept) if k)
        return self

    def transform(self, X) -> np.ndarray:
        check_fitted(self, "kept_mask_")
        X = as_float_matrix(X)
        pre = self._pre_scale(X)
        spans = np.where(self.kept_mask_, self.maxs_ - self.mins_, 1.0)
        scaled = (pre - self.mins_) / spans
        return np.clip(scaled[:, self.kept_mask_], 0.0, 1.0)


@dataclass
class RegressionReport:
    """OLS fit summary (constant term listed first)."""

    feature_names: list[str]
    beta: np.ndarray
    p_values: np.ndarray
    significance: list[str]
    r2: float
    r2_adj: float
    n_samples: int
    n_features: int
    target_spec: str = ""
    n_collections: int | None = None

    def coefficient(self, name: str) -> float:
        return float(self.beta[self.feature_names.index(name)])


def _significance_flag(p: float) -> str:
    if p < 0.01:
        return "<0.01"
    if p > 0.05:
        return ">0.05"
    return "0.01-0.05"


class OlsRegression(BaseEstimator):
    """Ordinary least squares with homoskedastic t-test diagnostics."""

    def fit(self, X, y):
        X = as_float_matrix(X)
        y = np.asarray(y, dtype=np.float64).ravel()
        check_consistent_length(X, y)
        n, p = X.shape
        if n <= p + 1:
            raise ValueError(f"need more than {p + 1} samples for {p} features, got {n}")
        design = np.column_stack([np.ones(n), X])
        q, r, pivots = scipy.linalg.qr(design, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        tol = diag.max() * max(design.shape) * np.finfo(float).eps
        rank = int(np.sum(diag > tol))
        if rank < p + 1:
            bad = sorted(pivots[rank:])
            names = ["const"] + [f"x{j}" for j in range(p)]
            raise ValueError(f"rank-deficient design: collinear columns {[names[b] for b in bad]}")
        beta, *_ = np.linalg.lstsq(design, y, rcond=None)
        resid = y - design @ beta
        ssr = float(resid @ resid)
        sst = float(((y - y.mean()) ** 2).sum())
        if sst == 0:
            raise ValueError("constant target: R^2 undefined")
        dof = n - p - 1
        sigma2 = ssr / dof
        cov = sigma2 * np.linalg.inv(design.T @ design)
        se = np.sqrt(np.diag(cov))
        with np.errstate(divide="ignore", invalid="ignore"):
            t_stats = np.where(se > 0, beta / se, np.inf)
        self.coef_ = beta[1:]
        self.intercept_ = float(beta[0])
        self.beta_ = beta
        self.p_values_ = 2.0 * stats.t.sf(np.abs(t_stats), dof)
        self.r2_ = 1.0 - ssr / sst
        self.r2_adj_ = 1.0 - (1.0 - self.r2_) * (n - 1) / dof
        self.n_samples_ = n
        self.n_features_ = p
        return self

    def predict(self, X) -> np.ndarray:
        check_fitted(self, "beta_")
        X = as_float_matrix(X)
        return self.intercept_ + X @ self.coef_

    def report(self, feature_names: Sequence[str] | None = None, target_spec: str = "") -> RegressionReport:
        check_fitted(self, "beta_")
        names = list(feature_names) if feature_names else [f"x{j}" for j in range(self.n_features_)]
        if len(names) != self.n_features_:
            raise ValueError("feature_names length mismatch")
        return RegressionReport(
            feature_names=["const"] + names,
            beta=self.beta_.copy(),
            p_values=self.p_values_.copy(),
            significance=[_significance_flag(p) for p in self.p_values_],
            r2=float(self.r2_),
            r2_adj=float(self.r2_adj_),
            n_samples=self.n_samples_,
            n_features=self.n_features_,
            target_spec=target_spec,
        )


def ols_fit(X, y, feature_names: Sequence[str] | None = None, target_spec: str = "") -> RegressionReport:
    """Least-squares fit with adjusted R^2 and per-coefficient p-values."""
    return OlsRegression().fit(X, y).report(feature_names, target_spec)


@dataclass
class _Stump:
    feature: int
    threshold: float
    polarity: int  # +1: predict +1 above threshold; -1: flipped
    alpha: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        above = X[:, self.feature] > self.threshold
        return np.where(above, self.polarity, -self.polarity).astype(np.float64)


class AdaBoostStumps(BaseEstimator, ClassifierMixin):
    """Discrete AdaBoost over depth-1 threshold stumps.

    Each round picks the stump minimizing weighted error over the
    sorted unique values of every feature, weights the stump by
    ``lr * 0.5 * ln((1 - err) / err)``, and reweights samples. Training
    stops early on a perfect stump or when no stump beats 0.5.
    """

    def __init__(self, n_estimators: int = 100, learning_rate: float = 1.0):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate

    def fit(self, X, y):
        X = as_float_matrix(X)
        y = np.asarray(y).ravel()
        check_consistent_length(X, y)
        classes = np.unique(y)
        if not np.all(np.isin(classes, (0, 1))):
            raise ValueError("labels must be 0/1")
        t = np.where(y == 1, 1.0, -1.0)
        n, p = X.shape
        orders = [np.argsort(X[:, j], kind="stable") for j in range(p)]
        boundaries = []
        for j in range(p):
            vals = X[orders[j], j]
            is_last = np.ones(n, dtype=bool)
            is_last[:-1] = vals[:-1] != vals[1:]
            boundaries.append(np.flatnonzero(is_last))

        w = np.full(n, 1.0 / n)
        self.stumps_: list[_Stump] = []
        self.train_errors_: list[float] = []
        for _ in range(self.n_estimators):
            best_err = np.inf
            best = None
            for j in range(p):
                order = orders[j]
                vals = X[order, j]
                wpos = np.where(t[order] > 0, w[order], 0.0)
                wneg = np.where(t[order] < 0, w[order], 0.0)
                cpos = np.cumsum(wpos)
                cneg = np.cumsum(wneg)
                total_neg = cneg[-1]
                b = boundaries[j]
                # stump(+1): predict -1 at or below threshold, +1 above
                err_plus = cpos[b] + (total_neg - cneg[b])
                err_minus = 1.0 - err_plus
                for errs, polarity in ((err_plus, 1), (err_minus, -1)):
                    i = int(np.argmin(errs))
                    if errs[i] < best_err - 1e-15:
                        best_err = float(errs[i])
                        best = _Stump(feature=j, threshold=float(vals[b[i]]), polarity=polarity, alpha=0.0)
            if best is None or best_err >= 0.5:
                break
            eps = min(max(best_err, 1e-12), 1 - 1e-12)
            best.alpha = self.learning_rate * 0.5 * math.log((1.0 - eps) / eps)
            self.stumps_.append(best)
            self.train_errors_.append(best_err)
            if best_err == 0.0:
                break
            w = w * np.exp(-best.alpha * t * best.predict(X))
            w = w / w.sum()
        return self

    def decision_function(self, X) -> np.ndarray:
        check_fitted(self, "stumps_")
        X = as_float_matrix(X)
        scores = np.zeros(len(X))
        for stump in self.stumps_:
            scores += stump.alpha * stump.predict(X)
        return scores

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)


@dataclass
class ClassifierReport:
    """Threshold-0 F1 plus rank-based AUC on held-out data."""

    f1: float
    auc: float | None
    tp: int
    fp: int
    tn: int
    fn: int
    n_test: int
    window: str = ""
    feature_set: str = ""
    auc_undefined: bool = False


def f1_score(y_true, y_pred) -> float:
    y_true = np.asarray(y_true).ravel()
    y_pred = np.asarray(y_pred).ravel()
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def auc_score(y_true, scores) -> float | None:
    """Rank statistic with tie-averaging; None when a class is missing."""
    y_true = np.asarray(y_true).ravel()
    scores = np.asarray(scores, dtype=np.float64).ravel()
    n_pos = int(np.sum(y_true == 1))
    n_neg = int(np.sum(y_true == 0))
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = stats.rankdata(scores)
    pos_rank_sum = float(ranks[y_true == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate_classifier(model: AdaBoostStumps, X, y, window: str = "", feature_set: str = "") -> ClassifierReport:
    """Confusion counts, F1 at score threshold 0, and tie-aware AUC."""
    X = as_float_matrix(X)
    y = np.asarray(y).ravel()
    if len(y) == 0:
        raise ValueError("empty test set")
    scores = model.decision_function(X)
    pred = (scores > 0).astype(np.int64)
    auc = auc_score(y, scores)
    return ClassifierReport(
        f1=f1_score(y, pred),
        auc=auc,
        tp=int(np.sum((y == 1) & (pred == 1))),
        fp=int(np.sum((y == 0) & (pred == 1))),
        tn=int(np.sum((y == 0) & (pred == 0))),
        fn=int(np.sum((y == 1) & (pred == 0))),
        n_test=len(y),
        window=window,
        feature_set=feature_set,
        auc_undefined=auc is None,
    )


def temporal_split(rows: Sequence, train_frac: float = 0.95) -> tuple[list, list]:
    """Stable sort by (t_s, nft_id); first floor(frac*n) rows train."""
    ordered = sorted(rows, key=lambda r: (r.t_s, r.nft_id))
    cut = int(len(ordered) * train_frac)
    return ordered[:cut], ordered[cut:]


def random_oversample(X, y, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Duplicate minority rows uniformly at random until classes balance."""
    X = as_float_matrix(X)
    y = np.asarray(y).ravel()
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("oversampling needs both classes present")
    if n_pos == n_neg:
        return X.copy(), y.copy()
    minority = 1 if n_pos < n_neg else 0
    deficit = abs(n_pos - n_neg)
    rng = np.random.default_rng(seed)
    pool = np.flatnonzero(y == minority)
    extra = pool[rng.integers(0, len(pool), size=deficit)]
    return np.vstack([X, X[extra]]), np.concatenate([y, y[extra]])
