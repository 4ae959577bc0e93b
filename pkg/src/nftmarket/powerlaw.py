"""Maximum-likelihood power-law tail fitting.

Supports continuous and discrete samples. With a fixed lower cutoff the
exponent comes from the closed-form MLE; otherwise the cutoff is chosen
by minimizing the Kolmogorov-Smirnov distance between the empirical
tail and the fitted model over candidate cutoffs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

MIN_TAIL = 10

# Cap on KS-scan candidates; above this, quantile-spaced unique values are used.
MAX_XMIN_CANDIDATES = 200


@dataclass(frozen=True)
class PowerLawFit:
    """Fitted tail pdf P(x) ~ x**exponent for x >= xmin (exponent < -1)."""

    exponent: float
    xmin: float
    n_tail: int
    loglik: float
    discrete: bool
    ks_distance: float | None = None

    @property
    def alpha(self) -> float:
        """Positive exponent magnitude (pdf ~ x**-alpha)."""
        return -self.exponent


def _mle_alpha(tail: np.ndarray, xmin: float, discrete: bool) -> float:
    shift = xmin - 0.5 if discrete else xmin
    log_sum = float(np.sum(np.log(tail / shift)))
    if log_sum <= 0.0:
        raise ValueError("degenerate tail: all samples at xmin")
    return 1.0 + len(tail) / log_sum


def _loglik(tail: np.ndarray, xmin: float, alpha: float, discrete: bool) -> float:
    n = len(tail)
    if discrete:
        return -n * float(np.log(zeta(alpha, xmin))) - alpha * float(np.sum(np.log(tail)))
    return n * float(np.log((alpha - 1.0) / xmin)) - alpha * float(np.sum(np.log(tail / xmin)))


def _ks_continuous(sorted_tail: np.ndarray, xmin: float, alpha: float) -> float:
    n = len(sorted_tail)
    model = 1.0 - (sorted_tail / xmin) ** (1.0 - alpha)
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(np.maximum(np.abs(upper - model), np.abs(lower - model)).max())


def _ks_discrete(sorted_tail: np.ndarray, xmin: float, alpha: float) -> float:
    values, counts = np.unique(sorted_tail, return_counts=True)
    emp = np.cumsum(counts) / len(sorted_tail)
    z = zeta(alpha, xmin)
    model = 1.0 - zeta(alpha, values + 1.0) / z
    return float(np.abs(emp - model).max())


def _fit_at(samples: np.ndarray, xmin: float, discrete: bool) -> PowerLawFit:
    tail = samples[samples >= xmin]
    if len(tail) < MIN_TAIL:
        raise ValueError(f"insufficient tail: {len(tail)} samples >= xmin={xmin}, need {MIN_TAIL}")
    alpha = _mle_alpha(tail, xmin, discrete)
    sorted_tail = np.sort(tail)
    ks = _ks_discrete(sorted_tail, xmin, alpha) if discrete else _ks_continuous(sorted_tail, xmin, alpha)
    return PowerLawFit(
        exponent=-alpha,
        xmin=float(xmin),
        n_tail=int(len(tail)),
        loglik=_loglik(tail, xmin, alpha, discrete),
        discrete=discrete,
        ks_distance=ks,
    )


def fit_power_law(samples, xmin: float | None = None, discrete: bool | None = None) -> PowerLawFit:
    """Fit a power-law tail by maximum likelihood.

    Parameters
    ----------
    samples : array-like of positive values
    xmin : lower cutoff; when None it is selected by KS-distance
        minimization over candidate cutoffs taken from the sample.
    discrete : force the discrete or continuous estimator; None
        auto-detects (all-integral samples use the discrete form).

    Returns a PowerLawFit with the pdf-exponent sign convention
    (exponent = -alpha < -1).
    """
    arr = np.asarray(samples, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("insufficient tail: no samples")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("samples must be positive and finite")
    if discrete is None:
        discrete = bool(np.all(arr == np.round(arr)))
    if xmin is not None:
        if xmin <= 0:
            raise ValueError("xmin must be positive")
        return _fit_at(arr, float(xmin), discrete)

    if arr.size < MIN_TAIL:
        raise ValueError(f"insufficient tail: {arr.size} samples, need {MIN_TAIL}")
    candidates = np.unique(arr)
    # Leave at least MIN_TAIL samples above the largest candidate cutoff.
    sorted_arr = np.sort(arr)
    max_cut = sorted_arr[-MIN_TAIL]
    candidates = candidates[candidates <= max_cut]
    if candidates.size == 0:
        raise ValueError(f"insufficient tail: fewer than {MIN_TAIL} samples above any cutoff")
    if candidates.size > MAX_XMIN_CANDIDATES:
        idx = np.unique(np.linspace(0, candidates.size - 1, MAX_XMIN_CANDIDATES).astype(int))
        candidates = candidates[idx]

    best: PowerLawFit | None = None
    for cand in candidates:
        try:
            fit = _fit_at(arr, float(cand), discrete)
        except ValueError:
            continue
        if best is None or fit.ks_distance < best.ks_distance:
            best = fit
    if best is None:
        raise ValueError("degenerate tail: no valid cutoff found")
    return best
