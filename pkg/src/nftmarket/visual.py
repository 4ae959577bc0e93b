"""Visual-embedding analysis: cosine-distance structure, principal
components, and inter/intra group distance ratios."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from nftmarket.embeddings import PCA_MAGIC, EmbeddingMatrix, read_embeddings, write_embeddings
from nftmarket.validation import as_float_matrix, check_fitted


def cosine_distance(u, v) -> float:
    """1 - cos(u, v); 0 for identical directions, 1 for orthogonal ones."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine distance undefined for zero-norm vectors")
    return float(1.0 - np.dot(u, v) / (nu * nv))


@dataclass
class DistanceSummary:
    """Mean/std cosine distance per group pair (diagonal = intra-group).

    Cells with no valid pair (singleton groups) hold NaN and n_pairs 0.
    """

    labels: list[str]
    mean: np.ndarray
    std: np.ndarray
    n_pairs: np.ndarray

    def cell(self, a: str, b: str) -> tuple[float, float, int]:
        i, j = self.labels.index(a), self.labels.index(b)
        return float(self.mean[i, j]), float(self.std[i, j]), int(self.n_pairs[i, j])


def _intra_pairs(n: int, cap: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    total = n * (n - 1) // 2
    if total <= cap:
        return np.triu_indices(n, k=1)
    i = rng.integers(0, n, size=cap)
    j = rng.integers(0, n, size=cap)
    clash = i == j
    while clash.any():
        j[clash] = rng.integers(0, n, size=int(clash.sum()))
        clash = i == j
    return i, j


def _cross_pairs(na: int, nb: int, cap: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    total = na * nb
    if total <= cap:
        ii, jj = np.meshgrid(np.arange(na), np.arange(nb), indexing="ij")
        return ii.ravel(), jj.ravel()
    return rng.integers(0, na, size=cap), rng.integers(0, nb, size=cap)


def group_distance_matrix(
    emb: EmbeddingMatrix,
    grouping: Mapping[str, str],
    max_pairs_per_cell: int = 100_000,
    seed: int = 0,
) -> DistanceSummary:
    """Mean/std cosine distance within and between groups.

    Each cell is estimated over at most max_pairs_per_cell uniformly
    sampled pairs (exhaustive when the cell is smaller than the cap);
    a fixed seed makes the estimate reproducible bit-for-bit.
    """
    members: dict[str, list[int]] = {}
    for id_, label in grouping.items():
        if id_ in emb:
            members.setdefault(label, []).append(emb.index[id_])
    labels = sorted(members)
    if not labels:
        raise ValueError("grouping matches no embedding ids")
    norms = np.linalg.norm(emb.vectors, axis=1)
    used = sorted({i for idx in members.values() for i in idx})
    if np.any(norms[used] == 0):
        raise ValueError("zero-norm embedding vector in a requested group")
    unit = emb.vectors[:, :].astype(np.float64)
    unit[used] = unit[used] / norms[used, None]

    g = len(labels)
    mean = np.full((g, g), np.nan)
    std = np.full((g, g), np.nan)
    n_pairs = np.zeros((g, g), dtype=np.int64)
    rng = np.random.default_rng(seed)
    for a in range(g):
        rows_a = np.array(members[labels[a]])
        for b in range(a, g):
            if a == b:
                if len(rows_a) < 2:
                    continue
                i, j = _intra_pairs(len(rows_a), max_pairs_per_cell, rng)
                dists = 1.0 - np.einsum("ij,ij->i", unit[rows_a[i]], unit[rows_a[j]])
            else:
                rows_b = np.array(members[labels[b]])
                i, j = _cross_pairs(len(rows_a), len(rows_b), max_pairs_per_cell, rng)
                dists = 1.0 - np.einsum("ij,ij->i", unit[rows_a[i]], unit[rows_b[j]])
            mean[a, b] = mean[b, a] = dists.mean()
            std[a, b] = std[b, a] = dists.std()
            n_pairs[a, b] = n_pairs[b, a] = len(dists)
    return DistanceSummary(labels=labels, mean=mean, std=std, n_pairs=n_pairs)


class EmbeddingPca(BaseEstimator, TransformerMixin):
    """Principal components by randomized block power iteration.

    Works on matrix-vector products with the centered data, so the
    covariance matrix is never materialized; iteration stops when the
    leading eigenvalues change by less than ``tol`` (relative).
    """

    def __init__(self, n_components: int = 5, tol: float = 1e-6, max_iter: int = 1000,
                 oversample: int = 5, seed: int = 0):
        self.n_components = n_components
        self.tol = tol
        self.max_iter = max_iter
        self.oversample = oversample
        self.seed = seed

    def fit(self, X, y=None):
        X = as_float_matrix(X)
        n, d = X.shape
        k = self.n_components
        if n < k + 1:
            raise ValueError(f"need at least {k + 1} samples to fit {k} components, got {n}")
        self.mean_ = X.mean(axis=0)
        Xc = X - self.mean_
        total_var = float((Xc**2).sum()) / n
        q = min(k + self.oversample, d, n)
        rng = np.random.default_rng(self.seed)
        Q, _ = np.linalg.qr(rng.standard_normal((d, q)))
        prev = None
        for _ in range(self.max_iter):
            Z = Xc @ Q
            gram = (Z.T @ Z) / n
            eigvals = np.sort(np.linalg.eigvalsh(gram))[::-1][:k]
            if prev is not None:
                denom = np.where(np.abs(prev) > 0, np.abs(prev), 1.0)
                if np.max(np.abs(eigvals - prev) / denom) < self.tol:
                    break
            prev = eigvals
            Q, _ = np.linalg.qr(Xc.T @ Z)
        # Rayleigh-Ritz on the converged subspace.
        Z = Xc @ Q
        gram = (Z.T @ Z) / n
        lam, V = np.linalg.eigh(gram)
        order = np.argsort(lam)[::-1]
        lam = lam[order]
        V = V[:, order]
        cutoff = max(total_var, 1.0) * 1e-12
        rank = int(np.sum(lam > cutoff))
        if rank < k:
            warnings.warn(
                f"data rank {rank} below requested {k} components; returning {rank}",
                RuntimeWarning,
                stacklevel=2,
            )
            k = rank
        self.components_ = (Q @ V[:, :k]).T
        self.eigenvalues_ = lam[:k]
        self.explained_variance_ratio_ = self.eigenvalues_ / total_var if total_var > 0 else np.zeros(k)
        return self

    def transform(self, X) -> np.ndarray:
        check_fitted(self, "components_")
        X = as_float_matrix(X)
        if X.shape[1] != self.mean_.shape[0]:
            raise ValueError(f"dimension mismatch: model is {self.mean_.shape[0]}-d, input is {X.shape[1]}-d")
        return (X - self.mean_) @ self.components_.T

    def project(self, v) -> np.ndarray:
        """Scores of a single vector."""
        return self.transform(np.asarray(v).reshape(1, -1))[0]

    def save(self, path: str | Path) -> None:
        """Serialize to the binary container (mean, components, ratios)."""
        check_fitted(self, "components_")
        d = self.mean_.shape[0]
        ratios = np.zeros(d, dtype=np.float32)
        ratios[: len(self.explained_variance_ratio_)] = self.explained_variance_ratio_
        ids = ["mean"] + [f"component_{i + 1:04d}" for i in range(len(self.components_))] + ["ratios"]
        vecs = np.vstack([self.mean_, self.components_, ratios]).astype(np.float32)
        write_embeddings(path, EmbeddingMatrix(ids=ids, vectors=vecs), magic=PCA_MAGIC)

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingPca":
        container = read_embeddings(path, magic=PCA_MAGIC)
        comp_ids = sorted(i for i in container.ids if i.startswith("component_"))
        model = cls(n_components=len(comp_ids))
        model.mean_ = container.get("mean").astype(np.float64)
        model.components_ = np.vstack([container.get(i) for i in comp_ids]).astype(np.float64)
        ratios = container.get("ratios").astype(np.float64)[: len(comp_ids)]
        model.explained_variance_ratio_ = ratios
        model.eigenvalues_ = ratios  # relative scale only; absolute eigenvalues not persisted
        return model


def inter_intra_ratio(
    projections,
    grouping: Sequence[str],
    max_pairs: int = 100_000,
    seed: int = 0,
) -> float:
    """Mean cross-group distance over mean within-group distance.

    Euclidean distances in the projected space, sampled uniformly from
    each pair population when it exceeds the cap.
    """
    X = as_float_matrix(projections)
    labels = np.asarray(list(grouping))
    if len(labels) != len(X):
        raise ValueError("grouping length must match projections")
    unique = sorted(set(labels.tolist()))
    if len(unique) < 2:
        raise ValueError("need at least 2 groups")
    rows = {g: np.flatnonzero(labels == g) for g in unique}
    rng = np.random.default_rng(seed)

    intra_groups = [g for g in unique if len(rows[g]) >= 2]
    if not intra_groups:
        raise ValueError("intra-group distance undefined: all groups are singletons")
    weights = np.array([len(rows[g]) * (len(rows[g]) - 1) // 2 for g in intra_groups], dtype=np.float64)
    total_intra = int(weights.sum())
    intra_dists = []
    if total_intra <= max_pairs:
        per_group = {g: len(rows[g]) * (len(rows[g]) - 1) // 2 for g in intra_groups}
    else:
        counts = rng.multinomial(max_pairs, weights / weights.sum())
        per_group = dict(zip(intra_groups, counts))
    for g in intra_groups:
        cap = per_group[g]
        if cap == 0:
            continue
        i, j = _intra_pairs(len(rows[g]), cap, rng)
        diff = X[rows[g][i]] - X[rows[g][j]]
        intra_dists.append(np.linalg.norm(diff, axis=1))
    intra_mean = float(np.concatenate(intra_dists).mean())

    pairs = [(a, b) for ai, a in enumerate(unique) for b in unique[ai + 1:]]
    weights = np.array([len(rows[a]) * len(rows[b]) for a, b in pairs], dtype=np.float64)
    total_inter = int(weights.sum())
    if total_inter <= max_pairs:
        per_pair = {p: len(rows[p[0]]) * len(rows[p[1]]) for p in pairs}
    else:
        counts = rng.multinomial(max_pairs, weights / weights.sum())
        per_pair = dict(zip(pairs, counts))
    inter_dists = []
    for (a, b), cap in per_pair.items():
        if cap == 0:
            continue
        i, j = _cross_pairs(len(rows[a]), len(rows[b]), cap, rng)
        diff = X[rows[a][i]] - X[rows[b][j]]
        inter_dists.append(np.linalg.norm(diff, axis=1))
    inter_mean = float(np.concatenate(inter_dists).mean())
    if intra_mean == 0:
        raise ValueError("intra-group distances are all zero; ratio undefined")
    return inter_mean / intra_mean
