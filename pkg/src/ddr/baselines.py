"""Classical linear reducers and the downstream evaluators.

SIR slices the response into quantile bins and eigendecomposes the
between-slice mean outer product of the whitened predictors; SAVE does
the same with (I - slice covariance)^2, which also detects symmetric
links that SIR misses.  PCA keeps the top covariance directions.  The
downstream models are OLS with intercept (regression) and Euclidean
k-nearest neighbours with majority vote (classification).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionError, NumericError

__all__ = [
    "sym_eig",
    "LinearReducer",
    "SliceSpec",
    "fit_sir",
    "fit_save",
    "fit_pca",
    "ols_fit_predict",
    "knn_classify",
    "prediction_error",
    "accuracy",
]


def sym_eig(a: np.ndarray, tol: float = 1e-10):
    """Cyclic-Jacobi eigendecomposition of a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues in
    nonincreasing order and eigenvectors as columns, satisfying
    ``||A v - lambda v|| <= 1e-8 ||A||``.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.T).max() > tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    n = a.shape[0]
    mat = 0.5 * (a + a.T)
    vec = np.eye(n)
    if n == 1:
        return mat.diagonal().copy(), vec
    for _ in range(100):
        off = np.abs(mat - np.diag(mat.diagonal()))
        if off.max() <= 1e-14 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = mat[p, q]
                if abs(apq) <= 1e-16 * scale:
                    continue
                # Stable rotation choice (smaller-angle root).
                tau = (mat[q, q] - mat[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                if tau == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                col_p = mat[:, p].copy()
                col_q = mat[:, q].copy()
                mat[:, p] = c * col_p - s * col_q
                mat[:, q] = s * col_p + c * col_q
                row_p = mat[p, :].copy()
                row_q = mat[q, :].copy()
                mat[p, :] = c * row_p - s * row_q
                mat[q, :] = s * row_p + c * row_q
                mat[p, q] = 0.0
                mat[q, p] = 0.0
                vec_p = vec[:, p].copy()
                vec_q = vec[:, q].copy()
                vec[:, p] = c * vec_p - s * vec_q
                vec[:, q] = s * vec_p + c * vec_q
    else:
        raise NumericError("Jacobi sweep did not converge in 100 sweeps")
    values = mat.diagonal().copy()
    order = np.argsort(-values, kind="stable")
    return values[order], vec[:, order]


@dataclass(frozen=True)
class LinearReducer:
    """Orthonormal projection directions with their eigenvalues."""

    directions: np.ndarray  # (p, d)
    method: str  # "sir" | "save" | "pca"
    eigenvalues: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1] != self.directions.shape[0]:
            raise DimensionError(
                f"x has {x.shape[1]} columns, reducer expects "
                f"{self.directions.shape[0]}"
            )
        return x @ self.directions


@dataclass(frozen=True)
class SliceSpec:
    """Quantile slicing of the response used by SIR and SAVE."""

    n_slices: int
    boundaries: np.ndarray


def _slice_assign(y: np.ndarray, n_slices: int):
    """Value-based quantile slices; ties never split (binary y with two
    slices yields exactly the two classes).  Empty slices are merged."""
    y = np.asarray(y, dtype=np.float64).ravel()
    qs = np.quantile(y, np.arange(1, n_slices) / n_slices)
    boundaries = np.asarray(qs, dtype=np.float64)
    assign = np.searchsorted(boundaries, y, side="left")
    present, assign = np.unique(assign, return_inverse=True)
    if len(present) < n_slices:
        warnings.warn(
            f"merged empty slices: {n_slices} requested, {len(present)} nonempty"
        )
    return assign, SliceSpec(len(present), boundaries)


def _whiten(x: np.ndarray, floor: float = 1e-10):
    """Symmetric inverse-sqrt whitening with an eigenvalue floor."""
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / x.shape[0]
    values, vectors = sym_eig(cov)
    values = np.maximum(values, floor)
    inv_sqrt = vectors @ np.diag(1.0 / np.sqrt(values)) @ vectors.T
    return centered @ inv_sqrt, inv_sqrt


def _orthonormalize(b: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(b)
    # Deterministic sign: the largest-magnitude entry of each column is
    # made positive.
    for j in range(q.shape[1]):
        k = np.argmax(np.abs(q[:, j]))
        if q[k, j] < 0:
            q[:, j] = -q[:, j]
    return q


def _check_slice_args(x, y, d, n_slices):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] != y.shape[0]:
        raise DimensionError("x and y have different numbers of rows")
    if n_slices < 2:
        raise ValueError(f"need at least 2 slices, got {n_slices}")
    if x.shape[0] < n_slices:
        raise ValueError("fewer rows than slices")
    if not 1 <= d <= x.shape[1]:
        raise DimensionError(f"d={d} out of range for p={x.shape[1]}")
    return x, y


def fit_sir(x, y, d: int, n_slices: int = 10) -> LinearReducer:
    """Sliced inverse regression on (standardized) predictors."""
    x, y = _check_slice_args(x, y, d, n_slices)
    n = x.shape[0]
    xw, inv_sqrt = _whiten(x)
    assign, _ = _slice_assign(y, n_slices)
    m = np.zeros((x.shape[1], x.shape[1]))
    for h in range(assign.max() + 1):
        rows = xw[assign == h]
        mh = rows.mean(axis=0)
        m += (len(rows) / n) * np.outer(mh, mh)
    values, vectors = sym_eig(m)
    directions = _orthonormalize(inv_sqrt @ vectors[:, :d])
    return LinearReducer(directions, "sir", values[:d])


def fit_save(x, y, d: int, n_slices: int = 10) -> LinearReducer:
    """Sliced average variance estimation (catches symmetric links)."""
    x, y = _check_slice_args(x, y, d, n_slices)
    n = x.shape[0]
    p = x.shape[1]
    xw, inv_sqrt = _whiten(x)
    assign, _ = _slice_assign(y, n_slices)
    m = np.zeros((p, p))
    eye = np.eye(p)
    for h in range(assign.max() + 1):
        rows = xw[assign == h]
        centered = rows - rows.mean(axis=0)
        vh = centered.T @ centered / len(rows)
        diff = eye - vh
        m += (len(rows) / n) * (diff @ diff)
    values, vectors = sym_eig(m)
    directions = _orthonormalize(inv_sqrt @ vectors[:, :d])
    return LinearReducer(directions, "save", values[:d])


def fit_pca(x, d: int) -> LinearReducer:
    """Top-d eigenvectors of the sample covariance."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 2:
        raise ValueError("PCA needs at least 2 rows")
    if not 1 <= d <= x.shape[1]:
        raise DimensionError(f"d={d} out of range for p={x.shape[1]}")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (x.shape[0] - 1)
    values, vectors = sym_eig(cov)
    return LinearReducer(_orthonormalize(vectors[:, :d]), "pca", values[:d])


def ols_fit_predict(f_train, y_train, f_test) -> np.ndarray:
    """Least squares with intercept via normal equations.

    A ridge jitter of 1e-10 (scaled by the Gram trace) is added only
    when the Gram matrix is singular, so exactly-determined problems
    stay exact.
    """
    f_train = np.asarray(f_train, dtype=np.float64)
    f_test = np.asarray(f_test, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    flat = y_train.ndim == 1
    if flat:
        y_train = y_train[:, None]
    a = np.column_stack([np.ones(f_train.shape[0]), f_train])
    gram = a.T @ a
    rhs = a.T @ y_train
    try:
        coef = np.linalg.solve(gram, rhs)
        if not np.isfinite(coef).all():
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        jitter = 1e-10 * max(1.0, gram.trace() / gram.shape[0])
        coef = np.linalg.solve(gram + jitter * np.eye(gram.shape[0]), rhs)
    pred = np.column_stack([np.ones(f_test.shape[0]), f_test]) @ coef
    return pred.ravel() if flat else pred


def knn_classify(f_train, labels_train, f_test, k: int = 5) -> np.ndarray:
    """Euclidean k-NN majority vote.

    Ties are broken by the smallest mean distance among the tied labels'
    neighbours, then by the smallest label.
    """
    f_train = np.asarray(f_train, dtype=np.float64)
    f_test = np.asarray(f_test, dtype=np.float64)
    labels_train = np.asarray(labels_train).ravel()
    if not 1 <= k <= f_train.shape[0]:
        raise ValueError(f"k={k} out of range for {f_train.shape[0]} train rows")
    dist = cdist(f_test, f_train)
    nearest = np.argpartition(dist, k - 1, axis=1)[:, :k]
    out = np.empty(f_test.shape[0], dtype=np.float64)
    for i in range(f_test.shape[0]):
        idx = nearest[i]
        labs = labels_train[idx]
        dists = dist[i, idx]
        candidates = {}
        for lab, dd in zip(labs, dists):
            cnt, tot = candidates.get(lab, (0, 0.0))
            candidates[lab] = (cnt + 1, tot + dd)
        best = min(
            candidates.items(),
            key=lambda kv: (-kv[1][0], kv[1][1] / kv[1][0], kv[0]),
        )
        out[i] = best[0]
    return out


def prediction_error(y_true, y_pred) -> float:
    """Mean squared error on the original response scale."""
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    if y_true.shape != y_pred.shape:
        raise DimensionError("prediction and truth lengths differ")
    return float(np.mean((y_true - y_pred) ** 2))


def rmse(y_true, y_pred) -> float:
    return float(np.sqrt(prediction_error(y_true, y_pred)))


def accuracy(labels_true, labels_pred) -> float:
    """Fraction of exactly matching labels."""
    labels_true = np.asarray(labels_true).ravel()
    labels_pred = np.asarray(labels_pred).ravel()
    if labels_true.shape != labels_pred.shape:
        raise DimensionError("prediction and truth lengths differ")
    return float(np.mean(labels_true == labels_pred))
