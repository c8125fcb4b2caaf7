"""Distributional diagnostics for transported particle samples."""

from __future__ import annotations

import numpy as np
from scipy import stats

__all__ = ["mardia_skewness", "mardia_skewness_pvalue"]


def mardia_skewness(x: np.ndarray):
    """Multivariate skewness statistic and its chi-square degrees of freedom.

    For a sample (n, d) the statistic is  n * b1 / 6  with
    b1 = mean over all pairs (i, j) of (g_ij)^3 and
    g_ij = (x_i - mean)' S^{-1} (x_j - mean),  S the MLE covariance.
    Under multivariate normality it is asymptotically chi-square with
    d (d + 1) (d + 2) / 6 degrees of freedom.
    """
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / n
    g = centered @ np.linalg.solve(cov, centered.T)
    b1 = float((g**3).mean())
    dof = d * (d + 1) * (d + 2) // 6
    return n * b1 / 6.0, dof


def mardia_skewness_pvalue(x: np.ndarray) -> float:
    stat, dof = mardia_skewness(x)
    return float(stats.chi2.sf(stat, dof))
