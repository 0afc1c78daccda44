"""Order-statistic bookkeeping: thresholds, excesses, concomitant covariates.

Given a raw sample, the threshold is the (n-k)-th ascending order statistic
and the excesses are the top k observations minus that threshold, ordered
from largest to smallest. Covariates attached to the original observations
travel with them ("concomitants").
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ExcessData", "extract_excesses"]


@dataclass(frozen=True)
class ExcessData:
    """Top-k excesses over the empirical threshold of a sample of size n.

    excesses[i-1] is the i-th largest observation minus the threshold, so
    the sequence is descending. concomitants, when present, holds the
    covariate row of the same original observation in matching positions.
    """

    threshold: float
    excesses: np.ndarray
    n: int
    k: int
    concomitants: np.ndarray | None = None

    def __post_init__(self):
        z = np.asarray(self.excesses, dtype=float)
        object.__setattr__(self, "excesses", z)
        if not (1 <= self.k < self.n):
            raise ValueError(f"need 1 <= k < n, got k={self.k}, n={self.n}")
        if z.shape != (self.k,):
            raise ValueError(f"expected {self.k} excesses, got shape {z.shape}")
        if z.size and z.min() < 0.0:
            raise ValueError("excesses must be nonnegative")
        if self.concomitants is not None:
            X = np.asarray(self.concomitants, dtype=float)
            if X.ndim == 1:
                X = X[:, None]
            if X.shape[0] != self.k:
                raise ValueError(f"concomitants must have {self.k} rows, got {X.shape[0]}")
            object.__setattr__(self, "concomitants", X)


def extract_excesses(y, k: int, X=None) -> ExcessData:
    """Split a raw sample into threshold + descending excesses (+ concomitants).

    Ties are broken by original index ascending (stable sort), so results
    are reproducible for any input order.

    Raises ValueError when k is out of range or any covariate entry leaves
    the unit cube; the error message names the first offending row.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("y must be one-dimensional")
    n = y.size
    if not (1 <= k < n):
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    if X is not None:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]  # a flat vector is a single covariate column
        if X.shape[0] != n:
            raise ValueError(f"covariate matrix must have {n} rows, got {X.shape[0]}")
        bad = ~np.all((X >= 0.0) & (X <= 1.0), axis=1)
        if bad.any():
            i = int(np.argmax(bad))
            raise ValueError(f"covariate row {i} outside [0,1]^d: {X[i]}")

    order = np.argsort(y, kind="stable")  # ascending value, ties by index
    threshold = float(y[order[n - k - 1]])
    top = order[n - k:][::-1]  # largest first
    excesses = y[top] - threshold
    conc = X[top] if X is not None else None
    return ExcessData(threshold=threshold, excesses=excesses, n=n, k=k, concomitants=conc)
