"""Kernel-based subspace alignment between prototype and test features.

Transfer component analysis: stack source and target features, build a
kernel matrix K, and find the projection W that minimizes the
mean-embedding discrepancy ``tr(W^T K L K W)`` plus an l2 penalty,
subject to the variance constraint ``W^T K H K W = I``.  The solution is
the dominant eigenvectors of ``(K L K + mu I)^{-1} K H K``, solved here
as a symmetric-definite generalized eigenproblem.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator
from sklearn.metrics.pairwise import linear_kernel, rbf_kernel

from .errors import NumericError
from .validation import check_features


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice: ``linear`` or ``rbf`` with an explicit bandwidth or
    the median heuristic."""

    kind: str = "linear"
    rbf_bandwidth: float | str = "median-heuristic"

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"kernel kind must be 'linear' or 'rbf', got {self.kind!r}")
        if self.kind == "rbf" and not isinstance(self.rbf_bandwidth, str):
            if self.rbf_bandwidth <= 0:
                raise ValueError("rbf bandwidth must be positive")


def median_heuristic_bandwidth(X) -> float:
    """Median of the nonzero pairwise Euclidean distances."""
    X = check_features(X)
    d2 = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    upper = d2[np.triu_indices(len(X), k=1)]
    positive = upper[upper > 0]
    if positive.size == 0:
        return 1.0
    return float(np.sqrt(np.median(positive)))


def kernel_matrix(X, Y=None, spec: KernelSpec = KernelSpec()) -> np.ndarray:
    """Gram matrix under the configured kernel (bandwidth resolved on X)."""
    X = check_features(X)
    Y = X if Y is None else check_features(Y)
    if spec.kind == "linear":
        return linear_kernel(X, Y)
    bw = spec.rbf_bandwidth
    if isinstance(bw, str):
        bw = median_heuristic_bandwidth(X)
    return rbf_kernel(X, Y, gamma=1.0 / (2.0 * bw**2))


def mmd_distance(A, B, spec: KernelSpec = KernelSpec()) -> float:
    """Squared kernel mean-embedding distance between two feature sets.

    For the linear kernel this is exactly the squared Euclidean distance
    of the two sample means.
    """
    A = check_features(A)
    B = check_features(B)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind == "linear":
        diff = A.mean(axis=0) - B.mean(axis=0)
        return float(diff @ diff)
    stacked = np.vstack([A, B])
    bw = spec.rbf_bandwidth
    resolved = KernelSpec("rbf", median_heuristic_bandwidth(stacked) if isinstance(bw, str) else bw)
    kaa = kernel_matrix(A, A, resolved)
    kbb = kernel_matrix(B, B, resolved)
    kab = kernel_matrix(A, B, resolved)
    return float(kaa.mean() + kbb.mean() - 2.0 * kab.mean())


def mmd_scaling_matrix(n_s: int, n_t: int) -> np.ndarray:
    """The (n_s+n_t)^2 scaling matrix: 1/n_s^2 on source-source blocks,
    1/n_t^2 on target-target, -1/(n_s n_t) across domains."""
    e = np.concatenate([np.full(n_s, 1.0 / n_s), np.full(n_t, -1.0 / n_t)])
    return np.outer(e, e)


def centering_matrix(n: int) -> np.ndarray:
    """H = I - 11^T / n; annihilates the constant vector."""
    return np.eye(n) - np.ones((n, n)) / n


class TransferComponentAnalysis(BaseEstimator):
    """Fit a shared subspace over (source, target) and project both.

    Parameters
    ----------
    n_components : requested subspace dimension m; clamped to
        ``n_s + n_t - 1`` and shrunk further if the constraint operator
        has lower effective rank (a warning is issued and the final
        value is stored as ``effective_components_``).
    mu : regularization weight, > 0.
    kernel, rbf_bandwidth : see :class:`KernelSpec`.

    Fitted attributes: ``K_``, ``L_``, ``H_``, ``W_``, ``eigenvalues_``,
    ``n_source_``, ``n_target_``, ``effective_components_``.
    """

    def __init__(self, n_components=150, mu=1.0, kernel="linear", rbf_bandwidth="median-heuristic"):
        self.n_components = n_components
        self.mu = mu
        self.kernel = kernel
        self.rbf_bandwidth = rbf_bandwidth

    def fit(self, Xs, Xt):
        Xs = check_features(Xs)
        Xt = check_features(Xt)
        if Xs.shape[1] != Xt.shape[1]:
            raise ValueError("source and target dimension mismatch")
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        n_s, n_t = len(Xs), len(Xt)
        n = n_s + n_t
        m = min(int(self.n_components), n - 1) if n > 1 else 1

        spec = KernelSpec(self.kernel, self.rbf_bandwidth)
        K = kernel_matrix(np.vstack([Xs, Xt]), spec=spec)
        if not np.all(np.isfinite(K)):
            raise NumericError("kernel matrix contains non-finite entries")
        K = (K + K.T) / 2.0
        L = mmd_scaling_matrix(n_s, n_t)
        H = centering_matrix(n)

        A = K @ H @ K  # variance operator (constraint side)
        B = K @ L @ K + self.mu * np.eye(n)  # discrepancy + regularizer
        A = (A + A.T) / 2.0
        B = (B + B.T) / 2.0
        try:
            eigvals, eigvecs = scipy.linalg.eigh(A, B)
        except scipy.linalg.LinAlgError as exc:
            raise NumericError(f"generalized eigensolver failed: {exc}") from exc

        order = np.argsort(eigvals)[::-1]
        eigvals, eigvecs = eigvals[order], eigvecs[:, order]
        positive = eigvals > max(eigvals[0], 0.0) * 1e-9
        effective = int(min(m, positive.sum()))
        if effective < m:
            warnings.warn(
                f"subspace dimension shrunk from {m} to {effective} (operator rank)",
                RuntimeWarning,
                stacklevel=2,
            )
        if effective < 1:
            raise NumericError("constraint operator K H K has no positive spectrum")

        vals = eigvals[:effective]
        W = eigvecs[:, :effective] / np.sqrt(vals)  # enforce W^T (KHK) W = I
        flip = W[np.abs(W).argmax(axis=0), np.arange(effective)] < 0
        W[:, flip] *= -1.0

        self.K_ = K
        self.L_ = L
        self.H_ = H
        self.W_ = W
        self.eigenvalues_ = vals
        self.n_source_ = n_s
        self.n_target_ = n_t
        self.effective_components_ = effective
        return self

    def transform_fitted(self):
        """Projected rows for the fitted stack: (source m-dim, target m-dim).

        Rows are the domain-indexed columns of ``W^T K``.
        """
        proj = (self.W_.T @ self.K_).T  # (n, m)
        return proj[: self.n_source_], proj[self.n_source_ :]

    def fit_transform(self, Xs, Xt):
        return self.fit(Xs, Xt).transform_fitted()


class IdentityAlignment(BaseEstimator):
    """No-op stand-in for the subspace step (the 'none' ablation arm)."""

    def fit(self, Xs, Xt):
        self.source_ = check_features(Xs)
        self.target_ = check_features(Xt)
        return self

    def transform_fitted(self):
        return self.source_, self.target_

    def fit_transform(self, Xs, Xt):
        return self.fit(Xs, Xt).transform_fitted()
