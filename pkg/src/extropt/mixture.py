"""Full-covariance Gaussian mixtures fitted by expectation-maximization.

Used to approximate the joint distribution of the historical decision space
(in standard-scaled coordinates) for data-driven population seeding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .errors import FitError, InsufficientDataError

COVARIANCE_REGULARIZATION = 1e-6
EM_TOL = 1e-6
EM_MAX_ITER = 200


@dataclass
class GaussianMixture:
    """Weights, means and full covariances, plus the EM fit trace.

    ``log_likelihoods`` holds the per-iteration mean log-likelihood of the
    fit (non-decreasing by the EM guarantee); hand-built mixtures may leave
    it empty.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    log_likelihoods: list

    @property
    def n_components(self) -> int:
        return self.weights.size

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
            "log_likelihoods": list(self.log_likelihoods),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GaussianMixture":
        return cls(
            weights=np.asarray(payload["weights"], dtype=float),
            means=np.asarray(payload["means"], dtype=float),
            covariances=np.asarray(payload["covariances"], dtype=float),
            log_likelihoods=list(payload["log_likelihoods"]),
        )


def _component_log_density(X: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise FitError("singular component covariance after regularization") from exc
    sol = solve_triangular(L, (X - mean).T, lower=True)
    quad = (sol * sol).sum(axis=0)
    log_det = np.log(np.diag(L)).sum()
    d = X.shape[1]
    return -0.5 * (d * np.log(2.0 * np.pi) + quad) - log_det


def _log_prob_matrix(X: np.ndarray, gmm: GaussianMixture) -> np.ndarray:
    cols = [
        np.log(max(w, np.finfo(float).tiny)) + _component_log_density(X, m, c)
        for w, m, c in zip(gmm.weights, gmm.means, gmm.covariances)
    ]
    return np.stack(cols, axis=1)


def fit_gmm_em(
    X: np.ndarray,
    n_components: int,
    seed: int = 0,
    tol: float = EM_TOL,
    max_iter: int = EM_MAX_ITER,
) -> GaussianMixture:
    """EM fit with diagonal regularization of every covariance update.

    Iterates until the mean log-likelihood improves by less than ``tol`` or
    ``max_iter`` iterations have run. Components that lose all
    responsibility keep their previous parameters (which preserves the
    monotone log-likelihood guarantee).
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n <= n_components * (d + 1):
        raise InsufficientDataError(
            f"need more than {n_components * (d + 1)} rows to fit "
            f"{n_components} components in {d} dimensions, got {n}"
        )
    rng = np.random.default_rng(seed)

    base_cov = np.cov(X, rowvar=False).reshape(d, d) + COVARIANCE_REGULARIZATION * np.eye(d)
    picks = rng.choice(n, size=n_components, replace=False)
    gmm = GaussianMixture(
        weights=np.full(n_components, 1.0 / n_components),
        means=X[picks].copy(),
        covariances=np.repeat(base_cov[None, :, :], n_components, axis=0),
        log_likelihoods=[],
    )

    log_prob = _log_prob_matrix(X, gmm)
    norm = logsumexp(log_prob, axis=1)
    gmm.log_likelihoods.append(float(norm.mean()))

    for _ in range(max_iter):
        resp = np.exp(log_prob - norm[:, None])
        nk = resp.sum(axis=0)
        for c in range(n_components):
            if nk[c] < 1e-10:
                # starved component: freeze parameters, only its weight shrinks
                gmm.weights[c] = nk[c] / n
                continue
            mean = resp[:, c] @ X / nk[c]
            diff = X - mean
            cov = (resp[:, c][:, None] * diff).T @ diff / nk[c]
            cov += COVARIANCE_REGULARIZATION * np.eye(d)
            gmm.weights[c] = nk[c] / n
            gmm.means[c] = mean
            gmm.covariances[c] = cov
        gmm.weights /= gmm.weights.sum()

        log_prob = _log_prob_matrix(X, gmm)
        norm = logsumexp(log_prob, axis=1)
        gmm.log_likelihoods.append(float(norm.mean()))
        if gmm.log_likelihoods[-1] - gmm.log_likelihoods[-2] < tol:
            break

    return gmm


def sample_gmm(gmm: GaussianMixture, n: int, seed: int = 0) -> np.ndarray:
    """Draw n rows: component chosen by weight, then a multivariate normal.

    The covariance factor comes from an eigendecomposition with negative
    eigenvalues clipped to zero, so an exactly zero covariance reproduces
    the component mean.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n, gmm.weights / gmm.weights.sum())
    blocks = []
    for c, nc in enumerate(counts):
        if nc == 0:
            continue
        w, v = np.linalg.eigh(gmm.covariances[c])
        factor = v * np.sqrt(np.clip(w, 0.0, None))
        z = rng.standard_normal((nc, gmm.means.shape[1]))
        blocks.append(gmm.means[c] + z @ factor.T)
    return np.vstack(blocks)


def bic_score(gmm: GaussianMixture, X: np.ndarray) -> float:
    """Bayesian information criterion (lower is better)."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    k = gmm.n_components
    n_params = (k - 1) + k * d + k * d * (d + 1) // 2
    total_ll = float(logsumexp(_log_prob_matrix(X, gmm), axis=1).sum())
    return -2.0 * total_ll + n_params * np.log(n)


def select_gmm_bic(
    X: np.ndarray,
    max_components: int = 5,
    seed: int = 0,
) -> GaussianMixture:
    """Fit 1..max_components and keep the BIC-best feasible mixture."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    best = None
    best_bic = np.inf
    for c in range(1, max_components + 1):
        if n <= c * (d + 1):
            break
        gmm = fit_gmm_em(X, c, seed=seed + c)
        score = bic_score(gmm, X)
        if score < best_bic:
            best = gmm
            best_bic = score
    if best is None:
        raise InsufficientDataError(
            f"too few rows ({n}) to fit even one Gaussian component in {d} dimensions"
        )
    return best
