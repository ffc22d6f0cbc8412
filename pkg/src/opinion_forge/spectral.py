"""Spectral expansion of a graph and the resilience certificates built on it.

Eigenvalues are those of the normalized adjacency ``D^-1/2 A D^-1/2``, sorted
``1 = lambda_1 >= lambda_2 >= ... >= lambda_n >= -1``.  ``sigma`` is the
absolute value of the second-largest eigenvalue, ``|lambda_2|``; the report
also carries ``lambda_min`` and the two-sided value
``max(|lambda_2|, |lambda_n|)`` that the expander mixing lemma needs.

Small graphs go through a dense symmetric eigensolve; large ones through
block power iteration with the trivial eigenvector deflated.  It runs on
``(I + M)/2`` for ``lambda_2`` and on ``(I - M)/2`` for ``lambda_n``; both
shifted matrices are positive semidefinite, so the dominant eigenvalue of
each is the wanted end of the spectrum regardless of sign.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import (
    InvalidParametersError,
    IsolatedNodeError,
    NoConvergenceError,
    NotRegularError,
)
from .graph import Graph

DENSE_LIMIT = 2000
DEFAULT_TOL = 1e-8
BLOCK = 8


class Method(enum.Enum):
    DENSE = "dense_eigensolve"
    POWER = "power_iteration_deflation"


@dataclass(frozen=True)
class SpectralReport:
    sigma: float
    lambda_2: float
    lambda_min: float
    gamma: float
    method: Method
    residual: float
    iterations: int

    @property
    def sigma_two_sided(self) -> float:
        return max(abs(self.lambda_2), abs(self.lambda_min))

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "lambda_2": self.lambda_2, "lambda_min": self.lambda_min,
                "sigma_two_sided": self.sigma_two_sided, "gamma": self.gamma,
                "method": self.method.value, "residual": self.residual,
                "iterations": self.iterations}


def _check_degrees(g: Graph) -> None:
    if g.n == 0:
        raise IsolatedNodeError("graph has no nodes")
    isolated = np.flatnonzero(g.degrees == 0)
    if isolated.size:
        raise IsolatedNodeError(f"node {int(isolated[0])} is isolated")


def normalized_adjacency(g: Graph) -> sparse.csr_matrix:
    _check_degrees(g)
    inv_sqrt = 1.0 / np.sqrt(g.degrees.astype(np.float64))
    scale = sparse.diags(inv_sqrt)
    return (scale @ g.to_csr() @ scale).tocsr()


def _dense(g: Graph) -> tuple[float, float, float]:
    eig = np.linalg.eigvalsh(normalized_adjacency(g).toarray())
    # eigvalsh sorts ascending; the top one is the trivial eigenvalue 1
    residual = float(abs(eig[-1] - 1.0)) + np.finfo(float).eps * g.n
    return float(min(eig[-2], 1.0)), float(max(eig[0], -1.0)), residual


def _dominant(matmul, top: np.ndarray, tol: float, max_iter: int, rng: np.random.Generator,
              block: int = BLOCK) -> tuple[float, float, int]:
    """Largest eigenvalue of a PSD operator on the complement of ``top``.

    Simultaneous (block) power iteration with a Rayleigh-Ritz step per
    sweep; stops once the leading Ritz pair has residual ``<= tol``.
    """
    n = top.size
    k = max(1, min(block, n - 1))

    def deflate(m):
        return m - np.outer(top, top @ m)

    q, _ = np.linalg.qr(deflate(rng.standard_normal((n, k))))
    z = deflate(matmul(q))
    residual = math.inf
    for it in range(1, max_iter + 1):
        h = q.T @ z
        theta, u = np.linalg.eigh((h + h.T) / 2)
        order = np.argsort(theta)[::-1]
        theta, u = theta[order], u[:, order]
        v, sv = q @ u[:, 0], z @ u[:, 0]
        residual = float(np.linalg.norm(sv - theta[0] * v))
        if residual <= tol:
            return float(theta[0]), residual, it
        q, _ = np.linalg.qr(z @ u)
        if not np.isfinite(q).all():
            break
        z = deflate(matmul(q))
    raise NoConvergenceError(f"power iteration stopped at {max_iter} iterations "
                             f"with residual {residual:.3e}")


def _power(g: Graph, tol: float, max_iter: int | None,
           rng: np.random.Generator | None) -> tuple[float, float, float, int]:
    mat = normalized_adjacency(g)
    top = np.sqrt(g.degrees.astype(np.float64))
    top /= np.linalg.norm(top)
    max_iter = 10 * g.n if max_iter is None else max_iter
    rng = np.random.default_rng(0) if rng is None else rng
    # a residual r on the shifted operator is a residual 2r on M itself
    upper, res_u, it_u = _dominant(lambda x: (x + mat @ x) / 2, top, tol / 2, max_iter, rng)
    lower, res_l, it_l = _dominant(lambda x: (x - mat @ x) / 2, top, tol / 2, max_iter, rng)
    return 2 * upper - 1, 1 - 2 * lower, 2 * max(res_u, res_l), it_u + it_l


def compute_sigma(g: Graph, tol: float = DEFAULT_TOL, method: Method | str | None = None,
                  max_iter: int | None = None, rng: np.random.Generator | None = None) -> SpectralReport:
    """sigma(G) = |lambda_2| plus the degree ratio gamma = min_degree / max_degree.

    ``method`` defaults to a dense eigensolve up to ``DENSE_LIMIT`` nodes and
    power iteration above; ``max_iter`` caps each of the two power runs
    (default ``10 n``).
    """
    _check_degrees(g)
    if method is None:
        method = Method.DENSE if g.n <= DENSE_LIMIT else Method.POWER
    method = Method(method)
    gamma = g.min_degree / g.max_degree
    if g.n == 1:
        return SpectralReport(0.0, 0.0, 0.0, gamma, method, 0.0, 0)
    if method is Method.DENSE:
        lam2, lam_min, residual = _dense(g)
        iterations = 1
    else:
        lam2, lam_min, residual, iterations = _power(g, tol, max_iter, rng)
    return SpectralReport(abs(lam2), lam2, lam_min, gamma, method, residual, iterations)


# -- expander mixing lemma ---------------------------------------------------

def mixing_slack(g: Graph, S, S2, sigma: float) -> float:
    """``|e(S,S') - |S||S'|d/n| - sigma*d*sqrt(|S||S'|)`` for a d-regular graph."""
    if not g.is_regular():
        raise NotRegularError("mixing lemma audit needs a regular graph")
    a = np.zeros(g.n, dtype=np.float64)
    b = np.zeros(g.n, dtype=np.float64)
    a[np.asarray(list(S), dtype=np.int64)] = 1
    b[np.asarray(list(S2), dtype=np.int64)] = 1
    return float(_slacks(g, a[None, :], b[None, :], sigma)[0])


def _slacks(g: Graph, A: np.ndarray, B: np.ndarray, sigma: float) -> np.ndarray:
    d = float(g.max_degree)
    e = np.einsum("ij,ij->i", A, (g.to_csr() @ B.T).T)
    sa, sb = A.sum(axis=1), B.sum(axis=1)
    return np.abs(e - sa * sb * d / g.n) - sigma * d * np.sqrt(sa * sb)


def mixing_lemma_audit(g: Graph, sample_count: int, rng: np.random.Generator,
                       sigma: float | None = None, batch: int = 1000) -> float:
    """Largest slack over ``sample_count`` random pairs (S, S').

    Every node joins each set independently with probability 1/2.  The lemma
    guarantees a non-positive slack, so anything above float noise is a bug.
    ``sigma`` defaults to the two-sided value ``max(|lambda_2|, |lambda_n|)``,
    which is what the lemma is stated for.
    """
    if not g.is_regular():
        raise NotRegularError("mixing lemma audit needs a regular graph")
    if sigma is None:
        sigma = compute_sigma(g).sigma_two_sided
    worst = -math.inf
    done = 0
    while done < sample_count:
        k = min(batch, sample_count - done)
        A = (rng.random((k, g.n)) < 0.5).astype(np.float64)
        B = (rng.random((k, g.n)) < 0.5).astype(np.float64)
        worst = max(worst, float(_slacks(g, A, B, sigma).max()))
        done += k
    return worst


# -- certificates ------------------------------------------------------------

class Verdict(enum.Enum):
    RESILIENT = "resilient"
    UNKNOWN = "unknown"


class Condition(enum.Enum):
    REGULAR = "regular"
    IRREGULAR = "irregular"


@dataclass(frozen=True)
class ResilienceCertificate:
    verdict: Verdict
    condition_checked: Condition
    threshold: float
    sigma_used: float
    alpha: float
    epsilon: float
    gamma: float

    @property
    def resilient(self) -> bool:
        return self.verdict is Verdict.RESILIENT

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value, "condition_checked": self.condition_checked.value,
                "threshold": self.threshold, "sigma_used": self.sigma_used,
                "alpha": self.alpha, "epsilon": self.epsilon, "gamma": self.gamma}


def regular_threshold(alpha: float, epsilon: float) -> float:
    return epsilon * math.sqrt(alpha * (1 - alpha))


def irregular_threshold(alpha: float, epsilon: float, gamma: float) -> float:
    """Degree-ratio version; equals :func:`regular_threshold` at gamma = 1."""
    return ((1 + gamma) * epsilon / 2 - (1 - gamma) / 4) * math.sqrt(alpha * (1 - alpha))


def certify_strong_resilience(g: Graph, alpha: float, epsilon: float,
                              report: SpectralReport | None = None) -> ResilienceCertificate:
    """One-sided certificate: RESILIENT means no strong attacker can ever win.

    UNKNOWN says nothing about vulnerability.
    """
    if not (0 < alpha < 0.5 and 0 < epsilon < 0.5):
        raise InvalidParametersError("alpha and epsilon must lie in (0, 1/2)")
    if report is None:
        report = compute_sigma(g)
    sigma, gamma = report.sigma, report.gamma
    if g.is_regular():
        thr = regular_threshold(alpha, epsilon)
        if sigma <= thr:
            return ResilienceCertificate(Verdict.RESILIENT, Condition.REGULAR, thr, sigma, alpha, epsilon, gamma)
    thr = irregular_threshold(alpha, epsilon, gamma)
    cond = Condition.IRREGULAR
    if sigma <= thr:
        return ResilienceCertificate(Verdict.RESILIENT, cond, thr, sigma, alpha, epsilon, gamma)
    if g.is_regular():
        cond, thr = Condition.REGULAR, regular_threshold(alpha, epsilon)
    return ResilienceCertificate(Verdict.UNKNOWN, cond, thr, sigma, alpha, epsilon, gamma)
