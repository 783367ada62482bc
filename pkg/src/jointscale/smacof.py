"""Weighted metric MDS by stress majorization.

The stress of a configuration Z against dissimilarities D under weights W is
summed over the upper triangle (i < j).  The symmetric full-matrix double
sum is exactly ``FULL_MATRIX_FACTOR`` times this value; reported numbers
state which convention they use.

Each majorization step is a Guttman transform Z -> V^+ B(Z) Z, which never
increases the stress (sandwich inequality).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from .errors import DegenerateWeights, InvalidInput

__all__ = [
    "FULL_MATRIX_FACTOR",
    "StressReport",
    "JointBlocks",
    "random_embedding",
    "stress",
    "v_matrix_pinv",
    "guttman_transform",
    "smacof",
    "assemble_joint",
]

# The full-matrix double-sum stress of a symmetric instance is twice the
# upper-triangle stress computed here.
FULL_MATRIX_FACTOR = 2.0

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 300


@dataclass
class StressReport:
    """Trajectory of one majorization run.

    ``per_iteration[0]`` is the stress of the initial configuration;
    subsequent entries follow each Guttman transform.  The sequence is
    non-increasing up to roundoff.
    """

    per_iteration: list[float]
    iterations_used: int
    converged: bool


@dataclass
class JointBlocks:
    """Block instance turning the coupled two-dataset subproblem into one MDS.

    The dissimilarity cross blocks are zero, the weight cross blocks carry
    the coupling scaled by the matching penalty, and the embedding is the
    vertical stack of both configurations.
    """

    d_tilde: np.ndarray
    w_tilde: np.ndarray
    z_tilde: np.ndarray
    n1: int


def random_embedding(n: int, d: int, seed: int, scale: float = 1.0) -> np.ndarray:
    """Deterministic Gaussian start configuration with standard deviation ``scale``."""
    rng = np.random.default_rng(seed)
    return scale * rng.standard_normal((n, d))


def _check_shapes(z: np.ndarray, d: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    z = np.asarray(z, dtype=float)
    d = np.asarray(d, dtype=float)
    w = np.asarray(w, dtype=float)
    if z.ndim != 2:
        raise InvalidInput(f"embedding must be 2-D, got shape {z.shape}")
    n = z.shape[0]
    if d.shape != (n, n):
        raise InvalidInput(f"dissimilarity shape {d.shape} does not match n={n}")
    if w.shape != (n, n):
        raise InvalidInput(f"weight shape {w.shape} does not match n={n}")
    return z, d, w


def _stress_from_dist(dist: np.ndarray, d: np.ndarray, w: np.ndarray) -> float:
    diff = d - dist
    np.fill_diagonal(diff, 0.0)
    return float(np.einsum("ij,ij,ij->", w, diff, diff) / FULL_MATRIX_FACTOR)


def stress(z: np.ndarray, d: np.ndarray, w: np.ndarray) -> float:
    """Weighted stress sum_{i<j} w_ij (d_ij - ||z_i - z_j||)^2."""
    z, d, w = _check_shapes(z, d, w)
    return _stress_from_dist(cdist(z, z), d, w)


def v_matrix_pinv(w: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of the weighted Laplacian V.

    V = sum_{i<j} w_ij (e_i - e_j)(e_i - e_j)^T has null space spanned by
    the ones vector whenever the weight graph is connected, so the
    pseudo-inverse equals (V + J/n)^{-1} - J/n with J the all-ones matrix.

    Raises
    ------
    DegenerateWeights
        If the graph of nonzero weights is disconnected (V has rank < n-1).
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    if w.shape != (n, n):
        raise InvalidInput(f"weight matrix must be square, got shape {w.shape}")
    if n == 1:
        return np.zeros((1, 1))
    n_comp, _ = connected_components((w != 0).astype(np.int8), directed=False)
    if n_comp > 1:
        raise DegenerateWeights(
            f"weight graph has {n_comp} components; the MDS subproblem decouples"
        )
    v = -0.5 * (w + w.T)
    np.fill_diagonal(v, 0.0)
    np.fill_diagonal(v, -v.sum(axis=1))
    j_over_n = np.full((n, n), 1.0 / n)
    return np.linalg.inv(v + j_over_n) - j_over_n


def _transform(z, d, sym_w, v_pinv, dist):
    ratio = np.divide(d, dist, out=np.zeros_like(d), where=dist > 0)
    b_off = -sym_w * ratio
    np.fill_diagonal(b_off, 0.0)
    bz = b_off @ z - b_off.sum(axis=1)[:, None] * z
    return v_pinv @ bz


def guttman_transform(
    z: np.ndarray, d: np.ndarray, w: np.ndarray, v_pinv: np.ndarray
) -> np.ndarray:
    """One majorization step V^+ B(Z) Z.

    B(Z) uses b_ij = w_ij d_ij / ||z_i - z_j|| when the embedded points are
    distinct and b_ij = 0 when they coincide.
    """
    z, d, w = _check_shapes(z, d, w)
    return _transform(z, d, 0.5 * (w + w.T), v_pinv, cdist(z, z))


def smacof(
    d: np.ndarray,
    w: np.ndarray,
    z0: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    v_pinv: np.ndarray | None = None,
) -> tuple[np.ndarray, StressReport]:
    """Iterate Guttman transforms from ``z0`` until the stress drop falls below ``tol``.

    Parameters
    ----------
    d, w : ndarray of shape (n, n)
        Dissimilarities and weights.
    z0 : ndarray of shape (n, dim)
        Start configuration.
    tol : float
        Stop when stress(Z_{t-1}) - stress(Z_t) < tol.
    max_iter : int
        Iteration budget.
    v_pinv : ndarray, optional
        Precomputed ``v_matrix_pinv(w)``; recompute cost is cubic, so callers
        looping over couplings pass it in.

    Returns
    -------
    (ndarray, StressReport)
        Final configuration and the stress trajectory.
    """
    if tol < 0:
        raise InvalidInput(f"tol must be >= 0, got {tol}")
    if max_iter < 1:
        raise InvalidInput(f"max_iter must be >= 1, got {max_iter}")
    z, d, w = _check_shapes(z0, d, w)
    if v_pinv is None:
        v_pinv = v_matrix_pinv(w)
    sym_w = 0.5 * (w + w.T)
    dist = cdist(z, z)
    trajectory = [_stress_from_dist(dist, d, w)]
    converged = False
    iterations = 0
    for _ in range(max_iter):
        z = _transform(z, d, sym_w, v_pinv, dist)
        dist = cdist(z, z)
        trajectory.append(_stress_from_dist(dist, d, w))
        iterations += 1
        if trajectory[-2] - trajectory[-1] < tol:
            converged = True
            break
    return z, StressReport(trajectory, iterations, converged)


def assemble_joint(
    d1: np.ndarray,
    d2: np.ndarray,
    w1: np.ndarray,
    w2: np.ndarray,
    p: np.ndarray,
    lam: float,
    z1: np.ndarray,
    z2: np.ndarray,
) -> JointBlocks:
    """Assemble the block MDS instance coupling two datasets through ``p``.

    The cross weights are ``lam * p`` and its transpose against a zero cross
    dissimilarity target, so the block stress reproduces the coupled
    objective with the rotation absorbed into ``z1``.
    """
    z1, d1, w1 = _check_shapes(z1, d1, w1)
    z2, d2, w2 = _check_shapes(z2, d2, w2)
    if z1.shape[1] != z2.shape[1]:
        raise InvalidInput("embeddings must share the target dimension")
    if lam < 0:
        raise InvalidInput(f"lambda must be >= 0, got {lam}")
    n1, n2 = z1.shape[0], z2.shape[0]
    p = np.asarray(p, dtype=float)
    if p.shape != (n1, n2):
        raise InvalidInput(f"coupling shape {p.shape} does not match ({n1}, {n2})")
    d_tilde = np.zeros((n1 + n2, n1 + n2))
    d_tilde[:n1, :n1] = d1
    d_tilde[n1:, n1:] = d2
    w_tilde = np.zeros_like(d_tilde)
    w_tilde[:n1, :n1] = w1
    w_tilde[n1:, n1:] = w2
    w_tilde[:n1, n1:] = lam * p
    w_tilde[n1:, :n1] = lam * p.T
    z_tilde = np.vstack([z1, z2])
    return JointBlocks(d_tilde, w_tilde, z_tilde, n1)
