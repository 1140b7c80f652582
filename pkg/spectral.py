"""
LOFT v1.0 - Spectral Analysis
Algebraic connectivity, Fiedler vector and the weighted Cheeger constant.

  - eigen_lambda2:        λ₂(L_W) and its eigenvector, solved on the
                          orthogonal complement of W^(1/2)·1 so the Fiedler
                          vector is orthogonal to the kernel by construction
  - cheeger_exact:        exhaustive bipartition search (n ≤ 20)
  - cheeger_bounds_check: λ₂/2 ≤ h_W ≤ sqrt(2 δ_max λ₂ / w_min)
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, null_space

from errors import SpectralError
from lifetime_graph import LifetimeGraph, laplacian_matrices
from utils.logger import get_logger

log = get_logger(__name__)

SYMMETRY_TOL = 1e-12
DEGENERACY_TOL = 1e-8
MAX_CHEEGER_NODES = 20
_CHUNK = 1 << 15


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Second eigenpair of L_W with its quality figures."""
    lambda2: float
    fiedler: np.ndarray
    residual: float
    multiplicity_gap: float
    scale: float

    @property
    def degenerate(self) -> bool:
        """λ₂ is (numerically) repeated; the Fiedler vector is one of many."""
        return self.multiplicity_gap < DEGENERACY_TOL * self.scale


def spectrum(matrix: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix."""
    return eigh(np.asarray(matrix, dtype=float), eigvals_only=True)


def eigen_lambda2(laplacian_w: np.ndarray, node_weights: np.ndarray | None = None) -> SpectralResult:
    """
    Second-smallest eigenvalue of the weighted Laplacian and its eigenvector.

    Args:
        laplacian_w: Symmetric n×n weighted Laplacian, n >= 2.
        node_weights: Diagonal of W (defaults to all ones).

    Returns:
        SpectralResult with a unit Fiedler vector orthogonal to W^(1/2)·1,
        sign-normalized so its first nonzero component is positive.

    Raises:
        SpectralError: n < 2 or the matrix is not symmetric.
    """
    L = np.asarray(laplacian_w, dtype=float)
    n = L.shape[0]
    if L.ndim != 2 or L.shape[1] != n:
        raise SpectralError(f"expected a square matrix, got shape {L.shape}")
    if n < 2:
        raise SpectralError("λ₂ needs at least two nodes")

    magnitude = float(np.abs(L).max()) or 1.0
    asymmetry = float(np.abs(L - L.T).max())
    if asymmetry > SYMMETRY_TOL * magnitude:
        raise SpectralError(f"matrix is not symmetric (max |L − Lᵀ| = {asymmetry:.3e})")

    weights = np.ones(n) if node_weights is None else np.asarray(node_weights, dtype=float)
    kernel = np.sqrt(weights)
    kernel /= np.linalg.norm(kernel)

    # L_W maps span{W^(1/2)·1} to zero, so its complement is invariant.
    basis = null_space(kernel[None, :])
    reduced = basis.T @ L @ basis
    values, vectors = eigh(0.5 * (reduced + reduced.T))

    scale = float(np.abs(values).max()) or 1.0
    lambda2 = float(values[0])
    if -1e-10 * scale < lambda2 < 0.0:
        lambda2 = 0.0
    lambda3 = float(values[1]) if values.size > 1 else np.inf

    fiedler = basis @ vectors[:, 0]
    fiedler /= np.linalg.norm(fiedler)
    lead = np.flatnonzero(np.abs(fiedler) > 1e-12)
    if lead.size and fiedler[lead[0]] < 0:
        fiedler = -fiedler

    residual = float(np.linalg.norm(L @ fiedler - lambda2 * fiedler))
    result = SpectralResult(
        lambda2=lambda2,
        fiedler=fiedler,
        residual=residual,
        multiplicity_gap=lambda3 - lambda2,
        scale=scale,
    )
    if result.degenerate:
        log.debug("λ₂ = %.6g is degenerate (gap %.3e)", lambda2, result.multiplicity_gap)
    return result


def graph_lambda2(graph: LifetimeGraph) -> SpectralResult:
    """eigen_lambda2 applied to a lifetime graph."""
    return eigen_lambda2(graph.laplacian_w, graph.node_weights)


# ====================================================================== #
# Cheeger constant
# ====================================================================== #

@dataclass(frozen=True)
class CheegerResult:
    """Weighted Cheeger constant and the side S (containing node 0) that attains it."""
    value: float
    subset: tuple[int, ...]
    node_ids: tuple[str, ...] | None = None

    @property
    def subset_ids(self) -> tuple[str, ...] | None:
        if self.node_ids is None:
            return None
        return tuple(self.node_ids[i] for i in self.subset)


@dataclass(frozen=True)
class CheegerBounds:
    """Both sides of the weighted Cheeger inequality."""
    lower: float
    cheeger: float
    upper: float
    ok: bool


def _unpack(graph: LifetimeGraph | np.ndarray,
            node_weights: np.ndarray | None) -> tuple[np.ndarray, np.ndarray, tuple[str, ...] | None]:
    if isinstance(graph, LifetimeGraph):
        weights = graph.node_weights if node_weights is None else node_weights
        return graph.symmetric_adjacency, np.asarray(weights, dtype=float), graph.node_ids
    adjacency = np.asarray(graph, dtype=float)
    adjacency = 0.5 * (adjacency + adjacency.T)
    n = adjacency.shape[0]
    weights = np.ones(n) if node_weights is None else np.asarray(node_weights, dtype=float)
    return adjacency, weights, None


def cheeger_exact(graph: LifetimeGraph | np.ndarray, node_weights: np.ndarray | None = None) -> CheegerResult:
    """
    Weighted Cheeger constant by enumerating all 2^(n−1) − 1 bipartitions.

    Args:
        graph: Lifetime graph, or an adjacency matrix (symmetrized on entry).
        node_weights: Node weights w_i; defaults to the graph's (or ones).

    Returns:
        min_S cut(S, S̄) / min(|S|_W, |S̄|_W); ties go to the lexicographically
        smallest S, where S is the side holding node 0.

    Raises:
        SpectralError: fewer than 2 or more than 20 nodes.
    """
    adjacency, weights, node_ids = _unpack(graph, node_weights)
    n = adjacency.shape[0]
    if n < 2:
        raise SpectralError("Cheeger constant needs at least two nodes")
    if n > MAX_CHEEGER_NODES:
        raise SpectralError(f"exact Cheeger enumeration is limited to {MAX_CHEEGER_NODES} nodes, got {n}")

    free = n - 1
    total_weight = float(weights.sum())
    bit_values = 1 << np.arange(free)

    values = np.empty((1 << free) - 1)
    for start in range(0, values.size, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, values.size))
        inside = np.ones((masks.size, n), dtype=bool)
        inside[:, 1:] = (masks[:, None] & bit_values[None, :]) != 0
        member = inside.astype(float)
        cut = ((member @ adjacency) * (1.0 - member)).sum(axis=1)
        size_s = member @ weights
        values[masks] = cut / np.minimum(size_s, total_weight - size_s)

    best = float(values.min())
    tied = np.flatnonzero(values <= best + 1e-12 * max(abs(best), 1e-300))
    subsets = [(0,) + tuple(int(i) + 1 for i in range(free) if (mask >> i) & 1) for mask in tied]
    return CheegerResult(value=best, subset=min(subsets), node_ids=node_ids)


def cheeger_bounds_check(graph: LifetimeGraph | np.ndarray, node_weights: np.ndarray | None = None) -> CheegerBounds:
    """
    Check λ₂/2 ≤ h_W ≤ sqrt(2 δ_max λ₂ / w_min) on one graph.

    δ_max is the largest generalized degree β_p of the symmetrized graph.
    """
    adjacency, weights, _ = _unpack(graph, node_weights)
    _, _, laplacian_w = laplacian_matrices(adjacency, weights)
    spectral = eigen_lambda2(laplacian_w, weights)
    cheeger = cheeger_exact(adjacency, weights).value

    delta_max = float(adjacency.sum(axis=1).max())
    w_min = float(weights.min())
    lower = spectral.lambda2 / 2.0
    upper = float(np.sqrt(2.0 * delta_max * spectral.lambda2 / w_min))

    eps = 1e-9 * max(cheeger, upper, spectral.scale)
    ok = (lower - eps <= cheeger <= upper + eps)
    if not ok:
        log.warning("Cheeger inequality violated: %.6g <= %.6g <= %.6g", lower, cheeger, upper)
    return CheegerBounds(lower=lower, cheeger=cheeger, upper=upper, ok=ok)
