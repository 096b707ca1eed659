"""Spectral embeddings of single graphs and of jointly embedded graph collections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh, svds

# Full decompositions below this size; Lanczos-style partial solver above,
# or whenever only a few leading pairs of a mid-sized matrix are needed.
DENSE_EIG_MAX = 2000
_ITERATIVE_MIN = 80
_ARPACK_TOL = 1e-9


@dataclass(frozen=True)
class LatentPositions:
    """Estimated latent positions of one graph at one time (rows are vertices)."""

    matrix: np.ndarray
    time: int = 0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[1] < 1:
            raise ValueError(f"positions must be a 2-D matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("positions contain non-finite entries")
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class OmniResult:
    """Joint embedding blocks extracted from the omnibus matrix, one per graph."""

    positions: tuple[LatentPositions, ...]


@dataclass(frozen=True)
class MaseResult:
    """Common subspace, per-graph score matrices, and derived positions."""

    common_subspace: np.ndarray
    scores: tuple[np.ndarray, ...]
    positions: tuple[LatentPositions, ...]
    dim_individual: int
    dim_joint: int


def _check_symmetric(a, tol: float = 1e-10) -> None:
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix is not square: {a.shape}")
    if sp.issparse(a):
        d = (a - a.T).tocoo()
        asym = float(np.abs(d.data).max()) if d.nnz else 0.0
    else:
        asym = float(np.abs(a - a.T).max()) if a.size else 0.0
    if asym > tol:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column positive."""
    if vecs.size == 0:
        return vecs
    lead = vecs[np.abs(vecs).argmax(axis=0), np.arange(vecs.shape[1])]
    signs = np.where(lead < 0, -1.0, 1.0)
    return vecs * signs


def _order_by_magnitude(vals: np.ndarray, d: int) -> np.ndarray:
    # magnitude descending; ties keep the algebraically larger eigenvalue first
    return np.lexsort((-vals, -np.abs(vals)))[:d]


def _dense_top_eigenpairs(a, d: int):
    dense = a.toarray() if sp.issparse(a) else np.asarray(a, dtype=np.float64)
    vals, vecs = eigh(dense)
    keep = _order_by_magnitude(vals, d)
    return vals[keep], _fix_signs(vecs[:, keep])


def top_eigenpairs(a, d: int):
    """Leading ``d`` eigenpairs of a symmetric matrix by eigenvalue magnitude.

    Eigenvalues come back in descending magnitude (ties broken toward the
    algebraically larger value) and each eigenvector is sign-fixed so its
    largest-magnitude entry is positive.  Identical inputs give identical
    outputs: the iterative solver runs from a fixed start vector.
    """
    n = a.shape[0]
    if not 1 <= d <= n:
        raise ValueError(f"embedding dimension {d} out of range [1, {n}]")

    nnz = a.nnz if sp.issparse(a) else np.count_nonzero(a)
    if nnz == 0:
        return np.zeros(d), np.zeros((n, d))

    use_iterative = d < n and (n > DENSE_EIG_MAX or (n >= _ITERATIVE_MIN and d <= n // 8))
    if use_iterative:
        v0 = np.full(n, 1.0 / np.sqrt(n))
        for ncv in (min(n, max(2 * d + 4, 10)), min(n, max(2 * d + 1, 20))):
            try:
                vals, vecs = eigsh(
                    a, k=d, which="LM", v0=v0, tol=_ARPACK_TOL,
                    ncv=ncv, maxiter=max(10 * d, 200),
                )
            except (ArpackNoConvergence, ArpackError):
                continue
            keep = _order_by_magnitude(vals, d)
            return vals[keep], _fix_signs(vecs[:, keep])
        if n > 50_000:
            raise ArpackError(-1, {-1: "eigensolver failed to converge"})
    return _dense_top_eigenpairs(a, d)


def _spectral_embed(a, d: int, mode: str) -> np.ndarray:
    vals, vecs = top_eigenpairs(a, d)
    if mode == "scaled":
        vecs = vecs * np.sqrt(np.abs(vals))
    return vecs


def ase(a, d: int, mode: str = "scaled", time: int = 0) -> LatentPositions:
    """Adjacency spectral embedding of a symmetric matrix.

    Takes the ``d`` eigenpairs of largest eigenvalue magnitude.  In "scaled"
    mode returns eigenvectors scaled by sqrt(|eigenvalue|); "unscaled" returns
    the bare leading eigenvectors.
    """
    if mode not in ("scaled", "unscaled"):
        raise ValueError(f"unknown mode {mode!r}")
    _check_symmetric(a)
    return LatentPositions(matrix=_spectral_embed(a, d, mode), time=time)


def omnibus_matrix(series: Sequence):
    """Block matrix with the graphs on the diagonal and pairwise averages off it.

    Returns a dense array when every input is dense, sparse CSR otherwise.
    The output is exactly symmetric by construction.
    """
    m = len(series)
    if m < 2:
        raise ValueError("omnibus matrix needs at least 2 graphs")
    n = series[0].shape[0]
    for a in series:
        if a.shape != (n, n):
            raise ValueError(f"graph dimension mismatch: {a.shape} vs {(n, n)}")

    any_sparse = any(sp.issparse(a) for a in series)
    if any_sparse:
        mats = [sp.csr_array(a) for a in series]
        blocks = [[None] * m for _ in range(m)]
        for t in range(m):
            blocks[t][t] = mats[t]
            for u in range(t + 1, m):
                avg = (mats[t] + mats[u]) * 0.5
                blocks[t][u] = avg
                blocks[u][t] = avg
        return sp.csr_array(sp.bmat(blocks, format="csr"))

    mats = [np.asarray(a, dtype=np.float64) for a in series]
    out = np.empty((m * n, m * n))
    for t in range(m):
        out[t * n:(t + 1) * n, t * n:(t + 1) * n] = mats[t]
        for u in range(t + 1, m):
            avg = 0.5 * (mats[t] + mats[u])
            out[t * n:(t + 1) * n, u * n:(u + 1) * n] = avg
            out[u * n:(u + 1) * n, t * n:(t + 1) * n] = avg
    return out


def omni_embed(series: Sequence, d: int, times: Sequence[int] | None = None) -> OmniResult:
    """Joint embedding of all graphs through the omnibus matrix.

    The spectral embedding of the omnibus matrix is split into consecutive
    n-row blocks, one per graph, all living in one coordinate system.
    """
    m = len(series)
    n = series[0].shape[0]
    if times is None:
        times = list(range(m))
    o = omnibus_matrix(series)  # exactly symmetric by construction
    x = _spectral_embed(o, d, "scaled")
    positions = tuple(
        LatentPositions(matrix=x[t * n:(t + 1) * n, :], time=int(times[t])) for t in range(m)
    )
    return OmniResult(positions=positions)


def _sym_sqrt_abs(r: np.ndarray) -> np.ndarray:
    """|R|^(1/2) for symmetric R via its eigendecomposition."""
    vals, vecs = np.linalg.eigh(r)
    return (vecs * np.sqrt(np.abs(vals))) @ vecs.T


def _positions_from_subspace(series: Sequence, v: np.ndarray, times: Sequence[int]):
    """Score matrices and positions for a given orthonormal subspace basis."""
    scores = []
    positions = []
    for k, a in enumerate(series):
        av = a @ v
        r = v.T @ av
        r = 0.5 * (r + r.T)
        scores.append(r)
        positions.append(LatentPositions(matrix=v @ _sym_sqrt_abs(r), time=int(times[k])))
    return tuple(scores), tuple(positions)


def mase_embed(
    series: Sequence,
    d: int,
    d_joint: int | None = None,
    times: Sequence[int] | None = None,
) -> MaseResult:
    """Joint embedding through a shared invariant subspace.

    Concatenates the d leading eigenvectors of each graph, takes the
    ``d_joint`` leading left singular vectors of the concatenation as the
    common subspace, and projects each graph onto it to obtain symmetric
    score matrices and per-graph positions.
    """
    m = len(series)
    if m < 1:
        raise ValueError("need at least one graph")
    n = series[0].shape[0]
    if d_joint is None:
        d_joint = d
    if not 1 <= d <= n:
        raise ValueError(f"per-graph dimension {d} out of range [1, {n}]")
    if not 1 <= d_joint <= min(n, m * d):
        raise ValueError(f"joint dimension {d_joint} out of range [1, {min(n, m * d)}]")
    if times is None:
        times = list(range(m))

    blocks = [_spectral_embed(a, d, "unscaled") for a in series]
    u = np.hstack(blocks)
    left, _, _ = np.linalg.svd(u, full_matrices=False)
    v = _fix_signs(left[:, :d_joint])
    scores, positions = _positions_from_subspace(series, v, times)
    return MaseResult(
        common_subspace=v,
        scores=scores,
        positions=positions,
        dim_individual=d,
        dim_joint=d_joint,
    )


def select_dim(values: Sequence[float], max_rank: int | None = None) -> int:
    """Scree-plot elbow via the two-group Gaussian profile log-likelihood.

    Splits the descending value sequence at every candidate index, models the
    two groups as Gaussians sharing one pooled variance, and returns the
    split maximizing the profile log-likelihood, restricted to at most
    ``max_rank``.  A constant sequence yields 1.
    """
    vals = np.asarray(values, dtype=np.float64).ravel()
    if vals.size < 3:
        raise ValueError("need at least 3 values to locate an elbow")
    if np.any(np.diff(vals) > 1e-12):
        raise ValueError("values must be sorted in descending order")
    if np.any(vals < 0):
        raise ValueError("values must be nonnegative")
    if np.all(vals == vals[0]):
        return 1

    p = vals.size
    q_max = p - 1 if max_rank is None else min(max_rank, p - 1)
    best_q, best_ll = 1, -np.inf
    for q in range(1, q_max + 1):
        head, tail = vals[:q], vals[q:]
        rss = np.sum((head - head.mean()) ** 2) + np.sum((tail - tail.mean()) ** 2)
        var = rss / p
        if var <= 0:
            return q  # a perfect two-group split cannot be beaten
        ll = -0.5 * p * (np.log(2 * np.pi * var) + 1.0)
        if ll > best_ll:
            best_q, best_ll = q, ll
    return best_q


def singular_values(a, max_rank: int | None = None) -> np.ndarray:
    """Descending singular values of a symmetric matrix, truncated to ``max_rank``.

    Uses a full symmetric eigendecomposition for small matrices and a partial
    SVD above :data:`DENSE_EIG_MAX`.
    """
    _check_symmetric(a)
    n = a.shape[0]
    k = n if max_rank is None else min(max_rank, n)
    if n <= DENSE_EIG_MAX:
        dense = a.toarray() if sp.issparse(a) else np.asarray(a, dtype=np.float64)
        svals = np.sort(np.abs(np.linalg.eigvalsh(dense)))[::-1]
        return svals[:k]
    k = min(k, n - 1)
    s = svds(sp.csr_matrix(a) if sp.issparse(a) else a, k=k, return_singular_vectors=False)
    return np.sort(s)[::-1]
