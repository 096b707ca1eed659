"""Synthetic latent-position graph series with planted anomalies, plus the power sweep."""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np
from joblib import Parallel, delayed

from ._sampling import sample_adjacency, upper_indices
from .series import GraphSeries
from .stats import compute_stats, detect_pvalue, rr_gap

_MAX_RESAMPLE = 100


@dataclass(frozen=True)
class LatentSeries:
    """Ground-truth latent positions over time with the planted anomaly sets.

    ``anomalous_vertices`` holds 0-based row indices into the position
    matrices.  Off-diagonal inner products of every position matrix are valid
    Bernoulli probabilities by construction.
    """

    positions: tuple[np.ndarray, ...]
    times: tuple[int, ...]
    anomalous_times: frozenset[int]
    anomalous_vertices: frozenset[int]
    params: dict

    @property
    def n(self) -> int:
        return self.positions[0].shape[0]

    @property
    def m(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class PowerRow:
    theta: float
    method: str
    span: str
    power: float
    power_se: float
    rr_gap: float
    rr_gap_se: float
    n_mc: int


@dataclass(frozen=True)
class PowerTable:
    rows: tuple[PowerRow, ...]

    def to_csv(self, dest: IO[str]) -> None:
        dest.write("theta,method,span,power,power_se,rr_gap,rr_gap_se,n_mc\n")
        for r in self.rows:
            dest.write(
                f"{r.theta:.17g},{r.method},{r.span},{r.power:.17g},{r.power_se:.17g},"
                f"{r.rr_gap:.17g},{r.rr_gap_se:.17g},{r.n_mc}\n"
            )

    def cell(self, theta: float, method: str, span="2") -> PowerRow:
        for r in self.rows:
            if r.method == method and str(r.span) == str(span) and np.isclose(r.theta, theta):
                return r
        raise KeyError(f"no row for theta={theta}, method={method}, span={span}")


def _check_probabilities(x: np.ndarray) -> tuple[float, float]:
    p = x @ x.T
    iu = upper_indices(p.shape[0])
    pu = p[iu]
    return (float(pu.min()), float(pu.max())) if pu.size else (0.0, 0.0)


def rdpg_sample(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One adjacency matrix with independent Bernoulli(x_i . x_j) edges.

    Off-diagonal inner products must already lie in [0, 1]; simulation inputs
    are required to be exactly valid, there is no clamping here.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    lo, hi = _check_probabilities(x)
    if lo < 0.0 or hi > 1.0:
        raise ValueError(f"edge probabilities outside [0, 1]: min {lo:.4g}, max {hi:.4g}")
    n = x.shape[0]
    p = x @ x.T
    return sample_adjacency(p[upper_indices(n)], n, rng)


def sample_series(latent: LatentSeries, seed=None) -> GraphSeries:
    """Draw one graph per time point from the latent series."""
    rng = np.random.default_rng(seed)
    mats = [rdpg_sample(x, rng) for x in latent.positions]
    return GraphSeries.from_matrices(mats, times=latent.times)


def _valid(x: np.ndarray) -> bool:
    lo, hi = _check_probabilities(x if x.ndim == 2 else x[:, None])
    return lo >= 0.0 and hi <= 1.0


def scenario1(
    n: int = 100,
    delta_n: int = 20,
    delta_x: float = 0.3,
    seed=None,
) -> LatentSeries:
    """One-dimensional series with a two-step shift of the first ``delta_n`` vertices.

    Initial positions are i.i.d. Uniform(0.2, 0.8); time runs -9..12 (22
    points).  At times 6 and 7 the first ``delta_n`` vertices move by
    +delta_x / -delta_x (half of them each way).  Draws whose perturbation
    would push an edge probability outside [0, 1] are rejected and resampled;
    the acceptance region shrinks quickly above delta_x = 0.2, so the sampler
    screens candidate draws in vectorized batches.
    """
    if delta_n % 2 != 0 or not 2 <= delta_n <= n:
        raise ValueError("delta_n must be even and within [2, n]")
    if not 0 <= delta_x <= 0.5:
        raise ValueError("delta_x must lie in [0, 0.5]")
    rng = np.random.default_rng(seed)
    half = delta_n // 2
    shift = np.concatenate([np.ones(half), -np.ones(half), np.zeros(n - delta_n)])

    # For nonnegative 1-d positions, all pairwise products lie in [0, 1] iff
    # every coordinate is >= 0 and the two largest coordinates multiply to <= 1.
    def batch_valid(xs: np.ndarray) -> np.ndarray:
        top2 = np.partition(xs, n - 2, axis=1)[:, -2:]
        return (xs.min(axis=1) >= 0.0) & (top2[:, 0] * top2[:, 1] <= 1.0)

    x1 = None
    batch = 2000
    for _ in range(500):
        xs = rng.uniform(0.2, 0.8, size=(batch, n))
        good = np.flatnonzero(batch_valid(xs + delta_x * shift) & batch_valid(xs - delta_x * shift))
        if good.size:
            x1 = xs[good[0]]
            break
    if x1 is None:
        raise ValueError(f"could not draw valid positions with delta_x={delta_x}")
    x6 = x1 + delta_x * shift
    x7 = x1 - delta_x * shift

    times = tuple(range(-9, 13))
    cols = {6: x6, 7: x7}
    positions = tuple(cols.get(t, x1)[:, None].copy() for t in times)
    return LatentSeries(
        positions=positions,
        times=times,
        anomalous_times=frozenset({6, 7}),
        anomalous_vertices=frozenset(range(delta_n)),
        params={
            "scenario": 1, "n": n, "m": len(times), "d": 1,
            "delta_n": delta_n, "delta_x": delta_x, "seed": _seed_echo(seed),
        },
    )


def _block_matrix(p: float, q: float, d: int = 4) -> np.ndarray:
    b = np.full((d, d), q)
    np.fill_diagonal(b, p)
    return b


def _sym_sqrt(b: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(b)
    if vals.min() < -1e-12:
        raise ValueError("block matrix is not positive semidefinite")
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.T


def membership_positions(z: np.ndarray, p: float, q: float) -> np.ndarray:
    """Latent positions Z B^(1/2) whose Gram matrix equals Z B Z^T exactly.

    B has ``p`` on the diagonal and ``q`` off it; the symmetric square root
    keeps nearest-neighbor structure expressible directly in terms of Z.
    """
    z = np.asarray(z, dtype=np.float64)
    return z @ _sym_sqrt(_block_matrix(p, q, z.shape[1]))


def scenario_mmsbm(
    theta: float,
    n: int = 400,
    p: float = 0.8,
    q: float = 0.3,
    xi: np.ndarray | None = None,
    delta_n: int = 100,
    delta_x: float = 0.12,
    m: int = 12,
    seed=None,
) -> LatentSeries:
    """Mixed-membership blockmodel series with one community's neighborhood shifted.

    Membership rows are Dirichlet(theta * 1_4); the block matrix has ``p`` on
    the diagonal and ``q`` elsewhere.  The ``delta_n`` vertices closest to
    vertex 0 in latent space move by +/- delta_x * xi at times 6 and 7.  When
    ``xi`` is None it is drawn as 0.6 * Dirichlet(1_4) + 0.2 and redrawn (up
    to 100 times) if the perturbed probabilities leave [0, 1]; a fixed ``xi``
    that yields invalid probabilities is an error.
    """
    if not 0 < q < p < 1:
        raise ValueError("need 0 < q < p < 1")
    if theta <= 0:
        raise ValueError("theta must be positive")
    if not 1 <= delta_n <= n:
        raise ValueError("delta_n out of range")
    if m < 2:
        raise ValueError("need at least 2 time points")
    d = 4
    rng = np.random.default_rng(seed)

    z = rng.dirichlet(theta * np.ones(d), size=n)
    x1 = membership_positions(z, p, q)

    dist = np.linalg.norm(x1 - x1[0], axis=1)
    order = np.lexsort((np.arange(n), dist))
    anomalous = order[:delta_n]
    mask = np.zeros(n, dtype=bool)
    mask[anomalous] = True

    def perturbed(vec: np.ndarray):
        delta = np.zeros((n, d))
        delta[mask] = vec
        return x1 + delta_x * delta, x1 - delta_x * delta

    if xi is not None:
        xi = np.asarray(xi, dtype=np.float64).ravel()
        if xi.shape != (d,):
            raise ValueError(f"xi must have {d} entries")
        x6, x7 = perturbed(xi)
        if not (_valid(x6) and _valid(x7)):
            raise ValueError("fixed xi yields invalid edge probabilities")
        xi_used = xi
    else:
        for _ in range(_MAX_RESAMPLE):
            xi_used = 0.6 * rng.dirichlet(np.ones(d)) + 0.2
            x6, x7 = perturbed(xi_used)
            if _valid(x6) and _valid(x7):
                break
        else:
            raise ValueError("could not draw a valid xi in 100 attempts")

    times = tuple(range(1, m + 1))
    cols = {6: x6, 7: x7}
    positions = tuple(cols.get(t, x1).copy() for t in times)
    return LatentSeries(
        positions=positions,
        times=times,
        anomalous_times=frozenset({6, 7}) & set(times),
        anomalous_vertices=frozenset(int(i) for i in anomalous),
        params={
            "scenario": "mmsbm", "theta": theta, "n": n, "m": m, "d": d,
            "p": p, "q": q, "delta_n": delta_n, "delta_x": delta_x,
            "xi": [float(v) for v in xi_used], "seed": _seed_echo(seed),
        },
    )


def _seed_echo(seed):
    return seed if isinstance(seed, (int, type(None))) else None


def _power_cell(theta, method, span, n, p, q, xi, delta_n, delta_x, m, n_boot, alpha, d, rep_seed):
    latent_ss, sample_ss, detect_ss = rep_seed.spawn(3)
    latent = scenario_mmsbm(
        theta=theta, n=n, p=p, q=q, xi=xi, delta_n=delta_n, delta_x=delta_x, m=m, seed=latent_ss
    )
    g = sample_series(latent, seed=sample_ss)
    anom_times = sorted(latent.anomalous_times)
    anom_vertices = sorted(latent.anomalous_vertices)
    report = detect_pvalue(
        g, method=method, d=d, d_joint=d, span=span, n_boot=n_boot,
        alpha=alpha, seed=detect_ss, at_times=anom_times,
    )
    stats = compute_stats(g, method=method, d=d, d_joint=d, span=span)
    hits = [report.p_graph[t] < alpha for t in anom_times]
    gaps = [rr_gap(stats.vertex_stats[t], anom_vertices) for t in anom_times]
    return hits, gaps


def power_experiment(
    theta_grid: Sequence[float],
    n_mc: int,
    p: float = 0.8,
    q: float = 0.3,
    xi: np.ndarray | None = None,
    methods: Sequence[str] = ("omni", "mase"),
    spans: Sequence = (2,),
    alpha: float = 0.05,
    seed=None,
    n_boot: int = 400,
    n: int = 400,
    delta_n: int = 100,
    delta_x: float = 0.12,
    m: int = 12,
    d: int = 4,
    n_jobs: int = 1,
) -> PowerTable:
    """Empirical detection power and rank-gap sweep over the membership-spread grid.

    For every grid value and method/span combination, ``n_mc`` replicate
    series are generated, the bootstrap test is run at the two anomalous
    times, and the fraction of significant p-values (power) plus the mean
    reciprocal-rank gap are tabulated with standard errors.  Replicates use
    independent streams spawned from ``seed``, so results are independent of
    scheduling.
    """
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    thetas = [float(t) for t in theta_grid]
    if not thetas or any(t <= 0 or t > 1 for t in thetas):
        raise ValueError("theta grid must lie in (0, 1]")
    if xi is None:
        xi = 0.3 * np.ones(4)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rep_seeds = root.spawn(len(thetas) * n_mc)

    rows = []
    for mth in methods:
        for span in spans:
            span_label = "all" if span in ("all", "full") else str(span)
            for i, theta in enumerate(thetas):
                cells = Parallel(n_jobs=n_jobs)(
                    delayed(_power_cell)(
                        theta, mth, span, n, p, q, xi, delta_n, delta_x, m,
                        n_boot, alpha, d, rep_seeds[i * n_mc + r],
                    )
                    for r in range(n_mc)
                )
                hits = np.concatenate([np.asarray(c[0], dtype=float) for c in cells])
                gaps = np.concatenate([np.asarray(c[1], dtype=float) for c in cells])
                beta = float(hits.mean())
                rows.append(PowerRow(
                    theta=theta, method=mth, span=span_label,
                    power=beta,
                    power_se=float(np.sqrt(beta * (1 - beta) / hits.size)),
                    rr_gap=float(gaps.mean()),
                    rr_gap_se=float(gaps.std(ddof=1) / np.sqrt(gaps.size)) if gaps.size > 1 else 0.0,
                    n_mc=n_mc,
                ))
    return PowerTable(rows=tuple(rows))
