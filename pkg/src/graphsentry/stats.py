"""Displacement statistics, bootstrap tests, control charts, and rank metrics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import IO, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from joblib import Parallel, delayed
from scipy.special import gammaln

from ._sampling import sample_adjacency, upper_indices
from .embedding import LatentPositions, mase_embed, omni_embed
from .series import GraphSeries

MOVING_RANGE_D2 = 1.128  # mean range of two normal draws, in sigma units
_DENSIFY_MAX = 1200      # below this vertex count graphs are embedded densely
_FLAG_EPS = 1e-12        # exceedance guard so eigensolver dust never flags


def _exceeds(y: np.ndarray, ucl: np.ndarray) -> np.ndarray:
    return y > ucl + _FLAG_EPS * np.maximum(1.0, np.abs(ucl))

METHODS = ("omni", "mase")


# ---------------------------------------------------------------------------
# result containers


@dataclass(frozen=True)
class StatSeries:
    """Graph- and vertex-level displacement statistics of a jointly embedded series."""

    graph_stats: dict[int, float]
    vertex_stats: dict[int, np.ndarray]
    span: int
    method: str
    dims: tuple[int, int | None]

    def times(self) -> list[int]:
        return sorted(self.graph_stats)


@dataclass(frozen=True)
class ControlChart:
    """Shewhart-style chart: center line, 3-sigma upper control limit, flags.

    For ``kind="graph"`` the statistic and flags are one value per chartable
    time; for ``kind="vertex"`` they are one row per chartable time with one
    column per vertex, all vertices sharing that time's limits.
    """

    kind: str
    window: int
    times: np.ndarray
    statistic: np.ndarray
    center_line: np.ndarray
    sigma: np.ndarray
    ucl: np.ndarray
    flags: np.ndarray
    labels: tuple[str, ...] | None = None

    def any_flag(self) -> bool:
        return bool(np.any(self.flags))

    def flagged_times(self) -> list[int]:
        if self.kind == "graph":
            return [int(t) for t, f in zip(self.times, self.flags) if f]
        return [int(t) for t, row in zip(self.times, self.flags) if np.any(row)]

    def to_csv(self, dest: IO[str]) -> None:
        if self.kind == "graph":
            dest.write("time,statistic,center_line,sigma,ucl,flag\n")
            for k, t in enumerate(self.times):
                dest.write(
                    f"{int(t)},{self.statistic[k]:.17g},{self.center_line[k]:.17g},"
                    f"{self.sigma[k]:.17g},{self.ucl[k]:.17g},{int(self.flags[k])}\n"
                )
            return
        dest.write("time,vertex,statistic,center_line,sigma,ucl,flag\n")
        n = self.statistic.shape[1]
        names = self.labels if self.labels is not None else [str(i) for i in range(n)]
        for k, t in enumerate(self.times):
            for i in range(n):
                dest.write(
                    f"{int(t)},{names[i]},{self.statistic[k, i]:.17g},"
                    f"{self.center_line[k]:.17g},{self.sigma[k]:.17g},"
                    f"{self.ucl[k]:.17g},{int(self.flags[k, i])}\n"
                )


@dataclass(frozen=True)
class DetectionReport:
    """Empirical bootstrap p-values for graph- and vertex-level anomalies."""

    p_graph: dict[int, float]
    p_vertex: dict[int, np.ndarray]
    n_boot: int
    alpha: float
    seed: int | None
    labels: tuple[str, ...] | None = None
    config: dict = field(default_factory=dict)

    def anomalous_times(self) -> list[int]:
        return sorted(t for t, p in self.p_graph.items() if p < self.alpha)

    def any_flag(self) -> bool:
        if self.anomalous_times():
            return True
        return any(bool(np.any(p < self.alpha)) for p in self.p_vertex.values())

    def to_json_dict(self) -> dict:
        n = len(self.labels) if self.labels else 0
        names = self.labels if self.labels else tuple(str(i) for i in range(n))
        return {
            "alpha": self.alpha,
            "n_boot": self.n_boot,
            "seed": self.seed,
            "config": self.config,
            "p_graph": {str(t): self.p_graph[t] for t in sorted(self.p_graph)},
            "p_vertex": {
                str(t): {names[i]: float(p) for i, p in enumerate(self.p_vertex[t])}
                for t in sorted(self.p_vertex)
            },
        }


# ---------------------------------------------------------------------------
# displacement statistics


def vertex_stat(curr: LatentPositions, prev: LatentPositions, i: int) -> float:
    """Euclidean displacement of vertex ``i`` between two embeddings."""
    if curr.matrix.shape != prev.matrix.shape:
        raise ValueError("embeddings have mismatched shapes")
    if not 0 <= i < curr.n:
        raise IndexError(f"vertex index {i} out of range [0, {curr.n})")
    return float(np.linalg.norm(curr.matrix[i] - prev.matrix[i]))


def graph_stat(curr: LatentPositions, prev: LatentPositions) -> float:
    """Largest singular value of the embedding difference matrix."""
    if curr.matrix.shape != prev.matrix.shape:
        raise ValueError("embeddings have mismatched shapes")
    diff = curr.matrix - prev.matrix
    if not diff.any():
        return 0.0
    return float(np.linalg.svd(diff, compute_uv=False)[0])


def _pair_displacement(curr: np.ndarray, prev: np.ndarray):
    diff = curr - prev
    vstats = np.linalg.norm(diff, axis=1)
    gstat = float(np.linalg.svd(diff, compute_uv=False)[0]) if diff.any() else 0.0
    return gstat, vstats


def _embed(series, method: str, d: int, d_joint: int | None, times):
    if method == "omni":
        return omni_embed(series, d, times=times).positions
    if method == "mase":
        return mase_embed(series, d, d_joint=d_joint, times=times).positions
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _operational_matrices(g: GraphSeries):
    if g.n <= _DENSIFY_MAX:
        return [a.toarray() for a in g.adjacency]
    return list(g.adjacency)


def _resolve_span(span, m: int) -> int:
    if span in ("all", "full", "M"):
        return m
    s = int(span)
    if s not in (2, m):
        raise ValueError(f"span must be 2 or 'all' (= {m}), got {span!r}")
    return s


def compute_stats(
    g: GraphSeries,
    method: str = "omni",
    d: int = 1,
    d_joint: int | None = None,
    span=2,
) -> StatSeries:
    """Displacement statistics for every adjacent pair of time points.

    With ``span=2`` each consecutive pair of graphs is embedded jointly on its
    own; with ``span="all"`` the whole series is embedded once and statistics
    are read off adjacent blocks.
    """
    if g.m < 2:
        raise ValueError("need at least 2 time points")
    s = _resolve_span(span, g.m)
    mats = _operational_matrices(g)
    gstats: dict[int, float] = {}
    vstats: dict[int, np.ndarray] = {}
    if s == 2:
        for k in range(1, g.m):
            pos = _embed(mats[k - 1:k + 1], method, d, d_joint, g.times[k - 1:k + 1])
            gs, vs = _pair_displacement(pos[1].matrix, pos[0].matrix)
            gstats[g.times[k]] = gs
            vstats[g.times[k]] = vs
    else:
        pos = _embed(mats, method, d, d_joint, g.times)
        for k in range(1, g.m):
            gs, vs = _pair_displacement(pos[k].matrix, pos[k - 1].matrix)
            gstats[g.times[k]] = gs
            vstats[g.times[k]] = vs
    return StatSeries(
        graph_stats=gstats, vertex_stats=vstats, span=s, method=method, dims=(d, d_joint)
    )


# ---------------------------------------------------------------------------
# parametric bootstrap


def _edge_probabilities(xhat: np.ndarray, clamp_warn_fraction: float = 0.01) -> np.ndarray:
    """Upper-triangle edge probabilities from estimated positions, clamped to [0, 1]."""
    p = xhat @ xhat.T
    iu = upper_indices(p.shape[0])
    pu = p[iu]
    clamped = np.count_nonzero((pu < 0) | (pu > 1))
    if pu.size and clamped / pu.size > clamp_warn_fraction:
        warnings.warn(
            f"{clamped / pu.size:.1%} of estimated edge probabilities fell outside "
            "[0, 1] and were clamped; bootstrap p-values may be unreliable",
            stacklevel=3,
        )
    return np.clip(pu, 0.0, 1.0)


def bootstrap_null(
    xhat: LatentPositions | np.ndarray,
    method: str = "omni",
    d: int = 1,
    d_joint: int | None = None,
    n_boot: int = 400,
    seed=None,
    span: int = 2,
    stat_block: int | None = None,
):
    """Null distribution of the displacement statistics by parametric bootstrap.

    Each replicate samples ``span`` independent graphs whose edge
    probabilities are the clamped inner products of ``xhat``, embeds them
    jointly with the configured method, and records the graph statistic and
    all vertex statistics between adjacent blocks.  Replicate ``b`` consumes
    a private random stream derived from ``(seed, b)``, so results do not
    depend on evaluation order.

    Returns:
        (graph_samples, vertex_samples): arrays of shape (B,) and (B, n).
    """
    if n_boot < 1:
        raise ValueError("n_boot must be at least 1")
    if span < 2:
        raise ValueError("bootstrap span must be at least 2")
    x = xhat.matrix if isinstance(xhat, LatentPositions) else np.asarray(xhat, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("positions contain non-finite entries")
    j = span - 1 if stat_block is None else stat_block
    if not 1 <= j < span:
        raise ValueError(f"stat_block {stat_block} out of range [1, {span})")

    n = x.shape[0]
    pu = _edge_probabilities(x)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(n_boot)
    gsamp = np.empty(n_boot)
    vsamp = np.empty((n_boot, n))
    for b in range(n_boot):
        rng = np.random.default_rng(children[b])
        graphs = [sample_adjacency(pu, n, rng) for _ in range(span)]
        pos = _embed(graphs, method, d, d_joint, list(range(span)))
        gsamp[b], vsamp[b] = _pair_displacement(pos[j].matrix, pos[j - 1].matrix)
    return gsamp, vsamp


def empirical_pvalue(y: float, samples: Sequence[float]) -> float:
    """Fraction of null samples strictly exceeding the observed statistic."""
    s = np.asarray(samples, dtype=np.float64)
    if s.size == 0:
        raise ValueError("empty sample array")
    return float(np.count_nonzero(s > y)) / s.size


# ---------------------------------------------------------------------------
# control charts


def c4(n: int) -> float:
    """Unbiasing constant for the sample standard deviation of n normal draws."""
    if n < 2:
        raise ValueError("c4 requires n >= 2")
    return float(np.sqrt(2.0 / (n - 1)) * np.exp(gammaln(n / 2) - gammaln((n - 1) / 2)))


def _chartable_times(times: list[int], window: int) -> list[int]:
    have = set(times)
    return [t for t in times if all(t - o in have for o in range(1, window))]


def chart_graph(stats: Mapping[int, float], window: int) -> ControlChart:
    """Graph-level chart: moving-average center line and adjusted moving range.

    A time is chartable when statistics exist at all ``window - 1`` preceding
    times.  Flagged points stay in later windows.
    """
    if window < 3:
        raise ValueError("window length must be at least 3")
    times = sorted(int(t) for t in stats)
    chartable = _chartable_times(times, window)
    if not chartable:
        raise ValueError(
            f"insufficient history: need {window - 1} consecutive statistics before a chartable time"
        )
    rows = {"t": [], "y": [], "cl": [], "sig": []}
    for t in chartable:
        w = np.array([stats[t - o] for o in range(window - 1, 0, -1)], dtype=np.float64)
        cl = float(w.mean())
        sig = float(np.abs(np.diff(w)).sum() / (MOVING_RANGE_D2 * (window - 2)))
        rows["t"].append(t)
        rows["y"].append(float(stats[t]))
        rows["cl"].append(cl)
        rows["sig"].append(sig)
    t = np.array(rows["t"])
    y = np.array(rows["y"])
    cl = np.array(rows["cl"])
    sig = np.array(rows["sig"])
    ucl = cl + 3.0 * sig
    return ControlChart(
        kind="graph", window=window, times=t, statistic=y,
        center_line=cl, sigma=sig, ucl=ucl, flags=_exceeds(y, ucl),
    )


def chart_vertex(
    stats: Mapping[int, np.ndarray],
    window: int,
    labels: Sequence[str] | None = None,
) -> ControlChart:
    """Vertex-level chart with grand-mean center line and unbiased pooled spread.

    The dispersion at each chartable time averages the per-time sample
    standard deviations across vertices over the window and unbiases the
    average by ``c4(n)``.  All vertices share that time's limits.
    """
    if window < 2:
        raise ValueError("window length must be at least 2")
    times = sorted(int(t) for t in stats)
    n = np.asarray(stats[times[0]]).shape[0]
    if n < 2:
        raise ValueError("vertex chart needs at least 2 vertices")
    chartable = _chartable_times(times, window)
    if not chartable:
        raise ValueError(
            f"insufficient history: need {window - 1} consecutive statistics before a chartable time"
        )
    cn = c4(n)
    t_out, y_out, cl_out, sig_out = [], [], [], []
    for t in chartable:
        w = np.stack([np.asarray(stats[t - o], dtype=np.float64) for o in range(window - 1, 0, -1)])
        cl = float(w.mean())
        sig = float(np.sum(np.std(w, axis=1, ddof=1)) / (cn * (window - 1)))
        t_out.append(t)
        y_out.append(np.asarray(stats[t], dtype=np.float64))
        cl_out.append(cl)
        sig_out.append(sig)
    t = np.array(t_out)
    y = np.stack(y_out)
    cl = np.array(cl_out)
    sig = np.array(sig_out)
    ucl = cl + 3.0 * sig
    return ControlChart(
        kind="vertex", window=window, times=t, statistic=y,
        center_line=cl, sigma=sig, ucl=ucl, flags=_exceeds(y, ucl[:, None]),
        labels=tuple(labels) if labels is not None else None,
    )


# ---------------------------------------------------------------------------
# rank metrics


def reciprocal_ranks(values: Sequence[float]) -> np.ndarray:
    """1 / rank of each value in the descending sort, ties broken by index."""
    v = np.asarray(values, dtype=np.float64).ravel()
    n = v.size
    if n < 1:
        raise ValueError("need at least one value")
    order = np.lexsort((np.arange(n), -v))
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(1, n + 1)
    return 1.0 / ranks


def rr_gap(values: Sequence[float], anomalous: Sequence[int]) -> float:
    """Mean reciprocal rank of the anomalous set minus the complement's mean."""
    v = np.asarray(values, dtype=np.float64).ravel()
    idx = np.asarray(sorted(set(int(i) for i in anomalous)), dtype=np.int64)
    if idx.size == 0 or idx.size >= v.size:
        raise ValueError("anomalous set must be a nonempty proper subset of the vertices")
    if idx.min() < 0 or idx.max() >= v.size:
        raise IndexError("anomalous vertex index out of range")
    rr = reciprocal_ranks(v)
    mask = np.zeros(v.size, dtype=bool)
    mask[idx] = True
    return float(rr[mask].mean() - rr[~mask].mean())


# ---------------------------------------------------------------------------
# end-to-end detectors


def _pvalue_task(pair, method, d, d_joint, n_boot, child_seed, span, stat_block):
    pos = _embed(list(pair), method, d, d_joint, list(range(len(pair))))
    k = len(pair) - 1 if stat_block is None else stat_block
    y, yv = _pair_displacement(pos[k].matrix, pos[k - 1].matrix)
    gs, vs = bootstrap_null(
        pos[k].matrix, method=method, d=d, d_joint=d_joint,
        n_boot=n_boot, seed=child_seed, span=span, stat_block=None if span == 2 else stat_block,
    )
    p = empirical_pvalue(y, gs)
    pv = (vs > yv[None, :]).sum(axis=0) / n_boot
    return p, pv


def detect_pvalue(
    g: GraphSeries,
    method: str = "omni",
    d: int | None = None,
    d_joint: int | None = None,
    span=2,
    n_boot: int = 400,
    alpha: float = 0.05,
    seed=None,
    at_times: Sequence[int] | None = None,
    full_span_null: bool = False,
    n_jobs: int = 1,
) -> DetectionReport:
    """Bootstrapped anomaly p-values for each transition in the series.

    For every time with a preceding graph (optionally restricted to
    ``at_times``), the observed displacement statistics are compared against
    ``n_boot`` parametric-bootstrap replicates generated under the hypothesis
    that nothing moved.  The bootstrap at time t replicates adjacent pairs
    from that time's estimated positions; with ``span="all"`` and
    ``full_span_null=True`` it replicates the whole span instead.

    All randomness derives from ``seed``; reports are identical for a given
    seed regardless of ``n_jobs``.
    """
    if d is None:
        raise ValueError("embedding dimension d is required")
    if g.m < 2:
        raise ValueError("need at least 2 time points")
    s = _resolve_span(span, g.m)
    mats = _operational_matrices(g)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    time_seeds = root.spawn(g.m)

    targets = list(range(1, g.m))
    if at_times is not None:
        wanted = {int(t) for t in at_times}
        untestable = wanted - set(g.times[1:])
        if untestable:
            raise ValueError(
                f"times {sorted(untestable)} have no preceding graph or are not in the series"
            )
        targets = [k for k in targets if g.times[k] in wanted]

    if s == 2:
        results = Parallel(n_jobs=n_jobs)(
            delayed(_pvalue_task)(
                (mats[k - 1], mats[k]), method, d, d_joint, n_boot, time_seeds[k], 2, None
            )
            for k in targets
        )
    else:
        pos = _embed(mats, method, d, d_joint, g.times)

        def _full_task(k):
            y, yv = _pair_displacement(pos[k].matrix, pos[k - 1].matrix)
            if full_span_null:
                bspan, bblock = g.m, k
            else:
                bspan, bblock = 2, None
            gs, vs = bootstrap_null(
                pos[k].matrix, method=method, d=d, d_joint=d_joint,
                n_boot=n_boot, seed=time_seeds[k], span=bspan, stat_block=bblock,
            )
            return empirical_pvalue(y, gs), (vs > yv[None, :]).sum(axis=0) / n_boot

        results = Parallel(n_jobs=n_jobs)(delayed(_full_task)(k) for k in targets)
    p_graph = {g.times[k]: r[0] for k, r in zip(targets, results)}
    p_vertex = {g.times[k]: r[1] for k, r in zip(targets, results)}

    cfg = {
        "method": method, "span": "all" if s == g.m else 2, "d": d, "d_joint": d_joint,
        "n_boot": n_boot, "alpha": alpha, "full_span_null": full_span_null,
    }
    seed_echo = seed if isinstance(seed, (int, type(None))) else None
    return DetectionReport(
        p_graph=p_graph, p_vertex=p_vertex, n_boot=n_boot, alpha=alpha,
        seed=seed_echo, labels=g.labels, config=cfg,
    )


def detect_chart(
    g: GraphSeries,
    method: str = "omni",
    d: int | None = None,
    d_joint: int | None = None,
    span=2,
    window: int = 11,
) -> tuple[ControlChart, ControlChart]:
    """Control-chart anomaly detection; returns the (graph, vertex) chart pair."""
    if d is None:
        raise ValueError("embedding dimension d is required")
    stats = compute_stats(g, method=method, d=d, d_joint=d_joint, span=span)
    return (
        chart_graph(stats.graph_stats, window),
        chart_vertex(stats.vertex_stats, window, labels=g.labels),
    )
