"""Time series of vertex-matched graphs: container, edge-list IO, preprocessing."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class EdgeListError(ValueError):
    """Malformed edge-list input."""


def _is_exactly_symmetric(a: sp.csr_array) -> bool:
    d = (a - a.T).tocoo()
    return d.nnz == 0 or float(np.abs(d.data).max()) == 0.0


def _clean_csr(a) -> sp.csr_array:
    a = sp.csr_array(a)
    a.sum_duplicates()
    a.eliminate_zeros()
    a.sort_indices()
    return a


@dataclass(frozen=True, eq=False)
class GraphSeries:
    """Ordered sequence of vertex-matched, symmetric, weighted graphs.

    Every snapshot shares one vertex set and one vertex ordering.  Adjacency
    matrices are hollow (zero diagonal), exactly symmetric, with finite
    nonnegative weights, stored in CSR form.

    Attributes:
        labels: distinct vertex identifiers, in first-appearance order.
        times: strictly increasing integer time indices (may be negative).
        adjacency: one n-by-n CSR matrix per time point.
    """

    labels: tuple[str, ...]
    times: tuple[int, ...]
    adjacency: tuple[sp.csr_array, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        times = tuple(int(t) for t in self.times)
        mats = tuple(_clean_csr(a) for a in self.adjacency)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "adjacency", mats)

        if not labels:
            raise ValueError("series has no vertices")
        if len(set(labels)) != len(labels):
            raise ValueError("vertex labels must be distinct")
        for lab in labels:
            if not lab or any(c.isspace() for c in lab) or "#" in lab:
                raise ValueError(f"invalid vertex label {lab!r}")
        if not times:
            raise ValueError("series has no time points")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("times must be strictly increasing")
        if len(mats) != len(times):
            raise ValueError("adjacency count does not match time count")

        n = len(labels)
        for t, a in zip(times, mats):
            if a.shape != (n, n):
                raise ValueError(f"adjacency at time {t} has shape {a.shape}, expected {(n, n)}")
            if a.nnz and not np.all(np.isfinite(a.data)):
                raise ValueError(f"non-finite weight at time {t}")
            if a.nnz and float(a.data.min()) < 0:
                raise ValueError(f"negative weight at time {t}")
            if np.any(a.diagonal() != 0):
                raise ValueError(f"nonzero diagonal (self-loop) at time {t}")
            if not _is_exactly_symmetric(a):
                raise ValueError(f"asymmetric adjacency at time {t}")

    @property
    def n(self) -> int:
        """Number of vertices."""
        return len(self.labels)

    @property
    def m(self) -> int:
        """Number of time points."""
        return len(self.times)

    @cached_property
    def _label_index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    @cached_property
    def _time_index(self) -> dict[int, int]:
        return {t: k for k, t in enumerate(self.times)}

    def index_of(self, label: str) -> int:
        try:
            return self._label_index[str(label)]
        except KeyError:
            raise KeyError(f"unknown vertex {label!r}") from None

    def time_position(self, t: int) -> int:
        try:
            return self._time_index[int(t)]
        except KeyError:
            raise KeyError(f"unknown time {t}") from None

    def matrix(self, t: int) -> sp.csr_array:
        """Adjacency at time ``t`` (CSR)."""
        return self.adjacency[self.time_position(t)]

    def dense(self, t: int) -> np.ndarray:
        return self.matrix(t).toarray()

    def max_weight(self) -> float:
        return max((float(a.data.max()) if a.nnz else 0.0) for a in self.adjacency)

    @classmethod
    def from_matrices(
        cls,
        matrices: Sequence,
        times: Sequence[int] | None = None,
        labels: Sequence[str] | None = None,
    ) -> "GraphSeries":
        """Build a series from dense or sparse square matrices.

        Times default to 0..M-1 and labels to "0".."n-1".
        """
        mats = [sp.csr_array(sp.coo_array(m)) for m in matrices]
        if not mats:
            raise ValueError("empty matrix sequence")
        n = mats[0].shape[0]
        if times is None:
            times = range(len(mats))
        if labels is None:
            labels = [str(i) for i in range(n)]
        return cls(labels=tuple(labels), times=tuple(int(t) for t in times), adjacency=tuple(mats))

    def equals(self, other: "GraphSeries") -> bool:
        """Exact equality of labels, times, and weights."""
        if self.labels != other.labels or self.times != other.times:
            return False
        for a, b in zip(self.adjacency, other.adjacency):
            d = (a - b).tocoo()
            if d.nnz and float(np.abs(d.data).max()) != 0.0:
                return False
        return True

    def to_edge_list(self, dest: str | Path | IO[str]) -> None:
        """Write the series in the plain-text edge-list format.

        One line per undirected edge and time: ``t u v w`` with full-precision
        weights.  Reloading the output reproduces this series exactly.
        """
        if isinstance(dest, (str, Path)):
            with open(dest, "w", encoding="utf-8") as fh:
                self._write_edges(fh)
        else:
            self._write_edges(dest)

    def _write_edges(self, fh: IO[str]) -> None:
        fh.write("# time u v weight\n")
        for t, a in zip(self.times, self.adjacency):
            coo = sp.triu(sp.coo_matrix(a), k=1).tocoo()
            order = np.lexsort((coo.col, coo.row))
            for i, j, w in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{t} {self.labels[i]} {self.labels[j]} {w:.17g}\n")

    def to_edge_list_text(self) -> str:
        import io

        buf = io.StringIO()
        self._write_edges(buf)
        return buf.getvalue()


def load_edge_list(
    source: str | Path | IO[str], directed_policy: str = "symmetrize"
) -> GraphSeries:
    """Parse an edge-list text stream into a :class:`GraphSeries`.

    Each non-blank, non-comment line is ``t u v [w]`` with integer time ``t``,
    distinct vertex identifiers, and an optional positive weight (default 1).
    ``#`` starts a comment.  Duplicate ``(t, u, v)`` lines sum their weights.
    Vertices are ordered by first appearance.

    Args:
        source: path or open text stream.
        directed_policy: "symmetrize" accumulates both orientations into one
            undirected weight; "reject" raises if the same pair appears in
            both orientations at one time.

    Raises:
        EdgeListError: malformed line, self-loop, nonpositive weight,
            conflicting orientation under "reject", or empty input.
    """
    if directed_policy not in ("symmetrize", "reject"):
        raise ValueError(f"unknown directed_policy {directed_policy!r}")
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return _parse_edges(fh, directed_policy)
    return _parse_edges(source, directed_policy)


def _parse_edges(fh: IO[str], policy: str) -> GraphSeries:
    label_index: dict[str, int] = {}
    weights: dict[tuple[int, int, int], float] = {}
    orientations: dict[tuple[int, int, int], set[tuple[int, int]]] = {}

    def vid(tok: str) -> int:
        if tok not in label_index:
            label_index[tok] = len(label_index)
        return label_index[tok]

    for lineno, raw in enumerate(fh, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) not in (3, 4):
            raise EdgeListError(f"line {lineno}: expected 't u v [w]', got {raw.strip()!r}")
        try:
            t = int(toks[0])
        except ValueError:
            raise EdgeListError(f"line {lineno}: invalid time {toks[0]!r}") from None
        u, v = toks[1], toks[2]
        if u == v:
            raise EdgeListError(f"line {lineno}: self-loop on vertex {u!r}")
        w = 1.0
        if len(toks) == 4:
            try:
                w = float(toks[3])
            except ValueError:
                raise EdgeListError(f"line {lineno}: invalid weight {toks[3]!r}") from None
            if not np.isfinite(w) or w <= 0:
                raise EdgeListError(f"line {lineno}: nonpositive weight {toks[3]}")
        i, j = vid(u), vid(v)
        key = (t, min(i, j), max(i, j))
        if policy == "reject":
            seen = orientations.setdefault(key, set())
            seen.add((i, j))
            if len(seen) > 1:
                raise EdgeListError(
                    f"line {lineno}: edge {u!r}-{v!r} at time {t} appears in both orientations"
                )
        weights[key] = weights.get(key, 0.0) + w

    if not weights:
        raise EdgeListError("empty input: no edges found")

    labels = tuple(sorted(label_index, key=label_index.get))
    times = tuple(sorted({t for t, _, _ in weights}))
    n = len(labels)
    mats = []
    for t in times:
        rows, cols, data = [], [], []
        for (tt, i, j), w in weights.items():
            if tt != t:
                continue
            rows += [i, j]
            cols += [j, i]
            data += [w, w]
        mats.append(sp.csr_array(sp.coo_array((data, (rows, cols)), shape=(n, n))))
    return GraphSeries(labels=labels, times=times, adjacency=tuple(mats))


def largest_joint_component(g: GraphSeries) -> GraphSeries:
    """Restrict the series to the largest connected component of the union graph.

    The union graph has an edge wherever any snapshot does.  Ties between
    equally large components are broken by the earliest-loaded vertex.
    """
    union = g.adjacency[0].copy()
    for a in g.adjacency[1:]:
        union = union + a
    n_comp, assign = sp.csgraph.connected_components(sp.csr_matrix(union), directed=False)
    sizes = np.bincount(assign, minlength=n_comp)
    best = sizes.max()
    # among maximal components, the one containing the smallest vertex index
    candidates = np.flatnonzero(sizes == best)
    first_member = {c: int(np.flatnonzero(assign == c)[0]) for c in candidates}
    keep_comp = min(candidates, key=lambda c: first_member[c])
    idx = np.flatnonzero(assign == keep_comp)
    labels = tuple(g.labels[i] for i in idx)
    mats = tuple(a[np.ix_(idx, idx)] for a in g.adjacency)
    return GraphSeries(labels=labels, times=g.times, adjacency=mats)


def normalize_weights(g: GraphSeries, max_out: float = 2.0) -> GraphSeries:
    """Rescale all weights so the global maximum over the series equals ``max_out``.

    A series with no edges is returned unchanged.
    """
    if max_out <= 0:
        raise ValueError("max_out must be positive")
    w_max = g.max_weight()
    if w_max == 0.0:
        return g
    scale = max_out / w_max
    mats = tuple(a * scale for a in g.adjacency)
    return GraphSeries(labels=g.labels, times=g.times, adjacency=mats)


def inject_clique(
    g: GraphSeries,
    t: int,
    vertices: Iterable[str],
    weight: float = 1.0,
    mode: str = "increment",
) -> GraphSeries:
    """Plant a clique on ``vertices`` in the snapshot at time ``t``.

    With mode "increment" (default) every pairwise weight is increased by
    ``weight``; with mode "set" it is overwritten to ``weight``.  All other
    snapshots are untouched.
    """
    if mode not in ("increment", "set"):
        raise ValueError(f"unknown mode {mode!r}")
    if not np.isfinite(weight):
        raise ValueError("weight must be finite")
    k = g.time_position(t)
    idx = sorted(g.index_of(v) for v in vertices)
    if len(set(idx)) != len(idx):
        raise ValueError("duplicate vertices in clique set")
    if len(idx) < 2:
        raise ValueError("clique needs at least 2 vertices")

    pairs = list(itertools.combinations(idx, 2))
    rows = [p[0] for p in pairs] + [p[1] for p in pairs]
    cols = [p[1] for p in pairs] + [p[0] for p in pairs]
    n = g.n
    pattern = sp.csr_array(sp.coo_array((np.ones(len(rows)), (rows, cols)), shape=(n, n)))
    a = g.adjacency[k]
    if mode == "increment":
        new = a + pattern * weight
    else:
        new = a - a.multiply(pattern) + pattern * weight
    mats = list(g.adjacency)
    mats[k] = sp.csr_array(new)
    return GraphSeries(labels=g.labels, times=g.times, adjacency=tuple(mats))
