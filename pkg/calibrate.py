"""Pre-acceptance calibration sweep (not part of the package)."""
import time
import warnings

import numpy as np
from joblib import Parallel, delayed

warnings.filterwarnings("ignore")
import graphsentry as gs


def c2_probe(n_rep=10, n_boot=200):
    t0 = time.perf_counter()

    def one(r):
        lat = gs.scenario1(delta_x=0.3, seed=5000 + r)
        g = gs.sample_series(lat, seed=6000 + r)
        out = {}
        for method, dj in (("omni", None), ("mase", 2)):
            rep = gs.detect_pvalue(g, method=method, d=1, d_joint=dj, span=2,
                                   n_boot=n_boot, seed=7000 + r)
            out[method] = rep.p_graph
        return out

    rows = Parallel(n_jobs=2)(delayed(one)(r) for r in range(n_rep))
    for method in ("omni", "mase"):
        p6 = np.median([r[method][6] for r in rows])
        p7 = np.median([r[method][7] for r in rows])
        pooled = np.median([r[method][t] for r in rows for t in r[method] if t not in (6, 7)])
        p8 = np.median([r[method][8] for r in rows])
        print(f"C2 {method}: med p6={p6:.3f} p7={p7:.3f} pooled-null={pooled:.3f} p8={p8:.3f}")
    print(f"C2 probe took {time.perf_counter()-t0:.0f}s")


def c34_probe(theta, label, n_rep=10, n_boot=150):
    t0 = time.perf_counter()

    def one(r):
        lat = gs.scenario_mmsbm(theta=theta, seed=8000 + r)
        g = gs.sample_series(lat, seed=9000 + r)
        anom = sorted(lat.anomalous_vertices)
        out = {}
        for method in ("omni", "mase"):
            rep = gs.detect_pvalue(g, method=method, d=4, d_joint=4, span=2,
                                   n_boot=n_boot, seed=10000 + r, at_times=[6, 7])
            st = gs.compute_stats(g, method=method, d=4, d_joint=4, span=2)
            gaps_anom = [gs.rr_gap(st.vertex_stats[t], anom) for t in (6, 7)]
            gaps_null = [gs.rr_gap(st.vertex_stats[t], anom) for t in st.vertex_stats if t not in (6, 7)]
            out[method] = ([rep.p_graph[6], rep.p_graph[7]], gaps_anom, gaps_null)
        return out

    rows = Parallel(n_jobs=2)(delayed(one)(r) for r in range(n_rep))
    for method in ("omni", "mase"):
        ps = [p for r in rows for p in r[method][0]]
        ga = [x for r in rows for x in r[method][1]]
        gn = [x for r in rows for x in r[method][2]]
        print(f"{label} {method}: med p={np.median(ps):.3f} "
              f"rr anom={np.mean(ga):.4f}(se {np.std(ga,ddof=1)/np.sqrt(len(ga)):.4f}) "
              f"null={np.mean(gn):.4f}(se {np.std(gn,ddof=1)/np.sqrt(len(gn)):.4f})")
    print(f"{label} probe took {time.perf_counter()-t0:.0f}s")


def c7_probe(n_rep=5, n_boot=200):
    t0 = time.perf_counter()

    def one(r):
        lat = gs.scenario1(delta_x=0.0, seed=11000 + r)
        g = gs.sample_series(lat, seed=12000 + r)
        rep = gs.detect_pvalue(g, method="omni", d=1, span=2, n_boot=n_boot,
                               seed=13000 + r, at_times=list(range(-7, 13)))
        return [rep.p_graph[t] for t in rep.p_graph]

    rows = Parallel(n_jobs=2)(delayed(one)(r) for r in range(n_rep))
    ps = np.array([p for row in rows for p in row])
    rate = float(np.mean(ps < 0.05))
    print(f"C7: rejection rate {rate:.4f} over {ps.size} replicate-times "
          f"(3sd band for n=200: [{0.05-3*np.sqrt(.05*.95/200):.4f}, {0.05+3*np.sqrt(.05*.95/200):.4f}])")
    print(f"C7 probe took {time.perf_counter()-t0:.0f}s")


def c8_probe(seed=0):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    n, m = 2000, 12
    blocks = np.repeat(np.arange(4), n // 4)
    p_in, p_out = 0.08, 0.02
    prob = np.where(blocks[:, None] == blocks[None, :], p_in, p_out)
    np.fill_diagonal(prob, 0.0)
    iu = np.triu_indices(n, 1)
    pu = prob[iu]
    mats = []
    for _ in range(m):
        edges = rng.random(pu.size) < pu
        w = np.where(edges, rng.integers(1, 6, size=pu.size).astype(float), 0.0)
        a = np.zeros((n, n))
        a[iu] = w
        mats.append(a + a.T)
    g = gs.GraphSeries.from_matrices(mats, times=range(1, m + 1))
    g = gs.largest_joint_component(g)
    clique = [g.labels[i] for i in rng.choice(np.flatnonzero(blocks == 0), 100, replace=False)]
    g = gs.inject_clique(g, 6, clique, weight=1.0)
    g = gs.normalize_weights(g, 2.0)
    print(f"built series n={g.n} in {time.perf_counter()-t0:.0f}s")

    t1 = time.perf_counter()
    from graphsentry.embedding import select_dim, singular_values
    densest = max(g.adjacency, key=lambda a: a.nnz)
    sv = singular_values(densest, max_rank=1000)
    d = select_dim(sv, max_rank=1000)
    print(f"auto dim: {d} (top svals {np.round(sv[:8],1)}) in {time.perf_counter()-t1:.0f}s")

    t1 = time.perf_counter()
    cg, cv = gs.detect_chart(g, method="omni", d=d, span=2, window=3)
    print(f"charts in {time.perf_counter()-t1:.0f}s; graph flags: {cg.flagged_times()}")
    k6 = list(cg.times).index(6)
    print("graph stats by time:", {int(t): round(float(s), 3) for t, s in zip(cg.times, cg.statistic)})
    kx = list(cv.times).index(6)
    clique_idx = np.array([g.index_of(c) for c in clique])
    mask = np.zeros(g.n, dtype=bool); mask[clique_idx] = True
    fl = cv.flags[kx]
    print(f"vertex flags at 6: clique {fl[mask].mean():.3f}, non-clique {fl[~mask].mean():.4f}")
    print(f"C8 probe took {time.perf_counter()-t0:.0f}s total")


def c5_probe(n_mc=20, n_boot=100):
    t0 = time.perf_counter()
    table = gs.power_experiment([0.05, 0.9], n_mc=n_mc, n_boot=n_boot,
                                methods=("omni", "mase"), spans=(2,), seed=101, n_jobs=2)
    for row in table.rows:
        print(f"C5 theta={row.theta} {row.method}: power={row.power:.3f}(se {row.power_se:.3f}) "
              f"rr_gap={row.rr_gap:.4f}(se {row.rr_gap_se:.4f})")
    print(f"C5 probe took {time.perf_counter()-t0:.0f}s")


if __name__ == "__main__":
    import sys
    which = sys.argv[1] if len(sys.argv) > 1 else "all"
    if which in ("c2", "all"):
        c2_probe()
    if which in ("c7", "all"):
        c7_probe()
    if which in ("c8", "all"):
        c8_probe()
    if which in ("c3", "all"):
        c34_probe(0.125, "C3")
    if which in ("c4", "all"):
        c34_probe(0.875, "C4")
    if which in ("c5", "all"):
        c5_probe()
