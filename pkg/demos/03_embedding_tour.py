"""Tour of the three spectral embeddings and automatic dimension selection.

Builds a small two-community blockmodel pair, embeds it with the single-graph
embedding, the omnibus joint embedding, and the common-subspace joint
embedding, and shows how the scree-plot elbow picks the model rank.
"""

import numpy as np

import graphsentry as gs
from graphsentry.embedding import singular_values

rng = np.random.default_rng(0)
n = 120
z = np.zeros((n, 2))
z[: n // 2, 0] = 1.0
z[n // 2:, 1] = 1.0
x = gs.membership_positions(z, p=0.6, q=0.15)

a1 = gs.rdpg_sample(x, rng)
a2 = gs.rdpg_sample(x, rng)

# single-graph embedding: rows estimate latent positions up to rotation
single = gs.ase(a1, d=2)
print("single-graph embedding shape:", single.matrix.shape)

# scree elbow recovers the rank-2 structure
sv = singular_values(a1, max_rank=20)
print("leading singular values:", np.round(sv[:6], 1))
print("elbow picks d =", gs.select_dim(sv))

# omnibus: both graphs share one coordinate system, so displacement is meaningful
omni = gs.omni_embed([a1, a2], d=2)
disp = gs.graph_stat(omni.positions[1], omni.positions[0])
print(f"omnibus displacement between the two draws: {disp:.3f} (noise level)")

# common-subspace embedding exposes per-graph score matrices
mase = gs.mase_embed([a1, a2], d=2)
print("common subspace shape:", mase.common_subspace.shape)
print("score matrix for graph 1:\n", np.round(mase.scores[0], 2))
print("score matrix for graph 2:\n", np.round(mase.scores[1], 2))
disp = gs.graph_stat(mase.positions[1], mase.positions[0])
print(f"common-subspace displacement: {disp:.3f}")
