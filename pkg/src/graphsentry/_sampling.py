"""Shared Bernoulli graph sampling on the upper triangle."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=8)
def upper_indices(n: int):
    return np.triu_indices(n, k=1)


def sample_adjacency(p_upper: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Symmetric hollow 0/1 matrix with independent Bernoulli(p) upper-triangle edges."""
    iu = upper_indices(n)
    a = np.zeros((n, n))
    a[iu] = rng.random(p_upper.shape[0]) < p_upper
    return a + a.T
