"""Shared helpers for building test states."""

import numpy as np

from deltanls import DecomposedState, RadialField


def random_state(grid, rng, lam_range, q_range=(0.3, 3.0)):
    """Random smooth regular part plus a random charge; always q > 0."""
    r = grid.nodes
    lam = float(rng.uniform(*lam_range))
    phi = np.zeros_like(r)
    for _ in range(rng.integers(1, 4)):
        center = rng.uniform(0.0, 3.0)
        width = rng.uniform(0.5, 2.0)
        phi += rng.uniform(0.1, 1.0) * np.exp(-((r - center) ** 2) / (2.0 * width**2))
    q = float(rng.uniform(*q_range))
    return DecomposedState(lam=lam, q=q, phi=RadialField(grid, phi))
