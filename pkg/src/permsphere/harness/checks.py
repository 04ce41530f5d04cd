"""Self-test of the permutation embedding for one value of n."""
from __future__ import annotations

import math

import numpy as np

from ..embedding import (
    all_permutation_matrices,
    build_basis,
    constraint_normals,
    from_sphere,
    project,
)

EXHAUSTIVE_LIMIT = 7
RANDOM_DRAWS = 1000


def embedding_checks(n: int, seed: int = 0, tol: float = 1e-10) -> list[tuple[str, float, bool]]:
    """Return (name, measured value, passed) rows.

    Round trips are exhaustive up to n = 7 and use 1000 random
    permutations beyond that.
    """
    basis = build_basis(n)
    Q = basis.Q
    rows = []
    ortho = float(np.abs(Q.T @ Q - np.eye(basis.dim)).max())
    rows.append(("orthonormality_max_dev", ortho, ortho <= tol))
    normals = float(np.abs(constraint_normals(n).T @ Q).max())
    rows.append(("constraint_normal_max_dot", normals, normals <= tol))

    if n <= EXHAUSTIVE_LIMIT:
        perms = all_permutation_matrices(n)
    else:
        rng = np.random.default_rng(seed)
        perms = np.zeros((RANDOM_DRAWS, n, n))
        for k in range(RANDOM_DRAWS):
            perms[k, np.arange(n), rng.permutation(n)] = 1.0
    centered = perms.reshape(len(perms), n * n) - 1.0 / n
    radius_dev = float(np.abs(np.linalg.norm(centered, axis=1) - math.sqrt(n - 1)).max())
    rows.append(("radius_max_dev", radius_dev, radius_dev <= tol))

    ys = project(perms, basis)
    unit_dev = float(np.abs(np.linalg.norm(ys, axis=1) - 1.0).max())
    rows.append(("unit_norm_max_dev", unit_dev, unit_dev <= tol))

    failures = sum(not np.array_equal(from_sphere(y, basis), P) for y, P in zip(ys, perms))
    rows.append(("roundtrip_failures", float(failures), failures == 0))
    rows.append(("permutations_checked", float(len(perms)), True))
    return rows
