"""Embedding of the n! permutation matrices onto the unit hypersphere.

Permutation matrices live in an (n-1)^2 dimensional affine subspace of
R^{n^2} and sit at distance sqrt(n-1) from the barycenter (1/n) * ones.
Shifting by the barycenter, projecting onto an orthonormal basis of that
subspace and dividing by sqrt(n-1) puts every permutation on the unit
sphere S^{(n-1)^2 - 1}.  Going back is the inverse linear map followed by a
nearest-permutation search (a linear assignment problem).

Matrices are vectorized row-major throughout.
"""
from __future__ import annotations

import functools
import itertools
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assignment import solve_lap

CACHE_MAGIC = b"PSQB"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sII")

UNIT_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when object counts or vector lengths do not line up."""


@dataclass(frozen=True, eq=False)
class EmbeddingBasis:
    """Orthonormal basis Q (n^2 x (n-1)^2) of the Birkhoff affine subspace."""

    n: int
    Q: np.ndarray

    @property
    def dim(self) -> int:
        return (self.n - 1) ** 2

    @property
    def radius(self) -> float:
        return math.sqrt(self.n - 1)

    @property
    def center(self) -> np.ndarray:
        return np.full(self.n * self.n, 1.0 / self.n)


def constraint_normals(n: int) -> np.ndarray:
    """All 2n row-sum and column-sum normals as columns of an n^2 x 2n array.

    Columns 0..n-1 are the row normals, n..2n-1 the column normals.
    """
    W = np.zeros((n * n, 2 * n))
    for i in range(n):
        W[i * n:(i + 1) * n, i] = 1.0
        W[i::n, n + i] = 1.0
    return W


def _fix_signs(Q: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    # first coordinate that is clearly nonzero is made positive
    idx = np.argmax(np.abs(Q) > tol, axis=0)
    signs = np.sign(Q[idx, np.arange(Q.shape[1])])
    signs[signs == 0] = 1.0
    return Q * signs


def _construct(n: int) -> EmbeddingBasis:
    # one row normal is a combination of the others; drop the last column normal
    W = constraint_normals(n)[:, : 2 * n - 1]
    full, _ = np.linalg.qr(W, mode="complete")
    Q = _fix_signs(full[:, 2 * n - 1:])
    Q = np.ascontiguousarray(Q)
    Q.setflags(write=False)
    return EmbeddingBasis(n=n, Q=Q)


@functools.lru_cache(maxsize=None)
def _cached(n: int) -> EmbeddingBasis:
    return _construct(n)


def build_basis(n: int, cache_dir: str | Path | None = None) -> EmbeddingBasis:
    """Return the embedding basis for ``n`` objects.

    Construction is memoized in-process.  If ``cache_dir`` is given the basis
    is also read from / written to ``basis_n{n}.bin`` in that directory.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise DimensionError(f"need n >= 2 objects, got {n!r}")
    n = int(n)
    if cache_dir is None:
        return _cached(n)
    path = Path(cache_dir) / f"basis_n{n}.bin"
    if path.exists():
        return load_basis(path)
    basis = _cached(n)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_basis(basis, path)
    return basis


def save_basis(basis: EmbeddingBasis, path: str | Path) -> None:
    """Write Q as header (magic, version, n) plus little-endian float64 data."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, basis.n))
        fh.write(np.asarray(basis.Q, dtype="<f8").tobytes(order="C"))


def load_basis(path: str | Path) -> EmbeddingBasis:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated basis cache header")
    magic, version, n = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC:
        raise ValueError(f"{path}: not a basis cache file")
    if version != CACHE_VERSION:
        raise ValueError(f"{path}: unsupported cache version {version}")
    count = n * n * (n - 1) ** 2
    body = raw[_HEADER.size:]
    if len(body) != 8 * count:
        raise ValueError(f"{path}: expected {count} coordinates, found {len(body) // 8}")
    Q = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(n * n, (n - 1) ** 2)
    Q.setflags(write=False)
    return EmbeddingBasis(n=n, Q=Q)


def as_permutation_matrix(perm) -> np.ndarray:
    """Build an n x n 0/1 matrix from a row->column index sequence."""
    perm = np.asarray(perm, dtype=np.intp)
    n = perm.size
    P = np.zeros((n, n))
    P[np.arange(n), perm] = 1.0
    return P


def permutation_indices(P: np.ndarray) -> np.ndarray:
    """Inverse of :func:`as_permutation_matrix`: the column of the 1 in each row."""
    return np.argmax(np.asarray(P), axis=1)


def is_permutation_matrix(P) -> bool:
    P = np.asarray(P)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        return False
    if not np.all((P == 0) | (P == 1)):
        return False
    return bool(np.all(P.sum(axis=0) == 1) and np.all(P.sum(axis=1) == 1))


def all_permutation_matrices(n: int) -> np.ndarray:
    """Every n x n permutation matrix, stacked as an (n!, n, n) array."""
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    out = np.zeros((len(perms), n, n))
    rows = np.arange(n)
    for k, p in enumerate(perms):
        out[k, rows, p] = 1.0
    return out


def _check_matrix(P, basis: EmbeddingBasis) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.shape != (basis.n, basis.n):
        raise DimensionError(f"expected a {basis.n}x{basis.n} matrix, got shape {P.shape}")
    return P


def _check_point(y, basis: EmbeddingBasis) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (basis.dim,):
        raise DimensionError(f"expected a sphere point of length {basis.dim}, got shape {y.shape}")
    norm = np.linalg.norm(y)
    if abs(norm - 1.0) > UNIT_TOL:
        raise ValueError(f"sphere point must have unit norm, got {norm!r}")
    return y


def project(M, basis: EmbeddingBasis) -> np.ndarray:
    """Q^T (vec(M) - center) / sqrt(n-1), without any norm requirement.

    Accepts a single n x n matrix or a stack of them (..., n, n).
    """
    M = np.asarray(M, dtype=float)
    n = basis.n
    flat = M.reshape(*M.shape[:-2], n * n) - 1.0 / n
    return flat @ basis.Q / basis.radius


def to_sphere(P, basis: EmbeddingBasis) -> np.ndarray:
    """Embed a permutation matrix as a unit vector of length (n-1)^2."""
    P = _check_matrix(P, basis)
    if not is_permutation_matrix(P):
        raise ValueError("input is not a permutation matrix")
    return project(P, basis)


def lift(y, basis: EmbeddingBasis, *, check: bool = True) -> np.ndarray:
    """Map a unit sphere point back to an n x n matrix in the Birkhoff subspace."""
    y = _check_point(y, basis) if check else np.asarray(y, dtype=float)
    n = basis.n
    flat = basis.radius * (basis.Q @ y) + 1.0 / n
    return flat.reshape(n, n)


def nearest_permutation(T) -> np.ndarray:
    """Permutation matrix minimizing the Frobenius distance to ``T``.

    ||T - P||^2 = ||T||^2 - 2 <T, P> + n, so the nearest permutation maximizes
    the assigned sum of T.
    """
    return solve_lap(-np.asarray(T, dtype=float))


def from_sphere(y, basis: EmbeddingBasis) -> np.ndarray:
    """L2-nearest permutation matrix to the lifted sphere point."""
    return nearest_permutation(lift(y, basis))
