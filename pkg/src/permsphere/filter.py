"""Recursive Bayesian identity tracking with a vMF posterior on the sphere.

The posterior over the hidden assignment is a single von Mises-Fisher
density in (n-1)^2 dimensions.  Observations multiply in closed form,
prediction under a vMF transition kernel shrinks the concentration, and
partial observations are reduced to a vMF likelihood over the determined
part of the permutation matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .directional import VonMisesFisher, convolve_predict
from .embedding import (
    DimensionError,
    EmbeddingBasis,
    build_basis,
    from_sphere,
    project,
    to_sphere,
)

# transitions at least this concentrated are treated as deterministic
KAPPA_TR_PASSTHROUGH = 1e8
# resultant shorter than this means the evidence cancelled out
DEGENERATE_RESULTANT = 1e-12


@dataclass(frozen=True)
class FilterState:
    n: int
    posterior: VonMisesFisher

    def __post_init__(self):
        if self.posterior.m != (self.n - 1) ** 2:
            raise DimensionError(
                f"posterior dimension {self.posterior.m} does not match n={self.n}"
            )

    @property
    def mu(self) -> np.ndarray:
        return self.posterior.mu

    @property
    def kappa(self) -> float:
        return self.posterior.kappa


@dataclass(frozen=True)
class PartialObservation:
    """Observed (track, identity) pairs; every other pairing is unknown."""

    n: int
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple((int(t), int(i)) for t, i in self.pairs)
        tracks = [t for t, _ in pairs]
        idents = [i for _, i in pairs]
        if len(set(tracks)) != len(tracks):
            raise ValueError("partial observation repeats a track index")
        if len(set(idents)) != len(idents):
            raise ValueError("partial observation repeats an identity index")
        for t, i in pairs:
            if not (0 <= t < self.n and 0 <= i < self.n):
                raise ValueError(f"pair ({t}, {i}) out of range for n={self.n}")
        object.__setattr__(self, "pairs", pairs)

    @property
    def o(self) -> int:
        return len(self.pairs)

    @classmethod
    def from_permutation(cls, P, hidden_identities=()) -> "PartialObservation":
        """Observe every identity of ``P`` except those listed as hidden."""
        P = np.asarray(P)
        n = P.shape[0]
        hidden = set(int(i) for i in hidden_identities)
        cols = np.argmax(P, axis=1)
        pairs = tuple((t, int(c)) for t, c in enumerate(cols) if int(c) not in hidden)
        return cls(n=n, pairs=pairs)


@dataclass(frozen=True)
class SplitProjection:
    y_star: np.ndarray
    norm_star: float


def _check_n(state: FilterState, n: int) -> None:
    if state.n != n:
        raise DimensionError(f"filter tracks n={state.n} objects, input has n={n}")


def init_uniform(n: int, basis: EmbeddingBasis | None = None) -> FilterState:
    """Uniform prior; mu is parked on the embedded identity."""
    if n < 2:
        raise DimensionError(f"need n >= 2 objects, got {n}")
    basis = basis if basis is not None else build_basis(n)
    mu = to_sphere(np.eye(n), basis)
    return FilterState(n=n, posterior=VonMisesFisher(mu, 0.0))


def _combine(state: FilterState, weighted: np.ndarray) -> FilterState:
    v = weighted + state.kappa * state.mu
    kappa = float(np.linalg.norm(v))
    if kappa < DEGENERATE_RESULTANT:
        return FilterState(state.n, VonMisesFisher(state.mu, 0.0))
    mu = v / kappa
    return FilterState(state.n, VonMisesFisher(mu / np.linalg.norm(mu), kappa))


def update_full(state: FilterState, y_obs, kappa_obs: float) -> FilterState:
    """Multiply the posterior by a vMF likelihood centered at ``y_obs``."""
    y = np.asarray(y_obs, dtype=float)
    if y.shape != state.mu.shape:
        raise DimensionError(f"observation has shape {y.shape}, expected {state.mu.shape}")
    if abs(np.linalg.norm(y) - 1.0) > 1e-10:
        raise ValueError("observation must be a unit sphere point")
    if kappa_obs < 0:
        raise ValueError("kappa_obs must be >= 0")
    if kappa_obs == 0:
        return state
    return _combine(state, kappa_obs * y)


def predict(state: FilterState, kappa_tr: float) -> FilterState:
    """Diffuse the posterior through a vMF transition centered at the current state."""
    if kappa_tr < 0:
        raise ValueError("kappa_tr must be >= 0")
    if kappa_tr >= KAPPA_TR_PASSTHROUGH or state.kappa == 0:
        return state
    kappa = convolve_predict(state.kappa, kappa_tr, (state.n - 1) ** 2)
    return FilterState(state.n, VonMisesFisher(state.mu, kappa))


def determined_mask(obs: PartialObservation) -> np.ndarray:
    """n x n boolean mask of entries fixed by the observed pairs."""
    mask = np.zeros((obs.n, obs.n), dtype=bool)
    for t, i in obs.pairs:
        mask[t, :] = True
        mask[:, i] = True
    return mask


def split_projection(obs: PartialObservation, basis: EmbeddingBasis) -> SplitProjection:
    """Project the determined part of the observed matrix onto the sphere coordinates.

    Undetermined entries are set to the barycenter value 1/n, i.e. they
    contribute nothing after centering.
    """
    if obs.n != basis.n:
        raise DimensionError(f"observation has n={obs.n}, basis has n={basis.n}")
    n = obs.n
    if obs.o == 0:
        return SplitProjection(np.zeros(basis.dim), 0.0)
    M = np.full((n, n), 1.0 / n)
    mask = determined_mask(obs)
    M[mask] = 0.0
    for t, i in obs.pairs:
        M[t, i] = 1.0
    y_star = project(M, basis)
    return SplitProjection(y_star, float(np.linalg.norm(y_star)))


def update_partial(
    state: FilterState,
    obs: PartialObservation,
    kappa_obs: float,
    basis: EmbeddingBasis,
) -> FilterState:
    """Bayes update with the unobserved part of the permutation marginalized out.

    The marginal likelihood is vMF(y_star / |y_star|, kappa_obs * |y_star|),
    whose natural parameter is simply kappa_obs * y_star.
    """
    _check_n(state, obs.n)
    if kappa_obs < 0:
        raise ValueError("kappa_obs must be >= 0")
    split = split_projection(obs, basis)
    if split.norm_star == 0.0 or kappa_obs == 0:
        return state
    return _combine(state, kappa_obs * split.y_star)


def map_estimate(state: FilterState, basis: EmbeddingBasis) -> np.ndarray:
    """Most probable permutation: the one whose embedding is closest to mu."""
    if basis.n != state.n:
        raise DimensionError(f"basis has n={basis.n}, filter has n={state.n}")
    return from_sphere(state.mu, basis)
