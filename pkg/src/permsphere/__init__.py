"""Permutations embedded on a hypersphere, with von Mises-Fisher filtering."""
from .assignment import InvalidCostError, solve_lap
from .directional import (
    ConvergenceError,
    VonMisesFisher,
    bessel_ratio,
    convolve_predict,
    inv_bessel_ratio,
    log_density,
    log_normalizer,
    sample,
)
from .embedding import (
    DimensionError,
    EmbeddingBasis,
    build_basis,
    from_sphere,
    lift,
    to_sphere,
)
from .filter import (
    FilterState,
    PartialObservation,
    SplitProjection,
    init_uniform,
    map_estimate,
    predict,
    split_projection,
    update_full,
    update_partial,
)

__version__ = "0.1.0"
