"""Experiment harness: calibration, synthetic runs, trajectory tracking, CLI."""
from .experiments import (
    CalibrationError,
    ErrorReport,
    ErrorRow,
    SyntheticConfig,
    calibrate_kappa,
    default_kappa_tr,
    rate_matched_kappa_tr,
    run_synthetic,
    run_tracking,
)
from .trajectories import (
    SwapModelParams,
    TrackDataset,
    TrajectoryFormatError,
    apply_swap_model,
    export_trajectories,
    generate_trajectories,
    ingest_trajectories,
)
