"""Synthetic data, corruption models and seeded benchmark runners."""

from .bench import (
    FULL_DIMS,
    SMALL_DIMS,
    ClassTask,
    TrialReport,
    aggregate,
    best_p,
    make_problem,
    p_sweep,
    run_benchmark,
    run_classification,
    trial_seed,
)
from .data import (
    NOISE_KINDS,
    NoiseSpec,
    corrupt,
    gen_dictionary,
    gen_sparse_vector,
    occlusion_block,
    recovery_error,
    snr_db,
    synthetic_patch,
)
