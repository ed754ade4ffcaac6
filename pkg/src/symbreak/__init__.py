"""Exact-score diffusion over finite datasets, with symmetry-breaking analysis.

The noised marginal of a finite dataset is a Gaussian mixture whose score,
potential, and curvature are available in closed form.  This package builds
samplers, fixed-point/bifurcation analysis, late-start experiments, and
landscape diagnostics on top of those closed forms, with bit-reproducible
counter-based randomness throughout.
"""

__version__ = "0.1.0"

from .datasets import (EmpiricalDataset, center_and_normalize, gaussian_mixture,
                       hypersphere, load_csv, save_csv, two_point_1d)
from .exact_score import ExactScoreModel, ScoreEval
from .samplers import (GaussianInit, SamplerConfig, SamplerRun, SweepResult,
                       estimate_knee, forward_sample, gls_init, late_start_sweep,
                       run_sampler, sample_ddim, sample_stochastic)
from .schedule import VpSchedule

__all__ = [
    "EmpiricalDataset", "ExactScoreModel", "GaussianInit", "SamplerConfig",
    "SamplerRun", "ScoreEval", "SweepResult", "VpSchedule",
    "center_and_normalize", "estimate_knee", "forward_sample",
    "gaussian_mixture", "gls_init", "hypersphere", "late_start_sweep",
    "load_csv", "run_sampler", "sample_ddim", "sample_stochastic", "save_csv",
    "two_point_1d", "__version__",
]
