"""Graph projection splitting (GPS/RGPS) and Douglas-Rachford solvers for
phase retrieval with prior information."""

from gpspr.kernels import BACKEND
from gpspr.model import (
    PriorSpec,
    ProblemInstance,
    SamplingEnsemble,
    add_noise,
    gen_gaussian,
    gen_oversampled_fourier,
    measure,
    rel_err,
    residual,
)
from gpspr.projection import GraphProjector, TvOperator, build, project, project_relaxed
from gpspr.solvers import SolverConfig, Trace, run

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "GraphProjector",
    "PriorSpec",
    "ProblemInstance",
    "SamplingEnsemble",
    "SolverConfig",
    "Trace",
    "TvOperator",
    "add_noise",
    "build",
    "gen_gaussian",
    "gen_oversampled_fourier",
    "measure",
    "project",
    "project_relaxed",
    "rel_err",
    "residual",
    "run",
]
