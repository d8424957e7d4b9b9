"""Near-field ISAC link simulator.

Synthesizes geometric spherical-wave channels for a large ULA, builds a
virtual object map of the static environment offline, extracts dynamic
subspaces from monostatic echoes, and benchmarks map- and sensing-aided
channel estimators against codebook baselines in a deterministic Monte
Carlo harness.
"""

__version__ = "0.1.0"

from .config import ExperimentConfig, load_config, write_config
from .estimator import (ChannelEstimate, FeedbackConfig, PilotMatrix,
                        PolarCodebook, RidgeConfig, StaticBasis,
                        build_polar_codebook, estimate_joint, estimate_omp,
                        estimate_vom_only, feedback, make_pilots,
                        make_static_basis, observe_pilots)
from .geometry import (ArrayGeometry, Point2D, make_ula, near_field_bounds,
                       steering_matrix, steering_vector, validate_roi)
from .harness import (ResultsTable, RunContext, emit_results, prepare_run,
                      read_results, run_block, run_sweep)
from .kernels import BACKEND
from .metrics import TrialMetrics, achievable_rate, mrt, nmse
from .scene import (ChannelRealization, Rect, Scene, SensingTargetCluster,
                    Type1Object, Type2Object, realize, specular_point)
from .sensing import (ClutterProjector, DynamicSubspace, EchoObservation,
                      build_clutter_projector, extract_dynamic_subspace,
                      simulate_echo, suppress_clutter)
from .vom import Vom, build_vom, load_vom, lookup, save_vom

__all__ = [
    "ArrayGeometry", "BACKEND", "ChannelEstimate", "ChannelRealization",
    "ClutterProjector", "DynamicSubspace", "EchoObservation",
    "ExperimentConfig", "FeedbackConfig", "PilotMatrix", "Point2D",
    "PolarCodebook", "Rect", "ResultsTable", "RidgeConfig", "RunContext",
    "Scene", "SensingTargetCluster", "StaticBasis", "TrialMetrics",
    "Type1Object", "Type2Object", "Vom", "achievable_rate",
    "build_clutter_projector", "build_polar_codebook", "build_vom",
    "emit_results", "estimate_joint", "estimate_omp", "estimate_vom_only",
    "extract_dynamic_subspace", "feedback", "load_config", "load_vom",
    "lookup", "make_pilots", "make_static_basis", "make_ula", "mrt",
    "near_field_bounds", "nmse", "observe_pilots", "prepare_run",
    "read_results", "realize", "run_block", "run_sweep", "save_vom",
    "simulate_echo", "specular_point", "steering_matrix", "steering_vector",
    "suppress_clutter", "validate_roi", "write_config",
]
