"""Tri-hybrid beamforming for reconfigurable-antenna ISAC arrays.

Digital, analog (unit-modulus phase shifter), and electromagnetic
(per-antenna radiation pattern) beamforming stages are optimized
alternately for joint communication and sensing objectives, with
single-user/single-target and multi-user/multi-target solver pipelines,
fixed-antenna benchmark schemes, and a batch Monte-Carlo harness.
"""

from .channel import (
    CommUser,
    EmChannelSet,
    PointEntity,
    Scenario,
    assemble_F_EM,
    build_channel_set,
    build_comm_em_channel,
    build_sensing_em_channels,
    comm_path_gain,
    fixed_receive_combiner,
    generate_scenario,
    sensing_gain,
    steering_vector,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    ScenarioConfig,
    dbm_to_watt,
    load_experiment_config,
    load_scenario_config,
    watt_to_dbm,
)
from .harmonics import SphericalHarmonicBasis, assoc_legendre
from .hybrid import HybridPair, factor_hybrid
from .metrics import (
    Objectives,
    TriHybridBeamformer,
    comm_sinr,
    evaluate,
    objective_mumt,
    objective_sust,
    sensing_scnr,
    sum_rate,
)
from .mumt import MumtOptions, MumtResult, run_mumt
from .numerics import all_eigenvalues, bisection, hermitian_max_eigpair, shifted_solve
from .patterns import (
    FixedDomain,
    FixedPattern,
    HarmonicDomain,
    LibraryDomain,
    PatternLibrary,
    PatternLibraryError,
    cosine_pattern,
    load_pattern_library,
    omni_pattern,
    save_pattern_library,
    synth_pattern_library,
)
from .sust import SustOptions, SustResult, run_sust

__version__ = "0.1.0"

__all__ = [
    "CommUser",
    "EmChannelSet",
    "PointEntity",
    "Scenario",
    "assemble_F_EM",
    "build_channel_set",
    "build_comm_em_channel",
    "build_sensing_em_channels",
    "comm_path_gain",
    "fixed_receive_combiner",
    "generate_scenario",
    "sensing_gain",
    "steering_vector",
    "ConfigError",
    "ExperimentConfig",
    "ScenarioConfig",
    "dbm_to_watt",
    "load_experiment_config",
    "load_scenario_config",
    "watt_to_dbm",
    "SphericalHarmonicBasis",
    "assoc_legendre",
    "HybridPair",
    "factor_hybrid",
    "Objectives",
    "TriHybridBeamformer",
    "comm_sinr",
    "evaluate",
    "objective_mumt",
    "objective_sust",
    "sensing_scnr",
    "sum_rate",
    "MumtOptions",
    "MumtResult",
    "run_mumt",
    "all_eigenvalues",
    "bisection",
    "hermitian_max_eigpair",
    "shifted_solve",
    "FixedDomain",
    "FixedPattern",
    "HarmonicDomain",
    "LibraryDomain",
    "PatternLibrary",
    "PatternLibraryError",
    "cosine_pattern",
    "load_pattern_library",
    "omni_pattern",
    "save_pattern_library",
    "synth_pattern_library",
    "SustOptions",
    "SustResult",
    "run_sust",
]
