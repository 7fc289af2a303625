"""Markov-modulated (s, S) retrial inventory system with server failures,
solved as a level-dependent quasi-birth-and-death process."""

from .generator import GeneratorBlocks, InnerBlocks, build_inner_blocks
from .jump_chain import JumpBlocks, JumpChainLimits, compute_limits, embed_jump_blocks
from .measures import PerformanceReport, compute_report, env_stationary
from .model import (
    EnvironmentParams,
    InventoryPolicy,
    ModelSpec,
    Status,
    SystemState,
    ValidationResult,
    index_phase,
    unindex_phase,
    validate_spec,
)
from .scenario import Scenario, load_scenario
from .simulator import SimConfig, SimEstimates, SimulationDivergence, simulate
from .solver import (
    SteadyState,
    UnstableModelError,
    assemble_steady_state,
    compute_rate_matrices,
    solve_boundary,
    solve_steady_state,
)
from .stability import (
    StabilityReport,
    Verdict,
    closed_form_drift,
    numerical_drift,
    solve_pi_star,
    stability_report,
    traffic_intensity,
)

__version__ = "0.1.0"
