"""Harmony search for single-bay port container storage, with a GA baseline."""

from ._accel import JIT_ENABLED
from .engine import (ConfigurationError, EngineParams, HarmonyMemory, ImprovisationError,
                     ProblemAdapter, RunTrace, improvise, init_memory, run, update_memory)
from .ga import GAParams, run_ga
from .storage import (ContainerAdapter, Instance, Layout, build_canonical_layout,
                      check_constraints, fitness, make_adapter, oracle_optimal,
                      repair_permutation)

__version__ = "0.1.0"
