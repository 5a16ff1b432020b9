"""Long-range competition of two SI infections on the torus: exact engines and checks."""
from .coupled import DefectLog, coupled_run, defect_size, propose
from .experiments import ScenarioReport, ScenarioSpec, builtin_scenario, run_scenario
from .gillespie import InfectionState, RunResult, gillespie_run, gillespie_step
from .rates import ModelParams, ParamFamily, RateSummary, limit_constant, total_rates
from .torus import TorusSpec, torus_distance
from .urn import urn_run

__version__ = "0.1.0"
