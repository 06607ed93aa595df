"""Capacity-expansion planning under demand uncertainty.

Builds and solves multi-stage, multi-product capacity-expansion problems on
scenario trees, trading expected net present value against cumulative NPV
risk, with an in-house MILP engine and Pareto-frontier tooling.
"""

from .scenario_tree import (
    NodeId,
    ScenarioTree,
    build_tree,
    enumerate_paths,
    parent_of,
)
from .instance import (
    Instance,
    ProductSpec,
    TechnologyOption,
    discount_factor,
    validate,
)
from .formulation import (
    InvestmentPlan,
    ObjectiveMode,
    VariableAtlas,
    build_deterministic,
    build_stochastic,
    evaluate_plan,
    extract_plan,
    linearize_risk,
)
from .milp import MilpModel, Solution, SolveOptions, Status, solve_lp, solve_milp

__version__ = "0.1.0"
