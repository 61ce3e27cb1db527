"""Self-stabilizing diffusions: quasi-potentials, exit times and Monte Carlo.

Thin Python layer over the C++ core. Points are plain sequences of floats;
paths come back as dicts with ``t0``, ``dt`` and ``states``.
"""

from ._core import (
    ActionVariant,
    ConfigError,
    ConvergenceError,
    DivergenceError,
    Domain,
    Expression,
    Model,
    ModelError,
    PreconditionError,
    RadialProfile,
    ScenarioConfig,
    SelfstabError,
    SyntaxError,
    boundary_min_closed_form,
    exit_statistics,
    find_equilibrium,
    geometric_grid,
    integrate_flow,
    kramers_fit,
    minimize_cost,
    quasipotential_closed_form,
    quasipotential_numeric,
    run_command,
    run_exit_trials,
    simulate,
)

__version__ = "0.1.0"


def exit_sides(records):
    """Counts of exits per boundary side for interval domains: (lower, upper, censored)."""
    lower = sum(1 for r in records if not r.censored and r.boundary_param < 0)
    upper = sum(1 for r in records if not r.censored and r.boundary_param > 0)
    return lower, upper, sum(1 for r in records if r.censored)
