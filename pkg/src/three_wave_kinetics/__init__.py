"""Numerical laboratory for an isotropic three-wave kinetic equation
coupled to a condensate fraction.

The public names below resolve lazily (PEP 562), so importing the package
— in particular firing up the command line entry point — does not pull in
numpy/scipy until a numeric symbol is actually touched.  That keeps thread
caps applied through the environment effective.
"""

from __future__ import annotations

__version__ = "0.1.0"

_SYMBOL_HOME = {
    # grid_space
    "Grid": "grid_space",
    "GridFunction": "grid_space",
    "CutoffProfile": "grid_space",
    "make_log_grid": "grid_space",
    "weighted_norm": "grid_space",
    "extrapolate_origin": "grid_space",
    # collision
    "TailModel": "collision",
    "ZERO_TAIL": "collision",
    "qtilde": "collision",
    "q_n": "collision",
    "qtilde_q": "collision",
    "c_phi": "collision",
    "qn_phi": "collision",
    "qn_lipschitz_gap": "collision",
    # linops
    "CONVENTION_FACTOR": "linops",
    "ell": "linops",
    "t1": "linops",
    "t2": "linops",
    "ell_phi": "linops",
    "decomposition_residual": "linops",
    # mellin_special
    "ContourSpec": "mellin_special",
    "digamma": "mellin_special",
    "w_eval": "mellin_special",
    "b_eval": "mellin_special",
    "l_operator": "mellin_special",
    "p52_bound_check": "mellin_special",
    # moments_flux
    "moment": "moments_flux",
    "moment_rule_weights": "moments_flux",
    "a_delta_split": "moments_flux",
    "flux_integral": "moments_flux",
    "richardson_extrapolate": "moments_flux",
    # evolution
    "CoupledState": "evolution",
    "Trajectory": "evolution",
    "TRAJECTORY_COLUMNS": "evolution",
    "make_collision_plan": "evolution",
    "stable_dt": "evolution",
    "step_reduced": "evolution",
    "step_coupled": "evolution",
    "run_scenario": "evolution",
    "time_maps": "evolution",
    # errors
    "KineticsError": "errors",
    "ConfigError": "errors",
    "NumericsError": "errors",
    "ToleranceError": "errors",
    "PoleError": "errors",
    "BranchTrackingError": "errors",
    "ContourTruncationError": "errors",
    "DivergenceError": "errors",
    "FitConditionError": "errors",
    "StabilityError": "errors",
    "NonmonotoneError": "errors",
}

__all__ = ["__version__", *sorted(_SYMBOL_HOME)]


def __getattr__(name: str):
    home = _SYMBOL_HOME.get(name)
    if home is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    from importlib import import_module

    value = getattr(import_module(f".{home}", __name__), name)
    globals()[name] = value
    return value


def __dir__():
    return sorted(set(globals()) | set(_SYMBOL_HOME))
