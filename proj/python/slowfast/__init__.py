from ._core import (
    AdmissibilityError,
    ConvergenceError,
    DegeneracyError,
    DivergenceError,
    ParseError,
    Scenario,
    SlowfastError,
    __version__,
    check,
    default_yaml,
    filter_pair,
    manifold_point,
    run_command,
    simulate,
)

__all__ = [
    "AdmissibilityError",
    "ConvergenceError",
    "DegeneracyError",
    "DivergenceError",
    "ParseError",
    "Scenario",
    "SlowfastError",
    "__version__",
    "check",
    "default_yaml",
    "filter_pair",
    "manifold_point",
    "run_command",
    "simulate",
]
