"""Python bindings for the cilab reward-scheme laboratory."""

from ._cilab import (
    CilabError,
    FactorModel,
    InvalidArgument,
    __version__,
    collective_accuracy,
    diversity,
    expected_rewards,
    finite_population_run,
    integrate,
    mc_accuracy,
    mc_expected_rewards,
    stationarity_check,
    two_factor_perturbation,
)

__all__ = [
    "CilabError",
    "FactorModel",
    "InvalidArgument",
    "__version__",
    "collective_accuracy",
    "diversity",
    "expected_rewards",
    "finite_population_run",
    "integrate",
    "mc_accuracy",
    "mc_expected_rewards",
    "stationarity_check",
    "two_factor_perturbation",
]
