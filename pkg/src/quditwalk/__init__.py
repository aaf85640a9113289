"""Qudit state engineering with step-dependent coins in discrete-time quantum walks."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    CoinKet,
    CoinParams,
    Lattice,
    WalkerCoinState,
    WalkerState,
    basis_probabilities,
    coin_matrix,
    estimate_fidelity_mc,
    evolve,
    fidelity,
    project_coin,
    simulate_counts,
)
from .optimizer import EngineeringProblem, EngineeringResult, OptimizerConfig, optimize  # noqa: E402
from .targets import TargetSpec, build_target, gram_schmidt_basis, table1_catalog  # noqa: E402

__all__ = [
    "__version__",
    "CoinKet",
    "CoinParams",
    "Lattice",
    "WalkerCoinState",
    "WalkerState",
    "basis_probabilities",
    "coin_matrix",
    "estimate_fidelity_mc",
    "evolve",
    "fidelity",
    "project_coin",
    "simulate_counts",
    "EngineeringProblem",
    "EngineeringResult",
    "OptimizerConfig",
    "optimize",
    "TargetSpec",
    "build_target",
    "gram_schmidt_basis",
    "table1_catalog",
]
