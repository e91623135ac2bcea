"""Equilibrium analysis of the adversary-aware stego embedding/detection game.

The steganographer (attacker) picks the adjustable fraction ``beta_A`` of its
adversarial embedding, the steganalyst (defender) picks the ``beta_D`` used to
build adversarial training data. ``asedgame`` solves that game from payoff
matrices and can also generate matrices with a small simulator.
"""
from .equilibrium import (
    GameSolution,
    WorstCaseResult,
    allocate_counts,
    mixture_weighted_error,
    sample_strategy,
    solve_ased,
    worst_case_attacker,
    worst_case_defender,
)
from .game import (
    MixedStrategy,
    PayoffMatrices,
    Profile,
    StrategyGrid,
    best_response,
    derive_pfa,
    expected_payoff,
    is_nash,
)
from .lp import ZeroSumSolution, pure_saddle_points, solve_zero_sum, support_enumeration

__version__ = "0.1.0"

__all__ = [
    "GameSolution", "WorstCaseResult", "allocate_counts", "mixture_weighted_error", "sample_strategy",
    "solve_ased", "worst_case_attacker", "worst_case_defender",
    "MixedStrategy", "PayoffMatrices", "Profile", "StrategyGrid", "best_response", "derive_pfa",
    "expected_payoff", "is_nash",
    "ZeroSumSolution", "pure_saddle_points", "solve_zero_sum", "support_enumeration",
]
