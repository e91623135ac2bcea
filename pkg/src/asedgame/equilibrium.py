"""Equilibria, worst-case strategies and mixture evaluation for the stego game.

Because the false-alarm rate of a detector does not depend on the attacker's
beta, ``P_md = 2 P_e - P_fa`` differs from ``2 P_e`` by a column-only term. The
attacker's best replies on ``P_md`` and on ``P_e`` therefore coincide, and the
two-payoff game shares its equilibria with the zero-sum game on ``P_e``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .game import TIE_TOL, MixedStrategy, PayoffMatrices, DimensionError, expected_payoff
from .lp import solve_zero_sum


@dataclass(frozen=True)
class GameSolution:
    p_a_star: MixedStrategy
    p_d_star: MixedStrategy
    pe_star: float
    pmd_star: float
    certificates: dict = field(default_factory=dict)


@dataclass(frozen=True)
class WorstCaseResult:
    """Maximin (attacker) or minimax (defender) pure strategy.

    ``ties`` lists other grid betas reaching the same guaranteed value.
    """

    side: str
    strategy: float
    value: float
    achieved_at: float
    ties: tuple = ()


def solve_ased(pm: PayoffMatrices) -> GameSolution:
    """Mixed equilibrium of the game via the zero-sum reduction on ``P_e``."""
    sol = solve_zero_sum(pm.p_e)
    grid = pm.grid
    p_a = MixedStrategy(sol.row_strategy.probs, grid)
    p_d = MixedStrategy(sol.col_strategy.probs, grid)
    pe_star = expected_payoff(p_a, p_d, pm.p_e)
    pmd_star = expected_payoff(p_a, p_d, pm.p_md)
    lower, upper = sol.certificates(pm.p_e)
    certs = {
        "game_value": sol.value,
        "row_guarantee": lower,
        "col_guarantee": upper,
        "simplex_iterations": sol.iterations,
    }
    return GameSolution(p_a, p_d, pe_star, pmd_star, certs)


def _grid_values(n: int, grid) -> np.ndarray:
    if grid is None:
        return np.arange(n, dtype=float)
    vals = grid.values if hasattr(grid, "values") else np.asarray(grid, dtype=float)
    if vals.size != n:
        raise DimensionError("grid size does not match matrix")
    return vals


def worst_case_attacker(p_md, grid=None) -> WorstCaseResult:
    """Attacker's maximin pure beta on ``P_md`` (the defender answers adversarially)."""
    m = np.asarray(getattr(p_md, "p_md", p_md), dtype=float)
    grid = getattr(p_md, "grid", grid)
    vals = _grid_values(m.shape[0], grid)
    guaranteed = m.min(axis=1)
    best = guaranteed.max()
    winners = np.flatnonzero(guaranteed >= best - TIE_TOL)
    a = int(winners[0])
    d = int(np.argmin(m[a]))
    return WorstCaseResult("attacker", float(vals[a]), float(m[a, d]), float(vals[d]),
                           tuple(float(vals[i]) for i in winners[1:]))


def worst_case_defender(p_e, grid=None) -> WorstCaseResult:
    """Defender's minimax pure beta on ``P_e``."""
    m = np.asarray(getattr(p_e, "p_e", p_e), dtype=float)
    grid = getattr(p_e, "grid", grid)
    vals = _grid_values(m.shape[1], grid)
    exposure = m.max(axis=0)
    best = exposure.min()
    winners = np.flatnonzero(exposure <= best + TIE_TOL)
    d = int(winners[0])
    a = int(np.argmax(m[:, d]))
    return WorstCaseResult("defender", float(vals[d]), float(m[a, d]), float(vals[a]),
                           tuple(float(vals[i]) for i in winners[1:]))


def mixture_weighted_error(p_a_star, pe_row) -> float:
    """Error of one fixed detector averaged over the attacker's beta distribution."""
    p = p_a_star.probs if isinstance(p_a_star, MixedStrategy) else np.asarray(p_a_star, dtype=float)
    row = np.asarray(pe_row, dtype=float).ravel()
    if row.size != p.size:
        raise DimensionError(f"pe_row has {row.size} entries, strategy has {p.size}")
    return float(p @ row)


def sample_strategy(s: MixedStrategy, rng: np.random.Generator, size=None):
    """Draw pure betas (grid values, or indices for a gridless strategy)."""
    idx = rng.choice(len(s), size=size, p=s.probs)
    if s.grid is None:
        return idx
    return s.grid.values[idx] if size is not None else float(s.grid.values[idx])


def allocate_counts(s: MixedStrategy, total: int) -> np.ndarray:
    """Split ``total`` items across the strategy by largest-remainder rounding.

    Remainder ties go to the earlier grid entry.
    """
    quotas = s.probs * total
    counts = np.floor(quotas).astype(int)
    short = total - int(counts.sum())
    if short > 0:
        remainders = quotas - counts
        order = np.argsort(-remainders, kind="stable")
        counts[order[:short]] += 1
    return counts
