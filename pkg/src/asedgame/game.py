"""Strategies, payoff matrices and Nash checks for the embedding/detection game.

Payoffs are stored as fractions in [0, 1]. Rows index the attacker's (the
steganographer's) beta, columns the defender's (the steganalyst's) beta. The
attacker maximizes the missed-detection probability, the defender minimizes the
total error probability.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

TIE_TOL = 1e-9
_SUM_TOL = 1e-12

UNIFORM_BETAS = tuple(round(0.05 * k, 2) for k in range(21))
NONUNIFORM_BETAS = (
    0.0, 0.02, 0.04, 0.05, 0.06, 0.07, 0.08, 0.10, 0.12, 0.14, 0.16,
    0.18, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 1.00,
)


class DimensionError(ValueError):
    """Raised when strategies and matrices do not line up."""


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StrategyGrid:
    """Ordered set of quantized beta values shared by both players."""

    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values).ravel()
        if vals.size == 0:
            raise ValueError("strategy grid must be non-empty")
        if not np.all(np.isfinite(vals)) or vals.min() < 0.0 or vals.max() > 1.0:
            raise ValueError("grid values must lie in [0, 1]")
        if np.any(np.diff(vals) <= 0):
            raise ValueError("grid values must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @classmethod
    def uniform(cls, step: float = 0.05) -> "StrategyGrid":
        n = int(round(1.0 / step))
        if not np.isclose(n * step, 1.0):
            raise ValueError(f"step {step} does not divide [0, 1]")
        return cls(np.round(np.arange(n + 1) * step, 10))

    @classmethod
    def nonuniform(cls) -> "StrategyGrid":
        return cls(NONUNIFORM_BETAS)

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self):
        return iter(float(v) for v in self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StrategyGrid):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(np.all(self.values == other.values))

    def __hash__(self):
        return hash(self.values.tobytes())

    def index(self, beta: float, tol: float = 1e-9) -> int:
        hits = np.flatnonzero(np.abs(self.values - beta) <= tol)
        if hits.size == 0:
            raise KeyError(f"beta={beta} not on grid")
        return int(hits[0])


@dataclass(frozen=True, eq=False)
class MixedStrategy:
    """Probability vector over a grid's pure strategies."""

    probs: np.ndarray
    grid: Optional[StrategyGrid] = None

    def __post_init__(self):
        p = _frozen(self.probs).ravel()
        if p.size == 0 or not np.all(np.isfinite(p)):
            raise ValueError("strategy must be a finite, non-empty vector")
        if p.min() < 0.0:
            raise ValueError("strategy has negative entries")
        if abs(p.sum() - 1.0) > _SUM_TOL:
            raise ValueError(f"strategy sums to {p.sum()!r}, not 1")
        if self.grid is not None and len(self.grid) != p.size:
            raise DimensionError("strategy length differs from grid size")
        object.__setattr__(self, "probs", p)

    @classmethod
    def pure(cls, n: int, index: int, grid: Optional[StrategyGrid] = None) -> "MixedStrategy":
        p = np.zeros(n)
        p[index] = 1.0
        return cls(p, grid)

    @classmethod
    def uniform(cls, n: int, grid: Optional[StrategyGrid] = None) -> "MixedStrategy":
        return cls(np.full(n, 1.0 / n), grid)

    @classmethod
    def from_weights(cls, weights, grid: Optional[StrategyGrid] = None) -> "MixedStrategy":
        """Normalize nonnegative weights (e.g. rounded table entries) into a strategy."""
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum(), grid)

    @classmethod
    def from_support(cls, grid: StrategyGrid, support: dict) -> "MixedStrategy":
        p = np.zeros(len(grid))
        for beta, prob in support.items():
            p[grid.index(beta)] = prob
        return cls.from_weights(p, grid)

    def __len__(self) -> int:
        return self.probs.size

    def support(self, tol: float = 0.0) -> dict:
        """Map of beta (or index, if gridless) to probability for entries above ``tol``."""
        keys = self.grid.values if self.grid is not None else np.arange(self.probs.size)
        return {float(k) if self.grid is not None else int(k): float(p)
                for k, p in zip(keys, self.probs) if p > tol}


@dataclass(frozen=True)
class Profile:
    p_a: MixedStrategy
    p_d: MixedStrategy

    def __post_init__(self):
        if len(self.p_a) != len(self.p_d):
            raise DimensionError("attacker and defender strategies have different lengths")
        if self.p_a.grid is not None and self.p_d.grid is not None and self.p_a.grid != self.p_d.grid:
            raise DimensionError("attacker and defender strategies use different grids")


@dataclass(frozen=True, eq=False)
class PayoffMatrices:
    """P_e and P_md over ``grid`` (rows: attacker beta, columns: defender beta).

    ``p_fa`` is the per-column false-alarm vector when known. If given, ``p_e``
    must equal ``(p_fa + p_md) / 2`` cellwise.
    """

    grid: StrategyGrid
    p_e: np.ndarray
    p_md: np.ndarray
    p_fa: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.grid)
        pe = _frozen(self.p_e)
        pmd = _frozen(self.p_md)
        for name, m in (("p_e", pe), ("p_md", pmd)):
            if m.shape != (n, n):
                raise DimensionError(f"{name} has shape {m.shape}, expected {(n, n)}")
            _check_probabilities(name, m)
        object.__setattr__(self, "p_e", pe)
        object.__setattr__(self, "p_md", pmd)
        if self.p_fa is not None:
            pfa = _frozen(self.p_fa).ravel()
            if pfa.shape != (n,):
                raise DimensionError(f"p_fa has shape {pfa.shape}, expected {(n,)}")
            _check_probabilities("p_fa", pfa)
            if np.max(np.abs(pe - (pfa[None, :] + pmd) / 2.0)) > 1e-12:
                raise ValueError("p_e != (p_fa + p_md) / 2")
            object.__setattr__(self, "p_fa", pfa)

    @classmethod
    def from_components(cls, grid: StrategyGrid, p_fa, p_md) -> "PayoffMatrices":
        pfa = np.asarray(p_fa, dtype=float).ravel()
        pmd = np.asarray(p_md, dtype=float)
        return cls(grid, (pfa[None, :] + pmd) / 2.0, pmd, pfa)


def _check_probabilities(name: str, m: np.ndarray) -> None:
    if not np.all(np.isfinite(m)) or m.min() < 0.0 or m.max() > 1.0:
        raise ValueError(f"{name} entries must be probabilities in [0, 1]")


def _vec(s) -> np.ndarray:
    return s.probs if isinstance(s, MixedStrategy) else np.asarray(s, dtype=float)


def expected_payoff(p_a, p_d, m) -> float:
    """Return ``p_a^T m p_d``."""
    a, d, mat = _vec(p_a), _vec(p_d), np.asarray(m, dtype=float)
    if mat.ndim != 2 or mat.shape != (a.size, d.size):
        raise DimensionError(f"matrix {mat.shape} vs strategies ({a.size}, {d.size})")
    return float(a @ mat @ d)


def best_response(m, opponent, side: str) -> tuple[float, list[int]]:
    """Best pure reply to a fixed mixed opponent.

    ``side="row"`` (row maximizer) scans rows against a column mix; ``side="col"``
    (column minimizer) scans columns against a row mix. Returns the extremal
    payoff and every index within ``TIE_TOL`` of it.
    """
    mat = np.asarray(m, dtype=float)
    q = _vec(opponent)
    if side in ("row", "row-maximizer", "max"):
        if mat.shape[1] != q.size:
            raise DimensionError("opponent length does not match matrix columns")
        payoffs = mat @ q
        best = payoffs.max()
    elif side in ("col", "col-minimizer", "min"):
        if mat.shape[0] != q.size:
            raise DimensionError("opponent length does not match matrix rows")
        payoffs = q @ mat
        best = payoffs.min()
    else:
        raise ValueError(f"unknown side {side!r}")
    idx = np.flatnonzero(np.abs(payoffs - best) <= TIE_TOL)
    return float(best), [int(i) for i in idx]


def nash_gaps(profile: Profile, pm: PayoffMatrices) -> tuple[float, float]:
    """Largest gain from a pure deviation for the attacker (on P_md) and defender (on P_e)."""
    n = len(pm.grid)
    if len(profile.p_a) != n:
        raise DimensionError("profile is not aligned with the payoff grid")
    a, d = profile.p_a.probs, profile.p_d.probs
    a_best, _ = best_response(pm.p_md, d, "row")
    d_best, _ = best_response(pm.p_e, a, "col")
    gap_a = a_best - float(a @ pm.p_md @ d)
    gap_d = float(a @ pm.p_e @ d) - d_best
    return gap_a, gap_d


def is_nash(profile: Profile, pm: PayoffMatrices, tol: float = 1e-9) -> bool:
    """True when no pure deviation helps either player by more than ``tol``.

    Checking pure deviations is enough in a finite game: a mixed deviation's
    payoff is an average of pure ones.
    """
    gap_a, gap_d = nash_gaps(profile, pm)
    return gap_a <= tol and gap_d <= tol


def derive_pfa(pm: PayoffMatrices) -> tuple[np.ndarray, float]:
    """Recover the per-column false-alarm rate as ``2 P_e - P_md``.

    Each row gives its own estimate; the column mean is returned together with
    the largest deviation of any row estimate from it.
    """
    per_cell = 2.0 * pm.p_e - pm.p_md
    p_fa = per_cell.mean(axis=0)
    spread = float(np.max(np.abs(per_cell - p_fa[None, :])))
    return p_fa, spread
