"""Dense tableau simplex (Bland's rule) and zero-sum matrix game solvers."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .game import TIE_TOL, MixedStrategy

PIVOT_EPS = 1e-12
CERT_TOL = 1e-9


class SimplexError(RuntimeError):
    """The simplex iteration guard tripped or the LP is outside the supported form."""


class UnboundedError(SimplexError):
    pass


@dataclass
class LinearProgram:
    """``maximize c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

    The origin is feasible in this form, so no phase-one is needed. That is all
    the game reduction requires.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    max_iter: int = 0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).ravel()
        m, n = self.A.shape
        if self.c.size != n or self.b.size != m:
            raise ValueError(f"inconsistent LP dimensions: A {self.A.shape}, c {self.c.size}, b {self.b.size}")
        if np.any(self.b < 0):
            raise SimplexError("only b >= 0 (origin-feasible) programs are supported")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.c))):
            raise ValueError("LP data must be finite")
        if self.max_iter <= 0:
            self.max_iter = 50 * (m + n) + 100

    def solve(self) -> "LPResult":
        m, n = self.A.shape
        tab = np.zeros((m + 1, n + m + 1))
        tab[:m, :n] = self.A
        tab[:m, n:n + m] = np.eye(m)
        tab[:m, -1] = self.b
        tab[m, :n] = -self.c
        basis = list(range(n, n + m))

        iterations = 0
        while True:
            # Bland: lowest-index improving column enters
            improving = np.flatnonzero(tab[m, :-1] < -PIVOT_EPS)
            if improving.size == 0:
                break
            col = int(improving[0])
            colvals = tab[:m, col]
            rows = np.flatnonzero(colvals > PIVOT_EPS)
            if rows.size == 0:
                raise UnboundedError("LP is unbounded")
            ratios = tab[rows, -1] / colvals[rows]
            best = ratios.min()
            tied = rows[ratios <= best + PIVOT_EPS * max(1.0, abs(best))]
            # Bland: among tied rows, the lowest basic variable index leaves
            row = int(min(tied, key=lambda r: basis[r]))
            kernels.pivot(tab, row, col)
            basis[row] = col
            iterations += 1
            if iterations > self.max_iter:
                raise SimplexError(f"no convergence after {iterations} pivots")

        x = np.zeros(n + m)
        x[basis] = tab[:m, -1]
        return LPResult(
            x=x[:n],
            dual=tab[m, n:n + m].copy(),
            objective=float(tab[m, -1]),
            iterations=iterations,
            basis=tuple(basis),
        )


@dataclass
class LPResult:
    x: np.ndarray
    dual: np.ndarray
    objective: float
    iterations: int
    basis: tuple = field(default=())


@dataclass(frozen=True)
class ZeroSumSolution:
    """Saddle point of a matrix game; the row player maximizes."""

    value: float
    row_strategy: MixedStrategy
    col_strategy: MixedStrategy
    iterations: int = 0

    def certificates(self, m) -> tuple[float, float]:
        """``(min_j (x^T M)_j, max_i (M y)_i)``, both equal to ``value`` at a saddle point."""
        mat = np.asarray(m, dtype=float)
        return (float((self.row_strategy.probs @ mat).min()),
                float((mat @ self.col_strategy.probs).max()))


def _as_game_matrix(m) -> np.ndarray:
    mat = np.atleast_2d(np.asarray(m, dtype=float))
    if mat.ndim != 2 or mat.size == 0:
        raise ValueError("payoff matrix must be a non-empty 2-D array")
    if not np.all(np.isfinite(mat)):
        raise ValueError("payoff matrix has non-finite entries")
    return mat


def _clean(p: np.ndarray) -> MixedStrategy:
    p = np.where(p < 0, 0.0, p)
    return MixedStrategy(p / p.sum())


def solve_zero_sum(m) -> ZeroSumSolution:
    """Solve the matrix game ``m`` (row maximizes, column minimizes) by linear programming.

    The matrix is shifted by ``1 + |min m|`` so every entry is positive; the
    column player's program ``max sum(w) s.t. (m + shift) w <= 1`` is then solved
    by simplex and the row player's strategy is read off the optimal duals.
    """
    mat = _as_game_matrix(m)
    shift = 1.0 + abs(float(mat.min()))
    shifted = mat + shift
    nr, nc = shifted.shape
    res = LinearProgram(np.ones(nc), shifted, np.ones(nr)).solve()
    z = res.objective
    if not z > 0:
        raise SimplexError("degenerate game program (non-positive optimum)")
    col = _clean(res.x / z)
    row = _clean(res.dual / z)
    return ZeroSumSolution(1.0 / z - shift, row, col, res.iterations)


def dual_objectives(m) -> tuple[float, float]:
    """Optimal objectives of the column LP and of the row LP read from its duals."""
    mat = _as_game_matrix(m)
    shifted = mat + 1.0 + abs(float(mat.min()))
    res = LinearProgram(np.ones(shifted.shape[1]), shifted, np.ones(shifted.shape[0])).solve()
    return float(res.x.sum()), float(res.dual.sum())


def pure_saddle_points(m, tol: float = TIE_TOL) -> list[tuple[int, int]]:
    """Cells that are a maximum of their column and a minimum of their row."""
    mat = _as_game_matrix(m)
    col_max = mat.max(axis=0)
    row_min = mat.min(axis=1)
    hits = (mat >= col_max[None, :] - tol) & (mat <= row_min[:, None] + tol)
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(hits))]


def support_enumeration(m, max_dim: int = 5) -> ZeroSumSolution:
    """Brute-force equilibrium search over equal-size support pairs.

    Every matrix game has an extreme optimal pair supported on a square
    nonsingular subgame, so trying all such subgames always finds one. Only
    meant as an oracle for small games.
    """
    mat = _as_game_matrix(m)
    nr, nc = mat.shape
    if max(nr, nc) > max_dim:
        raise ValueError(f"matrix {mat.shape} exceeds max_dim={max_dim}")
    tol = 1e-10
    for k in range(1, min(nr, nc) + 1):
        for rows in itertools.combinations(range(nr), k):
            for cols in itertools.combinations(range(nc), k):
                sub = mat[np.ix_(rows, cols)]
                # [sub  -1][y] = [0],  [1^T 0][v] = [1]
                border = np.zeros((k + 1, k + 1))
                border[:k, :k] = sub
                border[:k, k] = -1.0
                border[k, :k] = 1.0
                rhs = np.zeros(k + 1)
                rhs[k] = 1.0
                try:
                    ysol = np.linalg.solve(border, rhs)
                    border_t = border.copy()
                    border_t[:k, :k] = sub.T
                    xsol = np.linalg.solve(border_t, rhs)
                except np.linalg.LinAlgError:
                    continue
                y_s, v = ysol[:k], ysol[k]
                x_s = xsol[:k]
                if y_s.min() < -tol or x_s.min() < -tol:
                    continue
                x = np.zeros(nr)
                x[list(rows)] = x_s
                y = np.zeros(nc)
                y[list(cols)] = y_s
                if (x @ mat).min() < v - 1e-9 or (mat @ y).max() > v + 1e-9:
                    continue
                return ZeroSumSolution(float(v), _clean(x), _clean(y))
    raise RuntimeError("no equilibrium found among square supports")  # pragma: no cover
