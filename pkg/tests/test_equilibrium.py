import numpy as np
import pytest

from asedgame.equilibrium import (
    allocate_counts, mixture_weighted_error, sample_strategy, solve_ased,
    worst_case_attacker, worst_case_defender,
)
from asedgame.game import DimensionError, MixedStrategy, PayoffMatrices, Profile, StrategyGrid, expected_payoff, is_nash
from asedgame.lp import pure_saddle_points
from asedgame import pipeline as pl

from conftest import naive_table


def random_game(rng, n):
    grid = StrategyGrid(np.linspace(0, 1, n))
    return PayoffMatrices.from_components(grid, rng.random(n), rng.random((n, n)))


class TestSolveAsed:
    def test_uniform_fixture(self, uniform_pm):
        sol = solve_ased(uniform_pm)
        assert sol.pe_star == pytest.approx(0.308, abs=0.001)
        assert sol.pmd_star == pytest.approx(0.429, abs=0.005)

    def test_nonuniform_fixture(self, nonuniform_pm):
        sol = solve_ased(nonuniform_pm)
        assert sol.pe_star == pytest.approx(0.290, abs=0.001)
        assert sol.pmd_star == pytest.approx(0.363, abs=0.005)

    def test_solution_invariants(self, uniform_pm):
        sol = solve_ased(uniform_pm)
        assert sol.pe_star == pytest.approx(expected_payoff(sol.p_a_star, sol.p_d_star, uniform_pm.p_e), abs=1e-9)
        assert sol.pmd_star == pytest.approx(expected_payoff(sol.p_a_star, sol.p_d_star, uniform_pm.p_md), abs=1e-9)
        assert sol.certificates["game_value"] == pytest.approx(sol.pe_star, abs=1e-9)
        assert sol.p_a_star.grid == uniform_pm.grid

    def test_constant_game(self):
        grid = StrategyGrid([0.0, 0.5, 1.0])
        pm = PayoffMatrices.from_components(grid, [0.3] * 3, np.full((3, 3), 0.3))
        sol = solve_ased(pm)
        assert sol.pe_star == pytest.approx(0.3)
        assert is_nash(Profile(sol.p_a_star, sol.p_d_star), pm, tol=1e-9)

    def test_property1_round_trip(self, rng):
        for _ in range(50):
            pm = random_game(rng, int(rng.integers(2, 9)))
            sol = solve_ased(pm)
            assert is_nash(Profile(sol.p_a_star, sol.p_d_star), pm, tol=1e-9)

    def test_pure_saddle_value(self, rng):
        hits = 0
        for _ in range(200):
            pm = random_game(rng, 3)
            pts = pure_saddle_points(pm.p_e)
            if pts:
                hits += 1
                i, j = pts[0]
                assert solve_ased(pm).pe_star == pytest.approx(pm.p_e[i, j], abs=1e-9)
        assert hits > 0

    def test_equilibrium_mix_beats_every_pure_defender(self, uniform_pm, nonuniform_pm, rng):
        for pm in (uniform_pm, nonuniform_pm, random_game(rng, 7)):
            sol = solve_ased(pm)
            for j in range(len(pm.grid)):
                assert mixture_weighted_error(sol.p_a_star, pm.p_e[:, j]) >= sol.pe_star - 1e-9


class TestWorstCase:
    def test_table2(self, uniform_pm):
        r = worst_case_attacker(uniform_pm)
        assert (r.strategy, r.value, r.achieved_at) == (0.10, pytest.approx(0.312), 0.05)

    def test_table4_tie(self, nonuniform_pm):
        r = worst_case_attacker(nonuniform_pm)
        assert r.strategy == 0.04 and r.value == pytest.approx(0.306)
        assert r.ties == (0.05,)

    def test_table1(self, uniform_pm):
        r = worst_case_defender(uniform_pm)
        assert (r.strategy, r.value, r.achieved_at) == (0.05, pytest.approx(0.378), 0.75)

    def test_table3(self, nonuniform_pm):
        r = worst_case_defender(nonuniform_pm)
        assert (r.strategy, r.value, r.achieved_at) == (0.06, pytest.approx(0.321), 0.0)

    def test_values_are_matrix_entries(self, uniform_pm, nonuniform_pm):
        for pm in (uniform_pm, nonuniform_pm):
            a = worst_case_attacker(pm)
            assert a.value == pm.p_md[pm.grid.index(a.strategy), pm.grid.index(a.achieved_at)]
            d = worst_case_defender(pm)
            assert d.value == pm.p_e[pm.grid.index(d.achieved_at), pm.grid.index(d.strategy)]

    def test_brute_force(self, table_text):
        cols, pmd = naive_table(table_text["t2"])
        guaranteed = {a: min(pmd[(a, d)] for d in cols) for a in cols}
        best = max(guaranteed.values())
        assert best == 31.2 and [a for a in cols if guaranteed[a] == best] == [0.10]

    def test_constant(self):
        m = np.full((3, 3), 0.4)
        a = worst_case_attacker(m, [0.1, 0.2, 0.3])
        assert a.strategy == 0.1 and a.value == 0.4 and a.ties == (0.2, 0.3)
        d = worst_case_defender(m)
        assert d.strategy == 0 and d.value == 0.4

    def test_ordering_against_equilibrium(self, uniform_pm, nonuniform_pm):
        for pm in (uniform_pm, nonuniform_pm):
            sol = solve_ased(pm)
            assert worst_case_defender(pm).value >= sol.pe_star
            assert worst_case_attacker(pm).value <= sol.pmd_star


class TestMixtureError:
    def test_published_mix(self, uniform_pm, table_text):
        _, pe = naive_table(table_text["t1"])
        weights = {0.0: 0.476, 0.05: 0.140, 0.75: 0.384}
        expected = sum(w * pe[(b, 0.05)] for b, w in weights.items()) / 100
        p_a = MixedStrategy.from_support(uniform_pm.grid, weights)
        got = mixture_weighted_error(p_a, uniform_pm.p_e[:, 1])
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(0.3082, abs=0.0005)

    def test_onehot_and_uniform(self, rng):
        row = rng.random(6)
        assert mixture_weighted_error(MixedStrategy.pure(6, 4), row) == row[4]
        assert mixture_weighted_error(MixedStrategy.uniform(6), row) == pytest.approx(row.mean())

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            mixture_weighted_error(MixedStrategy.uniform(3), [0.1, 0.2])


class TestSampling:
    def test_onehot(self, rng):
        g = StrategyGrid([0.0, 0.3, 0.6])
        s = MixedStrategy.pure(3, 1, g)
        assert set(sample_strategy(s, rng, size=50)) == {0.3}
        assert sample_strategy(s, rng) == 0.3

    def test_frequencies_converge(self, rng):
        g = StrategyGrid([0.0, 0.5, 1.0])
        s = MixedStrategy([0.2, 0.5, 0.3], g)
        draws = sample_strategy(s, rng, size=40000)
        freq = np.array([(draws == b).mean() for b in g.values])
        sigma = np.sqrt(s.probs * (1 - s.probs) / 40000)
        assert np.all(np.abs(freq - s.probs) < 4 * sigma)

    def test_published_defender_allocation(self, uniform_pm):
        p_d = MixedStrategy.from_support(uniform_pm.grid, pl.PUBLISHED_EQUILIBRIA["uniform"]["p_d"])
        counts = allocate_counts(p_d, 4000)
        support = {float(b): int(c) for b, c in zip(uniform_pm.grid, counts) if c}
        # largest-remainder rounding of 4000 x (0.812, 0.040, 0.148)
        assert support == {0.05: 3248, 0.10: 160, 0.50: 592}

    def test_uniform_allocation(self):
        counts = allocate_counts(MixedStrategy.uniform(21), 4000)
        assert counts.sum() == 4000
        assert set(counts) == {190, 191}
        assert list(counts[:10]) == [191] * 10

    def test_allocation_sums(self, rng):
        for _ in range(100):
            s = MixedStrategy.from_weights(rng.random(int(rng.integers(1, 10))))
            n = int(rng.integers(0, 500))
            c = allocate_counts(s, n)
            assert c.sum() == n and c.min() >= 0
            assert np.all(np.abs(c - s.probs * n) < 1)
