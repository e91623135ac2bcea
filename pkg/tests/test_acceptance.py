"""One test per acceptance criterion; a PASS/FAIL line for each is printed in the terminal summary.

Criteria 7 and 9 run the desk-scale pipeline at its default size and take a
few minutes; they are marked ``slow`` (deselect with ``-m "not slow"``).
"""
import time

import numpy as np
import pytest

from asedgame import detector as det
from asedgame import pipeline as pl
from asedgame import stego
from asedgame.equilibrium import mixture_weighted_error, solve_ased, worst_case_attacker, worst_case_defender
from asedgame.game import MixedStrategy, PayoffMatrices, Profile, StrategyGrid, derive_pfa, is_nash
from asedgame.lp import pure_saddle_points, solve_zero_sum, support_enumeration

from conftest import ACCEPTANCE_RESULTS, naive_table

PP = 0.01  # one percentage point as a fraction


def record(n, checks):
    """Store ``[(label, ok)]`` for criterion ``n`` and fail on any false check."""
    ok = all(c for _, c in checks)
    ACCEPTANCE_RESULTS[n] = (ok, "; ".join(f"{lab}{'' if c else ' [X]'}" for lab, c in checks))
    assert ok, ACCEPTANCE_RESULTS[n][1]


def _equilibrium_criterion(n, name, pe_target, pmd_target):
    t0 = time.perf_counter()
    pm = pl.load_paper_fixtures(name)
    value = solve_zero_sum(pm.p_e).value
    sol = solve_ased(pm)
    elapsed = time.perf_counter() - t0
    profile = pl.published_profile(name, pm.grid)
    record(n, [
        (f"P_e* {100 * value:.2f}%", abs(value - pe_target) <= 0.1 * PP),
        (f"P_md* {100 * sol.pmd_star:.2f}%", abs(sol.pmd_star - pmd_target) <= 0.5 * PP),
        ("published profile is Nash at 0.2 pp", is_nash(profile, pm, tol=0.2 * PP)),
        (f"{elapsed:.3f} s", elapsed < 1.0),
    ])


def test_criterion_01_uniform_equilibrium():
    _equilibrium_criterion(1, "uniform", 0.308, 0.429)


def test_criterion_02_nonuniform_equilibrium():
    _equilibrium_criterion(2, "nonuniform", 0.290, 0.363)


def test_criterion_03_worst_cases(uniform_pm, nonuniform_pm):
    def hit(res, pm, betas, pct):
        m = pm.p_md if res.side == "attacker" else pm.p_e
        i, j = pm.grid.index(res.strategy), pm.grid.index(res.achieved_at)
        entry = m[i, j] if res.side == "attacker" else m[j, i]
        # the value must be the matrix entry itself, which reads pct in the table
        return ({res.strategy, *res.ties} == set(betas) and res.value == entry
                and round(100 * res.value, 9) == pct)

    checks = []
    for label, res, pm, betas, pct in (
        ("uniform P_md", worst_case_attacker(uniform_pm), uniform_pm, {0.10}, 31.2),
        ("uniform P_e", worst_case_defender(uniform_pm), uniform_pm, {0.05}, 37.8),
        ("non-uniform P_md", worst_case_attacker(nonuniform_pm), nonuniform_pm, {0.04, 0.05}, 30.6),
        ("non-uniform P_e", worst_case_defender(nonuniform_pm), nonuniform_pm, {0.06}, 32.1),
    ):
        checks.append((f"{label} ({res.strategy:.2f}, {100 * res.value:.1f})", hit(res, pm, betas, pct)))
    record(3, checks)


def test_criterion_04_ordering(uniform_pm, nonuniform_pm):
    checks = []
    for name, pm in (("uniform", uniform_pm), ("nonuniform", nonuniform_pm)):
        sol = solve_ased(pm)
        wd, wa = worst_case_defender(pm), worst_case_attacker(pm)
        checks.append((f"{name} {100 * wd.value:.1f} >= {100 * sol.pe_star:.1f}", wd.value >= sol.pe_star))
        checks.append((f"{name} {100 * wa.value:.1f} <= {100 * sol.pmd_star:.1f}", wa.value <= sol.pmd_star))
    record(4, checks)


def test_criterion_05_property1_suite():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    failures = 0
    for _ in range(200):
        n = int(rng.integers(2, 12))
        grid = StrategyGrid(np.linspace(0, 1, n))
        # P_fa depends only on the defender's column
        pm = PayoffMatrices.from_components(grid, rng.random(n), rng.random((n, n)))
        sol = solve_ased(pm)
        failures += not is_nash(Profile(sol.p_a_star, sol.p_d_star), pm, tol=1e-9)
    elapsed = time.perf_counter() - t0
    record(5, [(f"{200 - failures}/200 Nash", failures == 0), (f"{elapsed:.2f} s", elapsed < 10.0)])


def test_criterion_06_lp_oracle():
    rng = np.random.default_rng(6)
    worst_value = worst_shift = worst_cert = 0.0
    for _ in range(500):
        m = rng.random((int(rng.integers(1, 5)), int(rng.integers(1, 5))))
        if rng.random() < 0.2:
            m = np.round(m * 4) / 4  # ties and degenerate vertices
        zs = solve_zero_sum(m)
        worst_value = max(worst_value, abs(zs.value - support_enumeration(m).value))
        c = rng.uniform(-3, 3)
        worst_shift = max(worst_shift, abs(solve_zero_sum(m + c).value - zs.value - c))
        lo, hi = zs.certificates(m)
        worst_cert = max(worst_cert, abs(lo - zs.value), abs(hi - zs.value))
    record(6, [
        (f"max |LP - enumeration| {worst_value:.1e}", worst_value <= 1e-9),
        (f"shift {worst_shift:.1e}", worst_shift <= 1e-9),
        (f"certificates {worst_cert:.1e}", worst_cert <= 1e-9),
    ])


# ------------------------------------------------------------ desk-scale runs

DESK_SEEDS = (0, 1, 2)
_runs = {}


def desk_run(seed):
    """Default desk-scale experiment for ``seed``, built once per session."""
    if seed not in _runs:
        ex = pl.Experiment(pl.ExperimentConfig(master_seed=seed))
        t0 = time.perf_counter()
        pm = ex.build_payoff_matrices()
        _runs[seed] = (ex, pm, time.perf_counter() - t0)
    return _runs[seed]


@pytest.mark.slow
def test_criterion_07_mixture(uniform_pm, table_text):
    _, pe = naive_table(table_text["t1"])
    eq = pl.PUBLISHED_EQUILIBRIA["uniform"]
    hand = sum(w * pe[(b, 0.05)] for b, w in eq["p_a"].items()) / 100
    p_a = MixedStrategy.from_support(uniform_pm.grid, eq["p_a"])
    got = mixture_weighted_error(p_a, uniform_pm.p_e[:, uniform_pm.grid.index(0.05)])
    checks = [(f"hand example {100 * got:.3f}%", abs(got - hand) < 1e-12 and abs(got - 0.3082) <= 0.05 * PP)]
    for seed in DESK_SEEDS:
        ex, pm, _ = desk_run(seed)
        sol = solve_ased(pm)
        e_eq = ex.mixture_error(sol.p_d_star, sol.p_a_star)
        e_uni = ex.mixture_error(MixedStrategy.uniform(len(pm.grid), pm.grid), sol.p_a_star)
        checks.append((f"seed {seed}: eq {100 * e_eq:.2f}% vs uniform {100 * e_uni:.2f}%", e_eq <= e_uni))
    record(7, checks)


def test_criterion_08_simulator():
    rng = np.random.default_rng(8)
    worst_h = 0.0
    for _ in range(100):
        n = int(rng.integers(10, 400))
        rp, rm = rng.uniform(0.05, 30, n), rng.uniform(0.05, 30, n)
        rp[rng.random(n) < 0.03] = np.inf
        cm = stego.CostMap(rp, rm)
        target = rng.uniform(0, cm.capacity())
        _, probs = stego.fit_lambda(cm, target)
        worst_h = max(worst_h, abs(probs.entropy() - target))

    base = stego.CostMap(rng.uniform(0.1, 5, (9, 9)), rng.uniform(0.1, 5, (9, 9)))
    g = rng.normal(size=(9, 9))
    g[::3] = 0
    mod = stego.modulate_costs(base, g, 2.0)
    ratios = np.concatenate([(mod.rho_plus / base.rho_plus).ravel(), (mod.rho_minus / base.rho_minus).ravel()])
    factors_ok = set(ratios.tolist()) <= {0.5, 1.0, 2.0}

    model = det.DetectorModel(rng.normal(size=8), 0.2, det.DEFAULT_BANK,
                              np.full(8, 40.0), np.full(8, 15.0))
    max_change = 0
    identical = True
    for i in range(20):
        c = rng.integers(0, 256, (24, 24))
        cm = stego.compute_costs(c)
        k = 0.4 * c.size
        s1 = stego.p_adv_emb(c, 0.5, k, model, rng, costs=cm)
        s0 = stego.simulate_embedding(c, cm, k, np.random.default_rng(i))
        max_change = max(max_change, int(np.abs(s1.astype(int) - c).max()), int(np.abs(s0.astype(int) - c).max()))
        identical &= np.array_equal(s0, stego.p_adv_emb(c, 0.0, k, model, np.random.default_rng(i), costs=cm))

    imgs = [rng.uniform(0, 255, (14, 14)) for _ in range(4)]
    labels = [0, 1, 1, 0]
    gw, _ = det.param_gradient(model, imgs, labels)
    h = 1e-6
    rel_p = 0.0
    for i in range(8):
        e = np.zeros(8)
        e[i] = h
        fd = (det.batch_loss(model.with_params(model.weights + e, model.bias), imgs, labels)
              - det.batch_loss(model.with_params(model.weights - e, model.bias), imgs, labels)) / (2 * h)
        rel_p = max(rel_p, abs(gw[i] - fd) / max(abs(fd), 1e-12))
    gi = det.input_gradient(model, imgs[0], 0)
    h = 1e-5
    rel_i = 0.0
    for _ in range(20):
        a, b = rng.integers(0, 14, 2)
        e = np.zeros((14, 14))
        e[a, b] = h
        fd = (det.loss(model, imgs[0] + e, 0) - det.loss(model, imgs[0] - e, 0)) / (2 * h)
        rel_i = max(rel_i, abs(gi[a, b] - fd) / max(abs(fd), 1e-12))

    record(8, [
        (f"entropy error {worst_h:.4f} bits", worst_h <= 0.01),
        ("cost factors exact", factors_ok),
        (f"max |stego - cover| {max_change}", max_change <= 1),
        (f"param grad rel {rel_p:.1e}", rel_p <= 1e-4),
        (f"input grad rel {rel_i:.1e}", rel_i <= 1e-3),
        ("beta=0 equals conventional", identical),
    ])


@pytest.mark.slow
def test_criterion_09_desk_pipeline():
    ex, pm, elapsed = desk_run(0)
    unaware = ex.unaware_detector()
    base = ex.report(unaware, 0.0)
    adv = ex.report(unaware, 0.3)
    constant_pfa = all(
        len({ex.report(ex.aware_detector(b), a).p_fa for a in pm.grid}) == 1 for b in pm.grid
    )
    record(9, [
        (f"unaware P_e {100 * base.p_e:.1f}%", base.p_e < 0.40),
        (f"P_md 0.0 -> 0.3: {100 * base.p_md:.1f}% -> {100 * adv.p_md:.1f}%", adv.p_md - base.p_md >= 0.15),
        ("P_fa columns constant", constant_pfa),
        (f"full grid build {elapsed / 60:.1f} min", elapsed < 30 * 60),
    ])


def test_criterion_10_fixture_consistency(uniform_pm, nonuniform_pm):
    _, s_u = derive_pfa(uniform_pm)
    _, s_n = derive_pfa(nonuniform_pm)
    record(10, [
        (f"uniform P_fa spread {100 * s_u:.2f} pp", s_u <= 0.6 * PP),
        (f"non-uniform P_fa spread {100 * s_n:.2f} pp", s_n <= 0.6 * PP),
        ("uniform P_e has no pure saddle point", not pure_saddle_points(uniform_pm.p_e)),
    ])
