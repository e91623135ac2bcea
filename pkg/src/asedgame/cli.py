"""Command-line entry point: ``asedgame <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path


from . import detector as det
from . import pipeline as pl
from .equilibrium import GameSolution, solve_ased, worst_case_attacker, worst_case_defender
from .game import MixedStrategy, PayoffMatrices, StrategyGrid, derive_pfa, is_nash, nash_gaps
from .lp import pure_saddle_points, solve_zero_sum


def _solve(args) -> int:
    pe = pl.ingest_matrix(args.pe_csv, "P_e")
    if args.p_md:
        pm = pl.payoffs_from_fixtures(pe, pl.ingest_matrix(args.p_md, "P_md"))
        sol = solve_ased(pm)
    else:
        zs = solve_zero_sum(pe.fraction)
        lower, upper = zs.certificates(pe.fraction)
        sol = GameSolution(
            MixedStrategy(zs.row_strategy.probs, pe.grid),
            MixedStrategy(zs.col_strategy.probs, pe.grid),
            zs.value, None,
            {"game_value": zs.value, "row_guarantee": lower, "col_guarantee": upper,
             "simplex_iterations": zs.iterations},
        )
    sys.stdout.write(pl.emit_solution(sol, "json" if args.json else "table"))
    return 0


def _worstcase(args) -> int:
    kind = "P_md" if args.side == "attacker" else "P_e"
    fx = pl.ingest_matrix(args.matrix_csv, kind)
    fn = worst_case_attacker if args.side == "attacker" else worst_case_defender
    res = fn(fx.fraction, fx.grid)
    sys.stdout.write(pl.emit_solution(res, "json" if args.json else "table"))
    return 0


def _grid_from_args(args) -> StrategyGrid:
    if args.grid == "uniform":
        return StrategyGrid.uniform(args.step)
    if args.grid == "nonuniform":
        return StrategyGrid.nonuniform()
    if not args.betas:
        raise SystemExit("--grid custom needs --betas")
    return StrategyGrid([float(b) for b in args.betas.split(",")])


def _build(args) -> int:
    train = det.TrainConfig(iterations=args.iterations)
    cfg = pl.ExperimentConfig(
        grid=_grid_from_args(args),
        payload_bpp=args.payload,
        image_size=(args.size, args.size),
        n_train=args.n_train, n_val=args.n_val, n_test=args.n_test,
        master_seed=args.seed, train=train, workers=args.workers,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    ex = pl.Experiment(cfg)
    pm = ex.build_payoff_matrices()
    pl.write_matrix_csv(out / "P_e.csv", pm.grid, pm.p_e)
    pl.write_matrix_csv(out / "P_md.csv", pm.grid, pm.p_md)
    (out / "P_fa.json").write_text(json.dumps(
        {"beta_D": [float(b) for b in pm.grid], "p_fa": [float(v) for v in pm.p_fa]}, indent=2) + "\n")
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    det.save_model(ex.unaware_detector(), out / "unaware_detector.txt")
    print(f"wrote {len(pm.grid)}x{len(pm.grid)} matrices to {out} in {time.perf_counter() - t0:.1f}s")
    return 0


def _load_dist(text: str, grid: StrategyGrid, pm: PayoffMatrices) -> MixedStrategy:
    if text == "uniform":
        return MixedStrategy.uniform(len(grid), grid)
    if text == "equilibrium":
        return solve_ased(pm).p_d_star
    path = Path(text)
    data = json.loads(path.read_text() if path.exists() else text)
    if isinstance(data, dict) and "p_d" in data:
        data = data["p_d"]
    if isinstance(data, list):
        data = {e["beta"]: e["prob"] for e in data}
    return MixedStrategy.from_support(grid, {float(k): float(v) for k, v in data.items()})


def _mixture_eval(args) -> int:
    d = Path(args.matrices)
    cfg_dict = json.loads((d / "config.json").read_text())
    if args.seed is not None:
        cfg_dict["master_seed"] = args.seed
    cfg = pl.ExperimentConfig.from_dict(cfg_dict)
    pm = pl.payoffs_from_fixtures(pl.ingest_matrix(d / "P_e.csv", "P_e"), pl.ingest_matrix(d / "P_md.csv", "P_md"))
    if pm.grid != cfg.grid:
        raise SystemExit("matrix grid differs from the experiment config grid")
    sol = solve_ased(pm)
    dist = _load_dist(args.dist, cfg.grid, pm)
    ex = pl.Experiment(cfg)
    row = ex.error_row(ex.mixture_detector(dist))
    value = float(sol.p_a_star.probs @ row)
    if args.json:
        print(json.dumps({"weighted_pe": value, "pe_row": row.tolist(),
                          "distribution": [{"beta": float(b), "prob": float(p)} for b, p in zip(cfg.grid, dist.probs)]},
                         indent=2))
    else:
        print(f"weighted P_e = {100 * value:.1f}%")
    return 0


def _verify(args) -> int:
    directory = Path(args.dir) if args.dir else pl.packaged_fixture_dir()
    ok = True
    for name in ("uniform", "nonuniform"):
        pm = pl.load_paper_fixtures(name, directory)
        eq = pl.PUBLISHED_EQUILIBRIA[name]
        sol = solve_ased(pm)
        _, spread = derive_pfa(pm)
        saddles = pure_saddle_points(pm.p_e)
        profile = pl.published_profile(name, pm.grid)
        gaps = nash_gaps(profile, pm)
        wd, wa = worst_case_defender(pm), worst_case_attacker(pm)
        checks = [
            (f"P_e* = {100 * sol.pe_star:.2f}% (published {100 * eq['pe_star']:.1f}%)",
             abs(sol.pe_star - eq["pe_star"]) <= 0.001),
            (f"P_md* = {100 * sol.pmd_star:.2f}% (published {100 * eq['pmd_star']:.1f}%)",
             abs(sol.pmd_star - eq["pmd_star"]) <= 0.005),
            (f"published profile deviation gains {100 * gaps[0]:.3f} / {100 * gaps[1]:.3f} pp",
             is_nash(profile, pm, tol=0.002)),
            (f"P_fa row spread {100 * spread:.2f} pp", spread <= 0.006),
            (f"pure saddle points: {len(saddles)}", True),
            (f"worst-case defender beta_D={wd.strategy:.2f} P_e={100 * wd.value:.1f}%", wd.value >= sol.pe_star),
            (f"worst-case attacker beta_A={wa.strategy:.2f} P_md={100 * wa.value:.1f}%", wa.value <= sol.pmd_star),
        ]
        print(f"[{name}]")
        for text, passed in checks:
            print(f"  {'PASS' if passed else 'FAIL'}  {text}")
            ok &= passed
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asedgame", description="Adversary-aware stego embedding/detection game solver.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="mixed equilibrium of a P_e matrix (optionally with P_md)")
    s.add_argument("pe_csv")
    s.add_argument("--p-md", dest="p_md")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=_solve)

    s = sub.add_parser("worstcase", help="pure maximin/minimax strategy")
    s.add_argument("matrix_csv")
    s.add_argument("--side", choices=["attacker", "defender"], required=True)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=_worstcase)

    s = sub.add_parser("build-matrix", help="run the desk-scale simulation and write payoff matrices")
    s.add_argument("--grid", choices=["uniform", "nonuniform", "custom"], default="uniform")
    s.add_argument("--step", type=float, default=0.05, help="uniform grid step (default: %(default)s)")
    s.add_argument("--betas", help="comma-separated betas for --grid custom")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--payload", type=float, default=0.4, help="bits per pixel (default: %(default)s)")
    s.add_argument("--size", type=int, default=64)
    s.add_argument("--n-train", type=int, default=400)
    s.add_argument("--n-val", type=int, default=100)
    s.add_argument("--n-test", type=int, default=500)
    s.add_argument("--iterations", type=int, default=1500)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=_build)

    s = sub.add_parser("mixture-eval", help="train on a beta mixture and report the equilibrium-weighted P_e")
    s.add_argument("--dist", required=True, help="'uniform', 'equilibrium', a JSON file, or inline JSON {beta: prob}")
    s.add_argument("--matrices", required=True, help="directory written by build-matrix")
    s.add_argument("--seed", type=int)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=_mixture_eval)

    s = sub.add_parser("verify-fixtures", help="check the transcribed published tables")
    s.add_argument("dir", nargs="?", help="fixture directory (default: packaged tables)")
    s.set_defaults(func=_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (pl.FixtureError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
