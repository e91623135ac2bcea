"""Experiment driver, payoff-matrix files and solution serialization."""
from __future__ import annotations

import csv
import io
import json
import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import detector as det
from . import stego
from .equilibrium import GameSolution, WorstCaseResult, allocate_counts, mixture_weighted_error
from .game import MixedStrategy, PayoffMatrices, StrategyGrid

log = logging.getLogger(__name__)

SPLITS = {"train": 0, "val": 1, "test": 2}
_STAGE_COVER, _STAGE_EMBED, _STAGE_TRAIN = 1, 2, 3

FIXTURE_FILES = {
    "uniform": ("table1_pe_uniform.csv", "table2_pmd_uniform.csv"),
    "nonuniform": ("table3_pe_nonuniform.csv", "table4_pmd_nonuniform.csv"),
}

# Equilibrium strategies as published for the two fixture grids (3-decimal rounding).
PUBLISHED_EQUILIBRIA = {
    "uniform": {
        "p_a": {0.00: 0.476, 0.05: 0.140, 0.75: 0.384},
        "p_d": {0.05: 0.812, 0.10: 0.040, 0.50: 0.148},
        "pe_star": 0.308,
        "pmd_star": 0.429,
    },
    "nonuniform": {
        "p_a": {0.00: 0.767, 0.90: 0.233},
        "p_d": {0.05: 0.551, 0.06: 0.449},
        "pe_star": 0.290,
        "pmd_star": 0.363,
    },
}


class FixtureError(ValueError):
    """Malformed payoff-matrix CSV."""


# ---------------------------------------------------------------- experiment

@dataclass(frozen=True)
class ExperimentConfig:
    grid: StrategyGrid = field(default_factory=StrategyGrid.uniform)
    payload_bpp: float = 0.4
    image_size: tuple = (64, 64)
    n_train: int = 400
    n_val: int = 100
    n_test: int = 500
    master_seed: int = 0
    cost_model: str = "hp-reciprocal"
    train: det.TrainConfig = field(default_factory=det.TrainConfig)
    cost_scale: float = 2.0
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.payload_bpp < np.log2(3):
            raise ValueError("payload_bpp must lie in (0, log2 3)")
        if min(self.n_train, self.n_val, self.n_test) <= 0:
            raise ValueError("dataset sizes must be positive")
        if self.cost_model not in stego.COST_MODELS:
            raise ValueError(f"unknown cost model {self.cost_model!r}")

    @property
    def payload_bits(self) -> int:
        h, w = self.image_size
        return stego.round_half_away(self.payload_bpp * h * w)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = [float(b) for b in self.grid.values]
        d["image_size"] = list(self.image_size)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["grid"] = StrategyGrid(d["grid"])
        d["image_size"] = tuple(d["image_size"])
        d["train"] = det.TrainConfig(**d["train"])
        return cls(**d)


def _beta_key(beta: float) -> int:
    return int(round(beta * 1_000_000))


class Experiment:
    """Lazily generated data and detectors for one :class:`ExperimentConfig`.

    Randomness is keyed by ``(stage, split, beta, image)`` through
    ``SeedSequence`` spawn keys, so results do not depend on evaluation order
    and adding grid points leaves existing cells untouched. Only filter
    features of generated stego images are cached, not the images.
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self._covers: dict = {}
        self._cover_feats: dict = {}
        self._stego_feats: dict = {}
        self._aware: dict = {}
        self._unaware: Optional[det.DetectorModel] = None

    def _rng(self, *key) -> np.random.Generator:
        ss = np.random.SeedSequence(self.config.master_seed, spawn_key=tuple(int(k) for k in key))
        return np.random.default_rng(ss)

    def _count(self, split: str) -> int:
        return {"train": self.config.n_train, "val": self.config.n_val, "test": self.config.n_test}[split]

    def covers(self, split: str) -> list:
        if split not in self._covers:
            sid = SPLITS[split]
            self._covers[split] = [
                stego.synthetic_cover(self._rng(_STAGE_COVER, sid, i), self.config.image_size)
                for i in range(self._count(split))
            ]
        return self._covers[split]

    def cover_features(self, split: str) -> np.ndarray:
        if split not in self._cover_feats:
            self._cover_feats[split] = det.batch_features(det.DEFAULT_BANK, self.covers(split))
        return self._cover_feats[split]

    def stego_image(self, beta: float, split: str, i: int) -> np.ndarray:
        cover = self.covers(split)[i]
        rng = self._rng(_STAGE_EMBED, SPLITS[split], _beta_key(beta), i)
        costs = stego.compute_costs(cover, self.config.cost_model)
        k = self.config.payload_bits
        if beta == 0:
            return stego.simulate_embedding(cover, costs, k, rng)
        return stego.p_adv_emb(cover, beta, k, self.unaware_detector(), rng,
                               scale=self.config.cost_scale, costs=costs)

    def stego_features(self, beta: float, split: str) -> np.ndarray:
        key = (_beta_key(beta), split)
        if key not in self._stego_feats:
            imgs = [self.stego_image(beta, split, i) for i in range(self._count(split))]
            self._stego_feats[key] = det.batch_features(det.DEFAULT_BANK, imgs)
        return self._stego_feats[key]

    def _train(self, beta_tag: int, fc, fs, vfc, vfs) -> det.DetectorModel:
        cfg = replace(self.config.train, seed=int(self._rng(_STAGE_TRAIN, beta_tag).integers(2**31)))
        return det.train_features(fc, fs, cfg, vfc, vfs)

    def unaware_detector(self) -> det.DetectorModel:
        """Detector trained on conventional stego; the attack target for every beta."""
        if self._unaware is None:
            self._unaware = self.aware_detector(0.0)
        return self._unaware

    def aware_detector(self, beta: float) -> det.DetectorModel:
        key = _beta_key(beta)
        if key not in self._aware:
            self._aware[key] = self._train(
                key,
                self.cover_features("train"), self.stego_features(beta, "train"),
                self.cover_features("val"), self.stego_features(beta, "val"),
            )
        return self._aware[key]

    def prepare(self, betas) -> None:
        """Generate the stego sets for ``betas`` (in parallel when ``workers > 1``)."""
        self.unaware_detector()
        jobs = [(float(b), s) for b in betas for s in ("train", "val", "test")]
        jobs = [j for j in jobs if (_beta_key(j[0]), j[1]) not in self._stego_feats]
        if self.config.workers > 1 and jobs:
            self.covers("train"), self.covers("val"), self.covers("test")
            with ThreadPoolExecutor(self.config.workers) as pool:
                list(pool.map(lambda j: self.stego_features(*j), jobs))
        else:
            for j in jobs:
                self.stego_features(*j)

    def report(self, model: det.DetectorModel, beta_a: float) -> det.ErrorReport:
        return det.evaluate_features(model, self.cover_features("test"), self.stego_features(beta_a, "test"))

    def build_payoff_matrices(self) -> PayoffMatrices:
        grid = self.config.grid
        self.prepare(grid)
        n = len(grid)
        p_md = np.zeros((n, n))
        p_fa = np.zeros(n)
        for j, beta_d in enumerate(grid):
            try:
                model = self.aware_detector(beta_d)
            except Exception as exc:
                raise RuntimeError(f"training failed for beta_D={beta_d}") from exc
            for i, beta_a in enumerate(grid):
                rep = self.report(model, beta_a)
                p_md[i, j] = rep.p_md
                p_fa[j] = rep.p_fa
            log.info("column beta_D=%.2f done", beta_d)
        return PayoffMatrices.from_components(grid, p_fa, p_md)

    def _mixture_features(self, dist: MixedStrategy, split: str):
        counts = allocate_counts(dist, self._count(split))
        rows = []
        start = 0
        for beta, c in zip(self.config.grid, counts):
            if c:
                rows.append(self.stego_features(beta, split)[start:start + c])
            start += c
        return np.vstack(rows)

    def mixture_detector(self, dist: MixedStrategy) -> det.DetectorModel:
        """Aware detector trained on stego whose beta composition follows ``dist``.

        Cover ``i`` is paired with its own stego under the beta its slot was
        allocated to; validation uses the same proportions.
        """
        if len(dist) != len(self.config.grid):
            raise ValueError("distribution does not match the experiment grid")
        if not np.any(dist.probs > 0):
            raise ValueError("empty support")
        self.prepare([b for b, p in zip(self.config.grid, dist.probs) if p > 0])
        fs = self._mixture_features(dist, "train")
        vfs = self._mixture_features(dist, "val")
        tag = zlib.crc32(np.round(dist.probs, 12).tobytes())
        return self._train(tag, self.cover_features("train"), fs, self.cover_features("val"), vfs)

    def error_row(self, model: det.DetectorModel) -> np.ndarray:
        """P_e of one detector against every attacker beta on the test split."""
        self.prepare(self.config.grid)
        return np.array([self.report(model, b).p_e for b in self.config.grid])

    def mixture_error(self, dist: MixedStrategy, p_a: MixedStrategy) -> float:
        return mixture_weighted_error(p_a, self.error_row(self.mixture_detector(dist)))


def build_payoff_matrices(config: ExperimentConfig, experiment: Optional[Experiment] = None) -> PayoffMatrices:
    """Generate data, train the unaware and all aware detectors, and fill P_e/P_md/P_fa."""
    return (experiment or Experiment(config)).build_payoff_matrices()


def mixture_train(config: ExperimentConfig, distribution: MixedStrategy,
                  experiment: Optional[Experiment] = None) -> det.DetectorModel:
    return (experiment or Experiment(config)).mixture_detector(distribution)


# ---------------------------------------------------------------- matrix files

@dataclass(frozen=True, eq=False)
class MatrixFixture:
    grid: StrategyGrid
    kind: str
    percent: np.ndarray
    source: str = ""

    @property
    def fraction(self) -> np.ndarray:
        return self.percent / 100.0


def _parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise FixtureError(f"non-numeric cell {text!r} at {where}") from None


def _check_betas(betas: list, where: str) -> None:
    if len(set(betas)) != len(betas):
        raise FixtureError(f"duplicated beta in {where}")
    if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise FixtureError(f"{where} betas are not strictly increasing")
    if any(not 0.0 <= b <= 1.0 for b in betas):
        raise FixtureError(f"{where} betas must lie in [0, 1]")


def parse_matrix_csv(text: str, kind: str = "P_e", source: str = "") -> MatrixFixture:
    if kind not in ("P_e", "P_md"):
        raise ValueError("kind must be 'P_e' or 'P_md'")
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if len(rows) < 2 or len(rows[0]) < 2:
        raise FixtureError("malformed header: need a beta_D header row and at least one data row")
    header = [_parse_float(c.strip(), f"header col {j}") for j, c in enumerate(rows[0][1:], 1)]
    _check_betas(header, "header")
    row_betas = []
    cells = []
    for i, r in enumerate(rows[1:], 2):
        if len(r) != len(header) + 1:
            raise FixtureError(f"line {i}: expected {len(header) + 1} cells, got {len(r)}")
        row_betas.append(_parse_float(r[0].strip(), f"line {i} col 0"))
        cells.append([_parse_float(c.strip(), f"line {i} col {j}") for j, c in enumerate(r[1:], 1)])
    _check_betas(row_betas, "row")
    if not np.allclose(row_betas, header, atol=1e-9, rtol=0) or len(row_betas) != len(header):
        raise FixtureError("row betas do not match header betas")
    pct = np.array(cells, dtype=float)
    if not np.all(np.isfinite(pct)) or pct.min() < 0 or pct.max() > 100:
        raise FixtureError("percent cells must lie in [0, 100]")
    return MatrixFixture(StrategyGrid(header), kind, pct, source)


def ingest_matrix(path, kind: str = "P_e") -> MatrixFixture:
    """Read a percent-valued payoff matrix CSV (beta_D header row, beta_A first column)."""
    return parse_matrix_csv(Path(path).read_text(), kind, str(path))


def format_matrix_csv(grid: StrategyGrid, matrix, percent_digits: int = 6) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    labels = [f"{b:.2f}" if round(b, 2) == b else repr(float(b)) for b in grid]
    w.writerow(["beta_A\\beta_D"] + labels)
    for lab, row in zip(labels, np.asarray(matrix) * 100.0):
        w.writerow([lab] + [f"{v:.{percent_digits}f}" for v in row])
    return out.getvalue()


def write_matrix_csv(path, grid: StrategyGrid, matrix, percent_digits: int = 6) -> None:
    Path(path).write_text(format_matrix_csv(grid, matrix, percent_digits))


def payoffs_from_fixtures(pe: MatrixFixture, pmd: MatrixFixture) -> PayoffMatrices:
    if pe.grid != pmd.grid:
        raise FixtureError("P_e and P_md fixtures use different grids")
    return PayoffMatrices(pe.grid, pe.fraction, pmd.fraction)


def packaged_fixture_dir() -> Path:
    return Path(str(resources.files("asedgame") / "data"))


def load_paper_fixtures(name: str, directory=None) -> PayoffMatrices:
    """Payoff matrices transcribed from the published tables (``uniform`` or ``nonuniform``)."""
    directory = Path(directory) if directory is not None else packaged_fixture_dir()
    pe_file, pmd_file = FIXTURE_FILES[name]
    return payoffs_from_fixtures(ingest_matrix(directory / pe_file, "P_e"),
                                 ingest_matrix(directory / pmd_file, "P_md"))


def published_profile(name: str, grid: StrategyGrid):
    from .game import Profile

    eq = PUBLISHED_EQUILIBRIA[name]
    return Profile(MixedStrategy.from_support(grid, eq["p_a"]), MixedStrategy.from_support(grid, eq["p_d"]))


# ---------------------------------------------------------------- solutions

def _strategy_json(s: MixedStrategy) -> list:
    return [{"beta": float(b), "prob": float(p)} for b, p in zip(s.grid.values, s.probs)]


def solution_to_dict(sol: Union[GameSolution, WorstCaseResult]) -> dict:
    if isinstance(sol, GameSolution):
        return {
            "value_pe": sol.pe_star,
            "value_pmd": sol.pmd_star,
            "p_a": _strategy_json(sol.p_a_star),
            "p_d": _strategy_json(sol.p_d_star),
            "certificates": dict(sol.certificates),
        }
    d = {"side": sol.side, "strategy": sol.strategy, "value": sol.value, "achieved_at": sol.achieved_at}
    if sol.ties:
        d["ties"] = list(sol.ties)
    return d


def solution_from_dict(d: dict) -> Union[GameSolution, WorstCaseResult]:
    if "value_pe" in d:
        grid = StrategyGrid([e["beta"] for e in d["p_a"]])
        p_a = MixedStrategy([e["prob"] for e in d["p_a"]], grid)
        p_d = MixedStrategy([e["prob"] for e in d["p_d"]], grid)
        return GameSolution(p_a, p_d, d["value_pe"], d["value_pmd"], dict(d.get("certificates", {})))
    return WorstCaseResult(d["side"], d["strategy"], d["value"], d["achieved_at"], tuple(d.get("ties", ())))


def _table_text(sol) -> str:
    if isinstance(sol, WorstCaseResult):
        who, other, sym = (("beta_A", "beta_D", "P_md") if sol.side == "attacker" else ("beta_D", "beta_A", "P_e"))
        lines = [f"worst-case {sol.side}: {who} = {sol.strategy:.2f}",
                 f"guaranteed {sym} = {100 * sol.value:.1f}% (at {other} = {sol.achieved_at:.2f})"]
        if sol.ties:
            lines.append("also optimal: " + ", ".join(f"{t:.2f}" for t in sol.ties))
        return "\n".join(lines) + "\n"
    betas = sol.p_a_star.grid.values
    width = 7
    lines = [
        "beta   " + "".join(f"{b:>{width}.2f}" for b in betas),
        "p_A*   " + "".join(f"{p:>{width}.3f}" for p in sol.p_a_star.probs),
        "p_D*   " + "".join(f"{p:>{width}.3f}" for p in sol.p_d_star.probs),
        f"P_md* = {100 * sol.pmd_star:.1f}%" if sol.pmd_star is not None else "P_md* = n/a",
        f"P_e*  = {100 * sol.pe_star:.1f}%",
    ]
    return "\n".join(lines) + "\n"


def emit_solution(sol: Union[GameSolution, WorstCaseResult], fmt: str = "json") -> str:
    """Serialize a solution as lossless JSON or as a fixed-width table."""
    if fmt == "json":
        return json.dumps(solution_to_dict(sol), indent=2, sort_keys=True) + "\n"
    if fmt == "table":
        return _table_text(sol)
    raise ValueError(f"unknown format {fmt!r}")


def parse_solution(text: str) -> Union[GameSolution, WorstCaseResult]:
    return solution_from_dict(json.loads(text))
