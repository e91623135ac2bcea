import numpy as np
import pytest

from asedgame import pipeline as pl


@pytest.fixture(scope="session")
def uniform_pm():
    return pl.load_paper_fixtures("uniform")


@pytest.fixture(scope="session")
def nonuniform_pm():
    return pl.load_paper_fixtures("nonuniform")


@pytest.fixture(scope="session")
def table_text():
    """Raw CSV text of the packaged tables, for oracles that bypass the parser."""
    d = pl.packaged_fixture_dir()
    return {name: (d / f).read_text() for name, f in {
        "t1": "table1_pe_uniform.csv", "t2": "table2_pmd_uniform.csv",
        "t3": "table3_pe_nonuniform.csv", "t4": "table4_pmd_nonuniform.csv",
    }.items()}


def naive_table(text):
    """Parse a percent table with plain string handling: (col_betas, {(row, col): pct})."""
    lines = text.strip().splitlines()
    cols = [float(x) for x in lines[0].split(",")[1:]]
    cells = {}
    for line in lines[1:]:
        parts = line.split(",")
        r = float(parts[0])
        for c, v in zip(cols, parts[1:]):
            cells[(r, c)] = float(v)
    return cols, cells


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def trained_pair():
    """Unaware detector trained on small synthetic covers, plus held-out covers."""
    from asedgame import detector as det
    from asedgame import stego

    gen = np.random.default_rng(7)
    size, k = (48, 48), 0.4 * 48 * 48
    covers = [stego.synthetic_cover(gen, size) for _ in range(360)]
    stegos = [stego.simulate_embedding(c, stego.compute_costs(c), k, gen) for c in covers[:160]]
    model = det.train(covers[:160], stegos, det.TrainConfig(iterations=600))
    return model, covers[160:], k


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
