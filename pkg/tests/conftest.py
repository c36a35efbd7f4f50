import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
FIXTURES = TESTS / "fixtures"
sys.path.insert(0, str(TESTS))

K0 = bytes(range(16))


def read_tsv(name):
    """Rows of a fixture file as lists of fields, skipping "# " comments."""
    out = []
    for line in (FIXTURES / name).read_text(encoding="utf-8").splitlines():
        if line and not line.startswith("# "):
            out.append(line.split("\t"))
    return out


@pytest.fixture(scope="session")
def small_dataset():
    from dice.bench import DatasetSpec, generate
    return generate(DatasetSpec(seed=7, customers=120))


@pytest.fixture(scope="session")
def dataset_1k():
    from dice.bench import DatasetSpec, generate
    return generate(DatasetSpec(seed=42, customers=1000))


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
