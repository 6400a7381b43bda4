from pathlib import Path

import pytest

from igsd import load_csv, resolve_target

DATA = Path(__file__).parent / "data"
FIXTURE = DATA / "fixture8.csv"
TICTACTOE = DATA / "tic-tac-toe.csv"
IRIS = DATA / "iris.csv"
COHORT = DATA / "cohort.csv"


@pytest.fixture(scope="session")
def fixture8():
    return resolve_target(load_csv(FIXTURE), ["target"])


@pytest.fixture(scope="session")
def tictactoe():
    return resolve_target(load_csv(TICTACTOE), ["Class"])


@pytest.fixture(scope="session")
def iris():
    return resolve_target(load_csv(IRIS), ["species"])


@pytest.fixture(scope="session")
def cohort():
    return resolve_target(load_csv(COHORT), ["progression", "death"])


def write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return path


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
