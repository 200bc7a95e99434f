import sys
import warnings
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cavity_lamb.params import build_params, derive_cavity, derive_trajectory  # noqa: E402
from cavity_lamb.spectral import SpectralDensity  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def make_system(**values):
    """(atom, derived cavity, spectral density, derived trajectory) from flat params."""
    atom, cavity, traj = build_params(values)
    dc = derive_cavity(atom, cavity)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tr = derive_trajectory(atom, traj)
    return atom, dc, SpectralDensity.from_cavity(dc), tr


@pytest.fixture
def record_criterion():
    def record(label: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
