import numpy as np
import pytest

from entconc.fock import DensityMatrix, StateVector


def random_state(rng, modes, cutoff, support=None):
    """Random normalized pure state; amplitudes only on levels <= support per mode."""
    d = cutoff + 1
    t = np.zeros((d,) * modes, dtype=complex)
    s = cutoff if support is None else support
    block = (slice(0, s + 1),) * modes
    shape = (s + 1,) * modes
    t[block] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    v = t.reshape(-1)
    return StateVector(v / np.linalg.norm(v), modes, cutoff)


def random_density(rng, modes, cutoff, rank=3, support=None):
    d = (cutoff + 1) ** modes
    m = np.zeros((d, d), dtype=complex)
    weights = rng.dirichlet(np.ones(rank))
    for w in weights:
        v = random_state(rng, modes, cutoff, support).amplitudes
        m += w * np.outer(v, v.conj())
    return DensityMatrix(m, modes, cutoff)


@pytest.fixture
def rng():
    return np.random.default_rng(20111)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
