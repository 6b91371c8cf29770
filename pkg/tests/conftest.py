import numpy as np
import pytest

from snse.fields import random_field
from snse.fourier import Grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def naive_dft(values, grid):
    """O(N^{2d}) Fourier coefficients with the 1/N^d integral normalization."""
    N, d = grid.N, grid.d
    x = np.stack([c.ravel() for c in grid.coords])  # (d, N^d)
    ks = np.stack([k.ravel() for k in np.meshgrid(*[np.fft.fftfreq(N, 1 / N)] * d, indexing="ij")])
    phase = np.exp(-2j * np.pi * ks.T @ x)  # (N^d, N^d)
    flat = values.reshape(values.shape[: -d] + (-1,))
    return (flat @ phase.T / N**d).reshape(values.shape)


def direct_series(modes, amps, points):
    """Evaluate sum_k a_k exp(2 pi i k.x) at explicit points."""
    return np.real(np.exp(2j * np.pi * points @ modes.T) @ amps)


def solenoidal(grid, rng, kmax=3, **kw):
    return random_field(grid, rng, ncomp=grid.d, kmax=kmax, solenoidal=True, **kw)


@pytest.fixture
def grid3():
    return Grid(3, 16)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def report(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} {label}" + (f"  {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
