"""Independent oracles shared by the test modules.

None of these reuse package internals: momentum averages go through
scipy.integrate.quad, mode states come from exponentiating the 2x2 mode
Hamiltonian, and metrics from finite differences of those states.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm


def quad_avg(f, eps_abs: float = 1e-14, points=None) -> float:
    """(1/2pi) int_0^pi f(k) dk with scipy's QUADPACK."""
    val, _ = quad(f, 0.0, np.pi, epsabs=eps_abs, epsrel=1e-12, limit=1000, points=points)
    return val / (2 * np.pi)


def chain_avg(f, n: int) -> float:
    """(1/N) sum over the positive modes 2 pi m / N of an odd chain."""
    ks = 2 * np.pi * np.arange(1, (n - 1) // 2 + 1) / n
    return float(sum(f(k) for k in ks) / n)


def angle(k, h, gam):
    return np.arctan2(gam * np.sin(k), h + np.cos(k))


def mode_hamiltonian(k: float, h: float, gam: float) -> np.ndarray:
    """2x2 block on {|0_k 0_-k>, |1_k 1_-k>}."""
    a, b = h + np.cos(k), gam * np.sin(k)
    return -np.array([[a, 1j * b], [-1j * b, -a]])


def ground_vector(k: float, h: float, gam: float) -> np.ndarray:
    w, v = np.linalg.eigh(mode_hamiltonian(k, h, gam))
    g = v[:, 0]
    return g * np.exp(-1j * np.angle(g[0]))  # smooth gauge: first amplitude real positive


def evolved(k: float, h: float, gam: float, hq: float, gq: float, t: float) -> np.ndarray:
    return expm(-1j * t * mode_hamiltonian(k, hq, gq)) @ ground_vector(k, h, gam)


def _richardson(f, x0: np.ndarray, e: np.ndarray, s: float):
    d = lambda u: (f(x0 + u * e) - f(x0 - u * e)) / (2 * u)
    return (4 * d(0.5 * s) - d(s)) / 3


def qgt_oracle(state, x0: np.ndarray, s: float = 1e-3) -> np.ndarray:
    """chi_ij from finite-difference derivatives of a smoothly gauged state."""
    psi = state(x0)
    d = [_richardson(state, x0, e, s) for e in np.eye(2)]
    return np.array([[np.vdot(a, b) - np.vdot(a, psi) * np.vdot(psi, b) for b in d] for a in d])


def mode_metric_oracle(k, h, gam, delta, c1, c2, t, coord="h") -> np.ndarray:
    """Per-mode Re(chi) on (t, x); x shifts the initial and quenched point together."""
    def state(x):
        tt, dx = x
        dh, dg = (dx, 0.0) if coord == "h" else (0.0, dx)
        return evolved(k, h + dh, gam + dg, h + dh + c1 * delta, gam + dg + c2 * delta, tt)

    return qgt_oracle(state, np.array([t, 0.0])).real


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
