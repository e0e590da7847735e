import warnings

import numpy as np
import pytest

from ringctrl import LaxEigenvector, RingConfig, integrate
from ringctrl.shooting import solve


def random_valid_eigenvector(n, rng) -> LaxEigenvector:
    """Random state satisfying <x|x> = <y|y> = 1/2 and <x|y> = 0 exactly."""
    x = rng.standard_normal(n)
    y = rng.standard_normal(n)
    x /= np.linalg.norm(x) * np.sqrt(2.0)
    y -= (x @ y) / (x @ x) * x
    y /= np.linalg.norm(y) * np.sqrt(2.0)
    return LaxEigenvector(x, y)


@pytest.fixture(scope="session")
def sol15():
    """Converged N=15 solution from the analytic envelope guess."""
    sol = solve(RingConfig(15))
    assert sol.converged, sol.diagnostics
    return sol


@pytest.fixture(scope="session")
def traj15_full(sol15):
    """Full ring transit (N tau) at verification tolerance, 200 samples per
    period.  The accumulated-drift flag is expected over this horizon."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        traj, report = integrate(
            sol15.a0,
            15 * sol15.tau,
            sol15.config,
            rtol=1e-12,
            atol=1e-12,
            samples=15 * 200,
            validate_tol=1e-6,
        )
    return traj, report
