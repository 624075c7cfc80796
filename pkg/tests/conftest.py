"""Shared fixtures: canonical parameter sets used across the suite."""
import pytest

from platoonsim.core import SimParams


@pytest.fixture
def params():
    """Symmetric two-lane defaults (B=1, S=2.375, rho=0.5)."""
    return SimParams()


@pytest.fixture
def params_het():
    """Three lanes with per-lane headways and clearances."""
    return SimParams(
        n=3,
        lam=(0.15, 0.1, 0.2),
        B=(1.0, 1.2, 0.9),
        S=(2.375, 2.0, 1.5),
    )
