"""Shared fixtures and random-instance generators."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def random_hurwitz(rng, n, margin=None):
    """Random dense Hurwitz matrix: a normal draw shifted left of the axis."""
    A = rng.standard_normal((n, n))
    shift = np.max(np.linalg.eigvals(A).real)
    if margin is None:
        margin = rng.uniform(0.2, 1.0)
    return A - (shift + margin) * np.eye(n)


def random_system_matrices(rng, n, m=1, p=1, margin=None):
    A = random_hurwitz(rng, n, margin)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    return A, B, C


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
