import numpy as np
import pytest

from blochwkb.bloch import BandEvaluator, BlochProblem, build_band_table
from blochwkb.lattice import Lattice, cosine_potential, zero_potential


@pytest.fixture(scope="session")
def mathieu_problem():
    return BlochProblem(cosine_potential(Lattice(), amplitude=1.0), cutoff=32, n_bands=8)


@pytest.fixture(scope="session")
def free_problem():
    return BlochProblem(zero_potential(Lattice()), cutoff=32, n_bands=8)


@pytest.fixture(scope="session")
def mathieu_table(mathieu_problem):
    return build_band_table(mathieu_problem, n=1, k_points=129)


@pytest.fixture(scope="session")
def free_table(free_problem):
    return build_band_table(free_problem, n=1, k_points=129)


@pytest.fixture(scope="session")
def mathieu_evaluator(mathieu_table):
    return BandEvaluator(mathieu_table, sigma=1)


@pytest.fixture(scope="session")
def free_evaluator(free_table):
    return BandEvaluator(free_table, sigma=1)


def dense_bloch_matrix(potential, cutoff, k):
    """Dense cell Hamiltonian at momentum k, for oracle diagonalizations."""
    g = potential.lattice.dual_period
    modes = np.arange(-cutoff, cutoff + 1)
    n = modes.size
    h = np.zeros((n, n), dtype=complex)
    h[np.arange(n), np.arange(n)] = 0.5 * (k + modes * g) ** 2
    for m, c in potential.fourier_coeffs.items():
        for j in range(n):
            i = j + m
            if 0 <= i < n:
                h[i, j] += c
    return h
