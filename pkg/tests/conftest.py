import numpy as np
import pytest

from hierpoll.presets import EXAMPLE1_O1, EXAMPLE1_O2, EXAMPLE1_P


@pytest.fixture
def P3():
    return EXAMPLE1_P.copy()


@pytest.fixture
def O1():
    return EXAMPLE1_O1.copy()


@pytest.fixture
def O2():
    return EXAMPLE1_O2.copy()


def nested_block_matrix(indices, rng):
    """Symmetric stochastic PSD matrix with hierarchically nested constant blocks."""
    n = len(indices)
    S = np.full((n, n), 1.0 / n)
    if n >= 2:
        k = int(rng.integers(1, n))
        lam = float(rng.uniform(0.3, 0.7))
        top = nested_block_matrix(indices[:k], rng)
        bottom = nested_block_matrix(indices[k:], rng)
        block = np.zeros((n, n))
        block[:k, :k] = top
        block[k:, k:] = bottom
        S = lam * block + (1.0 - lam) * S
    return S


def random_ultrametric(n, rng, eps=None):
    """Random ultrametric stochastic matrix (1-eps) I + eps * nested blocks.

    With eps < n/(n+1) all three ultrametric conditions hold by construction
    and the matrix is positive definite.
    """
    if eps is None:
        eps = float(rng.uniform(0.1, n / (n + 1.0) - 0.05))
    S = nested_block_matrix(list(range(n)), rng)
    return (1.0 - eps) * np.eye(n) + eps * S


def random_stochastic(n_rows, n_cols, rng):
    return rng.dirichlet(np.ones(n_cols), size=n_rows)


def hmm_sample(P, B, n_symbols, seed):
    """Observation sequence from a hidden Markov chain (oracle-side sampler)."""
    rng = np.random.default_rng(seed)
    X = P.shape[0]
    cum_P, cum_B = P.cumsum(axis=1), B.cumsum(axis=1)
    x = int(rng.integers(0, X))
    draws = rng.random((n_symbols, 2))
    out = np.empty(n_symbols, dtype=int)
    for t in range(n_symbols):
        x = int((cum_P[x] < draws[t, 0]).sum())
        out[t] = int((cum_B[x] < draws[t, 1]).sum())
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
