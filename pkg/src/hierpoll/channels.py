"""Polling observation channels and Blackwell-dominance machinery.

A channel maps hidden states to observation symbols via a row-stochastic
likelihood matrix. Three constructors cover the polling mechanisms
(level-sampling polynomial channels, fractional-power channels, multinomial
fraction-reporting channels). Dominance between channels is decided exactly
by a garbling linear program and approximately through the Le Cam
deficiency; chains of channels are certified step by step.

Convention: delta(W, H) = 0 certifies H >=_B W, i.e. the deficiency is
measured for the weaker channel W relative to the stronger H.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import NamedTuple

import numpy as np

from . import lp
from .errors import (
    AlphabetTooLarge,
    DegreeExceedsLevels,
    DimensionMismatch,
    LPSolverFailure,
    NotUltrametric,
)
from .stochastic import (
    ConvexPolynomial,
    StochasticMatrix,
    as_array,
    eval_matrix_polynomial,
    fractional_power,
    is_ultrametric,
    matrix_power,
    validate_stochastic,
)


@dataclass(frozen=True)
class Channel:
    """Observation likelihood with named input states and output symbols."""

    matrix: StochasticMatrix
    input_labels: tuple[str, ...]
    output_labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.input_labels) != self.matrix.rows:
            raise DimensionMismatch("input label count != matrix rows")
        if len(self.output_labels) != self.matrix.cols:
            raise DimensionMismatch("output label count != matrix cols")

    @property
    def n_inputs(self) -> int:
        return self.matrix.rows

    @property
    def n_outputs(self) -> int:
        return self.matrix.cols


def make_channel(matrix, input_labels=None, output_labels=None) -> Channel:
    sm = matrix if isinstance(matrix, StochasticMatrix) else validate_stochastic(as_array(matrix))
    if input_labels is None:
        input_labels = tuple(str(i + 1) for i in range(sm.rows))
    if output_labels is None:
        output_labels = tuple(str(j + 1) for j in range(sm.cols))
    return Channel(sm, tuple(input_labels), tuple(output_labels))


@dataclass(frozen=True)
class HierarchyModel:
    """Level-to-level confusion matrix B and the number N of sub-root levels."""

    B: StochasticMatrix
    N: int

    def __post_init__(self):
        if not self.B.is_square:
            raise DimensionMismatch("level confusion matrix must be square")
        if self.N < 0:
            raise ValueError("N must be >= 0")

    def level_distribution(self, level: int) -> StochasticMatrix:
        """Effective opinion distribution B^(level+1) at a given level."""
        return matrix_power(self.B, level + 1)


@dataclass(frozen=True)
class DominanceChain:
    """Channels ordered by informativeness with garbling certificates.

    garblings[u] maps channels[u] onto channels[u+1] exactly;
    deficiencies[u] records the residual against the originally requested
    (u+1)-th channel, zero (within tolerance) certifying exact dominance.
    """

    channels: tuple[Channel, ...]
    garblings: tuple[StochasticMatrix, ...]
    deficiencies: tuple[float, ...]

    def __post_init__(self):
        if len(self.garblings) != len(self.channels) - 1:
            raise DimensionMismatch("need exactly one garbling per adjacent pair")
        if len(self.deficiencies) != len(self.garblings):
            raise DimensionMismatch("need exactly one deficiency per garbling")
        if any(d < 0 for d in self.deficiencies):
            raise ValueError("deficiencies must be nonnegative")

    def is_certified(self, tol: float = 1e-7) -> bool:
        return all(d <= tol for d in self.deficiencies)


# ------------------------------------------------------------ constructors
def intent_channel(h: HierarchyModel, beta: ConvexPolynomial) -> Channel:
    """Channel B * sum_l beta_l B^l for level-sampling probabilities beta."""
    if beta.degree > h.N:
        raise DegreeExceedsLevels(
            f"polling polynomial degree {beta.degree} exceeds N = {h.N}")
    out = h.B.entries @ eval_matrix_polynomial(beta, h.B).entries
    return make_channel(validate_stochastic(out))


def expectation_channel(h: HierarchyModel, polled_depth: int, target_depth: int) -> Channel:
    """Channel (B^K)^(j/K): level K reports on the opinion held at level j.

    The fractional-power path is the object of interest here, so the result
    is computed through it even though B^j is available directly.
    """
    if not (1 <= target_depth <= polled_depth):
        raise ValueError("need 1 <= target_depth <= polled_depth")
    if not is_ultrametric(h.B):
        raise NotUltrametric("expectation polling requires an ultrametric B")
    base = matrix_power(h.B, polled_depth)
    return make_channel(fractional_power(base, target_depth, polled_depth))


def _compositions(total: int, parts: int):
    """All nonnegative integer vectors of length `parts` summing to `total`,
    in lexicographically descending order."""
    for placed in combinations_with_replacement(range(parts), total):
        counts = [0] * parts
        for p in placed:
            counts[p] += 1
        yield tuple(counts)


def friendship_channel(B_level, n_friends: int, max_outcomes: int = 10 ** 6) -> Channel:
    """Multinomial channel: a polled node reports the opinion counts among
    its n_friends peers, each peer's opinion drawn from the node's row of
    B_level. Output alphabet is every composition (n_1,...,n_X) of n_friends.
    """
    B = as_array(B_level)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise DimensionMismatch("B_level must be square")
    if n_friends < 1:
        raise ValueError("n_friends must be >= 1")
    X = B.shape[0]
    n_out = math.comb(n_friends + X - 1, X - 1)
    if n_out > max_outcomes:
        raise AlphabetTooLarge(f"{n_out} outcomes exceed the cap {max_outcomes}")
    comps = list(_compositions(n_friends, X))
    coefs = np.array([math.factorial(n_friends)
                      // math.prod(math.factorial(k) for k in comp)
                      for comp in comps], dtype=float)
    # entry (i, j) = multinomial coefficient * prod_h B[i,h]^{n_h^{(j)}};
    # direct powers rather than logs so that 0^0 = 1 for unused states
    counts = np.array(comps, dtype=float)                       # (n_out, X)
    M = np.empty((X, n_out))
    chunk = max(1, 10 ** 7 // (X * X))
    for lo in range(0, n_out, chunk):
        hi = min(lo + chunk, n_out)
        M[:, lo:hi] = np.prod(B[:, None, :] ** counts[None, lo:hi, :], axis=2)
    M *= coefs[None, :]
    labels = tuple(",".join(f"{k}/{n_friends}" for k in comp) for comp in comps)
    return make_channel(validate_stochastic(M), output_labels=labels)


# ----------------------------------------------------- deficiency and chains
class LeCamResult(NamedTuple):
    delta: float
    garbling: StochasticMatrix


def lecam_deficiency(W, H, tol: float = 1e-9) -> LeCamResult:
    """min over stochastic R of the induced infinity-norm of W - H R.

    The infinity norm is the maximum absolute row sum. Solved as a linear
    program over R (row-stochastic, entrywise nonnegative), per-entry slack
    variables E >= |W - HR|, and an epigraph variable t >= sum_y E_iy for
    every row i. delta <= tol certifies H >=_B W.
    """
    Wm, Hm = as_array(W), as_array(H)
    if Wm.ndim != 2 or Hm.ndim != 2 or Wm.shape[0] != Hm.shape[0]:
        raise DimensionMismatch(
            f"channels must share the input alphabet: {Wm.shape} vs {Hm.shape}")
    X, YW = Wm.shape
    YH = Hm.shape[1]
    n_R, n_E = YH * YW, X * YW
    n = n_R + n_E + 1

    def r_idx(k, y):
        return k * YW + y

    def e_idx(i, y):
        return n_R + i * YW + y

    t_idx = n_R + n_E
    rows_ub = 2 * X * YW + X
    A_ub = np.zeros((rows_ub, n))
    b_ub = np.zeros(rows_ub)
    r = 0
    for i in range(X):
        for y in range(YW):
            # (HR)_{iy} - E_{iy} <= W_{iy}
            for k in range(YH):
                A_ub[r, r_idx(k, y)] = Hm[i, k]
            A_ub[r, e_idx(i, y)] = -1.0
            b_ub[r] = Wm[i, y]
            # -(HR)_{iy} - E_{iy} <= -W_{iy}
            A_ub[r + 1, :] = -A_ub[r, :]
            A_ub[r + 1, e_idx(i, y)] = -1.0
            b_ub[r + 1] = -Wm[i, y]
            r += 2
    for i in range(X):
        for y in range(YW):
            A_ub[r, e_idx(i, y)] = 1.0
        A_ub[r, t_idx] = -1.0
        r += 1
    A_eq = np.zeros((YH, n))
    for k in range(YH):
        A_eq[k, r_idx(k, 0):r_idx(k, YW - 1) + 1] = 1.0
    b_eq = np.ones(YH)
    c = np.zeros(n)
    c[t_idx] = 1.0

    try:
        sol = lp.solve_lp(c, A_ub, b_ub, A_eq, b_eq, tol=tol)
    except LPSolverFailure:
        raise
    except Exception as exc:  # defensive: wrap numerical blowups
        raise LPSolverFailure(str(exc)) from exc
    R = sol.x[:n_R].reshape(YH, YW)
    # basic solutions satisfy the constraints to pivot precision; tidy fp dust
    R = np.clip(R, 0.0, None)
    R /= R.sum(axis=1, keepdims=True)
    return LeCamResult(delta=max(0.0, sol.value), garbling=validate_stochastic(R))


def blackwell_dominates(A, B_ch, tol: float = 1e-7) -> bool:
    """True iff A >=_B B_ch, i.e. some garbling of A reproduces B_ch."""
    return lecam_deficiency(B_ch, A, tol=min(tol, 1e-9)).delta <= tol


def approximate_blackwell_chain(channels, tol: float = 1e-9) -> DominanceChain:
    """Build a dominance-ordered surrogate chain from arbitrary channels.

    The first channel is kept; each next surrogate is the best garbling of
    the previous surrogate toward the requested channel. Surrogates satisfy
    the garbling identities exactly; the reported deficiencies measure how
    far each surrogate sits from the corresponding input channel.
    """
    chs = [ch if isinstance(ch, Channel) else make_channel(ch) for ch in channels]
    if not chs:
        raise ValueError("need at least one channel")
    n_in = chs[0].n_inputs
    if any(c.n_inputs != n_in for c in chs):
        raise DimensionMismatch("all channels must share the input alphabet")
    approx = [chs[0]]
    garblings: list[StochasticMatrix] = []
    deficiencies: list[float] = []
    for nxt in chs[1:]:
        delta, R = lecam_deficiency(nxt, approx[-1], tol=tol)
        garbled = validate_stochastic(approx[-1].matrix.entries @ R.entries)
        approx.append(Channel(garbled, nxt.input_labels, nxt.output_labels))
        garblings.append(R)
        deficiencies.append(delta)
    return DominanceChain(tuple(approx), tuple(garblings), tuple(deficiencies))
