"""Maximum-likelihood estimation of (P, B) from observation sequences.

Standard scaled forward-backward expectation steps; the transition update is
the usual row-normalized expected count. The emission update is constrained
to ultrametric stochastic matrices: the unconstrained count estimate is
projected by cyclic corrections (symmetrize, raise min-condition violations,
shift mass onto weak diagonals, renormalize), and an ascent guard bisects
back toward the previous estimate whenever the projected step would lower
the expected-count objective, which keeps the data log-likelihood
nondecreasing unconditionally.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AlphabetMismatch,
    EmptyData,
    NotSquare,
    ParseError,
    ProjectionStalled,
    UnknownSymbol,
)
from .stochastic import StochasticMatrix, as_array, is_ultrametric, validate_stochastic

_COUNT_FLOOR = 1e-12  # keeps emission/transition rows strictly positive


@dataclass(frozen=True)
class ObservationDataset:
    sequences: tuple[np.ndarray, ...]
    alphabet: tuple[str, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        seqs = tuple(np.asarray(s, dtype=int) for s in self.sequences)
        object.__setattr__(self, "sequences", seqs)
        if not seqs or any(s.size == 0 for s in seqs):
            raise EmptyData("need at least one non-empty sequence")
        hi = max(int(s.max()) for s in seqs)
        lo = min(int(s.min()) for s in seqs)
        if lo < 0 or hi >= len(self.alphabet):
            raise UnknownSymbol(f"symbol index {hi if hi >= len(self.alphabet) else lo} "
                                f"outside alphabet of size {len(self.alphabet)}")

    @property
    def n_symbols(self) -> int:
        return int(sum(s.size for s in self.sequences))


@dataclass(frozen=True)
class EmEstimate:
    transition: StochasticMatrix
    emission: StochasticMatrix     # ultrametric
    log_likelihoods: np.ndarray    # one entry per iteration, nondecreasing
    iterations: int
    converged: bool


def project_ultrametric(M_raw, margin: float = 1e-6, tol: float = 1e-9,
                        max_cycles: int = 1000) -> StochasticMatrix:
    """Nearest practically-ultrametric stochastic matrix by cyclic corrections.

    Each cycle symmetrizes, lifts entries violating Q_ij >= min(Q_ik, Q_kj),
    shifts row mass from off-diagonal onto any insufficiently dominant
    diagonal (strictness margin `margin`), and renormalizes rows. Inputs
    already satisfying the conditions pass through unchanged.
    """
    Q = np.array(as_array(M_raw), dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise NotSquare(f"expected square matrix, got {Q.shape}")
    n = Q.shape[0]
    if n == 1:
        return validate_stochastic(np.ones((1, 1)))
    eye = np.eye(n, dtype=bool)
    for _ in range(max_cycles):
        sym_gap = np.abs(Q - Q.T).max()
        lb = np.max(np.minimum(Q[:, None, :], Q.T[None, :, :]), axis=2)
        min_gap = float((lb - Q).max())
        off_max = np.where(eye, -np.inf, Q).max(axis=1)
        diag_gap = float((off_max + margin - np.diag(Q)).max())
        row_gap = float(np.abs(Q.sum(axis=1) - 1.0).max())
        if sym_gap <= tol and min_gap <= tol and diag_gap <= tol and row_gap <= 1e-12:
            return validate_stochastic(Q)
        Q = 0.5 * (Q + Q.T)
        lb = np.max(np.minimum(Q[:, None, :], Q.T[None, :, :]), axis=2)
        Q = np.maximum(Q, lb)
        # shift off-diagonal mass onto the diagonal until it dominates by margin
        off_max = np.where(eye, -np.inf, Q).max(axis=1)
        off_sum = Q.sum(axis=1) - np.diag(Q)
        need = off_max + margin - np.diag(Q)
        denom = off_sum + off_max
        s = np.clip(np.where(denom > 0, need / denom, 0.0), 0.0, 1.0)
        scale = 1.0 - s
        d_new = np.diag(Q) + s * off_sum
        Q = Q * scale[:, None]
        Q[eye] = d_new
        Q /= Q.sum(axis=1, keepdims=True)
    raise ProjectionStalled(f"constraints not met after {max_cycles} cycles")


def _forward_backward(P, B, pi0, y):
    """Scaled forward-backward pass over one symbol sequence.

    Returns (log-likelihood, expected transition counts, expected emission
    counts).
    """
    T = y.size
    alpha = np.empty((T, P.shape[0]))
    scale = np.empty(T)
    a = pi0 * B[:, y[0]]
    scale[0] = a.sum()
    alpha[0] = a / scale[0]
    for t in range(1, T):
        a = (alpha[t - 1] @ P) * B[:, y[t]]
        scale[t] = a.sum()
        alpha[t] = a / scale[t]
    beta = np.empty_like(alpha)
    beta[-1] = 1.0
    for t in range(T - 2, -1, -1):
        beta[t] = (P @ (B[:, y[t + 1]] * beta[t + 1])) / scale[t + 1]
    gamma = alpha * beta
    # xi_t(i,j) = alpha_t(i) P_ij B_{j,y_{t+1}} beta_{t+1}(j) / scale_{t+1}
    weights = B[:, y[1:]].T * beta[1:] / scale[1:, None]
    trans = P * (alpha[:-1].T @ weights)
    emit = np.zeros((B.shape[1], P.shape[0]))
    np.add.at(emit, y, gamma)
    return float(np.log(scale).sum()), trans, emit.T


def _emission_objective(counts, B):
    with np.errstate(divide="ignore"):
        logB = np.where(B > 0, np.log(np.maximum(B, 1e-300)), -np.inf)
    vals = np.where(counts > 0, counts * logB, 0.0)
    return float(vals.sum())


def _guarded_emission_step(B_old, counts, margin, max_halvings: int = 30):
    """Projected emission update with a monotonicity guard.

    Accepts the projected candidate only if it does not decrease the
    expected-count objective; otherwise bisects toward the previous
    estimate, and keeps the previous estimate when no blend helps.
    """
    raw = counts + _COUNT_FLOOR
    raw /= raw.sum(axis=1, keepdims=True)
    candidate = project_ultrametric(raw, margin=margin).entries
    baseline = _emission_objective(counts, B_old)
    t = 1.0
    for _ in range(max_halvings):
        blend = B_old + t * (candidate - B_old)
        if is_ultrametric(blend) and _emission_objective(counts, blend) >= baseline - 1e-12:
            return blend
        t *= 0.5
    return B_old


def default_initialization(X: int, seed: int, noise: float = 0.01):
    """Diagonal-heavy start, mildly perturbed so symmetric states separate."""
    rng = np.random.default_rng(seed)
    P0 = 0.9 * np.eye(X) + 0.1 / X
    P0 /= P0.sum(axis=1, keepdims=True)
    raw = 0.6 * np.eye(X) + 0.4 / X + noise * rng.random((X, X))
    raw = np.abs(raw)
    raw /= raw.sum(axis=1, keepdims=True)
    B0 = project_ultrametric(raw).entries
    return P0, B0


def em_fit(data: ObservationDataset, X: int, init=None, max_iter: int = 100,
           tol: float = 1e-6, seed: int = 0, margin: float = 1e-6) -> EmEstimate:
    """EM for the transition matrix and an ultrametric emission matrix.

    The observation alphabet must have exactly X symbols (square confusion
    setting). The log-likelihood trace is nondecreasing by construction of
    the guarded emission step.
    """
    if len(data.alphabet) != X:
        raise AlphabetMismatch(
            f"alphabet size {len(data.alphabet)} != state count {X}")
    if init is None:
        P, B = default_initialization(X, seed)
    else:
        P, B = (np.array(as_array(m), dtype=float) for m in init)
        if not is_ultrametric(B):
            B = project_ultrametric(B).entries
    pi0 = np.full(X, 1.0 / X)

    trace = []
    converged = False
    for it in range(max_iter):
        loglik = 0.0
        trans = np.zeros((X, X))
        emit = np.zeros((X, X))
        for y in data.sequences:
            ll, tr, em = _forward_backward(P, B, pi0, y)
            loglik += ll
            trans += tr
            emit += em
        trace.append(loglik)
        if it > 0 and trace[-1] - trace[-2] < tol:
            converged = True
            break
        P = trans + _COUNT_FLOOR
        P /= P.sum(axis=1, keepdims=True)
        B = _guarded_emission_step(B, emit, margin)
    return EmEstimate(
        transition=validate_stochastic(P),
        emission=validate_stochastic(B),
        log_likelihoods=np.asarray(trace),
        iterations=len(trace),
        converged=converged,
    )


# ---------------------------------------------------------------- ingestion
def _map_symbols(rows, alphabet):
    index = {sym: i for i, sym in enumerate(alphabet)}
    sequences = []
    for si, row in enumerate(rows):
        seq = []
        for pos, sym in enumerate(row):
            if sym not in index:
                raise UnknownSymbol(
                    f"symbol {sym!r} at sequence {si}, position {pos}")
            seq.append(index[sym])
        sequences.append(np.asarray(seq, dtype=int))
    return tuple(sequences)


def load_observations(path, fmt: str | None = None) -> ObservationDataset:
    """Read a symbol dataset from CSV (first row = alphabet, one sequence per
    following row) or JSON ({"alphabet": [...], "sequences": [[...], ...]}
    or a bare list of sequences with the alphabet inferred)."""
    path = Path(path)
    if fmt is None:
        fmt = "json" if path.suffix.lower() == ".json" else "csv"
    if fmt == "csv":
        try:
            with open(path, newline="") as fh:
                rows = [row for row in csv.reader(fh) if row]
        except (OSError, csv.Error) as exc:
            raise ParseError(f"cannot read {path}: {exc}") from exc
        if len(rows) < 2:
            raise ParseError("need an alphabet row and at least one sequence row")
        alphabet = tuple(s.strip() for s in rows[0])
        data_rows = [[s.strip() for s in row] for row in rows[1:]]
        return ObservationDataset(_map_symbols(data_rows, alphabet), alphabet)
    if fmt == "json":
        try:
            payload = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot parse {path}: {exc}") from exc
        if isinstance(payload, dict):
            alphabet = tuple(str(a) for a in payload["alphabet"])
            rows = [[str(s) for s in seq] for seq in payload["sequences"]]
            labels = tuple(payload["labels"]) if "labels" in payload else None
            return ObservationDataset(_map_symbols(rows, alphabet), alphabet, labels)
        if isinstance(payload, list):
            rows = [[str(s) for s in seq] for seq in payload]
            alphabet = tuple(sorted({s for row in rows for s in row}))
            return ObservationDataset(_map_symbols(rows, alphabet), alphabet)
        raise ParseError("JSON dataset must be an object or a list of sequences")
    raise ParseError(f"unknown dataset format {fmt!r}")


def estimate_to_json(est: EmEstimate) -> str:
    return json.dumps({
        "transition": est.transition.entries.tolist(),
        "emission": est.emission.entries.tolist(),
        "log_likelihoods": est.log_likelihoods.tolist(),
        "iterations": est.iterations,
        "converged": est.converged,
    }, indent=2)
