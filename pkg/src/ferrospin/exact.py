"""Exact desk-scale ground truth.

Dense 2^n enumeration: Gibbs tables, conditional marginals, influences,
transition matrices for single-site and block heat-bath chains, spectral
reports, and exact total-variation mixing times.  Everything here is an
oracle for the stochastic modules, so clarity and exactness win over
asymptotic cleverness; n is capped accordingly.

Configuration indexing: bit v of the integer index is sigma_v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from . import constants
from .errors import CapacityError, InputError, NonconvergenceError, NumericError
from .model import Pinning, TwoSpinSystem


@dataclass(frozen=True)
class DistributionTable:
    """Exact probability vector over 2^n configurations (+ log partition)."""

    n: int
    probs: np.ndarray
    log_z: float

    def __post_init__(self):
        if self.probs.shape != (2 ** self.n,):
            raise InputError("probability vector has wrong length")
        if np.any(self.probs < 0.0):
            raise NumericError("negative probability entry")
        if abs(float(self.probs.sum()) - 1.0) > constants.PROB_SUM_TOL:
            raise NumericError("probabilities do not sum to 1")
        self.probs.setflags(write=False)


@dataclass(frozen=True)
class TransitionMatrix:
    """Dense row-stochastic 2^n x 2^n chain operator."""

    n: int
    entries: np.ndarray

    def __post_init__(self):
        size = 2 ** self.n
        if self.entries.shape != (size, size):
            raise InputError("transition matrix has wrong shape")
        if np.any(self.entries < -1e-15):
            raise NumericError("negative transition probability")
        rowsum = self.entries.sum(axis=1)
        if float(np.abs(rowsum - 1.0).max()) > constants.PROB_SUM_TOL:
            raise NumericError("rows do not sum to 1")
        self.entries.setflags(write=False)


@dataclass(frozen=True)
class SpectralReport:
    kind: str
    gap: float
    second_eigenvalue: float
    relaxation_time: float


def _check_capacity(n: int, limit: int, what: str) -> None:
    if n > limit:
        raise CapacityError(f"{what} needs n <= {limit}, got n = {n}")


def log_weights(system: TwoSpinSystem, limit: int | None = None) -> np.ndarray:
    """Vector of log configuration weights, index bit v = sigma_v."""
    n = system.n
    _check_capacity(n, constants.VECTOR_LIMIT if limit is None else limit,
                    "weight enumeration")
    idx = np.arange(2 ** n, dtype=np.int64)
    logw = np.zeros(2 ** n)
    for v in range(n):
        logw[((idx >> v) & 1) == 0] += system.log_lambda[v]
    for e, (u, v) in enumerate(system.edges):
        bu = (idx >> u) & 1
        bv = (idx >> v) & 1
        logw[(bu == 0) & (bv == 0)] += system.log_beta[e]
        logw[(bu == 1) & (bv == 1)] += system.log_gamma[e]
    return logw


def _weights(system: TwoSpinSystem) -> np.ndarray:
    """Unnormalized weights rescaled so the max is 1 (safe against overflow)."""
    logw = log_weights(system)
    return np.exp(logw - logw.max())


def gibbs_distribution(system: TwoSpinSystem,
                       limit: int | None = None) -> DistributionTable:
    """probs[sigma] = weight(sigma) / Z via log-sum-exp."""
    logw = log_weights(system, limit)
    log_z = float(logsumexp(logw))
    return DistributionTable(n=system.n, probs=np.exp(logw - log_z), log_z=log_z)


def conditional_marginal(system: TwoSpinSystem, pin: Pinning,
                         v: int) -> tuple[float, float]:
    """Exact (p0, p1) of sigma_v given the pinning, by masked summation over
    the full table (independent of the apply_pinning route)."""
    if v in pin:
        raise InputError(f"vertex {v} is pinned")
    if not (0 <= v < system.n):
        raise InputError(f"vertex {v} out of range")
    logw = log_weights(system)
    idx = np.arange(2 ** system.n, dtype=np.int64)
    mask = np.ones(idx.shape, dtype=bool)
    for u, s in pin.items():
        if u >= system.n:
            raise InputError(f"pinned vertex {u} out of range")
        mask &= ((idx >> u) & 1) == s
    ones = ((idx >> v) & 1) == 1
    l0 = logsumexp(logw[mask & ~ones])
    l1 = logsumexp(logw[mask & ones])
    m = max(l0, l1)
    w0, w1 = math.exp(l0 - m), math.exp(l1 - m)
    return w0 / (w0 + w1), w1 / (w0 + w1)


def tv_distance(p: DistributionTable, q: DistributionTable) -> float:
    if p.n != q.n:
        raise InputError("distribution size mismatch")
    return 0.5 * float(np.abs(p.probs - q.probs).sum())


def influence_pair(system: TwoSpinSystem, u: int, v: int) -> float:
    """Pr[X_v=1 | X_u=1] - Pr[X_v=1 | X_u=0]."""
    if u == v:
        raise InputError("influence_pair needs two distinct vertices")
    _, p1_given1 = conditional_marginal(system, Pinning({u: 1}), v)
    _, p1_given0 = conditional_marginal(system, Pinning({u: 0}), v)
    return p1_given1 - p1_given0


def all_to_one_influence(system: TwoSpinSystem, v: int) -> float:
    """sum_{u != v} |Pr[X_v=0 | X_u=0] - Pr[X_v=0 | X_u=1]|."""
    total = 0.0
    for u in range(system.n):
        if u == v:
            continue
        p0_given0, _ = conditional_marginal(system, Pinning({u: 0}), v)
        p0_given1, _ = conditional_marginal(system, Pinning({u: 1}), v)
        total += abs(p0_given0 - p0_given1)
    return total


# ---------------------------------------------------------------------------
# transition matrices

def glauber_matrix(system: TwoSpinSystem,
                   limit: int | None = None) -> TransitionMatrix:
    """Single-site heat bath: pick v uniformly, resample from its conditional.
    Non-lazy; the diagonal only collects resamples that keep the old value."""
    n = system.n
    _check_capacity(n, constants.MATRIX_LIMIT if limit is None else limit,
                    "Glauber matrix")
    size = 2 ** n
    w = _weights(system)
    idx = np.arange(size, dtype=np.int64)
    P = np.zeros((size, size))
    for v in range(n):
        i0 = idx[((idx >> v) & 1) == 0]
        i1 = i0 | (1 << v)
        s = w[i0] + w[i1]
        p1 = w[i1] / s
        p0 = w[i0] / s  # not 1 - p1: that cancels badly when p1 ~ 1
        P[i0, i1] += p1 / n
        P[i1, i0] += p0 / n
        P[i0, i0] += p0 / n
        P[i1, i1] += p1 / n
    return TransitionMatrix(n=n, entries=P)


def block_heatbath_matrix(system: TwoSpinSystem, block: Iterable[int],
                          limit: int | None = None) -> TransitionMatrix:
    """Resample one block from its exact conditional given the rest."""
    n = system.n
    _check_capacity(n, constants.MATRIX_LIMIT if limit is None else limit,
                    "block matrix")
    block = sorted(set(block))
    for v in block:
        if not (0 <= v < n):
            raise InputError(f"block vertex {v} out of range")
    size = 2 ** n
    if not block:
        return TransitionMatrix(n=n, entries=np.eye(size))
    bm = 0
    for v in block:
        bm |= 1 << v
    w = _weights(system)
    idx = np.arange(size, dtype=np.int64)
    rest = idx & ~bm
    group = np.zeros(size)
    np.add.at(group, rest, w)
    col = w / group[rest]  # P(. -> tau) within tau's off-block sector
    P = np.zeros((size, size))
    sub = bm
    while True:
        tau = rest | sub
        P[idx, tau] = col[tau]
        if sub == 0:
            break
        sub = (sub - 1) & bm
    return TransitionMatrix(n=n, entries=P)


def heatbath_matrix(system: TwoSpinSystem, blocks: Sequence[Iterable[int]],
                    limit: int | None = None) -> TransitionMatrix:
    """Uniform-random-block heat bath: average of the per-block operators."""
    if not blocks:
        raise InputError("need at least one block")
    mats = [block_heatbath_matrix(system, b, limit).entries for b in blocks]
    return TransitionMatrix(n=system.n, entries=sum(mats) / len(mats))


def scan_matrix(system: TwoSpinSystem, blocks: Sequence[Iterable[int]],
                limit: int | None = None) -> TransitionMatrix:
    """Systematic scan: blocks resampled in list order, blocks[0] first.

    The kernel is the matrix product of per-block operators in that order
    (rows = source states), so applying it to a row distribution performs
    blocks[0], then blocks[1], ...
    """
    if not blocks:
        raise InputError("need at least one block")
    out = None
    for b in blocks:
        m = block_heatbath_matrix(system, b, limit).entries
        out = m if out is None else out @ m
    return TransitionMatrix(n=system.n, entries=out)


def check_bipartition(system: TwoSpinSystem,
                      bipartition: tuple[Sequence[int], Sequence[int]]) -> None:
    v0, v1 = (sorted(set(part)) for part in bipartition)
    if sorted(v0 + v1) != list(range(system.n)):
        raise InputError("bipartition does not partition the vertex set")
    for part in (v0, v1):
        pset = set(part)
        for (u, v) in system.edges:
            if u in pset and v in pset:
                raise InputError(
                    f"parts not independent sets: edge ({u},{v}) inside one part")


def alternating_scan_matrix(system: TwoSpinSystem,
                            bipartition: tuple[Sequence[int], Sequence[int]],
                            limit: int | None = None) -> TransitionMatrix:
    """Full scan of a bipartition: resample all of V0, then all of V1."""
    check_bipartition(system, bipartition)
    return scan_matrix(system, [bipartition[0], bipartition[1]], limit)


def pinned_glauber_matrix(system: TwoSpinSystem, pin: Pinning,
                          limit: int | None = None
                          ) -> tuple[TransitionMatrix, DistributionTable]:
    """Glauber on the full vertex set with `pin` frozen, restricted to its
    support: picking a pinned vertex resamples it to its pinned value, so on
    the reduced state space the kernel is (k/n) I + ((n-k)/n) P_reduced."""
    from .model import apply_pinning

    k = len(pin)
    if k >= system.n:
        raise InputError("pinning must leave at least one free vertex")
    reduced = apply_pinning(system, pin)
    inner = glauber_matrix(reduced, limit).entries
    n = system.n
    padded = (k / n) * np.eye(inner.shape[0]) + ((n - k) / n) * inner
    return (TransitionMatrix(n=reduced.n, entries=padded),
            gibbs_distribution(reduced))


def multiplicative_reversiblization(Q: TransitionMatrix,
                                    mu: DistributionTable) -> TransitionMatrix:
    """R(Q) = Q Q*, with Q*(s,t) = mu(t) Q(t,s) / mu(s); reversible wrt mu."""
    if Q.n != mu.n:
        raise InputError("size mismatch")
    p = mu.probs
    if np.any(p <= 0.0):
        raise InputError("reversiblization needs a strictly positive measure")
    qstar = (Q.entries.T * p[None, :]) / p[:, None]
    return TransitionMatrix(n=Q.n, entries=Q.entries @ qstar)


def _symmetrized_eigs(P: np.ndarray, p: np.ndarray, what: str) -> np.ndarray:
    """Eigenvalues of a mu-reversible chain via D^(1/2) P D^(-1/2)."""
    d = np.sqrt(p)
    S = (d[:, None] * P) / d[None, :]
    asym = float(np.abs(S - S.T).max())
    if asym > 1e-8:
        raise NumericError(f"{what}: not reversible (symmetrization residual {asym:.3e})")
    eigs = np.linalg.eigvalsh((S + S.T) / 2.0)
    if abs(eigs[-1] - 1.0) > 1e-8:
        raise NumericError(f"{what}: top eigenvalue {eigs[-1]!r} is not 1")
    return eigs


def spectral_report(P: TransitionMatrix, mu: DistributionTable,
                    kind: str) -> SpectralReport:
    """Spectral gap and relaxation time.

    kind="glauber": reversible chain; gap = 1 - lambda_2(P), relaxation = 1/gap.
    kind="alternating_scan": P is the (non-reversible) scan kernel Q; the gap
    is computed on R(Q) = Q Q* and the relaxation time is
    1 / (1 - sqrt(lambda_2(R))).
    """
    if kind == "glauber":
        eigs = _symmetrized_eigs(P.entries, mu.probs, "glauber chain")
        lam2 = float(eigs[-2])
        gap = 1.0 - lam2
        relax = math.inf if gap <= 0.0 else 1.0 / gap
        return SpectralReport(kind=kind, gap=gap,
                              second_eigenvalue=lam2, relaxation_time=relax)
    if kind == "alternating_scan":
        R = multiplicative_reversiblization(P, mu)
        eigs = _symmetrized_eigs(R.entries, mu.probs, "reversiblization")
        if eigs[0] < -1e-9:
            raise NumericError(
                f"reversiblization has negative eigenvalue {eigs[0]!r}")
        lam2 = min(max(float(eigs[-2]), 0.0), 1.0)
        gap = 1.0 - lam2
        root = math.sqrt(lam2)
        relax = math.inf if root >= 1.0 else 1.0 / (1.0 - root)
        return SpectralReport(kind=kind, gap=gap,
                              second_eigenvalue=lam2, relaxation_time=relax)
    raise InputError(f"unknown spectral report kind {kind!r}")


def stationarity_residual(P: TransitionMatrix, mu: DistributionTable) -> float:
    """||mu P - mu||_1."""
    if P.n != mu.n:
        raise InputError("size mismatch")
    return float(np.abs(mu.probs @ P.entries - mu.probs).sum())


def detailed_balance_residual(P: TransitionMatrix, mu: DistributionTable) -> float:
    """max relative asymmetry of mu(s) P(s,t) over transition pairs."""
    if P.n != mu.n:
        raise InputError("size mismatch")
    flow = mu.probs[:, None] * P.entries
    scale = np.maximum(np.maximum(flow, flow.T), 1e-300)
    rel = np.abs(flow - flow.T) / scale
    rel[(flow == 0.0) & (flow.T == 0.0)] = 0.0
    return float(rel.max())


def tv_from_start(P: TransitionMatrix, mu: DistributionTable,
                  start: int, steps: int) -> float:
    """TV(P^steps(start, .), mu) by vector powering from one start state."""
    if not (0 <= start < 2 ** P.n):
        raise InputError("start state out of range")
    nu = np.zeros(2 ** P.n)
    nu[start] = 1.0
    for _ in range(steps):
        nu = nu @ P.entries
    return 0.5 * float(np.abs(nu - mu.probs).sum())


def exact_mixing_time(P: TransitionMatrix, mu: DistributionTable, eps: float,
                      cap: int = constants.MIXING_STEP_CAP) -> int:
    """min t with max-over-starts TV(P^t(s,.), mu) < eps, by repeated matrix
    application from all 2^n starts."""
    if not (0.0 < eps < 1.0):
        raise InputError(f"eps must lie in (0,1), got {eps}")
    M = P.entries.copy()
    last = math.inf
    for t in range(1, cap + 1):
        last = 0.5 * float(np.abs(M - mu.probs[None, :]).sum(axis=1).max())
        if last < eps:
            return t
        M = M @ P.entries
    raise NonconvergenceError(
        f"mixing time exceeded cap {cap} (last TV {last:.3e})",
        steps=cap, residual=last)
