"""Dense enumeration module vs. the independent brute-force oracles."""

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import _oracles as ora
from ferrospin import constants
from ferrospin.errors import CapacityError, InputError, NonconvergenceError, NumericError
from ferrospin.exact import (
    DistributionTable,
    TransitionMatrix,
    all_to_one_influence,
    alternating_scan_matrix,
    block_heatbath_matrix,
    conditional_marginal,
    detailed_balance_residual,
    exact_mixing_time,
    gibbs_distribution,
    glauber_matrix,
    heatbath_matrix,
    influence_pair,
    log_weights,
    multiplicative_reversiblization,
    scan_matrix,
    spectral_report,
    stationarity_residual,
    tv_distance,
    tv_from_start,
)
from ferrospin.model import Pinning, TwoSpinSystem, config_to_index, index_to_config


def to_system(inst):
    n, lam, edges = inst
    return TwoSpinSystem.from_params(n, lam, edges)


def oracle_probs_vector(n, lam, edges):
    table, _ = ora.gibbs(n, lam, edges)
    out = np.zeros(2 ** n)
    for s, p in table.items():
        out[config_to_index(s)] = p
    return out


# ---------------------------------------------------------------------------
# distribution tables

def test_gibbs_single_vertex():
    sys1 = TwoSpinSystem.from_params(1, [1.0], [])
    table = gibbs_distribution(sys1)
    assert table.probs == pytest.approx([0.5, 0.5])
    assert table.log_z == pytest.approx(math.log(2.0))


def test_gibbs_single_edge():
    # lam = (1,1), beta = 1, gamma = 2: weights 1,1,1,2 over 00,10,01,11
    sys2 = TwoSpinSystem.from_params(2, [1.0, 1.0], [(0, 1, 1.0, 2.0)])
    table = gibbs_distribution(sys2)
    assert table.probs == pytest.approx([0.2, 0.2, 0.2, 0.4])
    assert table.log_z == pytest.approx(math.log(5.0))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 6))
def test_gibbs_matches_oracle(seed, n):
    rng = random.Random(seed)
    inst = ora.random_instance(rng, n)
    table = gibbs_distribution(to_system(inst))
    assert np.abs(table.probs - oracle_probs_vector(*inst)).max() < 1e-12
    assert abs(float(table.probs.sum()) - 1.0) <= constants.PROB_SUM_TOL


def test_gibbs_survives_extreme_weights():
    # log-space internals: a naive product would overflow at gamma = e^700
    sys2 = TwoSpinSystem.from_params(2, [1e-300, 1e-300],
                                     [(0, 1, 1.0, math.exp(700))])
    table = gibbs_distribution(sys2)
    assert table.probs[3] == pytest.approx(1.0)


def test_gibbs_capacity():
    big = TwoSpinSystem.from_params(constants.VECTOR_LIMIT + 1,
                                    [1.0] * (constants.VECTOR_LIMIT + 1), [])
    with pytest.raises(CapacityError):
        gibbs_distribution(big)


def test_distribution_table_validation():
    with pytest.raises(NumericError):
        DistributionTable(n=1, probs=np.array([0.7, 0.7]), log_z=0.0)
    with pytest.raises(NumericError):
        DistributionTable(n=1, probs=np.array([-0.1, 1.1]), log_z=0.0)
    with pytest.raises(InputError):
        DistributionTable(n=2, probs=np.array([0.5, 0.5]), log_z=0.0)


def test_tv_distance():
    a = DistributionTable(1, np.array([1.0, 0.0]), 0.0)
    b = DistributionTable(1, np.array([0.0, 1.0]), 0.0)
    assert tv_distance(a, b) == pytest.approx(1.0)
    assert tv_distance(a, a) == 0.0
    with pytest.raises(InputError):
        tv_distance(a, DistributionTable(2, np.full(4, 0.25), 0.0))


# ---------------------------------------------------------------------------
# conditionals and influences

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 6))
def test_conditional_matches_oracle(seed, n):
    rng = random.Random(seed)
    inst = ora.random_instance(rng, n)
    pinned = {v: rng.randint(0, 1) for v in range(n) if rng.random() < 0.4}
    free = [v for v in range(n) if v not in pinned]
    if not free:
        pinned.pop(next(iter(pinned)))
        free = [v for v in range(n) if v not in pinned]
    v = rng.choice(free)
    p0, p1 = conditional_marginal(to_system(inst), Pinning(pinned), v)
    o0, o1 = ora.conditional(*inst, pinned, v)
    assert p0 == pytest.approx(o0, abs=1e-12)
    assert p1 == pytest.approx(o1, abs=1e-12)
    assert p0 + p1 == pytest.approx(1.0, abs=constants.PROB_SUM_TOL)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(3, 6))
def test_conditional_agrees_with_pinned_subsystem(seed, n):
    # two independent routes: masked summation vs. reduction to a smaller system
    from ferrospin.model import apply_pinning, surviving_vertices

    rng = random.Random(seed)
    inst = ora.random_instance(rng, n)
    system = to_system(inst)
    pinned = {0: rng.randint(0, 1)}
    pin = Pinning(pinned)
    v = rng.randrange(1, n)
    p0, _ = conditional_marginal(system, pin, v)

    reduced = apply_pinning(system, pin)
    new_of_old = {o: i for i, o in enumerate(surviving_vertices(n, pin))}
    q0, _ = conditional_marginal(reduced, Pinning({}), new_of_old[v])
    assert p0 == pytest.approx(q0, abs=1e-12)


def test_conditional_rejects_pinned_target():
    sys2 = TwoSpinSystem.from_params(2, [1.0, 1.0], [(0, 1, 1.0, 2.0)])
    with pytest.raises(InputError):
        conditional_marginal(sys2, Pinning({0: 1}), 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 5))
def test_influences_match_oracle(seed, n):
    rng = random.Random(seed)
    inst = ora.random_instance(rng, n)
    system = to_system(inst)
    u, v = rng.sample(range(n), 2)
    assert influence_pair(system, u, v) == pytest.approx(
        ora.influence(*inst, u, v), abs=1e-12)
    assert all_to_one_influence(system, v) == pytest.approx(
        ora.all_to_one(*inst, v), abs=1e-12)


def test_influence_nonnegative_on_ferro():
    # positive association: conditioning a neighbour up never drags v down
    rng = random.Random(7)
    for _ in range(10):
        inst = ora.random_instance(rng, 5)
        system = to_system(inst)
        for u in range(5):
            for v in range(5):
                if u != v:
                    assert influence_pair(system, u, v) >= -1e-12


# ---------------------------------------------------------------------------
# kernels

def glauber_row_vector(inst, sigma):
    n = inst[0]
    row = np.zeros(2 ** n)
    for tau, p in ora.glauber_row(*inst, sigma).items():
        row[config_to_index(tau)] += p
    return row


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 5))
def test_glauber_matrix_matches_oracle(seed, n):
    rng = random.Random(seed)
    inst = ora.random_instance(rng, n)
    P = glauber_matrix(to_system(inst))
    for idx in range(2 ** n):
        sigma = index_to_config(idx, n)
        assert np.abs(P.entries[idx] - glauber_row_vector(inst, sigma)).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 6))
def test_glauber_stationarity_and_balance(seed, n):
    rng = random.Random(seed)
    system = to_system(ora.random_instance(rng, n))
    P = glauber_matrix(system)
    mu = gibbs_distribution(system)
    assert stationarity_residual(P, mu) <= constants.STATIONARITY_TOL
    assert detailed_balance_residual(P, mu) <= constants.BALANCE_TOL


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 6))
def test_glauber_is_positive_semidefinite(seed, n):
    # average of projections: all eigenvalues in [0, 1], so gap <= 1
    rng = random.Random(seed)
    system = to_system(ora.random_instance(rng, n))
    P = glauber_matrix(system)
    mu = gibbs_distribution(system)
    d = np.sqrt(mu.probs)
    S = (d[:, None] * P.entries) / d[None, :]
    eigs = np.linalg.eigvalsh((S + S.T) / 2)
    assert eigs.min() >= -1e-10
    assert eigs.max() <= 1.0 + 1e-10


def test_glauber_capacity():
    n = constants.MATRIX_LIMIT + 1
    big = TwoSpinSystem.from_params(n, [1.0] * n, [])
    with pytest.raises(CapacityError):
        glauber_matrix(big)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 5))
def test_block_matrix_matches_oracle(seed, n):
    rng = random.Random(seed)
    inst = ora.random_instance(rng, n)
    block = [v for v in range(n) if rng.random() < 0.5]
    P = block_heatbath_matrix(to_system(inst), block)
    for idx in range(2 ** n):
        sigma = index_to_config(idx, n)
        row = np.zeros(2 ** n)
        for tau, p in ora.block_row(*inst, sigma, block).items():
            row[config_to_index(tau)] = p
        if not block:
            row[idx] = 1.0
        assert np.abs(P.entries[idx] - row).max() < 1e-12


def test_block_matrix_is_projection():
    # resampling a block twice is the same as once: P_B P_B = P_B
    rng = random.Random(3)
    system = to_system(ora.random_instance(rng, 5))
    P = block_heatbath_matrix(system, [0, 2, 4]).entries
    assert np.abs(P @ P - P).max() < 1e-12


def test_block_matrix_single_site_average_is_glauber():
    rng = random.Random(11)
    system = to_system(ora.random_instance(rng, 5))
    avg = heatbath_matrix(system, [[v] for v in range(5)])
    P = glauber_matrix(system)
    assert np.abs(avg.entries - P.entries).max() < 1e-12


def test_block_matrix_rejects_bad_vertex():
    sys2 = TwoSpinSystem.from_params(2, [1.0, 1.0], [(0, 1, 1.0, 2.0)])
    with pytest.raises(InputError):
        block_heatbath_matrix(sys2, [2])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 5))
def test_scan_matrix_matches_oracle(seed, n):
    rng = random.Random(seed)
    inst = ora.random_instance(rng, n)
    verts = list(range(n))
    rng.shuffle(verts)
    cut = rng.randrange(1, n)
    blocks = [verts[:cut], verts[cut:]]
    Q = scan_matrix(to_system(inst), blocks)
    for idx in range(2 ** n):
        sigma = index_to_config(idx, n)
        row = np.zeros(2 ** n)
        for tau, p in ora.scan_row(*inst, sigma, blocks).items():
            row[config_to_index(tau)] = p
        assert np.abs(Q.entries[idx] - row).max() < 1e-11


def test_scan_matrix_order_is_first_block_first():
    # after scanning [ {0}, {1} ], vertex 1 was resampled last, so its
    # conditional given the new sigma_0 must hold exactly in every row
    sys2 = TwoSpinSystem.from_params(2, [0.3, 0.8], [(0, 1, 0.9, 3.0)])
    Q = scan_matrix(sys2, [[0], [1]]).entries
    P0 = block_heatbath_matrix(sys2, [0]).entries
    P1 = block_heatbath_matrix(sys2, [1]).entries
    assert np.abs(Q - P0 @ P1).max() == 0.0
    assert np.abs(Q - P1 @ P0).max() > 1e-3


def test_alternating_scan_requires_independent_parts():
    tri = TwoSpinSystem.from_params(3, [1.0] * 3,
                                    [(0, 1, 1.0, 2.0), (1, 2, 1.0, 2.0),
                                     (0, 2, 1.0, 2.0)])
    with pytest.raises(InputError, match="independent"):
        alternating_scan_matrix(tri, ([0, 2], [1]))
    path = TwoSpinSystem.from_params(3, [1.0] * 3,
                                     [(0, 1, 1.0, 2.0), (1, 2, 1.0, 2.0)])
    with pytest.raises(InputError, match="partition"):
        alternating_scan_matrix(path, ([0], [1]))
    alternating_scan_matrix(path, ([0, 2], [1]))  # fine


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 6))
def test_scan_stationarity(seed, n):
    rng = random.Random(seed)
    inst = ora.random_instance(rng, n)
    system = to_system(inst)
    mu = gibbs_distribution(system)
    evens = [v for v in range(n) if v % 2 == 0]
    odds = [v for v in range(n) if v % 2 == 1]
    Q = scan_matrix(system, [evens, odds])
    assert stationarity_residual(Q, mu) <= constants.STATIONARITY_TOL


def test_alternating_scan_on_path_resamples_all():
    # independent bipartition on a path: kernel rows are proper distributions
    # and mu is stationary even though Q itself is not reversible
    path = to_system((4, [0.5, 1.2, 0.8, 0.3],
                      [(0, 1, 0.9, 2.0), (1, 2, 0.8, 3.0), (2, 3, 1.0, 1.5)]))
    mu = gibbs_distribution(path)
    Q = alternating_scan_matrix(path, ([0, 2], [1, 3]))
    assert stationarity_residual(Q, mu) <= constants.STATIONARITY_TOL
    flow = mu.probs[:, None] * Q.entries
    assert np.abs(flow - flow.T).max() > 1e-6  # genuinely non-reversible


# ---------------------------------------------------------------------------
# reversiblization and spectra

@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 5))
def test_reversiblization_properties(seed, n):
    rng = random.Random(seed)
    system = to_system(ora.random_instance(rng, n))
    mu = gibbs_distribution(system)
    evens = [v for v in range(n) if v % 2 == 0]
    odds = [v for v in range(n) if v % 2 == 1]
    Q = scan_matrix(system, [evens, odds])
    R = multiplicative_reversiblization(Q, mu)
    # reversible wrt mu, and positive semidefinite in the mu inner product
    assert detailed_balance_residual(R, mu) <= 1e-9
    d = np.sqrt(mu.probs)
    S = (d[:, None] * R.entries) / d[None, :]
    eigs = np.linalg.eigvalsh((S + S.T) / 2)
    assert eigs.min() >= -1e-10


def test_spectral_report_independent_spins():
    # no edges: Glauber eigenvalues are 1 - |S|/n, so the gap is exactly 1/n
    system = TwoSpinSystem.from_params(3, [0.4, 1.7, 0.9], [])
    mu = gibbs_distribution(system)
    rep = spectral_report(glauber_matrix(system), mu, "glauber")
    assert rep.gap == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert rep.relaxation_time == pytest.approx(3.0, abs=1e-9)
    # scanning both halves of an edgeless system resamples everything: the
    # scan kernel has rank one and its reversiblization has zero second eig
    rep2 = spectral_report(alternating_scan_matrix(system, ([0, 2], [1])),
                           mu, "alternating_scan")
    assert rep2.second_eigenvalue == pytest.approx(0.0, abs=1e-12)
    # 1/(1 - sqrt(lam2)) amplifies eigenvalue noise by a square root
    assert rep2.relaxation_time == pytest.approx(1.0, abs=1e-6)


def test_spectral_report_single_vertex():
    system = TwoSpinSystem.from_params(1, [3.0], [])
    mu = gibbs_distribution(system)
    rep = spectral_report(glauber_matrix(system), mu, "glauber")
    assert rep.gap == pytest.approx(1.0, abs=1e-12)


def test_spectral_report_rejects_non_reversible_as_glauber():
    path = to_system((3, [0.5, 1.2, 0.8],
                      [(0, 1, 0.9, 2.0), (1, 2, 0.8, 3.0)]))
    mu = gibbs_distribution(path)
    Q = alternating_scan_matrix(path, ([0, 2], [1]))
    with pytest.raises(NumericError):
        spectral_report(Q, mu, "glauber")
    with pytest.raises(InputError):
        spectral_report(Q, mu, "no-such-kind")


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 5))
def test_scan_relaxation_order_invariant(seed, n):
    # spectrum of R(Q) away from zero does not depend on which part goes first
    rng = random.Random(seed)
    inst = ora.random_instance(rng, n)
    system = to_system(inst)
    mu = gibbs_distribution(system)
    evens = [v for v in range(n) if v % 2 == 0]
    odds = [v for v in range(n) if v % 2 == 1]
    Qa = scan_matrix(system, [evens, odds])
    Qb = scan_matrix(system, [odds, evens])
    ra = spectral_report(Qa, mu, "alternating_scan")
    rb = spectral_report(Qb, mu, "alternating_scan")
    assert ra.second_eigenvalue == pytest.approx(rb.second_eigenvalue, abs=1e-9)


# ---------------------------------------------------------------------------
# mixing

def test_mixing_time_rank_one_chain():
    # single vertex: one Glauber step resamples it, so TV hits 0 at t = 1
    system = TwoSpinSystem.from_params(1, [2.5], [])
    mu = gibbs_distribution(system)
    P = glauber_matrix(system)
    assert exact_mixing_time(P, mu, 0.01) == 1


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 4))
def test_mixing_time_matches_oracle(seed, n):
    rng = random.Random(seed)
    inst = ora.random_instance(rng, n)
    system = to_system(inst)
    mu = gibbs_distribution(system)
    P = glauber_matrix(system)
    eps = constants.DEFAULT_EPS
    got = exact_mixing_time(P, mu, eps)
    want = ora.mixing_time(*inst, lambda s: ora.glauber_row(*inst, s), eps)
    assert got == want


def test_mixing_time_cap():
    # symmetric double well (00 and 11 both weight e^20, saddle e^10):
    # escaping either well costs ~e^-10 per step, far beyond the cap
    system = TwoSpinSystem.from_params(
        2, [math.exp(10), math.exp(10)], [(0, 1, 1.0, math.exp(20))])
    mu = gibbs_distribution(system)
    P = glauber_matrix(system)
    with pytest.raises(NonconvergenceError):
        exact_mixing_time(P, mu, 1e-3, cap=50)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 4), st.integers(1, 6))
def test_tv_from_start_matches_matrix_power(seed, n, steps):
    rng = random.Random(seed)
    system = to_system(ora.random_instance(rng, n))
    mu = gibbs_distribution(system)
    P = glauber_matrix(system)
    start = rng.randrange(2 ** n)
    want = 0.5 * float(
        np.abs(np.linalg.matrix_power(P.entries, steps)[start] - mu.probs).sum())
    assert tv_from_start(P, mu, start, steps) == pytest.approx(want, abs=1e-12)


def test_transition_matrix_validation():
    with pytest.raises(NumericError):
        TransitionMatrix(n=1, entries=np.array([[0.5, 0.6], [0.5, 0.5]]))
    with pytest.raises(InputError):
        TransitionMatrix(n=2, entries=np.eye(2))


def test_log_weights_index_convention():
    # bit v of the index is sigma_v
    sys2 = TwoSpinSystem.from_params(2, [0.25, 4.0], [])
    lw = log_weights(sys2)
    assert lw[0] == pytest.approx(math.log(0.25) + math.log(4.0))
    assert lw[1] == pytest.approx(math.log(4.0))   # sigma = (1, 0)
    assert lw[2] == pytest.approx(math.log(0.25))  # sigma = (0, 1)
    assert lw[3] == pytest.approx(0.0)
