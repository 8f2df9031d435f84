"""Module invariants as hypothesis property tests.

Every property body calls ``tick`` so the acceptance suite can count the
cases that actually ran.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from cliffinit.circuit import GateKind, MaQaoaAnsatz, angles_of, build_ansatz
from cliffinit.hamiltonian import (
    IsingHamiltonian,
    KnapsackInstance,
    PauliZTerm,
    evaluate_bitstring,
    evaluate_polynomial,
    knapsack_hamiltonian,
    maxcut_hamiltonian,
    pubo_to_ising,
)
from cliffinit.metrics import MetricsReport, accuracy, brute_force_ground, reduction_factor
from cliffinit.search import CandidatePool, GaConfig, ga_search
from cliffinit.selection import embed, fixed_interval_select, gradient_norm, k_gaps_select
from cliffinit.stabilizer import (
    CliffordEvaluator,
    CliffordGate,
    clifford_state,
    compile_quarter_turn,
    init_tableau,
    pauli_expectation,
)
from cliffinit.statevector import NoiseModel, StatevectorSimulator
from cliffinit.tuner import TuneConfig, local_optimize
from properties import graphs, hamiltonians, quarters_for, seeds, tick

FAST = settings(max_examples=1000, deadline=None, derandomize=True, suppress_health_check=list(HealthCheck))
MED = settings(max_examples=250, deadline=None, derandomize=True, suppress_health_check=list(HealthCheck))
SLOW = settings(max_examples=60, deadline=None, derandomize=True, suppress_health_check=list(HealthCheck))


def _all_bits(n):
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)


# -- hamiltonian -----------------------------------------------------------------


@st.composite
def polynomials(draw):
    n = draw(st.integers(1, 10))
    k = draw(st.integers(0, 8))
    poly = {}
    for _ in range(k):
        key = tuple(sorted(draw(st.lists(st.integers(0, n - 1), max_size=min(3, n), unique=True))))
        poly[key] = poly.get(key, 0.0) + draw(st.floats(-10, 10, allow_nan=False))
    return n, poly


@FAST
@given(polynomials())
def test_pubo_roundtrip(case):
    tick("pubo_roundtrip")
    n, poly = case
    h = pubo_to_ising(poly, n)
    bits = _all_bits(n)
    want = np.array([evaluate_polynomial(poly, b) for b in bits])
    idx = bits @ (1 << np.arange(n))
    assert np.allclose(h.diagonal(idx), want, atol=1e-9)


@FAST
@given(graphs())
def test_maxcut_energy_is_negative_cut(g):
    tick("maxcut_negative_cut")
    h = maxcut_hamiltonian(g)
    for b in _all_bits(g.num_nodes):
        assert evaluate_bitstring(h, b) == pytest.approx(-g.cut_value(b), abs=1e-9)


@MED
@given(
    st.lists(st.tuples(st.integers(1, 20), st.integers(1, 12)), min_size=1, max_size=3),
    st.integers(1, 15),
)
def test_knapsack_infeasible_above_optimum(items, capacity):
    k = KnapsackInstance(tuple(v for v, _ in items), tuple(w for _, w in items), capacity)
    h = knapsack_hamiltonian(k)
    assume(h.num_qubits <= 10)
    tick("knapsack_infeasible")
    diag = h.diagonal()
    e_opt = diag.min()
    n_items = len(items)
    for idx in range(1 << h.num_qubits):
        sel = [(idx >> q) & 1 for q in range(n_items)]
        if sum(w for (_, w), s in zip(items, sel) if s) > capacity:
            assert diag[idx] > e_opt


@FAST
@given(hamiltonians(max_qubits=5), st.integers(1, 3))
def test_duplicated_terms_merge(h, copies):
    tick("merge_duplicates")
    raw = []
    for t in h.terms:
        raw += [(t.support, t.coefficient / copies)] * copies
    dup = IsingHamiltonian.from_terms(h.num_qubits, raw, offset=h.offset)
    assert np.allclose(dup.diagonal(), h.diagonal(), atol=1e-9)


# -- circuit ---------------------------------------------------------------------


@FAST
@given(hamiltonians(), st.integers(1, 4))
def test_parameter_bijection(h, p):
    tick("param_bijection")
    a = build_ansatz(h, p)
    ids = [g.param_id for g in a.gates if g.kind != GateKind.HADAMARD_WALL]
    assert sorted(ids) == list(range(a.num_params))
    assert a.num_params == (h.num_terms + h.num_qubits) * p
    assert all(g.param_id is None for g in a.gates if g.kind == GateKind.HADAMARD_WALL)


@FAST
@given(st.lists(st.integers(-50, 50), min_size=1, max_size=20))
def test_quarters_land_on_clifford_angles(q):
    tick("clifford_angles")
    th = angles_of(q)
    assert np.all(th >= -math.pi) and np.all(th < math.pi)
    k = th / (math.pi / 2)
    assert np.allclose(k, np.rint(k))
    assert np.array_equal(np.mod(np.rint(k).astype(int), 4), np.mod(q, 4))


@MED
@given(hamiltonians(max_qubits=5), st.integers(1, 2), seeds)
def test_collapsed_angles_match_tied_ansatz(h, p, seed):
    tick("collapsed_angles")
    tied = MaQaoaAnsatz(h, p, tied=True)
    ma = build_ansatz(h, p)
    x = np.random.default_rng(seed).uniform(-math.pi, math.pi, 2 * p)
    e1 = StatevectorSimulator(tied).energy(x)
    e2 = StatevectorSimulator(ma).energy(tied.expand_tied(x))
    assert e1 == pytest.approx(e2, abs=1e-10)


# -- stabilizer ------------------------------------------------------------------


@st.composite
def gate_sequences(draw):
    n = draw(st.integers(1, 6))
    names = ["H", "S", "Sdg", "X", "Z"] + (["CX"] if n > 1 else [])
    seq = []
    for _ in range(draw(st.integers(0, 40))):
        name = draw(st.sampled_from(names))
        if name == "CX":
            c, t = draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
            seq.append(CliffordGate("CX", (c, t)))
        else:
            seq.append(CliffordGate(name, (draw(st.integers(0, n - 1)),)))
    return n, seq


@FAST
@given(gate_sequences())
def test_tableau_symplectic_after_random_gates(case):
    tick("symplectic")
    n, seq = case
    t = init_tableau(n)
    for g in seq:
        t.apply(g)
        assert t.symplectic_ok()


@MED
@given(hamiltonians(max_qubits=6), st.integers(1, 2), seeds)
def test_clifford_matches_statevector(h, p, seed):
    tick("clifford_vs_statevector")
    a = build_ansatz(h, p)
    q = np.random.default_rng(seed).integers(0, 4, size=(4, a.num_params))
    sim = StatevectorSimulator(a)
    got = CliffordEvaluator(a)(q)
    for row, e in zip(q, got):
        assert e == pytest.approx(sim.energy(angles_of(row)), abs=1e-9)


@FAST
@given(gate_sequences(), st.integers(-5, 5).filter(lambda c: c != 0), st.data())
def test_pauli_expectation_values(case, c, data):
    tick("pauli_values")
    n, seq = case
    t = init_tableau(n).apply_all(seq)
    sup = tuple(sorted(data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))))
    assert pauli_expectation(t, PauliZTerm(float(c), sup)) in (-c, 0.0, c)


@MED
@given(hamiltonians(max_qubits=5), gate_sequences(), st.data())
def test_quarter_turn_inverse_is_identity(h, prefix, data):
    tick("quarter_inverse")
    n = h.num_qubits
    a = build_ansatz(h, 1)
    base = init_tableau(n).apply_all([g for g in prefix[1] if max(g.qubits) < n])
    gate = data.draw(st.sampled_from([g for g in a.gates if g.param_id is not None]))
    k = data.draw(st.integers(0, 3))
    t = base.copy().apply_all(compile_quarter_turn(a, gate, k)).apply_all(compile_quarter_turn(a, gate, (4 - k) % 4))
    for r in range(1, n + 1):
        for sup in itertools.combinations(range(n), r):
            assert t.expectation(sup) == base.expectation(sup)


# -- statevector -----------------------------------------------------------------


@MED
@given(hamiltonians(max_qubits=7), st.integers(1, 2), seeds)
def test_statevector_normalized(h, p, seed):
    tick("normalization")
    a = build_ansatz(h, p)
    x = np.random.default_rng(seed).uniform(-4, 4, a.num_params)
    assert abs(StatevectorSimulator(a).state(x).norm - 1) < 1e-10


@MED
@given(hamiltonians(max_qubits=6), seeds, st.data())
def test_energy_is_2pi_periodic(h, seed, data):
    tick("periodicity")
    a = build_ansatz(h, 1)
    sim = StatevectorSimulator(a)
    x = np.random.default_rng(seed).uniform(-math.pi, math.pi, a.num_params)
    j = data.draw(st.integers(0, a.num_params - 1))
    y = x.copy()
    y[j] += 2 * math.pi
    assert sim.energy(y) == pytest.approx(sim.energy(x), abs=1e-10)


@SLOW
@given(hamiltonians(max_qubits=5), seeds)
def test_sample_mean_matches_expectation(h, seed):
    tick("sample_mean")
    a = build_ansatz(h, 1)
    sim = StatevectorSimulator(a)
    x = np.random.default_rng(seed).uniform(-math.pi, math.pi, a.num_params)
    shots = 20_000
    counts = sim.sample(x, shots, seed)
    diag = sim.diagonal
    vals = np.array([diag[int(b[::-1], 2)] for b in counts])
    w = np.array(list(counts.values()), dtype=float)
    mean = float(vals @ w) / shots
    p = sim.state(x).probabilities()
    sd = math.sqrt(max(float(p @ diag**2) - sim.energy(x) ** 2, 0.0) / shots)
    assert abs(mean - sim.energy(x)) <= 5 * sd + 1e-9


@SLOW
@given(hamiltonians(max_qubits=4, max_terms=5), seeds)
def test_noisy_energy_not_below_ground(h, seed):
    tick("noisy_lower_bound")
    a = build_ansatz(h, 1)
    sim = StatevectorSimulator(a)
    x = np.random.default_rng(seed).uniform(-math.pi, math.pi, a.num_params)
    mean, se = sim.noisy_energy(x, NoiseModel(0.05, 0.1, 0.01, 64), seed, return_stderr=True)
    assert mean >= brute_force_ground(h).energy - 5 * se - 1e-9


# -- search ----------------------------------------------------------------------


@SLOW
@given(hamiltonians(max_qubits=6), seeds)
def test_ga_invariants(h, seed):
    tick("ga_invariants")
    a = build_ansatz(h, 1)
    gens = []
    pool = ga_search(a, GaConfig(population=12, generations=8, rng_seed=seed), lambda g, pop, e: gens.append((pop, e)))
    assert all(b <= c for c, b in zip(pool.history, pool.history[1:]))
    ground = brute_force_ground(h).energy
    assert all(e >= ground - 1e-9 for _, e in pool.sorted_entries())
    for (pop, e), (nxt, _) in zip(gens, gens[1:]):
        # the best genome under the GA's ranking: lowest energy, then lexicographic
        tied = sorted(tuple(g) for g, v in zip(pop.tolist(), e) if v == e.min())
        assert (nxt == np.array(tied[0])).all(axis=1).any()


@SLOW
@given(seeds)
def test_full_mutation_covers_tiny_space(seed):
    tick("ergodicity")
    h = IsingHamiltonian.from_terms(2, [((0, 1), 1.0)])
    a = build_ansatz(h, 1)  # 4**3 genomes
    pool = ga_search(a, GaConfig(population=8, generations=300, mutation_prob=1.0, elitism=0, rng_seed=seed))
    assert len(pool) == 64


# -- selection -------------------------------------------------------------------


@FAST
@given(st.integers(1, 8).flatmap(lambda d: st.tuples(quarters_for(d), quarters_for(d), st.integers(0, d - 1), st.integers(1, 3))))
def test_embedding_injective_and_rotation_invariant(case):
    tick("embed_props")
    q1, q2, j, c = case
    e1, e2 = embed(q1), embed(q2)
    assert np.allclose(np.hypot(e1[0::2], e1[1::2]), 1.0, atol=1e-12)
    assert (np.array_equal(q1, q2)) == np.array_equal(e1, e2)
    r1, r2 = q1.copy(), q2.copy()
    r1[j] += c
    r2[j] += c
    assert np.linalg.norm(embed(r1) - embed(r2)) == pytest.approx(np.linalg.norm(e1 - e2), abs=1e-12)


@MED
@given(hamiltonians(max_qubits=5), seeds)
def test_gradient_shift_representation(h, seed):
    tick("gradient_shift")
    a = build_ansatz(h, 1)
    q = np.random.default_rng(seed).integers(0, 4, a.num_params)
    n1, g1 = gradient_norm(a, q)
    n2, g2 = gradient_norm(a, q + 4 * np.random.default_rng(seed + 1).integers(-3, 4, a.num_params))
    assert n1 == n2 and np.array_equal(g1, g2)


@st.composite
def pools(draw, d=6):
    n = draw(st.integers(1, 40))
    rng = np.random.default_rng(draw(seeds))
    pool = CandidatePool(d)
    while len(pool) < n:
        pool.add(rng.integers(0, 4, d), float(rng.integers(-20, 20)))
    return pool


@MED
@given(pools(), st.integers(1, 6), seeds)
def test_k_gaps_distinct_seeds_distinct_clusters(pool, k, seed):
    tick("k_gaps_distinct")
    h = IsingHamiltonian.from_terms(3, [((0, 1), 1.0), ((1, 2), 2.0), ((0, 2), -1.0)])
    a = build_ansatz(h, 1)
    s = k_gaps_select(a, pool, k, rng_seed=seed)
    assert 1 <= len(s) <= k
    assert len({x.quarters for x in s}) == len(s)
    assert len({x.cluster_id for x in s}) == len(s)


@FAST
@given(pools(), st.integers(1, 10))
def test_fixed_interval_includes_best(pool, k):
    tick("fixed_interval_best")
    s = fixed_interval_select(pool, k)
    assert s.seeds[0].quarters == tuple(pool.best()[0])
    assert len(s) == min(k, len(pool))


# -- tuner -----------------------------------------------------------------------


@SLOW
@given(hamiltonians(max_qubits=4, max_terms=5), seeds, st.sampled_from(["nelder-mead", "cobyla"]))
def test_tuner_trace_invariants(h, seed, method):
    tick("tuner_trace")
    a = build_ansatz(h, 1)
    q = np.random.default_rng(seed).integers(0, 4, a.num_params)
    t = local_optimize(a, angles_of(q), TuneConfig(max_evals_per_start=30, method=method, optimizer_seed=seed))
    vals = [e for _, e in t.evals]
    assert all(b <= c for c, b in zip(vals, vals[1:]))
    assert len(vals) <= 30 and t.final_energy == vals[-1]
    assert t.final_energy >= brute_force_ground(h).energy - 1e-9
    assert t.start_energy == pytest.approx(CliffordEvaluator(a)(q[None, :])[0], abs=1e-9)


@SLOW
@given(hamiltonians(max_qubits=3, max_terms=3), seeds)
def test_noisy_tuning_rerun_identical(h, seed):
    tick("noisy_rerun")
    a = build_ansatz(h, 1)
    cfg = TuneConfig(max_evals_per_start=6, noise=NoiseModel(0.02, 0.05, 0.0, 4), optimizer_seed=seed)
    x = np.random.default_rng(seed).uniform(-math.pi, math.pi, a.num_params)
    assert local_optimize(a, x, cfg).evals == local_optimize(a, x, cfg).evals


# -- metrics ---------------------------------------------------------------------


@MED
@given(hamiltonians(max_qubits=6), seeds)
def test_ground_is_global_lower_bound(h, seed):
    tick("ground_lower_bound")
    a = build_ansatz(h, 2)
    q = np.random.default_rng(seed).integers(0, 4, size=(16, a.num_params))
    assert CliffordEvaluator(a)(q).min() >= brute_force_ground(h).energy - 1e-9


@FAST
@given(st.floats(-1e3, -1e-3), st.floats(0, 1), st.floats(1e-3, 1e3))
def test_accuracy_scale_covariant(e_opt, frac, c):
    tick("accuracy_scale")
    e_init = frac * e_opt
    assert accuracy(c * e_init, c * e_opt) == pytest.approx(accuracy(e_init, e_opt), rel=1e-12)


@FAST
@given(st.integers(1, 200), seeds)
def test_reduction_factor_bounds(shots, seed):
    tick("rf_bounds")
    rng = np.random.default_rng(seed)

    def draw(m):
        keys = rng.integers(0, m, shots)
        out = {}
        for k in keys:
            out[str(int(k))] = out.get(str(int(k)), 0) + 1
        return out

    rf = reduction_factor(draw(1000), draw(int(rng.integers(1, 50))))
    assert 1 / shots <= rf <= shots


@FAST
@given(
    st.floats(-100, 0),
    st.floats(-100, -0.01),
    st.floats(0.01, 100),
    st.one_of(st.none(), st.floats(-100, 100).filter(lambda v: v != 0)),
)
def test_report_recomputes_exactly(e_init, e_opt, e_max, e_rand):
    assume(e_init >= e_opt)
    tick("report_recompute")
    r = MetricsReport.build(e_init, e_opt, e_max, e_rand, {"0": 3, "1": 2}, {"0": 5})
    assert r.recompute_ok()
    again = MetricsReport.from_json(r.to_json())
    assert again.recompute_ok() and again == r
