import math

import numpy as np
import pytest

from cliffinit.circuit import GateKind, MaQaoaAnsatz, angles_of, build_ansatz, gate_semantics, normalize_angles
from cliffinit.hamiltonian import IsingHamiltonian, WeightedGraph, generate_graph, maxcut_hamiltonian
from cliffinit.statevector import exact_energy
from oracles import dense_energy

K3 = maxcut_hamiltonian(WeightedGraph(3, ((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0))))


def test_k3_param_count():
    assert build_ansatz(K3, 2).num_params == 12


def test_k3_p1_gate_list():
    kinds = [g.kind for g in build_ansatz(K3, 1).gates]
    assert kinds == [GateKind.HADAMARD_WALL] + [GateKind.COST] * 3 + [GateKind.MIXER] * 3


def test_gate_order_and_bijection():
    h = maxcut_hamiltonian(generate_graph("regular3", 6, "integer_0_to_10", 2))
    a = build_ansatz(h, 3)
    m, n = a.num_clauses, a.num_qubits
    pids = [g.param_id for g in a.gates if g.param_id is not None]
    assert sorted(pids) == list(range((m + n) * 3))
    assert a.gates[0].param_id is None
    for layer in range(3):
        block = a.gates[1 + layer * (m + n) : 1 + (layer + 1) * (m + n)]
        assert [g.target for g in block[:m]] == list(range(m))
        assert [g.target for g in block[m:]] == list(range(n))
        assert all(g.layer == layer for g in block)


def test_tied_ansatz_matches_cafqa_space_size():
    # 10-node complete graph, standard QAOA at p=1: 2 angles, 16 Clifford points
    h = maxcut_hamiltonian(generate_graph("complete", 10, "integer_0_to_10", 0))
    tied = MaQaoaAnsatz(h, 1, tied=True)
    assert tied.num_params == 2
    assert 4**tied.num_params == 16


def test_identity_only_hamiltonian_rejected():
    with pytest.raises(ValueError):
        build_ansatz(IsingHamiltonian(3, 1.0), 1)
    with pytest.raises(ValueError):
        build_ansatz(K3, 0)


def test_angles_of_examples():
    assert np.array_equal(angles_of([0, 0]), [0.0, 0.0])
    assert angles_of([3])[0] == -math.pi / 2
    assert angles_of([2])[0] == -math.pi
    assert angles_of([1])[0] == math.pi / 2


def test_normalize_angles_range():
    x = np.array([math.pi, -math.pi, 3 * math.pi, -1e-18, 7.0, -7.0])
    y = normalize_angles(x)
    assert np.all(y >= -math.pi) and np.all(y < math.pi)
    assert np.allclose(np.exp(1j * x), np.exp(1j * y))


def test_gate_semantics_examples():
    a = build_ansatz(K3, 1)
    cost = a.gates[1]
    assert np.allclose(gate_semantics(a, cost, 0.0).matrix, np.eye(4))
    mixer = a.gates[4]
    u = gate_semantics(a, mixer, math.pi).matrix
    plus = np.array([1, 1]) / math.sqrt(2)
    out = u @ plus
    assert abs(abs(np.vdot(plus, out)) - 1) < 1e-12
    with pytest.raises(ValueError):
        gate_semantics(a, cost, math.inf)


def test_cos_fixture():
    # wall, RZ(g), RX(b) on one qubit: <Z> = sin g sin b; at g = pi/2 this is
    # the H.RZ.H identity shifted by a quarter turn
    h = IsingHamiltonian.from_terms(1, [((0,), 1.0)])
    a = build_ansatz(h, 1)
    for g, b in [(0.3, 1.1), (math.pi / 2, math.pi / 3), (-2.0, 0.7)]:
        assert exact_energy(a, [g, b]) == pytest.approx(math.sin(g) * math.sin(b), abs=1e-12)
        assert dense_energy(a, [g, b]) == pytest.approx(math.sin(g) * math.sin(b), abs=1e-12)
    th = math.pi / 3
    assert exact_energy(a, [math.pi / 2, th + math.pi / 2]) == pytest.approx(0.5, abs=1e-12)


def test_collapsed_angles_reproduce_standard_qaoa():
    h = maxcut_hamiltonian(generate_graph("complete", 5, "integer_0_to_10", 3))
    tied = MaQaoaAnsatz(h, 2, tied=True)
    ma = build_ansatz(h, 2)
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.uniform(-math.pi, math.pi, 4)
        assert exact_energy(tied, x) == pytest.approx(exact_energy(ma, tied.expand_tied(x)), abs=1e-12)
        assert exact_energy(tied, x) == pytest.approx(dense_energy(tied, x), abs=1e-10)


def test_ansatz_json_roundtrip_fields():
    a = build_ansatz(K3, 1)
    d = a.to_json()
    assert d["num_params"] == 6 and len(d["gates"]) == 7
    assert d["gates"][1] == {"kind": "cost", "layer": 0, "param_id": 0, "support": [0, 1]}
