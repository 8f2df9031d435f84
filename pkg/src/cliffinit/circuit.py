"""Multi-angle QAOA ansatz: gate template and parameter indexing.

Every gate is ``exp(-i theta/2 P)`` for a Pauli string ``P``: a Z-string for
cost gates and a single X for mixer gates. The searched and tuned variable is
that physical rotation angle, so the Hamiltonian coefficient of a cost term
does not enter the circuit. A quarter-turn value ``k`` means ``theta = k*pi/2``
and keeps every gate Clifford.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property

import numpy as np

from .hamiltonian import IsingHamiltonian, PauliZTerm

QUARTER_ANGLES = np.array([0.0, math.pi / 2, -math.pi, -math.pi / 2])


class GateKind(IntEnum):
    HADAMARD_WALL = 0
    COST = 1
    MIXER = 2


@dataclass(frozen=True)
class GateTemplate:
    kind: GateKind
    layer: int
    param_id: int | None
    target: int | None = None  # term index for COST, qubit for MIXER


@dataclass(frozen=True)
class MaQaoaAnsatz:
    """Gate list for depth ``p``: one Hadamard wall, then per layer all cost
    rotations in term order followed by all mixer rotations in qubit order.

    With ``tied=True`` all cost gates of a layer share one angle and all
    mixers share another (the standard 2p-parameter QAOA).
    """

    hamiltonian: IsingHamiltonian
    depth: int
    tied: bool = False

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.hamiltonian.num_terms == 0:
            raise ValueError("Hamiltonian has no non-identity terms; nothing to parameterize")

    @property
    def num_qubits(self) -> int:
        return self.hamiltonian.num_qubits

    @property
    def num_clauses(self) -> int:
        return self.hamiltonian.num_terms

    @property
    def num_params(self) -> int:
        if self.tied:
            return 2 * self.depth
        return (self.num_clauses + self.num_qubits) * self.depth

    @cached_property
    def gates(self) -> tuple[GateTemplate, ...]:
        m, n = self.num_clauses, self.num_qubits
        out = [GateTemplate(GateKind.HADAMARD_WALL, 0, None)]
        for layer in range(self.depth):
            base = layer * (m + n)
            for a in range(m):
                pid = 2 * layer if self.tied else base + a
                out.append(GateTemplate(GateKind.COST, layer, pid, a))
            for b in range(n):
                pid = 2 * layer + 1 if self.tied else base + m + b
                out.append(GateTemplate(GateKind.MIXER, layer, pid, b))
        return tuple(out)

    def support(self, gate: GateTemplate) -> tuple[int, ...]:
        if gate.kind == GateKind.HADAMARD_WALL:
            return tuple(range(self.num_qubits))
        if gate.kind == GateKind.COST:
            return self.hamiltonian.terms[gate.target].support
        return (gate.target,)

    @cached_property
    def arrays(self) -> dict[str, np.ndarray]:
        """Flat integer encoding of the gate list for the compiled kernels."""
        gates = self.gates
        width = max(1, self.hamiltonian.max_order)
        kinds = np.array([int(g.kind) for g in gates], dtype=np.int8)
        pids = np.array([-1 if g.param_id is None else g.param_id for g in gates], dtype=np.int64)
        sup = np.full((len(gates), width), -1, dtype=np.int64)
        lens = np.zeros(len(gates), dtype=np.int64)
        for i, g in enumerate(gates):
            if g.kind == GateKind.HADAMARD_WALL:
                continue
            s = self.support(g)
            sup[i, : len(s)] = s
            lens[i] = len(s)
        return {"kinds": kinds, "pids": pids, "sup": sup, "lens": lens}

    @cached_property
    def cost_param_ids(self) -> np.ndarray:
        return np.array([g.param_id for g in self.gates if g.kind == GateKind.COST], dtype=np.int64)

    @cached_property
    def mixer_param_ids(self) -> np.ndarray:
        return np.array([g.param_id for g in self.gates if g.kind == GateKind.MIXER], dtype=np.int64)

    def expand_tied(self, params: np.ndarray) -> np.ndarray:
        """Map a tied 2p-vector to the equivalent multi-angle vector."""
        params = np.asarray(params)
        if not self.tied:
            return params
        ma = MaQaoaAnsatz(self.hamiltonian, self.depth)
        out = np.empty(ma.num_params, dtype=params.dtype)
        for g_tied, g_ma in zip(self.gates, ma.gates):
            if g_ma.param_id is not None:
                out[g_ma.param_id] = params[g_tied.param_id]
        return out

    def to_json(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "depth": self.depth,
            "tied": self.tied,
            "num_params": self.num_params,
            "gates": [
                {
                    "kind": g.kind.name.lower(),
                    "layer": g.layer,
                    "param_id": g.param_id,
                    "support": list(self.support(g)),
                }
                for g in self.gates
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def build_ansatz(h: IsingHamiltonian, p: int = 2) -> MaQaoaAnsatz:
    return MaQaoaAnsatz(h, p)


def normalize_angles(theta) -> np.ndarray:
    """Wrap angles into ``[-pi, pi)``."""
    theta = np.asarray(theta, dtype=np.float64)
    out = np.mod(theta + math.pi, 2 * math.pi) - math.pi
    # mod can round up to exactly 2*pi for tiny negative inputs
    return np.where(out >= math.pi, out - 2 * math.pi, out)


def angles_of(quarters) -> np.ndarray:
    """Quarter-turn integers to angles in ``[-pi, pi)``."""
    q = np.asarray(quarters, dtype=np.int64)
    return QUARTER_ANGLES[np.mod(q, 4)]


# -- reference semantics ------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)


@dataclass(frozen=True)
class GateUnitary:
    """Dense matrix of one gate. Matrix index bit j belongs to ``qubits[j]``."""

    qubits: tuple[int, ...]
    matrix: np.ndarray


def gate_semantics(ansatz: MaQaoaAnsatz, gate: GateTemplate, theta: float = 0.0) -> GateUnitary:
    if not math.isfinite(theta):
        raise ValueError("angle must be finite")
    qubits = ansatz.support(gate)
    if gate.kind == GateKind.HADAMARD_WALL:
        m = np.ones((1, 1), dtype=np.complex128)
        for _ in qubits:
            m = np.kron(_H, m)
        return GateUnitary(qubits, m)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    if gate.kind == GateKind.MIXER:
        return GateUnitary(qubits, np.array([[c, -1j * s], [-1j * s, c]]))
    idx = np.arange(1 << len(qubits))
    parity = np.array([bin(i).count("1") & 1 for i in idx])
    eig = 1 - 2 * parity
    return GateUnitary(qubits, np.diag(np.exp(-0.5j * theta * eig)))


def term_of(ansatz: MaQaoaAnsatz, gate: GateTemplate) -> PauliZTerm:
    return ansatz.hamiltonian.terms[gate.target]
