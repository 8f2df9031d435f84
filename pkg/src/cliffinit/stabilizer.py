"""Stabilizer-tableau simulation of quarter-turn (Clifford) ansatz points.

Tableau layout follows Aaronson & Gottesman (2004): rows ``0..n-1`` are
destabilizers, rows ``n..2n-1`` stabilizers, each row an X-bit vector, a
Z-bit vector and a sign bit. Global phases are discarded throughout.

The per-point energy is computed entirely inside compiled kernels; a whole
GA generation is evaluated in one parallel call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit, prange

from .circuit import GateKind, GateTemplate, MaQaoaAnsatz
from .hamiltonian import PauliZTerm

WALL, COST, MIXER = int(GateKind.HADAMARD_WALL), int(GateKind.COST), int(GateKind.MIXER)


# -- compiled gate kernels -----------------------------------------------------


@njit(cache=True)
def _h(x, z, r, a):
    for i in range(x.shape[0]):
        r[i] ^= x[i, a] & z[i, a]
        t = x[i, a]
        x[i, a] = z[i, a]
        z[i, a] = t


@njit(cache=True)
def _s(x, z, r, a):
    for i in range(x.shape[0]):
        r[i] ^= x[i, a] & z[i, a]
        z[i, a] ^= x[i, a]


@njit(cache=True)
def _sdg(x, z, r, a):
    for i in range(x.shape[0]):
        r[i] ^= x[i, a] & (z[i, a] ^ 1)
        z[i, a] ^= x[i, a]


@njit(cache=True)
def _xg(x, z, r, a):
    for i in range(x.shape[0]):
        r[i] ^= z[i, a]


@njit(cache=True)
def _zg(x, z, r, a):
    for i in range(x.shape[0]):
        r[i] ^= x[i, a]


@njit(cache=True)
def _cx(x, z, r, a, b):
    for i in range(x.shape[0]):
        r[i] ^= x[i, a] & z[i, b] & (x[i, b] ^ z[i, a] ^ 1)
        x[i, b] ^= x[i, a]
        z[i, a] ^= z[i, b]


@njit(cache=True)
def _zpow(x, z, r, q, k):
    if k == 1:
        _s(x, z, r, q)
    elif k == 2:
        _zg(x, z, r, q)
    elif k == 3:
        _sdg(x, z, r, q)


@njit(cache=True)
def _init(n):
    x = np.zeros((2 * n, n), dtype=np.uint8)
    z = np.zeros((2 * n, n), dtype=np.uint8)
    r = np.zeros(2 * n, dtype=np.uint8)
    for i in range(n):
        x[i, i] = 1
        z[n + i, i] = 1
    return x, z, r


@njit(cache=True)
def _g(x1, z1, x2, z2):
    # exponent of i picked up by the product (x1,z1)*(x2,z2); signed ints on purpose
    a, b, c, d = np.int64(x1), np.int64(z1), np.int64(x2), np.int64(z2)
    if a == 0 and b == 0:
        return np.int64(0)
    if a == 1 and b == 1:
        return d - c
    if a == 1:
        return d * (2 * c - 1)
    return c * (1 - 2 * d)


@njit(cache=True)
def _zstring_expectation(x, z, r, sup, slen):
    """<Z_sup> in {-1, 0, +1}."""
    n = x.shape[1]
    for i in range(n, 2 * n):
        acc = 0
        for j in range(slen):
            acc ^= x[i, sup[j]]
        if acc:
            return 0
    sx = np.zeros(n, dtype=np.uint8)
    sz = np.zeros(n, dtype=np.uint8)
    phase = 0
    for i in range(n):
        acc = 0
        for j in range(slen):
            acc ^= x[i, sup[j]]
        if acc:
            row = n + i
            e = np.int64(2 * phase) + 2 * np.int64(r[row])
            for c in range(n):
                e += _g(x[row, c], z[row, c], sx[c], sz[c])
                sx[c] ^= x[row, c]
                sz[c] ^= z[row, c]
            phase = 1 if (e % 4) == 2 else 0
    return 1 - 2 * phase


@njit(cache=True)
def _rowsum(x, z, r, h, i):
    """Row h <- row i * row h, phases tracked."""
    e = 2 * np.int64(r[h]) + 2 * np.int64(r[i])
    for c in range(x.shape[1]):
        e += _g(x[i, c], z[i, c], x[h, c], z[h, c])
        x[h, c] ^= x[i, c]
        z[h, c] ^= z[i, c]
    r[h] = 1 if (e % 4) == 2 else 0


@njit(cache=True)
def _measure_all(x, z, r, coins):
    """Computational-basis measurement of every qubit, in place.

    ``x, z, r`` carry one scratch row at index ``2n``. ``coins[a]`` decides a
    random outcome for qubit ``a``.
    """
    n = x.shape[1]
    out = np.zeros(n, dtype=np.uint8)
    s = 2 * n
    for a in range(n):
        p = -1
        for i in range(n, 2 * n):
            if x[i, a]:
                p = i
                break
        if p >= 0:
            for i in range(2 * n):
                if i != p and x[i, a]:
                    _rowsum(x, z, r, i, p)
            for c in range(n):
                x[p - n, c] = x[p, c]
                z[p - n, c] = z[p, c]
                x[p, c] = 0
                z[p, c] = 0
            r[p - n] = r[p]
            z[p, a] = 1
            r[p] = coins[a]
            out[a] = coins[a]
        else:
            for c in range(n):
                x[s, c] = 0
                z[s, c] = 0
            r[s] = 0
            for i in range(n):
                if x[i, a]:
                    _rowsum(x, z, r, s, i + n)
            out[a] = r[s]
    return out


@njit(cache=True)
def _sample_many(x0, z0, r0, coins):
    n = x0.shape[1]
    shots = coins.shape[0]
    out = np.empty((shots, n), dtype=np.uint8)
    x = np.zeros((2 * n + 1, n), dtype=np.uint8)
    z = np.zeros((2 * n + 1, n), dtype=np.uint8)
    r = np.zeros(2 * n + 1, dtype=np.uint8)
    for t in range(shots):
        x[: 2 * n] = x0
        z[: 2 * n] = z0
        r[: 2 * n] = r0
        out[t] = _measure_all(x, z, r, coins[t])
    return out


@njit(cache=True)
def _run_circuit(n, kinds, pids, sup, lens, genome):
    x, z, r = _init(n)
    for gi in range(kinds.shape[0]):
        kind = kinds[gi]
        if kind == 0:
            for q in range(n):
                _h(x, z, r, q)
            continue
        k = genome[pids[gi]] & 3
        if k == 0:
            continue
        if kind == 2:
            q = sup[gi, 0]
            _h(x, z, r, q)
            _zpow(x, z, r, q, k)
            _h(x, z, r, q)
        else:
            s = lens[gi]
            for j in range(s - 1):
                _cx(x, z, r, sup[gi, j], sup[gi, j + 1])
            _zpow(x, z, r, sup[gi, s - 1], k)
            for j in range(s - 2, -1, -1):
                _cx(x, z, r, sup[gi, j], sup[gi, j + 1])
    return x, z, r


@njit(cache=True)
def _energy_one(n, kinds, pids, sup, lens, genome, tsup, tlen, tcoef, offset):
    x, z, r = _run_circuit(n, kinds, pids, sup, lens, genome)
    e = offset
    for t in range(tcoef.shape[0]):
        v = _zstring_expectation(x, z, r, tsup[t], tlen[t])
        if v != 0:
            e += tcoef[t] * v
    return e


@njit(parallel=True, cache=True)
def _batch_energies(n, kinds, pids, sup, lens, genomes, tsup, tlen, tcoef, offset):
    out = np.empty(genomes.shape[0], dtype=np.float64)
    for g in prange(genomes.shape[0]):
        out[g] = _energy_one(n, kinds, pids, sup, lens, genomes[g], tsup, tlen, tcoef, offset)
    return out


# -- Python-facing tableau -------------------------------------------------------


class CliffordGate(NamedTuple):
    name: str  # H, S, Sdg, X, Z, CX
    qubits: tuple[int, ...]


_ONE_QUBIT = {"H": _h, "S": _s, "Sdg": _sdg, "X": _xg, "Z": _zg}


@dataclass
class StabilizerTableau:
    """Mutable tableau for step-by-step use; see :func:`clifford_energy` for the fast path."""

    x: np.ndarray
    z: np.ndarray
    r: np.ndarray

    @property
    def num_qubits(self) -> int:
        return self.x.shape[1]

    def copy(self) -> "StabilizerTableau":
        return StabilizerTableau(self.x.copy(), self.z.copy(), self.r.copy())

    def apply(self, gate: CliffordGate) -> "StabilizerTableau":
        n = self.num_qubits
        if any(not 0 <= q < n for q in gate.qubits):
            raise ValueError(f"{gate} acts outside {n} qubits")
        if gate.name == "CX":
            c, t = gate.qubits
            if c == t:
                raise ValueError("CX control and target must differ")
            _cx(self.x, self.z, self.r, c, t)
        else:
            _ONE_QUBIT[gate.name](self.x, self.z, self.r, gate.qubits[0])
        return self

    def apply_all(self, gates) -> "StabilizerTableau":
        for g in gates:
            self.apply(g)
        return self

    def expectation(self, support) -> int:
        sup = np.asarray(support, dtype=np.int64)
        if sup.size and (sup.min() < 0 or sup.max() >= self.num_qubits):
            raise ValueError("support outside tableau")
        return int(_zstring_expectation(self.x, self.z, self.r, sup, sup.size))

    def sample(self, shots: int, rng_seed: int = 0) -> dict[str, int]:
        """Measurement counts in the computational basis; qubit 0 is the first character."""
        if shots < 1:
            raise ValueError("shots must be >= 1")
        coins = np.random.default_rng(rng_seed).integers(0, 2, size=(shots, self.num_qubits), dtype=np.uint8)
        bits = _sample_many(self.x, self.z, self.r, coins)
        counts: dict[str, int] = {}
        for row in bits:
            key = "".join("1" if b else "0" for b in row)
            counts[key] = counts.get(key, 0) + 1
        return counts

    def symplectic_ok(self) -> bool:
        """Check commutation relations of the destabilizer/stabilizer basis."""
        n = self.num_qubits
        x, z = self.x.astype(np.int64), self.z.astype(np.int64)
        omega = (x @ z.T + z @ x.T) % 2
        want = np.zeros((2 * n, 2 * n), dtype=np.int64)
        want[np.arange(n), n + np.arange(n)] = 1
        want[n + np.arange(n), np.arange(n)] = 1
        return bool(np.array_equal(omega, want))

    def __eq__(self, other):
        if not isinstance(other, StabilizerTableau):
            return NotImplemented
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.r, other.r)
        )


def init_tableau(n: int) -> StabilizerTableau:
    if n < 1:
        raise ValueError("need at least one qubit")
    return StabilizerTableau(*_init(n))


def apply_clifford(t: StabilizerTableau, g: CliffordGate) -> StabilizerTableau:
    return t.apply(g)


_ZPOW = {1: "S", 2: "Z", 3: "Sdg"}


def compile_quarter_turn(ansatz: MaQaoaAnsatz, gate: GateTemplate, k: int = 0) -> list[CliffordGate]:
    """Clifford gate list equal (up to global phase) to ``gate`` at angle ``k*pi/2``."""
    if gate.kind == GateKind.HADAMARD_WALL:
        return [CliffordGate("H", (q,)) for q in range(ansatz.num_qubits)]
    if k not in (0, 1, 2, 3):
        raise ValueError(f"quarter-turn value {k} not in 0..3")
    if k == 0:
        return []
    sup = ansatz.support(gate)
    if gate.kind == GateKind.MIXER:
        q = sup[0]
        return [CliffordGate("H", (q,)), CliffordGate(_ZPOW[k], (q,)), CliffordGate("H", (q,))]
    ladder = [CliffordGate("CX", (a, b)) for a, b in zip(sup, sup[1:])]
    return ladder + [CliffordGate(_ZPOW[k], (sup[-1],))] + ladder[::-1]


def compile_point(ansatz: MaQaoaAnsatz, quarters) -> list[CliffordGate]:
    q = np.asarray(quarters)
    out = []
    for g in ansatz.gates:
        k = 0 if g.param_id is None else int(q[g.param_id]) % 4
        out.extend(compile_quarter_turn(ansatz, g, k))
    return out


def pauli_expectation(t: StabilizerTableau, term: PauliZTerm) -> float:
    """``coefficient * <Z_support>``; always one of ``-c, 0, +c``."""
    return term.coefficient * t.expectation(term.support)


# -- energies ----------------------------------------------------------------------


def _term_arrays(ansatz: MaQaoaAnsatz):
    h = ansatz.hamiltonian
    width = max(1, h.max_order)
    tsup = np.zeros((h.num_terms, width), dtype=np.int64)
    tlen = np.zeros(h.num_terms, dtype=np.int64)
    for i, t in enumerate(h.terms):
        tsup[i, : len(t.support)] = t.support
        tlen[i] = len(t.support)
    return tsup, tlen, h.coefficients


class CliffordEvaluator:
    """Batched exact Clifford energies for one ansatz."""

    def __init__(self, ansatz: MaQaoaAnsatz):
        self.ansatz = ansatz
        a = ansatz.arrays
        self._circ = (a["kinds"], a["pids"], a["sup"], a["lens"])
        self._terms = _term_arrays(ansatz)
        self.num_evals = 0

    def __call__(self, genomes) -> np.ndarray:
        g = np.ascontiguousarray(np.atleast_2d(genomes), dtype=np.int64)
        if g.shape[1] != self.ansatz.num_params:
            raise ValueError(f"genome length {g.shape[1]} != {self.ansatz.num_params}")
        if g.shape[0] == 0:
            return np.empty(0)
        self.num_evals += g.shape[0]
        h = self.ansatz.hamiltonian
        return _batch_energies(h.num_qubits, *self._circ, g, *self._terms, h.offset)


def clifford_energy(ansatz: MaQaoaAnsatz, quarters) -> float:
    """Exact ``<H_C>`` at a quarter-turn point."""
    return float(CliffordEvaluator(ansatz)(np.asarray(quarters)[None, :])[0])


def clifford_state(ansatz: MaQaoaAnsatz, quarters) -> StabilizerTableau:
    a = ansatz.arrays
    q = np.ascontiguousarray(np.mod(np.asarray(quarters, dtype=np.int64), 4))
    return StabilizerTableau(*_run_circuit(ansatz.num_qubits, a["kinds"], a["pids"], a["sup"], a["lens"], q))


def clifford_energy_reference(ansatz: MaQaoaAnsatz, quarters) -> float:
    """Same quantity through the gate-by-gate Python path."""
    t = init_tableau(ansatz.num_qubits).apply_all(compile_point(ansatz, quarters))
    return ansatz.hamiltonian.offset + sum(pauli_expectation(t, term) for term in ansatz.hamiltonian.terms)
