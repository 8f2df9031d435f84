"""Dense statevector simulation of the ansatz for small qubit counts.

Qubit ``i`` is bit ``i`` of the amplitude index. Because every cost gate is
diagonal, a whole cost layer collapses into one phase vector; mixers are
applied qubit by qubit. Noise uses Monte Carlo Pauli-insertion trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .circuit import GateKind, MaQaoaAnsatz
from .hamiltonian import parity_signs, index_to_bits

DEFAULT_QUBIT_CAP = 20
_SIGN_CACHE_LIMIT = 1 << 24


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing rates per gate class plus a readout flip rate.

    Defaults are a single-qubit rate of 1e-4 and a two-qubit rate of 1e-3.
    """

    p1: float = 1e-4
    p2: float = 1e-3
    pm: float = 0.0
    trajectories: int = 256

    def __post_init__(self):
        for name in ("p1", "p2", "pm"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")
        if self.trajectories < 1:
            raise ValueError("trajectories must be positive")

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == 0 and self.p2 == 0 and self.pm == 0


@dataclass
class DenseState:
    num_qubits: int
    amplitudes: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.probabilities().sum()))


def _apply_rx(psi: np.ndarray, n: int, q: int, theta: float) -> None:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    v = psi.reshape(1 << (n - q - 1), 2, 1 << q)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = c * a0 - 1j * s * a1
    v[:, 1, :] = c * a1 - 1j * s * a0


class StatevectorSimulator:
    """Exact and noisy energies, sampling and gradients for one ansatz."""

    def __init__(self, ansatz: MaQaoaAnsatz, cap: int = DEFAULT_QUBIT_CAP):
        n = ansatz.num_qubits
        if n > cap:
            raise ValueError(f"{n} qubits exceeds the statevector cap of {cap}")
        self.ansatz = ansatz
        self.n = n
        self.dim = 1 << n
        self.index = np.arange(self.dim, dtype=np.int64)
        h = ansatz.hamiltonian
        self._cache_signs = h.num_terms * self.dim <= _SIGN_CACHE_LIMIT
        # per layer: (cost param ids in term order, mixer param ids in qubit order)
        self.layers = []
        for layer in range(ansatz.depth):
            gs = [g for g in ansatz.gates if g.layer == layer and g.kind != GateKind.HADAMARD_WALL]
            cost = np.array([g.param_id for g in gs if g.kind == GateKind.COST], dtype=np.int64)
            mix = np.array([g.param_id for g in gs if g.kind == GateKind.MIXER], dtype=np.int64)
            self.layers.append((cost, mix))

    @cached_property
    def diagonal(self) -> np.ndarray:
        return self.ansatz.hamiltonian.diagonal(self.index)

    @cached_property
    def _signs(self) -> np.ndarray:
        masks = self.ansatz.hamiltonian.masks
        return np.stack([parity_signs(self.index, int(m)) for m in masks]).astype(np.int8)

    def term_signs(self, a: int) -> np.ndarray:
        if self._cache_signs:
            return self._signs[a]
        return parity_signs(self.index, int(self.ansatz.hamiltonian.masks[a])).astype(np.int8)

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.ansatz.num_params,):
            raise ValueError(f"expected {self.ansatz.num_params} angles, got shape {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("angles must be finite")
        return theta

    def _cost_phase(self, thetas: np.ndarray) -> np.ndarray:
        acc = np.zeros(self.dim, dtype=np.float64)
        for a, th in enumerate(thetas):
            if th != 0.0:
                acc += th * self.term_signs(a)
        return np.exp(-0.5j * acc)

    def state(self, theta) -> DenseState:
        theta = self._check(theta)
        psi = np.full(self.dim, 1.0 / math.sqrt(self.dim), dtype=np.complex128)
        for cost, mix in self.layers:
            psi *= self._cost_phase(theta[cost])
            for q, pid in enumerate(mix):
                if theta[pid] != 0.0:
                    _apply_rx(psi, self.n, q, theta[pid])
        return DenseState(self.n, psi)

    def energy(self, theta) -> float:
        p = self.state(theta).probabilities()
        return float(p @ self.diagonal)

    def sample(self, theta, shots: int, rng_seed: int = 0) -> dict[str, int]:
        if shots < 1:
            raise ValueError("shots must be >= 1")
        p = self.state(theta).probabilities()
        counts = np.random.default_rng(rng_seed).multinomial(shots, p / p.sum())
        nz = np.flatnonzero(counts)
        return {index_to_bits(int(i), self.n): int(counts[i]) for i in nz}

    def finite_difference_gradient(self, theta, h: float = 1e-5) -> np.ndarray:
        if h <= 0:
            raise ValueError("step must be positive")
        theta = self._check(theta)
        grad = np.empty_like(theta)
        for j in range(theta.size):
            e = np.zeros_like(theta)
            e[j] = h
            grad[j] = (self.energy(theta + e) - self.energy(theta - e)) / (2 * h)
        return grad

    # -- noise ---------------------------------------------------------------

    @cached_property
    def _locations(self):
        """Noise sites in circuit order: (gate index, position, qubits, two_qubit).

        Cost gate positions: ``0..s-2`` are the compute ladder CXs, ``s-1`` the
        Z rotation, ``s..2s-2`` the uncompute CXs.
        """
        locs = []
        for gi, g in enumerate(self.ansatz.gates):
            if g.kind == GateKind.HADAMARD_WALL:
                locs += [(gi, q, (q,), False) for q in range(self.n)]
            elif g.kind == GateKind.MIXER:
                locs.append((gi, 0, (g.target,), False))
            else:
                sup = self.ansatz.support(g)
                s = len(sup)
                for j in range(s - 1):
                    locs.append((gi, j, (sup[j], sup[j + 1]), True))
                locs.append((gi, s - 1, (sup[-1],), False))
                for j in range(s - 2, -1, -1):
                    locs.append((gi, 2 * s - 2 - j, (sup[j], sup[j + 1]), True))
        return locs

    def readout_diagonal(self, pm: float) -> np.ndarray:
        if pm == 0.0:
            return self.diagonal
        h = self.ansatz.hamiltonian
        out = np.full(self.dim, h.offset)
        for a, t in enumerate(h.terms):
            out += t.coefficient * (1 - 2 * pm) ** len(t.support) * self.term_signs(a)
        return out

    def noisy_energy(self, theta, noise: NoiseModel, rng_seed: int = 0, return_stderr: bool = False):
        """Mean energy over Monte Carlo noise trajectories.

        After each gate a uniformly random non-identity Pauli hits the touched
        qubits with probability ``p1`` (one qubit) or ``p2`` (CX segment).
        Readout flips are folded in exactly as a ``(1-2 pm)**order`` damping of
        each term.
        """
        theta = self._check(theta)
        diag = self.readout_diagonal(noise.pm)
        locs = self._locations
        T, L = noise.trajectories, len(locs)
        two = np.array([l[3] for l in locs], dtype=bool)
        rng = np.random.default_rng(rng_seed)
        u = rng.random((T, L))
        which = rng.integers(1, 16, size=(T, L))
        which1 = rng.integers(1, 4, size=(T, L))
        hit = u < np.where(two, noise.p2, noise.p1)

        ideal = float(self.state(theta).probabilities() @ diag)
        energies = np.full(T, ideal)
        for t in np.flatnonzero(hit.any(axis=1)):
            errors = {}
            for li in np.flatnonzero(hit[t]):
                gi, pos, qubits, is2 = locs[li]
                code = int(which[t, li]) if is2 else int(which1[t, li])
                errors.setdefault(gi, []).append((pos, qubits, code))
            psi = self._trajectory(theta, errors)
            energies[t] = float((np.abs(psi) ** 2) @ diag)
        mean = float(energies.mean())
        if return_stderr:
            return mean, float(energies.std(ddof=1) / math.sqrt(T)) if T > 1 else 0.0
        return mean

    def _trajectory(self, theta, errors) -> np.ndarray:
        n = self.n
        psi = np.full(self.dim, 1.0 / math.sqrt(self.dim), dtype=np.complex128)
        gates = self.ansatz.gates
        pending = np.zeros(self.dim)
        post_mix = []
        for gi, g in enumerate(gates):
            errs = errors.get(gi, ())
            if g.kind == GateKind.HADAMARD_WALL:
                for pos, qubits, code in errs:
                    psi = self._apply_pauli(psi, *_pauli_masks(qubits, code))
                continue
            th = theta[g.param_id]
            if g.kind == GateKind.COST:
                a = g.target
                if not errs:
                    if th != 0.0:
                        pending += th * self.term_signs(a)
                else:
                    psi *= np.exp(-0.5j * pending)
                    pending[:] = 0.0
                    psi = self._noisy_cost_gate(psi, a, th, errs)
                continue
            # mixer: flush cost phases before the first mixer of a layer
            if pending.any():
                psi *= np.exp(-0.5j * pending)
                pending[:] = 0.0
            if th != 0.0:
                _apply_rx(psi, n, g.target, th)
            post_mix.extend(errs)
            if g.target == n - 1:
                for pos, qubits, code in post_mix:
                    psi = self._apply_pauli(psi, *_pauli_masks(qubits, code))
                post_mix = []
        return psi

    def _noisy_cost_gate(self, psi, a, th, errs):
        sup = self.ansatz.hamiltonian.terms[a].support
        s = len(sup)
        ladder = [(sup[j], sup[j + 1]) for j in range(s - 1)]
        seq = ladder + [None] + ladder[::-1]
        pre, post = [], []
        for pos, qubits, code in errs:
            xm, zm = _pauli_masks(qubits, code)
            if pos < s - 1:
                # move back to before the gate: conjugate through CXs pos..0
                for step in seq[pos::-1]:
                    xm, zm = _conj_cx(xm, zm, *step)
                pre.append((xm, zm))
            else:
                for step in seq[pos + 1 :]:
                    xm, zm = _conj_cx(xm, zm, *step)
                post.append((xm, zm))
        for xm, zm in pre:
            psi = self._apply_pauli(psi, xm, zm)
        if th != 0.0:
            psi = psi * np.exp(-0.5j * th * self.term_signs(a))
        for xm, zm in post:
            psi = self._apply_pauli(psi, xm, zm)
        return psi

    def _apply_pauli(self, psi, xmask: int, zmask: int) -> np.ndarray:
        if zmask:
            psi = psi * parity_signs(self.index, zmask)
        if xmask:
            psi = psi[self.index ^ xmask]
        return psi


def _pauli_masks(qubits, code: int) -> tuple[int, int]:
    """Decode a base-4 Pauli code (1=X, 2=Y, 3=Z per qubit) into bit masks."""
    xm = zm = 0
    for j, q in enumerate(qubits):
        d = (code >> (2 * j)) & 3
        if d in (1, 2):
            xm |= 1 << q
        if d in (2, 3):
            zm |= 1 << q
    return xm, zm


def _conj_cx(xm: int, zm: int, c: int, t: int) -> tuple[int, int]:
    if (xm >> c) & 1:
        xm ^= 1 << t
    if (zm >> t) & 1:
        zm ^= 1 << c
    return xm, zm


# -- module-level conveniences -------------------------------------------------


def exact_energy(ansatz: MaQaoaAnsatz, theta, cap: int = DEFAULT_QUBIT_CAP) -> float:
    return StatevectorSimulator(ansatz, cap).energy(theta)


def noisy_energy(ansatz: MaQaoaAnsatz, theta, noise: NoiseModel, rng_seed: int = 0, cap: int = DEFAULT_QUBIT_CAP) -> float:
    return StatevectorSimulator(ansatz, cap).noisy_energy(theta, noise, rng_seed)


def sample_bitstrings(ansatz: MaQaoaAnsatz, theta, shots: int, rng_seed: int = 0, cap: int = DEFAULT_QUBIT_CAP) -> dict[str, int]:
    return StatevectorSimulator(ansatz, cap).sample(theta, shots, rng_seed)


def finite_difference_gradient(ansatz: MaQaoaAnsatz, theta, h: float = 1e-5, cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    return StatevectorSimulator(ansatz, cap).finite_difference_gradient(theta, h)
