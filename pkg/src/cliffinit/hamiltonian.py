"""Diagonal cost Hamiltonians written as sums of Pauli-Z products.

Every encoder here follows one sign convention: lower energy is better.
Maximization objectives (cut value, knapsack value, feature relevance) are
negated when they are encoded.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

EGO_LEAF_EDGE_PROB = 0.3


@dataclass(frozen=True)
class PauliZTerm:
    """``coefficient * prod(Z_i for i in support)``."""

    coefficient: float
    support: tuple[int, ...]

    def __post_init__(self):
        support = tuple(int(i) for i in self.support)
        if any(b <= a for a, b in zip(support, support[1:])):
            raise ValueError(f"support must be strictly increasing, got {support}")
        if not math.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coefficient", float(self.coefficient))


@dataclass(frozen=True)
class IsingHamiltonian:
    """Weighted sum of Z-strings plus a constant offset.

    Construct through :meth:`from_terms` to merge duplicate supports, drop
    zero coefficients and fold identity terms into the offset. The direct
    constructor validates but does not merge.
    """

    num_qubits: int
    offset: float
    terms: tuple[PauliZTerm, ...] = ()

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        if not math.isfinite(self.offset):
            raise ValueError("offset must be finite")
        seen = set()
        for t in self.terms:
            if not t.support:
                raise ValueError("identity terms belong in the offset")
            if t.support[-1] >= self.num_qubits or t.support[0] < 0:
                raise ValueError(f"support {t.support} out of range for {self.num_qubits} qubits")
            if t.support in seen:
                raise ValueError(f"duplicate support {t.support}")
            if t.coefficient == 0.0:
                raise ValueError("zero-coefficient terms must be dropped")
            seen.add(t.support)
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_terms(
        cls,
        num_qubits: int,
        terms: Iterable[tuple[Iterable[int], float]],
        offset: float = 0.0,
    ) -> "IsingHamiltonian":
        """Merge ``(support, coeff)`` pairs; first appearance fixes term order."""
        merged: dict[tuple[int, ...], float] = {}
        for support, coeff in terms:
            key = tuple(sorted(int(i) for i in support))
            if len(set(key)) != len(key):
                raise ValueError(f"repeated qubit in support {key}")
            if key and (key[0] < 0 or key[-1] >= num_qubits):
                raise ValueError(f"support {key} out of range for {num_qubits} qubits")
            merged[key] = merged.get(key, 0.0) + float(coeff)
        offset = float(offset) + merged.pop((), 0.0)
        kept = tuple(PauliZTerm(c, s) for s, c in merged.items() if c != 0.0)
        return cls(num_qubits, offset, kept)

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    @cached_property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms], dtype=np.float64)

    @cached_property
    def masks(self) -> np.ndarray:
        """Bit mask of each term's support (qubit i <-> bit i)."""
        return np.array([sum(1 << i for i in t.support) for t in self.terms], dtype=np.int64)

    @cached_property
    def max_order(self) -> int:
        return max((len(t.support) for t in self.terms), default=0)

    def scaled(self, factor: float) -> "IsingHamiltonian":
        return IsingHamiltonian(
            self.num_qubits,
            self.offset * factor,
            tuple(PauliZTerm(t.coefficient * factor, t.support) for t in self.terms),
        )

    def to_json(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "offset": self.offset,
            "terms": [{"support": list(t.support), "coeff": t.coefficient} for t in self.terms],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "IsingHamiltonian":
        return cls.from_terms(
            int(d["num_qubits"]),
            ((t["support"], float(t["coeff"])) for t in d.get("terms", [])),
            float(d.get("offset", 0.0)),
        )

    def diagonal(self, indices: np.ndarray | None = None) -> np.ndarray:
        """Energies of basis states given as integers (bit i = qubit i)."""
        if indices is None:
            if self.num_qubits > 30:
                raise ValueError("full diagonal too large")
            indices = np.arange(1 << self.num_qubits, dtype=np.int64)
        out = np.full(indices.shape, self.offset, dtype=np.float64)
        for coeff, mask in zip(self.coefficients, self.masks):
            out += coeff * parity_signs(indices, int(mask))
        return out


def parity_signs(indices: np.ndarray, mask: int) -> np.ndarray:
    """``(-1)**popcount(index & mask)`` as float64."""
    x = indices & mask
    parity = np.zeros(x.shape, dtype=np.int64)
    while mask:
        low = mask & -mask
        parity ^= (x & low) != 0
        mask ^= low
    return 1.0 - 2.0 * parity


def _as_bits(z: Sequence[int] | str) -> np.ndarray:
    if isinstance(z, str):
        return np.array([int(c) for c in z], dtype=np.int64)
    return np.asarray(z, dtype=np.int64)


def bits_to_index(z: Sequence[int] | str) -> int:
    """Bitstring (position i = qubit i) to basis-state index."""
    return int(sum(int(b) << i for i, b in enumerate(_as_bits(z))))


def index_to_bits(index: int, n: int) -> str:
    return "".join(str((index >> i) & 1) for i in range(n))


def evaluate_bitstring(h: IsingHamiltonian, z: Sequence[int] | str) -> float:
    """Energy of one computational basis state; ``z[i]`` is qubit i."""
    bits = _as_bits(z)
    if bits.shape != (h.num_qubits,):
        raise ValueError(f"bitstring length {bits.size} != {h.num_qubits}")
    spins = 1 - 2 * bits
    total = h.offset
    for t in h.terms:
        total += t.coefficient * float(np.prod(spins[list(t.support)]))
    return float(total)


# -- PUBO encodings ---------------------------------------------------------

Polynomial = Mapping[frozenset | tuple, float]


def pubo_to_ising(polynomial: Polynomial, num_vars: int) -> IsingHamiltonian:
    """Rewrite a polynomial over binary ``x`` as an Ising Hamiltonian.

    Uses ``x_i = (1 - Z_i) / 2``. A monomial over set S expands to
    ``2**-|S| * sum_{T subset S} (-1)**|T| Z_T``.
    """
    acc: dict[tuple[int, ...], float] = {}
    for key, coeff in polynomial.items():
        support = tuple(sorted(set(int(i) for i in key)))
        if support and (support[0] < 0 or support[-1] >= num_vars):
            raise ValueError(f"index set {support} out of range for {num_vars} variables")
        if coeff == 0:
            continue
        scale = float(coeff) / (1 << len(support))
        for r in range(len(support) + 1):
            sign = -1.0 if r % 2 else 1.0
            for sub in itertools.combinations(support, r):
                acc[sub] = acc.get(sub, 0.0) + sign * scale
    ordered = sorted(acc.items(), key=lambda kv: (len(kv[0]), kv[0]))
    # float cancellation leaves tiny residues from exactly-cancelling monomials
    tol = 1e-12 * max((abs(c) for c in polynomial.values()), default=0.0)
    return IsingHamiltonian.from_terms(
        num_vars, ((s, c) for s, c in ordered if abs(c) > tol)
    )


def evaluate_polynomial(polynomial: Polynomial, x: Sequence[int]) -> float:
    total = 0.0
    for key, coeff in polynomial.items():
        if all(x[i] for i in key):
            total += coeff
    return total


def _square_linear(coeffs: Mapping[int, float], const: float, scale: float, poly: dict) -> None:
    """Add ``scale * (sum_i coeffs[i] x_i + const)**2`` using ``x_i**2 = x_i``."""
    items = sorted(coeffs.items())
    _add(poly, (), scale * const * const)
    for i, a in items:
        _add(poly, (i,), scale * (a * a + 2.0 * a * const))
    for (i, a), (j, b) in itertools.combinations(items, 2):
        _add(poly, (i, j), scale * 2.0 * a * b)


def _add(poly: dict, key: tuple, value: float) -> None:
    poly[key] = poly.get(key, 0.0) + value


# -- Max-Cut ------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedGraph:
    num_nodes: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ValueError("num_nodes must be positive")
        seen = set()
        clean = []
        for u, v, w in self.edges:
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < v < self.num_nodes):
                raise ValueError(f"edge ({u}, {v}) must satisfy 0 <= u < v < n")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            if not math.isfinite(w):
                raise ValueError("edge weights must be finite")
            seen.add((u, v))
            clean.append((u, v, w))
        object.__setattr__(self, "edges", tuple(clean))

    @property
    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges)

    def cut_value(self, z: Sequence[int] | str) -> float:
        bits = _as_bits(z)
        return float(sum(w for u, v, w in self.edges if bits[u] != bits[v]))

    def to_json(self) -> dict:
        return {"n": self.num_nodes, "edges": [[u, v, w] for u, v, w in self.edges]}

    @classmethod
    def from_json(cls, d: Mapping) -> "WeightedGraph":
        return cls(int(d["n"]), tuple((int(u), int(v), float(w)) for u, v, w in d["edges"]))

    def degrees(self) -> list[int]:
        deg = [0] * self.num_nodes
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


def maxcut_hamiltonian(g: WeightedGraph) -> IsingHamiltonian:
    """``sum w/2 Z_u Z_v - sum w/2``; energy of z equals ``-cut(z)``."""
    return IsingHamiltonian.from_terms(
        g.num_nodes,
        (((u, v), w / 2.0) for u, v, w in g.edges),
        offset=-g.total_weight / 2.0,
    )


def generate_graph(kind: str, n: int, weighting: str = "unweighted", rng_seed: int = 0) -> WeightedGraph:
    """Random benchmark graph.

    Args:
        kind: ``complete``, ``regular3`` or ``ego``.
        n: number of nodes (>= 3; regular3 needs even n >= 4).
        weighting: ``unweighted`` (all 1) or ``integer_0_to_10``.
        rng_seed: seed; the same seed always gives the same graph.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    rng = np.random.default_rng(rng_seed)
    if kind == "complete":
        pairs = list(itertools.combinations(range(n), 2))
    elif kind == "regular3":
        if n % 2 or n < 4:
            raise ValueError("regular3 needs an even n >= 4")
        g = nx.random_regular_graph(3, n, seed=int(rng.integers(2**31)))
        pairs = sorted((min(u, v), max(u, v)) for u, v in g.edges())
    elif kind == "ego":
        pairs = [(0, v) for v in range(1, n)]
        leaf_pairs = list(itertools.combinations(range(1, n), 2))
        keep = rng.random(len(leaf_pairs)) < EGO_LEAF_EDGE_PROB
        pairs += [pq for pq, k in zip(leaf_pairs, keep) if k]
        pairs.sort()
    else:
        raise ValueError(f"unknown graph kind {kind!r}")

    if weighting == "unweighted":
        weights = np.ones(len(pairs))
    elif weighting == "integer_0_to_10":
        weights = rng.integers(0, 11, size=len(pairs))
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    return WeightedGraph(n, tuple((u, v, float(w)) for (u, v), w in zip(pairs, weights)))


# -- Knapsack -----------------------------------------------------------------


@dataclass(frozen=True)
class KnapsackInstance:
    values: tuple[int, ...]
    weights: tuple[int, ...]
    capacity: int
    penalty: float | None = None

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        weights = tuple(int(w) for w in self.weights)
        if len(values) != len(weights) or not values:
            raise ValueError("values and weights must be non-empty and of equal length")
        if min(values) < 1 or min(weights) < 1:
            raise ValueError("values and weights must be positive integers")
        if int(self.capacity) < 1:
            raise ValueError("capacity must be >= 1")
        if self.capacity >= 2**31:
            raise ValueError("capacity overflows slack-bit index arithmetic")
        penalty = float(sum(values) + 1) if self.penalty is None else float(self.penalty)
        if penalty <= 0:
            raise ValueError("penalty must be positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "capacity", int(self.capacity))
        object.__setattr__(self, "penalty", penalty)

    @property
    def num_items(self) -> int:
        return len(self.values)

    @property
    def slack_coefficients(self) -> tuple[int, ...]:
        """Binary slack weights; the last one is clamped so their sum is the capacity."""
        k = math.ceil(math.log2(self.capacity + 1))
        coeffs = [1 << j for j in range(k - 1)]
        coeffs.append(self.capacity - ((1 << (k - 1)) - 1))
        return tuple(coeffs)

    @property
    def num_qubits(self) -> int:
        return self.num_items + len(self.slack_coefficients)

    def to_json(self) -> dict:
        return {
            "values": list(self.values),
            "weights": list(self.weights),
            "capacity": self.capacity,
            "penalty": self.penalty,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "KnapsackInstance":
        return cls(tuple(d["values"]), tuple(d["weights"]), int(d["capacity"]), d.get("penalty"))

    def polynomial(self) -> dict[tuple, float]:
        poly: dict[tuple, float] = {}
        for i, v in enumerate(self.values):
            _add(poly, (i,), -float(v))
        lin = {i: float(w) for i, w in enumerate(self.weights)}
        for j, c in enumerate(self.slack_coefficients):
            lin[self.num_items + j] = float(c)
        _square_linear(lin, -float(self.capacity), self.penalty, poly)
        return poly


def knapsack_hamiltonian(k: KnapsackInstance) -> IsingHamiltonian:
    """Penalty encoding ``-sum v x + A (sum w x + slack - W)**2``.

    Qubits ``0..N-1`` are items, the rest are slack bits.
    """
    return pubo_to_ising(k.polynomial(), k.num_qubits)


def generate_knapsack(num_items: int, rng_seed: int = 0) -> KnapsackInstance:
    """Random instance: values in 1..20, weights in 8..15, capacity half the total weight."""
    if num_items < 1:
        raise ValueError("need at least one item")
    rng = np.random.default_rng(rng_seed)
    values = rng.integers(1, 21, size=num_items)
    weights = rng.integers(8, 16, size=num_items)
    capacity = max(1, int(weights.sum()) // 2)
    return KnapsackInstance(tuple(values.tolist()), tuple(weights.tolist()), capacity)


# -- Feature selection hypergraph --------------------------------------------


@dataclass(frozen=True)
class HypergraphObjective:
    """Relevance/redundancy hypergraph with a Hamming-weight constraint.

    ``linear`` holds per-variable relevance; ``pairs`` and ``triples`` hold
    redundancy (higher-order mutual information), which is subtracted.
    """

    num_vars: int
    linear: Mapping[int, float] = field(default_factory=dict)
    pairs: Mapping[tuple[int, int], float] = field(default_factory=dict)
    triples: Mapping[tuple[int, int, int], float] = field(default_factory=dict)
    subset_size: int = 1
    lagrange: float | None = None

    def __post_init__(self):
        if self.num_vars < 1:
            raise ValueError("num_vars must be positive")
        if not 0 <= self.subset_size <= self.num_vars:
            raise ValueError("subset_size must lie in [0, num_vars]")
        for keys, arity in ((self.linear, 1), (self.pairs, 2), (self.triples, 3)):
            for key in keys:
                idx = (key,) if arity == 1 else tuple(key)
                if len(idx) != arity or any(b <= a for a, b in zip(idx, idx[1:])):
                    raise ValueError(f"index tuple {key} must be strictly increasing")
                if idx[0] < 0 or idx[-1] >= self.num_vars:
                    raise ValueError(f"index tuple {key} out of range")
        if self.lagrange is None:
            total = sum(abs(v) for m in (self.linear, self.pairs, self.triples) for v in m.values())
            object.__setattr__(self, "lagrange", 2.0 * total + 1.0)
        elif self.lagrange <= 0:
            raise ValueError("lagrange must be positive")

    def polynomial(self) -> dict[tuple, float]:
        poly: dict[tuple, float] = {}
        for i, a in self.linear.items():
            _add(poly, (int(i),), -float(a))
        for key, b in self.pairs.items():
            _add(poly, tuple(key), float(b))
        for key, c in self.triples.items():
            _add(poly, tuple(key), float(c))
        _square_linear({i: 1.0 for i in range(self.num_vars)}, -float(self.subset_size), self.lagrange, poly)
        return poly

    def to_json(self) -> dict:
        return {
            "num_vars": self.num_vars,
            "linear": {str(k): v for k, v in sorted(self.linear.items())},
            "pairs": [[*k, v] for k, v in sorted(self.pairs.items())],
            "triples": [[*k, v] for k, v in sorted(self.triples.items())],
            "subset_size": self.subset_size,
            "lagrange": self.lagrange,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "HypergraphObjective":
        return cls(
            num_vars=int(d["num_vars"]),
            linear={int(k): float(v) for k, v in d.get("linear", {}).items()},
            pairs={(int(a), int(b)): float(v) for a, b, v in d.get("pairs", [])},
            triples={(int(a), int(b), int(c)): float(v) for a, b, c, v in d.get("triples", [])},
            subset_size=int(d["subset_size"]),
            lagrange=d.get("lagrange"),
        )


def feature_selection_hamiltonian(h: HypergraphObjective) -> IsingHamiltonian:
    """``-(relevance - redundancy) + lagrange * (sum x - M)**2`` as Z-terms."""
    return pubo_to_ising(h.polynomial(), h.num_vars)


def generate_hypergraph(num_vars: int, subset_size: int = 4, rng_seed: int = 0) -> HypergraphObjective:
    """Synthetic stand-in for mutual-information hypergraphs.

    Relevances in [0, 1), pair redundancies in [0, 0.3), and a sparse set of
    signed triple interactions in (-0.1, 0.1).
    """
    rng = np.random.default_rng(rng_seed)
    linear = {i: float(rng.random()) for i in range(num_vars)}
    pairs = {pq: float(0.3 * rng.random()) for pq in itertools.combinations(range(num_vars), 2)}
    triples = {}
    for ijk in itertools.combinations(range(num_vars), 3):
        if rng.random() < 0.2:
            triples[ijk] = float(0.2 * rng.random() - 0.1)
    return HypergraphObjective(num_vars, linear, pairs, triples, min(subset_size, num_vars))
