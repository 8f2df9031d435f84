"""Seed selection from a Clifford candidate pool.

Two strategies: evenly spaced ranks of the energy-sorted pool
(fixed-interval) and K-GAPS, which clusters circular angle embeddings and
prefers low-energy points that are not stationary under quarter shifts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import MaQaoaAnsatz
from .search import CandidatePool
from .stabilizer import CliffordEvaluator

DEFAULT_K = 5
DEFAULT_TOP_M = 512
DEFAULT_TAU = 1e-9

_COS = np.array([1.0, 0.0, -1.0, 0.0])
_SIN = np.array([0.0, 1.0, 0.0, -1.0])


@dataclass(frozen=True)
class Seed:
    quarters: tuple[int, ...]
    energy: float
    grad_norm: float | None = None
    cluster_id: int | None = None
    method: str = "fixed_interval"

    def as_array(self) -> np.ndarray:
        return np.asarray(self.quarters, dtype=np.int64)


@dataclass
class SeedSet:
    seeds: list[Seed] = field(default_factory=list)
    method: str = "fixed_interval"

    def __post_init__(self):
        keys = [s.quarters for s in self.seeds]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate genomes in seed set")

    def __len__(self):
        return len(self.seeds)

    def __iter__(self):
        return iter(self.seeds)

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "seeds": [
                {
                    "quarters": list(s.quarters),
                    "energy": s.energy,
                    "grad_norm": s.grad_norm,
                    "cluster_id": s.cluster_id,
                    "method": s.method,
                }
                for s in self.seeds
            ],
        }

    @classmethod
    def from_json(cls, d: dict) -> "SeedSet":
        seeds = [
            Seed(tuple(int(q) for q in s["quarters"]), float(s["energy"]), s.get("grad_norm"), s.get("cluster_id"), s["method"])
            for s in d["seeds"]
        ]
        return cls(seeds, d["method"])

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def fixed_interval_select(pool: CandidatePool, k: int = DEFAULT_K) -> SeedSet:
    """Seeds at ranks ``floor(i*(N-1)/(k-1))`` of the sorted pool."""
    if len(pool) == 0:
        raise ValueError("empty candidate pool")
    if k < 1:
        raise ValueError("k must be >= 1")
    entries = pool.sorted_entries()
    idx = fixed_interval_indices(len(entries), k)
    return SeedSet(
        [Seed(tuple(int(v) for v in entries[i][0]), entries[i][1], method="fixed_interval") for i in idx],
        "fixed_interval",
    )


def fixed_interval_indices(n: int, k: int) -> list[int]:
    if k == 1:
        return [0]
    return sorted({(i * (n - 1)) // (k - 1) for i in range(k)})


def embed(quarters) -> np.ndarray:
    """Interleaved ``(cos, sin)`` of every gene's angle; exact for quarter values."""
    q = np.mod(np.asarray(quarters, dtype=np.int64), 4)
    out = np.empty(q.shape[:-1] + (2 * q.shape[-1],))
    out[..., 0::2] = _COS[q]
    out[..., 1::2] = _SIN[q]
    return out


@dataclass
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    iterations: int


def kmeans(points, k: int, rng_seed: int = 0, max_iter: int = 100, tol: float = 1e-8) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding.

    Stops when no centroid moves more than ``tol`` or after ``max_iter``
    iterations. An empty cluster is re-seeded at the point farthest from
    its current centroid.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("points must be a 2-d array")
    n = x.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")
    rng = np.random.default_rng(rng_seed)
    centroids = _kmeans_pp(x, k, rng)
    labels = np.zeros(n, dtype=np.int64)
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(x, centroids)
        labels = np.argmin(d2, axis=1)
        new = centroids.copy()
        taken = set()
        for c in range(k):
            members = labels == c
            if members.any():
                new[c] = x[members].mean(axis=0)
        for c in range(k):
            if not (labels == c).any():
                # farthest point from its own centroid, skipping ones already moved
                far = d2[np.arange(n), labels]
                for i in np.argsort(-far, kind="stable"):
                    if int(i) not in taken:
                        taken.add(int(i))
                        new[c] = x[i]
                        labels[i] = c
                        break
        shift = np.max(np.linalg.norm(new - centroids, axis=1))
        centroids = new
        if shift < tol:
            break
    d2 = _sq_dists(x, centroids)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return KMeansResult(labels, centroids, inertia, it)


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    return ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            # every remaining point coincides with a centre; take unused ones in order
            rest = [i for i in range(n) if i not in chosen]
            chosen.append(rest[0])
        else:
            chosen.append(int(rng.choice(n, p=d2 / total)))
        d2 = np.minimum(d2, ((x - x[chosen[-1]]) ** 2).sum(axis=1))
    return x[chosen].copy()


def gradient_norm(ansatz: MaQaoaAnsatz, quarters, evaluator: CliffordEvaluator | None = None) -> tuple[float, np.ndarray]:
    """Parameter-shift gradient at a quarter-turn point.

    Gene ``j`` shifted by +1 and -1 (mod 4) is the same point moved by
    ``+-pi/2``, so both shifted circuits stay Clifford.

    Returns:
        (L2 norm, gradient vector)
    """
    ev = evaluator or CliffordEvaluator(ansatz)
    q = np.mod(np.asarray(quarters, dtype=np.int64), 4)
    d = q.size
    shifted = np.repeat(q[None, :], 2 * d, axis=0)
    j = np.arange(d)
    shifted[j, j] = (q + 1) % 4
    shifted[d + j, j] = (q - 1) % 4
    e = ev(shifted)
    grad = 0.5 * (e[:d] - e[d:])
    return float(math.sqrt(float(grad @ grad))), grad


def k_gaps_select(
    ansatz: MaQaoaAnsatz,
    pool: CandidatePool,
    k: int = DEFAULT_K,
    top_m: int | None = None,
    tau: float = DEFAULT_TAU,
    rng_seed: int = 0,
) -> SeedSet:
    """K-GAPS: cluster the low-energy frontier, then pick one seed per cluster.

    Within a cluster the lowest-energy point whose gradient norm reaches
    ``tau`` wins; if none does, the cluster's largest-norm point is used.
    Fewer than ``k`` seeds are returned only when fewer than ``k`` candidates
    exist.
    """
    if len(pool) == 0:
        raise ValueError("empty candidate pool")
    if k < 1:
        raise ValueError("k must be >= 1")
    entries = pool.sorted_entries()
    m = min(len(entries), DEFAULT_TOP_M if top_m is None else top_m)
    if m < 1:
        raise ValueError("top_m must be >= 1")
    front = entries[:m]
    genomes = np.array([g for g, _ in front], dtype=np.int64)
    energies = np.array([e for _, e in front])
    kk = min(k, m)
    km = kmeans(embed(genomes), kk, rng_seed)
    ev = CliffordEvaluator(ansatz)
    norms: dict[int, float] = {}

    def norm_of(i: int) -> float:
        if i not in norms:
            norms[i] = gradient_norm(ansatz, genomes[i], ev)[0]
        return norms[i]

    seeds = []
    for c in range(kk):
        members = np.flatnonzero(km.labels == c)  # already energy-ordered
        if members.size == 0:
            continue
        pick = next((int(i) for i in members if norm_of(int(i)) >= tau), None)
        if pick is None:
            pick = max((int(i) for i in members), key=lambda i: (norm_of(i), -i))
        seeds.append(
            Seed(tuple(int(v) for v in genomes[pick]), float(energies[pick]), norm_of(pick), c, "k_gaps")
        )
    return SeedSet(seeds, "k_gaps")
