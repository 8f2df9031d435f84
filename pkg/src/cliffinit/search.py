"""Discrete search over quarter-turn parameter space.

The genetic algorithm is deterministic for a seed: every random draw happens
in the single-threaded driver, and a generation's energies are computed by a
pure batched kernel whose results do not depend on the worker count.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .circuit import MaQaoaAnsatz, normalize_angles
from .stabilizer import CliffordEvaluator
from .statevector import DEFAULT_QUBIT_CAP, StatevectorSimulator

log = logging.getLogger(__name__)

EVICT_KEEP = 0.9  # fraction of the pool cap retained after an eviction pass
MUTATION_GENES = 2.0  # expected redrawn genes per child when mutation_prob is unset


@dataclass(frozen=True)
class GaConfig:
    population: int = 64
    generations: int = 200
    wall_time: float | None = None
    tournament_size: int = 3
    crossover_prob: float = 0.9
    mutation_prob: float | None = None  # None -> MUTATION_GENES / num_params
    elitism: int = 2
    rng_seed: int = 0
    pool_cap: int = 1_000_000

    def __post_init__(self):
        if self.population < 1 or self.generations < 1:
            raise ValueError("population and generations must be positive")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be smaller than the population")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be positive")
        for p in (self.crossover_prob, self.mutation_prob):
            if p is not None and not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} outside [0, 1]")
        if self.wall_time is not None and self.wall_time <= 0:
            raise ValueError("wall_time must be positive")


class CandidatePool:
    """Every distinct evaluated genome with its exact Clifford energy."""

    def __init__(self, num_params: int, cap: int = 1_000_000):
        self.num_params = num_params
        self.cap = cap
        self._energy: dict[bytes, float] = {}
        self.history: list[float] = []  # best energy after each generation
        self.generations_run = 0
        self.evicted = 0

    def __len__(self):
        return len(self._energy)

    def __contains__(self, genome) -> bool:
        return _key(genome) in self._energy

    def get(self, genome) -> float | None:
        return self._energy.get(_key(genome))

    def add(self, genome, energy: float) -> None:
        self._energy.setdefault(_key(genome), float(energy))

    def add_many(self, genomes: np.ndarray, energies: np.ndarray) -> None:
        for g, e in zip(genomes, energies):
            self.add(g, e)
        if len(self._energy) > self.cap:
            self._evict()

    def _evict(self) -> None:
        # trim below the cap so long runs do not re-sort the pool every generation
        keep = max(1, int(self.cap * EVICT_KEEP))
        ranked = sorted(self._energy.items(), key=lambda kv: (kv[1], kv[0]))
        self.evicted += len(ranked) - keep
        self._energy = dict(ranked[:keep])

    def sorted_entries(self) -> list[tuple[np.ndarray, float]]:
        """Ascending energy, ties broken by lexicographic genome."""
        ranked = sorted(self._energy.items(), key=lambda kv: (kv[1], kv[0]))
        return [(np.frombuffer(k, dtype=np.int8).astype(np.int64), e) for k, e in ranked]

    def best(self) -> tuple[np.ndarray, float]:
        k, e = min(self._energy.items(), key=lambda kv: (kv[1], kv[0]))
        return np.frombuffer(k, dtype=np.int8).astype(np.int64), e

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"quarters": g.tolist(), "energy": e}) + "\n" for g, e in self.sorted_entries()
        )

    @classmethod
    def from_jsonl(cls, text: str) -> "CandidatePool":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows:
            raise ValueError("empty pool file")
        pool = cls(len(rows[0]["quarters"]))
        for r in rows:
            pool.add(np.asarray(r["quarters"]), r["energy"])
        return pool


def _key(genome) -> bytes:
    return np.asarray(genome, dtype=np.int8).tobytes()


def _rank_order(genomes: np.ndarray, energies: np.ndarray) -> np.ndarray:
    """Indices sorted by (energy, genome)."""
    keys = [genomes[:, j] for j in range(genomes.shape[1] - 1, -1, -1)]
    return np.lexsort(keys + [energies])


def ga_search(
    ansatz: MaQaoaAnsatz,
    cfg: GaConfig = GaConfig(),
    on_generation: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
) -> CandidatePool:
    """Minimize Clifford energy with a generational GA.

    Tournament selection, uniform crossover, per-gene uniform redraw mutation
    and elitism. Stops after ``cfg.generations`` or ``cfg.wall_time`` seconds,
    whichever comes first. ``on_generation(g, population, energies)`` is
    called after each generation is evaluated.
    """
    d = ansatz.num_params
    if d == 0:
        raise ValueError("ansatz has no parameters")
    rng = np.random.default_rng(cfg.rng_seed)
    evaluate = CliffordEvaluator(ansatz)
    pool = CandidatePool(d, cfg.pool_cap)
    mut = min(1.0, MUTATION_GENES / d) if cfg.mutation_prob is None else cfg.mutation_prob
    P = cfg.population
    start = time.perf_counter()

    pop = rng.integers(0, 4, size=(P, d), dtype=np.int64)
    for gen in range(cfg.generations):
        energies = _evaluate(pop, pool, evaluate)
        order = _rank_order(pop, energies)
        pool.history.append(min(pool.history[-1], energies[order[0]]) if pool.history else energies[order[0]])
        pool.generations_run = gen + 1
        if on_generation is not None:
            on_generation(gen, pop.copy(), energies.copy())
        if gen + 1 == cfg.generations:
            break
        if cfg.wall_time is not None and time.perf_counter() - start >= cfg.wall_time:
            log.info("GA wall-time budget reached after %d generations", gen + 1)
            break

        rank = np.empty(P, dtype=np.int64)
        rank[order] = np.arange(P)
        n_child = P - cfg.elitism
        # tournaments: winner is the lowest rank among sampled entrants
        entrants = rng.integers(0, P, size=(n_child, 2, cfg.tournament_size))
        winners = np.take_along_axis(entrants, np.argmin(rank[entrants], axis=2)[..., None], axis=2)[..., 0]
        pa, pb = pop[winners[:, 0]], pop[winners[:, 1]]
        cross = rng.random(n_child) < cfg.crossover_prob
        mask = rng.random((n_child, d)) < 0.5
        children = np.where(cross[:, None] & mask, pb, pa)
        mutate = rng.random((n_child, d)) < mut
        children = np.where(mutate, rng.integers(0, 4, size=(n_child, d)), children)
        pop = np.concatenate([pop[order[: cfg.elitism]], children])
    return pool


def _evaluate(pop: np.ndarray, pool: CandidatePool, evaluate: CliffordEvaluator) -> np.ndarray:
    energies = np.empty(len(pop))
    fresh: dict[bytes, list[int]] = {}
    for i, g in enumerate(pop):
        e = pool.get(g)
        if e is None:
            fresh.setdefault(_key(g), []).append(i)
        else:
            energies[i] = e
    if fresh:
        idx = [rows[0] for rows in fresh.values()]
        new = evaluate(pop[idx])
        for rows, e in zip(fresh.values(), new):
            energies[rows] = e
        pool.add_many(pop[idx], new)
    return energies


def exhaustive_pool(ansatz: MaQaoaAnsatz, limit: int = 4**10) -> CandidatePool:
    """Evaluate every quarter-turn point (only for tiny parameter counts)."""
    d = ansatz.num_params
    if 4**d > limit:
        raise ValueError(f"4**{d} points exceeds the enumeration limit {limit}")
    evaluate = CliffordEvaluator(ansatz)
    pool = CandidatePool(d, cap=4**d)
    for chunk in _chunks(itertools.product(range(4), repeat=d), 1 << 14):
        g = np.array(chunk, dtype=np.int64)
        pool.add_many(g, evaluate(g))
    return pool


def _chunks(it: Iterable, size: int):
    buf = []
    for x in it:
        buf.append(x)
        if len(buf) == size:
            yield buf
            buf = []
    if buf:
        yield buf


def cafqa_baseline(ansatz: MaQaoaAnsatz) -> CandidatePool:
    """All 4**(2p) tied-angle Clifford points of the standard ansatz.

    Returned genomes are in the tied (2p-parameter) space.
    """
    tied = ansatz if ansatz.tied else MaQaoaAnsatz(ansatz.hamiltonian, ansatz.depth, tied=True)
    if tied.depth > 8:
        raise ValueError("depth too large to enumerate the tied Clifford space")
    return exhaustive_pool(tied, limit=4**16)


@dataclass
class RandomBaseline:
    angles: np.ndarray
    energy: float
    energies: list[float] = field(default_factory=list)
    rounded: bool = False  # energies from nearest quarter-turn points (large n)


def random_baseline(
    ansatz: MaQaoaAnsatz,
    k: int = 50,
    rng_seed: int = 0,
    cap: int = DEFAULT_QUBIT_CAP,
) -> RandomBaseline:
    """Best of ``k`` uniform draws from ``[-pi, pi)**d``.

    Beyond the statevector cap each draw is rounded to its nearest
    quarter-turn point and scored with the stabilizer engine.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(rng_seed)
    draws = rng.uniform(-math.pi, math.pi, size=(k, ansatz.num_params))
    if ansatz.num_qubits <= cap:
        sim = StatevectorSimulator(ansatz, cap)
        energies = [sim.energy(th) for th in draws]
        rounded = False
    else:
        quarters = np.mod(np.rint(draws / (math.pi / 2)).astype(np.int64), 4)
        energies = CliffordEvaluator(ansatz)(quarters).tolist()
        draws = normalize_angles(quarters * (math.pi / 2))
        rounded = True
    i = int(np.argmin(energies))
    return RandomBaseline(draws[i], float(energies[i]), [float(e) for e in energies], rounded)
