"""Budgeted multi-start continuous tuning on the statevector simulator."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .circuit import MaQaoaAnsatz, normalize_angles
from .statevector import DEFAULT_QUBIT_CAP, NoiseModel, StatevectorSimulator

log = logging.getLogger(__name__)

PROVENANCES = ("spiq_fixed", "spiq_kgaps", "random", "cafqa")
METHODS = ("nelder-mead", "cobyla")


@dataclass(frozen=True)
class TuneConfig:
    max_evals_per_start: int = 500
    noise: NoiseModel | None = None  # None -> exact objective
    optimizer_seed: int = 0
    method: str = "nelder-mead"
    initial_step: float = 0.3  # radians; simplex edge / COBYLA trust radius
    cap: int = DEFAULT_QUBIT_CAP

    def __post_init__(self):
        if self.max_evals_per_start < 1:
            raise ValueError("max_evals_per_start must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"unknown optimizer {self.method!r}; choose from {METHODS}")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")

    @property
    def objective(self) -> str:
        return "exact" if self.noise is None else "noisy"


@dataclass
class TuneTrace:
    provenance: str
    start: np.ndarray
    evals: list[tuple[int, float]] = field(default_factory=list)  # (eval index, best so far)
    final_point: np.ndarray | None = None
    final_energy: float = math.inf

    @property
    def start_energy(self) -> float:
        return self.evals[0][1]

    def to_json(self) -> dict:
        return {
            "provenance": self.provenance,
            "start": self.start.tolist(),
            "trace": [[i, e] for i, e in self.evals],
            "final_energy": self.final_energy,
            "final_point": None if self.final_point is None else self.final_point.tolist(),
        }


class _BudgetExhausted(Exception):
    pass


class _Objective:
    """Counts calls, wraps angles and keeps the best point seen."""

    def __init__(self, sim: StatevectorSimulator, cfg: TuneConfig, stream_seed: int, trace: TuneTrace):
        self.sim = sim
        self.cfg = cfg
        self.trace = trace
        self.count = 0
        self.best_x = None
        self.best_e = math.inf
        self._seeds = np.random.SeedSequence(stream_seed)

    def __call__(self, x) -> float:
        if self.count >= self.cfg.max_evals_per_start:
            raise _BudgetExhausted
        theta = normalize_angles(x)
        if self.cfg.noise is None:
            e = self.sim.energy(theta)
        else:
            seed = int(self._seeds.spawn(1)[0].generate_state(1)[0])
            e = self.sim.noisy_energy(theta, self.cfg.noise, seed)
        if e < self.best_e:
            self.best_e, self.best_x = e, theta
        self.trace.evals.append((self.count, self.best_e))
        self.count += 1
        return e


def start_seed(optimizer_seed: int, start) -> int:
    """Per-start stream seed; equal starts get equal streams."""
    h = hashlib.sha256(np.asarray(start, dtype=np.float64).tobytes()).digest()
    return int.from_bytes(hashlib.sha256(str(optimizer_seed).encode() + h).digest()[:8], "little")


def local_optimize(
    ansatz: MaQaoaAnsatz,
    start,
    cfg: TuneConfig = TuneConfig(),
    provenance: str = "random",
    sim: StatevectorSimulator | None = None,
) -> TuneTrace:
    """Derivative-free local search from ``start`` within the eval budget.

    The first evaluation is always the start point, so the best reported
    energy never exceeds the start energy. Angles are wrapped into
    ``[-pi, pi)`` before every evaluation.
    """
    if ansatz.num_qubits > cfg.cap:
        raise ValueError(f"{ansatz.num_qubits} qubits exceeds the tuning cap {cfg.cap}")
    sim = sim or StatevectorSimulator(ansatz, cfg.cap)
    x0 = normalize_angles(start)
    if x0.shape != (ansatz.num_params,):
        raise ValueError(f"start has shape {x0.shape}, expected ({ansatz.num_params},)")
    trace = TuneTrace(provenance, x0.copy())
    seed = start_seed(cfg.optimizer_seed, x0)
    f = _Objective(sim, cfg, seed, trace)
    rng = np.random.default_rng(seed)
    signs = np.where(rng.random(x0.size) < 0.5, -1.0, 1.0)
    try:
        # both scipy methods evaluate x0 first, which makes it eval 0
        if cfg.max_evals_per_start == 1:
            f(x0)
        else:
            if cfg.method == "nelder-mead":
                simplex = np.vstack([x0, x0 + cfg.initial_step * np.diag(signs)])
                minimize(
                    f,
                    x0,
                    method="Nelder-Mead",
                    options={
                        "initial_simplex": simplex,
                        "maxfev": cfg.max_evals_per_start,
                        "adaptive": x0.size > 4,
                        "xatol": 1e-9,
                        "fatol": 1e-12,
                    },
                )
            else:
                minimize(
                    f,
                    x0,
                    method="COBYLA",
                    options={"rhobeg": cfg.initial_step, "maxiter": cfg.max_evals_per_start, "tol": 1e-10},
                )
    except _BudgetExhausted:
        pass
    trace.final_point = f.best_x
    trace.final_energy = f.best_e
    return trace


@dataclass
class MultiStartResult:
    traces: list[TuneTrace]
    best_index: int

    @property
    def best(self) -> TuneTrace:
        return self.traces[self.best_index]

    def to_json(self) -> dict:
        return {"best_index": self.best_index, "traces": [t.to_json() for t in self.traces]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def multi_start(
    ansatz: MaQaoaAnsatz,
    starts: list[tuple[np.ndarray, str]],
    cfg: TuneConfig = TuneConfig(),
    workers: int = 1,
) -> MultiStartResult:
    """Independent local runs from every ``(angles, provenance)`` start.

    Results are collected in start order; the best final energy wins with
    ties going to the earliest start.
    """
    if not starts:
        raise ValueError("need at least one start")
    sim = StatevectorSimulator(ansatz, cfg.cap)

    def run(item):
        x, tag = item
        return local_optimize(ansatz, x, cfg, tag, sim)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            traces = list(ex.map(run, starts))
    else:
        traces = [run(s) for s in starts]
    best = min(range(len(traces)), key=lambda i: (traces[i].final_energy, i))
    return MultiStartResult(traces, best)


def random_starts(ansatz: MaQaoaAnsatz, k: int, rng_seed: int = 0) -> list[tuple[np.ndarray, str]]:
    rng = np.random.default_rng(rng_seed)
    return [(rng.uniform(-math.pi, math.pi, ansatz.num_params), "random") for _ in range(k)]
