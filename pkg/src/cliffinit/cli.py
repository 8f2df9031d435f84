"""Command-line front end: generate, search, select, tune, score, verify.

Every stage seed is derived from one master seed by labeled hashing, so a
config plus its master seed fully determines every artifact except the
``runtime`` section of run.json.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import subprocess
import sys
import tempfile
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .circuit import MaQaoaAnsatz, angles_of
from .hamiltonian import (
    HypergraphObjective,
    IsingHamiltonian,
    KnapsackInstance,
    WeightedGraph,
    evaluate_bitstring,
    feature_selection_hamiltonian,
    generate_graph,
    generate_hypergraph,
    generate_knapsack,
    index_to_bits,
    knapsack_hamiltonian,
    maxcut_hamiltonian,
)
from .metrics import BRUTE_FORCE_MAX_QUBITS, MetricsReport, brute_force_ground
from .search import CandidatePool, GaConfig, cafqa_baseline, ga_search, random_baseline
from .selection import DEFAULT_K, DEFAULT_TAU, DEFAULT_TOP_M, SeedSet, fixed_interval_select, k_gaps_select
from .stabilizer import clifford_state
from .statevector import DEFAULT_QUBIT_CAP, NoiseModel, StatevectorSimulator
from .tuner import TuneConfig, multi_start, random_starts

log = logging.getLogger("cliffinit")

OUT_ENV = "CLIFFINIT_OUT"
PROBLEM_KINDS = ("maxcut-complete", "maxcut-regular3", "maxcut-ego", "maxcut", "knapsack", "features")
BASELINES = ("cafqa", "random50")
SELECT_METHODS = ("k-gaps", "fixed-interval")
STABILIZER_SHOTS = 1024  # samples used to pick a solution when no statevector is available


class StageError(RuntimeError):
    def __init__(self, stage: str, err: Exception):
        super().__init__(f"{stage}: {err}")
        self.stage = stage
        self.err = err


def sub_seed(master_seed: int, label: str) -> int:
    """Stage seed from the master seed; stable across platforms and runs."""
    digest = hashlib.sha256(f"{master_seed}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "cliffinit-out"))


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


# -- problems ----------------------------------------------------------------


def generate_problem(
    kind: str,
    n: int | None = None,
    items: int | None = None,
    weighted: bool = False,
    seed: int = 0,
    subset_size: int = 4,
    graph_file: str | None = None,
    hypergraph_file: str | None = None,
) -> dict:
    """Problem document: Hamiltonian terms plus the data needed to decode bits."""
    weighting = "integer_0_to_10" if weighted else "unweighted"
    if kind == "maxcut" or (kind.startswith("maxcut") and graph_file):
        if not graph_file:
            raise ValueError("kind 'maxcut' needs --graph")
        g = WeightedGraph.from_json(json.loads(Path(graph_file).read_text()))
        h = maxcut_hamiltonian(g)
        meta = {"kind": "maxcut", "graph": g.to_json()}
    elif kind.startswith("maxcut-"):
        if n is None:
            raise ValueError(f"{kind} needs --n")
        g = generate_graph(kind.split("-", 1)[1], n, weighting, seed)
        h = maxcut_hamiltonian(g)
        meta = {"kind": kind, "graph": g.to_json(), "generator": {"n": n, "weighting": weighting, "seed": seed}}
    elif kind == "knapsack":
        if items is None:
            raise ValueError("knapsack needs --items")
        k = generate_knapsack(items, seed)
        h = knapsack_hamiltonian(k)
        meta = {"kind": kind, "knapsack": k.to_json(), "generator": {"items": items, "seed": seed}}
    elif kind == "features":
        if hypergraph_file:
            hg = HypergraphObjective.from_json(json.loads(Path(hypergraph_file).read_text()))
            gen = {"file": Path(hypergraph_file).name}
        else:
            if n is None:
                raise ValueError("features needs --n or --hypergraph")
            hg = generate_hypergraph(n, subset_size, seed)
            gen = {"n": n, "subset_size": subset_size, "seed": seed}
        h = feature_selection_hamiltonian(hg)
        meta = {"kind": kind, "hypergraph": hg.to_json(), "generator": gen}
    else:
        raise ValueError(f"unknown problem kind {kind!r}; choose from {PROBLEM_KINDS}")
    known = brute_force_ground(h).energy if h.num_qubits <= DEFAULT_QUBIT_CAP else None
    return {**h.to_json(), "metadata": meta, "known_optimal": known}


def load_problem(path) -> tuple[IsingHamiltonian, dict, float | None]:
    doc = json.loads(Path(path).read_text())
    for key in ("num_qubits", "terms"):
        if key not in doc:
            raise ValueError(f"problem file lacks {key!r}")
    return IsingHamiltonian.from_json(doc), doc.get("metadata", {}), doc.get("known_optimal")


def decode_solution(kind: str, bitstring: str, metadata: dict) -> dict:
    """Human-readable reading of a measured bitstring (qubit 0 first)."""
    bits = [int(c) for c in bitstring]
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bitstring must contain only 0 and 1")
    if kind.startswith("maxcut"):
        g = WeightedGraph.from_json(metadata["graph"])
        if len(bits) != g.num_nodes:
            raise ValueError(f"bitstring length {len(bits)} != {g.num_nodes} nodes")
        return {
            "partition": [[i for i, b in enumerate(bits) if b == 0], [i for i, b in enumerate(bits) if b == 1]],
            "cut": g.cut_value(bits),
        }
    if kind == "knapsack":
        k = KnapsackInstance.from_json(metadata["knapsack"])
        if len(bits) != k.num_qubits:
            raise ValueError(f"bitstring length {len(bits)} != {k.num_qubits} qubits")
        chosen = [i for i in range(k.num_items) if bits[i]]
        weight = sum(k.weights[i] for i in chosen)
        return {
            "items": chosen,
            "value": sum(k.values[i] for i in chosen),
            "weight": weight,
            "feasible": weight <= k.capacity,
            "slack_bits": bits[k.num_items :],
        }
    if kind == "features":
        hg = HypergraphObjective.from_json(metadata["hypergraph"])
        if len(bits) != hg.num_vars:
            raise ValueError(f"bitstring length {len(bits)} != {hg.num_vars} variables")
        chosen = [i for i, b in enumerate(bits) if b]
        return {"selected": chosen, "constraint_satisfied": len(chosen) == hg.subset_size}
    return {"bits": bits}


# -- run configuration ---------------------------------------------------------


@dataclass
class RunConfig:
    problem: dict = field(default_factory=lambda: {"kind": "maxcut-regular3", "n": 8, "weighted": True})
    depth: int = 2
    ga: dict = field(default_factory=lambda: {"population": 64, "generations": 200})
    selection: dict = field(default_factory=lambda: {"method": "k-gaps", "k": DEFAULT_K, "top_m": DEFAULT_TOP_M, "tau": DEFAULT_TAU})
    tune: dict = field(default_factory=lambda: {"max_evals_per_start": 500, "noise": None, "method": "nelder-mead"})
    tune_cap: int = DEFAULT_QUBIT_CAP
    shots: int = 10_000
    baselines: list = field(default_factory=list)
    master_seed: int = 0

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.shots < 0:
            raise ValueError("shots must be >= 0")
        if self.selection.get("method") not in SELECT_METHODS:
            raise ValueError(f"selection method must be one of {SELECT_METHODS}")
        for b in self.baselines:
            if b not in BASELINES:
                raise ValueError(f"unknown baseline {b!r}")
        if not isinstance(self.master_seed, int):
            raise ValueError("master_seed must be an integer")
        self.ga_config(), self.tune_config()  # validate eagerly

    def ga_config(self) -> GaConfig:
        return GaConfig(**{**self.ga, "rng_seed": sub_seed(self.master_seed, "ga")})

    def tune_config(self) -> TuneConfig:
        t = dict(self.tune)
        noise = t.pop("noise", None)
        return TuneConfig(
            noise=None if noise is None else NoiseModel(**noise),
            optimizer_seed=sub_seed(self.master_seed, "tuner"),
            cap=self.tune_cap,
            **t,
        )

    @classmethod
    def from_json(cls, d: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        base = cls()
        merged = asdict(base)
        for k, v in d.items():
            if isinstance(v, dict) and isinstance(merged.get(k), dict) and k != "problem":
                merged[k] = {**merged[k], **v}
            else:
                merged[k] = v
        return cls(**merged)

    def to_json(self) -> dict:
        return asdict(self)


def stage_seeds(master_seed: int) -> dict:
    return {label: sub_seed(master_seed, label) for label in ("generator", "ga", "kmeans", "tuner", "random", "sampling")}


def build_problem(cfg: RunConfig) -> dict:
    p = dict(cfg.problem)
    if "file" in p:
        return json.loads(Path(p["file"]).read_text())
    kind = p.pop("kind")
    seed = p.pop("instance_seed", sub_seed(cfg.master_seed, "generator"))
    return generate_problem(kind, seed=seed, **p)


# -- pipeline ----------------------------------------------------------------------


def _stage(name, timing, fn, *args, **kw):
    t0 = time.perf_counter()
    try:
        return fn(*args, **kw)
    except Exception as e:  # noqa: BLE001 - re-raised with the stage name
        raise StageError(name, e) from e
    finally:
        timing[name] = round(time.perf_counter() - t0, 6)


def _accuracy_entry(energy: float, ground) -> dict:
    if ground is None:
        return {"energy": energy, "accuracy": None, "normalized": False}
    r = MetricsReport.build(energy, ground["e_opt"], ground["e_max"])
    return {"energy": energy, "accuracy": r.accuracy, "normalized": r.normalized}


def _pick_solution(h: IsingHamiltonian, probs: dict[str, float]) -> tuple[str, float]:
    """Most probable bitstring; ties go to lower energy, then lexicographic order."""
    return min(probs.items(), key=lambda kv: (-round(kv[1], 12), evaluate_bitstring(h, kv[0]), kv[0]))


def run_pipeline(cfg: RunConfig, out_dir: Path, threads: int = 1) -> dict:
    """Build -> search -> select -> tune -> score -> decode; writes artifacts to ``out_dir``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    timing: dict[str, float] = {}
    seeds = stage_seeds(cfg.master_seed)
    t_start = time.perf_counter()

    problem = _stage("problem", timing, build_problem, cfg)
    (out_dir / "problem.json").write_text(_dump(problem))
    h = IsingHamiltonian.from_json(problem)
    meta = problem.get("metadata", {})
    kind = meta.get("kind", "unknown")
    n = h.num_qubits
    ansatz = _stage("ansatz", timing, MaQaoaAnsatz, h, cfg.depth)

    pool = _stage("search", timing, ga_search, ansatz, cfg.ga_config())
    (out_dir / "pool.jsonl").write_text(pool.to_jsonl())
    best_q, best_e = pool.best()

    sel = cfg.selection
    if sel["method"] == "k-gaps":
        seed_set = _stage(
            "select", timing, k_gaps_select, ansatz, pool, sel.get("k", DEFAULT_K), sel.get("top_m"), sel.get("tau", DEFAULT_TAU), seeds["kmeans"]
        )
    else:
        seed_set = _stage("select", timing, fixed_interval_select, pool, sel.get("k", DEFAULT_K))
    (out_dir / "seeds.json").write_text(_dump(seed_set.to_json()))

    ground = None
    if n <= min(cfg.tune_cap, BRUTE_FORCE_MAX_QUBITS):
        gt = _stage("ground_truth", timing, brute_force_ground, h)
        ground = {"e_opt": gt.energy, "e_max": gt.max_energy, "num_minimizers": len(gt.minimizers)}
    elif problem.get("known_optimal") is not None:
        ground = {"e_opt": float(problem["known_optimal"]), "e_max": None, "num_minimizers": None}

    rand = _stage("random_baseline", timing, random_baseline, ansatz, 50, seeds["random"], cfg.tune_cap)
    baselines = {}
    if "random50" in cfg.baselines:
        baselines["random50"] = {**_accuracy_entry(rand.energy, ground), "rounded_to_clifford": rand.rounded}
    if "cafqa" in cfg.baselines:
        cpool = _stage("cafqa", timing, cafqa_baseline, ansatz)
        cq, ce = cpool.best()
        baselines["cafqa"] = {**_accuracy_entry(ce, ground), "quarters": cq.tolist()}

    tuning = {"skipped": True, "reason": f"{n} qubits exceeds tuning cap {cfg.tune_cap}"}
    tuned = None
    if n <= cfg.tune_cap:
        tag = "spiq_kgaps" if sel["method"] == "k-gaps" else "spiq_fixed"
        starts = [(angles_of(s.as_array()), tag) for s in seed_set]
        tuned = _stage("tune", timing, multi_start, ansatz, starts, cfg.tune_config(), threads)
        (out_dir / "traces.json").write_text(_dump(tuned.to_json()))
        tuning = {
            "skipped": False,
            "best_index": tuned.best_index,
            "best_energy": tuned.best.final_energy,
            "final_energies": [t.final_energy for t in tuned.traces],
            "evals": [len(t.evals) for t in tuned.traces],
            "objective": "exact" if cfg.tune_config().noise is None else "trajectory_mean",
        }
        if ground is not None:
            tuning["accuracy_after_tuning"] = _accuracy_entry(tuned.best.final_energy, ground)["accuracy"]

    def score():
        samples_init = samples_rand = None
        if cfg.shots > 0 and n <= cfg.tune_cap:
            sim = StatevectorSimulator(ansatz, cfg.tune_cap)
            samples_init = sim.sample(angles_of(best_q), cfg.shots, seeds["sampling"])
            samples_rand = sim.sample(rand.angles, cfg.shots, seeds["sampling"])
        return MetricsReport.build(
            best_e,
            None if ground is None else ground["e_opt"],
            None if ground is None else ground["e_max"],
            rand.energy,
            samples_rand,
            samples_init,
            seeds,
        )

    report = _stage("metrics", timing, score)

    def solve():
        if tuned is not None:
            probs = StatevectorSimulator(ansatz, cfg.tune_cap).state(tuned.best.final_point).probabilities()
            top = np.flatnonzero(probs >= probs.max() - 1e-12)
            cand = {index_to_bits(int(i), n): float(probs[i]) for i in top}
            source = "tuned_statevector"
        else:
            counts = clifford_state(ansatz, best_q).sample(STABILIZER_SHOTS, seeds["sampling"])
            cand = {b: c / STABILIZER_SHOTS for b, c in counts.items()}
            source = "clifford_samples"
        bits, p = _pick_solution(h, cand)
        return {
            "bitstring": bits,
            "probability": p,
            "energy": evaluate_bitstring(h, bits),
            "source": source,
            "decoded": decode_solution(kind, bits, meta),
        }

    solution = _stage("decode", timing, solve)
    timing["total"] = round(time.perf_counter() - t_start, 6)

    body = {
        "config": cfg.to_json(),
        "stage_seeds": seeds,
        "problem": {"kind": kind, "num_qubits": n, "num_terms": h.num_terms, "num_params": ansatz.num_params},
        "ground_truth": ground,
        "pool": {
            "size": len(pool),
            "best_energy": best_e,
            "best_quarters": best_q.tolist(),
            "generations_run": pool.generations_run,
            "evicted": pool.evicted,
            "history": pool.history,
        },
        "seed_set": seed_set.to_json(),
        "tuning": tuning,
        "baselines": baselines,
        "metrics": report.to_json(),
        "solution": solution,
    }
    run = {**body, "determinism_hash": determinism_hash(body), "runtime": {"timing": timing, "threads": _thread_info(threads)}}
    (out_dir / "run.json").write_text(_dump(run))
    return run


def determinism_hash(body: dict) -> str:
    return hashlib.sha256(json.dumps(body, sort_keys=True, allow_nan=False).encode()).hexdigest()


def deterministic_part(run: dict) -> dict:
    return {k: v for k, v in run.items() if k != "runtime"}


def set_threads(threads: int) -> int:
    """Clamp numba's worker count; returns the count actually in effect."""
    import numba

    # numba's notice about an old TBB is noise for CLI users
    warnings.filterwarnings("ignore", message="The TBB threading layer")
    if threads < 1:
        raise ValueError("--threads must be >= 1")
    eff = min(threads, numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(eff)
    return eff


def _thread_info(requested: int) -> dict:
    import numba

    return {"requested": requested, "numba": numba.get_num_threads(), "numba_max": numba.config.NUMBA_NUM_THREADS}


# -- subcommands ---------------------------------------------------------------------


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_gen(a) -> int:
    doc = generate_problem(a.kind, a.n, a.items, a.weighted, a.seed, a.subset_size, a.graph, a.hypergraph)
    _write(a.out, _dump(doc))
    return 0


def _ansatz(a) -> tuple[MaQaoaAnsatz, dict]:
    h, meta, _ = load_problem(a.problem)
    return MaQaoaAnsatz(h, a.depth), meta


def cmd_search(a) -> int:
    ansatz, _ = _ansatz(a)
    if a.mode == "cafqa":
        pool = cafqa_baseline(ansatz)
    else:
        cfg = GaConfig(
            population=a.population,
            generations=a.generations,
            wall_time=a.wall_time,
            rng_seed=a.seed,
            mutation_prob=a.mutation_prob,
        )
        pool = ga_search(ansatz, cfg)
    _write(a.out, pool.to_jsonl())
    q, e = pool.best()
    print(json.dumps({"size": len(pool), "best_energy": e, "best_quarters": q.tolist(), "generations_run": pool.generations_run}), file=sys.stderr if not a.out else sys.stdout)
    return 0


def cmd_select(a) -> int:
    ansatz, _ = _ansatz(a)
    pool = CandidatePool.from_jsonl(Path(a.pool).read_text())
    if pool.num_params != ansatz.num_params:
        raise ValueError(f"pool genomes have {pool.num_params} genes, ansatz needs {ansatz.num_params}")
    if a.method == "k-gaps":
        s = k_gaps_select(ansatz, pool, a.k, a.top_m, a.tau, a.seed)
    else:
        s = fixed_interval_select(pool, a.k)
    _write(a.out, _dump(s.to_json()))
    return 0


def _noise(a) -> NoiseModel | None:
    if not a.noise:
        return None
    return NoiseModel(a.p1, a.p2, a.pm, a.trajectories)


def cmd_tune(a) -> int:
    ansatz, _ = _ansatz(a)
    starts = []
    if a.seeds:
        ss = SeedSet.from_json(json.loads(Path(a.seeds).read_text()))
        tag = "spiq_kgaps" if ss.method == "k_gaps" else "spiq_fixed"
        starts += [(angles_of(s.as_array()), tag) for s in ss]
    if a.random:
        starts += random_starts(ansatz, a.random, sub_seed(a.seed, "random-starts"))
    cfg = TuneConfig(a.evals, _noise(a), a.seed, a.method, cap=a.cap)
    res = multi_start(ansatz, starts, cfg, a.threads)
    _write(a.out, _dump(res.to_json()))
    return 0


def cmd_metrics(a) -> int:
    ansatz, _ = _ansatz(a)
    h = ansatz.hamiltonian
    pool = CandidatePool.from_jsonl(Path(a.pool).read_text())
    q, e_init = pool.best()
    gt = brute_force_ground(h) if h.num_qubits <= min(a.cap, BRUTE_FORCE_MAX_QUBITS) else None
    rand = random_baseline(ansatz, 50, sub_seed(a.seed, "random"), a.cap)
    samples_i = samples_r = None
    if a.shots and h.num_qubits <= a.cap:
        sim = StatevectorSimulator(ansatz, a.cap)
        samples_i = sim.sample(angles_of(q), a.shots, sub_seed(a.seed, "sampling"))
        samples_r = sim.sample(rand.angles, a.shots, sub_seed(a.seed, "sampling"))
    rep = MetricsReport.build(
        e_init,
        None if gt is None else gt.energy,
        None if gt is None else gt.max_energy,
        rand.energy,
        samples_r,
        samples_i,
        {"seed": a.seed},
    )
    _write(a.out, _dump(rep.to_json()))
    return 0


def _config_from_args(a) -> RunConfig:
    d = json.loads(Path(a.config).read_text()) if a.config else {}
    cfg = RunConfig.from_json(d)
    over = {}
    if a.kind:
        prob = {"kind": a.kind}
        for key in ("n", "items"):
            if getattr(a, key) is not None:
                prob[key] = getattr(a, key)
        if a.weighted:
            prob["weighted"] = True
        if a.instance_seed is not None:
            prob["instance_seed"] = a.instance_seed
        over["problem"] = prob
    if a.problem:
        over["problem"] = {"file": a.problem}
    if a.depth is not None:
        over["depth"] = a.depth
    ga = {}
    for key in ("population", "generations", "wall_time"):
        if getattr(a, key) is not None:
            ga[key] = getattr(a, key)
    if ga:
        over["ga"] = {**cfg.ga, **ga}
    if a.select:
        over["selection"] = {**cfg.selection, "method": a.select}
    if a.k is not None:
        over["selection"] = {**over.get("selection", cfg.selection), "k": a.k}
    if a.evals is not None:
        over["tune"] = {**cfg.tune, "max_evals_per_start": a.evals}
    if a.baseline:
        over["baselines"] = sorted(set(a.baseline))
    if a.shots is not None:
        over["shots"] = a.shots
    if a.seed is not None:
        over["master_seed"] = a.seed
    if a.tune_cap is not None:
        over["tune_cap"] = a.tune_cap
    return RunConfig.from_json({**cfg.to_json(), **over}) if over else cfg


def cmd_pipeline(a) -> int:
    cfg = _config_from_args(a)
    out = Path(a.out) if a.out else default_out_dir()
    run = run_pipeline(cfg, out, a.threads)
    summary = {
        "out": str(out),
        "best_energy": run["pool"]["best_energy"],
        "accuracy": run["metrics"]["accuracy"],
        "relative_improvement": run["metrics"]["relative_improvement"],
        "reduction_factor": run["metrics"]["reduction_factor"],
        "determinism_hash": run["determinism_hash"],
    }
    print(json.dumps(summary))
    return 0


def cmd_verify(a) -> int:
    """Rerun a config at several thread counts and compare non-runtime content."""
    if a.run:
        run = json.loads(Path(a.run).read_text())
        ok = determinism_hash({k: v for k, v in run.items() if k not in ("runtime", "determinism_hash")}) == run.get("determinism_hash")
        print(json.dumps({"run": a.run, "hash_ok": ok}))
        return 0 if ok else 1
    if not a.config:
        raise ValueError("verify needs --config or --run")
    results = {}
    texts = {}
    with tempfile.TemporaryDirectory() as tmp:
        for t in a.threads_list:
            out = Path(tmp) / f"threads{t}"
            env = {**os.environ, "NUMBA_NUM_THREADS": str(t)}
            cmd = [sys.executable, "-m", "cliffinit", "--threads", str(t), "pipeline", "--config", a.config, "--out", str(out)]
            proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
            if proc.returncode != 0:
                raise RuntimeError(f"pipeline with {t} threads failed: {proc.stderr.strip()[-2000:]}")
            run = json.loads((out / "run.json").read_text())
            texts[t] = _dump(deterministic_part(run))
            results[t] = {"determinism_hash": run["determinism_hash"], "threads": run["runtime"]["threads"]}
    ref = texts[a.threads_list[0]]
    identical = all(txt == ref for txt in texts.values())
    print(json.dumps({"identical": identical, "runs": {str(k): v for k, v in results.items()}}, sort_keys=True))
    return 0 if identical else 1


TABLE_FIELDS = [
    ("kind", ("problem", "kind")),
    ("num_qubits", ("problem", "num_qubits")),
    ("depth", ("config", "depth")),
    ("master_seed", ("config", "master_seed")),
    ("pool_size", ("pool", "size")),
    ("e_init", ("metrics", "e_init")),
    ("e_opt", ("metrics", "e_opt")),
    ("e_rand", ("metrics", "e_rand")),
    ("accuracy", ("metrics", "accuracy")),
    ("normalized", ("metrics", "normalized")),
    ("relative_improvement", ("metrics", "relative_improvement")),
    ("reduction_factor", ("metrics", "reduction_factor")),
    ("tuned_energy", ("tuning", "best_energy")),
    ("cafqa_accuracy", ("baselines", "cafqa", "accuracy")),
    ("random50_accuracy", ("baselines", "random50", "accuracy")),
]


def runs_to_csv(runs: list[tuple[str, dict]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run"] + [name for name, _ in TABLE_FIELDS])
    for label, run in runs:
        row = [label]
        for _, path in TABLE_FIELDS:
            v = run
            for key in path:
                v = v.get(key) if isinstance(v, dict) else None
            row.append("" if v is None else v)
        w.writerow(row)
    return buf.getvalue()


def cmd_table(a) -> int:
    runs = [(p, json.loads(Path(p).read_text())) for p in a.runs]
    _write(a.out, runs_to_csv(runs))
    return 0


# -- argument parsing ----------------------------------------------------------------


def _common(p, seed_default: int | None = 0):
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--out", "-o", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cliffinit", description="Clifford-point initialization for multi-angle QAOA")
    ap.add_argument("--threads", type=int, default=1, help="numba/tuner worker cap")
    ap.add_argument("-v", "--verbose", action="store_true")
    sp = ap.add_subparsers(dest="cmd", required=True)

    p = sp.add_parser("gen", help="write a problem file")
    p.add_argument("--kind", choices=PROBLEM_KINDS, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--items", type=int)
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--subset-size", type=int, default=4)
    p.add_argument("--graph", help="edge-list JSON for --kind maxcut")
    p.add_argument("--hypergraph", help="hypergraph JSON for --kind features")
    _common(p)
    p.set_defaults(fn=cmd_gen)

    def problem_args(p):
        p.add_argument("--problem", required=True)
        p.add_argument("--depth", "-p", type=int, default=2)

    p = sp.add_parser("search", help="Clifford GA (or exhaustive tied-angle baseline)")
    problem_args(p)
    p.add_argument("--mode", choices=("ga", "cafqa"), default="ga")
    p.add_argument("--population", type=int, default=64)
    p.add_argument("--generations", type=int, default=200)
    p.add_argument("--wall-time", type=float)
    p.add_argument("--mutation-prob", type=float)
    _common(p)
    p.set_defaults(fn=cmd_search)

    p = sp.add_parser("select", help="choose seeds from a pool")
    problem_args(p)
    p.add_argument("--pool", required=True)
    p.add_argument("--method", choices=SELECT_METHODS, default="k-gaps")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--top-m", type=int, default=DEFAULT_TOP_M)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    _common(p)
    p.set_defaults(fn=cmd_select)

    p = sp.add_parser("tune", help="multi-start continuous tuning")
    problem_args(p)
    p.add_argument("--seeds", help="seed-set JSON from `select`")
    p.add_argument("--random", type=int, default=0, help="extra uniformly random starts")
    p.add_argument("--evals", type=int, default=500)
    p.add_argument("--method", choices=("nelder-mead", "cobyla"), default="nelder-mead")
    p.add_argument("--noise", action="store_true")
    p.add_argument("--p1", type=float, default=1e-4)
    p.add_argument("--p2", type=float, default=1e-3)
    p.add_argument("--pm", type=float, default=0.0)
    p.add_argument("--trajectories", type=int, default=256)
    p.add_argument("--cap", type=int, default=DEFAULT_QUBIT_CAP)
    _common(p)
    p.set_defaults(fn=cmd_tune)

    p = sp.add_parser("metrics", help="accuracy, relative improvement and reduction factor for a pool")
    problem_args(p)
    p.add_argument("--pool", required=True)
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--cap", type=int, default=DEFAULT_QUBIT_CAP)
    _common(p)
    p.set_defaults(fn=cmd_metrics)

    p = sp.add_parser("pipeline", help="full workflow; writes run.json and artifacts")
    p.add_argument("--config", help="RunConfig JSON; flags below override it")
    p.add_argument("--kind", choices=PROBLEM_KINDS)
    p.add_argument("--n", type=int)
    p.add_argument("--items", type=int)
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--instance-seed", type=int)
    p.add_argument("--problem", help="existing problem file")
    p.add_argument("--depth", "-p", type=int)
    p.add_argument("--population", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--wall-time", type=float)
    p.add_argument("--select", choices=SELECT_METHODS)
    p.add_argument("--k", type=int)
    p.add_argument("--evals", type=int)
    p.add_argument("--baseline", action="append", choices=BASELINES)
    p.add_argument("--shots", type=int)
    p.add_argument("--tune-cap", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", "-o", help=f"output directory (default ${OUT_ENV} or ./cliffinit-out)")
    p.set_defaults(fn=cmd_pipeline)

    p = sp.add_parser("verify", help="rerun a config at several thread counts and compare")
    p.add_argument("--config")
    p.add_argument("--run", help="only re-check the hash stored in an existing run.json")
    p.add_argument("--threads-list", type=int, nargs="+", default=[1, 8])
    p.set_defaults(fn=cmd_verify)

    p = sp.add_parser("table", help="aggregate run.json files into CSV")
    p.add_argument("runs", nargs="+")
    p.add_argument("--out", "-o")
    p.set_defaults(fn=cmd_table)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        set_threads(a.threads)
        return a.fn(a)
    except Exception as e:  # noqa: BLE001 - every failure becomes a JSON error record
        stage = e.stage if isinstance(e, StageError) else a.cmd
        inner = e.err if isinstance(e, StageError) else e
        err = {"error": type(inner).__name__, "message": str(inner), "stage": stage, "command": a.cmd}
        print(json.dumps(err), file=sys.stderr)
        out = getattr(a, "out", None)
        if a.cmd == "pipeline":
            d = Path(out) if out else default_out_dir()
            d.mkdir(parents=True, exist_ok=True)
            (d / "error.json").write_text(_dump(err))
        return 1


if __name__ == "__main__":
    sys.exit(main())
