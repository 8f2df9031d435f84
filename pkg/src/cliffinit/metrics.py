"""Brute-force ground truth and initialization-quality metrics.

Energies follow the minimization convention used everywhere in the package:
lower is better, and benchmark ground energies are negative.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from .hamiltonian import IsingHamiltonian, index_to_bits

BRUTE_FORCE_MAX_QUBITS = 26
_CHUNK = 1 << 20


@dataclass(frozen=True)
class GroundTruth:
    energy: float
    minimizers: tuple[str, ...]
    max_energy: float


def brute_force_ground(h: IsingHamiltonian, atol: float = 1e-9) -> GroundTruth:
    """Exact minimum over all ``2**n`` bitstrings, with every tying minimizer.

    Ties are judged with absolute tolerance ``atol`` so that float round-off
    in the term sums does not split degenerate optima. The maximum energy is
    returned too because the normalized accuracy needs it.
    """
    n = h.num_qubits
    if n > BRUTE_FORCE_MAX_QUBITS:
        raise ValueError(f"{n} qubits is beyond brute force (max {BRUTE_FORCE_MAX_QUBITS})")
    dim = 1 << n
    lo, hi = math.inf, -math.inf
    chunks = []
    for start in range(0, dim, _CHUNK):
        idx = np.arange(start, min(dim, start + _CHUNK), dtype=np.int64)
        e = h.diagonal(idx)
        lo = min(lo, float(e.min()))
        hi = max(hi, float(e.max()))
        chunks.append((idx, e))
    mins = []
    for idx, e in chunks:
        mins.extend(int(i) for i in idx[e <= lo + atol])
    return GroundTruth(lo, tuple(index_to_bits(i, n) for i in mins), hi)


def accuracy(e_init: float, e_opt: float) -> float:
    """``e_init / e_opt``; both energies must be strictly negative."""
    if e_opt == 0:
        raise ValueError("accuracy is undefined for e_opt == 0")
    if e_init > 0 or e_opt > 0:
        raise ValueError("raw accuracy needs non-positive energies; use normalized_accuracy")
    return e_init / e_opt


def normalized_accuracy(e_init: float, e_opt: float, e_max: float) -> float:
    """``(e_max - e_init) / (e_max - e_opt)``: 1 at the ground state, 0 at the top."""
    if e_max <= e_opt:
        raise ValueError("flat spectrum: e_max must exceed e_opt")
    return (e_max - e_init) / (e_max - e_opt)


def reduction_factor(samples_random: Mapping[str, int], samples_init: Mapping[str, int]) -> float:
    """Distinct bitstrings seen from the random start over those seen from the Clifford start."""
    shots_r, shots_i = sum(samples_random.values()), sum(samples_init.values())
    if shots_r != shots_i:
        raise ValueError(f"unequal shot counts {shots_r} vs {shots_i}")
    n_init = distinct(samples_init)
    if n_init == 0:
        raise ValueError("no samples from the initialized state")
    return distinct(samples_random) / n_init


def distinct(samples: Mapping[str, int]) -> int:
    return sum(1 for c in samples.values() if c > 0)


def relative_improvement(e_init: float, e_rand: float) -> float | None:
    """``e_init / e_rand``; >1 means the Clifford start is lower.

    Returns ``None`` when the random energy is non-negative while the Clifford
    one is negative; callers record the signed gap instead.
    """
    if e_rand == 0:
        if e_init < 0:
            return None
        raise ValueError("relative improvement undefined for e_rand == 0")
    if e_rand > 0 and e_init < 0:
        return None
    return e_init / e_rand


@dataclass
class MetricsReport:
    e_init: float | None = None
    e_opt: float | None = None
    e_max: float | None = None
    e_rand: float | None = None
    accuracy: float | None = None
    normalized: bool = False
    relative_improvement: float | None = None
    energy_gap: float | None = None  # e_rand - e_init when the ratio is not defined
    distinct_random: int | None = None
    distinct_init: int | None = None
    reduction_factor: float | None = None
    shots: int | None = None
    seeds: dict = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        e_init: float,
        e_opt: float | None = None,
        e_max: float | None = None,
        e_rand: float | None = None,
        samples_random: Mapping[str, int] | None = None,
        samples_init: Mapping[str, int] | None = None,
        seeds: dict | None = None,
    ) -> "MetricsReport":
        r = cls(e_init=e_init, e_opt=e_opt, e_max=e_max, e_rand=e_rand, seeds=dict(seeds or {}))
        if e_opt is not None:
            if e_init <= 0 and e_opt < 0:
                r.accuracy = accuracy(e_init, e_opt)
            elif e_max is not None and e_max > e_opt:
                r.accuracy = normalized_accuracy(e_init, e_opt, e_max)
                r.normalized = True
        if e_rand is not None:
            r.relative_improvement = relative_improvement(e_init, e_rand) if e_rand != 0 or e_init < 0 else None
            if r.relative_improvement is None:
                r.energy_gap = e_rand - e_init
        if samples_random is not None and samples_init is not None:
            r.reduction_factor = reduction_factor(samples_random, samples_init)
            r.distinct_random = distinct(samples_random)
            r.distinct_init = distinct(samples_init)
            r.shots = sum(samples_init.values())
        return r

    def recompute_ok(self) -> bool:
        """Stored ratios equal a fresh computation from the stored raw values."""
        checks = []
        if self.accuracy is not None:
            want = (
                normalized_accuracy(self.e_init, self.e_opt, self.e_max)
                if self.normalized
                else accuracy(self.e_init, self.e_opt)
            )
            checks.append(want == self.accuracy)
        if self.relative_improvement is not None:
            checks.append(self.e_init / self.e_rand == self.relative_improvement)
        if self.reduction_factor is not None:
            checks.append(self.distinct_random / self.distinct_init == self.reduction_factor)
        return all(checks)

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, d: Mapping) -> "MetricsReport":
        return cls(**d)


CSV_FIELDS = [
    "e_init",
    "e_opt",
    "e_rand",
    "accuracy",
    "normalized",
    "relative_improvement",
    "energy_gap",
    "distinct_random",
    "distinct_init",
    "reduction_factor",
    "shots",
]


def reports_to_csv(rows: list[tuple[str, MetricsReport]]) -> str:
    """One CSV line per ``(label, report)``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label"] + CSV_FIELDS)
    for label, r in rows:
        d = r.to_json()
        w.writerow([label] + ["" if d[k] is None else d[k] for k in CSV_FIELDS])
    return buf.getvalue()


def geometric_mean(values) -> float:
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0 or np.any(v <= 0):
        raise ValueError("geometric mean needs positive values")
    return float(np.exp(np.log(v).mean()))
