"""FAR/FRR/EER, ROC sweeps and the enrollment-size and population-size
protocols.

Protocol input is a list of :class:`Sample` (one per image) in capture
order. Images are grouped by (subject, hand type); the first K images of
a group are enrolled and the last one is the test probe, so K=1 and K=2
runs share their probes.
"""

from __future__ import annotations

import csv
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InsufficientSamplesError, ParameterError
from .matching import Probe, Template, TemplateDB, identify
from .normalize import HandType

PARTITIONS = ("Left", "Right", "Combined")
RESULT_HEADER = ("partition", "K", "population", "threshold", "rate")
ROC_HEADER = ("threshold", "far", "frr")
ERROR_MARKER = "error"


class ScoreSample(NamedTuple):
    score: float
    genuine: bool


@dataclass(frozen=True)
class RatePoint:
    threshold: float
    far: float
    frr: float


def _split(samples: Sequence[ScoreSample]) -> tuple[np.ndarray, np.ndarray]:
    gen = np.array([s.score for s in samples if s.genuine], dtype=float)
    imp = np.array([s.score for s in samples if not s.genuine], dtype=float)
    if len(gen) == 0 or len(imp) == 0:
        raise InsufficientSamplesError(
            f"need genuine and impostor scores, got {len(gen)} genuine and {len(imp)} impostor"
        )
    if np.any(gen < 0) or np.any(imp < 0):
        raise ParameterError("scores must be non-negative")
    return gen, imp


def rates_at(samples: Sequence[ScoreSample], threshold: float) -> RatePoint:
    """FAR = impostors accepted (score <= t); FRR = genuines rejected (score > t)."""
    gen, imp = _split(samples)
    return RatePoint(float(threshold), float(np.mean(imp <= threshold)), float(np.mean(gen > threshold)))


def sweep(samples: Sequence[ScoreSample], thresholds) -> list[RatePoint]:
    gen, imp = _split(samples)
    t = np.asarray(thresholds, dtype=float)
    gen_sorted, imp_sorted = np.sort(gen), np.sort(imp)
    far = np.searchsorted(imp_sorted, t, side="right") / len(imp)
    frr = (len(gen) - np.searchsorted(gen_sorted, t, side="right")) / len(gen)
    return [RatePoint(float(a), float(b), float(c)) for a, b, c in zip(t, far, frr)]


def roc(samples: Sequence[ScoreSample], points: int = 100) -> list[RatePoint]:
    """Evenly spaced sweep from 0 to the largest score."""
    if points < 2:
        raise ParameterError("an ROC sweep needs at least 2 points")
    gen, imp = _split(samples)
    top = float(max(gen.max(), imp.max()))
    return sweep(samples, np.linspace(0.0, top, points))


def eer(samples: Sequence[ScoreSample]) -> tuple[float, float]:
    """Equal error operating point over the distinct observed scores.

    Returns ``(threshold, (FAR + FRR) / 2)`` at the threshold minimising
    ``|FAR - FRR|``; ties go to the smallest threshold.
    """
    gen, imp = _split(samples)
    candidates = np.unique(np.concatenate([gen, imp]))
    best = None
    for p in sweep(samples, candidates):
        gap = abs(p.far - p.frr)
        if best is None or gap < best[0]:
            best = (gap, p)
    p = best[1]
    return p.threshold, (p.far + p.frr) / 2.0


# ------------------------------------------------------------- protocols


class Sample(NamedTuple):
    """One processed image: its label, detected hand type and features."""

    subject_id: str
    hand_type: HandType
    features: np.ndarray


@dataclass(frozen=True)
class ProtocolResult:
    partition: str
    k: int
    population: int
    threshold: float | None
    rate: float | None
    error: str | None = None

    def row(self) -> list[str]:
        if self.error is not None:
            return [self.partition, str(self.k), str(self.population), ERROR_MARKER, ERROR_MARKER]
        return [self.partition, str(self.k), str(self.population), f"{self.threshold:.6f}", f"{self.rate:.2f}"]


def partition_name(partition) -> str:
    name = getattr(partition, "value", partition)
    for p in PARTITIONS:
        if p.lower() == str(name).lower():
            return p
    raise ParameterError(f"unknown partition {partition!r}; expected one of {PARTITIONS}")


def group_samples(samples: Sequence[Sample], partition="Combined") -> "OrderedDict[tuple, list[Sample]]":
    part = partition_name(partition)
    groups: OrderedDict[tuple, list[Sample]] = OrderedDict()
    for s in samples:
        if part != "Combined" and s.hand_type.value != part:
            continue
        groups.setdefault((s.subject_id, s.hand_type), []).append(s)
    return groups


def split_enrollment(samples: Sequence[Sample], k: int, partition="Combined") -> tuple[TemplateDB, list[Probe]]:
    """First ``k`` images of each group enrolled, the last one probed."""
    if k < 1:
        raise ParameterError(f"enrollment size K must be >= 1, got {k}")
    groups = group_samples(samples, partition)
    if not groups:
        raise InsufficientSamplesError(f"no {partition_name(partition)} images to evaluate")
    templates, probes = [], []
    for (sid, hand), items in groups.items():
        if len(items) < k + 1:
            raise InsufficientSamplesError(
                f"subject {sid} ({hand.value}) has {len(items)} images; K={k} needs {k + 1}"
            )
        templates += [Template(sid, hand, np.asarray(s.features, float)) for s in items[:k]]
        last = items[-1]
        probes.append(Probe(sid, hand, np.asarray(last.features, float)))
    return TemplateDB(tuple(templates), k), probes


def _gate(partition: str, probe: Probe):
    return None if partition == "Combined" else probe.hand_type


def table2_protocol(samples: Sequence[Sample], k: int, partition="Combined",
                    distance: str = "l1") -> ProtocolResult:
    """Recognition rate and minimum threshold for one (K, partition) cell.

    The threshold is the smallest genuine score that still accepts every
    correctly identified probe, i.e. the smallest grid value reaching the
    best achievable rate.
    """
    part = partition_name(partition)
    db, probes = split_enrollment(samples, k, part)
    correct = []
    for p in probes:
        res = identify(db, p.features, _gate(part, p), distance=distance)
        if res.best_subject == p.subject_id:
            correct.append(res.score)
    threshold = max(correct) if correct else 0.0
    rate = 100.0 * len(correct) / len(probes)
    return ProtocolResult(part, k, len(probes), threshold, rate)


def score_samples(samples: Sequence[Sample], k: int, partition="Combined",
                  distance: str = "l1") -> list[ScoreSample]:
    """Genuine and impostor scores of every held-out probe within its partition."""
    part = partition_name(partition)
    db, probes = split_enrollment(samples, k, part)
    out = []
    for p in probes:
        scores = identify(db, p.features, _gate(part, p), distance=distance).per_subject_scores
        for sid in sorted(scores):
            out.append(ScoreSample(scores[sid], sid == p.subject_id))
    return out


def population_sweep(samples: Sequence[Sample], sizes: Sequence[int], ks: Sequence[int] = (1, 2),
                     partition="Combined", seed: int | None = None, strict: bool = True,
                     distance: str = "l1") -> list[ProtocolResult]:
    """Run the protocol on growing subject subsets.

    Subjects are taken in sorted-id order, or in a seeded random order
    when ``seed`` is given. With ``strict=False`` a size beyond the
    available population yields an error row instead of raising.
    """
    part = partition_name(partition)
    subjects = sorted({s.subject_id for s in samples})
    if seed is not None:
        order = np.random.default_rng(seed).permutation(len(subjects))
        subjects = [subjects[i] for i in order]
    out = []
    for size in sizes:
        if size < 1 or size > len(subjects):
            msg = f"population {size} outside 1..{len(subjects)}"
            if strict:
                raise InsufficientSamplesError(msg)
            out += [ProtocolResult(part, k, size, None, None, msg) for k in ks]
            continue
        keep = set(subjects[:size])
        subset = [s for s in samples if s.subject_id in keep]
        out += [table2_protocol(subset, k, part, distance) for k in ks]
    return out


# ------------------------------------------------------------- CSV output


def write_results_csv(path, results: Sequence[ProtocolResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for r in results:
            w.writerow(r.row())


def write_roc_csv(path, points: Sequence[RatePoint]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROC_HEADER)
        for p in points:
            w.writerow([f"{p.threshold:.6f}", f"{p.far:.6f}", f"{p.frr:.6f}"])


def read_results_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in ("threshold", "rate"):
            row[key] = math.nan if row[key] == ERROR_MARKER else float(row[key])
        row["K"] = int(row["K"])
        row["population"] = int(row["population"])
    return rows
