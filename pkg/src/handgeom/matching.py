"""Template database and minimum-distance matching.

A probe is compared with every enrolled row by the per-element absolute
difference summed over the 26 features (L1). Rows are grouped into
classes (subject, hand type); a class scores the mean of its K row
distances and the lowest class wins. Verification thresholds the
claimed subject's score.
"""

from __future__ import annotations

import enum
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    DatabaseFormatError,
    DimensionError,
    DuplicateIdentityError,
    EmptyDatabaseError,
    ParameterError,
    UnknownIdentityError,
)
from .features import N_FEATURES, format_row
from .normalize import HandType

DB_MAGIC = "handgeom-db"
DB_VERSION = "v1"
DISTANCES = ("l1", "l2")


class Decision(str, enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"


class Template(NamedTuple):
    subject_id: str
    hand_type: HandType
    features: np.ndarray


def _vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (N_FEATURES,):
        raise DimensionError(f"feature vectors have {N_FEATURES} entries, got shape {v.shape}")
    return v


def row_distance(a, b, distance: str = "l1") -> float:
    """Sum over features of ``sqrt((a_j - b_j)**2)``, i.e. the L1 distance.

    ``distance="l2"`` switches to the Euclidean norm for comparisons.
    """
    a, b = _vector(a), _vector(b)
    if distance == "l1":
        return math.fsum(abs(x - y) for x, y in zip(a.tolist(), b.tolist()))
    if distance == "l2":
        return math.sqrt(math.fsum((x - y) ** 2 for x, y in zip(a.tolist(), b.tolist())))
    raise ParameterError(f"unknown distance {distance!r}; expected one of {DISTANCES}")


def _row_sums(matrix: np.ndarray, probe: np.ndarray, distance: str) -> np.ndarray:
    diff = matrix - probe[None, :]
    if distance == "l1":
        return np.abs(diff).sum(axis=1)
    if distance == "l2":
        return np.sqrt((diff * diff).sum(axis=1))
    raise ParameterError(f"unknown distance {distance!r}; expected one of {DISTANCES}")


@dataclass(frozen=True)
class TemplateDB:
    """Immutable enrollment matrix: K rows per enrolled (subject, hand)."""

    templates: tuple[Template, ...]
    k: int
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"enrollment size K must be >= 1, got {self.k}")
        rows = []
        for t in self.templates:
            if not isinstance(t.subject_id, str) or not t.subject_id or "," in t.subject_id:
                raise ParameterError(f"subject ids must be non-empty strings without commas: {t.subject_id!r}")
            rows.append(_vector(t.features))
        counts = Counter((t.subject_id, t.hand_type) for t in self.templates)
        bad = {key: n for key, n in counts.items() if n != self.k}
        if bad:
            (sid, hand), n = next(iter(bad.items()))
            raise DatabaseFormatError(f"subject {sid} ({hand.value}) has {n} rows, expected K={self.k}")
        matrix = np.vstack(rows) if rows else np.empty((0, N_FEATURES))
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def empty(cls, k: int) -> "TemplateDB":
        return cls((), k)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple], k: int) -> "TemplateDB":
        return cls(tuple(Template(s, HandType.parse(h), _vector(v)) for s, h, v in rows), k)

    def __len__(self) -> int:
        return len(self.templates)

    @property
    def subjects(self) -> list[str]:
        return sorted({t.subject_id for t in self.templates})

    def __contains__(self, subject_id) -> bool:
        return any(t.subject_id == subject_id for t in self.templates)

    def extend(self, templates: Sequence[Template]) -> "TemplateDB":
        """New database with ``templates`` appended; their subjects must be new."""
        clash = sorted({t.subject_id for t in templates} & set(self.subjects))
        if clash:
            raise DuplicateIdentityError(f"subject {clash[0]} is already enrolled")
        return TemplateDB(self.templates + tuple(templates), self.k)

    def select(self, hand_type: HandType | None = None, subjects=None) -> "TemplateDB":
        keep = set(subjects) if subjects is not None else None
        rows = tuple(
            t for t in self.templates
            if (hand_type is None or t.hand_type is hand_type) and (keep is None or t.subject_id in keep)
        )
        return TemplateDB(rows, self.k)

    # ------------------------------------------------------------ file I/O

    def dumps(self) -> str:
        lines = [f"{DB_MAGIC} {DB_VERSION} n={N_FEATURES} K={self.k}"]
        lines += [format_row(t.subject_id, t.hand_type, t.features) for t in self.templates]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "TemplateDB":
        lines = text.splitlines()
        if not lines:
            raise DatabaseFormatError("database file is empty")
        head = lines[0].split()
        if len(head) != 4 or head[0] != DB_MAGIC or head[1] != DB_VERSION:
            raise DatabaseFormatError(f"bad database header {lines[0]!r}")
        try:
            n = int(head[2].removeprefix("n=")) if head[2].startswith("n=") else None
            k = int(head[3].removeprefix("K=")) if head[3].startswith("K=") else None
        except ValueError:
            raise DatabaseFormatError(f"bad database header {lines[0]!r}") from None
        if n is None or k is None:
            raise DatabaseFormatError(f"bad database header {lines[0]!r}")
        if n != N_FEATURES:
            raise DatabaseFormatError(f"database holds n={n} features, expected {N_FEATURES}")
        templates = []
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != N_FEATURES + 2:
                raise DatabaseFormatError(f"line {lineno}: expected {N_FEATURES + 2} fields, got {len(parts)}")
            try:
                hand = HandType.parse(parts[1])
                vec = np.array([float(x) for x in parts[2:]])
            except ValueError as exc:
                raise DatabaseFormatError(f"line {lineno}: {exc}") from None
            if not np.all(np.isfinite(vec)):
                raise DatabaseFormatError(f"line {lineno}: non-finite feature value")
            templates.append(Template(parts[0], hand, vec))
        try:
            return cls(tuple(templates), k)
        except (ParameterError, DimensionError) as exc:
            raise DatabaseFormatError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "TemplateDB":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    def save(self, path) -> None:
        """Write atomically: a temporary file in the same directory, then rename."""
        path = os.fspath(path)
        tmp = f"{path}.tmp{os.getpid()}"
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(self.dumps())
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)


@dataclass(frozen=True)
class MatchResult:
    best_subject: str
    score: float
    per_subject_scores: dict
    decision: Decision | None = None

    @property
    def score_per_feature(self) -> float:
        return self.score / N_FEATURES


def subject_scores(db: TemplateDB, probe, hand_type: HandType | None = None,
                   distance: str = "l1") -> dict[str, float]:
    """Mean row distance per subject (over the rows of ``hand_type`` if
    given). A subject enrolled with both hands keeps its better hand."""
    probe = _vector(probe)
    if len(db) == 0:
        raise EmptyDatabaseError("template database is empty")
    sums = _row_sums(db.matrix, probe, distance)
    totals: dict[tuple, float] = {}
    for t, s in zip(db.templates, sums.tolist()):
        if hand_type is not None and t.hand_type is not hand_type:
            continue
        key = (t.subject_id, t.hand_type)
        totals[key] = totals.get(key, 0.0) + s
    if not totals:
        raise EmptyDatabaseError(f"no enrolled {hand_type.value} hands to search")
    scores: dict[str, float] = {}
    for (sid, _), total in totals.items():
        mean = total / db.k
        scores[sid] = min(mean, scores.get(sid, math.inf))
    return scores


def identify(db: TemplateDB, probe, hand_type: HandType | None = None,
             threshold: float | None = None, distance: str = "l1") -> MatchResult:
    """Closest enrolled subject. ``hand_type`` restricts the search to
    that partition; ``None`` pools both. Ties go to the smallest id."""
    scores = subject_scores(db, probe, hand_type, distance)
    best = min(scores, key=lambda sid: (scores[sid], sid))
    score = scores[best]
    decision = None if threshold is None else decide(score, threshold)
    return MatchResult(best, score, scores, decision)


def decide(score: float, threshold: float) -> Decision:
    if threshold < 0:
        raise ParameterError(f"threshold must be >= 0, got {threshold}")
    return Decision.ACCEPT if score <= threshold else Decision.REJECT


def verify(db: TemplateDB, claimed: str, probe, threshold: float,
           hand_type: HandType | None = None, distance: str = "l1") -> tuple[Decision, float]:
    """One-to-one check of ``claimed``: its mean row distance against ``threshold``."""
    if claimed not in db:
        raise UnknownIdentityError(f"subject {claimed!r} is not enrolled")
    own = db.select(subjects=[claimed])
    if hand_type is not None and len(own.select(hand_type)) > 0:
        own = own.select(hand_type)
    score = subject_scores(own, probe, None, distance)[claimed]
    return decide(score, threshold), score


class Probe(NamedTuple):
    subject_id: str
    hand_type: HandType
    features: np.ndarray


def recognition_rate(db: TemplateDB, probes: Sequence[Probe], threshold: float,
                     gate_hand_type: bool = True, distance: str = "l1") -> float:
    """Percentage of probes identified as their own subject with a score
    within ``threshold``."""
    if len(probes) == 0:
        raise ParameterError("recognition rate needs at least one probe")
    for p in probes:
        if p.subject_id not in db:
            raise UnknownIdentityError(f"probe subject {p.subject_id!r} is not enrolled")
    hits = 0
    for p in probes:
        res = identify(db, p.features, p.hand_type if gate_hand_type else None, threshold, distance)
        hits += res.best_subject == p.subject_id and res.decision is Decision.ACCEPT
    return 100.0 * hits / len(probes)
