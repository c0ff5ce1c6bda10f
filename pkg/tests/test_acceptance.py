"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL``/``SKIPPED`` line; the lines are
written with output capture disabled so they show in a plain ``pytest -v``
log.
"""

from __future__ import annotations

import math
import os
import time
import warnings
from pathlib import Path

import numpy as np
import oracles
import pytest

from handgeom import netpbm, synth
from handgeom.errors import InvalidSpecError
from handgeom.evaluation import Sample, ScoreSample, eer, population_sweep, sweep, table2_protocol
from handgeom.features import extract_features
from handgeom.landmarks import extract_landmarks
from handgeom.matching import Template, TemplateDB, identify, row_distance
from handgeom.normalize import HandType, normalize
from handgeom.pipeline import process, process_file

POSES = (0, 90, 180, 270)
DATASET_ENV = "HANDGEOM_DATASET"


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool | None, detail: str) -> None:
        status = "SKIPPED" if ok is None else ("PASS" if ok else "FAIL")
        with capsys.disabled():
            print(f"\n[criterion {number}] {status}: {detail}")

    return emit


def _valid_hand(rng, hand_type, pose, seed):
    while True:
        spec = synth.random_spec(rng, hand_type, pose=pose, seed=seed)
        try:
            return synth.generate(spec)
        except InvalidSpecError:
            continue


@pytest.fixture(scope="module")
def oracle_corpus():
    """100 seeded hands over both hand types and all four poses, processed once."""
    rng = np.random.default_rng(20241017)
    start = time.perf_counter()
    hands, results = [], []
    for i in range(100):
        hand_type = HandType.LEFT if i % 2 == 0 else HandType.RIGHT
        hand = _valid_hand(rng, hand_type, POSES[(i // 2) % 4], i)
        nh = normalize(hand.image)
        lm = extract_landmarks(nh)
        hands.append(hand)
        results.append((nh, lm, extract_features(nh, lm)))
    return hands, results, time.perf_counter() - start


def test_criterion_1_landmark_oracle(oracle_corpus, report):
    hands, results, elapsed = oracle_corpus
    within = sum(
        bool(np.hypot(*(lm.points() - h.truth.landmarks.points()).T).max() <= 5.0)
        for h, (_, lm, _) in zip(hands, results)
    )
    typed = sum(nh.hand_type is h.spec.hand_type for h, (nh, _, _) in zip(hands, results))
    ok = within >= 95 and typed == 100 and elapsed < 60.0
    report(1, ok, f"{within}/100 hands with every landmark within 5 px, hand type {typed}/100, {elapsed:.1f} s")
    assert within >= 95
    assert typed == 100
    assert elapsed < 60.0


def test_criterion_2_feature_oracle(oracle_corpus, report):
    hands, results, _ = oracle_corpus
    err = np.array([np.abs(f - h.truth.features) for h, (_, _, f) in zip(hands, results)])
    fraction = float((err <= 5.0).mean())
    mirror_ok = 0
    for h, (_, _, f) in zip(hands, results):
        mirrored = extract_features(normalize(h.image[:, ::-1]))
        mirror_ok += bool(np.abs(mirrored - f).max() <= 1.0)
    ok = fraction >= 0.95 and mirror_ok == 100
    report(2, ok, f"{100 * fraction:.2f}% of feature pairs within 5 px, mirror test {mirror_ok}/100 hands within 1 px")
    assert fraction >= 0.95
    assert mirror_ok == 100


def test_criterion_3_matching_oracle(report):
    rng = np.random.default_rng(3)
    agree = 0
    for trial in range(50):
        n_subjects = int(rng.integers(2, 21))
        k = int(rng.integers(1, 4))
        rows = [
            (f"u{s:02d}", rng.uniform(0.0, 300.0, 26))
            for s in range(n_subjects)
            for _ in range(k)
        ]
        db = TemplateDB(tuple(Template(sid, HandType.LEFT, v) for sid, v in rows), k)
        probe = rng.uniform(0.0, 300.0, 26)
        best, score, _ = oracles.mean_l1_identify(rows, probe)
        res = identify(db, probe)
        agree += res.best_subject == best and math.isclose(res.score, score, rel_tol=1e-9, abs_tol=0.0)
    report(3, agree == 50, f"identify matches the brute-force mean-L1 oracle on {agree}/50 databases")
    assert agree == 50


def _score_set(rng):
    n_gen, n_imp = int(rng.integers(5, 60)), int(rng.integers(5, 200))
    gen = np.abs(rng.normal(rng.uniform(0, 20), rng.uniform(1, 10), n_gen))
    imp = np.abs(rng.normal(rng.uniform(10, 60), rng.uniform(1, 20), n_imp))
    if rng.random() < 0.5:  # coarse scores produce ties
        gen, imp = np.round(gen), np.round(imp)
    return [ScoreSample(float(s), True) for s in gen] + [ScoreSample(float(s), False) for s in imp]


def test_criterion_4_metric_and_monotonicity(report):
    rng = np.random.default_rng(4)
    axioms = 0
    for _ in range(1000):
        a, b, c = rng.uniform(0.0, 300.0, (3, 26))
        ab, ba = row_distance(a, b), row_distance(b, a)
        ok = (
            row_distance(a, a) == 0.0
            and ab == ba
            and ab > 0.0
            and row_distance(a, c) <= ab + row_distance(b, c)
        )
        axioms += bool(ok)

    monotone, sets = 0, 0
    for _ in range(50):
        samples = _score_set(rng)
        top = max(s.score for s in samples)
        points = sweep(samples, np.linspace(0.0, top, 100))
        far = [p.far for p in points]
        frr = [p.frr for p in points]
        sets += 1
        monotone += bool(np.all(np.diff(far) >= 0) and np.all(np.diff(frr) <= 0))

    eer_ok = 0
    for _ in range(20):
        samples = _score_set(rng)
        gen = [s.score for s in samples if s.genuine]
        imp = [s.score for s in samples if not s.genuine]
        t, rate = eer(samples)
        t_ref, rate_ref = oracles.eer_exhaustive(gen, imp)
        eer_ok += bool(t == t_ref and rate == rate_ref)

    ok = axioms == 1000 and monotone == sets and eer_ok == 20
    report(4, ok, f"metric axioms {axioms}/1000, monotone sweeps {monotone}/{sets}, EER matches oracle {eer_ok}/20")
    assert axioms == 1000
    assert monotone == sets
    assert eer_ok == 20


SIZES = (50, 100, 150, 200, 253)
SUBJECTS = 253
IMAGES = 3
GAP = 8.0
NOISE = 2.0
RUNS = 20


def _population_samples(noise: float, seed: int) -> list[Sample]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pop = synth.generate_population(SUBJECTS, IMAGES, intra_noise=noise, inter_gap=GAP, seed=seed)
    out = []
    for item in pop:
        p = process(item.image)
        out.append(Sample(item.subject_id, p.hand.hand_type, p.features))
    return out


def _declines(rates) -> bool:
    """Overall downward trend: the largest population does no better than
    the smallest, and the least-squares slope over all sizes is not positive."""
    slope = np.polyfit(np.asarray(SIZES, float), np.asarray(rates, float), 1)[0]
    return rates[-1] <= rates[0] and slope <= 0.0


def test_criterion_5_protocol_trends(report):
    separable = table2_protocol(_population_samples(0.0, 999), 2, "Combined")

    k_wins = trend = stepwise = 0
    for run in range(RUNS):
        results = population_sweep(_population_samples(NOISE, 1000 + run), SIZES, ks=(1, 2))
        r1 = [r.rate for r in results if r.k == 1]
        r2 = [r.rate for r in results if r.k == 2]
        k_wins += r2[-1] >= r1[-1]
        trend += _declines(r1) and _declines(r2)
        stepwise += all(b <= a for r in (r1, r2) for a, b in zip(r, r[1:]))

    ok = separable.rate == 100.0 and k_wins >= 15 and trend >= 15
    report(
        5,
        ok,
        f"separable K=2 Combined {separable.rate:.2f}%; at noise {NOISE} px: K=2 >= K=1 in {k_wins}/{RUNS}, "
        f"declining with population in {trend}/{RUNS} (step by step in {stepwise}/{RUNS})",
    )
    assert separable.rate == 100.0
    assert k_wins >= 15
    assert trend >= 15


def test_criterion_6_dataset(report):
    root = os.environ.get(DATASET_ENV)
    manifest = Path(root) / "manifest.csv" if root else None
    if manifest is None or not manifest.exists():
        report(6, None, f"original scans not available (set {DATASET_ENV} to a directory with manifest.csv)")
        pytest.skip("original dataset absent")
    from handgeom.cli import read_manifest

    samples = []
    for path, sid in read_manifest(manifest):
        p = process_file(path)
        samples.append(Sample(sid, p.hand.hand_type, p.features))
    result = table2_protocol(samples, 2, "Combined")
    ok = result.rate >= 94.0
    report(6, ok, f"K=2 Combined recognition {result.rate:.2f}% on {result.population} probes (target >= 94)")
    assert ok


def test_criterion_7_performance(tmp_path, report):
    hand = synth.generate(synth.HandSpec(seed=7, canvas=(383, 526)))
    assert hand.image.shape == (526, 383)
    path = tmp_path / "scan.pgm"
    netpbm.write(path, hand.image)
    process_file(path)  # warm-up: imports and allocator
    timings = []
    for _ in range(5):
        start = time.perf_counter()
        result = process_file(path)
        timings.append(time.perf_counter() - start)
    worst = max(timings)
    report(7, worst < 1.0, f"383x526 scan load to features in {1000 * worst:.0f} ms (worst of 5)")
    assert result.features.shape == (26,)
    assert worst < 1.0
