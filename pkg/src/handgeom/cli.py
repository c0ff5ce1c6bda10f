"""``handgeom`` command line: enroll, verify, identify, eval, synth, landmarks.

Exit status: 0 success or Accept, 1 Reject, 2 operational error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import warnings
from collections import Counter
from pathlib import Path

import numpy as np
from filelock import FileLock

from . import evaluation, netpbm, synth
from .errors import HandGeomError
from .features import N_FEATURES, quantize
from .landmarks import annotate
from .matching import DISTANCES, Decision, Template, TemplateDB, identify, verify
from .normalize import HandType
from .pipeline import process, process_file

EXIT_OK, EXIT_REJECT, EXIT_ERROR = 0, 1, 2
IMAGE_SUFFIXES = {".pgm", ".ppm", ".pnm"}
DEFAULT_SIZES = (50, 100, 150, 200)
SEED_ENV = "HANDGEOM_SEED"


class UsageError(Exception):
    pass


def _threshold(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"threshold must be >= 0, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def _sizes(text: str) -> list[int]:
    return [_positive(s) for s in text.split(",") if s.strip()]


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None or not env.strip():
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


# ------------------------------------------------------------- inputs


def read_manifest(path) -> list[tuple[Path, str]]:
    """``path,subject_id`` rows; relative paths resolve against the manifest."""
    base = Path(path).parent
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and [c.strip() for c in row] == ["path", "subject_id"]:
                continue
            if len(row) != 2 or not row[1].strip():
                raise UsageError(f"{path}:{lineno}: expected 'path,subject_id'")
            p = Path(row[0].strip())
            out.append((p if p.is_absolute() else base / p, row[1].strip()))
    return out


def _images_in(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def collect_inputs(paths, subject: str | None = None) -> list[tuple[Path, str]]:
    """Labeled image list from manifests, directories or image files.

    A directory holding images is one subject named after it; a directory
    of directories holds one subject per subdirectory. Bare image files
    need ``--subject``.
    """
    out = []
    for raw in paths:
        p = Path(raw)
        if p.suffix.lower() == ".csv":
            out += read_manifest(p)
        elif p.is_dir():
            direct = _images_in(p)
            if direct:
                out += [(img, subject or p.name) for img in direct]
            for sub in sorted(d for d in p.iterdir() if d.is_dir()):
                out += [(img, sub.name) for img in _images_in(sub)]
        elif p.suffix.lower() in IMAGE_SUFFIXES or p.is_file():
            if subject is None:
                raise UsageError(f"{p}: image files need --subject (or use a manifest)")
            out.append((p, subject))
        else:
            raise UsageError(f"{p}: no such file or directory")
    if not out:
        raise UsageError("no input images")
    return out


def _process_all(items):
    """Run the pipeline over every image; the first failure aborts the batch."""
    done = []
    for path, sid in items:
        try:
            result = process_file(path)
        except (HandGeomError, OSError) as exc:
            raise UsageError(f"{path}: {exc}") from None
        done.append((path, sid, result))
    return done


# ------------------------------------------------------------- commands


def cmd_enroll(args) -> int:
    items = collect_inputs(args.inputs, args.subject)
    processed = _process_all(items)
    templates = [Template(sid, r.hand.hand_type, quantize(r.features)) for _, sid, r in processed]
    for path, sid, r in processed:
        print(f"{path} {sid} {r.hand.hand_type.value}")

    counts = Counter((t.subject_id, t.hand_type) for t in templates)
    db_path = Path(args.db)
    with FileLock(str(db_path) + ".lock"):
        current = TemplateDB.load(db_path) if db_path.exists() else None
        k = args.enroll_size or (current.k if current is not None else None)
        if k is None:
            sizes = set(counts.values())
            if len(sizes) != 1:
                raise UsageError(f"subjects have differing image counts {sorted(sizes)}; pass --enroll-size")
            k = sizes.pop()
        if current is not None and current.k != k:
            raise UsageError(f"database holds K={current.k} images per hand, batch uses K={k}")
        short = [(sid, h.value, n) for (sid, h), n in counts.items() if n != k]
        if short:
            sid, hand, n = short[0]
            raise UsageError(f"subject {sid} ({hand}) has {n} images, K={k} required")
        db = (current or TemplateDB.empty(k)).extend(templates)
        db.save(db_path)
    print(f"enrolled {len(counts)} hands ({len(templates)} images) into {db_path}; K={k}, {len(db)} rows")
    return EXIT_OK


def _load_db(path) -> TemplateDB:
    if not Path(path).exists():
        raise UsageError(f"database {path} does not exist")
    return TemplateDB.load(path)


def cmd_verify(args) -> int:
    db = _load_db(args.db)
    result = process_file(args.image)
    hand = result.hand.hand_type
    decision, score = verify(db, args.claim, quantize(result.features), args.threshold, hand, args.distance)
    print(f"{args.claim} {score:.6f} {decision.value} {hand.value}")
    return EXIT_OK if decision is Decision.ACCEPT else EXIT_REJECT


def _search_partition(partition: str | None, detected: HandType) -> HandType | None:
    if partition is None:
        return detected
    if partition == "combined":
        return None
    return HandType.parse(partition)


def cmd_identify(args) -> int:
    db = _load_db(args.db)
    result = process_file(args.image)
    hand = result.hand.hand_type
    gate = _search_partition(args.partition, hand)
    match = identify(db, quantize(result.features), gate, args.threshold, args.distance)
    decision = match.decision.value if match.decision is not None else "-"
    print(f"{match.best_subject} {match.score:.6f} {decision} {hand.value}")
    return EXIT_REJECT if match.decision is Decision.REJECT else EXIT_OK


def _eval_samples(args, seed: int) -> list[evaluation.Sample]:
    if args.inputs:
        items = collect_inputs(args.inputs, None)
        return [evaluation.Sample(sid, r.hand.hand_type, r.features) for _, sid, r in _process_all(items)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pop = synth.generate_population(
            args.synth_subjects, args.synth_images, args.synth_noise, args.synth_gap, seed
        )
    samples = []
    for li in pop:
        r = process(li.image)
        samples.append(evaluation.Sample(li.subject_id, r.hand.hand_type, r.features))
    return samples


def cmd_eval(args) -> int:
    seed = resolve_seed(args.seed)
    samples = _eval_samples(args, seed)
    k_max = args.enroll_size
    ks = tuple(range(1, k_max + 1))
    partition = evaluation.partition_name(args.partition)
    main_cell = evaluation.table2_protocol(samples, k_max, partition, args.distance)

    table2 = []
    for part in evaluation.PARTITIONS:
        for k in ks:
            try:
                table2.append(evaluation.table2_protocol(samples, k, part, args.distance))
            except HandGeomError as exc:
                table2.append(evaluation.ProtocolResult(part, k, 0, None, None, str(exc)))
    groups = evaluation.group_samples(samples, partition)
    partition_samples = [s for group in groups.values() for s in group]
    population = len({sid for sid, _ in groups})
    sizes = args.sizes if args.sizes else [n for n in DEFAULT_SIZES if n < population] + [population]
    table3 = evaluation.population_sweep(
        partition_samples, sizes, ks, partition, seed if args.shuffle else None, strict=False,
        distance=args.distance,
    )
    roc = evaluation.roc(evaluation.score_samples(samples, k_max, partition, args.distance), args.roc_points)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    evaluation.write_results_csv(out / "table2.csv", table2)
    evaluation.write_results_csv(out / "table3.csv", table3)
    evaluation.write_roc_csv(out / "roc.csv", roc)
    print(f"{partition} K={k_max}: recognition {main_cell.rate:.2f}% at threshold {main_cell.threshold:.6f} "
          f"({main_cell.threshold / N_FEATURES:.6f} per feature, {main_cell.population} probes); reports in {out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    seed = resolve_seed(args.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pop = synth.generate_population(args.subjects, args.images, args.noise, args.gap, seed, with_truth=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    counter: Counter = Counter()
    rows = []
    for li in pop:
        folder = out / li.subject_id
        folder.mkdir(exist_ok=True)
        stem = folder / f"{li.subject_id}_{counter[li.subject_id]}"
        counter[li.subject_id] += 1
        netpbm.write(stem.with_suffix(".pgm"), li.image)
        stem.with_suffix(".txt").write_text(li.truth.sidecar(), encoding="utf-8")
        rows.append((stem.with_suffix(".pgm").relative_to(out).as_posix(), li.subject_id))
    with open(out / "manifest.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "subject_id"])
        w.writerows(rows)
    print(f"wrote {len(pop)} images of {args.subjects} subjects to {out}")
    return EXIT_OK


def cmd_landmarks(args) -> int:
    result = process_file(args.image)
    text = result.landmarks.to_text()
    if args.out is None:
        sys.stdout.write(text)
        return EXIT_OK
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.txt").write_text(text, encoding="utf-8")
    netpbm.write(f"{prefix}.pgm", annotate(result.hand.mask, result.landmarks))
    netpbm.write(f"{prefix}_normalized.pgm", np.where(result.hand.mask > 0, 255, 0).astype(np.uint8))
    Path(f"{prefix}_normalized.txt").write_text(result.hand.sidecar(), encoding="utf-8")
    print(f"{result.hand.hand_type.value}: landmarks written to {prefix}.txt and {prefix}.pgm")
    return EXIT_OK


# ------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="handgeom", description="Hand-geometry enrollment, matching and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def distance(p):
        p.add_argument("--distance", choices=DISTANCES, default="l1", help="row distance (default l1)")

    p = sub.add_parser("enroll", help="add subjects to a template database")
    p.add_argument("inputs", nargs="+", help="manifest CSV, subject directories or image files")
    p.add_argument("--db", required=True)
    p.add_argument("--enroll-size", type=_positive, help="images per subject and hand (K)")
    p.add_argument("--subject", help="subject id for bare image files")
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("verify", help="one-to-one check of a claimed identity")
    p.add_argument("image")
    p.add_argument("--claim", required=True, help="claimed subject id")
    p.add_argument("--db", required=True)
    p.add_argument("--threshold", type=_threshold, required=True)
    distance(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("identify", help="one-to-many search")
    p.add_argument("image")
    p.add_argument("--db", required=True)
    p.add_argument("--threshold", type=_threshold)
    p.add_argument("--partition", choices=("left", "right", "combined"),
                   help="search partition (default: the detected hand type)")
    distance(p)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("eval", help="enrollment-size and population-size protocols")
    p.add_argument("inputs", nargs="*", help="labeled corpus; omit to use a synthetic population")
    p.add_argument("--out", required=True, help="directory for table2.csv, table3.csv, roc.csv")
    p.add_argument("--enroll-size", type=_positive, default=2)
    p.add_argument("--partition", choices=("left", "right", "combined"), default="combined")
    p.add_argument("--sizes", type=_sizes, help="comma-separated population sizes")
    p.add_argument("--shuffle", action="store_true", help="seeded subject order for the population sweep")
    p.add_argument("--roc-points", type=_positive, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--synth-subjects", type=_positive, default=60)
    p.add_argument("--synth-images", type=_positive, default=3)
    p.add_argument("--synth-noise", type=float, default=0.0)
    p.add_argument("--synth-gap", type=float, default=8.0)
    distance(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="write a synthetic labeled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--subjects", type=_positive, default=10)
    p.add_argument("--images", type=_positive, default=3)
    p.add_argument("--noise", type=float, default=0.0, help="per-image parameter jitter, px")
    p.add_argument("--gap", type=float, default=8.0, help="minimum parameter distance between subjects, px")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("landmarks", help="debug dump of the normalized hand and its landmarks")
    p.add_argument("image")
    p.add_argument("--out", help="output prefix (default: print landmarks)")
    p.set_defaults(func=cmd_landmarks)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, HandGeomError, OSError, ValueError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"handgeom {args.command}: {message}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
