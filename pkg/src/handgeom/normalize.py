"""Canonical pose, wrist guillotine, reference point and hand type."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import imaging
from .errors import (
    AmbiguousHandTypeError,
    AmbiguousOrientationError,
    DegenerateHistogramError,
    MalformedSilhouetteError,
    NoHandError,
)

NORMALIZED_WIDTH = 200
NORMALIZED_HEIGHT = 300
GUILLOTINE_FRACTION = 0.10


class HandType(str, enum.Enum):
    LEFT = "Left"
    RIGHT = "Right"

    @classmethod
    def parse(cls, text: str) -> "HandType":
        for member in cls:
            if member.value.lower() == str(text).strip().lower():
                return member
        raise ValueError(f"unknown hand type {text!r}")

    def mirrored(self) -> "HandType":
        return HandType.RIGHT if self is HandType.LEFT else HandType.LEFT


@dataclass(frozen=True)
class NormalizedHand:
    mask: np.ndarray
    contour: np.ndarray
    reference_point: tuple[int, int]
    reference_row: int
    a: tuple[int, int]
    b: tuple[int, int]
    hand_type: HandType

    def sidecar(self) -> str:
        r, a, b = self.reference_point, self.a, self.b
        return (
            f"hand_type={self.hand_type.value}\n"
            f"R={r[0]},{r[1]}\n"
            f"A={a[0]},{a[1]}\n"
            f"B={b[0]},{b[1]}\n"
        )


def _bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if len(rows) == 0:
        raise NoHandError("mask is empty")
    return int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])


def _mean_runs(band: np.ndarray) -> float:
    starts = np.diff(np.pad(band.astype(np.int8), ((0, 0), (1, 0))), axis=1) == 1
    return float(starts.sum()) / max(len(band), 1)


def _orientation_key(mask: np.ndarray) -> tuple[float, float]:
    """(fingers-up score, mass-low score) of an already cropped mask."""
    h = mask.shape[0]
    band = max(1, h // 4)
    up = _mean_runs(mask[:band]) - _mean_runs(mask[-band:])
    rows = np.nonzero(mask)[0]
    low = (rows.mean() - (h - 1) / 2.0) / h
    return round(up, 9), round(float(low), 9)


def orient_upright(mask: np.ndarray) -> np.ndarray:
    """Rotate by a multiple of 90 degrees so the fingers point to row 0.

    Candidates are the rotations whose bounding box is at least as tall
    as it is wide. Among those the winner has the most fragmented top
    quarter relative to its bottom quarter (separate fingers above, one
    wrist run below); the vertical position of the mass centroid breaks
    remaining ties. An exact tie between candidates is ambiguous.
    """
    mask = np.asarray(mask) > 0
    top, bottom, left, right = _bbox(mask)
    crop = mask[top : bottom + 1, left : right + 1]
    scored = []
    for k in range(4):
        rotated = np.rot90(crop, -k)
        h, w = rotated.shape
        if h >= w:
            scored.append((_orientation_key(rotated), k))
    if not scored:
        raise AmbiguousOrientationError("no rotation yields a portrait bounding box")
    scored.sort(key=lambda item: item[0], reverse=True)
    if len(scored) > 1 and scored[0][0] == scored[1][0]:
        raise AmbiguousOrientationError("orientation cues tie between rotations")
    return np.rot90(mask, -scored[0][1]).astype(np.uint8)


def round_half_to_center(value: float, width: int) -> int:
    """Round to an integer column, sending .5 toward the image centre.

    Keeps the reference point mirror-symmetric: mirroring the mask
    mirrors the rounded column too.
    """
    lo = int(np.floor(value))
    if value == lo:
        return lo
    if value - lo != 0.5:
        return int(np.floor(value + 0.5))
    center = (width - 1) / 2.0
    return lo + 1 if value < center else lo


def place_reference(mask: np.ndarray, fraction: float = GUILLOTINE_FRACTION):
    """Cut the wrist region and place the reference line AB and point R.

    Returns ``(reference_row, a, b, r, guillotined_mask)``.
    """
    mask = np.asarray(mask) > 0
    top, bottom, _, _ = _bbox(mask)
    height = bottom - top + 1
    ref_row = bottom - int(np.floor(fraction * height + 0.5))
    cols = np.flatnonzero(mask[ref_row])
    if len(cols) == 0:
        raise MalformedSilhouetteError(f"reference row {ref_row} has no foreground")
    a = (ref_row, int(cols[0]))
    b = (ref_row, int(cols[-1]))
    r = (ref_row, round_half_to_center((a[1] + b[1]) / 2.0, mask.shape[1]))
    cut = mask.copy()
    cut[ref_row + 1 :] = False
    return ref_row, a, b, r, cut.astype(np.uint8)


def extreme_pixels(mask: np.ndarray, reference_row: int):
    """Leftmost (LM) and rightmost (RM) foreground pixels above the
    reference row; column ties go to the lowest pixel."""
    above = np.asarray(mask)[:reference_row] > 0
    rows, cols = np.nonzero(above)
    if len(rows) == 0:
        raise MalformedSilhouetteError("no foreground above the reference line")
    lm_col, rm_col = cols.min(), cols.max()
    lm = (int(rows[cols == lm_col].max()), int(lm_col))
    rm = (int(rows[cols == rm_col].max()), int(rm_col))
    return lm, rm


def detect_hand_type(mask: np.ndarray, r: tuple[int, int]) -> HandType:
    lm, rm = extreme_pixels(mask, r[0])
    if lm[0] == rm[0]:
        raise AmbiguousHandTypeError(f"extreme pixels {lm} and {rm} lie on the same row")
    # the thumb is the lower of the two extremes
    return HandType.LEFT if lm[0] > rm[0] else HandType.RIGHT


def _nearest_index_map(src: int, dst: int) -> np.ndarray:
    """Centre-sampled nearest-neighbour map, made exactly mirror-symmetric."""
    idx = np.floor((np.arange(dst) + 0.5) * src / dst).astype(np.int64)
    half = dst // 2
    idx[dst - half :] = src - 1 - idx[:half][::-1]
    return np.clip(idx, 0, src - 1)


def resize_nearest(mask: np.ndarray, width: int, height: int) -> np.ndarray:
    mask = np.asarray(mask)
    rows = _nearest_index_map(mask.shape[0], height)
    cols = _nearest_index_map(mask.shape[1], width)
    return mask[np.ix_(rows, cols)]


def segment(raw: np.ndarray, median_window: int = 3, bright_hand: bool = True) -> np.ndarray:
    """Gray scan -> largest binary component."""
    smoothed = imaging.median_filter(raw, median_window)
    try:
        t = imaging.otsu_threshold(smoothed)
    except DegenerateHistogramError as exc:
        raise NoHandError("image has a single intensity, no hand to segment") from exc
    return imaging.largest_component(imaging.binarize(smoothed, t, bright_hand))


def normalize_mask(mask: np.ndarray, fraction: float = GUILLOTINE_FRACTION) -> NormalizedHand:
    """Run orientation, guillotine, crop and resize on a segmented mask."""
    upright = orient_upright(imaging.largest_component(mask))
    _, _, _, _, cut = place_reference(upright, fraction)
    cut = imaging.largest_component(cut)
    top, bottom, left, right = _bbox(cut)
    crop = cut[top : bottom + 1, left : right + 1]
    scaled = resize_nearest(crop, NORMALIZED_WIDTH, NORMALIZED_HEIGHT)
    scaled = imaging.largest_component(scaled)

    ref_row = _bbox(scaled)[1]
    cols = np.flatnonzero(scaled[ref_row])
    a = (ref_row, int(cols[0]))
    b = (ref_row, int(cols[-1]))
    r = (ref_row, round_half_to_center((a[1] + b[1]) / 2.0, NORMALIZED_WIDTH))
    contour = imaging.sobel_contour(scaled)
    hand_type = detect_hand_type(scaled, r)
    return NormalizedHand(scaled, contour, r, ref_row, a, b, hand_type)


def normalize(raw: np.ndarray, median_window: int = 3, bright_hand: bool = True,
              fraction: float = GUILLOTINE_FRACTION) -> NormalizedHand:
    """Full normalization of a grayscale scan to a 200x300 silhouette."""
    return normalize_mask(segment(raw, median_window, bright_hand), fraction)
