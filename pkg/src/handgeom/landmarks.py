"""Fingertips, inter-finger valleys and mirrored valleys on the
normalized contour.

All searches run over the *finger arc*: the contour re-anchored at the
reference-line end point A and walked clockwise to B, i.e. the whole
outline except the straight wrist cut. Distances are compared as exact
squared integer distances from the reference point R.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .errors import FingersTouchingError, MalformedContourError
from .normalize import HandType, NormalizedHand, extreme_pixels

FINGERS = ("thumb", "index", "middle", "ring", "little")
VALLEYS = ("thumb_index", "index_middle", "middle_ring", "ring_little")
MIRRORED = ("thumb_outer", "index_outer", "little_outer")

# minimum height of a fingertip above the deeper of its neighbouring
# valleys, in normalized pixels
MIN_PROMINENCE = 10.0


@dataclass(frozen=True)
class LandmarkSet:
    """Twelve landmarks as ``(row, col)`` rows.

    ``tips`` follow FINGERS, ``valleys`` follow VALLEYS and
    ``mirrored_valleys`` follow MIRRORED. ``indices`` optionally records
    each point's position in the hand contour (tips, valleys, mirrored).
    """

    tips: np.ndarray
    valleys: np.ndarray
    mirrored_valleys: np.ndarray
    indices: tuple[int, ...] | None = field(default=None, compare=False)

    def named(self) -> list[tuple[str, np.ndarray]]:
        out = [(f"tip_{n}", p) for n, p in zip(FINGERS, self.tips)]
        out += [(f"valley_{n}", p) for n, p in zip(VALLEYS, self.valleys)]
        out += [(f"mirror_{n}", p) for n, p in zip(MIRRORED, self.mirrored_valleys)]
        return out

    def points(self) -> np.ndarray:
        return np.vstack([self.tips, self.valleys, self.mirrored_valleys])

    def to_text(self) -> str:
        lines = []
        for name, p in self.named():
            if np.issubdtype(np.asarray(p).dtype, np.integer):
                lines.append(f"{name} {int(p[0])} {int(p[1])}")
            else:
                lines.append(f"{name} {p[0]:.3f} {p[1]:.3f}")
        return "\n".join(lines) + "\n"

    def finger_valleys(self, finger: int) -> tuple[np.ndarray, np.ndarray]:
        """The two valleys bounding a finger (outer/left one first)."""
        v, m = self.valleys, self.mirrored_valleys
        pairs = (
            (m[0], v[0]),
            (m[1], v[1]),
            (v[1], v[2]),
            (v[2], v[3]),
            (v[3], m[2]),
        )
        return pairs[finger]


def finger_arc(hand: NormalizedHand) -> np.ndarray:
    """Contour indices from A clockwise to B (inclusive)."""
    contour = hand.contour
    hits_a = np.flatnonzero((contour[:, 0] == hand.a[0]) & (contour[:, 1] == hand.a[1]))
    hits_b = np.flatnonzero((contour[:, 0] == hand.b[0]) & (contour[:, 1] == hand.b[1]))
    if len(hits_a) == 0 or len(hits_b) == 0:
        raise MalformedContourError("reference line end points are not on the contour")
    ia, ib = int(hits_a[0]), int(hits_b[-1])
    n = len(contour)
    if ib >= ia:
        return np.arange(ia, ib + 1)
    return np.concatenate([np.arange(ia, n), np.arange(0, ib + 1)])


def _position(points: np.ndarray, p: tuple[int, int]) -> int:
    d2 = ((points - np.asarray(p)) ** 2).sum(axis=1)
    return int(np.argmin(d2))


class _Arc:
    def __init__(self, hand: NormalizedHand):
        self.hand = hand
        self.index = finger_arc(hand)
        self.points = hand.contour[self.index]
        diff = self.points - np.asarray(hand.reference_point)
        self.d2 = (diff * diff).sum(axis=1)
        self.d = np.sqrt(self.d2)

    def argmax(self, lo: int, hi: int) -> int:
        """Position of the farthest point in [lo, hi] (first on ties)."""
        if hi < lo:
            raise MalformedContourError("empty contour arc")
        return lo + int(np.argmax(self.d2[lo : hi + 1]))

    def argmin(self, lo: int, hi: int) -> int:
        if hi < lo:
            raise MalformedContourError("empty contour arc between fingertips")
        return lo + int(np.argmin(self.d2[lo : hi + 1]))


def _tip_positions(arc: _Arc, min_prominence: float) -> list[int]:
    """Arc positions of the five tips, in FINGERS order."""
    peaks, props = find_peaks(arc.d, prominence=min_prominence)
    if len(peaks) < 5:
        raise FingersTouchingError(
            f"found {len(peaks)} distance maxima on the contour, need 5 separated fingertips"
        )
    left_bases, right_bases = props["left_bases"], props["right_bases"]
    last = len(arc.d) - 1
    middle = arc.argmax(0, last)

    hand = arc.hand
    lm, rm = extreme_pixels(hand.mask, hand.reference_row)
    thumb_px, little_px = (lm, rm) if hand.hand_type is HandType.LEFT else (rm, lm)
    thumb_at = _position(arc.points, thumb_px)
    little_at = _position(arc.points, little_px)

    def nearest_peak(pos):
        k = int(np.argmin(np.abs(peaks - pos)))
        return k

    kt, kl = nearest_peak(thumb_at), nearest_peak(little_at)
    thumb = arc.argmax(int(left_bases[kt]), int(right_bases[kt]))
    little = arc.argmax(int(left_bases[kl]), int(right_bases[kl]))
    lo, hi = sorted((thumb, little))
    if not lo < middle < hi or (thumb < little) != (hand.hand_type is HandType.LEFT):
        raise FingersTouchingError("fingertip order along the contour is inconsistent")

    def between(a, b):
        # a candidate must dip by min_prominence towards both neighbouring
        # tips; equal-distance pixels on a flat cap do not count as a finger
        lo, hi = sorted((a, b))
        best = None
        for p in peaks:
            if not lo < p < hi:
                continue
            left, right = arc.argmin(lo, p), arc.argmin(p, hi)
            if min(arc.d[p] - arc.d[left], arc.d[p] - arc.d[right]) < min_prominence:
                continue
            if best is None or arc.d2[p] > arc.d2[best[0]]:
                best = (p, left, right)
        if best is None:
            raise FingersTouchingError("no separate fingertip between neighbouring fingers")
        return arc.argmax(best[1], best[2])

    index = between(thumb, middle)
    ring = between(middle, little)
    return [thumb, index, middle, ring, little]


def locate_tips(hand: NormalizedHand, min_prominence: float = MIN_PROMINENCE) -> np.ndarray:
    arc = _Arc(hand)
    return arc.points[_tip_positions(arc, min_prominence)]


def _valley_positions(arc: _Arc, tips: list[int]) -> list[int]:
    out = []
    for a, b in zip(tips[:-1], tips[1:]):
        lo, hi = sorted((a, b))
        out.append(arc.argmin(lo + 1, hi - 1))
    return out


def locate_valleys(hand: NormalizedHand, tips: np.ndarray) -> np.ndarray:
    arc = _Arc(hand)
    positions = [_position(arc.points, p) for p in tips]
    return arc.points[_valley_positions(arc, positions)]


def _mirror_position(arc: _Arc, tip: int, valley: int) -> int:
    tip_pt = arc.points[tip]
    diff = arc.points - tip_pt
    d2 = (diff * diff).sum(axis=1)
    target = d2[valley]
    step = -1 if valley > tip else 1
    walk = np.arange(tip + step, -1 if step < 0 else len(d2), step)
    hits = np.flatnonzero(d2[walk] >= target)
    if len(hits) == 0:
        raise MalformedContourError("contour ends before reaching the mirrored valley distance")
    return int(walk[hits[0]])


def _mirrored_positions(arc: _Arc, tips: list[int], valleys: list[int]) -> list[int]:
    return [
        _mirror_position(arc, tips[0], valleys[0]),
        _mirror_position(arc, tips[1], valleys[1]),
        _mirror_position(arc, tips[4], valleys[3]),
    ]


def mirror_valleys(hand: NormalizedHand, tips: np.ndarray, valleys: np.ndarray) -> np.ndarray:
    arc = _Arc(hand)
    t = [_position(arc.points, p) for p in tips]
    v = [_position(arc.points, p) for p in valleys]
    return arc.points[_mirrored_positions(arc, t, v)]


def extract_landmarks(hand: NormalizedHand, min_prominence: float = MIN_PROMINENCE) -> LandmarkSet:
    """Locate all twelve landmarks in one pass over the finger arc."""
    arc = _Arc(hand)
    tips = _tip_positions(arc, min_prominence)
    valleys = _valley_positions(arc, tips)
    mirrored = _mirrored_positions(arc, tips, valleys)
    positions = tips + valleys + mirrored
    return LandmarkSet(
        tips=arc.points[tips],
        valleys=arc.points[valleys],
        mirrored_valleys=arc.points[mirrored],
        indices=tuple(int(arc.index[p]) for p in positions),
    )


MARKER_VALUE = 128


def annotate(mask: np.ndarray, landmarks: LandmarkSet) -> np.ndarray:
    """Silhouette as a 0/255 gray image with 3x3 markers at the landmarks."""
    out = np.where(np.asarray(mask) > 0, 255, 0).astype(np.uint8)
    h, w = out.shape
    for p in landmarks.points():
        r, c = (int(np.floor(v + 0.5)) for v in p)
        out[max(r - 1, 0) : min(r + 2, h), max(c - 1, 0) : min(c + 2, w)] = MARKER_VALUE
    return out
