"""The 26-element geometric feature vector.

Order (all values in normalized-image pixels):

    f1-f5    finger lengths, thumb..little
    f6-f15   finger widths, per finger at 1/3 then 2/3 of its length
    f16-f20  finger baseline widths, thumb..little
    f21-f22  palm widths: upper (outer thumb valley to outer little
             valley) and lower (reference line AB)
    f23-f26  upper palm line midpoint to the baseline midpoints of
             index, middle, ring and little
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DegenerateFingerError, FingerOcclusionError
from .landmarks import FINGERS, LandmarkSet, extract_landmarks
from .normalize import NormalizedHand

N_FEATURES = 26
WIDTH_FRACTIONS = (1.0 / 3.0, 2.0 / 3.0)

FEATURE_NAMES = (
    [f"length_{f}" for f in FINGERS]
    + [f"width_{f}_{k}" for f in FINGERS for k in ("1of3", "2of3")]
    + [f"baseline_{f}" for f in FINGERS]
    + ["palm_upper", "palm_lower"]
    + [f"palm_to_{f}" for f in FINGERS[1:]]
)

# march step along a width probe, in pixels
_PROBE_STEP = 0.25


def _dist(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(np.hypot(*(p - q)))


def finger_baseline(v1, v2) -> tuple[np.ndarray, float]:
    """Baseline midpoint and width for a finger's two valley points."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    width = _dist(v1, v2)
    if width == 0.0:
        raise DegenerateFingerError(f"finger valleys coincide at {tuple(v1)}")
    return (v1 + v2) / 2.0, width


def finger_length(tip, baseline_mid) -> float:
    """Tip to baseline midpoint. The tip must not sit below the midpoint."""
    if tip[0] > baseline_mid[0]:
        raise DegenerateFingerError(f"tip {tuple(tip)} lies below its baseline midpoint")
    return _dist(tip, baseline_mid)


def probe_point(tip, baseline_mid, fraction: float) -> tuple[np.ndarray, np.ndarray]:
    """Point at ``fraction`` of the axis (from the baseline) and the unit
    normal to the axis."""
    tip = np.asarray(tip, dtype=float)
    mid = np.asarray(baseline_mid, dtype=float)
    axis = tip - mid
    length = np.hypot(*axis)
    if length == 0.0:
        raise DegenerateFingerError("finger axis has zero length")
    normal = np.array([-axis[1], axis[0]]) / length
    return mid + fraction * axis, normal


def _march(mask: np.ndarray, start: np.ndarray, direction: np.ndarray) -> np.ndarray:
    h, w = mask.shape
    t = np.arange(0.0, float(np.hypot(h, w)), _PROBE_STEP)
    pts = start[None, :] + t[:, None] * direction[None, :]
    rc = np.floor(pts + 0.5).astype(np.int64)
    inside = (rc[:, 0] >= 0) & (rc[:, 0] < h) & (rc[:, 1] >= 0) & (rc[:, 1] < w)
    fg = np.zeros(len(t), dtype=bool)
    fg[inside] = mask[rc[inside, 0], rc[inside, 1]] > 0
    if not fg[0]:
        raise FingerOcclusionError(f"width probe at {tuple(np.round(start, 1))} starts outside the hand")
    exits = np.flatnonzero(~fg)
    if len(exits) == 0 or not inside[exits[0]]:
        raise FingerOcclusionError("width probe leaves the image without crossing the contour")
    k = exits[0]
    return (pts[k - 1] + pts[k]) / 2.0


def finger_width_at(mask: np.ndarray, tip, baseline_mid, fraction: float):
    """Width across the finger at ``fraction`` of its axis.

    Marches from the axis point along both directions of the axis normal
    and takes the first silhouette crossing on each side. Returns
    ``(width, crossing_1, crossing_2)``.
    """
    center, normal = probe_point(tip, baseline_mid, fraction)
    p1 = _march(mask, center, normal)
    p2 = _march(mask, center, -normal)
    return _dist(p1, p2), p1, p2


def palm_widths(hand: NormalizedHand, lm: LandmarkSet) -> tuple[float, float]:
    upper = _dist(lm.mirrored_valleys[0], lm.mirrored_valleys[2])
    lower = float(hand.b[1] - hand.a[1])
    return upper, lower


def palm_baseline_distances(hand: NormalizedHand, lm: LandmarkSet) -> list[float]:
    center = (np.asarray(lm.mirrored_valleys[0], float) + np.asarray(lm.mirrored_valleys[2], float)) / 2.0
    out = []
    for finger in range(1, 5):
        mid, _ = finger_baseline(*lm.finger_valleys(finger))
        out.append(_dist(center, mid))
    return out


def assemble(lm: LandmarkSet, a, b, width_fn: Callable) -> np.ndarray:
    """Build the feature vector from landmarks.

    ``width_fn(tip, baseline_mid, fraction)`` measures a finger width;
    ``a`` and ``b`` are the reference line end points.
    """
    mids, baselines = [], []
    for finger in range(5):
        mid, width = finger_baseline(*lm.finger_valleys(finger))
        mids.append(mid)
        baselines.append(width)
    lengths = [finger_length(lm.tips[f], mids[f]) for f in range(5)]
    widths = [width_fn(lm.tips[f], mids[f], frac) for f in range(5) for frac in WIDTH_FRACTIONS]
    outer_thumb = np.asarray(lm.mirrored_valleys[0], float)
    outer_little = np.asarray(lm.mirrored_valleys[2], float)
    upper = _dist(outer_thumb, outer_little)
    lower = float(b[1] - a[1])
    center = (outer_thumb + outer_little) / 2.0
    to_base = [_dist(center, mids[f]) for f in range(1, 5)]
    vec = np.array(lengths + widths + baselines + [upper, lower] + to_base, dtype=float)
    assert vec.shape == (N_FEATURES,)
    return vec


def extract_features(hand: NormalizedHand, landmarks: LandmarkSet | None = None) -> np.ndarray:
    """26 features of a normalized hand (landmarks located if not given)."""
    lm = extract_landmarks(hand) if landmarks is None else landmarks

    def width(tip, mid, frac):
        return finger_width_at(hand.mask, tip, mid, frac)[0]

    return assemble(lm, hand.a, hand.b, width)


# ---------------------------------------------------------------- dumps

DECIMALS = 6


def quantize(vec) -> np.ndarray:
    """Round to the precision of the text dump, so a vector survives a
    write/read cycle unchanged."""
    return np.array([float(f"{v:.{DECIMALS}f}") for v in np.asarray(vec, dtype=float)])


def format_row(subject_id: str, hand_type, vec) -> str:
    """``subject_id,hand_type,f1,...,f26`` with 6 decimal places."""
    label = getattr(hand_type, "value", hand_type)
    return ",".join([subject_id, str(label)] + [f"{v:.{DECIMALS}f}" for v in vec])
