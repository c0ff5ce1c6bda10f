"""Parametric synthetic hand silhouettes with exact ground truth.

The hand is drawn as one closed outline: a palm polygon above a wrist
strip, four fingers chained along the knuckle line with rounded notches
between them, and a thumb joined to the index finger by a straight web.
Each finger is a tapered quadrilateral capped by a semicircle.

Ground truth is evaluated on the continuous outline, never on the
raster: the outline is mapped into the 200x300 normalized frame and the
landmark and feature definitions are applied to a 0.1 px resampling of
it. Only the crop box of that frame comes from the rendered mask.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidSpecError
from .features import WIDTH_FRACTIONS, assemble
from .landmarks import LandmarkSet
from .normalize import GUILLOTINE_FRACTION, NORMALIZED_HEIGHT, NORMALIZED_WIDTH, HandType

POSES = (0, 90, 180, 270)
_SAMPLE = 0.5  # outline vertex spacing, px
_DENSE = 0.1  # ground-truth resampling, px


@dataclass(frozen=True)
class FingerSpec:
    length: float  # base centre to tip apex
    base_width: float
    tip_width: float
    splay: float  # degrees from vertical, positive toward the little finger


DEFAULT_FINGERS = (
    FingerSpec(68.0, 30.0, 22.0, -45.0),
    FingerSpec(92.0, 24.0, 19.0, -7.0),
    FingerSpec(106.0, 25.0, 20.0, 0.0),
    FingerSpec(96.0, 23.0, 19.0, 6.0),
    FingerSpec(74.0, 20.0, 16.0, 16.0),
)


@dataclass(frozen=True)
class HandSpec:
    hand_type: HandType = HandType.LEFT
    fingers: tuple[FingerSpec, ...] = DEFAULT_FINGERS
    palm_breadth: float = 150.0  # outer thumb base to outer little base, horizontal
    wrist_breadth: float = 96.0
    palm_length: float = 150.0  # knuckle line to wrist
    wrist_length: float = 50.0
    thumb_drop: float = 76.0  # outer thumb base below the knuckle line
    notch_width: float = 6.0
    knuckle_slopes: tuple[float, float, float] = (-5.0, 4.0, 14.0)  # degrees, between finger bases
    pose: int = 0
    canvas: tuple[int, int] | None = None  # (width, height) before pose rotation
    noise_sigma: float = 6.0
    background: int = 18
    foreground: int = 232
    seed: int = 0

    def mirrored(self) -> "HandSpec":
        return replace(self, hand_type=self.hand_type.mirrored())

    def validate(self) -> None:
        if len(self.fingers) != 5:
            raise InvalidSpecError("a hand has exactly five fingers")
        for name, f in zip(("thumb", "index", "middle", "ring", "little"), self.fingers):
            if not 40.0 <= f.length <= 140.0:
                raise InvalidSpecError(f"{name} length {f.length} outside 40-140 px")
            if not 0.0 < f.tip_width <= f.base_width:
                raise InvalidSpecError(f"{name} tip width must be positive and <= base width")
            if f.length <= f.tip_width:
                raise InvalidSpecError(f"{name} is shorter than its tip cap")
        splays = [f.splay for f in self.fingers[1:]]
        if any(b < a for a, b in zip(splays, splays[1:])):
            raise InvalidSpecError("splay must not decrease from index to little finger")
        if self.fingers[0].splay >= splays[0]:
            raise InvalidSpecError("thumb must splay outward of the index finger")
        if self.notch_width < 4.0:
            raise InvalidSpecError("adjacent fingers need a gap of at least 4 px")
        if self.pose not in POSES:
            raise InvalidSpecError(f"pose must be one of {POSES}")
        if not 0.0 <= self.noise_sigma <= 10.0:
            raise InvalidSpecError("noise sigma must lie in [0, 10]")
        if self.background > 30 or self.foreground < 220:
            raise InvalidSpecError("background must be <= 30 and hand intensity >= 220")
        if self.wrist_breadth <= 0 or self.palm_length <= 0 or self.wrist_length <= 0:
            raise InvalidSpecError("palm and wrist dimensions must be positive")


@dataclass(frozen=True)
class GroundTruth:
    hand_type: HandType
    landmarks: LandmarkSet  # float (row, col) in the normalized frame
    features: np.ndarray
    reference_point: tuple[float, float]
    a: tuple[float, float]
    b: tuple[float, float]
    scale: tuple[float, float]  # (rows, cols) canvas -> normalized

    def sidecar(self) -> str:
        lines = [
            f"hand_type={self.hand_type.value}",
            "R={:.3f},{:.3f}".format(*self.reference_point),
            "A={:.3f},{:.3f}".format(*self.a),
            "B={:.3f},{:.3f}".format(*self.b),
        ]
        for name, p in self.landmarks.named():
            lines.append(f"{name}={p[0]:.3f},{p[1]:.3f}")
        lines += [f"f{i + 1}={v:.6f}" for i, v in enumerate(self.features)]
        return "\n".join(lines) + "\n"

    def mirrored(self) -> "GroundTruth":
        """Truth of the left-right flipped normalized frame."""
        edge = NORMALIZED_WIDTH - 1.0

        def flip(p):
            return (p[0], edge - p[1])

        def flip_rows(a):
            a = np.array(a, dtype=float)
            a[:, 1] = edge - a[:, 1]
            return a

        lm = self.landmarks
        return replace(
            self,
            hand_type=self.hand_type.mirrored(),
            landmarks=LandmarkSet(flip_rows(lm.tips), flip_rows(lm.valleys), flip_rows(lm.mirrored_valleys)),
            reference_point=flip(self.reference_point),
            a=flip(self.b),
            b=flip(self.a),
        )


@dataclass(frozen=True)
class SynthHand:
    spec: HandSpec
    image: np.ndarray
    mask: np.ndarray  # clean silhouette in canonical pose
    truth: GroundTruth | None = field(default=None, compare=False)


# ---------------------------------------------------------------- outline


def _line(p, q):
    p, q = np.asarray(p, float), np.asarray(q, float)
    n = max(2, int(math.ceil(np.hypot(*(q - p)) / _SAMPLE)) + 1)
    t = np.linspace(0.0, 1.0, n)[:, None]
    return p + t * (q - p)


def _frame(splay_deg):
    th = math.radians(splay_deg)
    return np.array([math.sin(th), -math.cos(th)]), np.array([math.cos(th), math.sin(th)])


def _finger(base, f: FingerSpec):
    """Finger polyline (x, y), left side up, cap, right side down."""
    u, n = _frame(f.splay)
    r = f.tip_width / 2.0
    top = f.length - r
    k = max(2, int(math.ceil(top / _SAMPLE)) + 1)
    s = np.linspace(0.0, top, k)
    half = f.base_width / 2.0 + (r - f.base_width / 2.0) * s / top
    axis = base + s[:, None] * u
    left = axis - half[:, None] * n
    right = axis + half[:, None] * n
    m = max(8, int(math.ceil(math.pi * r / _SAMPLE)))
    phi = np.linspace(-math.pi / 2, math.pi / 2, m)
    center = base + top * u
    cap = center + r * (np.sin(phi)[:, None] * n + np.cos(phi)[:, None] * u)
    return np.vstack([left, cap[1:-1], right[::-1]])


def _notch(p, q):
    """Half circle on diameter pq, bulging toward +y."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    mid = (p + q) / 2.0
    rad = np.hypot(*(q - p)) / 2.0
    e = (q - p) / (2.0 * rad)
    d = np.array([-e[1], e[0]])
    if d[1] < 0:
        d = -d
    m = max(6, int(math.ceil(math.pi * rad / _SAMPLE)))
    psi = np.linspace(0.0, math.pi, m)
    return mid - rad * np.cos(psi)[:, None] * e + rad * np.sin(psi)[:, None] * d


SECTIONS = (
    "wrist_left", "palm_left", "thumb", "web", "index", "notch_im", "middle",
    "notch_mr", "ring", "notch_rl", "little", "palm_right", "wrist_right", "bottom",
)


def build_outline(spec: HandSpec):
    """Closed clockwise outline in a Left-hand layout (thumb at -x).

    Returns ``(points, labels)``: ``(N, 2)`` float ``(x, y)`` vertices and
    an int array of indices into SECTIONS. Right hands are mirrored.
    """
    thumb, index, middle, ring, little = spec.fingers
    g = spec.notch_width
    parts: list[tuple[str, np.ndarray]] = []

    # knuckle chain: index base centre at the origin
    bases = [np.zeros(2)]
    chain = [index, middle, ring, little]
    rights = []
    for i in range(3):
        _, n_i = _frame(chain[i].splay)
        right_base = bases[i] + chain[i].base_width / 2.0 * n_i
        slope = math.radians(spec.knuckle_slopes[i])
        next_left = right_base + g * np.array([math.cos(slope), math.sin(slope)])
        _, n_next = _frame(chain[i + 1].splay)
        bases.append(next_left + chain[i + 1].base_width / 2.0 * n_next)
        rights.append((right_base, next_left))

    _, n_little = _frame(little.splay)
    little_outer = bases[3] + little.base_width / 2.0 * n_little

    _, n_thumb = _frame(thumb.splay)
    thumb_outer = np.array([little_outer[0] - spec.palm_breadth, spec.thumb_drop])
    thumb_base = thumb_outer + thumb.base_width / 2.0 * n_thumb

    center_x = (thumb_outer[0] + little_outer[0]) / 2.0
    palm_bottom = spec.palm_length
    wrist_bottom = palm_bottom + spec.wrist_length
    wl_top = np.array([center_x - spec.wrist_breadth / 2.0, palm_bottom])
    wr_top = np.array([center_x + spec.wrist_breadth / 2.0, palm_bottom])
    wl_bot = wl_top + [0.0, spec.wrist_length]
    wr_bot = wr_top + [0.0, spec.wrist_length]

    thumb_pts = _finger(thumb_base, thumb)
    parts.append(("wrist_left", _line(wl_bot, wl_top)[:-1]))
    parts.append(("palm_left", _line(wl_top, thumb_pts[0])[:-1]))
    parts.append(("thumb", thumb_pts))
    index_pts = _finger(bases[0], index)
    parts.append(("web", _line(thumb_pts[-1], index_pts[0])[1:-1]))
    names = ("index", "middle", "ring", "little")
    notches = ("notch_im", "notch_mr", "notch_rl")
    for i, f in enumerate(chain):
        parts.append((names[i], _finger(bases[i], f)))
        if i < 3:
            parts.append((notches[i], _notch(*rights[i])[1:-1]))
    little_end = parts[-1][1][-1]
    parts.append(("palm_right", _line(little_end, wr_top)[1:]))
    parts.append(("wrist_right", _line(wr_top, wr_bot)[1:]))
    parts.append(("bottom", _line(wr_bot, wl_bot)[1:-1]))

    points = np.vstack([p for _, p in parts])
    labels = np.concatenate([np.full(len(p), SECTIONS.index(name)) for name, p in parts])
    if spec.hand_type is HandType.RIGHT:
        points = points * [-1.0, 1.0]
        # keep the traversal clockwise: reverse, but start at the wrist again
        points = points[::-1]
        labels = labels[::-1]
        start = int(np.flatnonzero(labels == SECTIONS.index("wrist_right"))[0])
        points = np.roll(points, -start, axis=0)
        labels = np.roll(labels, -start)
    return points, labels


# ------------------------------------------------------------- geometry


def _segments_cross(p1, p2, q1, q2):
    d1 = p2 - p1
    d2 = q2 - q1
    den = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((q1[:, 0] - p1[:, 0]) * d2[:, 1] - (q1[:, 1] - p1[:, 1]) * d2[:, 0]) / den
        s = ((q1[:, 0] - p1[:, 0]) * d1[:, 1] - (q1[:, 1] - p1[:, 1]) * d1[:, 0]) / den
    return (t > 0) & (t < 1) & (s > 0) & (s < 1)


def is_simple(points: np.ndarray) -> bool:
    """True when no two non-adjacent outline edges intersect."""
    # dense outlines are tested on every 4th vertex to keep this cheap
    step = 4 if len(points) > 64 else 1
    a = np.asarray(points, dtype=float)[::step]
    b = np.roll(a, -1, axis=0)
    n = len(a)
    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[:-1]
        if len(j) == 0:
            continue
        hit = _segments_cross(np.repeat(a[i : i + 1], len(j), 0), np.repeat(b[i : i + 1], len(j), 0), a[j], b[j])
        if hit.any():
            return False
    return True


def _resample(points: np.ndarray, labels: np.ndarray, spacing: float):
    seg = np.hypot(*np.diff(points, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    t = np.arange(0.0, cum[-1], spacing)
    t = np.append(t, cum[-1])
    x = np.interp(t, cum, points[:, 0])
    y = np.interp(t, cum, points[:, 1])
    seg_of = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, len(points) - 2)
    return np.column_stack([x, y]), labels[seg_of]


def _row_crossing(points, row):
    """Points where the polyline crosses the horizontal line y = row."""
    y = points[:, 1]
    out = []
    for i in range(len(points) - 1):
        y0, y1 = y[i], y[i + 1]
        if (y0 - row) * (y1 - row) <= 0 and y0 != y1:
            t = (row - y0) / (y1 - y0)
            out.append((i, points[i] + t * (points[i + 1] - points[i])))
    return out


def _perpendicular_width(arc, center, normal):
    """Distance between the nearest outline crossings on both sides of
    ``center`` along ``normal`` (all in (x, y))."""
    p, q = arc[:-1], arc[1:]
    d = q - p
    den = d[:, 0] * normal[1] - d[:, 1] * normal[0]
    rel = center - p
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (rel[:, 0] * normal[1] - rel[:, 1] * normal[0]) / den
        t = (rel[:, 0] * d[:, 1] - rel[:, 1] * d[:, 0]) / den
    ok = (s >= 0) & (s <= 1) & np.isfinite(t)
    t = t[ok]
    pos, neg = t[t > 0], t[t < 0]
    if len(pos) == 0 or len(neg) == 0:
        raise InvalidSpecError("finger width probe does not cross the outline on both sides")
    return float(pos.min() - neg.max())


def _truth(spec: HandSpec, points: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> GroundTruth:
    # crop box of the guillotined silhouette, from the clean raster
    rows = np.flatnonzero(mask.any(axis=1))
    top, bottom = int(rows[0]), int(rows[-1])
    ref_row = bottom - int(math.floor(GUILLOTINE_FRACTION * (bottom - top + 1) + 0.5))
    cut = mask[: ref_row + 1]
    cols = np.flatnonzero(cut.any(axis=0))
    c_top = int(np.flatnonzero(cut.any(axis=1))[0])
    left, right = int(cols[0]), int(cols[-1])
    sy = NORMALIZED_HEIGHT / (ref_row - c_top + 1)
    sx = NORMALIZED_WIDTH / (right - left + 1)

    norm = np.column_stack([(points[:, 0] - left + 0.5) * sx - 0.5, (points[:, 1] - c_top + 0.5) * sy - 0.5])
    line = float(NORMALIZED_HEIGHT - 1)

    closed = np.vstack([norm, norm[:1]])
    closed_labels = np.append(labels, labels[:1])
    crossings = _row_crossing(closed, line)
    wrist = (SECTIONS.index("wrist_left"), SECTIONS.index("wrist_right"))
    if len(crossings) != 2 or any(closed_labels[i] not in wrist for i, _ in crossings):
        raise InvalidSpecError("wrist too short: the reference line does not cut through it")
    (ia, a_pt), (ib, b_pt) = sorted(crossings, key=lambda c: c[1][0])
    if ia < ib:
        body = norm[ia + 1 : ib + 1]
        body_labels = labels[ia + 1 : ib + 1]
    else:
        body = np.vstack([norm[ia + 1 :], norm[: ib + 1]])
        body_labels = np.concatenate([labels[ia + 1 :], labels[: ib + 1]])
    arc = np.vstack([a_pt, body, b_pt])
    arc_labels = np.concatenate([[closed_labels[ia]], body_labels, [closed_labels[ib]]])
    arc, arc_labels = _resample(arc, arc_labels, _DENSE)

    ref = np.array([(a_pt[0] + b_pt[0]) / 2.0, line])
    d2 = ((arc - ref) ** 2).sum(axis=1)
    fingers = ("thumb", "index", "middle", "ring", "little")
    tips = []
    for name in fingers:
        idx = np.flatnonzero(arc_labels == SECTIONS.index(name))
        tips.append(int(idx[np.argmax(d2[idx])]))
    if int(np.argmax(d2)) != tips[2]:
        raise InvalidSpecError("middle fingertip is not the farthest outline point from R")
    valleys = []
    for t0, t1 in zip(tips[:-1], tips[1:]):
        lo, hi = sorted((t0, t1))
        valleys.append(lo + 1 + int(np.argmin(d2[lo + 1 : hi])))

    def mirror(tip, valley):
        dt = ((arc - arc[tip]) ** 2).sum(axis=1)
        step = -1 if valley > tip else 1
        walk = np.arange(tip + step, -1 if step < 0 else len(arc), step)
        hits = np.flatnonzero(dt[walk] >= dt[valley])
        if len(hits) == 0:
            raise InvalidSpecError("outline too short for a mirrored valley")
        return int(walk[hits[0]])

    mirrored = [mirror(tips[0], valleys[0]), mirror(tips[1], valleys[1]), mirror(tips[4], valleys[3])]

    def rc(i):
        return arc[i, ::-1]

    lm = LandmarkSet(
        tips=np.array([rc(i) for i in tips]),
        valleys=np.array([rc(i) for i in valleys]),
        mirrored_valleys=np.array([rc(i) for i in mirrored]),
    )

    def width(tip, mid, frac):
        tip_xy, mid_xy = np.asarray(tip)[::-1], np.asarray(mid)[::-1]
        axis = tip_xy - mid_xy
        normal = np.array([-axis[1], axis[0]]) / np.hypot(*axis)
        return _perpendicular_width(arc, mid_xy + frac * axis, normal)

    a_rc = (float(a_pt[1]), float(a_pt[0]))
    b_rc = (float(b_pt[1]), float(b_pt[0]))
    feats = assemble(lm, a_rc, b_rc, width)
    return GroundTruth(
        hand_type=spec.hand_type,
        landmarks=lm,
        features=feats,
        reference_point=(float(ref[1]), float(ref[0])),
        a=a_rc,
        b=b_rc,
        scale=(sy, sx),
    )


# ------------------------------------------------------------- rendering


def render_mask(spec: HandSpec):
    """Clean canonical-pose mask plus the outline placed on the canvas.

    A right hand is the left rendering flipped column-wise, so mirrored
    specs give exactly mirrored rasters.
    """
    if spec.hand_type is HandType.RIGHT:
        mask, points, labels = render_mask(spec.mirrored())
        points = points * [-1.0, 1.0] + [mask.shape[1] - 1.0, 0.0]
        points, labels = points[::-1], labels[::-1]
        start = int(np.flatnonzero(labels == SECTIONS.index("wrist_right"))[0])
        return mask[:, ::-1].copy(), np.roll(points, -start, axis=0), np.roll(labels, -start)
    points, labels = build_outline(spec)
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    margin = 12.0
    if spec.canvas is None:
        shift = margin - lo
        width = int(math.ceil(hi[0] - lo[0] + 2 * margin)) + 1
        height = int(math.ceil(hi[1] - lo[1] + 2 * margin)) + 1
    else:
        width, height = spec.canvas
        shift = (np.array([width - 1, height - 1], float) - (hi - lo)) / 2.0 - lo
        if np.any(shift + lo < 1) or shift[0] + hi[0] > width - 2 or shift[1] + hi[1] > height - 2:
            raise InvalidSpecError(f"hand does not fit a {width}x{height} canvas")
    points = points + np.round(shift)
    return fill_polygon(points, (height, width)), points, labels


def fill_polygon(points: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Even-odd scanline fill of a closed ``(x, y)`` polygon.

    A pixel is set when its centre lies inside; edges own the rows in
    ``[min y, max y)`` so shared vertices are counted once.
    """
    height, width = shape
    p = np.asarray(points, dtype=float)
    q = np.roll(p, -1, axis=0)
    y_lo = np.minimum(p[:, 1], q[:, 1])
    y_hi = np.maximum(p[:, 1], q[:, 1])
    first = np.clip(np.ceil(y_lo), 0, height).astype(np.int64)
    stop = np.clip(np.ceil(y_hi), 0, height).astype(np.int64)
    count = np.maximum(stop - first, 0)
    edge = np.repeat(np.arange(len(p)), count)
    offset = np.arange(count.sum()) - np.repeat(np.cumsum(count) - count, count)
    rows = first[edge] + offset
    x0, y0, x1, y1 = p[edge, 0], p[edge, 1], q[edge, 0], q[edge, 1]
    x = x0 + (rows - y0) * (x1 - x0) / (y1 - y0)
    cols = np.clip(np.ceil(x), 0, width).astype(np.int64)
    toggles = np.zeros((height, width + 1), dtype=np.int32)
    np.add.at(toggles, (rows, cols), 1)
    return (np.cumsum(toggles, axis=1)[:, :width] % 2).astype(np.uint8)


def generate(spec: HandSpec, with_truth: bool = True, check: bool = True) -> SynthHand:
    """Render ``spec`` and compute its ground truth."""
    spec.validate()
    mask, points, labels = render_mask(spec)
    if check and not is_simple(points):
        raise InvalidSpecError("hand outline self-intersects (fingers or thumb overlap)")
    truth = None
    if with_truth and spec.hand_type is HandType.RIGHT:
        left = spec.mirrored()
        truth = _truth(left, *render_mask(left)[1:], mask[:, ::-1]).mirrored()
    elif with_truth:
        truth = _truth(spec, points, labels, mask)
    rng = np.random.default_rng(spec.seed)
    img = np.where(mask > 0, float(spec.foreground), float(spec.background))
    if spec.noise_sigma > 0:
        img = img + rng.normal(0.0, spec.noise_sigma, size=img.shape)
    image = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)
    image = np.rot90(image, -(spec.pose // 90)).copy()
    return SynthHand(spec=spec, image=image, mask=mask, truth=truth)


# ------------------------------------------------------------ populations

# parameter ranges for random subjects: per finger (length, base width,
# tip/base ratio, splay)
_FINGER_RANGES = (
    ((60.0, 74.0), (27.0, 32.0), (0.7, 0.85), (-48.0, -42.0)),
    ((84.0, 96.0), (22.0, 26.0), (0.75, 0.9), (-9.0, -5.0)),
    ((100.0, 114.0), (23.0, 27.0), (0.75, 0.9), (-1.5, 1.5)),
    ((88.0, 100.0), (21.0, 25.0), (0.75, 0.9), (4.0, 8.0)),
    ((66.0, 80.0), (18.0, 22.0), (0.75, 0.9), (13.0, 19.0)),
)
_PALM_RANGES = {
    "palm_breadth": (144.0, 158.0),
    "wrist_breadth": (88.0, 104.0),
    "palm_length": (140.0, 160.0),
    "thumb_drop": (70.0, 82.0),
}


def _param_vector(spec: HandSpec) -> np.ndarray:
    vals = []
    for f in spec.fingers:
        vals += [f.length, f.base_width, f.tip_width]
    vals += [spec.palm_breadth, spec.wrist_breadth, spec.palm_length, spec.thumb_drop]
    return np.array(vals)


# the middle fingertip must stay the farthest outline point from R
MIDDLE_MARGIN = 8.0


def _keep_middle_longest(fingers: list) -> None:
    longest = max(fingers[1].length, fingers[3].length)
    if fingers[2].length < longest + MIDDLE_MARGIN:
        fingers[2] = replace(fingers[2], length=min(140.0, longest + MIDDLE_MARGIN))


def random_spec(rng: np.random.Generator, hand_type: HandType = HandType.LEFT, **overrides) -> HandSpec:
    """Draw a valid hand from the default parameter ranges."""
    fingers = []
    for (lr, wr, tr, sr) in _FINGER_RANGES:
        base = rng.uniform(*wr)
        fingers.append(FingerSpec(rng.uniform(*lr), base, base * rng.uniform(*tr), rng.uniform(*sr)))
    _keep_middle_longest(fingers)
    palm = {k: rng.uniform(*r) for k, r in _PALM_RANGES.items()}
    spec = HandSpec(hand_type=hand_type, fingers=tuple(fingers), **palm)
    return replace(spec, **overrides) if overrides else spec


def perturb(spec: HandSpec, rng: np.random.Generator, amount: float) -> HandSpec:
    """Move each length/width/palm parameter by at most ``amount`` px."""
    if amount <= 0:
        return spec

    def j():
        return rng.uniform(-amount, amount)

    fingers = []
    for f in spec.fingers:
        base = f.base_width + j()
        tip = min(base, f.tip_width + j())
        fingers.append(replace(f, length=f.length + j(), base_width=base, tip_width=tip))
    _keep_middle_longest(fingers)
    return replace(
        spec,
        fingers=tuple(fingers),
        palm_breadth=spec.palm_breadth + j(),
        wrist_breadth=spec.wrist_breadth + j(),
        palm_length=spec.palm_length + j(),
        thumb_drop=spec.thumb_drop + j(),
    )


@dataclass(frozen=True)
class LabeledImage:
    subject_id: str
    hand_type: HandType
    image: np.ndarray
    spec: HandSpec
    truth: GroundTruth | None = None


def generate_population(subjects: int, images_per_subject: int, intra_noise: float, inter_gap: float,
                        seed: int, left_fraction: float = 157.0 / 253.0, with_truth: bool = False,
                        random_pose: bool = True, pose_per_image: bool = False) -> list[LabeledImage]:
    """Seeded labeled corpus, ``images_per_subject`` images per subject.

    Subject base hands are pairwise at least ``inter_gap`` apart
    (Euclidean distance over length, width and palm parameters); every
    image perturbs its subject's parameters by at most ``intra_noise``.
    Each subject contributes one hand type and is captured in one pose
    with one intensity-noise seed, so ``intra_noise=0`` repeats the same
    image; ``pose_per_image`` draws a fresh pose and seed per image.
    """
    if subjects <= 0 or images_per_subject <= 0:
        raise InvalidSpecError("subject and image counts must be positive")
    if intra_noise < 0:
        raise InvalidSpecError("intra-subject noise must be non-negative")
    if inter_gap <= 2 * intra_noise:
        warnings.warn(
            f"inter_gap {inter_gap} <= 2 x intra_noise {intra_noise}: subjects may not be separable",
            stacklevel=2,
        )
    rng = np.random.default_rng(seed)
    n_left = int(round(subjects * left_fraction))
    bases: list[HandSpec] = []
    vectors: list[np.ndarray] = []
    attempts = 0
    while len(bases) < subjects:
        attempts += 1
        if attempts > 200 * subjects:
            raise InvalidSpecError(f"cannot place {subjects} subjects {inter_gap} px apart")
        hand_type = HandType.LEFT if len(bases) < n_left else HandType.RIGHT
        cand = random_spec(rng, hand_type)
        vec = _param_vector(cand)
        if vectors and np.min(np.linalg.norm(np.asarray(vectors) - vec, axis=1)) < inter_gap:
            continue
        bases.append(cand)
        vectors.append(vec)

    def capture():
        pose = int(rng.choice(POSES)) if random_pose else 0
        return pose, int(rng.integers(2**31))

    width = len(str(subjects - 1))
    out = []
    for s, base in enumerate(bases):
        sid = f"s{s:0{width}d}"
        pose, image_seed = capture()
        for _ in range(images_per_subject):
            if pose_per_image:
                pose, image_seed = capture()
            spec = replace(perturb(base, rng, intra_noise), pose=pose, seed=image_seed)
            hand = generate(spec, with_truth=with_truth, check=False)
            out.append(LabeledImage(sid, spec.hand_type, hand.image, spec, hand.truth))
    return out
