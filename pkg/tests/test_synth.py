import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from handgeom import imaging, synth
from handgeom.errors import InvalidSpecError
from handgeom.evaluation import Sample, table2_protocol
from handgeom.features import finger_baseline
from handgeom.normalize import HandType, normalize
from handgeom.pipeline import process


def test_default_spec_hand_type_is_detected(left_spec):
    for hand_type in HandType:
        spec = replace(left_spec, hand_type=hand_type)
        assert normalize(synth.generate(spec).image).hand_type is hand_type


def test_image_contract(left_hand):
    img = left_hand.image
    assert img.dtype == np.uint8 and img.ndim == 2
    bg = img[left_hand.mask == 0]
    fg = img[left_hand.mask == 1]
    assert abs(bg.mean() - left_hand.spec.background) < 1.0
    assert abs(fg.mean() - left_hand.spec.foreground) < 1.0
    assert left_hand.spec.background <= 30 and left_hand.spec.foreground >= 220


def test_mirrored_spec_truth(left_hand, right_hand):
    assert right_hand.truth.hand_type is HandType.RIGHT
    np.testing.assert_allclose(right_hand.truth.features, left_hand.truth.features, atol=1e-9)


def test_truth_lengths_follow_their_landmarks(random_hands):
    for hand in random_hands:
        lm = hand.truth.landmarks
        for f in range(5):
            mid, _ = finger_baseline(*lm.finger_valleys(f))
            # right-hand truth is a reflected left one: allow float rounding only
            expected = float(np.hypot(*(np.asarray(lm.tips[f]) - mid)))
            assert hand.truth.features[f] == pytest.approx(expected, rel=1e-12)


def test_truth_landmarks_lie_on_the_silhouette_boundary(random_hands):
    for hand in random_hands:
        h = normalize(hand.image)
        boundary = np.argwhere(imaging.sobel_boundary(h.mask))
        # canvas pixels: sqrt(2)/2 from the centre-sampled fill, sqrt(2)/2
        # from nearest-neighbour resampling, 1 from median erosion of corners
        bound = math.sqrt(2.0) + 1.0
        for p in hand.truth.landmarks.points():
            assert np.hypot(*((boundary - p) / hand.truth.scale).T).min() <= bound


def test_pose_rotates_the_image(left_spec):
    base = synth.generate(left_spec)
    for pose in synth.POSES:
        img = synth.generate(replace(left_spec, pose=pose)).image
        np.testing.assert_array_equal(img, np.rot90(base.image, -(pose // 90)))


def test_canvas_placement(left_spec):
    hand = synth.generate(replace(left_spec, canvas=(383, 526)))
    assert hand.image.shape == (526, 383)
    with pytest.raises(InvalidSpecError):
        synth.generate(replace(left_spec, canvas=(100, 100)))


@pytest.mark.parametrize(
    "change",
    [
        dict(pose=45),
        dict(noise_sigma=12.0),
        dict(background=40),
        dict(foreground=200),
        dict(notch_width=3.0),
    ],
)
def test_invalid_specs(left_spec, change):
    with pytest.raises(InvalidSpecError):
        synth.generate(replace(left_spec, **change))


def test_invalid_finger_specs(left_spec):
    too_long = replace(left_spec.fingers[2], length=150.0)
    with pytest.raises(InvalidSpecError):
        synth.generate(replace(left_spec, fingers=left_spec.fingers[:2] + (too_long,) + left_spec.fingers[3:]))
    fat_tip = replace(left_spec.fingers[1], tip_width=30.0)
    with pytest.raises(InvalidSpecError):
        synth.generate(replace(left_spec, fingers=(left_spec.fingers[0], fat_tip) + left_spec.fingers[2:]))
    with pytest.raises(InvalidSpecError):
        synth.generate(replace(left_spec, fingers=left_spec.fingers[:4]))


def test_fill_polygon_square_and_triangle():
    square = np.array([[1.0, 1.0], [5.0, 1.0], [5.0, 4.0], [1.0, 4.0]])
    mask = synth.fill_polygon(square, (6, 7))
    expected = np.zeros((6, 7), np.uint8)
    expected[1:4, 1:5] = 1
    np.testing.assert_array_equal(mask, expected)
    tri = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    mask = synth.fill_polygon(tri, (12, 12))
    yy, xx = np.mgrid[0:12, 0:12]
    np.testing.assert_array_equal(mask, ((xx + yy < 10) & (xx >= 0) & (yy >= 0)).astype(np.uint8))


def test_outline_is_simple(random_hands):
    for hand in random_hands:
        points, _ = synth.build_outline(hand.spec)
        assert synth.is_simple(points)
    crossing = np.array([[0.0, 0.0], [4.0, 4.0], [4.0, 0.0], [0.0, 4.0]])
    assert not synth.is_simple(crossing)


def test_sidecar_has_truth_and_features(left_hand):
    lines = left_hand.truth.sidecar().splitlines()
    keys = [l.split("=")[0] for l in lines]
    assert keys[:4] == ["hand_type", "R", "A", "B"]
    assert keys[-26:] == [f"f{i}" for i in range(1, 27)]
    assert "tip_middle" in keys


# ------------------------------------------------------------ populations

def _labels(pop):
    return [(li.subject_id, li.hand_type) for li in pop]


def test_small_population_is_recognized():
    pop = synth.generate_population(2, 3, intra_noise=2.0, inter_gap=20.0, seed=7)
    assert len(pop) == 6
    samples = []
    for li in pop:
        r = process(li.image)
        samples.append(Sample(li.subject_id, r.hand.hand_type, r.features))
    assert table2_protocol(samples, 2).rate == 100.0


def test_population_is_seed_deterministic():
    a = synth.generate_population(3, 2, intra_noise=1.0, inter_gap=10.0, seed=11)
    b = synth.generate_population(3, 2, intra_noise=1.0, inter_gap=10.0, seed=11)
    assert _labels(a) == _labels(b)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.image, y.image)


def test_zero_noise_repeats_images():
    pop = synth.generate_population(3, 3, intra_noise=0.0, inter_gap=10.0, seed=12)
    for s in range(3):
        imgs = [li.image for li in pop[3 * s : 3 * s + 3]]
        for img in imgs[1:]:
            np.testing.assert_array_equal(img, imgs[0])


def _params(spec):
    vals = [v for f in spec.fingers for v in (f.length, f.base_width, f.tip_width)]
    return np.array(vals + [spec.palm_breadth, spec.wrist_breadth, spec.palm_length, spec.thumb_drop])


def test_subject_bases_respect_the_gap():
    pop = synth.generate_population(8, 1, intra_noise=0.0, inter_gap=12.0, seed=13)
    vecs = [_params(li.spec) for li in pop]
    for i in range(len(vecs)):
        for j in range(i + 1, len(vecs)):
            assert np.linalg.norm(vecs[i] - vecs[j]) >= 12.0


def test_perturbation_is_bounded():
    rng = np.random.default_rng(14)
    base = synth.random_spec(rng)
    for _ in range(20):
        moved = synth.perturb(base, rng, 2.0)
        diff = _params(moved) - _params(base)
        middle_length = 6  # may be raised to keep the middle finger longest
        others = np.delete(diff, middle_length)
        assert np.abs(others).max() <= 2.0
        moved.validate()


def test_separability_warning():
    with pytest.warns(UserWarning):
        synth.generate_population(2, 1, intra_noise=5.0, inter_gap=8.0, seed=0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        synth.generate_population(2, 1, intra_noise=1.0, inter_gap=8.0, seed=0)


def test_population_rejects_bad_counts():
    with pytest.raises(InvalidSpecError):
        synth.generate_population(0, 3, 1.0, 8.0, seed=0)
    with pytest.raises(InvalidSpecError):
        synth.generate_population(2, 0, 1.0, 8.0, seed=0)
