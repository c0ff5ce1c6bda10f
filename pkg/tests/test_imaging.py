import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from handgeom import imaging
from handgeom.errors import (
    DegenerateHistogramError,
    DimensionError,
    MalformedSilhouetteError,
    NoHandError,
    ParameterError,
)

gray = arrays(np.uint8, st.tuples(st.integers(1, 8), st.integers(1, 8)))
binary = arrays(np.uint8, st.tuples(st.integers(2, 12), st.integers(2, 12)), elements=st.integers(0, 1))


# ------------------------------------------------------------ grayscale

@pytest.mark.parametrize(
    "rgb, expected",
    [((255, 255, 255), 255), ((0, 0, 0), 0), ((100, 150, 200), 141)],
)
def test_grayscale_examples(rgb, expected):
    img = np.array([[rgb]], dtype=np.uint8)
    assert imaging.to_grayscale(img)[0, 0] == expected


@given(arrays(np.uint8, (3, 4, 3)))
def test_grayscale_matches_exact_formula(img):
    out = imaging.to_grayscale(img)
    for r in range(3):
        for c in range(4):
            assert out[r, c] == oracles.luminance(*map(int, img[r, c]))


@pytest.mark.parametrize("shape", [(0, 4, 3), (4, 0, 3), (4, 4, 4), (4, 4)])
def test_grayscale_rejects_bad_shapes(shape):
    with pytest.raises(DimensionError):
        imaging.to_grayscale(np.zeros(shape, dtype=np.uint8))


# ------------------------------------------------------------ otsu

def test_otsu_bimodal():
    img = np.array([10] * 8 + [200] * 8, dtype=np.uint8).reshape(4, 4)
    t = imaging.otsu_threshold(img)
    assert 10 <= t < 200


def test_otsu_constant_image_is_degenerate():
    with pytest.raises(DegenerateHistogramError):
        imaging.otsu_threshold(np.full((4, 4), 128, dtype=np.uint8))


def test_otsu_random_8x8_matches_exhaustive_scan():
    rng = np.random.default_rng(1)
    for _ in range(20):
        img = rng.integers(0, 256, (8, 8), dtype=np.uint8)
        assert imaging.otsu_threshold(img) == oracles.otsu(img)


@settings(max_examples=60)
@given(gray)
def test_otsu_agrees_with_oracle(img):
    if len(np.unique(img)) < 2:
        with pytest.raises(DegenerateHistogramError):
            imaging.otsu_threshold(img)
    else:
        assert imaging.otsu_threshold(img) == oracles.otsu(img)


# ------------------------------------------------------------ binarize

def test_binarize_examples():
    assert imaging.binarize(np.full((3, 3), 255, np.uint8), 100).min() == 1
    assert imaging.binarize(np.zeros((3, 3), np.uint8), 100).max() == 0
    checker = (np.indices((4, 4)).sum(axis=0) % 2).astype(np.uint8)
    np.testing.assert_array_equal(imaging.binarize(checker * 255, 100), checker)


def test_binarize_polarity_flag():
    img = np.array([[0, 255]], dtype=np.uint8)
    np.testing.assert_array_equal(imaging.binarize(img, 100, bright_foreground=False), [[1, 0]])


@given(binary)
def test_binarize_idempotent_on_binary_input(mask):
    once = imaging.binarize(mask, 0)
    np.testing.assert_array_equal(once, mask)
    np.testing.assert_array_equal(imaging.binarize(once, 0), once)


@pytest.mark.parametrize("t", [-1, 256])
def test_binarize_rejects_bad_threshold(t):
    with pytest.raises(ParameterError):
        imaging.binarize(np.zeros((2, 2), np.uint8), t)


# ------------------------------------------------------------ median

def test_median_constant_image_unchanged():
    img = np.full((6, 5), 77, dtype=np.uint8)
    np.testing.assert_array_equal(imaging.median_filter(img), img)


def test_median_removes_salt():
    img = np.zeros((7, 7), dtype=np.uint8)
    img[3, 3] = 255
    assert imaging.median_filter(img, 3).max() == 0


def test_median_5x5_matches_sort_oracle():
    rng = np.random.default_rng(2)
    img = rng.integers(0, 256, (5, 5), dtype=np.uint8)
    np.testing.assert_array_equal(imaging.median_filter(img, 3), oracles.median3(img))


@given(gray)
def test_median_matches_oracle_and_uses_window_values(img):
    out = imaging.median_filter(img, 3)
    np.testing.assert_array_equal(out, oracles.median3(img))
    assert set(np.unique(out)) <= set(np.unique(img))


def test_median_larger_window_clamps_borders():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, (6, 9), dtype=np.uint8)
    out = imaging.median_filter(img, 5)
    padded = np.pad(img, 2, mode="edge")
    for r in range(6):
        for c in range(9):
            assert out[r, c] == np.sort(padded[r : r + 5, c : c + 5].ravel())[12]


@pytest.mark.parametrize("window", [0, 1, 2, 4])
def test_median_rejects_bad_window(window):
    with pytest.raises(ParameterError):
        imaging.median_filter(np.zeros((4, 4), np.uint8), window)


# ------------------------------------------------------------ components

def test_largest_component_single_is_identity():
    mask = np.zeros((6, 6), np.uint8)
    mask[1:4, 2:5] = 1
    np.testing.assert_array_equal(imaging.largest_component(mask), mask)


def test_largest_component_drops_wristwatch_artifact():
    mask = np.zeros((20, 20), np.uint8)
    mask[2:12, 2:7] = 1  # 50 pixels
    mask[16, 16:19] = 1  # 3 pixels
    out = imaging.largest_component(mask)
    assert out.sum() == 50 and out[16].sum() == 0


def test_largest_component_tie_goes_to_topmost_leftmost():
    mask = np.zeros((6, 6), np.uint8)
    mask[4, 0:2] = 1
    mask[0, 4:6] = 1
    out = imaging.largest_component(mask)
    assert out[0, 4] == 1 and out[4, 0] == 0


def test_diagonal_pixels_are_one_component():
    mask = np.eye(5, dtype=np.uint8)
    assert imaging.label_components(mask)[1] == 1


def test_largest_component_empty_raises():
    with pytest.raises(NoHandError):
        imaging.largest_component(np.zeros((3, 3), np.uint8))


@settings(max_examples=80)
@given(binary)
def test_largest_component_matches_flood_fill(mask):
    if mask.sum() == 0:
        return
    out = imaging.largest_component(mask)
    np.testing.assert_array_equal(out, oracles.largest_by_flood(mask))
    assert out.sum() <= mask.sum()
    assert imaging.label_components(out)[1] == 1


# ------------------------------------------------------------ contour

def test_square_contour_has_36_points():
    mask = np.zeros((20, 20), np.uint8)
    mask[5:15, 5:15] = 1
    contour = imaging.sobel_contour(mask)
    assert len(contour) == 36
    assert tuple(contour[0]) == (5, 5)
    # clockwise: the walk leaves the top-left corner eastward
    assert tuple(contour[1]) == (5, 6)


def test_single_pixel_contour_is_malformed():
    mask = np.zeros((5, 5), np.uint8)
    mask[2, 2] = 1
    with pytest.raises(MalformedSilhouetteError):
        imaging.sobel_contour(mask)


def test_empty_contour_raises():
    with pytest.raises(NoHandError):
        imaging.sobel_contour(np.zeros((5, 5), np.uint8))


def _check_closed_walk(contour, unique=True):
    steps = np.abs(np.diff(np.vstack([contour, contour[:1]]), axis=0))
    assert steps.max() <= 1 and (steps.sum(axis=1) > 0).all()
    if unique:
        assert len({tuple(p) for p in contour}) == len(contour)


def test_hand_contour_equals_morphological_boundary(left_normalized):
    mask = left_normalized.mask
    contour = imaging.sobel_contour(mask)
    _check_closed_walk(contour)
    points = {tuple(int(v) for v in p) for p in contour}
    assert points == oracles.morphological_boundary(mask)
    sobel = {tuple(p) for p in np.argwhere(imaging.sobel_boundary(mask))}
    assert points == sobel


def _blob(rng, size=16):
    from scipy import ndimage

    mask = np.zeros((size, size), np.uint8)
    for _ in range(4):
        r, c = rng.integers(1, size - 5, 2)
        h, w = rng.integers(2, 7, 2)
        mask[r : r + h, c : c + w] = 1
    return ndimage.binary_fill_holes(imaging.largest_component(mask)).astype(np.uint8)


def _regular(mask):
    """No 1-px spurs and no diagonal pinches: a walk never needs to
    pass a pixel twice."""
    from scipy import ndimage

    opened = ndimage.binary_opening(mask, np.ones((3, 3)), border_value=0)
    a, b, c, d = mask[:-1, :-1], mask[:-1, 1:], mask[1:, :-1], mask[1:, 1:]
    pinch = ((a == d) & (b == c) & (a != b)).any()
    return np.array_equal(opened, mask > 0) and not pinch


def test_random_blob_contours_are_closed_boundaries():
    rng = np.random.default_rng(5)
    regular = 0
    for _ in range(200):
        mask = _blob(rng)
        if mask.sum() < 9:
            continue
        contour = imaging.sobel_contour(mask)
        boundary = oracles.morphological_boundary(mask)
        points = {tuple(int(v) for v in p) for p in contour}
        assert points <= boundary
        assert tuple(contour[0]) == tuple(np.argwhere(mask)[0])
        if _regular(mask):
            regular += 1
            _check_closed_walk(contour)
            # Sobel cancels on saddle pixels whose only background
            # neighbours are two opposite diagonals, so compare to Sobel
            assert points == {tuple(p) for p in np.argwhere(imaging.sobel_boundary(mask))}
        else:
            _check_closed_walk(contour, unique=False)
    assert regular >= 20


def test_sobel_magnitude_of_step():
    mask = np.zeros((3, 4), np.uint8)
    mask[:, 2:] = 1
    mag = imaging.sobel_magnitude(mask)
    assert mag[1, 1] == 16 and mag[1, 2] == 16
