"""Scan to feature vector in one call."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import netpbm
from .features import extract_features
from .landmarks import LandmarkSet, extract_landmarks
from .normalize import GUILLOTINE_FRACTION, NormalizedHand, normalize


@dataclass(frozen=True)
class Processed:
    hand: NormalizedHand
    landmarks: LandmarkSet
    features: np.ndarray


def process(image: np.ndarray, median_window: int = 3, bright_hand: bool = True,
            fraction: float = GUILLOTINE_FRACTION) -> Processed:
    """Normalize a grayscale scan, locate landmarks and measure features."""
    hand = normalize(image, median_window, bright_hand, fraction)
    lm = extract_landmarks(hand)
    return Processed(hand, lm, extract_features(hand, lm))


def process_file(path, **kwargs) -> Processed:
    return process(netpbm.read_gray(path), **kwargs)
