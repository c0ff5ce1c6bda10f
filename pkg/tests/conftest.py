from __future__ import annotations

import numpy as np
import pytest

from handgeom import synth
from handgeom.normalize import HandType, normalize


@pytest.fixture(scope="session")
def left_spec():
    return synth.HandSpec(hand_type=HandType.LEFT, seed=3)


@pytest.fixture(scope="session")
def left_hand(left_spec):
    return synth.generate(left_spec)


@pytest.fixture(scope="session")
def right_hand(left_spec):
    return synth.generate(left_spec.mirrored())


@pytest.fixture(scope="session")
def left_normalized(left_hand):
    return normalize(left_hand.image)


@pytest.fixture(scope="session")
def random_hands():
    """Twelve varied hands: both types, all poses."""
    rng = np.random.default_rng(20240611)
    out = []
    for i in range(12):
        hand_type = HandType.LEFT if i % 2 == 0 else HandType.RIGHT
        spec = synth.random_spec(rng, hand_type, pose=synth.POSES[i % 4], seed=i)
        out.append(synth.generate(spec))
    return out
