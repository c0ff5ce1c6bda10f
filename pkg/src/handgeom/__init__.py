"""Hand-geometry biometrics: silhouette normalization, landmark and
feature extraction, template matching and evaluation protocols."""

from .features import extract_features
from .landmarks import LandmarkSet, extract_landmarks
from .matching import Decision, TemplateDB, identify, verify
from .normalize import HandType, NormalizedHand, normalize
from .pipeline import Processed, process, process_file

__version__ = "0.1.0"

__all__ = [
    "Decision",
    "HandType",
    "LandmarkSet",
    "NormalizedHand",
    "Processed",
    "TemplateDB",
    "extract_features",
    "extract_landmarks",
    "identify",
    "normalize",
    "process",
    "process_file",
    "verify",
]
