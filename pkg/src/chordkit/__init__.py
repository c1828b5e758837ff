"""chordkit: chord recognition toolkit.

Harte notation parsing, chord vocabularies, frame/beat alignment, frame-wise
chord classifiers with weighted and structured losses, HMM output smoothing,
WCSR evaluation, CQT pitch augmentation and synthetic progression
generation.
"""

__version__ = "0.1.0"

from .harte import ChordLabel, format_chord, parse_chord, pitch_class_set, transpose_label
from .vocab import Vocabulary, get_vocabulary, id_info, map_label, transpose_id

__all__ = [
    "ChordLabel",
    "Vocabulary",
    "format_chord",
    "get_vocabulary",
    "id_info",
    "map_label",
    "parse_chord",
    "pitch_class_set",
    "transpose_id",
    "transpose_label",
    "__version__",
]
