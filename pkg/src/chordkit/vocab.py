"""Closed chord vocabularies and the integer id scheme.

Chord ids follow ``quality_index * 12 + root`` with two trailing sentinels:
``C - 2`` for N (no chord) and ``C - 1`` for X (unknown). The large
vocabulary has 14 qualities (C = 170), the small one major/minor only
(C = 26), with small-vocabulary mapping defined as a reduction of the large
one.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from . import harte
from .errors import IdOutOfRange
from .harte import ChordKind, ChordLabel, QUALITY_TEMPLATES

MANIFEST_VERSION = 1

_TRIAD_FALLBACK = [
    ("maj", frozenset({0, 4, 7})),
    ("min", frozenset({0, 3, 7})),
    ("dim", frozenset({0, 3, 6})),
    ("aug", frozenset({0, 4, 8})),
]


@dataclass(frozen=True)
class Vocabulary:
    """An ordered set of chord qualities plus the N/X sentinels."""

    qualities: tuple[str, ...]
    templates: tuple[frozenset[int], ...]
    reduce_to_majmin: bool = False

    @property
    def size(self) -> int:
        return 12 * len(self.qualities) + 2

    @property
    def n_id(self) -> int:
        return self.size - 2

    @property
    def x_id(self) -> int:
        return self.size - 1

    def quality_index(self, quality: str) -> int:
        return self.qualities.index(quality)

    def chord_id(self, root: int, quality: str) -> int:
        return self.quality_index(quality) * 12 + root % 12


def vocabulary_170() -> Vocabulary:
    names = tuple(harte.QUALITY_ORDER)
    return Vocabulary(
        qualities=names,
        templates=tuple(QUALITY_TEMPLATES[q] for q in names),
    )


def vocabulary_26() -> Vocabulary:
    return Vocabulary(
        qualities=("maj", "min"),
        templates=(QUALITY_TEMPLATES["maj"], QUALITY_TEMPLATES["min"]),
        reduce_to_majmin=True,
    )


_VOCAB_170 = vocabulary_170()


def map_label(label: ChordLabel, vocab: Vocabulary) -> int:
    """Map an arbitrary parsed label into the vocabulary. Total function."""
    if label.kind is ChordKind.NO_CHORD:
        return vocab.n_id
    if label.kind is ChordKind.UNKNOWN:
        return vocab.x_id

    if vocab.reduce_to_majmin:
        large_id = map_label(label, _VOCAB_170)
        return _reduce_to_small(large_id, _VOCAB_170, vocab)

    pcs = harte.pitch_class_set(label)
    relative = frozenset((p - label.root) % 12 for p in pcs)
    for qi, template in enumerate(vocab.templates):
        if relative == template:
            return qi * 12 + label.root
    for name, triad in _TRIAD_FALLBACK:
        if name in vocab.qualities and triad <= relative:
            return vocab.quality_index(name) * 12 + label.root
    return vocab.x_id


def _reduce_to_small(large_id: int, large: Vocabulary, small: Vocabulary) -> int:
    if large_id == large.n_id:
        return small.n_id
    if large_id == large.x_id:
        return small.x_id
    quality = large.qualities[large_id // 12]
    root = large_id % 12
    template = QUALITY_TEMPLATES[quality]
    if frozenset({0, 4, 7}) <= template:
        return small.chord_id(root, "maj")
    if frozenset({0, 3, 7}) <= template:
        return small.chord_id(root, "min")
    return small.x_id


def id_info(chord_id: int, vocab: Vocabulary):
    """Inverse of the id scheme: (root, quality) tuple, or 'N'/'X'."""
    if not 0 <= chord_id < vocab.size:
        raise IdOutOfRange(f"id {chord_id} outside [0, {vocab.size})")
    if chord_id == vocab.n_id:
        return "N"
    if chord_id == vocab.x_id:
        return "X"
    return chord_id % 12, vocab.qualities[chord_id // 12]


def id_label(chord_id: int, vocab: Vocabulary) -> ChordLabel:
    """ChordLabel for a vocabulary class id."""
    info = id_info(chord_id, vocab)
    if info == "N":
        return harte.NO_CHORD
    if info == "X":
        return harte.UNKNOWN_CHORD
    root, quality = info
    return ChordLabel(kind=ChordKind.CHORD, root=root, quality=quality)


def id_pitch_classes(chord_id: int, vocab: Vocabulary) -> frozenset[int]:
    """Absolute pitch classes of a chord id; empty set for N and X."""
    info = id_info(chord_id, vocab)
    if info in ("N", "X"):
        return frozenset()
    root, quality = info
    return frozenset((p + root) % 12 for p in QUALITY_TEMPLATES[quality])


def transpose_id(chord_id: int, k: int, vocab: Vocabulary) -> int:
    """Rotate the root by k within the same quality; N/X are fixed points."""
    if not 0 <= chord_id < vocab.size:
        raise IdOutOfRange(f"id {chord_id} outside [0, {vocab.size})")
    if chord_id >= vocab.n_id:
        return chord_id
    quality_index, root = divmod(chord_id, 12)
    return quality_index * 12 + (root + k) % 12


# --- manifest serialization ---

def manifest_text(vocab: Vocabulary) -> str:
    """Versioned text manifest fixing quality order and templates."""
    lines = [f"chordkit-vocab v{MANIFEST_VERSION}", f"reduce_to_majmin {int(vocab.reduce_to_majmin)}"]
    for name, template in zip(vocab.qualities, vocab.templates):
        lines.append(f"{name} {','.join(str(p) for p in sorted(template))}")
    return "\n".join(lines) + "\n"


def manifest_hash(vocab: Vocabulary) -> str:
    return hashlib.sha256(manifest_text(vocab).encode()).hexdigest()


def save_manifest(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(manifest_text(vocab))


def load_manifest(path) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split()
    if header[:1] != ["chordkit-vocab"] or header[1] != f"v{MANIFEST_VERSION}":
        raise IdOutOfRange(f"unrecognized vocabulary manifest header: {lines[0]!r}")
    reduce_flag = bool(int(lines[1].split()[1]))
    names, templates = [], []
    for line in lines[2:]:
        if not line:
            continue
        name, pcs = line.split()
        names.append(name)
        templates.append(frozenset(int(p) for p in pcs.split(",")))
    return Vocabulary(tuple(names), tuple(templates), reduce_to_majmin=reduce_flag)


def get_vocabulary(size: int) -> Vocabulary:
    if size == 170:
        return vocabulary_170()
    if size == 26:
        return vocabulary_26()
    raise ValueError(f"unsupported vocabulary size {size}; expected 170 or 26")
