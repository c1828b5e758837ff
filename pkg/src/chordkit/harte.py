"""Parsing and manipulation of chord labels in Harte notation.

Supported grammar::

    chord   := "N" | "X" | note ":" quality [ "(" degrees ")" ] [ "/" degree ]
    note    := [A-G] ("#" | "b")*
    degrees := degree ("," degree)*
    degree  := "*"? ("#" | "b")* integer(1-13)

Interval-list-only chords such as ``C:(1,3,5)`` are outside the grammar and
raise :class:`MalformedChord`; dataset-facing code maps such labels to the
unknown class instead.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .errors import MalformedChord, UnknownDegree

# Natural note names to pitch classes (0 = C).
NOTE_PITCH = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}

# Canonical (sharp-based) pitch class names used when printing labels.
PITCH_NAMES = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"]

# Root-relative pitch class templates of the 14 supported qualities, in
# vocabulary order.
QUALITY_TEMPLATES = {
    "maj": frozenset({0, 4, 7}),
    "min": frozenset({0, 3, 7}),
    "dim": frozenset({0, 3, 6}),
    "aug": frozenset({0, 4, 8}),
    "min6": frozenset({0, 3, 7, 9}),
    "maj6": frozenset({0, 4, 7, 9}),
    "min7": frozenset({0, 3, 7, 10}),
    "minmaj7": frozenset({0, 3, 7, 11}),
    "maj7": frozenset({0, 4, 7, 11}),
    "7": frozenset({0, 4, 7, 10}),
    "dim7": frozenset({0, 3, 6, 9}),
    "hdim7": frozenset({0, 3, 6, 10}),
    "sus2": frozenset({0, 2, 7}),
    "sus4": frozenset({0, 5, 7}),
}

QUALITY_ORDER = list(QUALITY_TEMPLATES)

# Scale degree to semitone offset. Degrees outside this table (8, 10, 12)
# raise UnknownDegree.
DEGREE_SEMITONES = {1: 0, 2: 2, 3: 4, 4: 5, 5: 7, 6: 9, 7: 11, 9: 2, 11: 5, 13: 9}

_NOTE_RE = re.compile(r"^([A-G])([#b]*)$")
_DEGREE_RE = re.compile(r"^(\*?)([#b]*)(\d{1,2})$")


class ChordKind(enum.Enum):
    CHORD = "chord"
    NO_CHORD = "no_chord"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ChordLabel:
    """A parsed Harte chord label.

    For NO_CHORD / UNKNOWN kinds, all other fields are empty.
    """

    kind: ChordKind = ChordKind.CHORD
    root: int | None = None
    quality: str | None = None
    additions: tuple[str, ...] = field(default_factory=tuple)
    omissions: tuple[str, ...] = field(default_factory=tuple)
    bass: str | None = None

    def is_chord(self) -> bool:
        return self.kind is ChordKind.CHORD

    def __str__(self) -> str:
        return format_chord(self)


NO_CHORD = ChordLabel(kind=ChordKind.NO_CHORD)
UNKNOWN_CHORD = ChordLabel(kind=ChordKind.UNKNOWN)


def parse_note(text: str) -> int:
    m = _NOTE_RE.match(text)
    if not m:
        raise MalformedChord(f"bad note name: {text!r}")
    name, accidentals = m.groups()
    pc = NOTE_PITCH[name]
    pc += accidentals.count("#") - accidentals.count("b")
    return pc % 12


def degree_to_semitone(degree: str) -> int:
    """Map a degree token like ``b7`` to its semitone offset (mod 12)."""
    m = _DEGREE_RE.match(degree)
    if not m:
        raise UnknownDegree(f"bad degree token: {degree!r}")
    _, accidentals, number = m.groups()
    number = int(number)
    if number not in DEGREE_SEMITONES:
        raise UnknownDegree(f"degree {number} has no semitone mapping")
    offset = DEGREE_SEMITONES[number]
    offset += accidentals.count("#") - accidentals.count("b")
    return offset % 12


def _check_degree(token: str, *, allow_omission: bool) -> str:
    m = _DEGREE_RE.match(token)
    if not m:
        raise MalformedChord(f"bad degree token: {token!r}")
    starred, _, number = m.groups()
    if starred and not allow_omission:
        raise MalformedChord(f"omission not allowed here: {token!r}")
    if not 1 <= int(number) <= 13:
        raise MalformedChord(f"degree out of range 1-13: {token!r}")
    return token


def parse_chord(text: str) -> ChordLabel:
    """Parse a Harte chord string into a :class:`ChordLabel`.

    Raises MalformedChord for anything outside the supported grammar.
    """
    if not text or text != text.strip():
        raise MalformedChord(f"empty or untrimmed label: {text!r}")
    if text == "N":
        return NO_CHORD
    if text == "X":
        return UNKNOWN_CHORD

    if ":" not in text:
        raise MalformedChord(f"missing ':' in chord label: {text!r}")
    note_part, rest = text.split(":", 1)
    root = parse_note(note_part)

    bass = None
    if "/" in rest:
        rest, bass_part = rest.rsplit("/", 1)
        bass = _check_degree(bass_part, allow_omission=False)

    additions: list[str] = []
    omissions: list[str] = []
    if "(" in rest:
        m = re.match(r"^([^()]*)\(([^()]*)\)$", rest)
        if not m:
            raise MalformedChord(f"bad parenthesized degree list: {text!r}")
        rest, degree_list = m.groups()
        if not degree_list:
            raise MalformedChord(f"empty degree list: {text!r}")
        for token in degree_list.split(","):
            token = _check_degree(token.strip(), allow_omission=True)
            if token.startswith("*"):
                omissions.append(token[1:])
            else:
                additions.append(token)

    if rest not in QUALITY_TEMPLATES:
        raise MalformedChord(f"unsupported quality: {rest!r} in {text!r}")

    return ChordLabel(
        kind=ChordKind.CHORD,
        root=root,
        quality=rest,
        additions=tuple(additions),
        omissions=tuple(omissions),
        bass=bass,
    )


def format_chord(label: ChordLabel) -> str:
    """Canonical Harte string such that parse_chord(format_chord(x)) == x."""
    if label.kind is ChordKind.NO_CHORD:
        return "N"
    if label.kind is ChordKind.UNKNOWN:
        return "X"
    parts = [PITCH_NAMES[label.root], ":", label.quality]
    degrees = list(label.additions) + ["*" + d for d in label.omissions]
    if degrees:
        parts.append("(" + ",".join(degrees) + ")")
    if label.bass is not None:
        parts.append("/" + label.bass)
    return "".join(parts)


def pitch_class_set(label: ChordLabel) -> frozenset[int]:
    """Absolute pitch classes sounded by a chord label.

    Quality template plus additions minus omissions, transposed by the root.
    """
    if not label.is_chord():
        raise MalformedChord("pitch_class_set requires a sounding chord")
    relative = set(QUALITY_TEMPLATES[label.quality])
    for token in label.additions:
        relative.add(degree_to_semitone(token))
    for token in label.omissions:
        relative.discard(degree_to_semitone(token))
    return frozenset((p + label.root) % 12 for p in relative)


def transpose_label(label: ChordLabel, k: int) -> ChordLabel:
    """Shift the root by k semitones (mod 12); N/X are returned unchanged."""
    if not label.is_chord():
        return label
    return ChordLabel(
        kind=ChordKind.CHORD,
        root=(label.root + k) % 12,
        quality=label.quality,
        additions=label.additions,
        omissions=label.omissions,
        bass=label.bass,
    )
