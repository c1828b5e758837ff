"""Chord notation and vocabularies.

Parses chord symbols written in Harte notation, shows how they map into the
fixed 170- and 26-class vocabularies, and demonstrates transposition at both
the label and the class-id level.
"""

from chordkit.harte import (format_chord, parse_chord, pitch_class_set,
                            transpose_label)
from chordkit.vocab import (get_vocabulary, id_info, id_label, map_label,
                            transpose_id)

EXAMPLES = [
    "C:maj",        # plain major triad
    "C:maj7",       # seventh chords have their own classes
    "A:hdim7/5",    # bass notes are parsed but ignored for classification
    "C:maj6(9)",    # additions force a fallback to the closest triad
    "F#:min7(*5)",  # omissions are part of the label too
    "N",            # "no chord" sentinel
    "X",            # "unknown chord" sentinel
]


def main():
    big = get_vocabulary(170)
    small = get_vocabulary(26)

    print("Parsing and mapping:")
    for text in EXAMPLES:
        label = parse_chord(text)
        cid_big = map_label(label, big)
        cid_small = map_label(label, small)
        print(f"  {text:14s} -> canonical {format_chord(label):14s} "
              f"id170={cid_big:3d} ({id_info(cid_big, big)}) "
              f"id26={cid_small:2d} ({id_info(cid_small, small)})")

    print("\nPitch-class content (why G:maj6 and E:min7 are confusable):")
    for text in ("G:maj6", "E:min7"):
        print(f"  {text:8s} -> {sorted(pitch_class_set(parse_chord(text)))}")

    print("\nTransposition commutes with classification:")
    label = parse_chord("A:min7")
    for k in (0, 3, 7):
        shifted = transpose_label(label, k)
        assert map_label(shifted, big) == transpose_id(map_label(label, big), k, big)
        print(f"  {format_chord(label)} + {k} semitones = {format_chord(shifted)} "
              f"(id {map_label(shifted, big)})")

    print("\nEvery class round-trips through its canonical text form:")
    ok = sum(map_label(parse_chord(format_chord(id_label(c, big))), big) == c
             for c in range(big.size))
    print(f"  {ok}/{big.size} classes verified")


if __name__ == "__main__":
    main()
