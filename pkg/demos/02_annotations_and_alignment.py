"""Annotations, frame grids and data-integrity checks.

Builds a small chord annotation, converts it to per-frame training targets,
then demonstrates the cross-correlation check that estimates the lag between
features and annotations.
"""

import numpy as np

from chordkit.annotate import (DEFAULT_HOP, alignment_lag, fill_gaps,
                               frame_labels, grid_for, n_frames_for)
from chordkit.features import render_synthetic_cqt
from chordkit.harte import parse_chord
from chordkit.vocab import get_vocabulary, id_info


def main():
    vocab = get_vocabulary(170)
    hop = DEFAULT_HOP

    print(f"Frame grid: hop = 4096 / 44100 = {hop:.6f} s")
    print(f"A 3-minute song has F = ceil(44100/4096 * 180) = "
          f"{n_frames_for(180.0)} frames\n")

    # an annotation with a gap: [1.5, 2.0) is silence and becomes N
    segments = [
        (0.0, 1.5, parse_chord("C:maj")),
        (2.0, 3.5, parse_chord("A:min7")),
        (3.5, 5.0, parse_chord("G:7")),
    ]
    ann = fill_gaps(segments, duration=5.0)
    print("Gap-filled annotation:")
    for start, end, label in ann.segments:
        print(f"  [{start:4.2f}, {end:4.2f})  {label}")

    grid = grid_for(ann.duration)
    ids = frame_labels(ann, grid, vocab)
    changes = np.flatnonzero(np.diff(ids)) + 1
    print(f"\n{grid.n_frames} frames; label changes at frames {list(changes)}")
    print("First frames:", [id_info(int(c), vocab) for c in ids[:3]])

    # alignment check: rendered features change exactly when the labels do,
    # so the best cross-correlation lag is zero
    feat = render_synthetic_cqt(ann, grid)
    print(f"\nAlignment lag on matching features: "
          f"{alignment_lag(feat, ann)} frames")

    # simulate features that lag the annotation by 3 frames
    delayed = np.vstack([np.tile(feat.data[0], (3, 1)), feat.data[:-3]])
    feat_delayed = type(feat)(data=delayed, hop=feat.hop,
                              bins_per_octave=feat.bins_per_octave,
                              floor_db=feat.floor_db)
    print(f"Alignment lag on 3-frame-delayed features: "
          f"{alignment_lag(feat_delayed, ann)} frames")


if __name__ == "__main__":
    main()
