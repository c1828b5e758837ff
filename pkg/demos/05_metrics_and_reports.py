"""The WCSR metric family and error analysis.

Scores one deliberately imperfect estimate against a reference under every
comparator, shows class-wise scores and the quality confusion matrix, and
lists incorrect regions.
"""

import numpy as np

from chordkit.annotate import fill_gaps, frame_labels, grid_for
from chordkit.decode import incorrect_regions
from chordkit.harte import parse_chord
from chordkit.metrics import (MetricKind, class_wise_scores, confusion_matrix,
                              path_from_annotation, quality_axis, wcsr)
from chordkit.vocab import get_vocabulary, id_label

REFERENCE = [
    (0.0, 4.0, "C:maj"),
    (4.0, 8.0, "A:min7"),
    (8.0, 12.0, "F:maj7"),
    (12.0, 16.0, "G:7"),
]

# the estimate gets the roots right but fumbles qualities and one boundary
ESTIMATE = [
    (0.0, 4.5, "C:maj7"),   # wrong seventh, late boundary
    (4.5, 8.0, "A:min"),    # missing seventh
    (8.0, 12.0, "F:maj7"),  # exact
    (12.0, 16.0, "G:maj"),  # missing seventh
]


def main():
    vocab = get_vocabulary(170)
    ref_ann = fill_gaps([(s, e, parse_chord(t)) for s, e, t in REFERENCE])
    est_ann = fill_gaps([(s, e, parse_chord(t)) for s, e, t in ESTIMATE])
    songs = [(path_from_annotation(ref_ann, vocab),
              path_from_annotation(est_ann, vocab))]

    print("Comparator family on the same prediction:")
    for kind in MetricKind:
        print(f"  {kind.value:8s} {wcsr(kind, songs, vocab):6.2f}")

    mean, median, table = class_wise_scores(MetricKind.ACC, songs, vocab)
    print(f"\nClass-wise accuracy: mean {mean:.2f}, median {median:.2f}")
    for cid, score in table.items():
        print(f"  {str(id_label(cid, vocab)):10s} {score:6.2f}")

    grid = grid_for(ref_ann.duration)
    ref_ids = frame_labels(ref_ann, grid, vocab)
    est_ids = frame_labels(est_ann, grid, vocab)
    cm = confusion_matrix("quality", [(ref_ids, est_ids)], vocab,
                          row_normalize=True)
    axis = quality_axis(vocab)
    print("\nNon-zero rows of the quality confusion matrix:")
    for i, name in enumerate(axis):
        if cm[i].sum() > 0:
            tops = np.argsort(cm[i])[::-1][:2]
            cells = ", ".join(f"{axis[j]}={cm[i, j]:.2f}" for j in tops if cm[i, j] > 0)
            print(f"  {name:8s} -> {cells}")

    print("\nIncorrect regions (start frame, length, predicted):")
    for start, length, pred in incorrect_regions(est_ids, ref_ids):
        print(f"  frame {start:3d}, {length:3d} frames, "
              f"predicted {id_label(pred, vocab)}")


if __name__ == "__main__":
    main()
