"""Annotations, frame grids, label/frame alignment and integrity checks.

Annotation files are lab-style TSV: ``start<TAB>end<TAB>harte_label`` per
line, sorted by start time. Gaps between labelled segments are filled with
no-chord segments so that annotations tile [0, duration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import harte
from .errors import DegenerateSignal, MalformedChord, MalformedLine, NonMonotoneTimes
from .harte import ChordLabel
from .vocab import Vocabulary, map_label

DEFAULT_SR = 44100
DEFAULT_HOP_SAMPLES = 4096
DEFAULT_HOP = DEFAULT_HOP_SAMPLES / DEFAULT_SR


@dataclass(frozen=True)
class Annotation:
    """Time-sorted, non-overlapping chord segments for one song."""

    segments: tuple[tuple[float, float, ChordLabel], ...]
    duration: float

    def __post_init__(self):
        prev_end = 0.0
        for start, end, _ in self.segments:
            if start < 0 or end <= start:
                raise NonMonotoneTimes(f"bad segment times ({start}, {end})")
            if start < prev_end - 1e-9:
                raise NonMonotoneTimes(f"overlapping segment at {start}")
            prev_end = end
        if self.segments and self.duration < self.segments[-1][1] - 1e-9:
            raise NonMonotoneTimes("duration shorter than last segment end")

    def label_at(self, t: float) -> ChordLabel:
        """Label of the segment whose half-open [start, end) contains t."""
        for start, end, label in self.segments:
            if start <= t < end:
                return label
        return harte.NO_CHORD

    def boundaries(self) -> list[float]:
        """Internal segment start times (t > 0)."""
        return [start for start, _, _ in self.segments if start > 0]


@dataclass(frozen=True)
class FrameGrid:
    """Uniform frame grid: frame i covers [i*hop, (i+1)*hop)."""

    hop: float
    n_frames: int

    def centers(self) -> np.ndarray:
        return (np.arange(self.n_frames) + 0.5) * self.hop


def n_frames_for(duration: float, hop_samples: int = DEFAULT_HOP_SAMPLES,
                 sr: int = DEFAULT_SR) -> int:
    """Frame count: ceil(sr / hop_samples * duration)."""
    return math.ceil(sr / hop_samples * duration)


def grid_for(duration: float, hop: float = DEFAULT_HOP) -> FrameGrid:
    return FrameGrid(hop=hop, n_frames=math.ceil(duration / hop))


def fill_gaps(segments, duration=None) -> Annotation:
    """Insert no-chord segments so the annotation tiles [0, duration)."""
    segments = sorted(segments, key=lambda s: s[0])
    filled = []
    cursor = 0.0
    for start, end, label in segments:
        if start > cursor + 1e-9:
            filled.append((cursor, start, harte.NO_CHORD))
        filled.append((start, end, label))
        cursor = end
    if duration is None:
        duration = cursor
    elif duration > cursor + 1e-9:
        filled.append((cursor, duration, harte.NO_CHORD))
    elif duration < cursor:
        # annotation files carry microsecond precision, so a stated duration
        # may round to just under the last segment end
        if duration < cursor - 1e-6:
            raise NonMonotoneTimes(
                f"duration {duration} shorter than last segment end {cursor}")
        duration = cursor
    return Annotation(segments=tuple(filled), duration=float(duration))


def load_annotation(path, duration=None) -> Annotation:
    """Read a lab-style TSV annotation file."""
    segments = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise MalformedLine(line_no, f"expected 3 tab-separated fields, got {len(parts)}")
            try:
                start, end = float(parts[0]), float(parts[1])
            except ValueError as exc:
                raise MalformedLine(line_no, str(exc)) from None
            if end <= start or start < 0:
                raise NonMonotoneTimes(f"line {line_no}: end {end} <= start {start}")
            try:
                label = harte.parse_chord(parts[2].strip())
            except MalformedChord as exc:
                raise MalformedLine(line_no, str(exc)) from None
            segments.append((start, end, label))
    return fill_gaps(segments, duration=duration)


def save_annotation(ann: Annotation, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for start, end, label in ann.segments:
            fh.write(f"{start:.6f}\t{end:.6f}\t{harte.format_chord(label)}\n")


def transpose_annotation(ann: Annotation, k: int) -> Annotation:
    segments = tuple(
        (start, end, harte.transpose_label(label, k)) for start, end, label in ann.segments
    )
    return Annotation(segments=segments, duration=ann.duration)


def frame_labels(ann: Annotation, grid: FrameGrid, vocab: Vocabulary) -> np.ndarray:
    """ChordId per frame, decided by the segment containing the frame center."""
    ids = np.full(grid.n_frames, vocab.n_id, dtype=np.int64)
    if not ann.segments:
        return ids
    starts = np.array([s for s, _, _ in ann.segments])
    ends = np.array([e for _, e, _ in ann.segments])
    seg_ids = np.array([map_label(lbl, vocab) for _, _, lbl in ann.segments])
    centers = grid.centers()
    # index of the last segment whose start <= center
    idx = np.searchsorted(starts, centers, side="right") - 1
    valid = idx >= 0
    inside = np.zeros(grid.n_frames, dtype=bool)
    inside[valid] = centers[valid] < ends[idx[valid]]
    ids[inside] = seg_ids[idx[inside]]
    return ids


def frame_label_objects(ann: Annotation, grid: FrameGrid) -> list[ChordLabel]:
    """ChordLabel per frame center (N for uncovered frames)."""
    return [ann.label_at(t) for t in grid.centers()]


def interval_labels(ann: Annotation, intervals, vocab: Vocabulary) -> np.ndarray:
    """Max-overlap ChordId per (start, end) interval."""
    ids = np.empty(len(intervals), dtype=np.int64)
    seg_ids = [(s, e, map_label(lbl, vocab)) for s, e, lbl in ann.segments]
    for i, (start, end) in enumerate(intervals):
        overlap: dict[int, float] = {}
        for s, e, cid in seg_ids:
            d = min(end, e) - max(start, s)
            if d > 0:
                overlap[cid] = overlap.get(cid, 0.0) + d
        uncovered = (end - start) - sum(overlap.values())
        if uncovered > 1e-9:
            overlap[vocab.n_id] = overlap.get(vocab.n_id, 0.0) + uncovered
        ids[i] = max(overlap.items(), key=lambda kv: (kv[1], -kv[0]))[0]
    return ids


def transition_mask(ann: Annotation, grid: FrameGrid) -> np.ndarray:
    """True for frames [i*hop, (i+1)*hop) containing a segment boundary t > 0."""
    mask = np.zeros(grid.n_frames, dtype=bool)
    for t in ann.boundaries():
        i = int(t / grid.hop)
        if 0 <= i < grid.n_frames:
            mask[i] = True
    return mask


def chord_change_signal(ann: Annotation, grid: FrameGrid) -> np.ndarray:
    """Binary per-frame vector: 1 where a chord change falls in the frame."""
    return transition_mask(ann, grid).astype(np.float64)


def feature_derivative_signal(data: np.ndarray) -> np.ndarray:
    """Per-frame derivative magnitude: sum over bins of |first difference|."""
    deriv = np.zeros(data.shape[0], dtype=np.float64)
    if data.shape[0] > 1:
        deriv[1:] = np.abs(np.diff(data, axis=0)).sum(axis=1)
    return deriv


def _standardize(signal: np.ndarray) -> np.ndarray:
    std = signal.std()
    if std == 0:
        raise DegenerateSignal("signal has zero variance")
    return (signal - signal.mean()) / std


def alignment_lag(feat, ann: Annotation, window_frames: int = 50) -> int:
    """Lag (in frames) maximizing the normalized cross-correlation between
    the feature-derivative magnitude and the chord-change vector.

    Positive lag means the features change after the annotations. Ties are
    broken toward the smallest absolute lag.
    """
    if window_frames <= 0:
        raise ValueError("window_frames must be positive")
    data = feat.data if hasattr(feat, "data") else np.asarray(feat)
    grid = FrameGrid(hop=feat.hop if hasattr(feat, "hop") else DEFAULT_HOP,
                     n_frames=data.shape[0])
    deriv = _standardize(feature_derivative_signal(data))
    changes = _standardize(chord_change_signal(ann, grid))

    n = len(deriv)
    best_lag, best_score = 0, -np.inf
    lags = sorted(range(-window_frames, window_frames + 1), key=lambda l: (abs(l), l))
    for lag in lags:
        # corr(lag) = sum_i deriv[i] * changes[i - lag] over the overlap
        if lag >= 0:
            a, b = deriv[lag:], changes[: n - lag]
        else:
            a, b = deriv[: n + lag], changes[-lag:]
        if len(a) == 0:
            continue
        score = float(np.dot(a, b)) / len(a)
        if score > best_score:
            best_score, best_lag = score, lag
    return best_lag
