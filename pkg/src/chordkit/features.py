"""Feature matrices: file I/O, a synthetic CQT renderer, pitch shifting and
beat-synchronous pooling.

The on-disk "CQTF" format is little-endian binary: magic ``CQTF``,
u32 version (=1), u32 n_bins, u64 n_frames, f64 hop_seconds,
u32 bins_per_octave, f32 floor_db, then n_frames * n_bins f32 values
stored frame-major. Round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from . import harte
from .annotate import Annotation, FrameGrid
from .errors import BadBinConfig, BadMagic, EmptyBeatList, TruncatedPayload, VersionMismatch

MAGIC = b"CQTF"
VERSION = 1
_HEADER = struct.Struct("<4sIIQdIf")

DEFAULT_BINS_PER_OCTAVE = 36
DEFAULT_N_BINS = 216
DEFAULT_FLOOR_DB = -80.0


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-frame feature vectors in dB (n_frames x n_bins)."""

    data: np.ndarray
    hop: float
    bins_per_octave: int = DEFAULT_BINS_PER_OCTAVE
    floor_db: float = DEFAULT_FLOOR_DB

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_bins(self) -> int:
        return self.data.shape[1]

    def grid(self) -> FrameGrid:
        return FrameGrid(hop=self.hop, n_frames=self.n_frames)


def save_features(feat: FeatureMatrix, path) -> None:
    data = np.ascontiguousarray(feat.data, dtype="<f4")
    header = _HEADER.pack(MAGIC, VERSION, feat.n_bins, feat.n_frames,
                          feat.hop, feat.bins_per_octave, feat.floor_db)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def load_features(path) -> FeatureMatrix:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise TruncatedPayload(f"file shorter than header: {path}")
        magic, version, n_bins, n_frames, hop, bpo, floor_db = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise BadMagic(f"bad magic {magic!r} in {path}")
        if version != VERSION:
            raise VersionMismatch(f"version {version}, expected {VERSION}")
        payload = fh.read(n_frames * n_bins * 4)
    if len(payload) < n_frames * n_bins * 4:
        raise TruncatedPayload(f"payload shorter than header promises: {path}")
    data = np.frombuffer(payload, dtype="<f4").reshape(n_frames, n_bins).astype(np.float32)
    return FeatureMatrix(data=data, hop=hop, bins_per_octave=bpo, floor_db=floor_db)


def frame_times(grid: FrameGrid) -> list[tuple[float, float]]:
    """(start, end) seconds of each frame."""
    return [(i * grid.hop, (i + 1) * grid.hop) for i in range(grid.n_frames)]


def bin_pitch_classes(n_bins: int, bins_per_octave: int) -> np.ndarray:
    """Pitch class of each CQT bin, with bin 0 at C1 (pitch class 0)."""
    if bins_per_octave % 12 != 0:
        raise BadBinConfig(f"bins_per_octave {bins_per_octave} not divisible by 12")
    per_semitone = bins_per_octave // 12
    semitones = np.arange(n_bins) // per_semitone
    return (semitones % 12).astype(np.int64)


@dataclass(frozen=True)
class RenderParams:
    """Controls for the synthetic CQT renderer (test oracle)."""

    n_bins: int = DEFAULT_N_BINS
    bins_per_octave: int = DEFAULT_BINS_PER_OCTAVE
    floor_db: float = DEFAULT_FLOOR_DB
    peak_db: float = 0.0
    octave_rolloff_db: float = 6.0
    noise_db: float = 0.0
    seed: int = 0


def render_synthetic_cqt(ann: Annotation, grid: FrameGrid,
                         params: RenderParams = RenderParams()) -> FeatureMatrix:
    """Render an idealized CQT from an annotation.

    Bins whose pitch class belongs to the active chord's pitch-class set are
    set to peak_db minus octave_rolloff_db per octave above the pitch class's
    lowest in-range bin; all other bins (and N/X frames) sit at floor_db.
    """
    if params.bins_per_octave % 12 != 0:
        raise BadBinConfig(f"bins_per_octave {params.bins_per_octave} not divisible by 12")
    per_semitone = params.bins_per_octave // 12
    semitones = np.arange(params.n_bins) // per_semitone
    pcs = semitones % 12
    octaves = semitones // 12

    # one row template per pitch-class set encountered
    data = np.full((grid.n_frames, params.n_bins), params.floor_db, dtype=np.float32)
    labels = [ann.label_at(t) for t in grid.centers()]
    row_cache: dict[frozenset, np.ndarray] = {}
    for i, label in enumerate(labels):
        if not label.is_chord():
            continue
        active = harte.pitch_class_set(label)
        row = row_cache.get(active)
        if row is None:
            row = np.full(params.n_bins, params.floor_db, dtype=np.float32)
            mask = np.isin(pcs, list(active))
            row[mask] = params.peak_db - params.octave_rolloff_db * octaves[mask]
            row_cache[active] = row
        data[i] = row

    if params.noise_db > 0:
        rng = np.random.default_rng(params.seed)
        data = data + rng.normal(0.0, params.noise_db, size=data.shape).astype(np.float32)
        data = np.maximum(data, params.floor_db)

    return FeatureMatrix(data=data, hop=grid.hop,
                         bins_per_octave=params.bins_per_octave,
                         floor_db=params.floor_db)


def pitch_shift_cqt(feat: FeatureMatrix, k: int) -> FeatureMatrix:
    """Shift all bins by k semitones; vacated bins are filled with floor_db."""
    if feat.bins_per_octave % 12 != 0:
        raise BadBinConfig(f"bins_per_octave {feat.bins_per_octave} not divisible by 12")
    if abs(k) > 11:
        raise ValueError(f"|k| must be <= 11, got {k}")
    shift = k * (feat.bins_per_octave // 12)
    out = np.full_like(feat.data, feat.floor_db)
    if shift == 0:
        out[:] = feat.data
    elif shift > 0:
        out[:, shift:] = feat.data[:, :-shift]
    else:
        out[:, :shift] = feat.data[:, -shift:]
    return replace(feat, data=out)


@dataclass(frozen=True)
class BeatIntervals:
    """Contiguous, increasing (start, end) intervals derived from beats."""

    intervals: tuple[tuple[float, float], ...]
    division: str = "1"

    def __post_init__(self):
        if not self.intervals:
            raise EmptyBeatList("no beat intervals")
        prev = None
        for start, end in self.intervals:
            if end <= start or (prev is not None and abs(start - prev) > 1e-9):
                raise EmptyBeatList(f"intervals not contiguous/increasing at {start}")
            prev = end


def load_beats(path) -> list[float]:
    """Beat times, one float per line, strictly increasing."""
    times = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                times.append(float(line))
    if any(b <= a for a, b in zip(times, times[1:])):
        raise EmptyBeatList("beat times not strictly increasing")
    return times


def beat_intervals(beats: list[float], division: str = "1",
                   duration: float | None = None) -> BeatIntervals:
    """Build pooled intervals from beat times.

    division "0.25"/"0.5" subdivide each beat interval into 4/2 parts,
    "1" keeps beat intervals, "2" merges pairs of beat intervals. Music
    before the first beat is covered by a prepended interval, and a
    trailing interval is appended when duration extends past the last beat.
    """
    if not beats:
        raise EmptyBeatList("no beats")
    edges = list(beats)
    if edges[0] > 0:
        edges = [0.0] + edges
    if duration is not None and duration > edges[-1] + 1e-9:
        edges.append(duration)

    base = list(zip(edges, edges[1:]))
    if division in ("0.25", "0.5"):
        parts = 4 if division == "0.25" else 2
        out = []
        for start, end in base:
            step = (end - start) / parts
            out.extend((start + j * step, start + (j + 1) * step) for j in range(parts))
    elif division == "1":
        out = base
    elif division == "2":
        out = [(base[i][0], base[min(i + 1, len(base) - 1)][1]) for i in range(0, len(base), 2)]
    else:
        raise ValueError(f"unknown beat division {division!r}")
    return BeatIntervals(intervals=tuple(out), division=division)


def perfect_intervals(ann: Annotation) -> BeatIntervals:
    """Intervals taken directly from annotation segment boundaries."""
    return BeatIntervals(
        intervals=tuple((start, end) for start, end, _ in ann.segments),
        division="perfect",
    )


def beat_pool(feat: FeatureMatrix, beats: BeatIntervals) -> tuple[FeatureMatrix, BeatIntervals]:
    """Average frame rows whose centers fall inside each interval.

    Empty intervals inherit the nearest preceding pooled row (or the first
    non-empty row when there is no preceding one).
    """
    centers = feat.grid().centers()
    pooled = np.full((len(beats.intervals), feat.n_bins), feat.floor_db, dtype=np.float64)
    filled = np.zeros(len(beats.intervals), dtype=bool)
    for i, (start, end) in enumerate(beats.intervals):
        mask = (centers >= start) & (centers < end)
        if mask.any():
            pooled[i] = feat.data[mask].mean(axis=0)
            filled[i] = True
    if not filled.any():
        raise EmptyBeatList("no interval contains a frame center")
    # forward-fill, then back-fill any leading empties
    last = None
    for i in range(len(filled)):
        if filled[i]:
            last = i
        elif last is not None:
            pooled[i] = pooled[last]
    first = int(np.argmax(filled))
    pooled[:first] = pooled[first]
    out = FeatureMatrix(data=pooled.astype(np.float32), hop=feat.hop,
                        bins_per_octave=feat.bins_per_octave, floor_db=feat.floor_db)
    return out, beats
