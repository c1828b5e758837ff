import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chordkit.annotate import DEFAULT_HOP, FrameGrid, fill_gaps, grid_for
from chordkit.errors import (BadBinConfig, BadMagic, EmptyBeatList,
                             TruncatedPayload, VersionMismatch)
from chordkit.features import (BeatIntervals, FeatureMatrix, RenderParams,
                               beat_intervals, beat_pool, bin_pitch_classes,
                               load_beats, load_features, perfect_intervals,
                               pitch_shift_cqt, render_synthetic_cqt,
                               save_features)
from chordkit.harte import parse_chord


def make_ann(rows, duration=None):
    return fill_gaps([(s, e, parse_chord(t)) for s, e, t in rows], duration=duration)


def make_feat(data, hop=DEFAULT_HOP, bpo=36):
    return FeatureMatrix(data=np.asarray(data, dtype=np.float32), hop=hop,
                         bins_per_octave=bpo)


class TestFileFormat:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        feat = make_feat(rng.normal(size=(37, 216)).astype(np.float32))
        path = tmp_path / "a.cqtf"
        save_features(feat, path)
        loaded = load_features(path)
        assert np.array_equal(loaded.data, feat.data)
        assert loaded.hop == feat.hop
        assert loaded.bins_per_octave == feat.bins_per_octave
        assert loaded.floor_db == feat.floor_db

    def test_header_layout(self, tmp_path):
        feat = make_feat(np.zeros((2, 3)))
        path = tmp_path / "a.cqtf"
        save_features(feat, path)
        raw = path.read_bytes()
        assert raw[:4] == b"CQTF"
        assert len(raw) == 4 + 4 + 4 + 8 + 8 + 4 + 4 + 2 * 3 * 4

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "a.cqtf"
        feat = make_feat(np.zeros((2, 3)))
        save_features(feat, path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(BadMagic):
            load_features(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "a.cqtf"
        save_features(make_feat(np.zeros((2, 3))), path)
        raw = bytearray(path.read_bytes())
        raw[4:8] = (99).to_bytes(4, "little")
        path.write_bytes(bytes(raw))
        with pytest.raises(VersionMismatch):
            load_features(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "a.cqtf"
        save_features(make_feat(np.zeros((4, 4))), path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-8])
        with pytest.raises(TruncatedPayload):
            load_features(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "a.cqtf"
        path.write_bytes(b"CQTF\x01")
        with pytest.raises(TruncatedPayload):
            load_features(path)


class TestBinPitchClasses:
    def test_three_bins_per_semitone(self):
        pcs = bin_pitch_classes(9, 36)
        assert list(pcs) == [0, 0, 0, 1, 1, 1, 2, 2, 2]

    def test_wraps_at_octave(self):
        pcs = bin_pitch_classes(26, 12)
        assert pcs[11] == 11 and pcs[12] == 0 and pcs[25] == 1

    def test_rejects_non_multiple(self):
        with pytest.raises(BadBinConfig):
            bin_pitch_classes(10, 35)


class TestRenderer:
    def test_chord_bins_above_floor(self):
        ann = make_ann([(0.0, 1.0, "C:maj")])
        grid = grid_for(1.0)
        feat = render_synthetic_cqt(ann, grid)
        pcs = bin_pitch_classes(feat.n_bins, feat.bins_per_octave)
        active = np.isin(pcs, [0, 4, 7])
        assert (feat.data[0, active] > feat.floor_db).all()
        assert (feat.data[0, ~active] == feat.floor_db).all()

    def test_octave_rolloff(self):
        ann = make_ann([(0.0, 1.0, "C:maj")])
        feat = render_synthetic_cqt(ann, grid_for(1.0))
        per_semitone = feat.bins_per_octave // 12
        # pitch class 0: octave o lives at bin o*12*per_semitone
        assert feat.data[0, 0] == pytest.approx(0.0)
        assert feat.data[0, 12 * per_semitone] == pytest.approx(-6.0)
        assert feat.data[0, 24 * per_semitone] == pytest.approx(-12.0)

    def test_n_frames_are_floor(self):
        ann = make_ann([(1.0, 2.0, "C:maj")], duration=3.0)
        feat = render_synthetic_cqt(ann, grid_for(3.0))
        assert (feat.data[0] == feat.floor_db).all()
        assert (feat.data[-1] == feat.floor_db).all()

    def test_noise_is_seeded_and_clipped(self):
        ann = make_ann([(0.0, 1.0, "C:maj")])
        grid = grid_for(1.0)
        p = RenderParams(noise_db=3.0, seed=7)
        a = render_synthetic_cqt(ann, grid, p)
        b = render_synthetic_cqt(ann, grid, p)
        c = render_synthetic_cqt(ann, grid, RenderParams(noise_db=3.0, seed=8))
        assert np.array_equal(a.data, b.data)
        assert not np.array_equal(a.data, c.data)
        assert (a.data >= a.floor_db).all()


class TestPitchShift:
    def test_render_equivariance_no_wrap(self):
        # C:maj -> D:maj; no pitch class crosses the octave boundary, so
        # shifting the rendered features equals rendering the shifted chord.
        grid = grid_for(1.0)
        base = render_synthetic_cqt(make_ann([(0.0, 1.0, "C:maj")]), grid)
        target = render_synthetic_cqt(make_ann([(0.0, 1.0, "D:maj")]), grid)
        assert np.array_equal(pitch_shift_cqt(base, 2).data, target.data)

    def test_wrapped_pitch_class_changes_octave(self):
        # A:maj shifted up 5 wraps pitch classes 9 and 1+... compare on the
        # unwrapped pitch class only.
        grid = grid_for(1.0)
        base = render_synthetic_cqt(make_ann([(0.0, 1.0, "A:maj")]), grid)
        shifted = pitch_shift_cqt(base, 5)
        target = render_synthetic_cqt(make_ann([(0.0, 1.0, "D:maj")]), grid)
        pcs = bin_pitch_classes(base.n_bins, base.bins_per_octave)
        # pitch class 6 (= 1 + 5, from A:maj's third c#) does not wrap
        mask = pcs == 6
        assert np.array_equal(shifted.data[:, mask], target.data[:, mask])

    def test_round_trip_interior(self):
        rng = np.random.default_rng(1)
        feat = make_feat(rng.normal(size=(5, 216)))
        back = pitch_shift_cqt(pitch_shift_cqt(feat, 3), -3)
        step = 3 * (feat.bins_per_octave // 12)
        assert np.array_equal(back.data[:, :-step], feat.data[:, :-step])
        assert (back.data[:, -step:] == feat.floor_db).all()

    def test_zero_shift_identity(self):
        feat = make_feat(np.arange(12, dtype=np.float32).reshape(3, 4), bpo=12)
        assert np.array_equal(pitch_shift_cqt(feat, 0).data, feat.data)

    def test_limits(self):
        feat = make_feat(np.zeros((2, 12)), bpo=12)
        with pytest.raises(ValueError):
            pitch_shift_cqt(feat, 12)


class TestBeatIntervals:
    def test_load_beats(self, tmp_path):
        path = tmp_path / "beats.txt"
        path.write_text("0.5\n1.0\n1.5\n", encoding="utf-8")
        assert load_beats(path) == [0.5, 1.0, 1.5]

    def test_load_rejects_non_increasing(self, tmp_path):
        path = tmp_path / "beats.txt"
        path.write_text("0.5\n0.5\n", encoding="utf-8")
        with pytest.raises(EmptyBeatList):
            load_beats(path)

    def test_division_one_prepends_head(self):
        bi = beat_intervals([0.5, 1.0, 1.5], "1")
        assert bi.intervals == ((0.0, 0.5), (0.5, 1.0), (1.0, 1.5))

    def test_division_appends_tail(self):
        bi = beat_intervals([0.5, 1.0], "1", duration=1.8)
        assert bi.intervals[-1] == (1.0, 1.8)

    def test_division_half(self):
        bi = beat_intervals([0.0, 1.0], "0.5")
        assert bi.intervals == ((0.0, 0.5), (0.5, 1.0))

    def test_division_quarter(self):
        bi = beat_intervals([0.0, 1.0], "0.25")
        assert len(bi.intervals) == 4
        assert bi.intervals[0] == (0.0, 0.25)

    def test_division_two_merges_pairs(self):
        bi = beat_intervals([0.0, 1.0, 2.0, 3.0, 4.0], "2")
        assert bi.intervals == ((0.0, 2.0), (2.0, 4.0))

    def test_unknown_division(self):
        with pytest.raises(ValueError):
            beat_intervals([0.0, 1.0], "3")

    def test_empty_rejected(self):
        with pytest.raises(EmptyBeatList):
            beat_intervals([], "1")

    def test_perfect_intervals_match_segments(self):
        ann = make_ann([(0.0, 0.7, "C:maj"), (0.7, 1.3, "D:min")])
        bi = perfect_intervals(ann)
        assert bi.intervals == ((0.0, 0.7), (0.7, 1.3))


class TestBeatPool:
    def test_mean_pooling(self):
        data = np.array([[0.0], [2.0], [4.0], [6.0]])
        feat = make_feat(data, hop=1.0, bpo=12)
        bi = BeatIntervals(intervals=((0.0, 2.0), (2.0, 4.0)))
        pooled, _ = beat_pool(feat, bi)
        assert pooled.data[:, 0] == pytest.approx([1.0, 5.0])

    def test_empty_interval_inherits_previous(self):
        data = np.array([[1.0], [3.0]])
        feat = make_feat(data, hop=1.0, bpo=12)
        # middle interval (2.0, 2.2) contains no frame center
        bi = BeatIntervals(intervals=((0.0, 2.0), (2.0, 2.2), (2.2, 4.0)))
        pooled, _ = beat_pool(feat, bi)
        assert pooled.data[:, 0] == pytest.approx([2.0, 2.0, 2.0])

    def test_leading_empty_back_filled(self):
        data = np.array([[5.0]])
        feat = make_feat(data, hop=1.0, bpo=12)
        bi = BeatIntervals(intervals=((0.0, 0.2), (0.2, 1.0)))
        pooled, _ = beat_pool(feat, bi)
        assert pooled.data[:, 0] == pytest.approx([5.0, 5.0])

    def test_all_empty_rejected(self):
        feat = make_feat(np.ones((1, 1)), hop=1.0, bpo=12)
        bi = BeatIntervals(intervals=((2.0, 3.0),))
        with pytest.raises(EmptyBeatList):
            beat_pool(feat, bi)

    @given(st.integers(2, 40), st.integers(1, 6))
    @settings(max_examples=30, deadline=None)
    def test_pooled_rows_within_range(self, n_frames, n_ivals):
        rng = np.random.default_rng(n_frames * 100 + n_ivals)
        feat = make_feat(rng.normal(size=(n_frames, 3)), hop=1.0, bpo=12)
        edges = np.linspace(0.0, n_frames, n_ivals + 1)
        bi = BeatIntervals(intervals=tuple(zip(edges, edges[1:])))
        pooled, _ = beat_pool(feat, bi)
        lo, hi = feat.data.min(), feat.data.max()
        assert (pooled.data >= lo - 1e-5).all() and (pooled.data <= hi + 1e-5).all()
