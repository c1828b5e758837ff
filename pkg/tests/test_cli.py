import json
import subprocess
import sys

import numpy as np
import pytest

from chordkit.cli import main


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert run(["synth", "--n", 6, "--duration", 10, "--seed", 1,
                "--out", out]) == 0
    return out


class TestSynth:
    def test_outputs_exist(self, dataset):
        assert len(list(dataset.glob("*.tsv"))) == 6
        assert len(list(dataset.glob("*.cqtf"))) == 6
        assert (dataset / "dataset.json").exists()
        assert (dataset / "run_manifest.json").exists()

    def test_dataset_json_contents(self, dataset):
        meta = json.loads((dataset / "dataset.json").read_text())
        assert len(meta["songs"]) == 6
        assert all(60.0 <= s["bpm"] <= 220.0 for s in meta["songs"])

    def test_deterministic_across_runs(self, dataset, tmp_path):
        again = tmp_path / "again"
        assert run(["synth", "--n", 6, "--duration", 10, "--seed", 1,
                    "--out", again]) == 0
        for name in sorted(p.name for p in dataset.iterdir()):
            if name == "run_manifest.json":
                continue  # embeds the --out path
            a = (dataset / name).read_bytes()
            b = (again / name).read_bytes()
            assert a == b, name

    def test_seed_changes_dataset(self, dataset, tmp_path):
        other = tmp_path / "other"
        assert run(["synth", "--n", 6, "--duration", 10, "--seed", 2,
                    "--out", other]) == 0
        assert (dataset / "song_0000.tsv").read_bytes() != \
            (other / "song_0000.tsv").read_bytes()

    def test_manifest_records_config(self, dataset):
        manifest = json.loads((dataset / "run_manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert manifest["config"]["n"] == 6
        assert manifest["config"]["seed"] == 1
        assert "song_0000.cqtf" in manifest["outputs"]


@pytest.fixture(scope="module")
def trained(dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    assert run(["train", "--data", dataset, "--out", out, "--vocab", 170,
                "--epochs", 8, "--patch-seconds", 5, "--seed", 0]) == 0
    return out


class TestTrain:
    def test_outputs(self, trained):
        assert (trained / "model.npz").exists()
        history = [json.loads(line)
                   for line in (trained / "history.jsonl").read_text().splitlines()]
        assert len(history) == 8
        assert "val_loss" in history[0]

    def test_empty_data_dir_exits_one(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert run(["train", "--data", empty, "--out", tmp_path / "m"]) == 1
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert "error" in err and "message" in err


class TestPredictSmoothEval:
    def test_pipeline(self, dataset, trained, tmp_path, capsys):
        pred = tmp_path / "pred"
        assert run(["predict", "--model", trained / "model.npz",
                    "--features", dataset / "song_0000.cqtf",
                    "--out", pred]) == 0
        assert (pred / "labels.tsv").exists()
        post = np.load(pred / "posteriors.npy")
        assert post.shape[1] == 170
        assert np.allclose(post.sum(axis=1), 1.0, atol=1e-6)

        smooth = tmp_path / "smooth"
        assert run(["smooth", "--post", pred / "posteriors.npy",
                    "--beta", 0.3, "--out", smooth]) == 0
        assert (smooth / "labels.tsv").exists()

        capsys.readouterr()
        assert run(["eval", "--ref", dataset / "song_0000.tsv",
                    "--est", smooth / "labels.tsv", "--metric", "root"]) == 0
        line = capsys.readouterr().out.strip()
        float(line)  # a bare percentage

    def test_eval_identical_files_is_hundred(self, dataset, capsys):
        capsys.readouterr()
        assert run(["eval", "--ref", dataset / "song_0000.tsv",
                    "--est", dataset / "song_0000.tsv"]) == 0
        assert capsys.readouterr().out.strip() == "100.0"

    def test_predict_with_beats(self, dataset, trained, tmp_path):
        beats = tmp_path / "beats.txt"
        beats.write_text("".join(f"{t:.3f}\n" for t in np.arange(0.5, 10.0, 0.5)))
        out = tmp_path / "pred_beats"
        assert run(["predict", "--model", trained / "model.npz",
                    "--features", dataset / "song_0000.cqtf",
                    "--beat-file", beats, "--beat-division", "1",
                    "--out", out]) == 0
        rows = (out / "labels.tsv").read_text().splitlines()
        assert len(rows) == 20  # prepended head interval + 19 beat intervals

    def test_predict_perfect_division(self, dataset, trained, tmp_path):
        out = tmp_path / "pred_perfect"
        assert run(["predict", "--model", trained / "model.npz",
                    "--features", dataset / "song_0000.cqtf",
                    "--beat-division", "perfect",
                    "--ann", dataset / "song_0000.tsv",
                    "--out", out]) == 0
        assert (out / "labels.tsv").exists()

    def test_perfect_division_requires_ann(self, dataset, trained, tmp_path):
        assert run(["predict", "--model", trained / "model.npz",
                    "--features", dataset / "song_0000.cqtf",
                    "--beat-division", "perfect",
                    "--out", tmp_path / "x"]) == 1


class TestReport:
    def test_report_outputs(self, dataset, tmp_path):
        out = tmp_path / "report"
        assert run(["report", "--ref-dir", dataset, "--est-dir", dataset,
                    "--out", out]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["songs"] == 6
        for kind in ("acc", "root", "third", "seventh", "mirex", "majmin"):
            assert report["wcsr"][kind] == pytest.approx(100.0)
        assert report["acc_class"] == pytest.approx(100.0)
        assert (out / "per_song.csv").exists()
        assert (out / "confusion_quality.csv").exists()
        assert (out / "confusion_root.csv").exists()
        assert (out / "incorrect_region_lengths.csv").exists()


class TestAugment:
    def test_shift_round_trip(self, dataset, tmp_path, capsys):
        out = tmp_path / "aug"
        assert run(["augment", "--features", dataset / "song_0000.cqtf",
                    "--ann", dataset / "song_0000.tsv", "--shift", 2,
                    "--out", out]) == 0
        assert (out / "song_0000_shift+2.cqtf").exists()
        # the transposed annotation scores 0 on root against the original
        # unless the original already used the shifted roots
        capsys.readouterr()
        assert run(["eval", "--ref", out / "song_0000_shift+2.tsv",
                    "--est", out / "song_0000_shift+2.tsv"]) == 0
        assert capsys.readouterr().out.strip() == "100.0"


class TestCheckAlign:
    @staticmethod
    def _irregular_pair(tmp_path):
        # irregular boundaries (no periodicity) on exact frame edges, so the
        # rendered features change in the same frame as the annotation
        from chordkit import annotate, features
        from chordkit.harte import parse_chord
        hop = annotate.DEFAULT_HOP
        # boundaries a quarter-frame past the edge: the annotation change and
        # the rendered feature change then land in the same frame index
        edges = [0.0] + [(i + 0.25) * hop for i in (17, 30, 61, 75, 110, 124)] \
            + [160 * hop]
        names = ["C:maj", "A:min", "F:maj", "G:7", "D:min7", "E:min", "C:maj"]
        segs = [(a, b, parse_chord(nm))
                for a, b, nm in zip(edges, edges[1:], names)]
        ann = annotate.fill_gaps(segs, duration=edges[-1])
        feat = features.render_synthetic_cqt(ann, annotate.grid_for(ann.duration))
        annotate.save_annotation(ann, tmp_path / "irregular.tsv")
        features.save_features(feat, tmp_path / "irregular.cqtf")
        return tmp_path / "irregular.cqtf", tmp_path / "irregular.tsv"

    def test_aligned_pair_has_zero_lag(self, tmp_path, capsys):
        cqtf, tsv = self._irregular_pair(tmp_path)
        capsys.readouterr()
        assert run(["check-align", "--features", cqtf, "--ann", tsv]) == 0
        assert capsys.readouterr().out.strip() == "0"

    def test_shifted_features_report_the_shift(self, tmp_path, capsys):
        from chordkit import features
        cqtf, tsv = self._irregular_pair(tmp_path)
        feat = features.load_features(cqtf)
        delayed = np.vstack([np.tile(feat.data[0], (4, 1)), feat.data[:-4]])
        features.save_features(
            features.FeatureMatrix(data=delayed, hop=feat.hop,
                                   bins_per_octave=feat.bins_per_octave,
                                   floor_db=feat.floor_db),
            tmp_path / "delayed.cqtf")
        capsys.readouterr()
        assert run(["check-align", "--features", tmp_path / "delayed.cqtf",
                    "--ann", tsv]) == 0
        assert capsys.readouterr().out.strip() == "4"


class TestArgErrors:
    def test_unknown_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_required_arg_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["eval", "--ref", "a.tsv"])
        assert exc.value.code == 2

    def test_missing_file_exits_one(self, capsys):
        assert run(["eval", "--ref", "/nonexistent/a.tsv",
                    "--est", "/nonexistent/b.tsv"]) == 1

    def test_console_script_installed(self):
        out = subprocess.run([sys.executable, "-m", "chordkit.cli", "--version"],
                             capture_output=True, text=True)
        assert out.returncode == 0
