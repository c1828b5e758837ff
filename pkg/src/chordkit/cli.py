"""Command-line entry point.

Subcommands: train, predict, smooth, eval, report, synth, augment,
check-align. Every run writes a JSON manifest next to its outputs with the
exact configuration needed to reproduce it. Structured outputs go to
--out; logs go to stderr. Exit codes: 0 success, 1 runtime failure,
2 argument errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, annotate, decode, features, metrics, model, synthgen
from .errors import ChordkitError
from .harte import format_chord
from .metrics import MetricKind
from .vocab import get_vocabulary, id_label, map_label


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace,
                    inputs: list[str], outputs: list[str]) -> None:
    manifest = {
        "toolkit_version": __version__,
        "command": command,
        "config": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "inputs": sorted(inputs),
        "outputs": sorted(outputs),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "run_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _dataset_pairs(data_dir: Path):
    pairs = []
    for tsv in sorted(data_dir.glob("*.tsv")):
        cqtf = tsv.with_suffix(".cqtf")
        if cqtf.exists():
            pairs.append((cqtf, tsv))
    return pairs


def _load_pairs(pairs):
    out = []
    for cqtf, tsv in pairs:
        feat = features.load_features(cqtf)
        ann = annotate.load_annotation(tsv, duration=feat.n_frames * feat.hop)
        out.append((feat, ann))
    return out


def _split(pairs, seed: int):
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pairs))
    n_train = int(0.6 * len(pairs))
    n_val = int(0.2 * len(pairs))
    train = [pairs[i] for i in order[:n_train]]
    val = [pairs[i] for i in order[n_train:n_train + n_val]]
    test = [pairs[i] for i in order[n_train + n_val:]]
    return train, val, test


def _ids_to_lab(ids, hop: float, vocab, path: Path) -> None:
    path_intervals = metrics.path_from_frames(ids, hop).intervals
    with open(path, "w", encoding="utf-8") as fh:
        for start, end, chord_id in path_intervals:
            fh.write(f"{start:.6f}\t{end:.6f}\t{format_chord(id_label(chord_id, vocab))}\n")


# --- subcommands ---

def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = synthgen.ProgressionConfig(duration=args.duration)
    songs, outputs = [], []
    for i in range(args.n):
        seed = args.seed * 1_000_003 + i
        ann, bpm, _ = synthgen.generate_song(cfg, seed)
        grid = annotate.grid_for(ann.duration, hop=args.hop)
        params = features.RenderParams(noise_db=args.noise, seed=seed + 1)
        feat = features.render_synthetic_cqt(ann, grid, params)
        stem = f"song_{i:04d}"
        annotate.save_annotation(ann, out_dir / f"{stem}.tsv")
        features.save_features(feat, out_dir / f"{stem}.cqtf")
        songs.append({"name": stem, "seed": seed, "bpm": round(bpm, 6)})
        outputs += [f"{stem}.tsv", f"{stem}.cqtf"]
    with open(out_dir / "dataset.json", "w", encoding="utf-8") as fh:
        json.dump({"songs": songs, "noise_db": args.noise, "hop": args.hop},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(out_dir, "synth", args, [], outputs + ["dataset.json"])
    _log(f"wrote {args.n} synthetic songs to {out_dir}")
    return 0


def cmd_train(args) -> int:
    vocab = get_vocabulary(args.vocab)
    pairs = _dataset_pairs(Path(args.data))
    if not pairs:
        raise ChordkitError(f"no (tsv, cqtf) pairs found in {args.data}")
    train_pairs, val_pairs, _ = _split(pairs, args.seed)
    train_set = _load_pairs(train_pairs)
    val_set = _load_pairs(val_pairs)
    cfg = model.TrainConfig(
        learning_rate=args.learning_rate, epochs=args.epochs,
        batch_size=args.batch_size, patch_seconds=args.patch_seconds,
        shift_probability=args.shift_prob, weight_alpha=args.alpha,
        structured_gamma=args.gamma, seed=args.seed)
    params, history = model.train(train_set, val_set, cfg, vocab,
                                  arch=args.arch, hidden_units=args.hidden_units,
                                  context=args.context)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_checkpoint(params, out_dir / "model.npz")
    with open(out_dir / "history.jsonl", "w", encoding="utf-8") as fh:
        for record in history:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    _write_manifest(out_dir, "train", args,
                    [str(p) for p, _ in pairs], ["model.npz", "history.jsonl"])
    _log(f"trained {args.arch} model on {len(train_set)} songs -> {out_dir / 'model.npz'}")
    return 0


def cmd_predict(args) -> int:
    vocab = get_vocabulary(args.vocab)
    params = model.load_checkpoint(args.model)
    feat = features.load_features(args.features)
    if args.beat_file or args.beat_division == "perfect":
        if args.beat_division == "perfect":
            if not args.ann:
                raise ChordkitError("--beat-division perfect requires --ann")
            ann = annotate.load_annotation(args.ann,
                                           duration=feat.n_frames * feat.hop)
            intervals = features.perfect_intervals(ann)
        else:
            beats = features.load_beats(args.beat_file)
            intervals = features.beat_intervals(beats, args.beat_division,
                                                duration=feat.n_frames * feat.hop)
        feat, intervals = features.beat_pool(feat, intervals)
        post, _, _ = model.forward(params, feat)
        ids = np.argmax(post, axis=1)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "labels.tsv", "w", encoding="utf-8") as fh:
            for (start, end), chord_id in zip(intervals.intervals, ids):
                fh.write(f"{start:.6f}\t{end:.6f}\t{format_chord(id_label(int(chord_id), vocab))}\n")
        np.save(out_dir / "posteriors.npy", post)
    else:
        post, _, _ = model.forward(params, feat)
        ids = np.argmax(post, axis=1)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _ids_to_lab(ids, feat.hop, vocab, out_dir / "labels.tsv")
        np.save(out_dir / "posteriors.npy", post)
    _write_manifest(out_dir, "predict", args, [args.model, args.features],
                    ["labels.tsv", "posteriors.npy"])
    _log(f"wrote predictions to {out_dir}")
    return 0


def cmd_smooth(args) -> int:
    vocab = get_vocabulary(args.vocab)
    post = np.load(args.post)
    cfg = decode.DecoderConfig(beta=args.beta, n_classes=post.shape[1],
                               mode="max_marginal" if args.max_marginal else "viterbi")
    ids = decode.viterbi_smooth(post, cfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _ids_to_lab(ids, args.hop, vocab, out_dir / "labels.tsv")
    _write_manifest(out_dir, "smooth", args, [args.post], ["labels.tsv"])
    _log(f"smoothed {post.shape[0]} frames (beta={args.beta}) -> {out_dir}")
    return 0


def _path_from_lab(path, vocab):
    ann = annotate.load_annotation(path)
    return metrics.path_from_annotation(ann, vocab)


def cmd_eval(args) -> int:
    vocab = get_vocabulary(args.vocab)
    ref = _path_from_lab(args.ref, vocab)
    est = _path_from_lab(args.est, vocab)
    score = metrics.wcsr(MetricKind(args.metric), [(ref, est)], vocab)
    print(f"{score:.1f}")
    return 0


def cmd_report(args) -> int:
    vocab = get_vocabulary(args.vocab)
    ref_dir, est_dir = Path(args.ref_dir), Path(args.est_dir)
    names = sorted(p.name for p in ref_dir.glob("*.tsv") if (est_dir / p.name).exists())
    if not names:
        raise ChordkitError("no matching annotation files between ref and est dirs")
    songs, frame_pairs, per_song = [], [], []
    grid_hop = args.hop
    for name in names:
        ref_ann = annotate.load_annotation(ref_dir / name)
        est_ann = annotate.load_annotation(est_dir / name, duration=ref_ann.duration)
        ref_path = metrics.path_from_annotation(ref_ann, vocab)
        est_path = metrics.path_from_annotation(est_ann, vocab)
        songs.append((ref_path, est_path))
        grid = annotate.grid_for(ref_ann.duration, hop=grid_hop)
        ref_ids = annotate.frame_labels(ref_ann, grid, vocab)
        est_ids = annotate.frame_labels(est_ann, grid, vocab)
        frame_pairs.append((ref_ids, est_ids))
        row = {"song": name}
        for kind in MetricKind:
            try:
                row[kind.value] = round(metrics.wcsr(kind, [(ref_path, est_path)], vocab), 4)
            except ChordkitError:
                row[kind.value] = ""
        row["transitions_est"] = decode.count_transitions(est_ids)
        row["transitions_ref"] = decode.count_transitions(ref_ids)
        per_song.append(row)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(out_dir / "per_song.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(per_song[0]))
        writer.writeheader()
        writer.writerows(per_song)

    mean_scores = {kind.value: metrics.wcsr(kind, songs, vocab) for kind in MetricKind}
    acc_class, median_class, table = metrics.class_wise_scores(MetricKind.ACC, songs, vocab)
    report = {
        "songs": len(songs),
        "wcsr": {k: round(v, 4) for k, v in mean_scores.items()},
        "acc_class": round(acc_class, 4),
        "median_class": round(median_class, 4),
        "per_class": {str(c): round(v, 4) for c, v in table.items()},
    }
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    for axis in ("quality", "root"):
        cm = metrics.confusion_matrix(axis, frame_pairs, vocab, row_normalize=True)
        labels = metrics.quality_axis(vocab) if axis == "quality" else metrics.root_axis()
        with open(out_dir / f"confusion_{axis}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([""] + labels)
            for label, row in zip(labels, cm):
                writer.writerow([label] + [f"{v:.6f}" for v in row])

    lengths = {}
    for ref_ids, est_ids in frame_pairs:
        for _, length, _ in decode.incorrect_regions(est_ids, ref_ids):
            lengths[length] = lengths.get(length, 0) + 1
    with open(out_dir / "incorrect_region_lengths.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["length", "count"])
        for length in sorted(lengths):
            writer.writerow([length, lengths[length]])

    _write_manifest(out_dir, "report", args, names,
                    ["per_song.csv", "report.json", "confusion_quality.csv",
                     "confusion_root.csv", "incorrect_region_lengths.csv"])
    _log(f"report over {len(songs)} songs -> {out_dir}")
    return 0


def cmd_augment(args) -> int:
    feat = features.load_features(args.features)
    ann = annotate.load_annotation(args.ann)
    shifted = features.pitch_shift_cqt(feat, args.shift)
    transposed = annotate.transpose_annotation(ann, args.shift)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.features).stem + f"_shift{args.shift:+d}"
    features.save_features(shifted, out_dir / f"{stem}.cqtf")
    annotate.save_annotation(transposed, out_dir / f"{stem}.tsv")
    _write_manifest(out_dir, "augment", args, [args.features, args.ann],
                    [f"{stem}.cqtf", f"{stem}.tsv"])
    _log(f"shifted by {args.shift} semitones -> {out_dir / stem}.*")
    return 0


def cmd_check_align(args) -> int:
    feat = features.load_features(args.features)
    ann = annotate.load_annotation(args.ann, duration=feat.n_frames * feat.hop)
    lag = annotate.alignment_lag(feat, ann, window_frames=args.window)
    print(lag)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chordkit",
                                     description="chord recognition toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, out=True):
        p.add_argument("--vocab", type=int, default=170, choices=(170, 26))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--hop", type=float, default=annotate.DEFAULT_HOP)
        if out:
            p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    add_common(p)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--duration", type=float, default=30.0)
    p.add_argument("--noise", type=float, default=0.0, help="noise sigma in dB")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a frame-wise classifier")
    add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--arch", default="logistic", choices=("logistic", "hidden"))
    p.add_argument("--hidden-units", type=int, default=64)
    p.add_argument("--context", type=int, default=5)
    p.add_argument("--epochs", type=int, default=150)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--patch-seconds", type=float, default=10.0)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--shift-prob", type=float, default=0.0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict frame- or beat-wise labels")
    add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--beat-file")
    p.add_argument("--beat-division", default="1",
                   choices=("0.25", "0.5", "1", "2", "perfect"))
    p.add_argument("--ann", help="annotation file (required for --beat-division perfect)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("smooth", help="HMM-smooth a saved posteriorgram")
    add_common(p)
    p.add_argument("--post", required=True)
    p.add_argument("--beta", type=float, default=0.15)
    p.add_argument("--max-marginal", action="store_true")
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("eval", help="WCSR between two annotation files")
    add_common(p, out=False)
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--metric", default="acc",
                   choices=[k.value for k in MetricKind])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="full evaluation report over a directory")
    add_common(p)
    p.add_argument("--ref-dir", required=True)
    p.add_argument("--est-dir", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("augment", help="pitch-shift a feature/annotation pair")
    add_common(p)
    p.add_argument("--features", required=True)
    p.add_argument("--ann", required=True)
    p.add_argument("--shift", type=int, required=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("check-align", help="feature/annotation alignment lag")
    add_common(p, out=False)
    p.add_argument("--features", required=True)
    p.add_argument("--ann", required=True)
    p.add_argument("--window", type=int, default=50)
    p.set_defaults(func=cmd_check_align)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ChordkitError, OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
