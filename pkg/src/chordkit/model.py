"""Frame-wise chord classifiers trained with manual backpropagation.

Two architectures are provided: ``logistic`` (a single softmax layer over
one frame) and ``hidden`` (one ReLU hidden layer over a context window of
frames, with auxiliary root and pitch-class heads whose logits are
concatenated with the hidden representation before the chord layer).

The loss is a convex combination of the class-weighted chord cross-entropy
and a structured term::

    L = gamma * L_chord + (1 - gamma) * (L_root + L_pitch)

L_root is a 14-way cross-entropy (12 roots plus N and X as their own
classes), L_pitch the mean of 12 binary cross-entropies against the
target's pitch-class membership (all-zero for N/X targets).
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import vocab as vocab_mod
from .annotate import frame_labels
from .errors import (AllZeroCounts, DimensionMismatch, EmptyDataset,
                     NonFiniteLoss, TargetOutOfRange)
from .features import FeatureMatrix, pitch_shift_cqt
from .vocab import Vocabulary, id_info, id_pitch_classes, transpose_id

N_ROOT_CLASSES = 14  # 12 roots + N + X
N_PITCH_CLASSES = 12
SHIFT_CHOICES = (-5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 6)
COUNT_GUARD = 10.0
ADAM_BETA1, ADAM_BETA2, ADAM_EPS = 0.9, 0.999, 1e-8


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 150
    batch_size: int = 64
    patch_seconds: float = 10.0
    shift_probability: float = 0.0
    weight_alpha: float = 0.0
    structured_gamma: float = 1.0
    seed: int = 0
    validate_every: int = 5

    def __post_init__(self):
        if not 0 <= self.shift_probability <= 1:
            raise ValueError("shift_probability must lie in [0, 1]")
        if not 0 <= self.structured_gamma <= 1:
            raise ValueError("structured_gamma must lie in [0, 1]")
        if self.weight_alpha < 0:
            raise ValueError("weight_alpha must be non-negative")


@dataclass
class ModelParams:
    arch: str  # "logistic" or "hidden"
    n_bins: int
    n_classes: int
    hidden_units: int = 0
    context: int = 0  # frames of context on each side (hidden arch)
    weights: dict = field(default_factory=dict)
    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    vocab_hash: str = ""

    @property
    def input_dim(self) -> int:
        if self.arch == "hidden":
            return self.n_bins * (2 * self.context + 1)
        return self.n_bins


def init_params(arch: str, n_bins: int, vocab: Vocabulary, hidden_units: int = 64,
                context: int = 5, seed: int = 0, scale: float = 0.01) -> ModelParams:
    rng = np.random.default_rng(seed)
    C = vocab.size
    params = ModelParams(arch=arch, n_bins=n_bins, n_classes=C,
                         hidden_units=hidden_units if arch == "hidden" else 0,
                         context=context if arch == "hidden" else 0,
                         vocab_hash=vocab_mod.manifest_hash(vocab))
    d = params.input_dim

    def mat(rows, cols):
        return (rng.standard_normal((rows, cols)) * scale).astype(np.float64)

    w = params.weights
    if arch == "logistic":
        w["Wc"], w["bc"] = mat(d, C), np.zeros(C)
        w["Wr"], w["br"] = mat(d, N_ROOT_CLASSES), np.zeros(N_ROOT_CLASSES)
        w["Wp"], w["bp"] = mat(d, N_PITCH_CLASSES), np.zeros(N_PITCH_CLASSES)
    elif arch == "hidden":
        h = hidden_units
        w["W1"], w["b1"] = mat(d, h), np.zeros(h)
        w["Wr"], w["br"] = mat(h, N_ROOT_CLASSES), np.zeros(N_ROOT_CLASSES)
        w["Wp"], w["bp"] = mat(h, N_PITCH_CLASSES), np.zeros(N_PITCH_CLASSES)
        w["W2"], w["b2"] = mat(h + N_ROOT_CLASSES + N_PITCH_CLASSES, C), np.zeros(C)
    else:
        raise ValueError(f"unknown architecture {arch!r}")
    params.mean = np.zeros(n_bins)
    params.std = np.ones(n_bins)
    return params


# --- targets ---

def root_targets(ids: np.ndarray, vocab: Vocabulary) -> np.ndarray:
    """14-way root class per chord id (12 = N, 13 = X)."""
    out = np.empty(len(ids), dtype=np.int64)
    for i, chord_id in enumerate(ids):
        info = id_info(int(chord_id), vocab)
        if info == "N":
            out[i] = 12
        elif info == "X":
            out[i] = 13
        else:
            out[i] = info[0]
    return out


def pitch_targets(ids: np.ndarray, vocab: Vocabulary) -> np.ndarray:
    """12-dim binary pitch-class membership per chord id (zeros for N/X)."""
    out = np.zeros((len(ids), N_PITCH_CLASSES))
    for i, chord_id in enumerate(ids):
        for p in id_pitch_classes(int(chord_id), vocab):
            out[i, p] = 1.0
    return out


# --- class weighting ---

def expected_counts(counts: np.ndarray, p: float, vocab: Vocabulary) -> np.ndarray:
    """Expected per-class frame counts under pitch-shift probability p.

    Chord-class mass is redistributed as (1-p) identity plus p/12 to each of
    the 12 transpositions; N and X counts are unchanged.
    """
    counts = np.asarray(counts, dtype=np.float64)
    out = counts.copy()
    n_chord = vocab.n_id
    for c in range(n_chord):
        spread = sum(counts[transpose_id(c, -k, vocab)] for k in range(12))
        out[c] = (1.0 - p) * counts[c] + (p / 12.0) * spread
    return out


def class_weights(counts: np.ndarray, alpha: float) -> np.ndarray:
    """Normalized inverse-frequency weights with a +10 count guard.

    w_c = 1 / (count_c + 10)^alpha, rescaled so the count-weighted mean
    weight is exactly 1.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.sum() <= 0:
        raise AllZeroCounts("all class counts are zero")
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    w = 1.0 / np.power(counts + COUNT_GUARD, alpha)
    s = float(np.dot(counts, w)) / float(counts.sum())
    return w / s


# --- forward pass ---

def context_stack(x: np.ndarray, w: int) -> np.ndarray:
    """Concatenate frames i-w..i+w per row, zero-padding at the edges."""
    if w == 0:
        return x
    n, d = x.shape
    padded = np.zeros((n + 2 * w, d))
    padded[w:w + n] = x
    return np.concatenate([padded[i:i + n] for i in range(2 * w + 1)], axis=1)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _forward_raw(params: ModelParams, x: np.ndarray):
    """Logits plus intermediates for backprop. x is standardized input."""
    w = params.weights
    if params.arch == "logistic":
        return {
            "x": x,
            "z_chord": x @ w["Wc"] + w["bc"],
            "z_root": x @ w["Wr"] + w["br"],
            "z_pitch": x @ w["Wp"] + w["bp"],
        }
    xc = context_stack(x, params.context)
    pre = xc @ w["W1"] + w["b1"]
    h = np.maximum(pre, 0.0)
    z_root = h @ w["Wr"] + w["br"]
    z_pitch = h @ w["Wp"] + w["bp"]
    combined = np.concatenate([h, z_root, z_pitch], axis=1)
    return {
        "x": xc,
        "pre": pre,
        "h": h,
        "combined": combined,
        "z_chord": combined @ w["W2"] + w["b2"],
        "z_root": z_root,
        "z_pitch": z_pitch,
    }


def standardize(params: ModelParams, data: np.ndarray) -> np.ndarray:
    return (data - params.mean) / params.std


def forward(params: ModelParams, feat: FeatureMatrix | np.ndarray):
    """Posteriorgram plus root and pitch-class probabilities per frame."""
    data = feat.data if isinstance(feat, FeatureMatrix) else np.asarray(feat, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != params.n_bins:
        raise DimensionMismatch(
            f"expected n x {params.n_bins} input, got {data.shape}")
    cache = _forward_raw(params, standardize(params, data))
    return _softmax(cache["z_chord"]), _softmax(cache["z_root"]), _sigmoid(cache["z_pitch"])


def predict_frames(params: ModelParams, feat) -> np.ndarray:
    """Per-frame argmax chord ids (ties go to the lowest id)."""
    post, _, _ = forward(params, feat)
    return np.argmax(post, axis=1)


# --- loss ---

def total_loss(outputs, targets, weights: np.ndarray, gamma: float,
               vocab: Vocabulary, mask: np.ndarray | None = None) -> float:
    """Structured, class-weighted loss given probability outputs.

    ``outputs`` is the (posteriors, root_probs, pitch_probs) triple returned
    by :func:`forward`; ``mask`` marks frames included in the loss.
    """
    post, root_probs, pitch_probs = outputs
    targets = np.asarray(targets, dtype=np.int64)
    if np.any(targets < 0) or np.any(targets >= vocab.size):
        raise TargetOutOfRange("chord id target outside vocabulary")
    if mask is None:
        mask = np.ones(len(targets), dtype=bool)
    idx = np.flatnonzero(mask)

    eps = 1e-300
    w_frame = weights[targets[idx]]
    l_chord = float(np.mean(-w_frame * np.log(post[idx, targets[idx]] + eps)))
    r_t = root_targets(targets[idx], vocab)
    l_root = float(np.mean(-np.log(root_probs[idx, r_t] + eps)))
    p_t = pitch_targets(targets[idx], vocab)
    pp = np.clip(pitch_probs[idx], 1e-12, 1 - 1e-12)
    l_pitch = float(np.mean(-(p_t * np.log(pp) + (1 - p_t) * np.log(1 - pp))))
    return gamma * l_chord + (1.0 - gamma) * (l_root + l_pitch)


def loss_and_grads(params: ModelParams, data: np.ndarray, targets: np.ndarray,
                   weights: np.ndarray, gamma: float, vocab: Vocabulary,
                   mask: np.ndarray | None = None):
    """Loss and analytic parameter gradients for one batch of frames."""
    targets = np.asarray(targets, dtype=np.int64)
    if mask is None:
        mask = np.ones(len(targets), dtype=bool)
    n = int(mask.sum())
    if n == 0:
        raise EmptyDataset("batch contains no unmasked frames")

    cache = _forward_raw(params, standardize(params, data))
    post = _softmax(cache["z_chord"])
    root_probs = _softmax(cache["z_root"])
    pitch_probs = _sigmoid(cache["z_pitch"])
    loss = total_loss((post, root_probs, pitch_probs), targets, weights, gamma, vocab, mask)

    idx = np.flatnonzero(mask)
    w_frame = np.zeros(len(targets))
    w_frame[idx] = weights[targets[idx]]

    d_chord = post.copy()
    d_chord[np.arange(len(targets)), targets] -= 1.0
    d_chord *= (gamma / n) * w_frame[:, None]
    d_chord[~mask] = 0.0

    r_t = root_targets(targets, vocab)
    d_root_loss = root_probs.copy()
    d_root_loss[np.arange(len(targets)), r_t] -= 1.0
    d_root_loss *= (1.0 - gamma) / n
    d_root_loss[~mask] = 0.0

    p_t = pitch_targets(targets, vocab)
    d_pitch_loss = (pitch_probs - p_t) * ((1.0 - gamma) / (n * N_PITCH_CLASSES))
    d_pitch_loss[~mask] = 0.0

    w = params.weights
    grads = {}
    if params.arch == "logistic":
        x = cache["x"]
        grads["Wc"], grads["bc"] = x.T @ d_chord, d_chord.sum(axis=0)
        grads["Wr"], grads["br"] = x.T @ d_root_loss, d_root_loss.sum(axis=0)
        grads["Wp"], grads["bp"] = x.T @ d_pitch_loss, d_pitch_loss.sum(axis=0)
    else:
        h = cache["h"]
        n_h = params.hidden_units
        grads["W2"] = cache["combined"].T @ d_chord
        grads["b2"] = d_chord.sum(axis=0)
        d_combined = d_chord @ w["W2"].T
        # aux logits feed both their own losses and the chord layer
        d_root = d_root_loss + d_combined[:, n_h:n_h + N_ROOT_CLASSES]
        d_pitch = d_pitch_loss + d_combined[:, n_h + N_ROOT_CLASSES:]
        grads["Wr"], grads["br"] = h.T @ d_root, d_root.sum(axis=0)
        grads["Wp"], grads["bp"] = h.T @ d_pitch, d_pitch.sum(axis=0)
        d_h = d_combined[:, :n_h] + d_root @ w["Wr"].T + d_pitch @ w["Wp"].T
        d_pre = d_h * (cache["pre"] > 0)
        grads["W1"], grads["b1"] = cache["x"].T @ d_pre, d_pre.sum(axis=0)
    return loss, grads


# --- training ---

def cosine_lr(base: float, epoch: int, total_epochs: int) -> float:
    """Cosine decay from base to base / 10 over the run."""
    floor = base / 10.0
    if total_epochs <= 1:
        return base
    t = epoch / (total_epochs - 1)
    return floor + 0.5 * (base - floor) * (1.0 + math.cos(math.pi * t))


@dataclass
class _AdamState:
    m: dict
    v: dict
    t: int = 0


def _adam_step(params: ModelParams, grads: dict, state: _AdamState, lr: float) -> None:
    state.t += 1
    for key, g in grads.items():
        state.m[key] = ADAM_BETA1 * state.m[key] + (1 - ADAM_BETA1) * g
        state.v[key] = ADAM_BETA2 * state.v[key] + (1 - ADAM_BETA2) * g * g
        m_hat = state.m[key] / (1 - ADAM_BETA1 ** state.t)
        v_hat = state.v[key] / (1 - ADAM_BETA2 ** state.t)
        params.weights[key] -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def dataset_frame_ids(dataset, vocab: Vocabulary):
    """Per-song frame id arrays for a list of (FeatureMatrix, Annotation)."""
    return [frame_labels(ann, feat.grid(), vocab) for feat, ann in dataset]


def train(dataset, val, cfg: TrainConfig, vocab: Vocabulary, arch: str = "logistic",
          hidden_units: int = 64, context: int = 5):
    """Train a frame-wise classifier; returns (best_params, history).

    Each epoch samples one patch of cfg.patch_seconds per training song and
    independently pitch-shifts it with probability cfg.shift_probability.
    Validation runs every cfg.validate_every epochs and the best-validation
    parameters are returned. Deterministic given cfg.seed.
    """
    if not dataset:
        raise EmptyDataset("empty training set")
    rng = np.random.default_rng(cfg.seed)
    n_bins = dataset[0][0].n_bins

    all_train = np.concatenate([feat.data for feat, _ in dataset], axis=0)
    params = init_params(arch, n_bins, vocab, hidden_units=hidden_units,
                         context=context, seed=cfg.seed)
    params.mean = all_train.mean(axis=0)
    std = all_train.std(axis=0)
    params.std = np.where(std > 1e-8, std, 1.0)
    del all_train

    train_ids = dataset_frame_ids(dataset, vocab)
    counts = np.bincount(np.concatenate(train_ids), minlength=vocab.size).astype(np.float64)
    exp_counts = expected_counts(counts, cfg.shift_probability, vocab)
    weights = class_weights(exp_counts, cfg.weight_alpha)

    val_ids = dataset_frame_ids(val, vocab) if val else []
    adam = _AdamState(m={k: np.zeros_like(v) for k, v in params.weights.items()},
                      v={k: np.zeros_like(v) for k, v in params.weights.items()})
    history = []
    best_val = math.inf
    best_params = copy.deepcopy(params)

    hop = dataset[0][0].hop
    patch_frames = max(1, round(cfg.patch_seconds / hop))

    for epoch in range(cfg.epochs):
        lr = cosine_lr(cfg.learning_rate, epoch, cfg.epochs)
        patches = []
        for (feat, _), ids in zip(dataset, train_ids):
            n = feat.n_frames
            start = int(rng.integers(0, max(1, n - patch_frames + 1)))
            x = feat.data[start:start + patch_frames]
            y = ids[start:start + patch_frames]
            if cfg.shift_probability > 0 and rng.random() < cfg.shift_probability:
                k = int(SHIFT_CHOICES[rng.integers(0, len(SHIFT_CHOICES))])
                shifted = pitch_shift_cqt(
                    FeatureMatrix(data=x, hop=feat.hop,
                                  bins_per_octave=feat.bins_per_octave,
                                  floor_db=feat.floor_db), k)
                x = shifted.data
                y = np.array([transpose_id(int(c), k, vocab) for c in y])
            patches.append((x, y))

        epoch_loss, n_batches = 0.0, 0
        for b in range(0, len(patches), cfg.batch_size):
            batch = patches[b:b + cfg.batch_size]
            longest = max(x.shape[0] for x, _ in batch)
            xs = np.zeros((len(batch), longest, n_bins))
            ys = np.zeros((len(batch), longest), dtype=np.int64)
            mask = np.zeros((len(batch), longest), dtype=bool)
            for j, (x, y) in enumerate(batch):
                xs[j, :x.shape[0]] = x
                ys[j, :x.shape[0]] = y
                mask[j, :x.shape[0]] = True
            loss, grads = loss_and_grads(
                params, xs.reshape(-1, n_bins), ys.reshape(-1),
                weights, cfg.structured_gamma, vocab, mask=mask.reshape(-1))
            if not math.isfinite(loss):
                raise NonFiniteLoss(epoch)
            _adam_step(params, grads, adam, lr)
            epoch_loss += loss
            n_batches += 1

        record = {"epoch": epoch, "lr": lr, "train_loss": epoch_loss / n_batches}

        if val and (epoch % cfg.validate_every == 0 or epoch == cfg.epochs - 1):
            val_loss, val_acc = evaluate(params, val, val_ids, weights,
                                         cfg.structured_gamma, vocab)
            record["val_loss"], record["val_acc"] = val_loss, val_acc
            if val_loss < best_val:
                best_val = val_loss
                best_params = copy.deepcopy(params)
        history.append(record)

    if not val:
        best_params = params
    return best_params, history


def fit_rows(rows: np.ndarray, targets: np.ndarray, cfg: TrainConfig,
             vocab: Vocabulary, arch: str = "logistic", hidden_units: int = 64):
    """Train directly on feature rows (e.g. beat-pooled vectors).

    Skips patch sampling and augmentation; one pass over shuffled rows per
    epoch in batches of cfg.batch_size.
    """
    rows = np.asarray(rows, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    if rows.size == 0:
        raise EmptyDataset("no rows to fit")
    rng = np.random.default_rng(cfg.seed)
    params = init_params(arch, rows.shape[1], vocab, hidden_units=hidden_units,
                         context=0, seed=cfg.seed)
    params.mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    params.std = np.where(std > 1e-8, std, 1.0)

    counts = np.bincount(targets, minlength=vocab.size).astype(np.float64)
    weights = class_weights(counts, cfg.weight_alpha)
    adam = _AdamState(m={k: np.zeros_like(v) for k, v in params.weights.items()},
                      v={k: np.zeros_like(v) for k, v in params.weights.items()})
    history = []
    for epoch in range(cfg.epochs):
        lr = cosine_lr(cfg.learning_rate, epoch, cfg.epochs)
        order = rng.permutation(len(rows))
        epoch_loss, n_batches = 0.0, 0
        for b in range(0, len(order), cfg.batch_size):
            sel = order[b:b + cfg.batch_size]
            loss, grads = loss_and_grads(params, rows[sel], targets[sel],
                                         weights, cfg.structured_gamma, vocab)
            if not math.isfinite(loss):
                raise NonFiniteLoss(epoch)
            _adam_step(params, grads, adam, lr)
            epoch_loss += loss
            n_batches += 1
        history.append({"epoch": epoch, "lr": lr, "train_loss": epoch_loss / n_batches})
    return params, history


def evaluate(params: ModelParams, dataset, ids_per_song, weights, gamma, vocab):
    """Mean loss and frame accuracy over whole songs."""
    losses, correct, total = [], 0, 0
    for (feat, _), ids in zip(dataset, ids_per_song):
        outputs = forward(params, feat)
        losses.append(total_loss(outputs, ids, weights, gamma, vocab))
        pred = np.argmax(outputs[0], axis=1)
        correct += int((pred == ids).sum())
        total += len(ids)
    return float(np.mean(losses)), correct / total


# --- checkpoints ---

def save_checkpoint(params: ModelParams, path) -> None:
    meta = {
        "version": 1,
        "arch": params.arch,
        "n_bins": params.n_bins,
        "n_classes": params.n_classes,
        "hidden_units": params.hidden_units,
        "context": params.context,
        "vocab_hash": params.vocab_hash,
    }
    arrays = {f"w_{k}": v.astype(np.float32) for k, v in params.weights.items()}
    np.savez(path, meta=json.dumps(meta, sort_keys=True),
             mean=params.mean.astype(np.float32),
             std=params.std.astype(np.float32), **arrays)


def load_checkpoint(path) -> ModelParams:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("version") != 1:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        params = ModelParams(arch=meta["arch"], n_bins=meta["n_bins"],
                             n_classes=meta["n_classes"],
                             hidden_units=meta["hidden_units"],
                             context=meta["context"], vocab_hash=meta["vocab_hash"])
        params.mean = data["mean"].astype(np.float64)
        params.std = data["std"].astype(np.float64)
        params.weights = {k[2:]: data[k].astype(np.float64)
                          for k in data.files if k.startswith("w_")}
    return params
