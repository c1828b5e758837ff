import itertools

import numpy as np
import pytest

from chordkit.decode import (DecoderConfig, count_transitions,
                             incorrect_regions, path_log_score, viterbi_smooth)
from chordkit.errors import EmptySequence, LengthMismatch


def brute_force_best(post, cfg):
    """Enumerate every state path and return (best_path, best_score)."""
    n_frames, n_states = post.shape
    best_path, best_score = None, -np.inf
    for path in itertools.product(range(n_states), repeat=n_frames):
        score = path_log_score(path, post, cfg)
        if score > best_score:
            best_score, best_path = score, path
    return np.array(best_path), best_score


class TestConfig:
    @pytest.mark.parametrize("beta", [0.0, 1.0, -0.2, 1.5])
    def test_beta_bounds(self, beta):
        with pytest.raises(ValueError):
            DecoderConfig(beta=beta, n_classes=3)

    def test_needs_two_classes(self):
        with pytest.raises(ValueError):
            DecoderConfig(beta=0.5, n_classes=1)


class TestViterbi:
    def test_high_beta_removes_blip(self):
        post = np.array([
            [0.9, 0.1],
            [0.9, 0.1],
            [0.4, 0.6],  # single noisy frame
            [0.9, 0.1],
            [0.9, 0.1],
        ])
        path = viterbi_smooth(post, DecoderConfig(beta=0.9, n_classes=2))
        assert list(path) == [0, 0, 0, 0, 0]

    def test_low_beta_keeps_blip(self):
        post = np.array([
            [0.9, 0.1],
            [0.4, 0.6],
            [0.9, 0.1],
        ])
        path = viterbi_smooth(post, DecoderConfig(beta=0.5, n_classes=2))
        assert list(path) == [0, 1, 0]

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for trial in range(200):
            n_states = int(rng.integers(2, 6))
            n_frames = int(rng.integers(1, 9))
            beta = float(rng.uniform(0.02, 0.98))
            post = rng.dirichlet(np.ones(n_states), size=n_frames)
            cfg = DecoderConfig(beta=beta, n_classes=n_states)
            path = viterbi_smooth(post, cfg)
            _, best_score = brute_force_best(post, cfg)
            assert path_log_score(path, post, cfg) == pytest.approx(best_score, abs=1e-9), trial

    def test_beta_below_uniform(self):
        # beta < 1/C favours changing state; the single-best-predecessor
        # shortcut must still return an optimal path
        rng = np.random.default_rng(1)
        post = rng.dirichlet(np.ones(3), size=6)
        cfg = DecoderConfig(beta=0.05, n_classes=3)
        path = viterbi_smooth(post, cfg)
        _, best = brute_force_best(post, cfg)
        assert path_log_score(path, post, cfg) == pytest.approx(best, abs=1e-9)

    def test_uniform_beta_is_framewise_argmax(self):
        rng = np.random.default_rng(2)
        post = rng.dirichlet(np.ones(4), size=20)
        path = viterbi_smooth(post, DecoderConfig(beta=0.25, n_classes=4))
        assert np.array_equal(path, np.argmax(post, axis=1))

    def test_zero_probabilities_floored(self):
        post = np.array([[1.0, 0.0], [0.0, 1.0]])
        path = viterbi_smooth(post, DecoderConfig(beta=0.5, n_classes=2))
        assert list(path) == [0, 1]

    def test_single_frame(self):
        post = np.array([[0.2, 0.5, 0.3]])
        path = viterbi_smooth(post, DecoderConfig(beta=0.9, n_classes=3))
        assert list(path) == [1]

    def test_shape_errors(self):
        cfg = DecoderConfig(beta=0.5, n_classes=3)
        with pytest.raises(EmptySequence):
            viterbi_smooth(np.zeros((0, 3)), cfg)
        with pytest.raises(LengthMismatch):
            viterbi_smooth(np.ones((4, 2)) / 2, cfg)


class TestMaxMarginal:
    def test_also_smooths(self):
        post = np.array([
            [0.9, 0.1],
            [0.9, 0.1],
            [0.45, 0.55],
            [0.9, 0.1],
            [0.9, 0.1],
        ])
        cfg = DecoderConfig(beta=0.95, n_classes=2, mode="max_marginal")
        assert list(viterbi_smooth(post, cfg)) == [0, 0, 0, 0, 0]

    def test_uniform_beta_is_framewise_argmax(self):
        rng = np.random.default_rng(3)
        post = rng.dirichlet(np.ones(4), size=15)
        cfg = DecoderConfig(beta=0.25, n_classes=4, mode="max_marginal")
        assert np.array_equal(viterbi_smooth(post, cfg), np.argmax(post, axis=1))


class TestAnalytics:
    def test_count_transitions(self):
        assert count_transitions([1, 1, 2, 2, 2, 1]) == 2
        assert count_transitions([5]) == 0
        with pytest.raises(EmptySequence):
            count_transitions([])

    def test_incorrect_regions(self):
        pred = [0, 1, 1, 2, 0, 3, 3]
        truth = [0, 0, 0, 0, 0, 0, 3]
        regions = incorrect_regions(pred, truth)
        assert regions == [(1, 2, 1), (3, 1, 2), (5, 1, 3)]

    def test_incorrect_regions_all_correct(self):
        assert incorrect_regions([1, 2], [1, 2]) == []

    def test_incorrect_regions_trailing(self):
        assert incorrect_regions([1, 1], [0, 0]) == [(0, 2, 1)]

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            incorrect_regions([1], [1, 2])
