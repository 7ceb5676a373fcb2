import math

import numpy as np
import pytest

from consolenav.discovery import DiscoveryBundle, discovery_bundle, view_distribution
from consolenav.errors import DimensionMismatch, EmptyViews, InvalidTemperature


def softmax_oracle(sims, tau):
    """Straight-line scalar softmax used as the independent check."""
    exps = [math.exp(s / tau) for s in sims]
    z = sum(exps)
    return [e / z for e in exps]


def views_with_sims(sims):
    """Views whose dot products with e1 equal the given similarities."""
    return np.array([[s, 0.0] for s in sims]), np.array([1.0, 0.0])


class TestViewDistribution:
    def test_uniform_for_equal_similarity(self):
        views, phrase = views_with_sims([0.7, 0.7, 0.7])
        dist = view_distribution(phrase, views, 0.5)
        assert np.allclose(dist, [1 / 3] * 3, atol=1e-12)

    def test_scalar_oracle(self):
        views, phrase = views_with_sims([1.0, 0.0, 0.0])
        dist = view_distribution(phrase, views, 0.5)
        expected = softmax_oracle([1.0, 0.0, 0.0], 0.5)
        assert np.max(np.abs(dist - expected)) < 1e-12
        assert np.allclose(dist, [0.7870, 0.1065, 0.1065], atol=1e-4)

    def test_large_similarity_dominates_monotonically(self):
        prev = 0.0
        for k in [1.0, 2.0, 5.0, 10.0, 20.0]:
            views, phrase = views_with_sims([k, 0.0, 0.0])
            p = view_distribution(phrase, views, 0.5)[0]
            assert p > prev
            prev = p
        assert prev > 0.999999

    def test_random_against_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            n = int(rng.integers(2, 7))
            sims = rng.normal(size=n)
            views, phrase = views_with_sims(sims)
            dist = view_distribution(phrase, views, 0.5)
            assert np.max(np.abs(dist - softmax_oracle(sims, 0.5))) < 1e-10
            assert abs(dist.sum() - 1.0) <= 1e-9
            assert np.all(dist > 0) and np.all(dist < 1)

    def test_shift_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            sims = rng.normal(size=4)
            c = float(rng.normal())
            v0, phrase = views_with_sims(sims)
            v1, _ = views_with_sims(sims + c)
            d0 = view_distribution(phrase, v0, 0.5)
            d1 = view_distribution(phrase, v1, 0.5)
            assert np.max(np.abs(d0 - d1)) < 1e-9

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(5)
        views = rng.normal(size=(5, 4))
        phrase = rng.normal(size=4)
        perm = rng.permutation(5)
        d = view_distribution(phrase, views, 0.5)
        dp = view_distribution(phrase, views[perm], 0.5)
        assert np.allclose(dp, d[perm], atol=1e-12)

    def test_monotonicity_in_one_similarity(self):
        views, phrase = views_with_sims([0.5, 0.2, -0.1])
        base = view_distribution(phrase, views, 0.5)
        bumped_views, _ = views_with_sims([0.9, 0.2, -0.1])
        bumped = view_distribution(phrase, bumped_views, 0.5)
        assert bumped[0] > base[0]

    def test_errors(self):
        views, phrase = views_with_sims([1.0, 0.0])
        with pytest.raises(InvalidTemperature):
            view_distribution(phrase, views, -1.0)
        with pytest.raises(EmptyViews):
            view_distribution(phrase, np.zeros((0, 2)), 0.5)
        with pytest.raises(DimensionMismatch):
            view_distribution(np.ones(3), views, 0.5)


class TestDiscoveryBundle:
    def test_no_cooccurrences(self):
        views = np.eye(3)
        bundle = discovery_bundle(np.array([1.0, 0.0, 0.0]), [], views, 0.5)
        assert bundle.n_cooccurrences == 0
        assert bundle.cooccurrence_dists.shape == (0, 3)
        assert abs(bundle.landmark_dist.sum() - 1.0) <= 1e-9

    def test_five_cooccurrences_six_views(self):
        rng = np.random.default_rng(6)
        views = rng.normal(size=(6, 8))
        landmark = rng.normal(size=8)
        cos = rng.normal(size=(5, 8))
        bundle = discovery_bundle(landmark, cos, views, 0.5)
        assert bundle.n_views == 6
        assert bundle.n_cooccurrences == 5
        assert abs(bundle.landmark_dist.sum() - 1.0) <= 1e-9
        for row in bundle.cooccurrence_dists:
            assert abs(row.sum() - 1.0) <= 1e-9

    def test_identical_phrase_features_give_identical_distributions(self):
        rng = np.random.default_rng(7)
        views = rng.normal(size=(4, 8))
        phrase = rng.normal(size=8)
        bundle = discovery_bundle(phrase, [phrase], views, 0.5)
        assert np.array_equal(bundle.landmark_dist, bundle.cooccurrence_dists[0])
