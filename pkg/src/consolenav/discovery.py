"""Landmark discovery: where in the panorama does a phrase appear.

For the current landmark and each of its cooccurrences, a temperature
softmax over phrase-view dot similarities yields a probability per
candidate view. Views here are the candidate navigable views plus one
stop view, so these distributions share support with the action space.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyViews,
    InvalidTemperature,
)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    e = np.exp(shifted)
    return e / e.sum()


def view_distribution(phrase_feat, view_feats, tau: float) -> np.ndarray:
    """softmax_n( dot(phrase, view_n) / tau ) over the candidate views."""
    if tau <= 0.0:
        raise InvalidTemperature(f"tau must be positive, got {tau}")
    views = np.asarray(view_feats, dtype=np.float64)
    if views.ndim != 2 or views.shape[0] == 0:
        raise EmptyViews("need at least one view")
    phrase = np.asarray(phrase_feat, dtype=np.float64)
    if phrase.shape != (views.shape[1],):
        raise DimensionMismatch(f"{phrase.shape} vs view dim {views.shape[1]}")
    return _softmax(views @ phrase / tau)


@dataclass
class DiscoveryBundle:
    """Per-view probabilities for one landmark and its cooccurrences.

    Phrase features are kept so downstream correction can weight them
    without re-resolving store keys.
    """

    landmark_dist: np.ndarray        # (N_o,)
    cooccurrence_dists: np.ndarray   # (N_co, N_o)
    landmark_feature: np.ndarray     # (d,)
    cooccurrence_features: np.ndarray  # (N_co, d)

    @property
    def n_views(self) -> int:
        return self.landmark_dist.shape[0]

    @property
    def n_cooccurrences(self) -> int:
        return self.cooccurrence_dists.shape[0]


def discovery_bundle(landmark_feat, cooccurrence_feats, view_feats,
                     tau: float) -> DiscoveryBundle:
    """Apply view_distribution to the landmark and each cooccurrence."""
    views = np.asarray(view_feats, dtype=np.float64)
    landmark = np.asarray(landmark_feat, dtype=np.float64)
    lm_dist = view_distribution(landmark, views, tau)
    co_feats = np.asarray(cooccurrence_feats, dtype=np.float64)
    if co_feats.size == 0:
        co_feats = np.zeros((0, landmark.shape[0]))
        co_dists = np.zeros((0, lm_dist.shape[0]))
    else:
        if co_feats.ndim != 2 or co_feats.shape[1] != landmark.shape[0]:
            raise DimensionMismatch(
                f"cooccurrence features {co_feats.shape} vs dim {landmark.shape[0]}")
        co_dists = np.stack([view_distribution(f, views, tau) for f in co_feats])
    return DiscoveryBundle(lm_dist, co_dists, landmark, co_feats)
