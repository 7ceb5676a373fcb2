"""Discovery distributions, learnable correction, and the loss kernels.

A planted example: the landmark sits in view 0, one reliable cooccurrence
agrees, one distractor cooccurrence points at view 2. Scoring weights
decide how much each prior contributes to the corrected prediction.
"""
import numpy as np

from consolenav.discovery import discovery_bundle
from consolenav.scoring import (
    ScoreSet, consistency_loss, contrastive_loss, corrected_distribution,
    corrected_landmark_features, enhance,
)

rng = np.random.default_rng(1)
d = 8
f_landmark = np.eye(d)[0]
f_good_co = np.eye(d)[1]
f_distractor = np.eye(d)[2]

views = 0.05 * rng.normal(size=(3, d))
views[0] += 1.2 * f_landmark + 0.8 * f_good_co   # the teacher view
views[2] += 2.0 * f_distractor                   # distractor planted wrong

bundle = discovery_bundle(f_landmark, [f_good_co, f_distractor], views, tau=0.5)
print("landmark over views:   ", bundle.landmark_dist.round(3))
print("good co over views:    ", bundle.cooccurrence_dists[0].round(3))
print("distractor over views: ", bundle.cooccurrence_dists[1].round(3))

for name, ss in [
    ("uniform scores", ScoreSet(1.0, np.array([1.0, 1.0]))),
    ("suppressing distractor", ScoreSet(2.0, np.array([1.5, -0.5]))),
]:
    pred = corrected_distribution(bundle, ss)
    loss = consistency_loss(pred, 0)
    print(f"\n{name}: corrected={pred.normalized.round(3)} "
          f"consistency_loss={loss:.4f}")
    corrected = corrected_landmark_features(bundle, ss)
    enhanced = enhance(views, corrected)
    print(f"  teacher-view gain along landmark axis: "
          f"{enhanced[0][0] - views[0][0]:+.3f}")
    print(f"  contrastive loss: {contrastive_loss(views, corrected, 0.5):.4f}")
