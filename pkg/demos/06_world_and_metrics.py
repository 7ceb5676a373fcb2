"""Generate a small synthetic world and score some paths.

Shows the bundle contents and the full metric suite on a perfect run and
on a deliberately wrong one.
"""
import numpy as np

from consolenav.agent import ActionPredictor, TrainConfig, rollout
from consolenav.metrics import evaluate
from consolenav.scoring import ScoringParams
from consolenav.simenv import SynthConfig, generate_world

cfg = SynthConfig(n_nodes=16, n_train=4, n_eval=2, path_hops=(2, 4),
                  dim=16, noise=0.0, distractor_rate=0.0, seed=42)
world = generate_world(cfg)
print(f"world: {len(world.graph.nodes)} nodes, {len(world.episodes)} episodes, "
      f"{len(world.store)} stored vectors")

episode = world.episodes[0]
priors = world.priors[episode.instruction_id]
print(f"\nepisode {episode.instruction_id}: {episode.start} -> {episode.goal}")
print(f"  instruction: {episode.instruction}")
print(f"  landmarks:   {priors.landmarks}")

params = ScoringParams.initial(cfg.dim, np.random.default_rng(0))
predictor = ActionPredictor.initial(cfg.dim)
baseline_cfg = TrainConfig(scores_mode="zero")
traces = [rollout(world, e, params, predictor, baseline_cfg, "greedy")[0]
          for e in world.episodes]
report = evaluate(traces, world.graph, world.episodes)
print("\ngreedy baseline rollout on the clean world (scores frozen at zero):")
for key, value in report.to_dict().items():
    if key != "per_episode":
        print(f"  {key:5s} = {value:.4f}")

# a wrong agent: never moves
class StayTrace:
    def __init__(self, episode):
        self.nodes = [episode.start]

stay = evaluate([StayTrace(e) for e in world.episodes], world.graph,
                world.episodes)
print(f"\nagent that stops immediately: SR={stay.sr:.2f} nDTW={stay.ndtw:.3f} "
      f"CLS={stay.cls:.3f}")
