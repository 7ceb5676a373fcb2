"""Train the scoring module and compare against the frozen-uniform ablation.

A scaled-down version of the acceptance experiment: distractor
cooccurrences are planted strongly into wrong views, so combining priors
with fixed uniform scores hurts, while learned state-dependent scores
suppress the bad ones.
"""
import time

from consolenav.agent import TrainConfig, train
from consolenav.simenv import SynthConfig, generate_world

cfg = SynthConfig(n_nodes=36, n_train=80, n_eval=40, n_co=5, noise=0.2,
                  distractor_rate=0.3, dim=32, seed=11,
                  mu_sig=0.7, kappa=0.6, kappa_distractor=3.0)
world = generate_world(cfg)
train_eps, eval_eps = world.split("train"), world.split("eval")
print(f"world ready: {len(train_eps)} train / {len(eval_eps)} eval episodes")

results = {}
for mode in ("learned", "uniform"):
    start = time.time()
    tc = TrainConfig(epochs=8, seed=5, scores_mode=mode)
    _, _, history = train(world, train_eps, tc, eval_episodes=eval_eps)
    results[mode] = history
    print(f"\nscores_mode={mode} ({time.time() - start:.0f}s):")
    print(f"  {'epoch':>5s} {'il':>8s} {'cs':>8s} {'ct':>8s} {'eval SR':>8s}")
    for row in history:
        print(f"  {row['epoch']:>5d} {row['mean_il']:>8.3f} "
              f"{row['mean_cs']:>8.3f} {row['mean_ct']:>8.3f} "
              f"{row['eval_sr']:>8.3f}")

gap = results["learned"][-1]["eval_sr"] - results["uniform"][-1]["eval_sr"]
print(f"\nlearned-scoring advantage over frozen-uniform: {gap:+.3f} SR")
