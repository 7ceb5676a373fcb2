"""Hand-derived gradients vs central finite differences.

Perturbs a handful of parameter entries of the scoring head and the
action predictor and compares the analytic gradient with (L(+h)-L(-h))/2h
through the whole step pipeline.
"""
import sys

import numpy as np

sys.path.insert(0, "tests")
from test_scoring import make_fixture, make_params, pipeline_loss, record_tape

from consolenav.agent import ActionPredictor
from consolenav.scoring import backward_step

fx = make_fixture(0)
params = make_params(seed=1)
predictor = ActionPredictor(np.eye(8) + 0.2 * np.random.default_rng(2).normal(size=(8, 8)))

tape = record_tape(params, predictor, fx)
params.zero_grads()
backward_step(tape, params, predictor, lam1=0.1, lam2=0.1)

h = 1e-5
rng = np.random.default_rng(3)
print(f"{'tensor':8s} {'entry':>8s} {'analytic':>12s} {'finite diff':>12s} {'rel err':>10s}")
for name, tensor, grad in [("W", params.W, params.grad_W),
                           ("b", params.b, params.grad_b),
                           ("gamma", params.ln_gamma, params.grad_ln_gamma),
                           ("W_a", predictor.W_a, predictor.grad_W_a)]:
    flat, gflat = tensor.ravel(), grad.ravel()
    for k in rng.choice(flat.shape[0], size=3, replace=False):
        keep = flat[k]
        flat[k] = keep + h
        up = pipeline_loss(params, predictor, fx, 0.1, 0.1)
        flat[k] = keep - h
        down = pipeline_loss(params, predictor, fx, 0.1, 0.1)
        flat[k] = keep
        fd = (up - down) / (2 * h)
        rel = abs(gflat[k] - fd) / max(abs(gflat[k]), abs(fd), 1e-5)
        print(f"{name:8s} {k:>8d} {gflat[k]:>12.6f} {fd:>12.6f} {rel:>10.2e}")
