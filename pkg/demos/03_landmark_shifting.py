"""The landmark pointer automaton on a crafted observation sequence.

The pointer advances when the next landmark looks more like the current
panorama, and is force-advanced after too many no-shift steps.
"""
import numpy as np

from consolenav.shifting import initial_state, shift_step, step_threshold

print("step thresholds: 4 landmarks ->", step_threshold(4),
      "| 3 landmarks ->", step_threshold(3))

# 3 landmarks, so the threshold is 2 no-shift steps
state = initial_state(3)
obs = np.array([1.0, 1.0])
stay_pair = (np.array([2.0, 0.0]), np.array([0.0, 1.0]))   # current wins
advance_pair = (np.array([1.0, 0.0]), np.array([0.0, 2.0]))  # next wins

print(f"\nstart: z={state.z}, threshold={state.threshold}")
script = [stay_pair, stay_pair, stay_pair, advance_pair, stay_pair]
for t, pair in enumerate(script):
    result = shift_step(state, obs, pair, tau=0.5)
    flag = " (forced advance)" if result.forced else ""
    print(f"t={t}: p_stay={result.p_stay:.4f} selected landmark "
          f"#{result.selected}{flag} -> next z={result.state.z}, "
          f"counter={result.state.no_shift_counter}")
    state = result.state
