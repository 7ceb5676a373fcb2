"""Landmark shifting: tracks which instruction landmark is currently sought.

A 1-based pointer ``z`` walks monotonically over the landmark list. Each
step compares the pooled observation feature against the landmarks at
``z`` and ``z+1`` with a two-way temperature softmax; staying put too long
triggers a forced advance. No learnable parameters live here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatch, InvalidTemperature
from .store import dot


def step_threshold(n_landmarks: int) -> int:
    """Allowed no-shift steps: 1 for instructions with more than 3 landmarks, else 2."""
    return 1 if n_landmarks > 3 else 2


@dataclass(frozen=True)
class ShiftState:
    z: int                 # 1-based pointer into the landmark list
    no_shift_counter: int
    threshold: int
    n_landmarks: int

    def __post_init__(self):
        if not 1 <= self.z <= self.n_landmarks:
            raise ValueError(f"pointer {self.z} outside 1..{self.n_landmarks}")


def initial_state(n_landmarks: int) -> ShiftState:
    return ShiftState(1, 0, step_threshold(n_landmarks), n_landmarks)


@dataclass(frozen=True)
class ShiftResult:
    selected: int          # index of the landmark sought this step (z or z+1)
    p_stay: float          # probability assigned to the landmark at z
    forced: bool           # pointer advanced by the counter rule
    state: ShiftState      # state for the next step


def shift_probability(obs_feature, feat_stay, feat_next, tau: float) -> float:
    """Two-way softmax over dot similarities, scaled by 1/tau."""
    if tau <= 0.0:
        raise InvalidTemperature(f"tau must be positive, got {tau}")
    obs = np.asarray(obs_feature, dtype=np.float64)
    a = dot(obs, feat_stay)
    b = dot(obs, feat_next)
    # stable sigmoid of (a - b) / tau
    delta = (a - b) / tau
    if delta >= 0:
        return 1.0 / (1.0 + math.exp(-delta))
    e = math.exp(delta)
    return e / (1.0 + e)


def shift_step(state: ShiftState, obs_feature, landmark_feats, tau: float) -> ShiftResult:
    """One automaton step.

    ``landmark_feats`` is the feature pair for the landmarks at ``z`` and
    ``z+1``; at the last landmark the pair degenerates to (z, z) and the
    forced rule is disabled. Ties select z+1. A natural advance resets the
    counter; staying increments it, and a stay that would push the counter
    past the threshold becomes a forced advance instead.
    """
    feat_stay, feat_next = landmark_feats
    fs = np.asarray(feat_stay, dtype=np.float64)
    fn = np.asarray(feat_next, dtype=np.float64)
    if fs.shape != fn.shape:
        raise DimensionMismatch(f"{fs.shape} vs {fn.shape}")
    p_stay = shift_probability(obs_feature, fs, fn, tau)

    if state.z == state.n_landmarks:
        return ShiftResult(state.z, p_stay, False, state)

    if p_stay > 0.5:
        counter = state.no_shift_counter + 1
        if counter > state.threshold:
            new_state = replace(state, z=state.z + 1, no_shift_counter=0)
            return ShiftResult(state.z, p_stay, True, new_state)
        new_state = replace(state, no_shift_counter=counter)
        return ShiftResult(state.z, p_stay, False, new_state)

    new_state = replace(state, z=state.z + 1, no_shift_counter=0)
    return ShiftResult(state.z + 1, p_stay, False, new_state)
