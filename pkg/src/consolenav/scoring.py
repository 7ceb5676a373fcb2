"""Learnable cooccurrence scoring, prior correction, and the loss kernels.

The scoring head maps the concatenated instruction and pooled-observation
features through linear -> relu -> layer norm -> dropout, then scores the
current landmark and each cooccurrence by dot product against the state
feature. Scores re-weight the discovery distributions (prior correction),
build corrected landmark features, and enhance the raw view features.

All gradients are derived by hand and accumulated on explicit buffers;
training is plain SGD. Forward passes record a tape of intermediates so
the backward pass is exact, not approximated.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .checkpoint import read_checkpoint, write_checkpoint
from .errors import (
    ArityMismatch,
    DegenerateBatch,
    DimensionMismatch,
    IndexOutOfRange,
    InvalidTemperature,
    LengthMismatch,
    StaleForward,
)
from .discovery import DiscoveryBundle

SCORING_MAGIC = b"CNSLSCR1"
LN_EPS = 1e-5


@dataclass
class ScoringParams:
    """Weights of the scoring head with paired gradient buffers."""

    W: np.ndarray         # (d, 2d)
    b: np.ndarray         # (d,)
    ln_gamma: np.ndarray  # (d,)
    ln_beta: np.ndarray   # (d,)
    dropout_rate: float = 0.1
    grad_W: np.ndarray = field(default=None, repr=False)
    grad_b: np.ndarray = field(default=None, repr=False)
    grad_ln_gamma: np.ndarray = field(default=None, repr=False)
    grad_ln_beta: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.grad_W is None:
            self.zero_grads()

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    @classmethod
    def initial(cls, dim: int, rng, dropout_rate: float = 0.1) -> "ScoringParams":
        scale = 1.0 / np.sqrt(2.0 * dim)
        return cls(
            W=rng.normal(scale=scale, size=(dim, 2 * dim)),
            b=np.zeros(dim),
            ln_gamma=np.ones(dim),
            ln_beta=np.zeros(dim),
            dropout_rate=dropout_rate,
        )

    def zero_grads(self) -> None:
        self.grad_W = np.zeros_like(self.W)
        self.grad_b = np.zeros_like(self.b)
        self.grad_ln_gamma = np.zeros_like(self.ln_gamma)
        self.grad_ln_beta = np.zeros_like(self.ln_beta)

    def copy(self) -> "ScoringParams":
        return ScoringParams(self.W.copy(), self.b.copy(), self.ln_gamma.copy(),
                             self.ln_beta.copy(), self.dropout_rate)


@dataclass
class StateCache:
    """Intermediates of one state-feature forward, kept for the backward."""

    x: np.ndarray           # (2d,) concatenated input
    relu_mask: np.ndarray   # (d,) bool
    rhat: np.ndarray        # (d,) normalized activations
    sigma: float            # sqrt(var + eps)
    dropout_mask: np.ndarray  # (d,) inverted-dropout scale factors
    state: np.ndarray       # (d,) output f_S


def state_forward(instr_cls, obs_mean, params: ScoringParams,
                  train_mode: bool = False, rng=None) -> tuple[np.ndarray, StateCache]:
    instr = np.asarray(instr_cls, dtype=np.float64)
    obs = np.asarray(obs_mean, dtype=np.float64)
    d = params.dim
    if instr.shape != (d,) or obs.shape != (d,):
        raise DimensionMismatch(
            f"expected two vectors of length {d}, got {instr.shape} and {obs.shape}")
    x = np.concatenate([instr, obs])
    a = params.W @ x + params.b
    relu_mask = a > 0.0
    r = np.where(relu_mask, a, 0.0)
    mu = r.mean()
    centered = r - mu
    sigma = float(np.sqrt((centered ** 2).mean() + LN_EPS))
    rhat = centered / sigma
    y = params.ln_gamma * rhat + params.ln_beta
    if train_mode and params.dropout_rate > 0.0:
        if rng is None:
            raise ValueError("train_mode dropout needs an rng")
        keep = 1.0 - params.dropout_rate
        mask = (rng.random(d) < keep).astype(np.float64) / keep
    else:
        mask = np.ones(d)
    state = y * mask
    return state, StateCache(x, relu_mask, rhat, sigma, mask, state)


def state_feature(instr_cls, obs_mean, params: ScoringParams,
                  train_mode: bool = False, rng=None) -> np.ndarray:
    """layer_norm(relu(W [instr; obs] + b)) with inverted dropout in train mode."""
    state, _ = state_forward(instr_cls, obs_mean, params, train_mode, rng)
    return state


@dataclass
class ScoreSet:
    s_la: float
    s_co: np.ndarray  # (N_co,)


def scores(state_feat, landmark_feat, cooccurrence_feats) -> ScoreSet:
    """Dot-product scores of the state feature against each phrase feature."""
    state = np.asarray(state_feat, dtype=np.float64)
    landmark = np.asarray(landmark_feat, dtype=np.float64)
    if state.shape != landmark.shape:
        raise DimensionMismatch(f"{state.shape} vs {landmark.shape}")
    co = np.asarray(cooccurrence_feats, dtype=np.float64)
    if co.size == 0:
        co = co.reshape(0, state.shape[0])
    if co.shape[1:] != state.shape:
        raise DimensionMismatch(f"{co.shape} vs {state.shape}")
    # per-row np.dot keeps each score bit-identical to a scalar dot product
    return ScoreSet(float(np.dot(state, landmark)),
                    np.array([np.dot(state, f) for f in co]))


@dataclass
class CorrectedPrediction:
    """Score-weighted combination of discovery distributions.

    ``raw`` is the plain weighted sum and may be signed; ``normalized`` is
    its softmax so the cross-entropy below stays well-posed.
    """

    raw: np.ndarray
    normalized: np.ndarray


def _softmax(v: np.ndarray) -> np.ndarray:
    e = np.exp(v - np.max(v))
    return e / e.sum()


def corrected_distribution(bundle: DiscoveryBundle, score_set: ScoreSet) -> CorrectedPrediction:
    raw = corrected_raw(bundle, score_set)
    return CorrectedPrediction(raw, _softmax(raw))


def corrected_raw(bundle: DiscoveryBundle, score_set: ScoreSet) -> np.ndarray:
    s_co = np.asarray(score_set.s_co, dtype=np.float64)
    if s_co.shape[0] != bundle.n_cooccurrences:
        raise ArityMismatch(
            f"{s_co.shape[0]} scores vs {bundle.n_cooccurrences} cooccurrences")
    raw = bundle.landmark_dist * score_set.s_la
    if s_co.shape[0]:
        raw = raw + bundle.cooccurrence_dists.T @ s_co
    return raw


def consistency_loss(pred: CorrectedPrediction, gt_index: int) -> float:
    """Cross entropy of the normalized corrected distribution at the teacher view."""
    n = pred.raw.shape[0]
    if not 0 <= gt_index < n:
        raise IndexOutOfRange(f"index {gt_index} outside 0..{n - 1}")
    # log softmax computed from raw for stability
    shifted = pred.raw - np.max(pred.raw)
    return float(np.log(np.sum(np.exp(shifted))) - shifted[gt_index])


def corrected_landmark_features(bundle: DiscoveryBundle, score_set: ScoreSet) -> np.ndarray:
    """Per-view phrase features weighted by discovery probability and score.

    Row n is  p_la[n] * s_la * f_la  +  sum_i p_co[i, n] * s_co[i] * f_co[i].
    """
    s_co = np.asarray(score_set.s_co, dtype=np.float64)
    if s_co.shape[0] != bundle.n_cooccurrences:
        raise ArityMismatch(
            f"{s_co.shape[0]} scores vs {bundle.n_cooccurrences} cooccurrences")
    out = score_set.s_la * np.outer(bundle.landmark_dist, bundle.landmark_feature)
    if s_co.shape[0]:
        out = out + (bundle.cooccurrence_dists * s_co[:, None]).T @ bundle.cooccurrence_features
    return out


def enhance(view_feats, corrected_feats) -> np.ndarray:
    """Per-view sum of raw and corrected landmark features."""
    views = np.asarray(view_feats, dtype=np.float64)
    corrected = np.asarray(corrected_feats, dtype=np.float64)
    if views.shape[0] != corrected.shape[0]:
        raise LengthMismatch(f"{views.shape[0]} views vs {corrected.shape[0]} rows")
    if views.shape != corrected.shape:
        raise DimensionMismatch(f"{views.shape} vs {corrected.shape}")
    return views + corrected


def _row_logsumexp(m: np.ndarray) -> np.ndarray:
    mx = m.max(axis=1, keepdims=True)
    return (mx + np.log(np.exp(m - mx).sum(axis=1, keepdims=True))).ravel()


def contrastive_loss(view_feats, corrected_feats, tau: float) -> float:
    """Symmetric InfoNCE between view features and corrected landmark features.

    Each view's corrected feature is the positive for that view; every
    other view's corrected feature is a negative, and the symmetric
    direction swaps the roles.
    """
    if tau <= 0.0:
        raise InvalidTemperature(f"tau must be positive, got {tau}")
    views = np.asarray(view_feats, dtype=np.float64)
    corrected = np.asarray(corrected_feats, dtype=np.float64)
    if views.shape != corrected.shape:
        raise DimensionMismatch(f"{views.shape} vs {corrected.shape}")
    n = views.shape[0]
    if n < 2:
        raise DegenerateBatch("contrastive loss needs at least two views")
    sim_ou = views @ corrected.T / tau         # anchor view n, candidates corrected j
    sim_uo = corrected @ views.T / tau         # anchor corrected n, candidates view j
    loss_ou = float(np.sum(_row_logsumexp(sim_ou) - np.diag(sim_ou)))
    loss_uo = float(np.sum(_row_logsumexp(sim_uo) - np.diag(sim_uo)))
    return 0.5 * (loss_ou + loss_uo)


# --- tape-based backward ------------------------------------------------------

@dataclass
class StepTape:
    """Everything one pipeline step recorded for the exact backward pass."""

    state_cache: StateCache
    bundle: DiscoveryBundle
    score_set: ScoreSet
    pred: CorrectedPrediction
    corrected: np.ndarray       # (N_o, d) corrected landmark features
    views: np.ndarray           # (N_o, d) raw view features
    instr: np.ndarray           # (d,) instruction feature
    u_vec: np.ndarray           # (d,) projected instruction feature
    p_action: np.ndarray        # (N_o,) softmax of the action logits
    teacher: int
    tau: float
    temp_a: float
    il: float
    cs: float
    ct: float


def _softmax_rows(m: np.ndarray) -> np.ndarray:
    e = np.exp(m - m.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def backward_step(tape: StepTape, params: ScoringParams, predictor,
                  lam1: float, lam2: float, il_weight: float = 1.0) -> None:
    """Accumulate exact gradients of il_weight*L_il + lam1*L_cs + lam2*L_ct.

    The imitation term reaches the scoring parameters through the corrected
    landmark features inside the enhanced views; the consistency term
    reaches them through the corrected distribution; the contrastive term
    through the corrected features directly.
    """
    bundle = tape.bundle
    n_views = tape.views.shape[0]
    one_hot = np.zeros(n_views)
    one_hot[tape.teacher] = 1.0

    # imitation: logits_n = u . (V_n + FU_n) / temp_a
    err = tape.p_action - one_hot
    enhanced = tape.views + tape.corrected
    if il_weight != 0.0:
        predictor.grad_W_a += (il_weight / tape.temp_a) * np.outer(
            enhanced.T @ err, tape.instr)
    if tape.state_cache is None:
        # frozen scores: nothing downstream depends on the scoring parameters
        return
    grad_fu = (il_weight / tape.temp_a) * np.outer(err, tape.u_vec)

    # contrastive: both anchor directions contribute to the corrected features
    if lam2 != 0.0:
        sim_ou = tape.views @ tape.corrected.T / tape.tau
        sim_uo = tape.corrected @ tape.views.T / tape.tau
        a_mat = _softmax_rows(sim_ou) - np.eye(n_views)
        b_mat = _softmax_rows(sim_uo) - np.eye(n_views)
        grad_fu += lam2 / (2.0 * tape.tau) * (a_mat.T @ tape.views + b_mat @ tape.views)

    # consistency: softmax cross-entropy on the corrected raw combination
    grad_raw = lam1 * (tape.pred.normalized - one_hot)

    # scores collect from both paths
    s_co = np.asarray(tape.score_set.s_co, dtype=np.float64)
    grad_s_la = float(grad_raw @ bundle.landmark_dist
                      + bundle.landmark_dist @ (grad_fu @ bundle.landmark_feature))
    if s_co.shape[0]:
        phrase_proj = grad_fu @ bundle.cooccurrence_features.T   # (N_o, N_co)
        grad_s_co = (bundle.cooccurrence_dists @ grad_raw
                     + np.einsum("in,ni->i", bundle.cooccurrence_dists, phrase_proj))
    else:
        grad_s_co = np.zeros(0)

    # state feature: s_la = f_S . f_la, s_co_i = f_S . f_co_i
    grad_state = grad_s_la * bundle.landmark_feature
    if s_co.shape[0]:
        grad_state = grad_state + bundle.cooccurrence_features.T @ grad_s_co

    cache = tape.state_cache
    g_y = grad_state * cache.dropout_mask
    params.grad_ln_gamma += g_y * cache.rhat
    params.grad_ln_beta += g_y
    g_rhat = g_y * params.ln_gamma
    g_r = (g_rhat - g_rhat.mean() - cache.rhat * (g_rhat * cache.rhat).mean()) / cache.sigma
    g_a = np.where(cache.relu_mask, g_r, 0.0)
    params.grad_W += np.outer(g_a, cache.x)
    params.grad_b += g_a


def backward_and_step(tapes, params: ScoringParams, predictor, *,
                      lam1: float, lam2: float, il_weight: float = 1.0,
                      lr_scoring: float, lr_agent: float) -> None:
    """Backward over recorded tapes, one plain SGD update, buffers zeroed."""
    if not tapes:
        raise StaleForward("no recorded forward tapes")
    for tape in tapes:
        backward_step(tape, params, predictor, lam1, lam2, il_weight)
    params.W -= lr_scoring * params.grad_W
    params.b -= lr_scoring * params.grad_b
    params.ln_gamma -= lr_scoring * params.grad_ln_gamma
    params.ln_beta -= lr_scoring * params.grad_ln_beta
    params.zero_grads()
    predictor.W_a -= lr_agent * predictor.grad_W_a
    predictor.grad_W_a = np.zeros_like(predictor.grad_W_a)


def save_scoring_params(params: ScoringParams, path) -> None:
    write_checkpoint(path, SCORING_MAGIC, params.dim, {
        "W": params.W,
        "b": params.b,
        "ln_gamma": params.ln_gamma,
        "ln_beta": params.ln_beta,
        "dropout_rate": np.array([params.dropout_rate]),
    })


def load_scoring_params(path) -> ScoringParams:
    _, sections = read_checkpoint(path, SCORING_MAGIC)
    return ScoringParams(
        W=sections["W"],
        b=sections["b"],
        ln_gamma=sections["ln_gamma"],
        ln_beta=sections["ln_beta"],
        dropout_rate=float(sections["dropout_rate"][0]),
    )
