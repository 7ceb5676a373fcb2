"""Action prediction, rollouts, and the teacher-forced training loop.

The action predictor is a bilinear scorer: the instruction feature is
projected by a square matrix and dotted against each enhanced view
feature. It stands in for a heavy cross-modal encoder so the landmark
pipeline's effect can be isolated by comparing pipeline-on and
pipeline-off runs under the same predictor.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .checkpoint import read_checkpoint, write_checkpoint
from .discovery import discovery_bundle
from .errors import (
    DimensionMismatch,
    EmptyDataset,
    IndexOutOfRange,
    MissingPriors,
)
from .priors import LandmarkPriors
from .scoring import (
    ScoringParams,
    ScoreSet,
    StepTape,
    backward_and_step,
    consistency_loss,
    contrastive_loss,
    corrected_distribution,
    corrected_landmark_features,
    enhance,
    scores,
    state_forward,
)
from .shifting import initial_state, shift_step
from .store import TextQuery, mean_pool, text_feature

AGENT_MAGIC = b"CNSLAGT1"


@dataclass
class ActionPredictor:
    """Bilinear matcher between a projected instruction feature and views."""

    W_a: np.ndarray          # (d, d)
    temperature_a: float = 1.0
    grad_W_a: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.grad_W_a is None:
            self.grad_W_a = np.zeros_like(self.W_a)

    @property
    def dim(self) -> int:
        return self.W_a.shape[0]

    @classmethod
    def initial(cls, dim: int, temperature_a: float = 1.0) -> "ActionPredictor":
        # identity start: instruction and view features share one space,
        # so an untrained predictor already matches on raw similarity
        return cls(np.eye(dim), temperature_a)

    def copy(self) -> "ActionPredictor":
        return ActionPredictor(self.W_a.copy(), self.temperature_a)


def action_logits(instr_feat, enhanced_views, predictor: ActionPredictor) -> np.ndarray:
    """logit_n = dot(W_a instr, enhanced_view_n) / temperature_a."""
    instr = np.asarray(instr_feat, dtype=np.float64)
    views = np.asarray(enhanced_views, dtype=np.float64)
    if instr.shape != (predictor.dim,) or views.shape[1:] != (predictor.dim,):
        raise DimensionMismatch(f"{instr.shape} vs {views.shape}")
    return views @ (predictor.W_a @ instr) / predictor.temperature_a


def _log_softmax_at(logits: np.ndarray, index: int) -> float:
    shifted = logits - np.max(logits)
    return float(shifted[index] - np.log(np.sum(np.exp(shifted))))


def il_loss(logits, teacher_index: int) -> float:
    """Cross entropy of the action softmax at the teacher action."""
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= teacher_index < logits.shape[0]:
        raise IndexOutOfRange(f"{teacher_index} outside 0..{logits.shape[0] - 1}")
    return -_log_softmax_at(logits, teacher_index)


@dataclass
class TrainConfig:
    lr_scoring: float = 0.1
    lr_agent: float = 0.01
    lam1: float = 0.1          # consistency loss weight
    lam2: float = 0.1          # contrastive loss weight
    lam_rl: float = 0.0        # external advantage-weighted term, off by default
    tau: float = 0.5
    temp_a: float = 1.0
    n_co: int = 5
    epochs: int = 12
    batch_size: int = 1
    seed: int = 0
    max_steps: int = 15
    dropout_rate: float = 0.1
    warm_start_epochs: int = 0  # predictor-only epochs before scoring trains
    scores_mode: str = "learned"  # learned | zero | uniform


def total_loss(il: float, cs: float, ct: float, rl: float | None,
               cfg: TrainConfig) -> float:
    """il + lam_rl*rl + lam1*cs + lam2*ct; rl only when supplied."""
    value = il + cfg.lam1 * cs + cfg.lam2 * ct
    if rl is not None:
        value += cfg.lam_rl * rl
    return value


@dataclass
class StepRecord:
    t: int
    node: int
    z_before: int
    z_selected: int
    p_stay: float
    selected_landmark: str
    forced: bool
    s_la: float
    s_co: list
    logits: list
    chosen: int
    teacher: int

    def to_dict(self) -> dict:
        return {
            "t": self.t, "node": self.node, "z_before": self.z_before,
            "p_z": self.p_stay, "selected": self.z_selected,
            "selected_landmark": self.selected_landmark,
            "forced": self.forced, "s_la": self.s_la, "s_co": self.s_co,
            "logits": self.logits, "chosen": self.chosen, "teacher": self.teacher,
        }


@dataclass
class EpisodeTrace:
    instruction_id: str
    steps: list
    nodes: list               # node sequence including the start node
    terminal_node: int
    cap_exceeded: bool = False

    def chosen_actions(self) -> list:
        return [s.chosen for s in self.steps]

    def to_dict(self) -> dict:
        return {
            "instruction_id": self.instruction_id,
            "nodes": self.nodes,
            "terminal_node": self.terminal_node,
            "cap_exceeded": self.cap_exceeded,
            "steps": [s.to_dict() for s in self.steps],
        }


def _phrase_feature(store, phrase: str) -> np.ndarray:
    return text_feature(store, TextQuery(phrase, use_photo_prompt=True))


def _fixed_scores(mode: str, n_co: int) -> ScoreSet:
    value = 0.0 if mode == "zero" else 1.0
    return ScoreSet(value, np.full(n_co, value))


def rollout(world, episode, scoring_params: ScoringParams,
            predictor: ActionPredictor, cfg: TrainConfig, mode: str,
            rng=None, record_tapes: bool = False, pipeline_off: bool = False):
    """Run one episode; returns (EpisodeTrace, tapes).

    ``mode`` is "teacher_forced" (follow the episode's teacher actions) or
    "greedy" (argmax with lowest-index tie-breaking). ``pipeline_off``
    skips the landmark pipeline entirely and predicts from raw views.
    Hitting the step cap is recorded on the trace, not raised.
    """
    graph = world.graph
    store = world.store
    priors: LandmarkPriors | None = world.priors.get(episode.instruction_id)
    if priors is None and not pipeline_off:
        raise MissingPriors(episode.instruction_id)

    instr_feat = store.get(episode.instruction)
    if not pipeline_off:
        landmark_feats = [_phrase_feature(store, p) for p in priors.landmarks]
        co_feats = [
            np.stack([_phrase_feature(store, c) for c in co_list])
            if co_list else np.zeros((0, store.dimension))
            for co_list in priors.cooccurrences
        ]
        shift_state = initial_state(priors.n_landmarks)

    node = episode.start
    nodes = [node]
    steps = []
    tapes = []
    cap_exceeded = False
    teacher_actions = episode.teacher_actions

    for t in range(cfg.max_steps + 1):
        slots = graph.panorama(node)
        views = np.stack([store.get(episode.view_key(node, i))
                          for i in range(len(slots))])
        teacher = teacher_actions[t] if t < len(teacher_actions) else len(slots) - 1

        if pipeline_off:
            logits = action_logits(instr_feat, views, predictor)
            z_before, p_stay, forced, selected_phrase = 0, 0.0, False, ""
            sel = 0
            score_set = ScoreSet(0.0, np.zeros(0))
        else:
            obs_mean = mean_pool(list(views))
            z = shift_state.z
            pair = (landmark_feats[z - 1],
                    landmark_feats[z] if z < shift_state.n_landmarks
                    else landmark_feats[z - 1])
            result = shift_step(shift_state, obs_mean, pair, cfg.tau)
            z_before, p_stay, forced = z, result.p_stay, result.forced
            sel = result.selected
            selected_phrase = priors.landmarks[sel - 1]
            shift_state = result.state

            bundle = discovery_bundle(landmark_feats[sel - 1], co_feats[sel - 1],
                                      views, cfg.tau)
            if cfg.scores_mode == "learned":
                state, cache = state_forward(instr_feat, obs_mean, scoring_params,
                                             train_mode=record_tapes, rng=rng)
                score_set = scores(state, bundle.landmark_feature,
                                   bundle.cooccurrence_features)
            else:
                # frozen scores are constants: no state forward, no scoring grads
                cache = None
                score_set = _fixed_scores(cfg.scores_mode, bundle.n_cooccurrences)
            pred = corrected_distribution(bundle, score_set)
            corrected = corrected_landmark_features(bundle, score_set)
            enhanced = enhance(views, corrected)
            logits = action_logits(instr_feat, enhanced, predictor)

            if record_tapes:
                p_action = np.exp(logits - np.max(logits))
                p_action /= p_action.sum()
                tapes.append(StepTape(
                    state_cache=cache, bundle=bundle, score_set=score_set,
                    pred=pred, corrected=corrected, views=views,
                    instr=instr_feat, u_vec=predictor.W_a @ instr_feat,
                    p_action=p_action, teacher=teacher, tau=cfg.tau,
                    temp_a=predictor.temperature_a,
                    il=il_loss(logits, teacher),
                    cs=consistency_loss(pred, teacher),
                    ct=contrastive_loss(views, corrected, cfg.tau),
                ))

        chosen = teacher if mode == "teacher_forced" else int(np.argmax(logits))
        steps.append(StepRecord(
            t=t, node=node, z_before=z_before, z_selected=sel, p_stay=p_stay,
            selected_landmark=selected_phrase, forced=forced,
            s_la=score_set.s_la, s_co=[float(v) for v in score_set.s_co],
            logits=[float(v) for v in logits], chosen=chosen, teacher=teacher))

        target = slots[chosen]
        if target is None:  # stop view
            break
        node = target
        nodes.append(node)
        if len(steps) >= cfg.max_steps:
            cap_exceeded = True
            break

    trace = EpisodeTrace(episode.instruction_id, steps, nodes, node, cap_exceeded)
    return trace, tapes


def episode_losses(tapes) -> tuple[float, float, float]:
    il = sum(t.il for t in tapes)
    cs = sum(t.cs for t in tapes)
    ct = sum(t.ct for t in tapes)
    return il, cs, ct


def train(world, episodes, cfg: TrainConfig, eval_episodes=None,
          scoring_params: ScoringParams | None = None,
          predictor: ActionPredictor | None = None):
    """Teacher-forced SGD over episodes; returns (params, predictor, history).

    Per-epoch history rows carry the mean losses and the greedy success
    rate on ``eval_episodes`` (or the training set when none is given).
    Fully seeded: identical configs reproduce identical parameters.
    """
    if not episodes:
        raise EmptyDataset("no training episodes")
    rng = np.random.default_rng(cfg.seed)
    dim = world.store.dimension
    if scoring_params is None:
        scoring_params = ScoringParams.initial(dim, rng, cfg.dropout_rate)
    if predictor is None:
        predictor = ActionPredictor.initial(dim, cfg.temp_a)
    eval_set = eval_episodes if eval_episodes is not None else episodes
    history = []

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(episodes))
        warm = epoch < cfg.warm_start_epochs
        run_cfg = replace(cfg, scores_mode="zero") if warm else cfg
        sums = np.zeros(3)
        batch_tapes = []
        for count, idx in enumerate(order, start=1):
            episode = episodes[int(idx)]
            _, tapes = rollout(world, episode, scoring_params, predictor,
                               run_cfg, "teacher_forced", rng=rng,
                               record_tapes=True)
            sums += episode_losses(tapes)
            batch_tapes.extend(tapes)
            if count % cfg.batch_size == 0 or count == len(order):
                backward_and_step(
                    batch_tapes, scoring_params, predictor,
                    lam1=0.0 if warm else cfg.lam1,
                    lam2=0.0 if warm else cfg.lam2,
                    il_weight=1.0,
                    lr_scoring=0.0 if warm else cfg.lr_scoring,
                    lr_agent=cfg.lr_agent)
                batch_tapes = []
        eval_sr = greedy_success_rate(world, eval_set, scoring_params, predictor, cfg)
        history.append({
            "epoch": epoch,
            "mean_il": float(sums[0] / len(episodes)),
            "mean_cs": float(sums[1] / len(episodes)),
            "mean_ct": float(sums[2] / len(episodes)),
            "eval_sr": eval_sr,
        })
    return scoring_params, predictor, history


def greedy_success_rate(world, episodes, scoring_params, predictor,
                        cfg: TrainConfig) -> float:
    from .metrics import shortest_distance

    if not episodes:
        return 0.0
    hits = 0
    for episode in episodes:
        trace, _ = rollout(world, episode, scoring_params, predictor, cfg, "greedy")
        err = shortest_distance(world.graph, trace.terminal_node, episode.goal)
        if err <= episode.success_radius:
            hits += 1
    return hits / len(episodes)


def save_predictor(predictor: ActionPredictor, path) -> None:
    write_checkpoint(path, AGENT_MAGIC, predictor.dim, {
        "W_a": predictor.W_a,
        "temperature_a": np.array([predictor.temperature_a]),
    })


def load_predictor(path) -> ActionPredictor:
    _, sections = read_checkpoint(path, AGENT_MAGIC)
    return ActionPredictor(sections["W_a"], float(sections["temperature_a"][0]))
