"""Synthetic navigation worlds with controllable landmark signal planting.

The graph is a circulant ring (every node has the same branching factor,
so every panorama has the same number of views). Each episode plants its
landmark's text feature into the teacher view at every step, plants the
landmark's reliable cooccurrences alongside it, and plants the distractor
share of cooccurrences into wrong views. The scoring module's job is to
learn which cooccurrences to trust in which state; the distractor rate
and noise level control how much that matters.

A world bundle is three files: the graph and episodes as JSON, the
embedding store in its binary format, and the priors file. A replay
transcript file is emitted alongside so the prompt pipeline can re-derive
the planted priors offline.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InfeasibleConfig
from .metrics import shortest_path
from .priors import (
    COOCCURRENCE_TEMPLATE,
    FINE_GRAINED_LANDMARK_TEMPLATE,
    LandmarkPriors,
    build_prompt,
    read_priors_file,
    write_priors_file,
)
from .store import PHOTO_PROMPT, EmbeddingStore, load_store, save_store

LANDMARK_WORDS = [
    "archway", "bookshelf", "fireplace", "staircase", "piano",
    "sofa", "kitchen island", "fountain", "doorway", "balcony",
]
COOCCURRENCE_WORDS = [
    "rug", "lamp", "mirror", "plant", "painting", "window", "clock", "vase",
]


class NavGraph:
    """Undirected weighted graph with one panorama view per neighbor plus stop."""

    def __init__(self, nodes, edges):
        self.nodes = list(nodes)
        self._adj: dict[int, dict[int, float]] = {n: {} for n in self.nodes}
        for u, v, w in edges:
            if w <= 0:
                raise ValueError(f"edge ({u},{v}) has non-positive weight {w}")
            self._adj[u][v] = float(w)
            self._adj[v][u] = float(w)

    def neighbors(self, node):
        """Sorted (neighbor, weight) pairs."""
        return sorted(self._adj[node].items())

    def edge_weight(self, u, v) -> float:
        return self._adj[u][v]

    def panorama(self, node):
        """View targets in slot order: sorted neighbors, then the stop view."""
        return [nbr for nbr, _ in self.neighbors(node)] + [None]

    def teacher_slot(self, node, target) -> int:
        """Panorama slot moving to ``target``; the stop slot when target is None."""
        slots = self.panorama(node)
        return slots.index(target)

    def edges(self):
        seen = []
        for u in self.nodes:
            for v, w in sorted(self._adj[u].items()):
                if u < v:
                    seen.append((u, v, w))
        return seen


@dataclass
class Episode:
    instruction_id: str
    instruction: str
    start: int
    goal: int
    path: list           # teacher node sequence, start..goal
    teacher_actions: list  # panorama slots, one per step incl. final stop
    split: str = "train"
    success_radius: float = 3.0

    def view_key(self, node, slot) -> str:
        return f"view/{self.instruction_id}/{node}/{slot}"


@dataclass
class SynthConfig:
    n_nodes: int = 36
    branching: int = 4          # neighbors per node; must be even
    path_hops: tuple = (3, 5)   # inclusive range of teacher path edge counts
    dim: int = 32
    mu_sig: float = 3.0         # landmark planting strength on the teacher view
    kappa: float = 1.5          # reliable-cooccurrence planting strength
    kappa_distractor: float | None = None  # distractor strength; kappa when None
    base_scale: float = 0.05    # scale of the random base content per view
    noise: float = 0.0          # gaussian noise added to every view
    distractor_rate: float = 0.0  # fraction of cooccurrences planted wrongly
    n_co: int = 5
    n_train: int = 30
    n_eval: int = 10
    seed: int = 0
    edge_base: float = 2.0
    edge_jitter: float = 0.25
    success_radius: float = 3.0


@dataclass
class WorldBundle:
    graph: NavGraph
    episodes: list
    store: EmbeddingStore
    priors: dict            # instruction_id -> LandmarkPriors
    config: dict = field(default_factory=dict)

    def split(self, name: str):
        return [e for e in self.episodes if e.split == name]


def _circulant_graph(cfg: SynthConfig, rng) -> NavGraph:
    if cfg.branching % 2 != 0 or cfg.branching < 2:
        raise InfeasibleConfig(f"branching must be a positive even number, "
                               f"got {cfg.branching}")
    if cfg.n_nodes <= cfg.branching:
        raise InfeasibleConfig(f"{cfg.n_nodes} nodes cannot all have "
                               f"{cfg.branching} distinct neighbors")
    nodes = list(range(cfg.n_nodes))
    edges = []
    for k in range(1, cfg.branching // 2 + 1):
        for i in nodes:
            j = (i + k) % cfg.n_nodes
            w = cfg.edge_base + cfg.edge_jitter * float(rng.uniform(-1.0, 1.0))
            edges.append((i, j, w))
    return NavGraph(nodes, edges)


def _orthonormal_features(dim, count, rng):
    if count <= dim:
        q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        return [q[:, i].copy() for i in range(count)]
    feats = rng.normal(size=(count, dim))
    return [f / np.linalg.norm(f) for f in feats]


def _instruction_text(words) -> str:
    return " ".join(f"walk to the {w}, then" for w in words) + " stop."


def generate_world(cfg: SynthConfig) -> WorldBundle:
    """Seeded generation of graph, episodes, embeddings, and priors."""
    rng = np.random.default_rng(cfg.seed)
    graph = _circulant_graph(cfg, rng)

    # eligible start/goal pairs whose shortest path has the requested hops
    lo, hi = cfg.path_hops
    eligible = []
    for a in graph.nodes:
        for b in graph.nodes:
            if a == b:
                continue
            hops = len(shortest_path(graph, a, b)) - 1
            if lo <= hops <= hi:
                eligible.append((a, b))
    if not eligible:
        raise InfeasibleConfig(
            f"no node pair admits a shortest path of {lo}..{hi} hops")
    if hi > len(LANDMARK_WORDS):
        raise InfeasibleConfig(
            f"paths of {hi} hops need {hi} distinct landmark words, "
            f"vocabulary has {len(LANDMARK_WORDS)}")

    # world-level phrase features: orthonormal when the dimension allows
    words = LANDMARK_WORDS + COOCCURRENCE_WORDS
    feats = _orthonormal_features(cfg.dim, len(words), rng)
    phrase_feat = dict(zip(words, feats))

    # per landmark word: a fixed cooccurrence list and its distractor slots
    n_dis = math.ceil(cfg.distractor_rate * cfg.n_co) if cfg.n_co else 0
    co_lists: dict[str, list[str]] = {}
    distractor_slots: dict[str, set] = {}
    for word in LANDMARK_WORDS:
        picks = rng.choice(len(COOCCURRENCE_WORDS), size=cfg.n_co, replace=False)
        co_lists[word] = [COOCCURRENCE_WORDS[i] for i in picks]
        slots = rng.choice(cfg.n_co, size=n_dis, replace=False) if n_dis else []
        distractor_slots[word] = set(int(s) for s in slots)

    entries: dict[str, np.ndarray] = {}
    for word in words:
        entries[word] = phrase_feat[word]
        entries[PHOTO_PROMPT + word] = phrase_feat[word]

    episodes = []
    priors: dict[str, LandmarkPriors] = {}
    n_total = cfg.n_train + cfg.n_eval
    for index in range(n_total):
        start, goal = eligible[int(rng.integers(len(eligible)))]
        path = shortest_path(graph, start, goal)
        hops = len(path) - 1
        word_ids = rng.choice(len(LANDMARK_WORDS), size=hops, replace=False)
        landmarks = [LANDMARK_WORDS[i] for i in word_ids]

        instruction_id = f"ep{index:04d}"
        instruction = _instruction_text(landmarks)
        teacher_actions = [graph.teacher_slot(path[t], path[t + 1])
                           for t in range(hops)]
        teacher_actions.append(graph.teacher_slot(path[-1], None))
        episode = Episode(
            instruction_id=instruction_id,
            instruction=instruction,
            start=start, goal=goal, path=list(path),
            teacher_actions=teacher_actions,
            split="train" if index < cfg.n_train else "eval",
            success_radius=cfg.success_radius,
        )
        episodes.append(episode)
        priors[instruction_id] = LandmarkPriors(
            landmarks=list(landmarks),
            cooccurrences=[list(co_lists[w]) for w in landmarks],
            provenance=[["synthetic"] * cfg.n_co for _ in landmarks],
        )

        # instruction feature: normalized sum of its landmark features
        instr_feat = np.sum([phrase_feat[w] for w in landmarks], axis=0)
        instr_feat = instr_feat / np.linalg.norm(instr_feat)
        entries.setdefault(instruction, instr_feat)

        # per-episode view embeddings across the whole graph
        plant_step = {node: t for t, node in enumerate(path)}
        for node in graph.nodes:
            slots = graph.panorama(node)
            vecs = cfg.base_scale * rng.normal(size=(len(slots), cfg.dim))
            if cfg.noise > 0.0:
                vecs += cfg.noise * rng.normal(size=(len(slots), cfg.dim))
            t = plant_step.get(node)
            if t is not None:
                if t < hops:
                    word = landmarks[t]
                    teacher = graph.teacher_slot(node, path[t + 1])
                else:
                    word = landmarks[-1]
                    teacher = graph.teacher_slot(node, None)
                vecs[teacher] += cfg.mu_sig * phrase_feat[word]
                # all of this step's distractors land on one wrong view
                kappa_dis = (cfg.kappa if cfg.kappa_distractor is None
                             else cfg.kappa_distractor)
                wrong = int(rng.integers(len(slots) - 1))
                if wrong >= teacher:
                    wrong += 1
                for i, co_word in enumerate(co_lists[word]):
                    if i in distractor_slots[word]:
                        vecs[wrong] += kappa_dis * phrase_feat[co_word]
                    else:
                        vecs[teacher] += cfg.kappa * phrase_feat[co_word]
            for slot in range(len(slots)):
                entries[episode.view_key(node, slot)] = vecs[slot]

    store = EmbeddingStore(cfg.dim, entries, source="synthetic")
    return WorldBundle(graph, episodes, store, priors,
                       config={**asdict(cfg), "path_hops": list(cfg.path_hops)})


# --- bundle I/O ----------------------------------------------------------------

WORLD_FILE = "world.json"
STORE_FILE = "store.bin"
PRIORS_FILE = "priors.jsonl"
TRANSCRIPTS_FILE = "transcripts.jsonl"


def _render_numbered(items) -> str:
    return "\n".join(f"{i}. {item};" for i, item in enumerate(items, start=1))


def replay_transcripts(bundle: WorldBundle) -> dict:
    """Prompt -> response pairs that re-derive the planted priors offline."""
    transcripts = {}
    for episode in bundle.episodes:
        pri = bundle.priors[episode.instruction_id]
        prompt = build_prompt(FINE_GRAINED_LANDMARK_TEMPLATE, episode.instruction)
        transcripts[prompt] = _render_numbered(pri.landmarks)
        for word, co_list in zip(pri.landmarks, pri.cooccurrences):
            prompt = build_prompt(COOCCURRENCE_TEMPLATE, word)
            transcripts.setdefault(prompt, _render_numbered(co_list))
    return transcripts


def save_world(bundle: WorldBundle, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    doc = {
        "config": bundle.config,
        "graph": {
            "nodes": bundle.graph.nodes,
            "edges": [[u, v, w] for u, v, w in bundle.graph.edges()],
        },
        "episodes": [{
            "instruction_id": e.instruction_id,
            "instruction": e.instruction,
            "start": e.start, "goal": e.goal, "path": e.path,
            "teacher_actions": e.teacher_actions,
            "split": e.split, "success_radius": e.success_radius,
        } for e in bundle.episodes],
    }
    with open(os.path.join(out_dir, WORLD_FILE), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
    save_store(bundle.store, os.path.join(out_dir, STORE_FILE))
    write_priors_file(os.path.join(out_dir, PRIORS_FILE),
                      [(e.instruction_id, bundle.priors[e.instruction_id])
                       for e in bundle.episodes])
    with open(os.path.join(out_dir, TRANSCRIPTS_FILE), "w", encoding="utf-8") as fh:
        for prompt, response in replay_transcripts(bundle).items():
            fh.write(json.dumps({"prompt": prompt, "response": response},
                                sort_keys=True) + "\n")


def load_world(world_dir) -> WorldBundle:
    with open(os.path.join(world_dir, WORLD_FILE), "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    graph = NavGraph(doc["graph"]["nodes"],
                     [tuple(e) for e in doc["graph"]["edges"]])
    episodes = [Episode(
        instruction_id=e["instruction_id"], instruction=e["instruction"],
        start=e["start"], goal=e["goal"], path=e["path"],
        teacher_actions=e["teacher_actions"], split=e["split"],
        success_radius=e["success_radius"],
    ) for e in doc["episodes"]]
    store = load_store(os.path.join(world_dir, STORE_FILE))
    priors = read_priors_file(os.path.join(world_dir, PRIORS_FILE))
    return WorldBundle(graph, episodes, store, priors, config=doc.get("config", {}))
