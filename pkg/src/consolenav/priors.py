"""Landmark and cooccurrence prior generation.

Builds the prompts sent to a language model, parses numbered-list
responses into ordered landmark/cooccurrence phrase lists, caches raw
transcripts so extraction is reproducible offline, and provides a
vocabulary fallback for landmarks the model was never asked about.

The client is a contract, not an implementation: anything with a
``complete(prompt) -> str`` method works. Tests and the CLI default to a
replay client that serves recorded transcripts.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field

from .errors import (
    ClientError,
    EmptyInput,
    EmptyLandmarkList,
    EmptyVocabulary,
    NoItemsFound,
    ParseError,
)
from .store import EmbeddingStore, TextQuery, dot, text_feature

PLACEHOLDER = "{input}"

# Words the prompts forbid but models still emit occasionally; dropped
# after parsing.
ABSTRACT_STOPLIST = frozenset({"left", "right", "straight", "wind", "support"})

_FINE_GRAINED_EXAMPLES = [
    (
        "Exit the room. Turn left and go down the hallway. Continue down the "
        "hallway until you get to the stairs. Turn left and go up the first step.",
        ["room", "hallway", "hallway", "stairs", "step"],
    ),
    (
        "Walk into the hallway and through the entrance to the kitchen area. "
        "Walk Passed the sink and stove area and stop between the refrigerator "
        "and dining table.",
        ["hallway", "entrance", "kitchen area", "sink", "stove area",
         "refrigerator", "dining table"],
    ),
    (
        "Walk past the TV and continue toward the bathroom. Stop before "
        "walking through the bathroom door.",
        ["TV", "bathroom", "bathroom door"],
    ),
    (
        "Walk between the columns and make a sharp turn right. Walk down the "
        "steps and stop on the landing.",
        ["columns", "steps", "landing"],
    ),
    (
        "With the windows on your left, walk through the large room past the "
        "sitting areas. Go through the door left of the tapestry and enter a "
        "wood-paneled room with a circular table in the middle. Go up the "
        "stairs and stop on the sixth step from the bottom.",
        ["windows", "large room", "sitting areas", "door", "tapestry",
         "wood-paneled room", "circular table", "stairs", "step"],
    ),
]

_HIGH_LEVEL_EXAMPLES = [
    (
        "Go to the lounge on the first level and bring the trinket with the "
        "clock that's sitting on the fireplace.",
        ["first level", "lounge", "fireplace", "clock", "trinket"],
    ),
    (
        "Go to the staircase by entryway and touch the front of the banister "
        "of the staircase.",
        ["entryway", "staircase", "staircase", "banister"],
    ),
    (
        "Go to the bedroom with the fireplace and bring me the lowest hanging "
        "small picture on the right wall across from the bedside table with "
        "the lamp on it.",
        ["bedroom", "fireplace", "bedside table", "lamp", "wall", "small picture"],
    ),
    (
        "Go to the bedroom on level 2 to the right of the green bathroom and "
        "remove the white pillow closest to the bedroom door from the bed.",
        ["level 2", "green bathroom", "bedroom", "bedroom door", "bed",
         "white pillow"],
    ),
    (
        "Go to the first level bedroom adjacent to the hallway leading to the "
        "lounge and dust the sofa chair and place 2 more pillows on it.",
        ["first level", "hallway", "lounge", "bedroom", "sofa chair", "pillows"],
    ),
]

_COOCCURRENCE_EXAMPLES = [
    ("bedroom", ["bed", "door", "window", "mirror", "closet", "rug",
                 "curtains", "walls", "ceiling", "floor"]),
    ("sink", ["water", "faucet", "basin", "counter", "tile", "porcelain",
              "chrome", "soap", "towel", "mirror"]),
]

_LANDMARK_PREAMBLE = (
    "Given an instruction, you need to extract the landmarks in the "
    "instruction and sort them in the order in which they appear in the real "
    "navigation (not in the order they appear in the instruction). Landmarks "
    "must be the actual objects and scenes you see in the navigation, and do "
    'not include other abstract nouns such as "left" and "right".\n'
    "Requirement 1: Extract all landmarks in the instruction.\n"
    "Requirement 2: do not generate landmarks that are not in the instruction.\n"
    "Below you will find several examples of landmark extraction and the "
    "instruction you need to complete the extraction, output by format:\n"
)

_COOCCURRENCE_PREAMBLE = (
    "Given a target landmark in navigation, you need to give 10 possible "
    "co-occurrences of this landmark based on real-world common sense.\n"
    "Requirement: These co-occurrences need to be objects or scenes in an "
    "indoor or outdoor environment that can be observed by the robot.\n"
    "Below you will find several examples of co-occurrences extraction and "
    "the target landmark, output by format:\n"
)


def _render_items(items) -> str:
    lines = [f"{i}. {item};" for i, item in enumerate(items, start=1)]
    lines[-1] = lines[-1][:-1] + "."
    return "\n".join(lines)


def _landmark_body(examples) -> str:
    parts = [_LANDMARK_PREAMBLE]
    for instruction, landmarks in examples:
        parts.append(f"Instruction: {instruction}\nLandmarks:\n"
                     f"{_render_items(landmarks)}\n")
    parts.append(f"Instruction: {PLACEHOLDER}\nLandmarks:")
    return "".join(parts)


def _cooccurrence_body(examples, k) -> str:
    parts = [_COOCCURRENCE_PREAMBLE]
    for landmark, items in examples:
        parts.append(f"Tell me {k} co-occurrences of {landmark}:\n"
                     f"{_render_items(items)}\n")
    parts.append(f"Tell me {k} co-occurrences of {PLACEHOLDER}:")
    return "".join(parts)


@dataclass(frozen=True)
class PromptTemplate:
    """A prompt body with exactly one ``{input}`` placeholder."""

    style: str  # "fine_grained" | "high_level"
    kind: str   # "landmark_extraction" | "cooccurrence_generation"
    body: str
    k: int | None = None  # requested cooccurrence count, cooccurrence kind only

    def __post_init__(self):
        if self.body.count(PLACEHOLDER) != 1:
            raise ValueError("template body must contain exactly one placeholder")


FINE_GRAINED_LANDMARK_TEMPLATE = PromptTemplate(
    "fine_grained", "landmark_extraction", _landmark_body(_FINE_GRAINED_EXAMPLES))
HIGH_LEVEL_LANDMARK_TEMPLATE = PromptTemplate(
    "high_level", "landmark_extraction", _landmark_body(_HIGH_LEVEL_EXAMPLES))
COOCCURRENCE_TEMPLATE = PromptTemplate(
    "fine_grained", "cooccurrence_generation",
    _cooccurrence_body(_COOCCURRENCE_EXAMPLES, 10), k=10)

LANDMARK_TEMPLATES = {
    "fine_grained": FINE_GRAINED_LANDMARK_TEMPLATE,
    "high_level": HIGH_LEVEL_LANDMARK_TEMPLATE,
}


def build_prompt(template: PromptTemplate, input_text: str) -> str:
    """Substitute the placeholder; everything else stays byte-identical."""
    if not input_text.strip():
        raise EmptyInput("prompt input is empty")
    return template.body.replace(PLACEHOLDER, input_text)


_ITEM_RE = re.compile(r"^\s*\d+\s*(?:[.)]|-)\s*(.+?)\s*$")


def parse_numbered_list(text: str) -> list[str]:
    """Extract phrases from numbered lines, in listed order.

    Accepts "1.", "2)", and "3 -" style prefixes; strips trailing ";" and
    "."; lowercase-folds. Lines without an index prefix are ignored.
    """
    items = []
    for line in text.splitlines():
        match = _ITEM_RE.match(line)
        if not match:
            continue
        phrase = match.group(1).rstrip(";. \t").lower()
        if phrase:
            items.append(phrase)
    if not items:
        raise NoItemsFound(f"no numbered items in {text[:80]!r}")
    return items


@dataclass
class LandmarkPriors:
    """Ordered landmarks with per-landmark cooccurrence lists.

    Landmark lists keep duplicates (an instruction may revisit a scene);
    cooccurrence lists are deduplicated keeping first occurrence.
    ``provenance`` carries one tag per cooccurrence entry, each of
    {"llm", "vocabulary_fallback", "synthetic"}.
    """

    landmarks: list[str]
    cooccurrences: list[list[str]]
    provenance: list[list[str]]
    usable: bool = True

    @property
    def n_landmarks(self) -> int:
        return len(self.landmarks)


@dataclass
class FallbackVocabulary:
    """Landmark phrase -> cooccurrence list, built from a priors file."""

    entries: dict[str, list[str]]

    @classmethod
    def from_records(cls, records, n_co=None):
        entries: dict[str, list[str]] = {}
        for record in records:
            for landmark, cooc in zip(record["landmarks"], record["cooccurrences"]):
                if landmark not in entries and (n_co is None or len(cooc) >= n_co):
                    entries[landmark] = list(cooc)
        return cls(entries)


class PriorCache:
    """Append-only transcript cache keyed by (template hash, input).

    Entries are persisted as JSON lines and fsync'd on write so a warm
    cache survives restarts and makes extraction hermetic.
    """

    def __init__(self, path=None):
        self.path = path
        self._entries: dict[tuple[str, str], dict] = {}
        if path is not None and os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    self._entries[(rec["template_hash"], rec["input"])] = rec

    @staticmethod
    def template_hash(template: PromptTemplate) -> str:
        return hashlib.sha256(template.body.encode("utf-8")).hexdigest()[:16]

    def get(self, template: PromptTemplate, input_text: str):
        return self._entries.get((self.template_hash(template), input_text))

    def put(self, template: PromptTemplate, input_text: str, response: str, parsed):
        rec = {
            "template_hash": self.template_hash(template),
            "input": input_text,
            "response": response,
            "parsed": list(parsed),
            "timestamp": time.time(),
        }
        self._entries[(rec["template_hash"], rec["input"])] = rec
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        return rec


class ReplayClient:
    """Serves recorded prompt -> response transcripts; no network."""

    def __init__(self, transcripts=None, path=None):
        self._responses: dict[str, str] = dict(transcripts or {})
        if path is not None:
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    self._responses[rec["prompt"]] = rec["response"]

    def complete(self, prompt: str) -> str:
        try:
            return self._responses[prompt]
        except KeyError:
            raise ClientError("no recorded response for prompt") from None


class LiveClient:
    """Minimal OpenAI-compatible chat client; reads CONSOLE_LLM_API_KEY.

    Only used with an explicit ``--llm live``; nothing in the test suite
    touches the network.
    """

    def __init__(self, model="gpt-3.5-turbo", base_url="https://api.openai.com/v1",
                 timeout=30.0, min_interval=0.0):
        api_key = os.environ.get("CONSOLE_LLM_API_KEY")
        if not api_key:
            raise ClientError("CONSOLE_LLM_API_KEY is not set")
        self.api_key = api_key
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.min_interval = min_interval
        self._last_call = 0.0

    def complete(self, prompt: str) -> str:
        import requests

        wait = self.min_interval - (time.time() - self._last_call)
        if wait > 0:
            time.sleep(wait)
        try:
            resp = requests.post(
                f"{self.base_url}/chat/completions",
                headers={"Authorization": f"Bearer {self.api_key}"},
                json={
                    "model": self.model,
                    "messages": [{"role": "user", "content": prompt}],
                    "temperature": 0.0,
                },
                timeout=self.timeout,
            )
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]
        except Exception as exc:  # noqa: BLE001 - wrapped into the contract error
            raise ClientError(str(exc)) from exc
        finally:
            self._last_call = time.time()


def call_with_retries(client, prompt, retries=3, backoff=0.5):
    """Bounded retries with exponential backoff around the client contract."""
    last = None
    for attempt in range(retries + 1):
        try:
            return client.complete(prompt)
        except ClientError as exc:
            last = exc
            if attempt < retries:
                time.sleep(backoff * (2 ** attempt))
    raise ClientError(f"client failed after {retries + 1} attempts: {last}")


def _cached_call(template, input_text, client, cache, retries, backoff):
    if cache is not None:
        hit = cache.get(template, input_text)
        if hit is not None:
            return list(hit["parsed"])
    prompt = build_prompt(template, input_text)
    response = call_with_retries(client, prompt, retries=retries, backoff=backoff)
    try:
        parsed = parse_numbered_list(response)
    except NoItemsFound as exc:
        raise ParseError(f"unparseable response for {input_text!r}: {exc}") from exc
    if cache is not None:
        cache.put(template, input_text, response, parsed)
    return parsed


def _filter_stoplist(phrases):
    return [p for p in phrases if p not in ABSTRACT_STOPLIST]


def _dedup_keep_first(phrases):
    seen = set()
    out = []
    for p in phrases:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def extract_priors(instruction, style, client, cache=None, n_co=5,
                   fallback_vocab=None, store=None, retries=3, backoff=0.5,
                   cooccurrence_template=COOCCURRENCE_TEMPLATE) -> LandmarkPriors:
    """One landmark-extraction call, then one cooccurrence call per landmark.

    Cooccurrence lists are deduplicated, stoplist-filtered, and truncated
    to ``n_co``. Short lists are padded from the fallback vocabulary when
    one is supplied; otherwise the priors are flagged unusable.
    """
    template = LANDMARK_TEMPLATES[style]
    landmarks = _filter_stoplist(
        _cached_call(template, instruction, client, cache, retries, backoff))
    if not landmarks:
        raise EmptyLandmarkList(f"no landmarks for {instruction!r}")

    cooccurrences = []
    provenance = []
    usable = True
    for landmark in landmarks:
        items = _cached_call(cooccurrence_template, landmark, client, cache,
                             retries, backoff)
        items = _dedup_keep_first(_filter_stoplist(items))[:n_co]
        tags = ["llm"] * len(items)
        if len(items) < n_co and fallback_vocab is not None:
            pads = [p for p in vocabulary_fallback(landmark, fallback_vocab,
                                                   store, n_co)
                    if p not in items]
            for pad in pads[: n_co - len(items)]:
                items.append(pad)
                tags.append("vocabulary_fallback")
        if len(items) != n_co:
            usable = False
        cooccurrences.append(items)
        provenance.append(tags)
    return LandmarkPriors(landmarks, cooccurrences, provenance, usable=usable)


def vocabulary_fallback(landmark, vocab: FallbackVocabulary,
                        store: EmbeddingStore | None, n_co: int) -> list[str]:
    """Cooccurrences of the vocabulary key most similar to ``landmark``.

    An exact key short-circuits without touching embeddings; otherwise the
    key maximizing the text-feature dot product wins (ties: first key in
    sorted order).
    """
    if not vocab.entries:
        raise EmptyVocabulary("fallback vocabulary is empty")
    key = landmark.strip().lower()
    if key in vocab.entries:
        return list(vocab.entries[key][:n_co])
    if store is None:
        raise EmptyVocabulary(f"no store for similarity fallback of {landmark!r}")
    probe = text_feature(store, TextQuery(landmark))
    best_key = None
    best_sim = None
    for cand in sorted(vocab.entries):
        sim = dot(probe, text_feature(store, TextQuery(cand)))
        if best_sim is None or sim > best_sim:
            best_key, best_sim = cand, sim
    return list(vocab.entries[best_key][:n_co])


# --- priors file I/O ----------------------------------------------------------

def write_priors_file(path, records) -> None:
    """Line-delimited records: {instruction_id, landmarks, cooccurrences, provenance}."""
    with open(path, "w", encoding="utf-8") as fh:
        for instruction_id, priors in records:
            fh.write(json.dumps({
                "instruction_id": instruction_id,
                "landmarks": priors.landmarks,
                "cooccurrences": priors.cooccurrences,
                "provenance": priors.provenance,
            }, sort_keys=True) + "\n")


def read_priors_file(path) -> dict[str, LandmarkPriors]:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            n_co = max((len(c) for c in rec["cooccurrences"]), default=0)
            usable = all(len(c) == n_co for c in rec["cooccurrences"])
            out[rec["instruction_id"]] = LandmarkPriors(
                rec["landmarks"], rec["cooccurrences"], rec["provenance"],
                usable=usable)
    return out
