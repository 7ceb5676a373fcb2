import numpy as np
import pytest

from consolenav.errors import (
    ClientError,
    EmptyInput,
    EmptyVocabulary,
    NoItemsFound,
    ParseError,
)
from consolenav.priors import (
    COOCCURRENCE_TEMPLATE,
    FINE_GRAINED_LANDMARK_TEMPLATE,
    HIGH_LEVEL_LANDMARK_TEMPLATE,
    FallbackVocabulary,
    LandmarkPriors,
    PriorCache,
    PromptTemplate,
    ReplayClient,
    build_prompt,
    extract_priors,
    parse_numbered_list,
    read_priors_file,
    vocabulary_fallback,
    write_priors_file,
)
from consolenav.store import EmbeddingStore

REVERIE_INSTRUCTION = ("Go to the lounge on the first level and bring the "
                       "trinket that's sitting on the fireplace.")


class TestBuildPrompt:
    def test_fine_grained_ending(self):
        prompt = build_prompt(FINE_GRAINED_LANDMARK_TEMPLATE, "Walk past the TV.")
        assert prompt.endswith("Instruction: Walk past the TV.\nLandmarks:")

    def test_fine_grained_preamble_and_examples(self):
        prompt = build_prompt(FINE_GRAINED_LANDMARK_TEMPLATE, "x")
        assert prompt.startswith(
            "Given an instruction, you need to extract the landmarks")
        assert 'such as "left" and "right"' in prompt
        assert "Requirement 1: Extract all landmarks in the instruction." in prompt
        assert "1. room;\n2. hallway;\n3. hallway;\n4. stairs;\n5. step." in prompt
        assert "6. wood-paneled room;\n7. circular table;\n8. stairs;\n9. step." in prompt

    def test_high_level_examples(self):
        prompt = build_prompt(HIGH_LEVEL_LANDMARK_TEMPLATE, "x")
        assert "1. first level;\n2. lounge;\n3. fireplace;\n4. clock;\n5. trinket." in prompt
        assert "5. bed;\n6. white pillow." in prompt

    def test_cooccurrence_ending(self):
        prompt = build_prompt(COOCCURRENCE_TEMPLATE, "sink")
        assert prompt.endswith("Tell me 10 co-occurrences of sink:")
        assert COOCCURRENCE_TEMPLATE.k == 10

    def test_cooccurrence_examples(self):
        prompt = build_prompt(COOCCURRENCE_TEMPLATE, "sofa")
        assert "Tell me 10 co-occurrences of bedroom:" in prompt
        assert "9. ceiling;\n10. floor." in prompt
        assert "9. towel;\n10. mirror." in prompt

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            build_prompt(COOCCURRENCE_TEMPLATE, "   ")

    def test_deterministic_and_injective(self):
        a1 = build_prompt(COOCCURRENCE_TEMPLATE, "sofa")
        a2 = build_prompt(COOCCURRENCE_TEMPLATE, "sofa")
        b = build_prompt(COOCCURRENCE_TEMPLATE, "stove")
        assert a1 == a2
        assert a1 != b

    def test_placeholder_count_enforced(self):
        with pytest.raises(ValueError):
            PromptTemplate("fine_grained", "landmark_extraction", "no slot here")


class TestParseNumberedList:
    def test_golden_landmark_transcript(self):
        text = "1.first level;\n2.lounge;\n3.fireplace;\n4.trinket."
        assert parse_numbered_list(text) == [
            "first level", "lounge", "fireplace", "trinket"]

    def test_golden_cooccurrence_transcript(self):
        text = "1. bed;\n2. mirror;\n3. nightstand;"
        assert parse_numbered_list(text) == ["bed", "mirror", "nightstand"]

    def test_no_items(self):
        with pytest.raises(NoItemsFound):
            parse_numbered_list("Sure! Here are the landmarks:")

    def test_prefix_variants(self):
        text = "1. sofa;\n2) table\n3 - mirror."
        assert parse_numbered_list(text) == ["sofa", "table", "mirror"]

    def test_chatter_lines_ignored(self):
        text = "Sure, here you go:\n1. sofa;\nHope that helps!\n2. rug."
        assert parse_numbered_list(text) == ["sofa", "rug"]

    def test_lowercase_folding(self):
        assert parse_numbered_list("1. TV;") == ["tv"]

    def test_round_trip_of_rendered_lists(self):
        rng = np.random.default_rng(2)
        words = ["sofa", "kitchen area", "bedside table", "tv", "level 2",
                 "wood-paneled room", "rug", "stove"]
        for _ in range(25):
            n = int(rng.integers(1, 7))
            xs = [words[i] for i in rng.integers(0, len(words), size=n)]
            rendered = "\n".join(f"{i}.{x};" for i, x in enumerate(xs, start=1))
            assert parse_numbered_list(rendered) == xs


def _transcripts(n_co=3, per_landmark=None):
    """Replay transcripts for the REVERIE example instruction."""
    landmarks = ["first level", "lounge", "fireplace", "trinket"]
    t = {
        build_prompt(HIGH_LEVEL_LANDMARK_TEMPLATE, REVERIE_INSTRUCTION):
            "1.first level;\n2.lounge;\n3.fireplace;\n4.trinket.",
    }
    for lm in landmarks:
        items = (per_landmark or {}).get(
            lm, [f"{lm} item {i}" for i in range(1, n_co + 1)])
        t[build_prompt(COOCCURRENCE_TEMPLATE, lm)] = "\n".join(
            f"{i}. {x};" for i, x in enumerate(items, start=1))
    return t


class TestExtractPriors:
    def test_navigational_order_golden(self):
        client = ReplayClient(_transcripts())
        priors = extract_priors(REVERIE_INSTRUCTION, "high_level", client, n_co=3)
        assert priors.landmarks == ["first level", "lounge", "fireplace", "trinket"]
        assert priors.usable
        assert all(len(c) == 3 for c in priors.cooccurrences)
        assert all(tag == "llm" for tags in priors.provenance for tag in tags)

    def test_cache_hit_with_offline_client(self, tmp_path):
        cache = PriorCache(tmp_path / "cache.jsonl")
        client = ReplayClient(_transcripts())
        first = extract_priors(REVERIE_INSTRUCTION, "high_level", client,
                               cache=cache, n_co=3)
        # a cold client that fails every call; warm cache must cover everything
        offline = ReplayClient({})
        reloaded = PriorCache(tmp_path / "cache.jsonl")
        second = extract_priors(REVERIE_INSTRUCTION, "high_level", offline,
                                cache=reloaded, n_co=3, retries=0)
        assert first == second

    def test_truncation_to_n_co(self):
        per = {"lounge": [f"w{i}" for i in range(10)]}
        client = ReplayClient(_transcripts(n_co=10, per_landmark=per))
        priors = extract_priors(REVERIE_INSTRUCTION, "high_level", client, n_co=5)
        idx = priors.landmarks.index("lounge")
        assert priors.cooccurrences[idx] == ["w0", "w1", "w2", "w3", "w4"]

    def test_stoplist_and_dedup(self):
        per = {"lounge": ["sofa", "left", "sofa", "rug", "wind", "lamp"]}
        client = ReplayClient(_transcripts(n_co=6, per_landmark=per))
        priors = extract_priors(REVERIE_INSTRUCTION, "high_level", client, n_co=3)
        idx = priors.landmarks.index("lounge")
        assert priors.cooccurrences[idx] == ["sofa", "rug", "lamp"]

    def test_short_list_flags_unusable(self):
        per = {"lounge": ["sofa", "rug"]}
        client = ReplayClient(_transcripts(n_co=2, per_landmark=per))
        priors = extract_priors(REVERIE_INSTRUCTION, "high_level", client, n_co=5)
        assert not priors.usable

    def test_short_list_padded_by_fallback(self):
        per = {"lounge": ["sofa", "rug"]}
        client = ReplayClient(_transcripts(n_co=5, per_landmark=per))
        vocab = FallbackVocabulary({"lounge": ["armchair", "lamp", "sofa",
                                               "coffee table", "rug", "tv"]})
        priors = extract_priors(REVERIE_INSTRUCTION, "high_level", client,
                                n_co=4, fallback_vocab=vocab)
        idx = priors.landmarks.index("lounge")
        assert priors.cooccurrences[idx] == ["sofa", "rug", "armchair", "lamp"]
        assert priors.provenance[idx] == [
            "llm", "llm", "vocabulary_fallback", "vocabulary_fallback"]
        assert priors.usable

    def test_unparseable_response(self):
        t = _transcripts()
        t[build_prompt(COOCCURRENCE_TEMPLATE, "lounge")] = "I cannot help."
        client = ReplayClient(t)
        with pytest.raises(ParseError):
            extract_priors(REVERIE_INSTRUCTION, "high_level", client,
                           n_co=3, retries=0)

    def test_client_failure_after_retries(self):
        client = ReplayClient({})
        with pytest.raises(ClientError):
            extract_priors("Walk.", "fine_grained", client, retries=1, backoff=0.0)


class TestVocabularyFallback:
    def test_exact_key_short_circuits(self):
        vocab = FallbackVocabulary({"bedroom": ["bed", "mirror", "nightstand"]})
        # no store required on the exact-match path
        assert vocabulary_fallback("bedroom", vocab, None, 2) == ["bed", "mirror"]

    def test_similarity_argmax(self):
        store = EmbeddingStore(3, {
            "sleeping room": [1.0, 0.1, 0.0],
            "bedroom": [0.9, 0.0, 0.1],
            "kitchen": [0.0, 1.0, 0.0],
        })
        vocab = FallbackVocabulary({
            "bedroom": ["bed", "mirror", "nightstand"],
            "kitchen": ["stove", "sink", "fridge"],
        })
        got = vocabulary_fallback("sleeping room", vocab, store, 3)
        # brute-force argmax oracle over every vocabulary key
        probe = store.get("sleeping room")
        sims = {k: float(probe @ store.get(k)) for k in vocab.entries}
        best = max(sorted(sims), key=lambda k: sims[k])
        assert best == "bedroom"
        assert got == vocab.entries[best]

    def test_empty_vocabulary(self):
        with pytest.raises(EmptyVocabulary):
            vocabulary_fallback("bedroom", FallbackVocabulary({}), None, 3)


class TestPriorsFile:
    def test_round_trip(self, tmp_path):
        priors = LandmarkPriors(
            ["lounge", "fireplace"],
            [["sofa", "rug"], ["poker", "log"]],
            [["llm", "llm"], ["llm", "vocabulary_fallback"]],
        )
        path = tmp_path / "priors.jsonl"
        write_priors_file(path, [("ep1", priors)])
        loaded = read_priors_file(path)
        assert loaded["ep1"].landmarks == priors.landmarks
        assert loaded["ep1"].cooccurrences == priors.cooccurrences
        assert loaded["ep1"].provenance == priors.provenance
        assert loaded["ep1"].usable
