"""Learning layer: TF-IDF against a brute-force oracle, mentions, quiz
scoring, the refinery formula, model training, and salience."""

import math
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogledger.encoding import MICRO, sha256, to_micro
from cogledger.errors import (
    EmptyWindow,
    MixedActors,
    NoSignal,
    UnknownQuestion,
    ValidationFailed,
)
from cogledger.learning import (
    STOPWORDS,
    STOPWORDS_SHA256,
    KnowledgeObjectPayload,
    PreferenceModel,
    QuizDefinition,
    QuizQuestion,
    RefineInput,
    RefineParams,
    codify,
    decode_model,
    decode_payload,
    default_quiz,
    encode_model,
    encode_payload,
    extract_mentions,
    extract_topics,
    load_quiz,
    predict_salience,
    refine,
    refinery_weight,
    score_quiz,
    train_preference_model,
)
from cogledger.records import ActivityKind, TokenClass, make_activity
from cogledger.store import ContentStore

from conftest import SHELL

ACTOR = sha256(b"learn-actor")


# --- TF-IDF oracle (independent, quadratic, character-walking tokenizer) ----

def oracle_tokens(doc):
    out, cur = [], ""
    for ch in doc.lower():
        if (ch.isalnum() and ch != "_"):
            cur += ch
        else:
            if len(cur) >= 2 and cur not in STOPWORDS:
                out.append(cur)
            cur = ""
    if len(cur) >= 2 and cur not in STOPWORDS:
        out.append(cur)
    return out


def oracle_tfidf(docs, k):
    all_tokens = []
    for d in docs:
        all_tokens.extend(oracle_tokens(d))
    scored = []
    for term in sorted(set(all_tokens)):
        tf = sum(1 for t in all_tokens if t == term)
        df = sum(1 for d in docs if term in oracle_tokens(d))
        idf = math.log((1 + len(docs)) / (1 + df)) + 1.0
        scored.append((term, round(tf * idf, 6)))
    scored.sort(key=lambda x: (-x[1], x[0]))
    return scored[:k]


def test_topics_empty_docs():
    assert extract_topics([], 5) == []


def test_topics_single_doc_oracle_value():
    # oracle: tf(apple)=2, df=1, N=1, idf=ln(2/2)+1=1, score=2.0
    got = extract_topics(["apple apple banana"], 1)
    assert got == oracle_tfidf(["apple apple banana"], 1)
    assert got == [("apple", 2.0)]


def test_topics_tie_breaks_lexicographically():
    got = extract_topics(["zebra apple"], 2)
    assert got == [("apple", 1.0), ("zebra", 1.0)]


def test_topics_drop_stopwords_and_short_tokens():
    got = extract_topics(["the of a x quantum"], 5)
    assert got == [("quantum", 1.0)]


def test_topics_match_oracle_on_random_corpora():
    """100 random corpora, exact match including order and 6-decimal scores."""
    rng = random.Random(31)
    vocab = [
        "rust", "python", "news", "cooking", "chess", "galaxy", "quantum",
        "the", "of", "ab", "x", "garden", "sonata", "nova", "ledger",
    ]
    for _ in range(100):
        n_docs = rng.randint(1, 20)
        docs = [
            " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 50)))
            for _ in range(n_docs)
        ]
        k = rng.randint(1, 12)
        assert extract_topics(docs, k) == oracle_tfidf(docs, k)


def test_topics_rejects_non_positive_k():
    with pytest.raises(ValidationFailed):
        extract_topics(["x y"], 0)


def test_stopword_list_is_pinned():
    """schema_version 1 provenance covers exactly this stopword list."""
    from importlib import resources

    raw = resources.files("cogledger.data").joinpath("stopwords.txt").read_bytes()
    assert sha256(raw) == STOPWORDS_SHA256
    assert "the" in STOPWORDS and "rust" not in STOPWORDS


# --- mentions -----------------------------------------------------------------

def test_mentions_empty_text():
    assert extract_mentions("") == []


def test_mentions_capitalized_run():
    assert extract_mentions("met Ada Lovelace today") == ["Ada Lovelace"]


def test_mentions_gazetteer_hit():
    assert extract_mentions("reading plato again", {"plato"}) == ["plato"]


def test_mentions_sentence_start_trimmed():
    # "Grace" starts the sentence and is dropped; "Hopper Turing" remains
    assert extract_mentions("Grace Hopper Turing wrote code") == ["Hopper Turing"]
    # a two-word run at sentence start loses its head, leaving one word: no hit
    assert extract_mentions("Ada Lovelace wrote programs") == []


def test_mentions_dedup_first_appearance_order():
    text = "saw Alan Turing then Ada Lovelace then Alan Turing again"
    assert extract_mentions(text) == ["Alan Turing", "Ada Lovelace"]


def test_mentions_multiword_gazetteer_case_insensitive():
    got = extract_mentions("today ada lovelace spoke", {"Ada Lovelace"})
    assert got == ["ada lovelace"]


# --- codification ----------------------------------------------------------------

def visit(title, ts=1000, actor=ACTOR):
    return make_activity(
        actor=actor, kind=ActivityKind.PAGE_VISIT, shell_id=SHELL,
        captured_at=ts, url=f"https://x.example/{ts}", title=title,
    )


def test_codify_deterministic(tmp_path):
    records = [visit("rust memory safety", ts=100), visit("rust ownership", ts=200)]
    s1 = ContentStore(tmp_path / "s1")
    s2 = ContentStore(tmp_path / "s2")
    p1, m1, i1 = codify(records, 5, ACTOR, s1)
    p2, m2, i2 = codify(records, 5, ACTOR, s2)
    assert encode_payload(p1) == encode_payload(p2)
    assert m1.metadata.content_hash == m2.metadata.content_hash
    assert p1.window == (100, 200)
    assert p1.source_record_ids == tuple(r.record_id for r in records)


def test_codify_dominant_topic_heads_vocabulary(tmp_path):
    records = [visit(f"rust compiler pass {i}", ts=i) for i in range(5)]
    store = ContentStore(tmp_path / "s")
    payload, mint, incentive = codify(records, 3, ACTOR, store)
    docs = [r.title for r in records]
    assert payload.vocabulary[0][0] == oracle_tfidf(docs, 1)[0][0]
    assert payload.vocabulary[0][0] in ("compiler", "pass", "rust")
    assert mint.metadata.weight_micro == MICRO  # initial weight 1.0
    assert incentive.amount == 10
    # payload roundtrips through the store byte-identically
    assert decode_payload(store.get(mint.metadata.content_hash)) == payload


def test_codify_rejects_empty_and_mixed(tmp_path):
    store = ContentStore(tmp_path / "s")
    with pytest.raises(EmptyWindow):
        codify([], 5, ACTOR, store)
    no_tokens = make_activity(
        actor=ACTOR, kind=ActivityKind.SHELL_EVENT, shell_id=SHELL, captured_at=5
    )
    with pytest.raises(EmptyWindow):
        codify([no_tokens], 5, ACTOR, store)
    other = sha256(b"other-actor")
    with pytest.raises(MixedActors):
        codify([visit("a b"), visit("c d", actor=other)], 5, ACTOR, store)


# --- quiz ------------------------------------------------------------------------

def test_all_zero_answers_give_estj():
    quiz = default_quiz()
    answers = {q.question_id: 0 for q in quiz.questions}
    result = score_quiz(quiz, answers)
    assert result.code == "ESTJ"
    assert result.axis_scores == (0, 0, 0, 0)


def test_single_question_forced_letter():
    quiz = QuizDefinition(
        (
            QuizQuestion("e1", "t", "EI", 1),
            QuizQuestion("s1", "t", "SN", 1),
            QuizQuestion("t1", "t", "TF", 1),
            QuizQuestion("j1", "t", "JP", 1),
        )
    )
    result = score_quiz(quiz, {"e1": 2})
    assert result.axis_scores[0] == 2
    assert result.code[0] == "E"
    result = score_quiz(quiz, {"e1": -1})
    assert result.code[0] == "I"


def test_fixture_quiz_hand_summed():
    """Hand-computed sums for the packaged 8-question quiz."""
    quiz = default_quiz()
    answers = {"q1": 2, "q2": 1, "q3": -1, "q4": 2, "q5": 0, "q6": -2, "q7": -1, "q8": -2}
    # EI: 2*1 + 1*(-1) = 1 -> E;  SN: -1*1 + 2*(-1) = -3 -> N
    # TF: 0*1 + (-2)*(-1) = 2 -> T;  JP: -1*1 + (-2)*(-1) = 1 -> J
    result = score_quiz(quiz, answers)
    assert result.axis_scores == (1, -3, 2, 1)
    assert result.code == "ENTJ"


def test_unknown_question_rejected():
    with pytest.raises(UnknownQuestion):
        score_quiz(default_quiz(), {"nope": 1})


def test_out_of_range_answer_rejected():
    with pytest.raises(ValidationFailed):
        score_quiz(default_quiz(), {"q1": 3})


def test_quiz_exhaustive_against_brute_force():
    """One question per axis, all 5^4 answer combinations."""
    quiz = QuizDefinition(
        (
            QuizQuestion("e", "t", "EI", 1),
            QuizQuestion("s", "t", "SN", -1),
            QuizQuestion("t", "t", "TF", 1),
            QuizQuestion("j", "t", "JP", -1),
        )
    )
    letters = {"EI": "EI", "SN": "SN", "TF": "TF", "JP": "JP"}
    polar = {"e": ("EI", 1), "s": ("SN", -1), "t": ("TF", 1), "j": ("JP", -1)}
    for a in range(-2, 3):
        for b in range(-2, 3):
            for c in range(-2, 3):
                for d in range(-2, 3):
                    answers = {"e": a, "s": b, "t": c, "j": d}
                    # brute force: independent summation and tie rule
                    sums = {"EI": 0, "SN": 0, "TF": 0, "JP": 0}
                    for qid, val in answers.items():
                        axis, pol = polar[qid]
                        sums[axis] += val * pol
                    expected_code = "".join(
                        letters[axis][0] if sums[axis] >= 0 else letters[axis][1]
                        for axis in ("EI", "SN", "TF", "JP")
                    )
                    got = score_quiz(quiz, answers)
                    assert got.axis_scores == (
                        sums["EI"], sums["SN"], sums["TF"], sums["JP"]
                    )
                    assert got.code == expected_code


def test_quiz_linearity():
    quiz = default_quiz()
    first = {"q1": 2, "q3": -1}
    second = {"q2": -2, "q5": 1, "q8": 2}
    combined = {**first, **second}
    sum_parts = tuple(
        x + y
        for x, y in zip(
            score_quiz(quiz, first).axis_scores, score_quiz(quiz, second).axis_scores
        )
    )
    assert score_quiz(quiz, combined).axis_scores == sum_parts


def test_quiz_definition_validation():
    with pytest.raises(ValidationFailed):
        load_quiz('{"questions": [{"question_id": "a", "text": "t", "axis": "EI", "polarity": 1}]}')
    with pytest.raises(ValidationFailed):
        load_quiz("not json")


# --- refinery ---------------------------------------------------------------------

DAY = 86400


def obj(token, weight=1.0, mint_time=0, hits=0):
    return RefineInput(sha256(token), to_micro(weight), mint_time, hits)


def test_refine_fresh_and_hot_is_weight_one():
    updates, burns = refine([obj(b"a", weight=0.5, mint_time=1000, hits=4)], now=1000)
    assert burns == []
    assert len(updates) == 1
    assert updates[0].new_weight_micro == MICRO


def test_refine_cold_and_old_burns():
    now = 1000 * DAY
    updates, burns = refine([obj(b"a", weight=0.2, mint_time=0, hits=0),
                             obj(b"b", weight=1.0, mint_time=now, hits=5)], now=now)
    assert [b.token_id for b in burns] == [sha256(b"a")]
    assert all(u.token_id != sha256(b"a") for u in updates)


def test_refine_half_life_endpoint():
    """hit_count 0 at exactly one half-life: weight = 0.5 * 2^-1 = 0.25.
    Independent evaluation of the decay expression."""
    params = RefineParams()
    expected = 0.5 * 0.0 + 0.5 * 2.0 ** (-30.0 / 30.0)
    assert expected == 0.25
    w = refinery_weight(0, 3, 30 * DAY, params)
    assert w == pytest.approx(0.25, abs=1e-12)
    updates, burns = refine(
        [obj(b"a", weight=1.0, mint_time=0, hits=0),
         obj(b"hot", weight=1.0, mint_time=30 * DAY, hits=3)],
        now=30 * DAY,
    )
    target = next(u for u in updates if u.token_id == sha256(b"a"))
    assert target.new_weight_micro == 250_000


def test_refine_small_changes_not_emitted():
    updates, burns = refine([obj(b"a", weight=1.0, mint_time=500, hits=1)], now=500)
    # new weight is exactly 1.0 == old: nothing to do
    assert updates == [] and burns == []


def test_refine_burn_threshold_boundary():
    params = RefineParams(alpha=0.5, half_life_days=30, burn_threshold=0.05)
    # weight exactly at the threshold is kept (burn is strictly below)
    age = int(-30 * DAY * math.log2(0.1))  # recency = 0.1 -> weight 0.05
    w = refinery_weight(0, 1, age, params)
    assert to_micro(w) == 50_000
    updates, burns = refine(
        [obj(b"edge", weight=1.0, mint_time=0, hits=0),
         obj(b"hot", weight=1.0, mint_time=age, hits=1)],
        now=age, params=params,
    )
    assert burns == []
    assert any(u.token_id == sha256(b"edge") for u in updates)


def test_refine_monotonicity_random():
    """1,000 random (hit_count, age) pairs; both monotonicity directions."""
    rng = random.Random(41)
    params = RefineParams()
    for _ in range(1000):
        max_hits = rng.randint(1, 50)
        hits = rng.randint(0, max_hits)
        age = rng.randrange(0, 400 * DAY)
        w = refinery_weight(hits, max_hits, age, params)
        assert 0.0 <= w <= 1.0
        assert refinery_weight(hits, max_hits, age + rng.randrange(1, 50 * DAY), params) <= w
        if hits < max_hits:
            assert refinery_weight(hits + 1, max_hits, age, params) >= w


# --- preference model -------------------------------------------------------------

def payload_for(terms):
    return KnowledgeObjectPayload(
        vocabulary=tuple((t, to_micro(s)) for t, s in terms),
        mentions=(),
        source_record_ids=(sha256(b"src"),),
        window=(0, 1),
        schema_version=1,
    )


def test_train_single_object_normalizes(tmp_path):
    store = ContentStore(tmp_path / "s")
    payload = payload_for([("alpha", 3.0), ("beta", 1.0)])
    model, mint = train_preference_model(
        [(sha256(b"t1"), payload, MICRO)], store, ACTOR
    )
    assert dict(model.weights) == {"alpha": 750_000, "beta": 250_000}
    assert sum(w for _, w in model.weights) == MICRO
    assert mint.metadata.token_class is TokenClass.MODEL
    assert decode_model(store.get(mint.metadata.content_hash)) == model


def test_train_scale_invariance(tmp_path):
    store = ContentStore(tmp_path / "s")
    objs = [(sha256(b"t1"), payload_for([("alpha", 2.0)]), MICRO),
            (sha256(b"t2"), payload_for([("beta", 1.0)]), MICRO // 2)]
    m1, _ = train_preference_model(objs, store, ACTOR)
    m2, _ = train_preference_model(objs + objs, store, ACTOR)
    assert m1.weights == m2.weights
    assert encode_model(m1)[:1] == encode_model(m2)[:1]


def test_train_disjoint_terms_mass_ratio(tmp_path):
    """Weights 1 and 3 with equal scores: masses in exactly a 1:3 ratio."""
    store = ContentStore(tmp_path / "s")
    objs = [
        (sha256(b"t1"), payload_for([("alpha", 1.0)]), 1 * MICRO),
        (sha256(b"t2"), payload_for([("beta", 1.0)]), 3 * MICRO),
    ]
    model, _ = train_preference_model(objs, store, ACTOR)
    weights = dict(model.weights)
    assert weights["alpha"] == 250_000
    assert weights["beta"] == 750_000


def test_train_no_signal(tmp_path):
    store = ContentStore(tmp_path / "s")
    with pytest.raises(NoSignal):
        train_preference_model(
            [(sha256(b"t1"), payload_for([("alpha", 1.0)]), 0)], store, ACTOR
        )


def test_train_terms_sorted_and_sourced(tmp_path):
    store = ContentStore(tmp_path / "s")
    p1 = payload_for([("zeta", 1.0), ("alpha", 1.0)])
    p2 = payload_for([("midway", 2.0)])
    model, _ = train_preference_model(
        [(sha256(b"t1"), p1, MICRO), (sha256(b"t2"), p2, MICRO)], store, ACTOR
    )
    terms = [t for t, _ in model.weights]
    assert terms == sorted(terms)
    contributed = {t for t, _ in p1.vocabulary} | {t for t, _ in p2.vocabulary}
    assert set(terms) <= contributed
    assert model.built_from == (sha256(b"t1"), sha256(b"t2"))


# --- salience ------------------------------------------------------------------------

def model_of(**weights):
    total = sum(weights.values())
    return PreferenceModel(
        weights=tuple(sorted((t, to_micro(w / total)) for t, w in weights.items())),
        built_from=(sha256(b"m"),),
        schema_version=1,
    )


def test_salience_empty_text_is_zero():
    assert predict_salience(model_of(rust=1.0), "") == 0.0
    assert predict_salience(model_of(rust=1.0), "the of!") == 0.0


def test_salience_no_overlap_is_zero():
    assert predict_salience(model_of(rust=1.0), "gardening tips") == 0.0


def test_salience_count_oracle():
    # model {rust: 1.0}, text "rust rust go": (1 + 1 + 0) / 3
    model = model_of(rust=1.0)
    assert predict_salience(model, "rust rust go") == pytest.approx(2 / 3)


def test_salience_bounds_random():
    rng = random.Random(55)
    vocab = ["rust", "go", "python", "zig", "news"]
    model = model_of(rust=2.0, go=1.0, python=1.0)
    for _ in range(200):
        text = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 30)))
        score = predict_salience(model, text)
        assert 0.0 <= score <= 1.0


@given(st.lists(st.sampled_from(["rust", "go", "news", "xx"]), min_size=1, max_size=20))
@settings(max_examples=100)
def test_salience_matches_direct_count(tokens):
    model = model_of(rust=1.0, go=3.0)
    text = " ".join(tokens)
    weights = dict(model.weights)
    expected = sum(weights.get(t, 0) for t in tokens) / (MICRO * len(tokens))
    assert predict_salience(model, text) == pytest.approx(expected, abs=1e-12)
