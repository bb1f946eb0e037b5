"""Learning layer: topic extraction, codification, quiz scoring, the
refinery pass, and the deterministic preference model.

Everything here is a pure function of its inputs. Topic extraction is
closed-form TF-IDF (tf = raw count over the concatenated corpus,
idf = ln((1+N)/(1+df)) + 1), so identical inputs always codify into
byte-identical payloads; no pretrained models are involved anywhere.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Optional, Sequence

from .encoding import (
    MICRO,
    ContentAddress,
    Reader,
    enc_hash,
    enc_int,
    enc_list,
    enc_text,
    enc_uint,
    sha256,
    to_micro,
)
from .errors import (
    EmptyWindow,
    MixedActors,
    NoSignal,
    UnknownQuestion,
    ValidationFailed,
)
from .memory import tokenize
from .records import (
    ActivityRecord,
    Burn,
    MintIncentive,
    MintNft,
    NftMetadata,
    TokenClass,
    UpdateWeight,
    BURN_REFINERY,
    REWARD_PER_KNOWLEDGE_OBJECT,
)
from .registry import reward_codification
from .store import ContentStore

SCHEMA_VERSION = 1


def _load_stopwords() -> frozenset[str]:
    text = resources.files("cogledger.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


STOPWORDS = _load_stopwords()

# Provenance pin: schema_version 1 covers exactly this stopword list.
# Changing stopwords.txt must update this hash and bump SCHEMA_VERSION.
STOPWORDS_SHA256 = bytes.fromhex(
    "5f75c34b49090d105f64574def73b416c09734108c11297517b22e2b52b7e6fa"
)


def topic_tokens(text: str) -> list[str]:
    """Memory-pool tokenization with the stopword list applied on top."""
    return [t for t in tokenize(text) if t not in STOPWORDS]


# --- topic extraction -------------------------------------------------------

def extract_topics(docs: Sequence[str], k: int) -> list[tuple[str, float]]:
    """Top-k TF-IDF terms over the doc list, scores rounded to 6 decimals,
    ties broken by term ascending."""
    if k <= 0:
        raise ValidationFailed("k", "must be positive")
    if not docs:
        return []
    counts: dict[str, int] = {}
    doc_freq: dict[str, int] = {}
    for doc in docs:
        toks = topic_tokens(doc)
        for t in toks:
            counts[t] = counts.get(t, 0) + 1
        for t in set(toks):
            doc_freq[t] = doc_freq.get(t, 0) + 1
    n = len(docs)
    scored = [
        (term, round(tf * (math.log((1 + n) / (1 + doc_freq[term])) + 1.0), 6))
        for term, tf in counts.items()
    ]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


# --- mention extraction ------------------------------------------------------

_WORD_SPLIT = re.compile(r"\S+")
_CAPITALIZED = re.compile(r"[A-Z][a-zA-Z]*$")
_SENTENCE_END = re.compile(r"[.!?]+[\"')\]]*$")


@dataclass(frozen=True)
class _Word:
    stripped: str
    sentence_start: bool
    position: int

    @property
    def capitalized(self) -> bool:
        return bool(_CAPITALIZED.fullmatch(self.stripped))


def _words(text: str) -> list[_Word]:
    out: list[_Word] = []
    sentence_start = True
    for i, match in enumerate(_WORD_SPLIT.finditer(text)):
        raw = match.group()
        stripped = raw.strip("\"'()[]{},;:.!?")
        out.append(_Word(stripped, sentence_start, i))
        sentence_start = bool(_SENTENCE_END.search(raw))
    return out


def extract_mentions(text: str, gazetteer: Iterable[str] = ()) -> list[str]:
    """People/entity candidates, first-appearance order, deduplicated.

    Two sources: case-insensitive whole-word gazetteer hits, and runs of
    two or more consecutive capitalized words. A run that begins at a
    sentence start has its first word dropped before the length check,
    since sentence-initial capitalization proves nothing.
    """
    words = _words(text)
    found: list[tuple[int, str]] = []

    gaz = [tuple(name.lower().split()) for name in gazetteer if name.strip()]
    lowers = [w.stripped.lower() for w in words]
    for start in range(len(words)):
        for name in gaz:
            if tuple(lowers[start : start + len(name)]) == name:
                display = " ".join(w.stripped for w in words[start : start + len(name)])
                found.append((start, display))

    run: list[_Word] = []
    for word in words + [_Word("", True, len(words))]:
        if word.capitalized:
            run.append(word)
            continue
        if run:
            if run[0].sentence_start:
                run = run[1:]
            if len(run) >= 2:
                found.append((run[0].position, " ".join(w.stripped for w in run)))
            run = []

    found.sort(key=lambda item: item[0])
    seen: set[str] = set()
    out: list[str] = []
    for _, display in found:
        key = display.lower()
        if key not in seen:
            seen.add(key)
            out.append(display)
    return out


# --- knowledge objects -------------------------------------------------------

@dataclass(frozen=True)
class KnowledgeObjectPayload:
    """Codified knowledge: scored vocabulary plus provenance."""

    vocabulary: tuple[tuple[str, int], ...]  # (term, score in micro-units)
    mentions: tuple[str, ...]
    source_record_ids: tuple[bytes, ...]
    window: tuple[int, int]
    schema_version: int


def encode_payload(payload: KnowledgeObjectPayload) -> bytes:
    return b"".join(
        [
            enc_list(payload.vocabulary, lambda tv: enc_text(tv[0]) + enc_uint(tv[1])),
            enc_list(payload.mentions, enc_text),
            enc_list(payload.source_record_ids, enc_hash),
            enc_uint(payload.window[0]),
            enc_uint(payload.window[1]),
            enc_uint(payload.schema_version),
        ]
    )


def decode_payload(data: bytes) -> KnowledgeObjectPayload:
    r = Reader(data)
    vocabulary = tuple(r.read_list(lambda rr: (rr.read_text(), rr.read_uint())))
    mentions = tuple(r.read_list(Reader.read_text))
    sources = tuple(r.read_list(Reader.read_hash))
    window = (r.read_uint(), r.read_uint())
    schema_version = r.read_uint()
    r.expect_end()
    return KnowledgeObjectPayload(vocabulary, mentions, sources, window, schema_version)


def codify(
    records: Sequence[ActivityRecord],
    k: int,
    agent: bytes,
    store: ContentStore,
    reward_amount: int = REWARD_PER_KNOWLEDGE_OBJECT,
    gazetteer: Iterable[str] = (),
) -> tuple[KnowledgeObjectPayload, MintNft, MintIncentive]:
    """Turn a window of activity into a knowledge object plus the unsigned
    mint and incentive ops. Docs are all record titles followed by all
    query-term strings, in record order."""
    if not records:
        raise EmptyWindow("no records in window")
    actors = {rec.actor for rec in records}
    if len(actors) != 1:
        raise MixedActors(f"{len(actors)} distinct actors in window")
    (actor,) = actors

    docs = [rec.title for rec in records if rec.title]
    docs += [" ".join(rec.query_terms) for rec in records if rec.query_terms]
    vocabulary = extract_topics(docs, k)
    if not vocabulary:
        raise EmptyWindow("window has no indexable tokens")

    mentions: list[str] = []
    seen: set[str] = set()
    for rec in records:
        if rec.title:
            for mention in extract_mentions(rec.title, gazetteer):
                if mention.lower() not in seen:
                    seen.add(mention.lower())
                    mentions.append(mention)

    payload = KnowledgeObjectPayload(
        vocabulary=tuple((term, to_micro(score)) for term, score in vocabulary),
        mentions=tuple(mentions),
        source_record_ids=tuple(rec.record_id for rec in records),
        window=(
            min(rec.captured_at for rec in records),
            max(rec.captured_at for rec in records),
        ),
        schema_version=SCHEMA_VERSION,
    )
    address = store.put(encode_payload(payload))
    metadata = NftMetadata(
        token_class=TokenClass.KNOWLEDGE_OBJECT,
        content_hash=address,
        schema_version=SCHEMA_VERSION,
        trait_code=None,
        weight_micro=MICRO,  # fresh knowledge starts at weight 1.0
        issuer=agent,
    )
    mint = MintNft(token_id=bytes(32), metadata=metadata, owner=actor)
    incentive = reward_codification(agent, reward_amount)
    return payload, mint, incentive


# --- personality quiz --------------------------------------------------------

AXES = (("EI", "E", "I"), ("SN", "S", "N"), ("TF", "T", "F"), ("JP", "J", "P"))
AXIS_NAMES = tuple(axis for axis, _, _ in AXES)


@dataclass(frozen=True)
class QuizQuestion:
    question_id: str
    text: str
    axis: str
    polarity: int


@dataclass(frozen=True)
class QuizDefinition:
    questions: tuple[QuizQuestion, ...]


@dataclass(frozen=True)
class TraitResult:
    code: str
    axis_scores: tuple[int, int, int, int]


def load_quiz(text: str) -> QuizDefinition:
    try:
        blob = json.loads(text)
        questions = tuple(
            QuizQuestion(q["question_id"], q["text"], q["axis"], int(q["polarity"]))
            for q in blob["questions"]
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise ValidationFailed("quiz", f"unparseable quiz definition: {exc}")
    ids = [q.question_id for q in questions]
    if len(set(ids)) != len(ids):
        raise ValidationFailed("quiz", "duplicate question ids")
    for q in questions:
        if q.axis not in AXIS_NAMES:
            raise ValidationFailed("quiz", f"unknown axis {q.axis!r}")
        if q.polarity not in (1, -1):
            raise ValidationFailed("quiz", f"polarity must be +1 or -1, got {q.polarity}")
    covered = {q.axis for q in questions}
    if covered != set(AXIS_NAMES):
        raise ValidationFailed("quiz", f"axes missing questions: {set(AXIS_NAMES) - covered}")
    return QuizDefinition(questions)


def default_quiz() -> QuizDefinition:
    return load_quiz(
        resources.files("cogledger.data").joinpath("quiz.json").read_text("utf-8")
    )


def score_quiz(definition: QuizDefinition, answers: Mapping[str, int]) -> TraitResult:
    """Axis score = sum of answer * polarity; unanswered questions count 0.
    Letter = first of the axis pair when the score is positive or zero,
    second when negative."""
    known = {q.question_id for q in definition.questions}
    for qid, value in answers.items():
        if qid not in known:
            raise UnknownQuestion(qid)
        if not -2 <= value <= 2:
            raise ValidationFailed("answer_value", f"{qid}: {value} outside [-2, 2]")
    sums = {axis: 0 for axis in AXIS_NAMES}
    for q in definition.questions:
        sums[q.axis] += answers.get(q.question_id, 0) * q.polarity
    code = "".join(
        positive if sums[axis] >= 0 else negative for axis, positive, negative in AXES
    )
    return TraitResult(code, tuple(sums[axis] for axis in AXIS_NAMES))


def encode_quiz_evidence(answers: Mapping[str, int], result: TraitResult) -> bytes:
    """Canonical badge evidence: the answers plus the derived result."""
    return b"".join(
        [
            enc_uint(SCHEMA_VERSION),
            enc_list(
                sorted(answers.items()),
                lambda kv: enc_text(kv[0]) + enc_int(kv[1]),
            ),
            enc_text(result.code),
            enc_list(result.axis_scores, enc_int),
        ]
    )


# --- refinery ---------------------------------------------------------------

@dataclass(frozen=True)
class RefineParams:
    alpha: float = 0.5
    half_life_days: float = 30.0
    burn_threshold: float = 0.05


@dataclass(frozen=True)
class RefineInput:
    token_id: bytes
    weight_micro: int
    mint_time: int
    hit_count: int


def refinery_weight(
    hit_count: int, max_hits: int, age_seconds: int, params: RefineParams
) -> float:
    """Blend of usage share and exponential recency decay."""
    usage = hit_count / max_hits if max_hits > 0 else 0.0
    age_days = max(age_seconds, 0) / 86400.0
    recency = 2.0 ** (-age_days / params.half_life_days)
    return params.alpha * usage + (1.0 - params.alpha) * recency


def refine(
    objects: Sequence[RefineInput],
    now: int,
    params: RefineParams = RefineParams(),
) -> tuple[list[UpdateWeight], list[Burn]]:
    """Reweight knowledge objects; burn the ones that fell below the
    threshold. A burned object gets no weight update. Updates are only
    emitted when the weight moves by more than one micro-unit (10^-6)."""
    max_hits = max((o.hit_count for o in objects), default=0)
    updates: list[UpdateWeight] = []
    burns: list[Burn] = []
    burn_floor = to_micro(params.burn_threshold)
    for obj in objects:
        micro = to_micro(
            refinery_weight(obj.hit_count, max_hits, now - obj.mint_time, params)
        )
        if micro < burn_floor:
            burns.append(Burn(token_id=obj.token_id, reason_code=BURN_REFINERY))
        elif abs(micro - obj.weight_micro) > 1:
            updates.append(UpdateWeight(token_id=obj.token_id, new_weight_micro=micro))
    return updates, burns


# --- preference model ---------------------------------------------------------

@dataclass(frozen=True)
class PreferenceModel:
    weights: tuple[tuple[str, int], ...]  # (term, weight in micro-units), term-sorted
    built_from: tuple[bytes, ...]
    schema_version: int


def encode_model(model: PreferenceModel) -> bytes:
    return b"".join(
        [
            enc_list(model.weights, lambda tw: enc_text(tw[0]) + enc_uint(tw[1])),
            enc_list(model.built_from, enc_hash),
            enc_uint(model.schema_version),
        ]
    )


def decode_model(data: bytes) -> PreferenceModel:
    r = Reader(data)
    weights = tuple(r.read_list(lambda rr: (rr.read_text(), rr.read_uint())))
    built_from = tuple(r.read_list(Reader.read_hash))
    schema_version = r.read_uint()
    r.expect_end()
    return PreferenceModel(weights, built_from, schema_version)


def train_preference_model(
    objects: Sequence[tuple[bytes, KnowledgeObjectPayload, int]],
    store: ContentStore,
    owner: bytes,
) -> tuple[PreferenceModel, MintNft]:
    """Weighted vocabulary blend over (token_id, payload, weight_micro)
    contributions, L1-normalized to exactly 1.0 in micro-units.

    Quantization uses largest-remainder apportionment so the normalized
    masses sum to precisely 10^6 regardless of rounding.
    """
    contributing = [(tid, payload, w) for tid, payload, w in objects if w > 0]
    if not contributing:
        raise NoSignal("all object weights are zero")

    mass: dict[str, int] = {}
    for _, payload, weight_micro in contributing:
        for term, score_micro in payload.vocabulary:
            mass[term] = mass.get(term, 0) + weight_micro * score_micro
    total = sum(mass.values())

    shares = {term: m * MICRO // total for term, m in mass.items()}
    remainders = sorted(
        ((-(m * MICRO % total), term) for term, m in mass.items()),
    )
    leftover = MICRO - sum(shares.values())
    for _, term in remainders[:leftover]:
        shares[term] += 1

    weights = tuple(
        (term, shares[term]) for term in sorted(shares) if shares[term] > 0
    )
    model = PreferenceModel(
        weights=weights,
        built_from=tuple(tid for tid, _, _ in contributing),
        schema_version=SCHEMA_VERSION,
    )
    address = store.put(encode_model(model))
    metadata = NftMetadata(
        token_class=TokenClass.MODEL,
        content_hash=address,
        schema_version=SCHEMA_VERSION,
        trait_code=None,
        weight_micro=None,
        issuer=owner,
    )
    mint = MintNft(token_id=bytes(32), metadata=metadata, owner=owner)
    return model, mint


def predict_salience(model: PreferenceModel, text: str) -> float:
    """Mean model mass over the text's topic tokens; 0 for empty text."""
    tokens = topic_tokens(text)
    if not tokens:
        return 0.0
    weights = dict(model.weights)
    total_micro = sum(weights.get(tok, 0) for tok in tokens)
    return total_micro / (MICRO * len(tokens))
