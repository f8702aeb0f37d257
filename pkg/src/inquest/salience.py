"""Question validity classification and salience prediction strategies.

Strategies: "zero" and "cot_zero" prompt from instructions alone; "few" takes
15 fixed in-context exemplars (3 per label, ordered so frequent labels sit
last, exploiting recency bias); "few_knn" retrieves the nearest exemplar per
label from an embedded bank; "cot_few" uses 5 exemplars with annotator
rationales; "endpoint" sends the instruction-tuned format to a served
fine-tuned model.
"""

from __future__ import annotations

import hashlib
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import prompts
from .corpus import Context, QuestionRecord
from .errors import (
    ClassificationError,
    ConfigurationError,
    ParseError,
    PredictionError,
    ReplayMissError,
)
from .llmgate import EmbeddingVector, LLMGateway, Message, PromptRequest, parse_likert

log = logging.getLogger(__name__)

STRATEGIES = ("zero", "few", "few_knn", "cot_zero", "cot_few", "endpoint")

FEW_SHOT_TOTAL = 15
FEW_SHOT_PER_LABEL = 3
COT_FEW_SHOT_TOTAL = 5

SCORE_NUDGE = "Respond with a single integer score from {lo} to {hi}."


def _exemplar_id(article_id: str, anchor_index: int, question: str) -> str:
    digest = hashlib.sha1(f"{article_id}\x1f{anchor_index}\x1f{question}".encode()).hexdigest()
    return digest[:16]


@dataclass(frozen=True)
class Exemplar:
    """A labeled (context, question, score) instance for in-context learning."""

    context: Context
    question: str
    score: int
    rationale: str | None = None
    id: str = ""

    def __post_init__(self):
        if not 1 <= self.score <= 5:
            raise ValueError(f"exemplar score {self.score} not in 1..5")
        if not self.id:
            object.__setattr__(
                self,
                "id",
                _exemplar_id(self.context.article_id, self.context.anchor_index, self.question),
            )


@dataclass(frozen=True)
class ExemplarBank:
    """Exemplars plus their context embeddings and train-set label counts."""

    exemplars: tuple[Exemplar, ...]
    embeddings: tuple[EmbeddingVector, ...]
    label_frequencies: Mapping[int, float]

    def __post_init__(self):
        if len(self.exemplars) != len(self.embeddings):
            raise ConfigurationError("embeddings must align one-to-one with exemplars")
        if any(f < 0 for f in self.label_frequencies.values()):
            raise ConfigurationError("label frequencies must be nonnegative")
        dims = {len(e) for e in self.embeddings}
        if len(dims) > 1:
            raise ConfigurationError(f"mixed embedding dimensions in bank: {sorted(dims)}")

    def labels(self) -> set[int]:
        return {e.score for e in self.exemplars}


@dataclass(frozen=True)
class SaliencePrediction:
    question_id: str
    strategy: str
    score: int
    rationale: str | None = None
    prompt_key: str = ""

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not 1 <= self.score <= 5:
            raise ValueError(f"predicted score {self.score} not in 1..5")
        is_cot = self.strategy.startswith("cot_")
        if is_cot and not self.rationale:
            raise ValueError("CoT predictions must carry a rationale")
        if not is_cot and self.rationale is not None:
            raise ValueError("non-CoT predictions must not carry a rationale")


# --------------------------------------------------------------------------
# Exemplar machinery
# --------------------------------------------------------------------------


def context_embedding(context: Context, gateway: LLMGateway, model: str | None = None) -> list[float]:
    """Elementwise mean of the preceding-context and anchor embeddings.

    Anchors at the very start of an article have no preceding text; their
    representation is the anchor embedding alone.
    """
    anchor_vec = gateway.embed(context.anchor, model=model).values
    if not context.preceding.strip():
        return list(anchor_vec)
    preceding_vec = gateway.embed(context.preceding, model=model).values
    if len(anchor_vec) != len(preceding_vec):
        raise ConfigurationError("embedding dimension mismatch within one context")
    return [(a + b) / 2.0 for a, b in zip(preceding_vec, anchor_vec)]


def build_exemplar_bank(
    exemplars: Sequence[Exemplar],
    label_frequencies: Mapping[int, float],
    gateway: LLMGateway,
    embed_model: str | None = None,
) -> ExemplarBank:
    provider = embed_model or gateway.config.embedding_model
    vectors = tuple(
        EmbeddingVector(tuple(context_embedding(e.context, gateway, embed_model)), provider)
        for e in exemplars
    )
    return ExemplarBank(tuple(exemplars), vectors, dict(label_frequencies))


def order_exemplars(
    exemplars: Sequence[Exemplar], frequencies: Mapping[int, float]
) -> list[Exemplar]:
    """Sort exemplars so the rarest train-set label comes first and the most
    frequent last; the sort is stable, so equal-frequency labels keep their
    input order."""
    missing = {e.score for e in exemplars} - set(frequencies)
    if missing:
        raise ConfigurationError(f"label frequencies missing for labels {sorted(missing)}")
    return sorted(exemplars, key=lambda e: frequencies[e.score])


def select_knn_exemplars(
    query: Context,
    bank: ExemplarBank,
    gateway: LLMGateway,
    embed_model: str | None = None,
) -> list[Exemplar]:
    """Nearest bank exemplar per salience label, Euclidean distance on mean
    context embeddings, distance ties broken by lowest exemplar id; output is
    frequency-ordered like the fixed few-shot setting."""
    missing = set(range(1, 6)) - bank.labels()
    if missing:
        raise ConfigurationError(f"bank has no exemplar for labels {sorted(missing)}")

    query_vec = context_embedding(query, gateway, embed_model)
    best: dict[int, tuple[float, str, Exemplar]] = {}
    for exemplar, vector in zip(bank.exemplars, bank.embeddings):
        if len(vector.values) != len(query_vec):
            raise ConfigurationError("query embedding dimension differs from bank")
        dist = math.dist(query_vec, vector.values)
        key = (dist, exemplar.id)
        if exemplar.score not in best or key < best[exemplar.score][:2]:
            best[exemplar.score] = (dist, exemplar.id, exemplar)

    chosen = [best[label][2] for label in sorted(best)]
    return order_exemplars(chosen, bank.label_frequencies)


def choose_few_shot_exemplars(
    pool: Sequence[Exemplar],
    per_label: int = FEW_SHOT_PER_LABEL,
    seed: int = 0,
    require_rationale: bool = False,
) -> list[Exemplar]:
    """Seeded-random draw of ``per_label`` exemplars for each label 1..5."""
    rng = random.Random(seed)
    chosen: list[Exemplar] = []
    for label in range(1, 6):
        candidates = [
            e for e in pool
            if e.score == label and (e.rationale if require_rationale else True)
        ]
        if len(candidates) < per_label:
            raise ConfigurationError(
                f"need {per_label} exemplars for label {label}, have {len(candidates)}"
            )
        chosen.extend(rng.sample(candidates, per_label))
    return chosen


# --------------------------------------------------------------------------
# Completion helpers
# --------------------------------------------------------------------------


def _complete_and_parse(
    gateway: LLMGateway,
    model: str,
    messages: tuple[Message, ...],
    lo: int,
    hi: int,
    max_tokens: int,
) -> tuple[int, str, str]:
    """Run a scoring completion, parsing with one nudged retry.

    Returns (score, completion text the score came from, cache key of the
    prompt that produced it).
    """
    request = PromptRequest(model=model, messages=messages, temperature=0.0,
                            max_tokens=max_tokens)
    response = gateway.complete(request)
    try:
        return parse_likert(response.text, lo, hi), response.text, request.cache_key()
    except ParseError:
        retry = PromptRequest(
            model=model,
            messages=messages
            + (
                Message("assistant", response.text),
                Message("user", SCORE_NUDGE.format(lo=lo, hi=hi)),
            ),
            temperature=0.0,
            max_tokens=max_tokens,
        )
        try:
            retry_response = gateway.complete(retry)
        except ReplayMissError:
            raise ParseError(
                f"unparseable completion and no retry fixture (key {request.cache_key()})"
            ) from None
        return parse_likert(retry_response.text, lo, hi), retry_response.text, retry.cache_key()


def classify_validity(
    context: Context,
    question: str,
    gateway: LLMGateway,
    model: str,
    exemplars: Sequence[tuple[str, str, int]] = (),
    max_tokens: int = 8,
) -> str:
    """Grounding check for one question against its anchor sentence.

    Returns "valid" or "invalid". Exemplars are optional few-shot
    (question, anchor, label) triples.
    """
    if not question.strip():
        raise ClassificationError("cannot classify an empty question")
    messages = prompts.render_validity(question, context.anchor, exemplars)
    try:
        verdict, _, _ = _complete_and_parse(gateway, model, messages, 0, 1, max_tokens)
    except ParseError as exc:
        raise ClassificationError(str(exc)) from exc
    return "valid" if verdict == 1 else "invalid"


def _strip_score_tail(text: str, score: int) -> str:
    """Rationale text preceding the final score token."""
    token = str(score)
    idx = text.rfind(token)
    head = text[:idx] if idx >= 0 else text
    return head.strip().rstrip(":").rstrip()


def predict_salience(
    context: Context,
    question: str,
    strategy: str,
    gateway: LLMGateway,
    model: str,
    *,
    exemplars: Sequence[Exemplar] | None = None,
    bank: ExemplarBank | None = None,
    label_frequencies: Mapping[int, float] | None = None,
    question_id: str = "",
    max_tokens: int = 512,
) -> SaliencePrediction:
    """Score one (context, question) pair with the chosen prompting strategy."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    article_text = context.full_text

    if strategy == "zero":
        messages = prompts.render_salience_zero(article_text, question)
    elif strategy == "few":
        if exemplars is None or label_frequencies is None:
            raise ConfigurationError("few strategy needs exemplars and label_frequencies")
        counts = Counter(e.score for e in exemplars)
        if len(exemplars) != FEW_SHOT_TOTAL or any(
            counts.get(l, 0) != FEW_SHOT_PER_LABEL for l in range(1, 6)
        ):
            raise ConfigurationError(
                f"few strategy needs {FEW_SHOT_TOTAL} exemplars, "
                f"{FEW_SHOT_PER_LABEL} per label; got counts {dict(counts)}"
            )
        ordered = order_exemplars(exemplars, label_frequencies)
        messages = prompts.render_salience_few(
            article_text, question, [(e.context.full_text, e.question, e.score) for e in ordered]
        )
    elif strategy == "few_knn":
        if bank is None:
            raise ConfigurationError("few_knn strategy needs an exemplar bank")
        picked = select_knn_exemplars(context, bank, gateway)
        messages = prompts.render_salience_few(
            article_text, question, [(e.context.full_text, e.question, e.score) for e in picked]
        )
    elif strategy == "cot_zero":
        messages = prompts.render_salience_cot_zero(article_text, question)
    elif strategy == "cot_few":
        if exemplars is None:
            raise ConfigurationError("cot_few strategy needs exemplars")
        if len(exemplars) != COT_FEW_SHOT_TOTAL:
            raise ConfigurationError(
                f"cot_few strategy needs exactly {COT_FEW_SHOT_TOTAL} exemplars"
            )
        if any(not e.rationale for e in exemplars):
            raise ConfigurationError("cot_few exemplars must carry rationales")
        messages = prompts.render_salience_cot_few(
            article_text,
            question,
            [(e.context.full_text, e.question, e.rationale, e.score) for e in exemplars],
        )
    else:  # endpoint
        messages = prompts.render_salience_endpoint(article_text, question)

    try:
        score, text, key = _complete_and_parse(gateway, model, messages, 1, 5, max_tokens)
    except ParseError as exc:
        raise PredictionError(f"question {question_id or question[:40]!r}: {exc}") from exc

    rationale = _strip_score_tail(text, score) if strategy.startswith("cot_") else None
    if strategy.startswith("cot_") and not rationale:
        rationale = text.strip()
    return SaliencePrediction(
        question_id=question_id,
        strategy=strategy,
        score=score,
        rationale=rationale,
        prompt_key=key,
    )


# --------------------------------------------------------------------------
# Pipeline: validity gate, then salience
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoredQuestion:
    """Pipeline outcome for one question: 0 = classified invalid, None = the
    call failed and the question is excluded from downstream metrics."""

    question_id: str
    label: int | None
    prediction: SaliencePrediction | None = None
    error: str | None = None


def score_questions(
    questions: Iterable[QuestionRecord],
    gateway: LLMGateway,
    model: str,
    strategy: str,
    *,
    validity_model: str | None = None,
    validity_exemplars: Sequence[tuple[str, str, int]] = (),
    exemplars: Sequence[Exemplar] | None = None,
    bank: ExemplarBank | None = None,
    label_frequencies: Mapping[int, float] | None = None,
    check_validity: bool = True,
) -> list[ScoredQuestion]:
    """Classify validity and score salience for a batch of questions.

    Invalid questions carry label 0; a failure on one question is recorded
    on its row and never aborts the batch.
    """
    results: list[ScoredQuestion] = []
    for q in questions:
        try:
            if check_validity:
                verdict = classify_validity(
                    q.context, q.text, gateway, validity_model or model, validity_exemplars
                )
                if verdict == "invalid":
                    results.append(ScoredQuestion(q.id, label=0))
                    continue
            prediction = predict_salience(
                q.context,
                q.text,
                strategy,
                gateway,
                model,
                exemplars=exemplars,
                bank=bank,
                label_frequencies=label_frequencies,
                question_id=q.id,
            )
            results.append(ScoredQuestion(q.id, label=prediction.score, prediction=prediction))
        except (ClassificationError, PredictionError, ReplayMissError) as exc:
            log.warning("scoring failed for %s: %s", q.id, exc)
            results.append(ScoredQuestion(q.id, label=None, error=str(exc)))
    return results
