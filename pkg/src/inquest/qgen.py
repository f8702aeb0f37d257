"""Inquisitive-question and TL;DR generation over anchored contexts."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from . import prompts
from .corpus import Article, Context, QuestionRecord, count_words, probe_anchors, segment_sentences
from .errors import InquestError, PartialResultError, ReplayMissError
from .llmgate import LLMGateway, Message, PromptRequest

log = logging.getLogger(__name__)

# Decoding settings for generation calls: greedy, with a frequency penalty to
# discourage repetitive questions.
GENERATION_TEMPERATURE = 0.0
GENERATION_FREQUENCY_PENALTY = 0.5

TLDR_WORD_RANGE = (35, 65)  # soft bounds around the requested 50 words

_LIST_PREFIX = re.compile(r"^\s*(?:Q?(\d+)[.):])\s*")
# A numbering token directly after a question mark continues the list inline.
_INLINE_ITEM = re.compile(r"(\?)\s+(?=Q?\d+[.):]\s*)")

RETRY_NUDGE = "Please answer again with exactly {n} questions as a numbered list."


@dataclass(frozen=True)
class GenerationJob:
    context: Context
    model: str
    n_questions: int = 5

    def __post_init__(self):
        if self.n_questions < 1:
            raise ValueError("n_questions must be >= 1")


@dataclass(frozen=True)
class TldrResult:
    article: Article
    word_count: int
    within_range: bool


def parse_question_list(text: str) -> list[str]:
    """Parse a numbered list of questions out of completion text.

    Recognized item prefixes are "1.", "1)" and "Q1:", at the start of a line
    or directly after a question mark. Lines without a prefix continue the
    previous item; lines before the first item are preamble and are dropped.
    """
    items: list[list[str]] = []
    for line in _INLINE_ITEM.sub("\\1\n", text).splitlines():
        if not line.strip():
            continue
        m = _LIST_PREFIX.match(line)
        if m:
            items.append([line[m.end():].strip()])
        elif items:
            items[-1].append(line.strip())
    return [" ".join(parts).strip() for parts in items if any(p for p in parts)]


def _question_id(context: Context, model: str, ordinal: int) -> str:
    return f"{context.article_id}-s{context.anchor_index}-{model}-q{ordinal}"


def build_generation_request(job: GenerationJob) -> PromptRequest:
    return PromptRequest(
        model=job.model,
        messages=prompts.render_question_generation(
            job.context.preceding, job.context.anchor, job.n_questions
        ),
        temperature=GENERATION_TEMPERATURE,
        frequency_penalty=GENERATION_FREQUENCY_PENALTY,
    )


def generate_questions(job: GenerationJob, gateway: LLMGateway) -> list[QuestionRecord]:
    """Generate exactly ``n_questions`` anchored questions for one context.

    A short list triggers one retry with a corrective nudge; if the retry is
    unavailable (replay store without a fixture) or still short, a
    PartialResultError carries whatever parsed.
    """
    request = build_generation_request(job)
    response = gateway.complete(request)
    questions = parse_question_list(response.text)

    if len(questions) < job.n_questions:
        retry = PromptRequest(
            model=job.model,
            messages=request.messages
            + (
                Message("assistant", response.text),
                Message("user", RETRY_NUDGE.format(n=job.n_questions)),
            ),
            temperature=GENERATION_TEMPERATURE,
            frequency_penalty=GENERATION_FREQUENCY_PENALTY,
        )
        try:
            questions = parse_question_list(gateway.complete(retry).text)
        except ReplayMissError:
            log.warning(
                "no retry fixture for short question list at %s#%d",
                job.context.article_id,
                job.context.anchor_index,
            )

    records = [
        QuestionRecord(
            id=_question_id(job.context, job.model, i + 1),
            context=job.context,
            text=q,
            generator=f"model:{job.model}",
        )
        for i, q in enumerate(questions[: job.n_questions])
    ]
    if len(records) < job.n_questions:
        raise PartialResultError(
            f"expected {job.n_questions} questions, parsed {len(records)} "
            f"for {job.context.article_id}#{job.context.anchor_index}",
            records,
        )
    return records


def generate_for_article(
    article: Article,
    mode: str,
    gateway: LLMGateway,
    model: str,
    n_questions: int = 5,
    keep_partial: bool = False,
) -> list[QuestionRecord]:
    """One generation job per probe anchor, results ordered by anchor index."""
    records: list[QuestionRecord] = []
    for anchor in probe_anchors(article, mode):
        job = GenerationJob(Context.from_article(article, anchor), model, n_questions)
        try:
            records.extend(generate_questions(job, gateway))
        except PartialResultError as exc:
            if not keep_partial:
                raise
            log.warning("keeping partial result: %s", exc)
            records.extend(exc.records)
    return records


def generate_tldr(article: Article, gateway: LLMGateway, model: str) -> TldrResult:
    """Produce a short summary of an article as a new sentence-split article."""
    request = PromptRequest(
        model=model,
        messages=prompts.render_tldr(article.text),
        temperature=GENERATION_TEMPERATURE,
        frequency_penalty=GENERATION_FREQUENCY_PENALTY,
    )
    text = gateway.complete(request).text.strip()
    if not text:
        raise InquestError(f"empty TL;DR completion for article {article.id!r}")
    words = count_words(text)
    lo, hi = TLDR_WORD_RANGE
    within = lo <= words <= hi
    if not within:
        log.warning("TL;DR for %s is %d words (expected %d-%d)", article.id, words, lo, hi)
    tldr = Article(
        id=f"{article.id}-tldr",
        source="DivTLDR",
        sentences=tuple(segment_sentences(text)),
        title=article.title,
    )
    return TldrResult(article=tldr, word_count=words, within_range=within)
