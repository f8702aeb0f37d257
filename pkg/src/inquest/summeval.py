"""Summary-expansion evaluation: candidate generation, answered-question
detection, and salience-weighted scoring of systems.

The protocol is three candidate summaries per article (a strong expander, a
weaker expander, and a topic-corrupted baseline), each scored by the summed
salience of the TL;DR questions it answers.
"""

from __future__ import annotations

import logging
import math
import re
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import prompts
from .corpus import Article, QuestionRecord, RankingAnnotation, count_words
from .errors import InquestError, TransportError, ReplayMissError
from .llmgate import LLMGateway, PromptRequest
from .metrics import PairedSeries, kendall_tau

log = logging.getLogger(__name__)

SYSTEMS = ("expander", "weak_expander", "corrupted", "external")

EXPANSION_WORD_RANGE = (230, 250)

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class SummaryCandidate:
    article_id: str
    system: str
    text: str
    word_count: int
    compliant: bool = True

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ValueError(f"unknown system {self.system!r}")
        if self.word_count != count_words(self.text):
            raise ValueError("word_count must equal the whitespace token count")

    @classmethod
    def create(cls, article_id: str, system: str, text: str, compliant: bool = True):
        return cls(article_id, system, text, count_words(text), compliant)


@dataclass(frozen=True)
class SummaryEvalRecord:
    article_id: str
    system: str
    answered_question_ids: frozenset[str]
    answered_scores: tuple[int, ...]
    failed: bool = False


@dataclass(frozen=True)
class SummScrReport:
    """Per-system mean (over expansion instances) of summed answered salience."""

    scores: Mapping[str, float]
    counts: Mapping[str, int]

    def __post_init__(self):
        for system, n in self.counts.items():
            if n < 1:
                raise InquestError(f"system {system!r} has no expansion instances")


@dataclass(frozen=True)
class RankingOutcome:
    order: tuple[str, ...]
    tau: float
    tied: bool


def _complete_text(gateway: LLMGateway, model: str, messages, max_tokens: int = 1024) -> str:
    request = PromptRequest(model=model, messages=messages, temperature=0.0,
                            max_tokens=max_tokens)
    text = gateway.complete(request).text.strip()
    if not text:
        raise InquestError("empty completion")
    return text


# --------------------------------------------------------------------------
# Candidate generation
# --------------------------------------------------------------------------


def _length_ok(text: str) -> bool:
    lo, hi = EXPANSION_WORD_RANGE
    return lo <= count_words(text) <= hi


def expand_summary(
    article: Article,
    tldr: str,
    gateway: LLMGateway,
    model: str,
    system: str = "expander",
) -> SummaryCandidate:
    """Expand a TL;DR to the 230-250 word target; one corrective refinement
    pass if the first draft misses the range."""
    text = _complete_text(gateway, model, prompts.render_expansion(article.text, tldr))
    if _length_ok(text):
        return SummaryCandidate.create(article.id, system, text, compliant=True)
    refined = _complete_text(gateway, model, prompts.render_refinement(text))
    return SummaryCandidate.create(article.id, system, refined, compliant=_length_ok(refined))


def identify_topics(article: Article, tldr: str, gateway: LLMGateway, model: str) -> list[str]:
    """Important TL;DR topics as a deduplicated, order-preserving list."""
    text = _complete_text(gateway, model, prompts.render_topics(article.text, tldr))
    topics: list[str] = []
    seen = set()
    for raw in text.split(","):
        topic = raw.strip().rstrip(".").strip()
        if topic and topic.lower() not in seen:
            topics.append(topic)
            seen.add(topic.lower())
    if not topics:
        raise InquestError(f"topic identification returned no topics for {article.id!r}")
    return topics


def generate_corrupted(
    article: Article,
    topics: Sequence[str],
    gateway: LLMGateway,
    model: str,
    combined: bool = True,
) -> SummaryCandidate:
    """Generate the topic-omitting baseline candidate.

    ``combined`` injects the topics as one comma-joined string; the
    alternative renders them one per line. The refinement pass always runs
    exactly once for corrupted candidates.
    """
    if not topics:
        raise InquestError("corruption needs at least one topic to omit")
    topic_field = ", ".join(topics) if combined else "\n".join(topics)
    draft = _complete_text(gateway, model, prompts.render_corruption(article.text, topic_field))
    refined = _complete_text(gateway, model, prompts.render_refinement(draft))
    return SummaryCandidate.create(article.id, "corrupted", refined, compliant=_length_ok(refined))


# --------------------------------------------------------------------------
# Answered-question detection
# --------------------------------------------------------------------------

NO_ANSWER = "no answer"


def filter_article_answered(
    article: Article,
    questions: Sequence[QuestionRecord],
    gateway: LLMGateway,
    model: str,
) -> list[QuestionRecord]:
    """Drop questions the source article itself does not answer.

    A completion equal to "No Answer" (trimmed, case-insensitive) drops the
    question; any other response keeps it. Questions whose check fails are
    excluded as undetermined and logged.
    """
    kept: list[QuestionRecord] = []
    for q in questions:
        try:
            text = _complete_text(
                gateway, model, prompts.render_answer_in_article(article.text, q.text)
            )
        except (TransportError, ReplayMissError, InquestError) as exc:
            log.warning("answerability check undetermined for %s: %s", q.id, exc)
            continue
        if text.strip().lower() == NO_ANSWER:
            continue
        kept.append(q)
    return kept


def _normalize(text: str) -> str:
    return " ".join(_TOKEN_RE.findall(text.lower()))


def _token_overlap(a: str, b: str) -> float:
    ta, tb = set(_TOKEN_RE.findall(a.lower())), set(_TOKEN_RE.findall(b.lower()))
    if not ta or not tb:
        return 0.0
    return len(ta & tb) / max(len(ta), len(tb))


def split_question_list(text: str) -> list[str]:
    """Split an echoed question list on question marks, tolerating commas,
    numbering and newlines between items."""
    items = []
    for m in re.finditer(r"[^?]*\?", text):
        piece = m.group().strip()
        piece = re.sub(r"^[\s,;]*(?:\d+[.)]\s*|[-*]\s*)?", "", piece).strip(" \"'")
        if piece:
            items.append(piece if piece.endswith("?") else piece + "?")
    return items


MATCH_THRESHOLD = 0.8


def match_questions(
    returned: Iterable[str], questions: Sequence[QuestionRecord]
) -> set[str]:
    """Map echoed question strings back to question ids.

    Normalized exact match first; otherwise the highest token-overlap above
    the threshold. Unmatched strings are discarded with a warning, keeping
    the answered set a subset of the input."""
    by_norm = {_normalize(q.text): q.id for q in questions}
    matched: set[str] = set()
    for text in returned:
        norm = _normalize(text)
        if norm in by_norm:
            matched.add(by_norm[norm])
            continue
        scored = sorted(
            ((_token_overlap(text, q.text), q.id) for q in questions), reverse=True
        )
        if scored and scored[0][0] >= MATCH_THRESHOLD:
            matched.add(scored[0][1])
        else:
            log.warning("discarding unmatched returned question: %.80s", text)
    return matched


def detect_summary_answered(
    candidate: SummaryCandidate,
    questions: Sequence[QuestionRecord],
    scores: Mapping[str, int],
    gateway: LLMGateway,
    model: str,
) -> SummaryEvalRecord:
    """Ask which of the (article-answerable) questions the candidate answers.

    ``scores`` maps question id to its salience (human-aggregated or
    predicted, chosen by the caller). A failed completion yields an empty
    record flagged as failed.
    """
    try:
        text = _complete_text(
            gateway,
            model,
            prompts.render_answered_by_summary(candidate.text, [q.text for q in questions]),
        )
    except (TransportError, ReplayMissError, InquestError) as exc:
        log.warning("answer detection failed for %s/%s: %s", candidate.article_id,
                    candidate.system, exc)
        return SummaryEvalRecord(candidate.article_id, candidate.system,
                                 frozenset(), (), failed=True)
    answered = match_questions(split_question_list(text), questions)
    answered_scores = tuple(scores[qid] for qid in sorted(answered) if qid in scores)
    return SummaryEvalRecord(candidate.article_id, candidate.system,
                             frozenset(answered), answered_scores)


# --------------------------------------------------------------------------
# Scoring and ranking
# --------------------------------------------------------------------------


def summ_scr(records: Sequence[SummaryEvalRecord]) -> SummScrReport:
    """Per-system score: (1/n) * sum over instances of summed answered salience,
    n being that system's number of expansion instances."""
    if not records:
        raise InquestError("summ_scr needs at least one evaluation record")
    by_system: dict[str, list[SummaryEvalRecord]] = defaultdict(list)
    for rec in records:
        by_system[rec.system].append(rec)
    scores = {}
    counts = {}
    for system, recs in sorted(by_system.items()):
        n = len(recs)
        total = sum(sum(r.answered_scores) for r in recs)
        scores[system] = total / n
        counts[system] = n
    return SummScrReport(scores=scores, counts=counts)


def majority_ranking(
    rankings: Iterable[RankingAnnotation],
) -> dict[tuple[str, str], float]:
    """Majority (modal) human score per (article, system); ties on the mode
    fall back to the mean of the scores."""
    grouped: dict[tuple[str, str], list[int]] = defaultdict(list)
    for r in rankings:
        grouped[(r.article_id, r.system)].append(r.score)
    majority: dict[tuple[str, str], float] = {}
    for key, votes in grouped.items():
        counts = Counter(votes).most_common()
        top = [score for score, c in counts if c == counts[0][1]]
        majority[key] = float(top[0]) if len(top) == 1 else statistics.mean(votes)
    return majority


def rank_and_correlate(
    records: Sequence[SummaryEvalRecord],
    human_rankings: Iterable[RankingAnnotation],
) -> RankingOutcome:
    """Order systems by SummScr and correlate with the human majority ranking.

    Kendall's tau-b is computed over (article, system) pairs: the instance's
    summed answered salience against the human majority score.
    """
    report = summ_scr(records)
    if len(report.scores) < 2:
        raise InquestError("ranking needs at least two systems")

    tied = len(set(report.scores.values())) < len(report.scores)
    if tied:
        log.warning("SummScr tie between systems; ordering alphabetically within ties")
    order = tuple(sorted(report.scores, key=lambda s: (-report.scores[s], s)))

    majority = majority_ranking(human_rankings)
    xs, ys, ids = [], [], []
    for rec in sorted(records, key=lambda r: (r.article_id, r.system)):
        key = (rec.article_id, rec.system)
        if key in majority:
            xs.append(float(sum(rec.answered_scores)))
            ys.append(majority[key])
            ids.append(f"{rec.article_id}:{rec.system}")
    if len(xs) < 2:
        raise InquestError("not enough overlapping (article, system) pairs for tau")
    tau = kendall_tau(PairedSeries.of(xs, ys, ids))
    return RankingOutcome(order=order, tau=tau, tied=tied)
