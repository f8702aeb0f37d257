"""Canonical data model plus dataset ingestion, aggregation, splits and export.

Corpora live on disk as a directory of line-delimited JSON files
(``articles.jsonl``, ``questions.jsonl``, ``salience.jsonl``,
``answerability.jsonl``, ``rankings.jsonl``) joined by explicit ids so
annotations can be collected incrementally. Once loaded, a corpus is
immutable and safe to share across threads.
"""

from __future__ import annotations

import json
import random
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import CorpusError, IntegrityError

ARTICLE_SOURCES = ("DCQA", "TEDQ", "DivArticle", "DivTLDR", "other")

SALIENCE_SCALE = (0, 1, 2, 3, 4, 5)  # 0 marks an invalid question
ANSWERABILITY_SCALE = (0, 1, 2, 3)
RANKING_SCALE = (1, 2, 3)

_GENERATOR_RE = re.compile(r"^(human|model:\S+)$")


def count_words(text: str) -> int:
    """Whitespace-token word count, used for all length bookkeeping."""
    return len(text.split())


@dataclass(frozen=True)
class Article:
    """A source document as an ordered list of 1-indexed sentences."""

    id: str
    source: str
    sentences: tuple[str, ...]
    title: str | None = None

    def __post_init__(self):
        if self.source not in ARTICLE_SOURCES:
            raise CorpusError(f"article {self.id!r}: unknown source {self.source!r}")
        if not self.sentences:
            raise CorpusError(f"article {self.id!r}: must have at least one sentence")
        for i, s in enumerate(self.sentences, start=1):
            if not s.strip():
                raise CorpusError(f"article {self.id!r}: sentence {i} is empty")

    def __len__(self) -> int:
        return len(self.sentences)

    def sentence(self, index: int) -> str:
        """Return the sentence at a 1-based index."""
        if not 1 <= index <= len(self.sentences):
            raise CorpusError(
                f"article {self.id!r}: sentence index {index} out of range 1..{len(self.sentences)}"
            )
        return self.sentences[index - 1]

    @property
    def text(self) -> str:
        return " ".join(self.sentences)


@dataclass(frozen=True)
class Context:
    """An anchor sentence plus everything the reader has seen before it."""

    article_id: str
    anchor_index: int
    preceding: str
    anchor: str

    def __post_init__(self):
        if self.anchor_index < 1:
            raise CorpusError(f"context for {self.article_id!r}: anchor_index must be >= 1")
        if not self.anchor.strip():
            raise CorpusError(f"context for {self.article_id!r}: anchor sentence is empty")

    @classmethod
    def from_article(cls, article: Article, anchor_index: int) -> "Context":
        anchor = article.sentence(anchor_index)
        preceding = " ".join(article.sentences[: anchor_index - 1])
        return cls(article.id, anchor_index, preceding, anchor)

    @property
    def full_text(self) -> str:
        """Preceding context and anchor joined the same way articles join sentences."""
        if not self.preceding:
            return self.anchor
        return f"{self.preceding} {self.anchor}"

    def subsequent(self, article: Article) -> str:
        """Text of the sentences after the anchor (empty for the last sentence)."""
        if article.id != self.article_id:
            raise CorpusError("context/article mismatch")
        return " ".join(article.sentences[self.anchor_index:])


@dataclass(frozen=True)
class QuestionRecord:
    """One inquisitive question tied to the context at which it was evoked."""

    id: str
    context: Context
    text: str
    generator: str
    question_type: str | None = None

    def __post_init__(self):
        if not _GENERATOR_RE.match(self.generator):
            raise CorpusError(
                f"question {self.id!r}: generator must be 'human' or 'model:<name>', got {self.generator!r}"
            )
        if not self.text.strip():
            raise CorpusError(f"question {self.id!r}: empty text")

    @property
    def malformed(self) -> bool:
        """A well-formed question ends with a question mark."""
        return not self.text.rstrip().endswith("?")


@dataclass(frozen=True)
class SalienceAnnotation:
    question_id: str
    annotator_id: str
    score: int
    rationale: str

    def __post_init__(self):
        if self.score not in SALIENCE_SCALE:
            raise CorpusError(
                f"salience for {self.question_id!r}: score {self.score} not in 0..5"
            )
        if not self.rationale.strip():
            raise CorpusError(f"salience for {self.question_id!r}: rationale required")


@dataclass(frozen=True)
class AnswerabilityAnnotation:
    question_id: str
    annotator_id: str
    score: int

    def __post_init__(self):
        if self.score not in ANSWERABILITY_SCALE:
            raise CorpusError(
                f"answerability for {self.question_id!r}: score {self.score} not in 0..3"
            )


@dataclass(frozen=True)
class RankingAnnotation:
    """A per-annotator quality score for one candidate summary of one article."""

    article_id: str
    annotator_id: str
    system: str
    score: int

    def __post_init__(self):
        if self.score not in RANKING_SCALE:
            raise CorpusError(
                f"ranking for {self.article_id!r}/{self.system!r}: score {self.score} not in 1..3"
            )


@dataclass(frozen=True)
class Corpus:
    """Immutable in-memory view of one dataset directory."""

    articles: Mapping[str, Article]
    questions: Mapping[str, QuestionRecord]
    salience: tuple[SalienceAnnotation, ...] = ()
    answerability: tuple[AnswerabilityAnnotation, ...] = ()
    rankings: tuple[RankingAnnotation, ...] = ()

    def validate(self) -> None:
        """Check referential integrity; raises IntegrityError listing bad ids."""
        dangling = sorted(
            {q.context.article_id for q in self.questions.values()} - set(self.articles)
        )
        if dangling:
            raise IntegrityError(f"questions reference unknown articles: {dangling}")
        known = set(self.questions)
        bad = sorted({a.question_id for a in self.salience} - known)
        if bad:
            raise IntegrityError(f"salience annotations reference unknown questions: {bad}")
        bad = sorted({a.question_id for a in self.answerability} - known)
        if bad:
            raise IntegrityError(f"answerability annotations reference unknown questions: {bad}")
        bad = sorted({r.article_id for r in self.rankings} - set(self.articles))
        if bad:
            raise IntegrityError(f"rankings reference unknown articles: {bad}")

    def salience_by_question(self) -> dict[str, list[SalienceAnnotation]]:
        grouped: dict[str, list[SalienceAnnotation]] = defaultdict(list)
        for ann in self.salience:
            grouped[ann.question_id].append(ann)
        return dict(grouped)

    def answerability_by_question(self) -> dict[str, list[AnswerabilityAnnotation]]:
        grouped: dict[str, list[AnswerabilityAnnotation]] = defaultdict(list)
        for ann in self.answerability:
            grouped[ann.question_id].append(ann)
        return dict(grouped)

    def aggregated_salience(self) -> dict[str, int]:
        """Gold label per annotated question; 0 means aggregated-invalid."""
        return {
            qid: aggregate_salience([a.score for a in anns])
            for qid, anns in self.salience_by_question().items()
        }

    def valid_question_ids(self) -> set[str]:
        return {qid for qid, label in self.aggregated_salience().items() if label != 0}


# --------------------------------------------------------------------------
# Sentence segmentation
# --------------------------------------------------------------------------

# Periods after these tokens never end a sentence. Entries are lowercase,
# without the trailing period; multi-dot abbreviations keep interior dots.
ABBREVIATIONS = frozenset(
    {
        "mr", "mrs", "ms", "dr", "prof", "rev", "hon", "st", "sr", "jr",
        "gen", "gov", "sen", "rep", "sgt", "capt", "col", "lt", "cmdr",
        "inc", "ltd", "co", "corp", "dept", "univ", "assn", "bros",
        "vs", "etc", "approx", "est", "min", "max",
        "e.g", "i.e", "cf", "al", "et.al",
        "u.s", "u.k", "u.n", "d.c", "a.m", "p.m",
        "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sept", "sep",
        "oct", "nov", "dec",
        "mt", "ft", "no",
    }
)

_TERMINAL = re.compile(r"[.!?]+[\"'”’)\]]*")
_OPENER = re.compile(r"[\"'“‘(\[]*[A-Z]")
_LAST_TOKEN = re.compile(r"([A-Za-z](?:[A-Za-z.]*[A-Za-z])?)\.?\Z")


def segment_sentences(raw_text: str) -> list[str]:
    """Deterministic rule-based sentence split with 1-based downstream indexing.

    A boundary is terminal punctuation (``.``, ``!``, ``?``, possibly followed
    by closing quotes/brackets) followed by whitespace and a capital letter or
    opening quote. A ``.`` does not split when the preceding token is a known
    abbreviation. Text without any boundary comes back as a single sentence.
    """
    text = raw_text.strip()
    if not text:
        raise CorpusError("cannot segment empty text")

    cuts: list[int] = []
    for m in _TERMINAL.finditer(text):
        end = m.end()
        if end >= len(text) or not text[end].isspace():
            continue
        rest = text[end:].lstrip()
        if not rest or not _OPENER.match(rest):
            continue
        if m.group().startswith("."):
            before = text[: m.start() + 1]  # include the period for e.g./i.e. style tokens
            tok = _LAST_TOKEN.search(before[:-1] if before.endswith(".") else before)
            word = tok.group(1).lower() if tok else ""
            if word in ABBREVIATIONS:
                continue
        cuts.append(end)

    sentences = []
    start = 0
    for cut in cuts:
        piece = text[start:cut].strip()
        if piece:
            sentences.append(piece)
        start = cut
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


# --------------------------------------------------------------------------
# Anchor probes
# --------------------------------------------------------------------------

PROBE_START = 4
PROBE_STEP = 2
PROBE_END = 16


def probe_anchors(article: Article, mode: str) -> list[int]:
    """Anchor indices at which questions get generated.

    ``full_article`` probes sentences 4, 6, 8, ... up to sentence 16 or the
    article end, whichever comes first; articles shorter than 4 sentences
    yield no probes. ``tldr`` probes every sentence.
    """
    if mode == "tldr":
        return list(range(1, len(article) + 1))
    if mode != "full_article":
        raise ValueError(f"unknown probe mode {mode!r}")
    cap = min(PROBE_END, len(article))
    return list(range(PROBE_START, cap + 1, PROBE_STEP))


# --------------------------------------------------------------------------
# Label aggregation
# --------------------------------------------------------------------------


def aggregate_salience(scores: Sequence[int]) -> int:
    """Collapse per-annotator salience scores into one gold label.

    If at least half of the annotators marked the question invalid (0) the
    aggregate is 0. Otherwise the valid scores are averaged and rounded to
    the closest integer, with .5 ties rounded away from zero.
    """
    if not scores:
        raise CorpusError("cannot aggregate an empty annotation list")
    for s in scores:
        if s not in SALIENCE_SCALE:
            raise CorpusError(f"salience score {s} not in 0..5")
    invalid = sum(1 for s in scores if s == 0)
    if 2 * invalid >= len(scores):
        return 0
    valid = [s for s in scores if s != 0]
    mean = Decimal(sum(valid)) / Decimal(len(valid))
    return int(mean.quantize(Decimal("1"), rounding=ROUND_HALF_UP))


# --------------------------------------------------------------------------
# Stratified splits
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetSplit:
    """Article-stratified partition of the valid questions."""

    train: frozenset[str]
    validation: frozenset[str]
    test: frozenset[str]
    seed: int
    articles: Mapping[str, str] = field(default_factory=dict)  # article id -> split name

    def __post_init__(self):
        pools = (self.train, self.validation, self.test)
        names = ("train", "validation", "test")
        for i in range(len(pools)):
            for j in range(i + 1, len(pools)):
                overlap = pools[i] & pools[j]
                if overlap:
                    raise CorpusError(
                        f"splits {names[i]} and {names[j]} share questions: {sorted(overlap)[:5]}"
                    )

    def split_of(self, question_id: str) -> str | None:
        for name in ("train", "validation", "test"):
            if question_id in getattr(self, name):
                return name
        return None


def split_stratified(
    corpus: Corpus,
    ratios: Mapping[str, float],
    seed: int,
) -> DatasetSplit:
    """Randomly assign whole articles to train/validation/test under a seed.

    Target sizes are measured in valid questions (aggregated label != 0);
    shuffled articles go one at a time to the split furthest below its
    target, so achieved sizes deviate by at most one article's worth.
    """
    names = ("train", "validation", "test")
    missing = [n for n in names if n not in ratios]
    if missing:
        raise CorpusError(f"ratios missing entries for {missing}")
    total_ratio = sum(ratios[n] for n in names)
    if abs(total_ratio - 1.0) > 1e-9:
        raise CorpusError(f"ratios must sum to 1, got {total_ratio}")
    if len(corpus.articles) < len(names):
        raise CorpusError(
            f"need at least {len(names)} articles to split, corpus has {len(corpus.articles)}"
        )

    labels = corpus.aggregated_salience()
    valid_by_article: dict[str, list[str]] = defaultdict(list)
    for qid, label in labels.items():
        if label != 0:
            valid_by_article[corpus.questions[qid].context.article_id].append(qid)

    article_ids = sorted(corpus.articles)
    rng = random.Random(seed)
    rng.shuffle(article_ids)

    total_valid = sum(len(v) for v in valid_by_article.values())
    targets = {n: ratios[n] * total_valid for n in names}
    counts = {n: 0 for n in names}
    assignment: dict[str, str] = {}
    for aid in article_ids:
        deficits = [(targets[n] - counts[n], -names.index(n), n) for n in names]
        deficits.sort(reverse=True)
        chosen = deficits[0][2]
        assignment[aid] = chosen
        counts[chosen] += len(valid_by_article.get(aid, []))

    buckets: dict[str, set[str]] = {n: set() for n in names}
    for aid, name in assignment.items():
        buckets[name].update(valid_by_article.get(aid, []))

    return DatasetSplit(
        train=frozenset(buckets["train"]),
        validation=frozenset(buckets["validation"]),
        test=frozenset(buckets["test"]),
        seed=seed,
        articles=assignment,
    )


# --------------------------------------------------------------------------
# Instruction-tuning export
# --------------------------------------------------------------------------


def finetune_input(context: Context, question_text: str) -> str:
    """The exact input field layout used by instruction-tuning records."""
    return f"article: {context.full_text}\nquestion: {question_text}"


def export_finetune_data(
    corpus: Corpus,
    split: DatasetSplit,
    balance: bool = False,
    label_set: Iterable[int] | None = None,
    seed: int | None = None,
) -> list[dict]:
    """Emit {instruction, input, output} records for the training split.

    With ``balance`` set, records of under-represented labels are duplicated
    round-robin (order shuffled under ``seed``, defaulting to the split seed)
    until every label count equals the majority count. ``label_set`` declares
    which labels must be present; by default the labels observed in the train
    split. A declared label with no train examples is an error.
    """
    from . import prompts  # local import: prompts is a leaf module

    labels = corpus.aggregated_salience()
    train_qids = [qid for qid in corpus.questions if qid in split.train]
    if not train_qids:
        raise CorpusError("train split is empty")

    records = []
    by_label: dict[int, list[dict]] = defaultdict(list)
    for qid in train_qids:
        q = corpus.questions[qid]
        label = labels[qid]
        rec = {
            "instruction": prompts.FINETUNE_INSTRUCTION,
            "input": finetune_input(q.context, q.text),
            "output": str(label),
        }
        records.append(rec)
        by_label[label].append(rec)

    if not balance:
        return records

    wanted = sorted(label_set) if label_set is not None else sorted(by_label)
    for label in wanted:
        if label not in by_label:
            raise CorpusError(f"cannot balance: label {label} absent from train split")

    majority = max(len(by_label[l]) for l in wanted)
    rng = random.Random(split.seed if seed is None else seed)
    out = [r for r in records if int(r["output"]) in set(wanted)]
    for label in wanted:
        pool = list(by_label[label])
        rng.shuffle(pool)
        need = majority - len(by_label[label])
        for i in range(need):
            out.append(dict(pool[i % len(pool)]))
    return out


# --------------------------------------------------------------------------
# JSONL persistence
# --------------------------------------------------------------------------

ARTICLES_FILE = "articles.jsonl"
QUESTIONS_FILE = "questions.jsonl"
SALIENCE_FILE = "salience.jsonl"
ANSWERABILITY_FILE = "answerability.jsonl"
RANKINGS_FILE = "rankings.jsonl"


def _iter_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path.name}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise CorpusError(f"{path.name}:{lineno}: expected an object per line")
            yield lineno, obj


def _require(obj: dict, key: str, path: Path, lineno: int):
    if key not in obj:
        raise CorpusError(f"{path.name}:{lineno}: missing field {key!r}")
    return obj[key]


def load_articles(path: Path) -> dict[str, Article]:
    articles: dict[str, Article] = {}
    for lineno, obj in _iter_jsonl(path):
        try:
            art = Article(
                id=str(_require(obj, "id", path, lineno)),
                source=str(_require(obj, "source", path, lineno)),
                sentences=tuple(_require(obj, "sentences", path, lineno)),
                title=obj.get("title"),
            )
        except CorpusError as exc:
            raise CorpusError(f"{path.name}:{lineno}: {exc}") from exc
        if art.id in articles:
            raise CorpusError(f"{path.name}:{lineno}: duplicate article id {art.id!r}")
        articles[art.id] = art
    return articles


def load_questions(path: Path, articles: Mapping[str, Article]) -> dict[str, QuestionRecord]:
    questions: dict[str, QuestionRecord] = {}
    for lineno, obj in _iter_jsonl(path):
        article_id = str(_require(obj, "article_id", path, lineno))
        if article_id not in articles:
            raise IntegrityError(
                f"{path.name}:{lineno}: question references unknown article {article_id!r}"
            )
        try:
            ctx = Context.from_article(articles[article_id], int(_require(obj, "anchor_index", path, lineno)))
            q = QuestionRecord(
                id=str(_require(obj, "id", path, lineno)),
                context=ctx,
                text=str(_require(obj, "text", path, lineno)),
                generator=str(_require(obj, "generator", path, lineno)),
                question_type=obj.get("question_type"),
            )
        except CorpusError as exc:
            raise CorpusError(f"{path.name}:{lineno}: {exc}") from exc
        if q.id in questions:
            raise CorpusError(f"{path.name}:{lineno}: duplicate question id {q.id!r}")
        questions[q.id] = q
    return questions


def load_corpus(path: str | Path) -> Corpus:
    """Load a corpus directory; absent files are treated as empty."""
    root = Path(path)
    if not root.is_dir():
        raise CorpusError(f"corpus path {root} is not a directory")

    articles_path = root / ARTICLES_FILE
    articles = load_articles(articles_path) if articles_path.exists() else {}
    questions_path = root / QUESTIONS_FILE
    questions = load_questions(questions_path, articles) if questions_path.exists() else {}

    salience = []
    sal_path = root / SALIENCE_FILE
    if sal_path.exists():
        for lineno, obj in _iter_jsonl(sal_path):
            try:
                salience.append(
                    SalienceAnnotation(
                        question_id=str(_require(obj, "question_id", sal_path, lineno)),
                        annotator_id=str(_require(obj, "annotator_id", sal_path, lineno)),
                        score=int(_require(obj, "score", sal_path, lineno)),
                        rationale=str(_require(obj, "rationale", sal_path, lineno)),
                    )
                )
            except CorpusError as exc:
                raise CorpusError(f"{sal_path.name}:{lineno}: {exc}") from exc

    answerability = []
    ans_path = root / ANSWERABILITY_FILE
    if ans_path.exists():
        for lineno, obj in _iter_jsonl(ans_path):
            try:
                answerability.append(
                    AnswerabilityAnnotation(
                        question_id=str(_require(obj, "question_id", ans_path, lineno)),
                        annotator_id=str(_require(obj, "annotator_id", ans_path, lineno)),
                        score=int(_require(obj, "score", ans_path, lineno)),
                    )
                )
            except CorpusError as exc:
                raise CorpusError(f"{ans_path.name}:{lineno}: {exc}") from exc

    rankings = []
    rank_path = root / RANKINGS_FILE
    if rank_path.exists():
        for lineno, obj in _iter_jsonl(rank_path):
            try:
                rankings.append(
                    RankingAnnotation(
                        article_id=str(_require(obj, "article_id", rank_path, lineno)),
                        annotator_id=str(_require(obj, "annotator_id", rank_path, lineno)),
                        system=str(_require(obj, "system", rank_path, lineno)),
                        score=int(_require(obj, "score", rank_path, lineno)),
                    )
                )
            except CorpusError as exc:
                raise CorpusError(f"{rank_path.name}:{lineno}: {exc}") from exc

    corpus = Corpus(
        articles=articles,
        questions=questions,
        salience=tuple(salience),
        answerability=tuple(answerability),
        rankings=tuple(rankings),
    )
    corpus.validate()
    return corpus


def article_to_dict(article: Article) -> dict:
    obj = {"id": article.id, "source": article.source, "sentences": list(article.sentences)}
    if article.title is not None:
        obj["title"] = article.title
    return obj


def question_to_dict(q: QuestionRecord) -> dict:
    obj = {
        "id": q.id,
        "article_id": q.context.article_id,
        "anchor_index": q.context.anchor_index,
        "text": q.text,
        "generator": q.generator,
    }
    if q.question_type is not None:
        obj["question_type"] = q.question_type
    if q.malformed:
        obj["malformed"] = True
    return obj


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
