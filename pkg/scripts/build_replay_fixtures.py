#!/usr/bin/env python3
"""Regenerate the committed replay fixtures under tests/fixtures/pipeline/.

The store is keyed by the real prompt renders, so rerun this script whenever
a prompt template changes. Responses are canned but realistic; scores are
spread across the scale so the downstream metrics are non-degenerate.
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from inquest import prompts  # noqa: E402
from inquest.corpus import Article, Context, probe_anchors, write_jsonl  # noqa: E402
from inquest.llmgate import PromptRequest, record_completion  # noqa: E402
from inquest.qgen import build_generation_request, GenerationJob  # noqa: E402

MODEL = "fixture-model"
WEAK_MODEL = "weak-fixture-model"
OUT = ROOT / "tests" / "fixtures" / "pipeline"
SUMM_OUT = ROOT / "tests" / "fixtures" / "summeval"

ARTICLES = [
    Article(
        id="art-alpha",
        source="DCQA",
        sentences=(
            "The city council approved a new transit plan on Monday.",
            "The plan reroutes three bus lines through the riverfront district.",
            "Funding comes from a state grant awarded last spring.",
            "Opponents filed a petition demanding an environmental review.",
        ),
    ),
    Article(
        id="art-beta",
        source="DCQA",
        sentences=(
            "A regional bank reported a sudden outflow of deposits this week.",
            "Regulators met with the bank's executives behind closed doors.",
            "The bank's shares fell eleven percent in two days.",
            "A rescue consortium of larger lenders is reportedly forming.",
            "Analysts disagree about whether the intervention will calm depositors.",
            "The treasury declined to comment on any federal backstop.",
        ),
    ),
]

# Five questions per probe; texts crafted so ids and anchors stay readable.
QUESTION_SETS = {
    ("art-alpha", 4): [
        "Who organized the petition against the plan?",
        "What environmental concerns does the riverfront rerouting raise?",
        "How many signatures does the petition carry?",
        "Will the review delay the grant funding?",
        "What happens to the bus lines during the review?",
    ],
    ("art-beta", 4): [
        "Which lenders are joining the rescue consortium?",
        "How much capital would the consortium provide?",
        "Who is coordinating the consortium talks?",
        "What triggered the deposit outflow in the first place?",
        "Does the consortium plan require regulatory approval?",
    ],
    ("art-beta", 6): [
        "Why did the treasury decline to comment?",
        "What would a federal backstop involve?",
        "Have depositors kept withdrawing since the meeting?",
        "Which analysts expect the intervention to fail?",
        "How does this compare to previous bank rescues?",
    ],
}

# Validity verdicts and salience scores per question index, per probe.
VALIDITY = {
    ("art-alpha", 4): ["1", "1", "1", "1", "0"],
    ("art-beta", 4): ["1", "1", "0", "1", "1"],
    ("art-beta", 6): ["1", "1", "1", "1", "1"],
}
SALIENCE = {
    ("art-alpha", 4): [4, 5, 2, 3, None],
    ("art-beta", 4): [5, 4, None, 5, 3],
    ("art-beta", 6): [3, 4, 2, 2, 4],
}
# Gold labels the fixture annotators agree on (two raters each).
GOLD = {
    ("art-alpha", 4): [4, 4, 2, 3, 0],
    ("art-beta", 4): [5, 3, 0, 4, 3],
    ("art-beta", 6): [3, 5, 2, 1, 4],
}


def main() -> None:
    replay = OUT / "replay"
    gold = OUT / "gold"
    if OUT.exists():
        shutil.rmtree(OUT)
    replay.mkdir(parents=True)
    gold.mkdir(parents=True)

    write_jsonl(OUT / "articles.jsonl", (
        {"id": a.id, "source": a.source, "sentences": list(a.sentences)} for a in ARTICLES
    ))
    write_jsonl(gold / "articles.jsonl", (
        {"id": a.id, "source": a.source, "sentences": list(a.sentences)} for a in ARTICLES
    ))

    question_rows = []
    gold_rows = []
    for article in ARTICLES:
        for anchor in probe_anchors(article, "full_article"):
            key = (article.id, anchor)
            context = Context.from_article(article, anchor)
            job = GenerationJob(context, model=MODEL, n_questions=5)
            listing = "\n".join(
                f"{i}. {q}" for i, q in enumerate(QUESTION_SETS[key], start=1)
            )
            record_completion(replay, build_generation_request(job), listing)

            for i, question in enumerate(QUESTION_SETS[key]):
                qid = f"{article.id}-s{anchor}-{MODEL}-q{i + 1}"
                question_rows.append(
                    {
                        "id": qid,
                        "article_id": article.id,
                        "anchor_index": anchor,
                        "text": question,
                        "generator": f"model:{MODEL}",
                    }
                )
                record_completion(
                    replay,
                    PromptRequest(
                        model=MODEL,
                        messages=prompts.render_validity(question, context.anchor),
                        temperature=0.0,
                        max_tokens=8,
                    ),
                    VALIDITY[key][i],
                )
                score = SALIENCE[key][i]
                if score is not None:
                    record_completion(
                        replay,
                        PromptRequest(
                            model=MODEL,
                            messages=prompts.render_salience_zero(context.full_text, question),
                            temperature=0.0,
                            max_tokens=512,
                        ),
                        f"Score: {score}",
                    )
                gold_label = GOLD[key][i]
                for rater in ("gold-a", "gold-b"):
                    gold_rows.append(
                        {
                            "question_id": qid,
                            "annotator_id": rater,
                            "score": gold_label,
                            "rationale": "fixture gold label",
                        }
                    )

    write_jsonl(gold / "questions.jsonl", question_rows)
    write_jsonl(gold / "salience.jsonl", gold_rows)
    n_records = len(list(replay.glob("*.json")))
    print(f"wrote {n_records} replay records and {len(question_rows)} gold questions to {OUT}")


def words(n: int, prefix: str) -> str:
    return " ".join(f"{prefix}{i}" for i in range(n))


def build_summeval_fixture() -> None:
    """Single-article three-system run: expander compliant on the first try,
    weak expander needing one refinement, corrupted always refined."""
    if SUMM_OUT.exists():
        shutil.rmtree(SUMM_OUT)
    replay = SUMM_OUT / "replay"
    corpus_dir = SUMM_OUT / "corpus"
    replay.mkdir(parents=True)
    corpus_dir.mkdir(parents=True)

    article = Article(
        id="news-1",
        source="DivArticle",
        sentences=(
            "The transit authority unveiled a sweeping expansion plan.",
            "The plan adds two rail lines along the riverfront corridor.",
            "A bond measure will cover most of the construction cost.",
            "Community groups demanded hearings before any groundbreaking.",
        ),
    )
    tldr = Article(
        id="news-1-tldr",
        source="DivTLDR",
        sentences=(
            "The transit authority proposed two new riverfront rail lines.",
            "Funding relies on a bond measure that still needs approval.",
        ),
    )
    questions = [
        {"id": "q-t1", "article_id": tldr.id, "anchor_index": 1,
         "text": "Where exactly would the new rail lines run?", "generator": f"model:{MODEL}"},
        {"id": "q-t2", "article_id": tldr.id, "anchor_index": 2,
         "text": "Who has to approve the bond measure?", "generator": f"model:{MODEL}"},
    ]
    salience = []
    for qid, score in (("q-t1", 5), ("q-t2", 3)):
        for rater in ("h1", "h2"):
            salience.append({"question_id": qid, "annotator_id": rater,
                             "score": score, "rationale": "fixture"})
    rankings = []
    for rater in ("r1", "r2", "r3"):
        for system, score in (("expander", 3), ("weak_expander", 2), ("corrupted", 1)):
            rankings.append({"article_id": article.id, "annotator_id": rater,
                             "system": system, "score": score})

    def art_dict(a: Article) -> dict:
        return {"id": a.id, "source": a.source, "sentences": list(a.sentences)}

    write_jsonl(SUMM_OUT / "articles.jsonl", [art_dict(article)])
    write_jsonl(corpus_dir / "articles.jsonl", [art_dict(article), art_dict(tldr)])
    write_jsonl(corpus_dir / "questions.jsonl", questions)
    write_jsonl(corpus_dir / "salience.jsonl", salience)
    write_jsonl(corpus_dir / "rankings.jsonl", rankings)

    def completion(model: str, messages, text: str, max_tokens: int = 1024):
        record_completion(
            replay,
            PromptRequest(model=model, messages=messages, temperature=0.0,
                          max_tokens=max_tokens),
            text,
        )

    tldr_text = tldr.text
    # both TL;DR questions are answerable from the article itself
    completion(MODEL, prompts.render_answer_in_article(article.text, questions[0]["text"]),
               "The plan adds two rail lines along the riverfront corridor.")
    completion(MODEL, prompts.render_answer_in_article(article.text, questions[1]["text"]),
               "A bond measure will cover most of the construction cost.")

    expander_text = words(240, "strong")
    completion(MODEL, prompts.render_expansion(article.text, tldr_text), expander_text)

    weak_draft = words(300, "weak")
    weak_text = words(240, "weakfixed")
    completion(WEAK_MODEL, prompts.render_expansion(article.text, tldr_text), weak_draft)
    completion(WEAK_MODEL, prompts.render_refinement(weak_draft), weak_text)

    completion(MODEL, prompts.render_topics(article.text, tldr_text),
               "rail lines, riverfront corridor, bond measure")
    corrupted_draft = words(235, "corrupt")
    corrupted_text = words(233, "corruptfixed")
    completion(MODEL, prompts.render_corruption(
        article.text, "rail lines, riverfront corridor, bond measure"), corrupted_draft)
    completion(MODEL, prompts.render_refinement(corrupted_draft), corrupted_text)

    q_texts = [q["text"] for q in questions]
    completion(MODEL, prompts.render_answered_by_summary(expander_text, q_texts),
               f"{q_texts[0]}, {q_texts[1]}")
    completion(MODEL, prompts.render_answered_by_summary(weak_text, q_texts), q_texts[0])
    completion(MODEL, prompts.render_answered_by_summary(corrupted_text, q_texts),
               "None of the provided questions are answered.")

    n_records = len(list(replay.glob("*.json")))
    print(f"wrote {n_records} replay records to {SUMM_OUT}")


if __name__ == "__main__":
    main()
    build_summeval_fixture()
