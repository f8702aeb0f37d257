"""End-to-end run: generate questions, gate validity, predict salience,
compute metrics, emit one report document.

With a replay store and temperature-0 prompts the whole run is
byte-deterministic, which is what the committed-fixture CI check pins.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from pathlib import Path

from . import qgen, salience
from .corpus import Corpus, load_articles, question_to_dict
from .errors import UndefinedCorrelationError
from .llmgate import LLMGateway
from .metrics import EvaluationReport, PairedSeries, RatingMatrix, krippendorff_alpha_ordinal, mae, macro_f1, spearman_rho


def _file_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_pipeline(
    articles_path: str | Path,
    cache_dir: str | Path,
    model: str,
    strategy: str = "zero",
    mode: str = "full_article",
    n_questions: int = 5,
    gold_labels: dict[str, int] | None = None,
    gateway_mode: str = "replay",
    out_path: str | Path | None = None,
) -> bytes:
    """Run the full question pipeline and return the report as bytes.

    ``gold_labels`` (question id -> aggregated human label) unlocks the
    comparison metrics; without it the report carries the predicted label
    distribution only.
    """
    articles_path = Path(articles_path)
    gateway = LLMGateway(cache_dir=cache_dir, mode=gateway_mode)
    articles = load_articles(articles_path)

    questions = []
    for article_id in sorted(articles):
        questions.extend(
            qgen.generate_for_article(
                articles[article_id], mode, gateway, model, n_questions, keep_partial=True
            )
        )

    scored = salience.score_questions(questions, gateway, model, strategy)

    labels = {s.question_id: s.label for s in scored if s.label is not None}
    failures = sorted(s.question_id for s in scored if s.label is None)
    distribution = Counter(labels.values())

    metrics: dict[str, float] = {
        "questions_generated": float(len(questions)),
        "questions_scored": float(len(labels)),
        "questions_failed": float(len(failures)),
        "predicted_invalid": float(distribution.get(0, 0)),
    }
    for score in range(1, 6):
        metrics[f"predicted_{score}"] = float(distribution.get(score, 0))

    if gold_labels:
        # Salience comparison covers questions both sides call valid (1..5);
        # the validity gate itself is summarized by the invalid counts above.
        shared = sorted(
            qid for qid in set(labels) & set(gold_labels)
            if labels[qid] != 0 and gold_labels[qid] != 0
        )
        if shared:
            pred = [labels[qid] for qid in shared]
            gold = [gold_labels[qid] for qid in shared]
            metrics["n_compared"] = float(len(shared))
            metrics["macro_f1"] = macro_f1(pred, gold, label_set=range(1, 6))
            if len(shared) >= 2:
                metrics["mae"] = mae(PairedSeries.of(pred, gold))
            if len(shared) >= 3:
                try:
                    metrics["spearman_rho"] = spearman_rho(PairedSeries.of(pred, gold)).rho
                except UndefinedCorrelationError:
                    pass
            triples = [(qid, "model", labels[qid]) for qid in shared]
            triples += [(qid, "human", gold_labels[qid]) for qid in shared]
            metrics["alpha_vs_gold"] = krippendorff_alpha_ordinal(
                RatingMatrix.from_annotations(triples)
            )

    report = EvaluationReport(
        metrics=metrics,
        dataset_hash=_file_hash(articles_path),
        providers=(model, gateway.config.embedding_model),
        seed=None,
        notes={"strategy": strategy, "mode": mode},
    )

    document = {
        "report": report.to_dict(),
        "questions": [question_to_dict(q) for q in questions],
        "labels": {qid: labels[qid] for qid in sorted(labels)},
        "failures": failures,
    }
    payload = (json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode()
    if out_path is not None:
        Path(out_path).write_bytes(payload)
    return payload
