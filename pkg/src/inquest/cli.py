"""Command-line entry points wiring the modules together over JSONL files."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import corpus as corpus_mod
from . import metrics as metrics_mod
from . import qgen as qgen_mod
from . import salience as salience_mod
from . import summeval as summeval_mod
from .corpus import (
    Context,
    load_articles,
    load_corpus,
    question_to_dict,
    write_jsonl,
)
from .errors import InquestError, UndefinedCorrelationError
from .llmgate import GatewayConfig, LLMGateway
from .pipeline import run_pipeline

log = logging.getLogger(__name__)


def _gateway(cache_dir: str, config_path: str | None, replay: bool) -> LLMGateway:
    config = GatewayConfig.from_file(config_path)
    return LLMGateway(config=config, cache_dir=cache_dir, mode="replay" if replay else "auto")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool):
    """Inquisitive-question salience toolkit."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


# -- question generation ----------------------------------------------------


@main.command("qgen")
@click.argument("articles", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["full", "tldr"]), default="full")
@click.option("--model", required=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--n", "n_questions", default=5, show_default=True)
@click.option("--cache-dir", default=".inquest-cache", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--replay", is_flag=True, help="Never call the network; use the cache only.")
def qgen_command(articles, mode, model, out, n_questions, cache_dir, config_path, replay):
    """Generate anchored questions for every probe point of every article."""
    gateway = _gateway(cache_dir, config_path, replay)
    probe_mode = "full_article" if mode == "full" else "tldr"
    records = []
    for article_id, article in sorted(load_articles(Path(articles)).items()):
        records.extend(
            qgen_mod.generate_for_article(
                article, probe_mode, gateway, model, n_questions, keep_partial=True
            )
        )
    write_jsonl(out, (question_to_dict(q) for q in records))
    click.echo(f"wrote {len(records)} questions to {out}")


# -- salience prediction ------------------------------------------------------


def _load_bank(path: str, gateway: LLMGateway, corpus) -> salience_mod.ExemplarBank:
    """Exemplar bank file: one JSON object per line with article_id,
    anchor_index, question, score, optional rationale/embedding, plus a
    single {"label_frequencies": {...}} line."""
    exemplars: list[salience_mod.Exemplar] = []
    vectors: list = []
    frequencies: dict[int, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if "label_frequencies" in obj:
                frequencies = {int(k): float(v) for k, v in obj["label_frequencies"].items()}
                continue
            ctx = Context.from_article(
                corpus.articles[obj["article_id"]], int(obj["anchor_index"])
            )
            exemplars.append(
                salience_mod.Exemplar(
                    context=ctx,
                    question=obj["question"],
                    score=int(obj["score"]),
                    rationale=obj.get("rationale"),
                    id=obj.get("id", ""),
                )
            )
            vectors.append(obj.get("embedding"))
    if not frequencies:
        from collections import Counter

        frequencies = dict(Counter(e.score for e in exemplars))
    if all(v is not None for v in vectors) and vectors:
        from .llmgate import EmbeddingVector

        embs = tuple(
            EmbeddingVector(tuple(map(float, v)), provider="bank") for v in vectors
        )
        return salience_mod.ExemplarBank(tuple(exemplars), embs, frequencies)
    return salience_mod.build_exemplar_bank(exemplars, frequencies, gateway)


@main.group("salience")
def salience_group():
    """Validity classification and salience prediction."""


@salience_group.command("predict")
@click.option("--strategy", required=True,
              type=click.Choice(["zero", "few", "few-knn", "cot-zero", "cot-few", "endpoint"]))
@click.option("--bank", "bank_path", type=click.Path(exists=True), default=None)
@click.option("--in", "questions_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--model", required=True)
@click.option("--validity/--no-validity", default=True, show_default=True,
              help="Gate questions through the grounding classifier first.")
@click.option("--exemplar-seed", default=0, show_default=True)
@click.option("--cache-dir", default=".inquest-cache", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--replay", is_flag=True)
def salience_predict(strategy, bank_path, questions_path, corpus_dir, out, model,
                     validity, exemplar_seed, cache_dir, config_path, replay):
    """Score questions from a JSONL file; one prediction line per question."""
    gateway = _gateway(cache_dir, config_path, replay)
    strategy = strategy.replace("-", "_")
    corp = load_corpus(corpus_dir)
    questions = list(
        corpus_mod.load_questions(Path(questions_path), corp.articles).values()
    )

    bank = None
    exemplars = None
    frequencies = None
    if bank_path:
        bank = _load_bank(bank_path, gateway, corp)
        frequencies = bank.label_frequencies
        if strategy in ("few", "cot_few"):
            per_label = (
                salience_mod.FEW_SHOT_PER_LABEL if strategy == "few" else 1
            )
            exemplars = salience_mod.choose_few_shot_exemplars(
                bank.exemplars,
                per_label=per_label,
                seed=exemplar_seed,
                require_rationale=strategy == "cot_few",
            )
    results = salience_mod.score_questions(
        questions, gateway, model, strategy,
        exemplars=exemplars, bank=bank, label_frequencies=frequencies,
        check_validity=validity,
    )
    rows = []
    for r in results:
        row = {"question_id": r.question_id, "label": r.label}
        if r.prediction is not None:
            row.update(
                strategy=r.prediction.strategy,
                score=r.prediction.score,
                prompt_key=r.prediction.prompt_key,
            )
            if r.prediction.rationale is not None:
                row["rationale"] = r.prediction.rationale
        if r.error:
            row["error"] = r.error
        rows.append(row)
    write_jsonl(out, rows)
    click.echo(f"wrote {len(rows)} predictions to {out}")


# -- metrics ------------------------------------------------------------------


def _dataset_hash(paths: list[str]) -> str:
    import hashlib

    digest = hashlib.sha256()
    for p in sorted(paths):
        digest.update(Path(p).read_bytes())
    return digest.hexdigest()


def _write_report(report: metrics_mod.EvaluationReport, out: str):
    Path(out).write_text(report.to_json(), encoding="utf-8")
    click.echo(f"wrote report to {out}")


@main.group("metrics")
def metrics_group():
    """Agreement, correlation, classification and PMI statistics."""


@metrics_group.command("agreement")
@click.option("--in", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
@click.option("--by-source/--pooled", default=True, show_default=True)
def metrics_agreement(corpus_dir, report_path, by_source):
    """Krippendorff's alpha (ordinal, invalid as 0) over salience annotations."""
    corp = load_corpus(corpus_dir)
    triples_by_group: dict[str, list[tuple[str, str, int]]] = {}
    for ann in corp.salience:
        q = corp.questions[ann.question_id]
        source = corp.articles[q.context.article_id].source if by_source else "all"
        triples_by_group.setdefault(source, []).append(
            (ann.question_id, ann.annotator_id, ann.score)
        )
    values: dict[str, float] = {}
    for group, triples in sorted(triples_by_group.items()):
        matrix = metrics_mod.RatingMatrix.from_annotations(triples)
        values[f"alpha_{group}"] = metrics_mod.krippendorff_alpha_ordinal(matrix)
    report = metrics_mod.EvaluationReport(
        metrics=values,
        dataset_hash=_dataset_hash([str(Path(corpus_dir) / corpus_mod.SALIENCE_FILE)]),
        notes={"measure": "krippendorff_alpha_ordinal"},
    )
    _write_report(report, report_path)


@metrics_group.command("correlate")
@click.option("--in", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
@click.option("--include-already-answered/--exclude-already-answered", default=True,
              show_default=True, help="Keep answerability label 0 in the correlation.")
@click.option("--baseline-trials", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
def metrics_correlate(corpus_dir, report_path, include_already_answered, baseline_trials, seed):
    """Spearman correlation between aggregated salience and answerability."""
    corp = load_corpus(corpus_dir)
    salience_agg = corp.aggregated_salience()
    answer_agg = {
        qid: round(sum(a.score for a in anns) / len(anns))
        for qid, anns in corp.answerability_by_question().items()
    }
    values: dict[str, float] = {}
    groups: dict[str, list[str]] = {"all": []}
    for qid in sorted(set(salience_agg) & set(answer_agg)):
        if salience_agg[qid] == 0:
            continue
        if not include_already_answered and answer_agg[qid] == 0:
            continue
        groups["all"].append(qid)
        source = corp.articles[corp.questions[qid].context.article_id].source
        groups.setdefault(source, []).append(qid)
    for group, qids in sorted(groups.items()):
        if len(qids) < 3:
            continue
        series = metrics_mod.PairedSeries.of(
            [salience_agg[q] for q in qids], [answer_agg[q] for q in qids], qids
        )
        try:
            result = metrics_mod.spearman_rho(series)
        except UndefinedCorrelationError:
            continue
        values[f"spearman_{group}"] = result.rho
        values[f"spearman_{group}_p"] = result.p_value
    if groups["all"]:
        qids = groups["all"]
        try:
            values["random_baseline_rho"] = metrics_mod.random_baseline_rho(
                [salience_agg[q] for q in qids],
                [answer_agg[q] for q in qids],
                trials=baseline_trials,
                seed=seed,
            )
        except UndefinedCorrelationError:
            pass
    report = metrics_mod.EvaluationReport(
        metrics=values,
        dataset_hash=_dataset_hash(
            [str(Path(corpus_dir) / corpus_mod.SALIENCE_FILE),
             str(Path(corpus_dir) / corpus_mod.ANSWERABILITY_FILE)]
        ),
        seed=seed,
        notes={"include_already_answered": str(include_already_answered)},
    )
    _write_report(report, report_path)


@metrics_group.command("classify")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--in", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
def metrics_classify(pred_path, corpus_dir, report_path):
    """MAE, Spearman, macro-F1 and alpha of predictions against gold labels."""
    corp = load_corpus(corpus_dir)
    gold = corp.aggregated_salience()
    pred: dict[str, int] = {}
    with open(pred_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                if obj.get("label") is not None:
                    pred[obj["question_id"]] = int(obj["label"])
    qids = sorted(
        qid for qid in set(pred) & set(gold) if pred[qid] != 0 and gold[qid] != 0
    )
    if len(qids) < 3:
        raise click.ClickException("need at least 3 comparable valid questions")
    xs = [pred[qid] for qid in qids]
    ys = [gold[qid] for qid in qids]
    series = metrics_mod.PairedSeries.of(xs, ys, qids)
    triples = [(q, "model", pred[q]) for q in qids] + [(q, "human", gold[q]) for q in qids]
    values = {
        "mae": metrics_mod.mae(series),
        "spearman": metrics_mod.spearman_rho(series).rho,
        "macro_f1": metrics_mod.macro_f1(xs, ys, label_set=range(1, 6)),
        "alpha": metrics_mod.krippendorff_alpha_ordinal(
            metrics_mod.RatingMatrix.from_annotations(triples)
        ),
        "n": float(len(qids)),
    }
    report = metrics_mod.EvaluationReport(
        metrics=values, dataset_hash=_dataset_hash([pred_path]), notes={}
    )
    _write_report(report, report_path)


@metrics_group.command("pmi")
@click.option("--in", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
@click.option("--level", default="high", show_default=True,
              type=click.Choice(sorted(metrics_mod.SALIENCE_LEVELS)))
def metrics_pmi(corpus_dir, report_path, level):
    """PMI between question type and salience level; ranks types at one level."""
    corp = load_corpus(corpus_dir)
    agg = corp.aggregated_salience()
    typed = [
        (q.question_type, agg[qid])
        for qid, q in corp.questions.items()
        if q.question_type and agg.get(qid, 0) != 0
    ]
    if not typed:
        raise click.ClickException("no typed, validly scored questions in corpus")
    table = metrics_mod.pmi_by_type(typed)
    ranking = metrics_mod.rank_types_by_pmi(table, level=level)
    values = {f"pmi_{t}_{level}": v for t, v in ranking}
    report = metrics_mod.EvaluationReport(
        metrics=values,
        dataset_hash=_dataset_hash([str(Path(corpus_dir) / corpus_mod.QUESTIONS_FILE)]),
        notes={"level": level, "top_type": ranking[0][0] if ranking else ""},
    )
    _write_report(report, report_path)


# -- splits / export -----------------------------------------------------------


@main.command("split")
@click.option("--in", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--ratios", default="0.765,0.089,0.146", show_default=True,
              help="train,validation,test fractions of valid questions.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def split_command(corpus_dir, ratios, seed, out):
    """Article-stratified split written as one JSON document."""
    corp = load_corpus(corpus_dir)
    train, validation, test = (float(x) for x in ratios.split(","))
    split = corpus_mod.split_stratified(
        corp, {"train": train, "validation": validation, "test": test}, seed
    )
    Path(out).write_text(
        json.dumps(
            {
                "seed": split.seed,
                "train": sorted(split.train),
                "validation": sorted(split.validation),
                "test": sorted(split.test),
                "articles": dict(sorted(split.articles.items())),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    click.echo(
        f"split sizes: train={len(split.train)} validation={len(split.validation)} "
        f"test={len(split.test)}"
    )


@main.command("export-finetune")
@click.option("--in", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--split", "split_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--balance/--no-balance", default=False, show_default=True)
def export_finetune(corpus_dir, split_path, out, balance):
    """Instruction-tuning records for the train split."""
    corp = load_corpus(corpus_dir)
    obj = json.loads(Path(split_path).read_text(encoding="utf-8"))
    split = corpus_mod.DatasetSplit(
        train=frozenset(obj["train"]),
        validation=frozenset(obj["validation"]),
        test=frozenset(obj["test"]),
        seed=int(obj["seed"]),
        articles=obj.get("articles", {}),
    )
    records = corpus_mod.export_finetune_data(corp, split, balance=balance)
    write_jsonl(out, records)
    click.echo(f"wrote {len(records)} instruction records to {out}")


# -- summary evaluation ----------------------------------------------------------


@main.group("summeval")
def summeval_group():
    """Summary-expansion generation and salience-based scoring."""


@summeval_group.command("run")
@click.option("--articles", "articles_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Corpus with TL;DR questions (and salience when --salience human).")
@click.option("--salience", "salience_source", default="human", show_default=True,
              help="'human' or 'predicted:<strategy>'.")
@click.option("--systems", default="expander,weak,corrupted", show_default=True)
@click.option("--model", required=True, help="Strong expander / grader model.")
@click.option("--weak-model", default=None, help="Weak expander model (defaults to --model).")
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
@click.option("--rankings", "rankings_dir", default=None, type=click.Path(exists=True, file_okay=False),
              help="Corpus dir with rankings.jsonl for the tau comparison.")
@click.option("--cache-dir", default=".inquest-cache", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--replay", is_flag=True)
def summeval_run(articles_path, corpus_dir, salience_source, systems, model, weak_model,
                 report_path, rankings_dir, cache_dir, config_path, replay):
    """Run the three-system expansion protocol and report SummScr per system."""
    gateway = _gateway(cache_dir, config_path, replay)
    corp = load_corpus(corpus_dir)
    articles = load_articles(Path(articles_path))
    wanted = [s.strip() for s in systems.split(",") if s.strip()]
    alias = {"expander": "expander", "weak": "weak_expander", "weak_expander": "weak_expander",
             "corrupted": "corrupted"}
    try:
        wanted = [alias[s] for s in wanted]
    except KeyError as exc:
        raise click.ClickException(f"unknown system {exc}")

    if salience_source == "human":
        scores = {qid: label for qid, label in corp.aggregated_salience().items() if label != 0}
    elif salience_source.startswith("predicted:"):
        strategy = salience_source.split(":", 1)[1].replace("-", "_")
        results = salience_mod.score_questions(
            list(corp.questions.values()), gateway, model, strategy
        )
        scores = {r.question_id: r.label for r in results if r.label}
    else:
        raise click.ClickException("--salience must be 'human' or 'predicted:<strategy>'")

    records = []
    for article_id, article in sorted(articles.items()):
        tldr_id = f"{article_id}-tldr"
        tldr_article = corp.articles.get(tldr_id)
        if tldr_article is None:
            result = qgen_mod.generate_tldr(article, gateway, model)
            tldr_article = result.article
        tldr_text = tldr_article.text
        questions = [
            q for q in corp.questions.values() if q.context.article_id == tldr_article.id
        ]
        questions.sort(key=lambda q: (q.context.anchor_index, q.id))
        answerable = summeval_mod.filter_article_answered(article, questions, gateway, model)

        candidates = []
        if "expander" in wanted:
            candidates.append(
                summeval_mod.expand_summary(article, tldr_text, gateway, model, "expander")
            )
        if "weak_expander" in wanted:
            weak = summeval_mod.expand_summary(
                article, tldr_text, gateway, weak_model or model, "weak_expander"
            )
            candidates.append(weak)
        if "corrupted" in wanted:
            topics = summeval_mod.identify_topics(article, tldr_text, gateway, model)
            candidates.append(
                summeval_mod.generate_corrupted(article, topics, gateway, model)
            )
        for cand in candidates:
            records.append(
                summeval_mod.detect_summary_answered(cand, answerable, scores, gateway, model)
            )

    report = summeval_mod.summ_scr(records)
    document = {
        "summ_scr": dict(sorted(report.scores.items())),
        "instances": dict(sorted(report.counts.items())),
        "salience_source": salience_source,
    }
    if rankings_dir:
        rank_corpus = load_corpus(rankings_dir)
        outcome = summeval_mod.rank_and_correlate(records, rank_corpus.rankings)
        document["system_order"] = list(outcome.order)
        document["kendall_tau"] = outcome.tau
        document["tied"] = outcome.tied
    Path(report_path).write_text(json.dumps(document, indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8")
    click.echo(json.dumps(document["summ_scr"], sort_keys=True))


# -- pipeline / server -------------------------------------------------------------


@main.command("pipeline")
@click.option("--articles", "articles_path", required=True, type=click.Path(exists=True))
@click.option("--model", required=True)
@click.option("--strategy", default="zero", show_default=True)
@click.option("--mode", default="full_article", show_default=True,
              type=click.Choice(["full_article", "tldr"]))
@click.option("--gold", "gold_dir", default=None, type=click.Path(exists=True, file_okay=False),
              help="Corpus dir with salience.jsonl used as gold labels.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--cache-dir", default=".inquest-cache", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--replay", is_flag=True)
def pipeline_command(articles_path, model, strategy, mode, gold_dir, out, cache_dir,
                     config_path, replay):
    """Questions -> validity -> salience -> metrics, one report document."""
    gold_labels = None
    if gold_dir:
        gold_labels = load_corpus(gold_dir).aggregated_salience()
    run_pipeline(
        articles_path,
        cache_dir,
        model,
        strategy=strategy.replace("-", "_"),
        mode=mode,
        gold_labels=gold_labels,
        gateway_mode="replay" if replay else "online",
        out_path=out,
    )
    click.echo(f"wrote pipeline report to {out}")


@main.command("serve")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--store", "store_path", required=True, type=click.Path(dir_okay=False))
@click.option("--annotators", required=True, help="Comma-separated annotator ids.")
@click.option("--k", "annotators_per_item", default=3, show_default=True)
@click.option("--summaries", "summaries_path", default=None, type=click.Path(exists=True),
              help="JSONL of {article_id, system, text} ranking candidates.")
@click.option("--ui-dir", default="frontend/dist", show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True)
@click.option("--seed", default=0, show_default=True)
def serve_command(corpus_dir, store_path, annotators, annotators_per_item, summaries_path,
                  ui_dir, host, port, seed):
    """Run the annotation service."""
    import uvicorn

    from .server import AnnotationService, AnnotationStore, ServerConfig, make_app
    from .summeval import SummaryCandidate

    corp = load_corpus(corpus_dir)
    candidates: dict[str, list[SummaryCandidate]] = {}
    tldrs: dict[str, str] = {}
    if summaries_path:
        with open(summaries_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    candidates.setdefault(obj["article_id"], []).append(
                        SummaryCandidate.create(obj["article_id"], obj["system"], obj["text"])
                    )
                    if "tldr" in obj:
                        tldrs[obj["article_id"]] = obj["tldr"]
    service = AnnotationService(
        corp,
        AnnotationStore(store_path),
        ServerConfig(
            annotators=tuple(a.strip() for a in annotators.split(",") if a.strip()),
            annotators_per_item=annotators_per_item,
            seed=seed,
        ),
        candidates=candidates,
        tldrs=tldrs,
    )
    app = make_app(service, ui_dir=ui_dir if Path(ui_dir).is_dir() else None)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
