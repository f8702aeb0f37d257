#!/usr/bin/env python3
"""Fetch helper for the released annotation dataset.

The source-article texts (DCQA, TED-Q, DiverseSumm) are licensed by their
original distributors and are not vendored here. This script documents the
acquisition path and verifies a converted dataset directory; it does not
redistribute anything.

Steps:

1. Obtain the released salience/answerability annotations and the question
   files from the dataset's public repository, and the source-article texts
   under their own licenses (DCQA and TED-Q from their release pages,
   DiverseSumm from its repository).
2. Convert them into the JSONL layout this package reads (see README,
   "Corpus files on disk"):
       articles.jsonl       {id, source, title?, sentences: [string]}
       questions.jsonl      {id, article_id, anchor_index, text, generator,
                             question_type?}
       salience.jsonl       {question_id, annotator_id, score, rationale}
       answerability.jsonl  {question_id, annotator_id, score}
       rankings.jsonl       {article_id, annotator_id, system, score}
   plus, when available from the release:
       split.json               {train: [...], validation: [...], test: [...],
                                 seed, articles}
       summeval_answered.jsonl  {article_id, system, answered_question_ids}
   The `source` field must be one of DCQA, TEDQ, DivArticle, DivTLDR.
3. Place the files under data/qsalience/ (or point INQUEST_DATA_DIR at the
   directory) and rerun `pytest tests/test_acceptance.py`: the dataset-bound
   criteria un-skip automatically.

Run this script with the directory as the argument to validate the layout.
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from inquest.corpus import load_corpus  # noqa: E402


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__)
        print("usage: fetch_dataset.py <dataset-dir>")
        return 2
    root = Path(sys.argv[1])
    if not root.is_dir():
        print(f"{root} is not a directory; see the steps in this script's docstring")
        return 1
    corpus = load_corpus(root)
    print(f"articles:       {len(corpus.articles)}")
    print(f"questions:      {len(corpus.questions)}")
    print(f"salience:       {len(corpus.salience)}")
    print(f"answerability:  {len(corpus.answerability)}")
    print(f"rankings:       {len(corpus.rankings)}")
    by_source = {}
    for article in corpus.articles.values():
        by_source[article.source] = by_source.get(article.source, 0) + 1
    print(f"by source:      {by_source}")
    print("layout OK; dataset-bound acceptance tests will run against it")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
