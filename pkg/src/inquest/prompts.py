"""Prompt templates and renderers for every LLM call in the toolkit.

Renderers are pure: identical inputs produce byte-identical message lists,
which is what makes the disk cache and the replay fixtures work. Template
wording is part of the contract — snapshot tests pin it — so edit with care.
"""

from __future__ import annotations

from typing import Sequence

from .llmgate import Message

# --------------------------------------------------------------------------
# Question generation
# --------------------------------------------------------------------------

QGEN_TEMPLATE = (
    "Context\n{preceding}\n\n"
    "After reading the sentence {anchor}, ask {n} questions about a part of "
    "this sentence that you are curious about which you don't have an answer for."
)


def render_question_generation(preceding: str, anchor: str, n: int) -> tuple[Message, ...]:
    return (Message("user", QGEN_TEMPLATE.format(preceding=preceding, anchor=anchor, n=n)),)


# --------------------------------------------------------------------------
# TL;DR generation
# --------------------------------------------------------------------------

TLDR_TEMPLATE = (
    "Context\n{article}\n\n"
    "Generate a short 50-word summary for the above article. "
    "Remember, do not exceed 50 words."
)


def render_tldr(article_text: str) -> tuple[Message, ...]:
    return (Message("user", TLDR_TEMPLATE.format(article=article_text)),)


# --------------------------------------------------------------------------
# Salience scoring
# --------------------------------------------------------------------------

SALIENCE_SYSTEM = (
    "Imagine you are a curious reader who is reading the article. You come "
    "across a question and you need to determine if it should be answered in "
    "the following article or not. You have to give a score for this input. "
    "Score = 1 means the question is completely unrelated to the topic of the "
    "article. Score = 2 means the question is related to the article but it "
    "has already mostly been answered by the article. Score = 3 means the "
    "question is related to the article but answering it is not useful as it "
    "might expand of an idea that is not very important or central to the "
    "context of the article. Score = 4 means the question is related to the "
    "article and answering it is somewhat useful in enhancing the "
    "understanding of the article. Score = 5 means the question is related to "
    "the article and should definitely be answered because it expands on some "
    "ideas which are central to the article. Note that the score is given "
    "according to the information utility of its answer. If a question is "
    "related to the article but doesn't need to be answered or is not central "
    "to the article, do NOT give it a high score of 4 or 5, instead give a "
    "score of 3 if the question is unanswered by the article and 2 if it has "
    "already been answered by the article. To differentiate between a score "
    "of 4 vs 5, think of how the article would look like if you don't answer "
    "the question - if the article would not feel complete without the answer "
    "to the question, give a score of 5, else a 4. A score of 4 is usually "
    "given if answering the question will be useful but there might be other "
    "questions that are more important to answer as compared to this. A score "
    "of 5 is only given to the best and most important questions that MUST be "
    "answered so use it carefully and sparingly. Do not be biased towards "
    "giving a high score and follow the above instructions carefully. The "
    "score should strictly be an integer from 1 to 5."
)

SALIENCE_COT_SYSTEM = (
    "Imagine you are a curious reader who is reading the article. You come "
    "across a question and you need to determine if it should be answered in "
    "the following article or not. You have to give a reason and a score for "
    "this input. Score = 1 means the question is completely unrelated to the "
    "topic of the article or misinterprets the context of the article. "
    "Score = 2 means the question is related to the article but it has "
    "already mostly been answered by the article. Score = 3 means the "
    "question is related to the article but answering it is not useful as it "
    "might expand of an idea that is not very important or central to the "
    "context of the article. Score = 4 means the question is related to the "
    "article and answering it is somewhat useful in enhancing the "
    "understanding of the article. Score = 5 means the question is related to "
    "the article and should definitely be answered because it expands on some "
    "ideas which are central to the article. Note that the score is given "
    "according to the information utility of its answer. If a question is "
    "related to the article but doesn't need to be answered or is not central "
    "to the article, do NOT give it a high score of 4 or 5, instead give a "
    "score of 3 if the question is unanswered by the article and 2 if it has "
    "already been answered by the article. To differentiate between a score "
    "of 4 vs 5, think of how the article would look like if you don't answer "
    "the question - if the article would not feel complete without the answer "
    "to the question, give a score of 5, else a 4. A score of 4 is usually "
    "given if answering the question will be useful but there might be other "
    "questions that are more important to answer as compared to this. A score "
    "of 5 is only given to the best and most important questions that MUST be "
    "answered so use it carefully and sparingly. Do not be biased towards "
    "giving a high score and follow the above instructions carefully. First "
    "provide a reasoning for your response and then the score. Now let's "
    "think step by step."
)


def _scored_block(article_text: str, question: str, score: int | None) -> str:
    tail = f"score: {score}" if score is not None else "score:"
    return f"article: {article_text}\n\nquestion: {question}\n\n{tail}"


def _cot_block(article_text: str, question: str, rationale: str | None, score: int | None) -> str:
    head = f"article: {article_text}\n\nquestion: {question}"
    if rationale is None:
        return f"{head}\n\nreason:"
    return f"{head}\n\nreason: {rationale}\n\nscore: {score}"


def render_salience_zero(article_text: str, question: str) -> tuple[Message, ...]:
    return (
        Message("system", SALIENCE_SYSTEM),
        Message("user", _scored_block(article_text, question, None)),
    )


def render_salience_few(
    article_text: str,
    question: str,
    exemplars: Sequence[tuple[str, str, int]],
) -> tuple[Message, ...]:
    """Few-shot variant; exemplars are (article_text, question, score) in
    final prompt order (most frequent label last)."""
    blocks = [_scored_block(a, q, s) for a, q, s in exemplars]
    blocks.append(_scored_block(article_text, question, None))
    return (Message("system", SALIENCE_SYSTEM), Message("user", "\n\n".join(blocks)))


def render_salience_cot_zero(article_text: str, question: str) -> tuple[Message, ...]:
    return (
        Message("system", SALIENCE_COT_SYSTEM),
        Message("user", _cot_block(article_text, question, None, None)),
    )


def render_salience_cot_few(
    article_text: str,
    question: str,
    exemplars: Sequence[tuple[str, str, str, int]],
) -> tuple[Message, ...]:
    """CoT few-shot; exemplars are (article_text, question, rationale, score)."""
    blocks = [_cot_block(a, q, r, s) for a, q, r, s in exemplars]
    blocks.append(_cot_block(article_text, question, None, None))
    return (Message("system", SALIENCE_COT_SYSTEM), Message("user", "\n\n".join(blocks)))


# --------------------------------------------------------------------------
# Instruction-tuned scoring endpoint (and fine-tuning export)
# --------------------------------------------------------------------------

INSTRUCTION_PREAMBLE = (
    "Below is an instruction that describes a task, paired with an input "
    "that provides further context. Write a response that appropriately "
    "completes the request."
)

FINETUNE_INSTRUCTION = (
    "Give a score from 1 to 5 for how important it is for the question to be "
    "answered later in the article.\n"
    "Score = 1 means the question is completely unrelated to the topic of the article.\n"
    "Score = 2 means the question is related to the article but answering it "
    "is not useful in making the article feel complete.\n"
    "Score = 3 means the question is related to the article but answering it "
    "might not enhance the understanding of the article.\n"
    "Score = 4 means the question is related to the article and answering it "
    "is somewhat useful in enhancing the understanding of the article.\n"
    "Score = 5 means the question is related to the article and should "
    "definitely be answered because it might provide explanation for some new concepts."
)


def render_salience_endpoint(article_text: str, question: str) -> tuple[Message, ...]:
    user = (
        f"{FINETUNE_INSTRUCTION}\n\n"
        f"article: {article_text}\nquestion: {question}"
    )
    return (Message("system", INSTRUCTION_PREAMBLE), Message("user", user))


# --------------------------------------------------------------------------
# Validity (anchor grounding) classification
# --------------------------------------------------------------------------

VALIDITY_INSTRUCTION = (
    "Is the question well-grounded in the anchor sentence? Please evaluate "
    "using the following scale:\n"
    "1: The question is fully grounded in the anchor sentence. Or some parts "
    "of the question are grounded in the anchor sentence.\n"
    "0: The question is not grounded at all in the anchor sentence.\n"
    "Based on the question and the anchor, please choose one of the above "
    "options. If the question refers to the same entity as the anchor, we "
    "consider the question to be grounded."
)


def render_validity(
    question: str,
    anchor: str,
    exemplars: Sequence[tuple[str, str, int]] = (),
) -> tuple[Message, ...]:
    """Grounding prompt; exemplars are (question, anchor, label 0/1)."""
    parts = [VALIDITY_INSTRUCTION]
    for q, a, label in exemplars:
        parts.append(f"question: {q}\nanchor sentence: {a}\nresponse: {label}")
    parts.append(f"question: {question}\nanchor sentence: {anchor}\nresponse:")
    return (Message("system", INSTRUCTION_PREAMBLE), Message("user", "\n\n".join(parts)))


# --------------------------------------------------------------------------
# Summary expansion and evaluation
# --------------------------------------------------------------------------

EXPANSION_TEMPLATE = (
    "article: {article}\n\n"
    "short summary: {tldr}\n\n"
    "Produce an elaboration of the short summary by including relevant "
    "details from the article within a word count range of 230 to 250 words. "
    "Strive for conciseness and clarity in delivering a comprehensive "
    "expansion within the specified word limit. The response MUST NOT exceed "
    "250 words at any cost. Produce outputs less than 250 words."
)

TOPICS_TEMPLATE = (
    "article: {article}\n\n"
    "short summary: {tldr}\n\n"
    "Read the article and the short summary. Provide a list of all the "
    "important topics from the short summary and related to it which are "
    "spoken about in the article. Your response should be a comma separated list."
)

# The quoted field name below (including its spelling) matches the template
# wording the corruption step is conditioned on; do not "fix" it.
CORRUPTION_TEMPLATE = (
    "article: {article}\n\n"
    "irrelevant topic: {topics}\n\n"
    "In 230 to 250 words, produce an elaboration of the article by omitting "
    "as many topics included or related to the 'irrelavant topic' field as "
    "possible. Your response MUST be strictly more than 230 words and under "
    "250 words. Remember, you MUST produce ATLEAST 230 word count responses."
)

REFINEMENT_TEMPLATE = (
    "paragraph: {paragraph}\n\n"
    "Make minor alterations to the paragraph above such that its narrative "
    "style is similar to a usual summary. Do not use very flowery language "
    "and stick to the contents in the paragraph ONLY. Your response should "
    "NOT include any new content. Your response should be over 230 words but "
    "not exceed 250 words. Remember, do not produce responses below 230 "
    "words. Don't start the sentences like the 'article talks about this' or "
    "'the article sheds light on..'. Remember, you MUST produce ATLEAST 230 "
    "word count responses."
)

ANSWER_IN_ARTICLE_TEMPLATE = (
    "article: {article}\n\n"
    "Which sentences from the article completely answer the question "
    "{question} Include only the relevant sentences extracted from the "
    "article that are answers to the question and NOT just vaguely related "
    "to the topic introduced in the question. Be concise. Your response "
    "should not exceed 3 lines. If the article doesn't provide a SPECIFIC "
    "answer to the question, respond with 'No Answer'."
)

ANSWERED_BY_SUMMARY_TEMPLATE = (
    "article: {summary}\n\n"
    "questions: {questions}\n\n"
    "Read the above article and find the questions from the 'questions' list "
    "provided above which are answered in the article. Your response should "
    "be a comma separated list of only questions that are completely or "
    "partially answered by the article."
)


def render_expansion(article_text: str, tldr: str) -> tuple[Message, ...]:
    return (Message("user", EXPANSION_TEMPLATE.format(article=article_text, tldr=tldr)),)


def render_topics(article_text: str, tldr: str) -> tuple[Message, ...]:
    return (Message("user", TOPICS_TEMPLATE.format(article=article_text, tldr=tldr)),)


def render_corruption(article_text: str, topics: str) -> tuple[Message, ...]:
    return (Message("user", CORRUPTION_TEMPLATE.format(article=article_text, topics=topics)),)


def render_refinement(paragraph: str) -> tuple[Message, ...]:
    return (Message("user", REFINEMENT_TEMPLATE.format(paragraph=paragraph)),)


def render_answer_in_article(article_text: str, question: str) -> tuple[Message, ...]:
    return (
        Message("user", ANSWER_IN_ARTICLE_TEMPLATE.format(article=article_text, question=question)),
    )


def render_answered_by_summary(summary_text: str, questions: Sequence[str]) -> tuple[Message, ...]:
    listing = "\n".join(questions)
    return (
        Message("user", ANSWERED_BY_SUMMARY_TEMPLATE.format(summary=summary_text, questions=listing)),
    )
