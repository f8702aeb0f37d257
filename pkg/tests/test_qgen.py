import pytest

from inquest.corpus import Article, Context
from inquest.errors import PartialResultError
from inquest.llmgate import LLMGateway, Message, PromptRequest, record_completion
from inquest.qgen import (
    GENERATION_FREQUENCY_PENALTY,
    GenerationJob,
    build_generation_request,
    generate_for_article,
    generate_questions,
    generate_tldr,
    parse_question_list,
)
from inquest import prompts


def article(n=6, article_id="art1"):
    return Article(
        id=article_id,
        source="DivArticle",
        sentences=tuple(f"This is sentence {i} of the story." for i in range(1, n + 1)),
    )


def replay_gateway(tmp_path):
    return LLMGateway(cache_dir=tmp_path, mode="replay")


FIVE_QUESTIONS = "\n".join(f"{i}. What about part {i}?" for i in range(1, 6))


class TestParseQuestionList:
    def test_dot_paren_and_q_prefixes(self):
        text = "1. First one?\n2) Second one?\nQ3: Third one?"
        assert parse_question_list(text) == ["First one?", "Second one?", "Third one?"]

    def test_continuation_lines_join(self):
        text = "1. What happened to\nthe original plan?\n2. Why now?"
        assert parse_question_list(text) == [
            "What happened to the original plan?",
            "Why now?",
        ]

    def test_preamble_is_dropped(self):
        text = "Here are the questions you asked for:\n1. Why?\n2. How?"
        assert parse_question_list(text) == ["Why?", "How?"]

    def test_single_line_numbered_items_only(self):
        assert parse_question_list("no list at all") == []


class TestGenerateQuestions:
    def test_five_numbered_lines_give_five_records(self, tmp_path):
        job = GenerationJob(Context.from_article(article(), 4), model="gen-model")
        record_completion(tmp_path, build_generation_request(job), FIVE_QUESTIONS)
        records = generate_questions(job, replay_gateway(tmp_path))
        assert len(records) == 5
        assert [r.text for r in records] == [f"What about part {i}?" for i in range(1, 6)]
        assert all(r.generator == "model:gen-model" for r in records)

    def test_short_list_raises_partial_result(self, tmp_path):
        job = GenerationJob(Context.from_article(article(), 4), model="gen-model")
        record_completion(tmp_path, build_generation_request(job), "1) A? 2) B?")
        with pytest.raises(PartialResultError) as err:
            generate_questions(job, replay_gateway(tmp_path))
        assert [r.text for r in err.value.records] == ["A?", "B?"]

    def test_short_list_two_lines_carries_both(self, tmp_path):
        job = GenerationJob(Context.from_article(article(), 4), model="gen-model")
        record_completion(tmp_path, build_generation_request(job), "1) A?\n2) B?")
        with pytest.raises(PartialResultError) as err:
            generate_questions(job, replay_gateway(tmp_path))
        assert [r.text for r in err.value.records] == ["A?", "B?"]

    def test_records_inherit_job_anchor(self, tmp_path):
        ctx = Context.from_article(article(), 6)
        job = GenerationJob(ctx, model="gen-model")
        record_completion(tmp_path, build_generation_request(job), FIVE_QUESTIONS)
        for record in generate_questions(job, replay_gateway(tmp_path)):
            assert record.context == ctx
            assert record.context.anchor_index == 6

    def test_request_carries_generation_settings(self):
        job = GenerationJob(Context.from_article(article(), 4), model="gen-model")
        request = build_generation_request(job)
        assert request.temperature == 0.0
        assert request.frequency_penalty == GENERATION_FREQUENCY_PENALTY
        assert "ask 5 questions" in request.messages[0].content

    def test_retry_fixture_completes_short_list(self, tmp_path):
        from inquest.qgen import RETRY_NUDGE

        job = GenerationJob(Context.from_article(article(), 4), model="gen-model")
        first = build_generation_request(job)
        record_completion(tmp_path, first, "1) A?\n2) B?")
        retry = PromptRequest(
            model=job.model,
            messages=first.messages
            + (Message("assistant", "1) A?\n2) B?"), Message("user", RETRY_NUDGE.format(n=5))),
            temperature=0.0,
            frequency_penalty=GENERATION_FREQUENCY_PENALTY,
        )
        record_completion(tmp_path, retry, FIVE_QUESTIONS)
        records = generate_questions(job, replay_gateway(tmp_path))
        assert len(records) == 5


class TestGenerateForArticle:
    def test_one_job_per_probe(self, tmp_path):
        art = article(n=8)
        gateway = replay_gateway(tmp_path)
        for anchor in (4, 6, 8):
            job = GenerationJob(Context.from_article(art, anchor), model="gen-model")
            record_completion(tmp_path, build_generation_request(job), FIVE_QUESTIONS)
        records = generate_for_article(art, "full_article", gateway, "gen-model")
        assert len(records) == 15
        assert [r.context.anchor_index for r in records] == [4] * 5 + [6] * 5 + [8] * 5

    def test_question_ids_are_unique_and_deterministic(self, tmp_path):
        art = article(n=4)
        job = GenerationJob(Context.from_article(art, 4), model="gen-model")
        record_completion(tmp_path, build_generation_request(job), FIVE_QUESTIONS)
        first = generate_for_article(art, "full_article", replay_gateway(tmp_path), "gen-model")
        second = generate_for_article(art, "full_article", replay_gateway(tmp_path), "gen-model")
        assert [r.id for r in first] == [r.id for r in second]
        assert len({r.id for r in first}) == len(first)


class TestGenerateTldr:
    def _record_tldr(self, tmp_path, art, text):
        request = PromptRequest(
            model="sum-model",
            messages=prompts.render_tldr(art.text),
            temperature=0.0,
            frequency_penalty=GENERATION_FREQUENCY_PENALTY,
        )
        record_completion(tmp_path, request, text)

    def test_fifty_word_summary_round_trip(self, tmp_path):
        art = article()
        words = " ".join(f"w{i}" for i in range(1, 50)) + " end."
        self._record_tldr(tmp_path, art, words)
        result = generate_tldr(art, replay_gateway(tmp_path), "sum-model")
        assert result.word_count == 50
        assert result.within_range is True
        assert result.article.source == "DivTLDR"

    def test_eighty_word_summary_flagged(self, tmp_path):
        art = article()
        words = " ".join(f"w{i}" for i in range(1, 80)) + " end."
        self._record_tldr(tmp_path, art, words)
        result = generate_tldr(art, replay_gateway(tmp_path), "sum-model")
        assert result.word_count == 80
        assert result.within_range is False

    def test_three_sentence_summary_segments(self, tmp_path):
        art = article()
        self._record_tldr(
            tmp_path, art,
            "The plan was announced. Critics pushed back hard. A vote is expected soon.",
        )
        result = generate_tldr(art, replay_gateway(tmp_path), "sum-model")
        assert len(result.article.sentences) == 3
