import re

import numpy as np
import pytest

from processing import prompting
from processing.errors import ConfigError, IncompatibleVariant
from processing.eval_sets import GridCell, generate_condition_prompts, grid_cells, read_prompts, write_prompts
from processing.sequences import get_pool
from processing.tasks import gold_answer
from schemas.config import GridConfig
from schemas.records import AnswerStyle, ListFormat, Phrasing, PromptVariant
from schemas.tasks import (
    Anchor, AnchorKind, AnswerKind, Direction, GoldAnswer, IndexQuery, Item, ItemKind, QueryKind, Sequence,
)

XVZY = Sequence.from_texts(["X", "V", "Z", "Y"], ItemKind.LETTER)


def _pos2item(anchor, direction, n):
    return IndexQuery(kind=QueryKind.POSITION_TO_ITEM, anchor=anchor, direction=direction, offset=n)


def test_render_ordinal():
    """
    Teste le rendu des ordinaux (suffixes, direction, style "to-last").

    Args:
        Aucun
    Returns:
        None
    """
    assert prompting.render_ordinal(3, Direction.FORWARD) == "3rd position from the beginning"
    assert prompting.render_ordinal(2, Direction.BACKWARD) == "2nd position from the end"
    assert prompting.render_ordinal(11, Direction.FORWARD) == "11th position from the beginning"
    assert prompting.render_ordinal(1, Direction.BACKWARD, to_last_style=True) == "last"
    assert prompting.render_ordinal(2, Direction.BACKWARD, to_last_style=True) == "second-to-last"
    assert [prompting.ordinal_suffix(n) for n in (1, 2, 3, 4, 12, 13, 21, 22, 111)] == [
        "st", "nd", "rd", "th", "th", "th", "st", "nd", "th",
    ]


def test_render_question_second_to_last():
    """
    Teste le texte exact de la question "avant-dernière lettre" sur X, V, Z, Y.

    Args:
        Aucun
    Returns:
        None
    """
    variant = PromptVariant(phrasing=Phrasing.SECOND_TO_LAST_STYLE)
    rendered = prompting.render_question(XVZY, _pos2item(Anchor.endpoint(), Direction.BACKWARD, 2), variant)
    assert rendered.user_text == (
        "Below is a sequence of letters. What is the second-to-last letter?\n"
        "Respond with ONLY that single letter, nothing else.\n\n"
        "X, V, Z, Y."
    )


def test_render_question_relative_and_counting():
    variant = PromptVariant(phrasing=Phrasing.RELATIONAL_BEFORE_AFTER)
    rendered = prompting.render_question(XVZY, _pos2item(Anchor.relative(2), Direction.FORWARD, 2), variant)
    assert rendered.question == "What letter is two positions after V?"
    counting = prompting.render_question(XVZY, IndexQuery.counting(), PromptVariant())
    assert counting.question == "How many items are in the sequence?"
    assert counting.instruction == "Respond with ONLY the number, nothing else."


def test_render_list_formats():
    texts = ["a", "b"]
    assert prompting.render_list(texts, ListFormat.COMMA_LINE) == "a, b."
    assert prompting.render_list(texts, ListFormat.BULLET_LIST) == "- a\n- b"
    assert prompting.render_list(texts, ListFormat.NUMBERED_LIST) == "1. a\n2. b"
    assert prompting.render_list(texts, ListFormat.CODE_BLOCK) == "```\na\nb\n```"


def test_incompatible_variant():
    """
    Teste le refus d'une formulation incompatible ("second-to-last" pour une requête avant).

    Args:
        Aucun
    Returns:
        None
    """
    variant = PromptVariant(phrasing=Phrasing.SECOND_TO_LAST_STYLE)
    with pytest.raises(IncompatibleVariant):
        prompting.render_question(XVZY, _pos2item(Anchor.endpoint(), Direction.FORWARD, 2), variant)
    with pytest.raises(IncompatibleVariant):
        prompting.check_compatible(_pos2item(Anchor.relative(2), Direction.FORWARD, 1), PromptVariant())


def test_render_answer_framed_span():
    gold = GoldAnswer(kind=AnswerKind.ITEM, item=Item(text="Z", kind=ItemKind.LETTER))
    assert prompting.render_answer(gold) == ("Z", (0, 1))
    text, (start, end) = prompting.render_answer(gold, AnswerStyle.FRAMED)
    assert text == "The answer is Z."
    assert text[start:end] == "Z"


def test_render_prompt_demos_are_correct():
    """
    Teste le prompt few-shot : 3 démonstrations correctes, de même forme que le test, sur d'autres séquences,
    et tour de test sans la réponse.

    Args:
        Aucun
    Returns:
        None
    """
    pool = get_pool("animals")
    seq = Sequence.from_texts(["cat", "dog", "owl", "fox", "bee", "elk"], ItemKind.WORD)
    query = _pos2item(Anchor.relative(3), Direction.BACKWARD, 2)
    variant = PromptVariant(phrasing=Phrasing.RELATIONAL_BEFORE_AFTER)
    prompt = prompting.render_prompt(seq, query, variant, np.random.default_rng(11), pool=pool)

    assert prompt.gold.item.text == "cat"
    assert len(prompt.demos) == 3
    assert [message.role for message in prompt.messages] == ["user", "assistant"] * 3 + ["user"]
    for index, demo in enumerate(prompt.demos):
        assert demo.query.kind == query.kind
        assert demo.query.anchor.kind == AnchorKind.RELATIVE
        assert demo.query.direction == Direction.BACKWARD
        assert demo.sequence.length == seq.length
        assert set(demo.sequence.texts) != set(seq.texts)
        assert gold_answer(demo.sequence, demo.query) == demo.answer
        assert prompt.messages[2 * index + 1].content == demo.answer.as_text()
    assert prompt.messages[-1].content.endswith("cat, dog, owl, fox, bee, elk.")
    assert prompt.condition.task == "pos2item"
    assert prompt.condition.length == 6


def test_render_prompt_is_deterministic():
    query = _pos2item(Anchor.endpoint(), Direction.FORWARD, 3)
    first = prompting.render_prompt(XVZY, query, PromptVariant(), np.random.default_rng(5))
    again = prompting.render_prompt(XVZY, query, PromptVariant(), np.random.default_rng(5))
    assert first.prompt_id == again.prompt_id
    assert first.messages == again.messages


def test_no_gold_leak_in_instruction():
    """
    Teste sur toute une condition que la réponse n'apparaît jamais comme mot dans la consigne de test.

    Args:
        Aucun
    Returns:
        None
    """
    grid = GridConfig(sequences_per_condition=5)
    for cell in grid_cells(grid):
        if cell.length != 10:
            continue
        for prompt in generate_condition_prompts(cell, grid, seed=9):
            tokens = set(re.findall(r"\w+", prompt.instruction))
            assert prompt.gold.as_text() not in tokens
            assert prompt.messages[-1].role == "user"


def test_numeric_items_use_spelled_ordinals():
    """
    Teste les séquences de nombres : ordinaux en toutes lettres pour position → élément (la réponse "3"
    ne doit pas apparaître dans "3rd"), refus d'élément → position sur un pool de nombres.

    Args:
        Aucun
    Returns:
        None
    """
    assert prompting.render_ordinal(3, Direction.FORWARD, spelled=True) == "third position from the beginning"
    assert [prompting.ordinal_word(n) for n in (21, 30, 42, 99)] == ["twenty-first", "thirtieth", "forty-second", "ninety-ninth"]
    assert prompting.number_word(23) == "twenty-three"
    assert prompting.to_last_phrase(23) == "twenty-third-to-last"

    digits = Sequence.from_texts(["5", "8", "3", "1"], ItemKind.GENERIC)
    rendered = prompting.render_question(digits, _pos2item(Anchor.endpoint(), Direction.FORWARD, 3), PromptVariant())
    assert rendered.question == "What item is at the third position from the beginning?"
    assert prompting.render_question(XVZY, _pos2item(Anchor.endpoint(), Direction.FORWARD, 3), PromptVariant()).question == (
        "What letter is at the 3rd position from the beginning?"
    )

    grid = GridConfig(
        tasks=[QueryKind.POSITION_TO_ITEM], item_kinds=[ItemKind.GENERIC], pools={ItemKind.GENERIC: "digits"},
        lengths=[20], include_counting=False, sequences_per_condition=5,
    )
    for cell in grid_cells(grid):
        for prompt in generate_condition_prompts(cell, grid, seed=4):
            assert prompt.gold.as_text() not in set(re.findall(r"\w+", prompt.instruction))

    item2pos = GridCell(QueryKind.ITEM_TO_POSITION, AnchorKind.ENDPOINT, Direction.FORWARD, ItemKind.GENERIC, 10)
    with pytest.raises(ConfigError):
        generate_condition_prompts(item2pos, grid, seed=4)


def test_grid_cells_default():
    cells = grid_cells(GridConfig())
    assert len(cells) == 54
    assert sum(cell.kind == QueryKind.COUNTING for cell in cells) == 6
    assert len({cell.name for cell in cells}) == 54
    assert GridCell(QueryKind.POSITION_TO_ITEM, AnchorKind.ENDPOINT, Direction.FORWARD, ItemKind.LETTER, 5).name == (
        "pos2item_endpoint_forward_letter_L5"
    )


def test_generate_condition_prompts_offsets(tmp_path):
    """
    Teste les prompts d'une condition : tous les offsets valides par séquence, reproductibles, relus à l'identique.

    Args:
        tmp_path: fixture pytest (répertoire temporaire)
    Returns:
        None
    """
    grid = GridConfig(sequences_per_condition=4)
    cell = GridCell(QueryKind.POSITION_TO_ITEM, AnchorKind.ENDPOINT, Direction.BACKWARD, ItemKind.LETTER, 5)
    prompts = generate_condition_prompts(cell, grid, seed=1)
    assert len(prompts) == 4 * 5
    assert sorted({p.test_query.offset for p in prompts}) == [1, 2, 3, 4, 5]
    assert [p.prompt_id for p in prompts] == [p.prompt_id for p in generate_condition_prompts(cell, grid, seed=1)]

    path = tmp_path / f"{cell.name}.jsonl"
    assert write_prompts(path, prompts) == 20
    assert read_prompts(path) == prompts

    relative = GridCell(QueryKind.ITEM_TO_POSITION, AnchorKind.RELATIVE, Direction.FORWARD, ItemKind.WORD, 10)
    for prompt in generate_condition_prompts(relative, grid, seed=1):
        assert prompt.gold.value == prompt.test_query.offset
        assert prompt.test_query.anchor.position + prompt.test_query.offset <= 10


def test_trials_per_position_mode():
    grid = GridConfig(trials_per_position=3)
    cell = GridCell(QueryKind.POSITION_TO_ITEM, AnchorKind.RELATIVE, Direction.FORWARD, ItemKind.LETTER, 5)
    prompts = generate_condition_prompts(cell, grid, seed=2)
    offsets = [p.test_query.offset for p in prompts]
    assert sorted(set(offsets)) == [1, 2, 3, 4]
    assert all(offsets.count(n) == 3 for n in range(1, 5))
