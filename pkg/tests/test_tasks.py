import string

import numpy as np
import pytest
from pydantic import ValidationError

from processing import tasks
from processing.errors import OutOfRange, TargetNotFound
from schemas.tasks import Anchor, AnchorKind, AnswerKind, Direction, IndexQuery, ItemKind, QueryKind, Sequence

FORWARD, BACKWARD = Direction.FORWARD, Direction.BACKWARD


def letters(length):
    return Sequence.from_texts(list(string.ascii_uppercase[:length]), ItemKind.LETTER)


def test_resolve_position_examples():
    """
    Teste les quatre opérateurs sur des cas connus.

    Args:
        Aucun
    Returns:
        None
    """
    assert tasks.resolve_position(Anchor.endpoint(), FORWARD, 3, 10) == 3
    assert tasks.resolve_position(Anchor.endpoint(), BACKWARD, 2, 10) == 9
    assert tasks.resolve_position(Anchor.relative(4), FORWARD, 2, 10) == 6
    assert tasks.resolve_position(Anchor.relative(4), BACKWARD, 3, 10) == 1


def test_resolve_position_out_of_range():
    """
    Teste les erreurs hors bornes (offset nul, position résolue hors de [1, L], ancre invalide).

    Args:
        Aucun
    Returns:
        None
    """
    with pytest.raises(OutOfRange):
        tasks.resolve_position(Anchor.endpoint(), FORWARD, 0, 5)
    with pytest.raises(OutOfRange):
        tasks.resolve_position(Anchor.endpoint(), FORWARD, 6, 5)
    with pytest.raises(OutOfRange):
        tasks.resolve_position(Anchor.relative(5), FORWARD, 1, 5)
    with pytest.raises(OutOfRange):
        tasks.resolve_position(Anchor.relative(1), BACKWARD, 1, 5)
    with pytest.raises(OutOfRange):
        tasks.resolve_position(Anchor.relative(7), FORWARD, 1, 5)


def test_valid_offsets_exhaustive():
    """
    Teste, pour toute longueur L <= 20 et toute ancre, que valid_offsets correspond exactement
    aux offsets acceptés par resolve_position.

    Args:
        Aucun
    Returns:
        None
    """
    for length in range(1, 21):
        anchors = [Anchor.endpoint()] + [Anchor.relative(r) for r in range(1, length + 1)]
        for anchor in anchors:
            for direction in (FORWARD, BACKWARD):
                accepted = set()
                for n in range(1, length + 2):
                    try:
                        position = tasks.resolve_position(anchor, direction, n, length)
                    except OutOfRange:
                        continue
                    assert 1 <= position <= length
                    accepted.add(n)
                assert tasks.valid_offsets(anchor, direction, length) == accepted


def test_endpoint_directions_are_mirrored():
    for length in range(1, 21):
        for n in range(1, length + 1):
            forward = tasks.resolve_position(Anchor.endpoint(), FORWARD, n, length)
            backward = tasks.resolve_position(Anchor.endpoint(), BACKWARD, n, length)
            assert forward + backward == length + 1


def test_inversion_roundtrip_exhaustive():
    """
    Teste que l'inversion d'une requête position→item redonne l'offset n pour toutes les requêtes valides (L <= 20).

    Args:
        Aucun
    Returns:
        None
    """
    for length in range(1, 21):
        seq = letters(length)
        anchors = [Anchor.endpoint()] + [Anchor.relative(r) for r in range(1, length + 1)]
        for anchor in anchors:
            for direction in (FORWARD, BACKWARD):
                for n in tasks.valid_offsets(anchor, direction, length):
                    query = IndexQuery(kind=QueryKind.POSITION_TO_ITEM, anchor=anchor, direction=direction, offset=n)
                    inverse = tasks.invert_query(seq, query)
                    gold = tasks.gold_answer(seq, inverse)
                    assert gold.kind == AnswerKind.OFFSET
                    assert gold.value == n


def test_gold_answer_examples():
    """
    Teste les réponses de référence : avant-dernier de [X, V, Z, Y] = Z, deux positions après V = Y.

    Args:
        Aucun
    Returns:
        None
    """
    seq = Sequence.from_texts(["X", "V", "Z", "Y"], ItemKind.LETTER)
    second_to_last = IndexQuery(kind=QueryKind.POSITION_TO_ITEM, anchor=Anchor.endpoint(), direction=BACKWARD, offset=2)
    assert tasks.gold_answer(seq, second_to_last).item.text == "Z"
    after_v = IndexQuery(kind=QueryKind.POSITION_TO_ITEM, anchor=Anchor.relative(2), direction=FORWARD, offset=2)
    assert tasks.gold_answer(seq, after_v).item.text == "Y"
    where_is_x = IndexQuery(
        kind=QueryKind.ITEM_TO_POSITION, anchor=Anchor.endpoint(), direction=BACKWARD,
        target=seq.item_at(1),
    )
    assert tasks.gold_answer(seq, where_is_x).value == 4
    assert tasks.gold_answer(seq, IndexQuery.counting()).value == 4


def test_gold_answer_unreachable_and_missing_target():
    seq = letters(5)
    behind = IndexQuery(
        kind=QueryKind.ITEM_TO_POSITION, anchor=Anchor.relative(3), direction=FORWARD, target=seq.item_at(2),
    )
    with pytest.raises(OutOfRange):
        tasks.gold_answer(seq, behind)
    missing = IndexQuery(
        kind=QueryKind.ITEM_TO_POSITION, anchor=Anchor.endpoint(), direction=FORWARD,
        target=letters(10).item_at(9),
    )
    with pytest.raises(TargetNotFound):
        tasks.gold_answer(seq, missing)


def test_query_shape_validation():
    """
    Teste les contraintes de forme des requêtes et séquences (comptage nu, éléments distincts).

    Args:
        Aucun
    Returns:
        None
    """
    with pytest.raises(ValidationError):
        IndexQuery(kind=QueryKind.COUNTING, direction=FORWARD)
    with pytest.raises(ValidationError):
        IndexQuery(kind=QueryKind.POSITION_TO_ITEM, anchor=Anchor.endpoint(), direction=FORWARD)
    with pytest.raises(ValidationError):
        Sequence.from_texts(["A", "B", "A"], ItemKind.LETTER)
    with pytest.raises(ValidationError):
        Anchor(kind="relative")


def test_sample_query_always_valid():
    """
    Teste que sample_query produit des requêtes résolubles pour toutes les formes.

    Args:
        Aucun
    Returns:
        None
    """
    stream = np.random.default_rng(0)
    for length in (2, 5, 20):
        seq = letters(length)
        for kind in (QueryKind.POSITION_TO_ITEM, QueryKind.ITEM_TO_POSITION):
            for anchor_kind in (AnchorKind.ENDPOINT, AnchorKind.RELATIVE):
                for direction in (FORWARD, BACKWARD):
                    for _ in range(20):
                        query = tasks.sample_query(kind, anchor_kind, direction, seq, stream)
                        gold = tasks.gold_answer(seq, query)
                        if kind == QueryKind.ITEM_TO_POSITION:
                            assert gold.value == query.offset


def test_sample_query_relative_on_single_item():
    with pytest.raises(OutOfRange):
        tasks.sample_query(QueryKind.POSITION_TO_ITEM, AnchorKind.RELATIVE, FORWARD, letters(1), np.random.default_rng(0))
