import json

import pytest

from processing import sft_export
from processing.corpus_adapters import make_training_example
from processing.errors import SpanMismatch
from schemas.records import AnswerStyle, ChatMessage, PromptVariant
from schemas.tasks import Anchor, Direction, IndexQuery, ItemKind, QueryKind, Sequence

SEQ = Sequence.from_texts(["X", "V", "Z", "Y"], ItemKind.LETTER)
QUERY = IndexQuery(kind=QueryKind.POSITION_TO_ITEM, anchor=Anchor.endpoint(), direction=Direction.BACKWARD, offset=2)


def _example(style=AnswerStyle.BARE, provenance="synthetic:letters", query=QUERY):
    return make_training_example(SEQ, query, PromptVariant(answer_style=style), provenance=provenance)


def test_answer_spans():
    """
    Teste l'intervalle de réponse : (14, 15) dans "The answer is Z.", (0, 1) pour une réponse seule.

    Args:
        Aucun
    Returns:
        None
    """
    framed = sft_export.to_sft_example(_example(AnswerStyle.FRAMED))
    assert framed.target_text == "The answer is Z."
    assert framed.answer_span == (14, 15)
    bare = sft_export.to_sft_example(_example())
    assert bare.target_text == "Z"
    assert bare.answer_span == (0, 1)


def test_check_span_errors():
    with pytest.raises(SpanMismatch):
        sft_export.check_span("The answer is Z.", "Z", (13, 14))
    with pytest.raises(SpanMismatch):
        sft_export.check_span("Z", "Z", (0, 2))
    with pytest.raises(SpanMismatch):
        sft_export.check_span("thé", "é", (3, 4))


def test_export_aborts_on_span_mismatch(tmp_path):
    """
    Teste qu'un seul intervalle incohérent interrompt l'export sans laisser de fichier.

    Args:
        tmp_path: fixture pytest (répertoire temporaire)
    Returns:
        None
    """
    broken = _example().model_copy(update={"answer_span": (0, 0)})
    with pytest.raises(SpanMismatch):
        sft_export.export([_example(), broken], tmp_path)
    assert not (tmp_path / sft_export.EXPORT_FILE).exists()
    assert not (tmp_path / sft_export.MANIFEST_FILE).exists()


def test_export_needs_assistant_turn(tmp_path):
    example = _example()
    no_answer = example.model_copy(update={"messages": example.messages[:1]})
    with pytest.raises(SpanMismatch):
        sft_export.export([no_answer], tmp_path)


def test_export_manifest_and_reload(tmp_path):
    """
    Teste l'export : enregistrements relus à l'identique, manifeste avec effectifs par direction et par source.

    Args:
        tmp_path: fixture pytest (répertoire temporaire)
    Returns:
        None
    """
    forward = IndexQuery(kind=QueryKind.POSITION_TO_ITEM, anchor=Anchor.endpoint(), direction=Direction.FORWARD, offset=1)
    examples = [
        _example(),
        _example(AnswerStyle.FRAMED),
        _example(provenance="code:7", query=forward),
    ]
    manifest = sft_export.export(examples, tmp_path, seed=42)
    assert manifest.total == 3
    assert manifest.seed == 42
    assert manifest.per_direction == {"backward": 2, "forward": 1}
    assert manifest.per_source == {"code": 1, "synthetic": 2}
    assert manifest.counts["pos2item/endpoint/backward/synthetic"] == 2

    on_disk = json.loads((tmp_path / sft_export.MANIFEST_FILE).read_text(encoding="utf-8"))
    assert on_disk["total"] == 3

    records = sft_export.read_export(tmp_path / sft_export.EXPORT_FILE)
    assert [record.answer_text for record in records] == ["Z", "Z", "X"]
    for record, example in zip(records, examples):
        assert record.messages == example.messages
        assert record.messages[-1] == ChatMessage(role="assistant", content=record.target_text)


def test_character_mask():
    assert sft_export.character_mask("The answer is Z.", (14, 15)) == [0] * 14 + [1, 0]
    assert sft_export.character_mask("thé!", (0, 4)) == [1, 1, 1, 0]
    assert sft_export.source_of("adapted:doc-1-0") == "adapted"
