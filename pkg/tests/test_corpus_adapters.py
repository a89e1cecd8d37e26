import json
from pathlib import Path

import numpy as np
import pytest

from processing import corpus_adapters, sft_export
from processing.errors import SourceExhausted
from processing.sequences import get_pool
from schemas.config import CorpusSource, MixtureConfig, MixtureCounts
from schemas.records import AnswerStyle, PromptVariant, StructureKind
from schemas.tasks import Anchor, AnchorKind, Direction, IndexQuery, ItemKind, QueryKind

FIXTURES = Path(__file__).parent / "fixtures"
DIALOGS = CorpusSource(
    path=str(FIXTURES / "dialogs.jsonl"), text_field=None, turns_field="conversations",
    role_field="from", content_field="value",
)


def _documents():
    return corpus_adapters.load_corpus(CorpusSource(path=str(FIXTURES / "documents.jsonl")))


def _code():
    return corpus_adapters.load_code_snippets(CorpusSource(path=str(FIXTURES / "code.jsonl")))


def test_extract_structures_matches_inventory():
    """
    Teste l'extraction sur 50 documents annotés à la main (type, nombre d'éléments, éléments écartés).

    Args:
        Aucun
    Returns:
        None
    """
    inventory = json.loads((FIXTURES / "documents_inventory.json").read_text(encoding="utf-8"))
    records = _documents()
    assert len(records) == 50
    for record in records:
        found = [
            [structure.kind.value, len(structure.items), structure.dropped]
            for structure in corpus_adapters.extract_structures(record)
        ]
        assert found == inventory[record.source], record.source


def test_extracted_spans_point_into_text():
    record = _documents()[0]
    structure = corpus_adapters.extract_structures(record)[0]
    start, end = structure.span
    assert record.text[start:end].startswith("1. alpha0")
    assert record.text[start:end].endswith("6. foxtrot0")
    assert structure.items == ["alpha0", "bravo0", "charlie0", "delta0", "echo0", "foxtrot0"]


def test_table_rows_exclude_header():
    table = [r for r in _documents() if r.source == "doc-2-0"][0]
    structure = corpus_adapters.extract_structures(table)[0]
    assert structure.kind == StructureKind.MARKDOWN_TABLE
    assert structure.items[0] == "anvil0 | 1"
    assert structure.item_kind == ItemKind.GENERIC


def test_render_structure_roundtrip():
    """
    Teste que le rendu d'une structure extraite redonne les mêmes éléments à la réextraction.

    Args:
        Aucun
    Returns:
        None
    """
    for record in _documents():
        for structure in corpus_adapters.extract_structures(record):
            again = corpus_adapters.extract_from_text(corpus_adapters.render_structure(structure), record.source)
            assert len(again) == 1
            assert again[0].kind == structure.kind
            assert again[0].items == structure.items


def test_load_corpus_dialogs_maps_roles_and_skips_invalid():
    records = corpus_adapters.load_corpus(DIALOGS)
    assert [record.source for record in records] == ["dlg-1", "dlg-2", "dlg-3"]
    assert [turn.role for turn in records[0].turns] == ["user", "assistant"]
    assert records[0].text.startswith("Give me the planets")


def test_window_code():
    """
    Teste le découpage en fenêtres : longueurs dans [5, 30], fenêtres contiguës sans recouvrement,
    aucune fenêtre pour un extrait trop court.

    Args:
        Aucun
    Returns:
        None
    """
    lines = [f"value_{index} = {index} * 2" for index in range(80)]
    windows = corpus_adapters.window_code("\n".join(lines), np.random.default_rng(4))
    assert windows
    assert all(5 <= window.length <= 30 for window in windows)
    assert all(window.item_kind == ItemKind.CODE_LINE for window in windows)
    flattened = [text for window in windows for text in window.texts]
    assert flattened == lines[:len(flattened)]
    assert len(lines) - len(flattened) < 5
    assert corpus_adapters.window_code("x = 1\ny = 2", np.random.default_rng(4)) == []


def test_window_code_drops_duplicate_lines():
    snippet = "\n".join(["pass"] * 12)
    assert corpus_adapters.window_code(snippet, np.random.default_rng(0)) == []


def test_adapt_dialog():
    """
    Teste l'ajout d'une question de suivi à un dialogue : tours d'origine conservés, renvoi à la liste
    de la réponse précédente, réponse et intervalle corrects.

    Args:
        Aucun
    Returns:
        None
    """
    record = corpus_adapters.load_corpus(DIALOGS)[0]
    structure = corpus_adapters.extract_from_text(record.turns[-1].content, record.source)[0]
    query = IndexQuery(kind=QueryKind.POSITION_TO_ITEM, anchor=Anchor.endpoint(), direction=Direction.BACKWARD, offset=2)
    example = corpus_adapters.adapt_dialog(record, structure, query)
    assert example.messages[:2] == record.turns
    assert example.messages[2].content == (
        "Consider the numbered list in your previous answer. What item is at the 2nd position from the end?\n"
        "Respond with ONLY that single item, nothing else."
    )
    assert example.messages[3].content == "Uranus"
    assert example.answer_text == "Uranus"
    assert example.answer_span == (0, 6)
    assert example.provenance == "dialog:dlg-1"


def test_adapt_dialog_needs_assistant_turn():
    record = _documents()[0]
    structure = corpus_adapters.extract_structures(record)[0]
    with pytest.raises(ValueError):
        corpus_adapters.adapt_dialog(record, structure, IndexQuery.counting())


def test_make_training_example_byte_span():
    seq = corpus_adapters.structure_sequence(corpus_adapters.extract_from_text(
        "- café\n- thé\n- maté\n- cacao\n- chaï", "menu")[0])
    query = IndexQuery(kind=QueryKind.POSITION_TO_ITEM, anchor=Anchor.endpoint(), direction=Direction.FORWARD, offset=2)
    variant = PromptVariant(answer_style=AnswerStyle.FRAMED)
    example = corpus_adapters.make_training_example(seq, query, variant, provenance="adapted:menu")
    start, end = example.answer_span
    assert example.messages[-1].content.encode("utf-8")[start:end].decode("utf-8") == "thé"


def test_mixture_direction_and_anchor_rates():
    """
    Teste les proportions du mélange synthétique par défaut : avant et extrémité dans [0.285, 0.315].

    Args:
        Aucun
    Returns:
        None
    """
    config = MixtureConfig(counts=MixtureCounts(synthetic=20000, code=0, adapted=0), seed=2024)
    pools = [get_pool(name) for name in config.synthetic_pools]
    examples = list(corpus_adapters.build_mixture(config, pools, [], []))
    assert len(examples) == 20000
    forward = sum(example.condition.direction == Direction.FORWARD for example in examples) / len(examples)
    endpoint = sum(example.condition.anchor == AnchorKind.ENDPOINT for example in examples) / len(examples)
    assert 0.285 <= forward <= 0.315
    assert 0.285 <= endpoint <= 0.315
    multiturn = sum(example.provenance.startswith("multiturn:") for example in examples)
    assert 0 < multiturn < 2000


def test_mixture_forced_forward():
    config = MixtureConfig(p_forward=1.0, counts=MixtureCounts(synthetic=300, code=0, adapted=0), seed=1)
    examples = corpus_adapters.build_mixture(config, [get_pool("letters")], [], [])
    assert all(example.condition.direction == Direction.FORWARD for example in examples)


def test_mixture_is_deterministic_and_ordered(tmp_path):
    """
    Teste la reproductibilité du mélange complet (synthétique, code, documents, dialogues) et l'ordre des sources.

    Args:
        tmp_path: fixture pytest (répertoire temporaire)
    Returns:
        None
    """
    config = MixtureConfig(counts=MixtureCounts(synthetic=40, code=1, adapted=20), seed=7)
    pools = [get_pool("letters"), get_pool("animals")]
    records = _documents() + corpus_adapters.load_corpus(DIALOGS)

    first = tmp_path / "a.jsonl"
    second = tmp_path / "b.jsonl"
    assert corpus_adapters.write_mixture(first, corpus_adapters.build_mixture(config, pools, _code(), records)) == 61
    corpus_adapters.write_mixture(second, corpus_adapters.build_mixture(config, pools, _code(), records, workers=4))
    assert first.read_bytes() == second.read_bytes()

    examples = corpus_adapters.read_mixture(first)
    sources = [example.provenance.split(":")[0] for example in examples]
    assert set(sources[:40]) <= {"synthetic", "multiturn"}
    assert sources[40] == "code"
    assert set(sources[41:]) <= {"adapted", "dialog"}
    for example in examples:
        start, end = example.answer_span
        assert example.messages[-1].content.encode("utf-8")[start:end].decode("utf-8") == example.answer_text


def test_mixture_source_exhausted(tmp_path):
    config = MixtureConfig(counts=MixtureCounts(synthetic=0, code=0, adapted=1000), seed=0)
    with pytest.raises(SourceExhausted):
        list(corpus_adapters.build_mixture(config, [], [], _documents()))
    path = tmp_path / "mixture.jsonl"
    with pytest.raises(SourceExhausted):
        corpus_adapters.write_mixture(path, corpus_adapters.build_mixture(config, [], [], _documents()))
    assert not path.exists()


def test_default_mixture_proportions_in_export(tmp_path):
    """
    Teste les effectifs par défaut (20 000 synthétiques, 4 000 code, 46 000 adaptés, 70 000 au total)
    et leur report dans le manifeste d'export sur un mélange réduit au centième.

    Args:
        tmp_path: fixture pytest (répertoire temporaire)
    Returns:
        None
    """
    defaults = MixtureCounts()
    assert (defaults.synthetic, defaults.code, defaults.adapted) == (20000, 4000, 46000)
    assert defaults.total == 70000

    scaled = MixtureCounts(synthetic=defaults.synthetic // 100, code=defaults.code // 100, adapted=defaults.adapted // 100)
    config = MixtureConfig(counts=scaled, seed=3, queries_per_structure=20, queries_per_window=40)
    pools = [get_pool(name) for name in config.synthetic_pools]
    records = _documents() + corpus_adapters.load_corpus(DIALOGS)
    manifest = sft_export.export(corpus_adapters.build_mixture(config, pools, _code(), records), tmp_path, seed=3)

    assert manifest.total == 700
    per_source = manifest.per_source
    assert per_source.get("synthetic", 0) + per_source.get("multiturn", 0) == 200
    assert per_source["code"] == 40
    assert per_source.get("adapted", 0) + per_source.get("dialog", 0) == 460
    assert sum(per_source.values()) == manifest.total
    assert sum(manifest.per_direction.values()) == 700
    assert len(sft_export.read_export(tmp_path / sft_export.EXPORT_FILE)) == 700
