"""
Adaptation de corpus externes en exemples d'entraînement positionnels.

- extraction des structures ordonnées (listes numérotées, listes à puces, tableaux markdown, blocs de code)
- découpage du code en fenêtres de lignes
- assemblage déterministe du mélange synthétique / code / corpus adaptés
"""
import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterator, List, Optional, Sequence as Seq, Tuple, Union

import numpy as np
from pydantic import ValidationError

from processing.errors import SourceExhausted
from processing.prompting import (
    check_compatible, condition_for, default_phrasing, render_answer, render_list, render_question,
)
from processing.sequences import ItemPool, sample_length, sample_sequence
from processing.tasks import gold_answer, sample_query
from processing.utils import read_jsonl, substream, write_lines_atomic
from schemas.config import CorpusSource, MixtureConfig
from schemas.records import (
    AnswerStyle, ChatMessage, CorpusRecord, ExtractedStructure, ListFormat, Phrasing, PromptVariant,
    StructureKind, TrainingExample,
)
from schemas.tasks import AnchorKind, Direction, IndexQuery, ItemKind, QueryKind, Sequence

logger = logging.getLogger(__name__)

MIN_ITEMS = 5
MAX_ITEM_CHARS = 60

NUMBERED_RE = re.compile(r"^\s*(\d+)[.)]\s+(.*)$")
BULLET_RE = re.compile(r"^\s*[-*•]\s+(.*)$")
TABLE_SEPARATOR_RE = re.compile(r"^\s*\|?\s*:?-{3,}:?\s*(\|\s*:?-{3,}:?\s*)*\|?\s*$")
FENCE_PREFIX = "```"

DIALOG_REFERENCES = {
    StructureKind.NUMBERED_LIST: "the numbered list in your previous answer",
    StructureKind.BULLET_LIST: "the bulleted list in your previous answer",
    StructureKind.MARKDOWN_TABLE: "the rows of the table in your previous answer",
    StructureKind.CODE_BLOCK: "the lines of the code block in your previous answer",
}
MULTITURN_REFERENCE = "the same sequence"


# ---------- Chargement des corpus ----------

def _get_path(raw: dict, path: Optional[str]):
    """Lit un champ éventuellement imbriqué ("a.b.c")."""
    if not path:
        return None
    value = raw
    for key in path.split("."):
        if not isinstance(value, dict) or key not in value:
            return None
        value = value[key]
    return value


def load_corpus(source: CorpusSource) -> List[CorpusRecord]:
    """
    Charge un corpus JSONL (un enregistrement par ligne) en CorpusRecord.

    Les rôles des tours de dialogue sont traduits via source.role_map (ex. human -> user).
    Les enregistrements invalides sont ignorés avec un avertissement.

    Args:
        source (CorpusSource): Chemin et noms des champs à lire.
    Returns:
        list[CorpusRecord]: Enregistrements valides, dans l'ordre du fichier.
    """
    path = Path(source.path)
    records = []
    for index, raw in enumerate(read_jsonl(path)):
        source_id = _get_path(raw, source.id_field)
        source_id = str(source_id) if source_id is not None else f"{path.stem}-{index}"
        try:
            turns = None
            raw_turns = _get_path(raw, source.turns_field)
            if raw_turns:
                turns = [
                    ChatMessage(
                        role=source.role_map.get(turn.get(source.role_field), turn.get(source.role_field)),
                        content=turn.get(source.content_field) or "",
                    )
                    for turn in raw_turns
                ]
            text = _get_path(raw, source.text_field)
            if not text and turns:
                text = "\n\n".join(turn.content for turn in turns)
            records.append(CorpusRecord(source=source_id, text=text or "", turns=turns))
        except (ValidationError, AttributeError, TypeError) as e:
            logger.warning(f"Enregistrement ignoré ({path.name}, {source_id}) : {e}")
    logger.info(f"{len(records)} enregistrements chargés depuis {path.name}")
    return records


def load_code_snippets(source: CorpusSource) -> List[str]:
    """Charge les extraits de code d'un corpus JSONL (champ texte)."""
    return [record.text for record in load_corpus(source)]


# ---------- Extraction des structures ----------

def _clean_items(raw_items: List[str]) -> Tuple[List[str], int]:
    kept, seen = [], set()
    for raw in raw_items:
        item = raw.strip()
        if not item or len(item) > MAX_ITEM_CHARS or item in seen:
            continue
        seen.add(item)
        kept.append(item)
    return kept, len(raw_items) - len(kept)


def _table_cells(line: str) -> List[str]:
    stripped = line.strip()
    if stripped.startswith("|"):
        stripped = stripped[1:]
    if stripped.endswith("|"):
        stripped = stripped[:-1]
    return [cell.strip() for cell in stripped.split("|")]


def _scan_list(lines: List[str], start: int, numbered: bool) -> Tuple[List[str], int]:
    """
    Lit une liste maximale à partir de lines[start].
    Les lignes vides ne coupent pas la liste ; toute autre ligne la termine.
    Renvoie les éléments bruts et l'index de la dernière ligne de la liste.
    """
    items, last, expected = [], start, 1
    index = start
    while index < len(lines):
        line = lines[index]
        if not line.strip():
            index += 1
            continue
        if numbered:
            match = NUMBERED_RE.match(line)
            if not match or int(match.group(1)) != expected:
                break
            expected += 1
            items.append(match.group(2))
        else:
            match = BULLET_RE.match(line)
            if not match:
                break
            items.append(match.group(1))
        last = index
        index += 1
    return items, last


def extract_from_text(text: str, source: str) -> List[ExtractedStructure]:
    """
    Extrait les structures ordonnées d'un texte.

    Args:
        text (str): Document (ou tour de dialogue).
        source (str): Identifiant de l'enregistrement d'origine.
    Returns:
        list[ExtractedStructure]: Structures d'au moins 5 éléments utilisables, dans l'ordre du texte.
    """
    lines = text.split("\n")
    offsets, position = [], 0
    for line in lines:
        offsets.append(position)
        position += len(line) + 1

    structures = []

    def _emit(kind: StructureKind, raw_items: List[str], first: int, last: int):
        items, dropped = _clean_items(raw_items)
        if len(items) < MIN_ITEMS:
            return
        span = (offsets[first], offsets[last] + len(lines[last]))
        structures.append(ExtractedStructure(kind=kind, items=items, source=source, span=span, dropped=dropped))

    index = 0
    while index < len(lines):
        line = lines[index]
        stripped = line.strip()
        if stripped.startswith(FENCE_PREFIX):
            end = index + 1
            while end < len(lines) and not lines[end].strip().startswith(FENCE_PREFIX):
                end += 1
            last = min(end, len(lines) - 1)
            _emit(StructureKind.CODE_BLOCK, [body for body in lines[index + 1:end] if body.strip()], index, last)
            index = end + 1
            continue
        if "|" in stripped and index + 1 < len(lines) and TABLE_SEPARATOR_RE.match(lines[index + 1]) \
                and "|" in lines[index + 1]:
            end = index + 2
            rows = []
            while end < len(lines) and "|" in lines[end] and lines[end].strip():
                rows.append(" | ".join(_table_cells(lines[end])))
                end += 1
            _emit(StructureKind.MARKDOWN_TABLE, rows, index, max(end - 1, index + 1))
            index = end
            continue
        match = NUMBERED_RE.match(line)
        if match and int(match.group(1)) == 1:
            raw_items, last = _scan_list(lines, index, numbered=True)
            _emit(StructureKind.NUMBERED_LIST, raw_items, index, last)
            index = last + 1
            continue
        if BULLET_RE.match(line):
            raw_items, last = _scan_list(lines, index, numbered=False)
            _emit(StructureKind.BULLET_LIST, raw_items, index, last)
            index = last + 1
            continue
        index += 1
    return structures


def extract_structures(record: CorpusRecord) -> List[ExtractedStructure]:
    """
    Extrait toutes les structures ordonnées d'un enregistrement.

    Args:
        record (CorpusRecord): Enregistrement valide.
    Returns:
        list[ExtractedStructure]: Listes numérotées, listes à puces, tableaux (en-tête exclu) et
        blocs de code ayant au moins 5 éléments après nettoyage ; liste vide sinon.
    """
    return extract_from_text(record.text, record.source)


def render_structure(structure: ExtractedStructure) -> str:
    """
    Rend une structure dans sa syntaxe d'origine (inverse de l'extraction).

    Args:
        structure (ExtractedStructure): Structure extraite.
    Returns:
        str: Texte markdown.
    """
    items = structure.items
    if structure.kind == StructureKind.NUMBERED_LIST:
        return render_list(items, ListFormat.NUMBERED_LIST)
    if structure.kind == StructureKind.BULLET_LIST:
        return render_list(items, ListFormat.BULLET_LIST)
    if structure.kind == StructureKind.CODE_BLOCK:
        return render_list(items, ListFormat.CODE_BLOCK)
    columns = items[0].count(" | ") + 1
    header = "| " + " | ".join(f"col{index}" for index in range(1, columns + 1)) + " |"
    separator = "|" + "|".join(" --- " for _ in range(columns)) + "|"
    rows = [f"| {item} |" for item in items]
    return "\n".join([header, separator] + rows)


def structure_sequence(structure: ExtractedStructure) -> Sequence:
    return Sequence.from_texts(structure.items, kind=structure.item_kind)


# ---------- Fenêtres de code ----------

def window_code(snippet: str, stream: np.random.Generator, window_range: Tuple[int, int] = (5, 30)) -> List[Sequence]:
    """
    Découpe un extrait de code en fenêtres contiguës de lignes.

    Les fenêtres se suivent sans recouvrement ; chaque longueur est tirée uniformément dans
    [5, min(30, lignes restantes)]. Une fenêtre dont les lignes (sans indentation) ne sont
    pas toutes distinctes est écartée.

    Args:
        snippet (str): Code source.
        stream (np.random.Generator): Flux aléatoire.
        window_range (tuple): Longueurs min et max d'une fenêtre.
    Returns:
        list[Sequence]: Séquences de lignes de code (vide si moins de 5 lignes non vides).
    """
    low, high = window_range
    lines = [line.rstrip() for line in snippet.splitlines() if line.strip()]
    if len(lines) < low:
        return []
    windows, start = [], 0
    while len(lines) - start >= low:
        size = int(stream.integers(low, min(high, len(lines) - start) + 1))
        window = lines[start:start + size]
        start += size
        stripped = [line.strip() for line in window]
        if len(set(stripped)) != len(stripped):
            logger.debug(f"Fenêtre écartée (lignes en double) : {stripped[:2]}...")
            continue
        windows.append(Sequence.from_texts(window, kind=ItemKind.CODE_LINE))
    return windows


# ---------- Exemples d'entraînement ----------

def byte_span(text: str, char_span: Tuple[int, int]) -> Tuple[int, int]:
    """Convertit un intervalle en caractères en intervalle en octets UTF-8."""
    start, end = char_span
    byte_start = len(text[:start].encode("utf-8"))
    return byte_start, byte_start + len(text[start:end].encode("utf-8"))


def make_training_example(
    seq: Sequence,
    query: IndexQuery,
    variant: PromptVariant,
    provenance: str,
    history: Optional[List[ChatMessage]] = None,
    reference: Optional[str] = None,
) -> TrainingExample:
    """
    Construit un exemple supervisé zéro-shot : question puis réponse de référence.

    Args:
        seq (Sequence): Séquence interrogée.
        query (IndexQuery): Requête valide sur seq.
        variant (PromptVariant): Présentation (format de liste, formulation, style de réponse).
        provenance (str): Étiquette de source ("synthetic:letters", "code:12"...).
        history (list[ChatMessage], optional): Tours précédents conservés tels quels.
        reference (str, optional): Renvoi à une liste déjà présente dans l'historique.
    Returns:
        TrainingExample: Exemple dont answer_span (en octets) découpe answer_text dans le dernier message.
    """
    gold = gold_answer(seq, query)
    question = render_question(seq, query, variant, reference=reference)
    answer_message, char_span = render_answer(gold, variant.answer_style)
    messages = list(history or []) + [
        ChatMessage(role="user", content=question.user_text),
        ChatMessage(role="assistant", content=answer_message),
    ]
    return TrainingExample(
        messages=messages,
        answer_text=gold.as_text(),
        answer_span=byte_span(answer_message, char_span),
        condition=condition_for(seq, query, variant),
        provenance=provenance,
    )


def adapt_dialog(
    record: CorpusRecord,
    structure: ExtractedStructure,
    query: IndexQuery,
    answer_style: AnswerStyle = AnswerStyle.BARE,
) -> TrainingExample:
    """
    Ajoute la question positionnelle comme tour de suivi d'un dialogue existant.

    Les tours d'origine sont conservés mot pour mot ; la question renvoie à la liste de la
    dernière réponse de l'assistant au lieu de la recopier.

    Args:
        record (CorpusRecord): Dialogue dont le dernier tour est une réponse de l'assistant.
        structure (ExtractedStructure): Structure extraite de ce dernier tour.
        query (IndexQuery): Requête sur la structure.
        answer_style (AnswerStyle): Style de la réponse ajoutée.
    Returns:
        TrainingExample: Dialogue + question + réponse.
    Raises:
        TargetNotFound: Si la cible d'une requête item→position n'est pas dans la structure.
    """
    if not record.turns or record.turns[-1].role != "assistant":
        raise ValueError(f"Record {record.source!r} has no final assistant turn to adapt")
    variant = PromptVariant(phrasing=default_phrasing(query), answer_style=answer_style)
    return make_training_example(
        structure_sequence(structure),
        query,
        variant,
        provenance=f"dialog:{record.source}",
        history=record.turns,
        reference=DIALOG_REFERENCES[structure.kind],
    )


# ---------- Mélange ----------

def _draw_shape(config: MixtureConfig, stream: np.random.Generator) -> Tuple[QueryKind, AnchorKind, Direction]:
    """Direction, ancre et type de requête tirés indépendamment."""
    direction = Direction.FORWARD if stream.random() < config.p_forward else Direction.BACKWARD
    anchor = AnchorKind.ENDPOINT if stream.random() < config.p_endpoint else AnchorKind.RELATIVE
    kinds = [QueryKind.POSITION_TO_ITEM, QueryKind.ITEM_TO_POSITION]
    if config.include_counting:
        kinds.append(QueryKind.COUNTING)
    kind = kinds[int(stream.integers(len(kinds)))]
    return kind, anchor, direction


def _draw_variant(query: IndexQuery, formats: Seq[ListFormat], config: MixtureConfig,
                  stream: np.random.Generator) -> PromptVariant:
    list_format = formats[int(stream.integers(len(formats)))]
    phrasing = default_phrasing(query)
    if phrasing == Phrasing.ORDINAL_FROM_END and stream.random() < 0.5:
        phrasing = Phrasing.SECOND_TO_LAST_STYLE
    style = AnswerStyle.FRAMED if stream.random() < config.p_framed else AnswerStyle.BARE
    variant = PromptVariant(list_format=list_format, phrasing=phrasing, answer_style=style)
    check_compatible(query, variant)
    return variant


SYNTHETIC_FORMATS = (ListFormat.COMMA_LINE, ListFormat.BULLET_LIST, ListFormat.NUMBERED_LIST, ListFormat.CODE_BLOCK)
DOCUMENT_FORMATS = (ListFormat.COMMA_LINE, ListFormat.BULLET_LIST, ListFormat.NUMBERED_LIST)


def _synthetic_example(config: MixtureConfig, pools: List[ItemPool], index: int) -> TrainingExample:
    stream = substream(config.seed, "synthetic", index)
    kind, anchor, direction = _draw_shape(config, stream)
    pool = pools[int(stream.integers(len(pools)))]
    length = sample_length(config.synthetic_length, pool, stream)
    seq = sample_sequence(pool, length, stream)
    query = sample_query(kind, anchor, direction, seq, stream)
    variant = _draw_variant(query, SYNTHETIC_FORMATS, config, stream)
    if stream.random() >= config.p_multiturn:
        return make_training_example(seq, query, variant, provenance=f"synthetic:{pool.name}")
    # conversation à deux questions sur la même liste ; seule la seconde réponse est supervisée
    first_query = sample_query(*_draw_shape(config, stream), seq, stream)
    first_variant = PromptVariant(list_format=variant.list_format, phrasing=default_phrasing(first_query))
    first_answer, _ = render_answer(gold_answer(seq, first_query))
    history = [
        ChatMessage(role="user", content=render_question(seq, first_query, first_variant).user_text),
        ChatMessage(role="assistant", content=first_answer),
    ]
    return make_training_example(
        seq, query, variant, provenance=f"multiturn:{pool.name}", history=history, reference=MULTITURN_REFERENCE,
    )


def _select(slots: list, count: int, config: MixtureConfig, source: str) -> list:
    if len(slots) < count:
        raise SourceExhausted(f"Source {source!r} supplies {len(slots)} examples, {count} requested")
    order = substream(config.seed, "order", source).permutation(len(slots))[:count]
    return [slots[int(index)] for index in order]


def _code_examples(config: MixtureConfig, snippets: List[str], workers: int) -> Iterator[TrainingExample]:
    if config.counts.code == 0:
        return

    def _windows(index: int) -> List[Tuple[int, Sequence]]:
        stream = substream(config.seed, "code-window", index)
        return [(index, window) for window in window_code(snippets[index], stream, config.code_window)]

    with ThreadPoolExecutor(max_workers=max(workers, 1)) as executor:
        per_snippet = list(executor.map(_windows, range(len(snippets))))
    slots = [
        (snippet_index, window, repeat)
        for windows in per_snippet
        for snippet_index, window in windows
        for repeat in range(config.queries_per_window)
    ]
    for index, (snippet_index, window, _) in enumerate(_select(slots, config.counts.code, config, "code")):
        stream = substream(config.seed, "code", index)
        query = sample_query(*_draw_shape(config, stream), window, stream)
        variant = _draw_variant(query, (ListFormat.CODE_BLOCK,), config, stream)
        yield make_training_example(window, query, variant, provenance=f"code:{snippet_index}")


def _record_structures(record: CorpusRecord) -> Tuple[CorpusRecord, List[ExtractedStructure], bool]:
    if record.turns and record.turns[-1].role == "assistant":
        return record, extract_from_text(record.turns[-1].content, record.source), True
    return record, extract_structures(record), False


def _adapted_examples(config: MixtureConfig, records: List[CorpusRecord], workers: int) -> Iterator[TrainingExample]:
    if config.counts.adapted == 0:
        return
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as executor:
        extracted = list(executor.map(_record_structures, records))
    slots = [
        (record, structure, is_dialog)
        for record, structures, is_dialog in extracted
        for structure in structures
        for _ in range(config.queries_per_structure)
    ]
    for index, (record, structure, is_dialog) in enumerate(_select(slots, config.counts.adapted, config, "adapted")):
        stream = substream(config.seed, "adapted", index)
        seq = structure_sequence(structure)
        query = sample_query(*_draw_shape(config, stream), seq, stream)
        if is_dialog and structure.dropped == 0:
            style = AnswerStyle.FRAMED if stream.random() < config.p_framed else AnswerStyle.BARE
            yield adapt_dialog(record, structure, query, answer_style=style)
            continue
        formats = (ListFormat.CODE_BLOCK,) if structure.kind == StructureKind.CODE_BLOCK else DOCUMENT_FORMATS
        variant = _draw_variant(query, formats, config, stream)
        yield make_training_example(seq, query, variant, provenance=f"adapted:{record.source}")


def build_mixture(
    config: MixtureConfig,
    pools: List[ItemPool],
    code_snippets: List[str],
    adapted_records: List[CorpusRecord],
    workers: int = 1,
) -> Iterator[TrainingExample]:
    """
    Assemble le mélange d'entraînement : exemples synthétiques, puis code, puis corpus adaptés.

    Pour chaque exemple, direction (avant avec probabilité p_forward), ancre (extrémité avec
    probabilité p_endpoint) et type de requête (position→item ou item→position à parts égales)
    sont tirés indépendamment dans un sous-flux propre à l'exemple.

    Args:
        config (MixtureConfig): Probabilités, effectifs par source et graine.
        pools (list[ItemPool]): Pools des séquences synthétiques.
        code_snippets (list[str]): Extraits de code à fenêtrer.
        adapted_records (list[CorpusRecord]): Documents et dialogues à adapter.
        workers (int): Threads utilisés pour l'extraction.
    Returns:
        Iterator[TrainingExample]: Exactement config.counts.total exemples.
    Raises:
        SourceExhausted: Si le code ou les corpus ne fournissent pas assez de structures.
    """
    if config.counts.synthetic and not pools:
        raise SourceExhausted("No pool available for synthetic examples")
    for index in range(config.counts.synthetic):
        yield _synthetic_example(config, pools, index)
    yield from _code_examples(config, code_snippets, workers)
    yield from _adapted_examples(config, adapted_records, workers)


def write_mixture(path: Union[str, Path], examples: Iterator[TrainingExample]) -> int:
    """
    Écrit le mélange en JSONL (écriture atomique : rien n'est écrit si une source s'épuise).

    Args:
        path (str | Path): Fichier de sortie.
        examples (Iterator[TrainingExample]): Exemples à écrire.
    Returns:
        int: Nombre d'exemples écrits.
    """
    start = time.time()
    count = write_lines_atomic(path, (example.model_dump_json() for example in examples))
    logger.info(f"{count} exemples écrits dans {path} en {time.time() - start:.2f} sec")
    return count


def read_mixture(path: Union[str, Path]) -> List[TrainingExample]:
    return [TrainingExample.model_validate(raw) for raw in read_jsonl(path)]
