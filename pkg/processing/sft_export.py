"""
Export SFT : exemples d'entraînement + intervalle de la réponse (octets UTF-8) pour une perte
appliquée uniquement à la réponse.

Correspondance avec un masque par token : m_t = 1 si le token t recouvre au moins un octet de
[start, end) dans le dernier message de l'assistant, 0 sinon. Tout tokenizer qui renvoie les
offsets de ses tokens permet de construire ce masque.
"""
import logging
import time
from collections import Counter
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

from processing.errors import SpanMismatch
from processing.utils import read_jsonl, write_json, write_lines_atomic
from schemas.records import ExportManifest, SftExample, TrainingExample

logger = logging.getLogger(__name__)

EXPORT_FILE = "sft.jsonl"
MANIFEST_FILE = "manifest.json"


def check_span(target_text: str, answer_text: str, span: Tuple[int, int]) -> None:
    """
    Vérifie que l'intervalle (en octets) découpe exactement la réponse dans le message cible.

    Raises:
        SpanMismatch: Intervalle invalide, UTF-8 coupé ou texte différent.
    """
    start, end = span
    data = target_text.encode("utf-8")
    if not 0 <= start < end <= len(data):
        raise SpanMismatch(f"Span {span} outside target of {len(data)} bytes")
    try:
        sliced = data[start:end].decode("utf-8")
    except UnicodeDecodeError as e:
        raise SpanMismatch(f"Span {span} splits a UTF-8 character") from e
    if sliced != answer_text:
        raise SpanMismatch(f"Span {span} slices {sliced!r}, expected {answer_text!r}")


def to_sft_example(example: TrainingExample) -> SftExample:
    """
    Convertit un exemple d'entraînement en enregistrement SFT vérifié.

    Args:
        example (TrainingExample): Exemple dont le dernier message est la réponse de l'assistant.
    Returns:
        SftExample: Même contenu + target_text.
    Raises:
        SpanMismatch: Si l'intervalle ne reproduit pas answer_text.
    """
    if not example.messages or example.messages[-1].role != "assistant":
        raise SpanMismatch(f"Example from {example.provenance!r} does not end with an assistant turn")
    target_text = example.messages[-1].content
    check_span(target_text, example.answer_text, example.answer_span)
    return SftExample(
        messages=example.messages,
        target_text=target_text,
        answer_text=example.answer_text,
        answer_span=example.answer_span,
        condition=example.condition,
        provenance=example.provenance,
    )


def source_of(provenance: str) -> str:
    """Source d'un exemple : "synthetic:letters" -> "synthetic"."""
    return provenance.split(":", 1)[0]


def export(examples: Iterable[TrainingExample], destination: Union[str, Path], seed: Optional[int] = None) -> ExportManifest:
    """
    Écrit les exemples au format SFT (JSONL) et le manifeste associé.

    L'écriture est atomique : au premier intervalle incohérent, rien n'est écrit.

    Args:
        examples (Iterable[TrainingExample]): Exemples à exporter.
        destination (str | Path): Répertoire de sortie.
        seed (int, optional): Graine de génération, recopiée dans le manifeste.
    Returns:
        ExportManifest: Chemin, total et effectifs par (tâche, ancre, direction, source).
    Raises:
        SpanMismatch: Si un exemple a un intervalle de réponse invalide.
    """
    start = time.time()
    destination = Path(destination)
    path = destination / EXPORT_FILE
    counts, per_direction, per_source = Counter(), Counter(), Counter()

    def _lines():
        for example in examples:
            record = to_sft_example(example)
            condition = record.condition
            anchor = condition.anchor.value if condition.anchor else "none"
            direction = condition.direction.value if condition.direction else "none"
            source = source_of(record.provenance)
            counts[f"{condition.task}/{anchor}/{direction}/{source}"] += 1
            per_direction[direction] += 1
            per_source[source] += 1
            yield record.model_dump_json()

    total = write_lines_atomic(path, _lines())
    manifest = ExportManifest(
        path=str(path),
        total=total,
        seed=seed,
        counts=dict(sorted(counts.items())),
        per_direction=dict(sorted(per_direction.items())),
        per_source=dict(sorted(per_source.items())),
    )
    write_json(destination / MANIFEST_FILE, manifest.model_dump(mode="json"))
    logger.info(f"Export SFT : {total} enregistrements écrits dans {path} en {time.time() - start:.2f} sec")
    return manifest


def read_export(path: Union[str, Path]) -> List[SftExample]:
    """Relit un fichier d'export SFT."""
    return [SftExample.model_validate(raw) for raw in read_jsonl(path)]


def character_mask(target_text: str, span: Tuple[int, int]) -> List[int]:
    """
    Masque par caractère dérivé de l'intervalle en octets : 1 sur la réponse, 0 ailleurs.

    Args:
        target_text (str): Dernier message de l'assistant.
        span (tuple): (début, fin) en octets.
    Returns:
        list[int]: Un indicateur par caractère de target_text.
    """
    start, end = span
    mask, offset = [], 0
    for char in target_text:
        size = len(char.encode("utf-8"))
        mask.append(1 if offset >= start and offset + size <= end else 0)
        offset += size
    return mask
