"""
Construction des jeux d'évaluation : grille de conditions, prompts few-shot par condition,
prompts PyIndex.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

from processing.errors import ConfigError, GenerationExhausted
from processing.prompting import default_phrasing, render_prompt, render_pyindex_prompt
from processing.pyindex import MAX_ATTEMPTS, PyIndexCategory, generate_case
from processing.sequences import generate_eval_set, get_pool
from processing.tasks import build_query, relative_anchor_positions, valid_offsets
from processing.utils import read_jsonl, substream, write_lines_atomic
from schemas.config import GenSpec, GridConfig
from schemas.records import AnswerStyle, ListFormat, PromptInstance, PromptVariant, PyIndexCase
from schemas.tasks import Anchor, AnchorKind, Direction, IndexQuery, ItemKind, QueryKind, Sequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridCell:
    """Une condition de la grille (sans ancre ni direction pour le comptage)."""
    kind: QueryKind
    anchor: Optional[AnchorKind]
    direction: Optional[Direction]
    item_kind: ItemKind
    length: int

    @property
    def name(self) -> str:
        parts = [self.kind.value]
        if self.anchor is not None:
            parts += [self.anchor.value, self.direction.value]
        parts += [self.item_kind.value, f"L{self.length}"]
        return "_".join(parts)


def grid_cells(grid: GridConfig) -> List[GridCell]:
    """
    Énumère les conditions : types d'éléments × longueurs × tâches × ancres × directions, plus le comptage.

    Args:
        grid (GridConfig): Grille.
    Returns:
        list[GridCell]: 48 conditions de récupération + 6 de comptage avec la grille par défaut.
    """
    cells = []
    for item_kind in grid.item_kinds:
        for length in grid.lengths:
            for kind in grid.tasks:
                for anchor in grid.anchors:
                    for direction in grid.directions:
                        cells.append(GridCell(kind, anchor, direction, item_kind, length))
            if grid.include_counting:
                cells.append(GridCell(QueryKind.COUNTING, None, None, item_kind, length))
    return cells


def _variant(query: IndexQuery, grid: GridConfig) -> PromptVariant:
    return PromptVariant(
        list_format=ListFormat(grid.list_format),
        phrasing=default_phrasing(query),
        answer_style=AnswerStyle(grid.answer_style),
    )


def _anchor_for(cell: GridCell, length: int, stream, n: Optional[int] = None) -> Anchor:
    """Ancre de la condition ; en relatif, r est tiré parmi les positions admissibles (pour n s'il est fixé)."""
    if cell.anchor == AnchorKind.ENDPOINT:
        return Anchor.endpoint()
    candidates = relative_anchor_positions(cell.direction, length)
    if n is not None:
        candidates = [r for r in candidates if n in valid_offsets(Anchor.relative(r), cell.direction, length)]
    return Anchor.relative(int(candidates[int(stream.integers(len(candidates)))]))


def generate_condition_prompts(
    cell: GridCell,
    grid: GridConfig,
    seed: int,
    pool_files: Optional[Dict[str, str]] = None,
    workers: int = 1,
) -> List[PromptInstance]:
    """
    Génère les prompts d'une condition.

    Par défaut : sequences_per_condition séquences, et pour chacune tous les offsets valides
    (en relatif, r est tiré une fois par séquence). Avec trials_per_position : pour chaque
    offset n, trials_per_position séquences (r tiré pour chaque essai parmi les ancres où n est valide).

    Args:
        cell (GridCell): Condition.
        grid (GridConfig): Grille (pools, format de liste, nombre de séquences).
        seed (int): Graine globale.
        pool_files (dict, optional): Pools utilisateur.
        workers (int): Threads de génération des séquences.
    Returns:
        list[PromptInstance]: Prompts de la condition.
    Raises:
        ConfigError: Élément → position sur un pool de nombres (la cible pourrait valoir sa position).
    """
    pool = get_pool(grid.pools[cell.item_kind], pool_files)
    if cell.kind == QueryKind.ITEM_TO_POSITION and any(member.strip().isdigit() for member in pool.members):
        raise ConfigError(f"Pool {pool.name!r} has numeric items, item2pos answers could repeat the target")
    count = grid.trials_per_position or grid.sequences_per_condition
    sequences = generate_eval_set(GenSpec(pool=pool.name, length=cell.length, seed=seed, count=count), pool, workers)

    def _prompt(index: int, seq: Sequence, query: IndexQuery) -> PromptInstance:
        offset = query.offset or 0
        coordinates = {"seed": seed, "condition": cell.name, "sequence": index, "offset": offset}
        demo_stream = substream(seed, "demos", cell.name, index, offset)
        return render_prompt(seq, query, _variant(query, grid), demo_stream, pool=pool, seed_coordinates=coordinates)

    prompts = []
    if cell.kind == QueryKind.COUNTING:
        for index, seq in enumerate(sequences):
            prompts.append(_prompt(index, seq, IndexQuery.counting()))
        return prompts

    if grid.trials_per_position:
        max_offset = cell.length if cell.anchor == AnchorKind.ENDPOINT else cell.length - 1
        for n in range(1, max_offset + 1):
            for index, seq in enumerate(sequences):
                stream = substream(seed, "anchor", cell.name, index, n)
                anchor = _anchor_for(cell, cell.length, stream, n)
                prompts.append(_prompt(index, seq, build_query(cell.kind, anchor, cell.direction, n, seq)))
        return prompts

    for index, seq in enumerate(sequences):
        stream = substream(seed, "anchor", cell.name, index)
        anchor = _anchor_for(cell, cell.length, stream)
        for n in sorted(valid_offsets(anchor, cell.direction, cell.length)):
            prompts.append(_prompt(index, seq, build_query(cell.kind, anchor, cell.direction, n, seq)))
    logger.debug(f"{cell.name} : {len(prompts)} prompts ({len(sequences)} séquences)")
    return prompts


def write_prompts(path: Union[str, Path], prompts: List[PromptInstance]) -> int:
    return write_lines_atomic(path, (prompt.model_dump_json() for prompt in prompts))


def read_prompts(path: Union[str, Path]) -> List[PromptInstance]:
    return [PromptInstance.model_validate(raw) for raw in read_jsonl(path)]


def build_pyindex_prompts(cases: List[PyIndexCase], seed: int) -> List[PromptInstance]:
    """
    Rend chaque cas PyIndex avec 3 démonstrations de sa catégorie, tirées hors du benchmark.

    Args:
        cases (list[PyIndexCase]): Cas du benchmark.
        seed (int): Graine globale.
    Returns:
        list[PromptInstance]: Un prompt par cas.
    """
    held_out = {case.source_text for case in cases}
    prompts = []
    for case in cases:
        demos = []
        for attempt in range(MAX_ATTEMPTS):
            stream = substream(seed, "pyindex-demo", case.case_id, attempt)
            demo = generate_case(PyIndexCategory(case.category), stream, f"{case.case_id}-demo{attempt}")
            if demo.source_text in held_out or any(demo.source_text == other.source_text for other in demos):
                continue
            demos.append(demo)
            if len(demos) == 3:
                break
        else:
            raise GenerationExhausted(f"Not enough demonstrations for {case.case_id}")
        prompts.append(render_pyindex_prompt(case, demos))
    return prompts
