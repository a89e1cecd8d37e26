"""
Famille d'opérateurs d'indexation sur des séquences ordonnées.

Opérateurs (positions 1-based) :
    End+ : S[n]      End- : S[-n] = s_{L-n+1}
    Rel+ : S[r+n]    Rel- : S[r-n]
Les requêtes item→position inversent le même opérateur et renvoient l'offset n.
Toutes les fonctions sont pures.
"""
from typing import Set

from processing.errors import OutOfRange, TargetNotFound
from schemas.tasks import (
    Anchor, AnchorKind, AnswerKind, Direction, GoldAnswer, IndexQuery, QueryKind, Sequence,
)


def _check_anchor(anchor: Anchor, length: int) -> None:
    if anchor.kind == AnchorKind.RELATIVE and not 1 <= anchor.position <= length:
        raise OutOfRange(f"Relative anchor r={anchor.position} outside [1, {length}]")


def offset_for_position(anchor: Anchor, direction: Direction, position: int, length: int) -> int:
    """
    Inverse non vérifié de resolve_position : l'offset n qui mène à une position absolue.

    Le résultat peut être nul ou négatif quand la position n'est pas atteignable
    (sert à placer une réponse de modèle sur les axes d'une matrice de confusion).

    Args:
        anchor (Anchor): Ancre de la requête.
        direction (Direction): Direction d'indexation.
        position (int): Position absolue 1-based.
        length (int): Longueur L de la séquence.
    Returns:
        int: Offset n correspondant.
    """
    if anchor.kind == AnchorKind.ENDPOINT:
        return position if direction == Direction.FORWARD else length - position + 1
    if direction == Direction.FORWARD:
        return position - anchor.position
    return anchor.position - position


def resolve_position(anchor: Anchor, direction: Direction, n: int, length: int) -> int:
    """
    Résout une ancre, une direction et un offset en position absolue 1-based.

    Args:
        anchor (Anchor): Extrémité ou élément de référence à la position r.
        direction (Direction): Avant ou arrière.
        n (int): Offset (n >= 1).
        length (int): Longueur L de la séquence.
    Returns:
        int: n (End+), L-n+1 (End-), r+n (Rel+) ou r-n (Rel-).
    Raises:
        OutOfRange: Si la position résolue tombe hors de [1, L].
    """
    if n < 1:
        raise OutOfRange(f"Offset must be >= 1, got {n}")
    if length < 1:
        raise OutOfRange(f"Sequence length must be >= 1, got {length}")
    _check_anchor(anchor, length)
    if anchor.kind == AnchorKind.ENDPOINT:
        position = n if direction == Direction.FORWARD else length - n + 1
    elif direction == Direction.FORWARD:
        position = anchor.position + n
    else:
        position = anchor.position - n
    if not 1 <= position <= length:
        raise OutOfRange(f"Resolved position {position} outside [1, {length}]")
    return position


def valid_offsets(anchor: Anchor, direction: Direction, length: int) -> Set[int]:
    """
    Énumère les offsets n pour lesquels resolve_position réussit.

    Args:
        anchor (Anchor): Ancre (r dans [1, L] pour une ancre relative).
        direction (Direction): Direction d'indexation.
        length (int): Longueur L.
    Returns:
        set[int]: {1..L} pour une extrémité, {1..L-r} en Rel+, {1..r-1} en Rel- (éventuellement vide).
    """
    _check_anchor(anchor, length)
    if anchor.kind == AnchorKind.ENDPOINT:
        return set(range(1, length + 1))
    if direction == Direction.FORWARD:
        return set(range(1, length - anchor.position + 1))
    return set(range(1, anchor.position))


def gold_answer(seq: Sequence, query: IndexQuery) -> GoldAnswer:
    """
    Calcule la réponse de référence d'une requête sur une séquence.

    Args:
        seq (Sequence): Séquence d'éléments distincts.
        query (IndexQuery): Requête valide pour cette séquence.
    Returns:
        GoldAnswer: Élément (position→item), offset (item→position) ou longueur (comptage).
    Raises:
        OutOfRange: Position résolue invalide.
        TargetNotFound: Cible absente de la séquence.
    """
    if query.kind == QueryKind.COUNTING:
        return GoldAnswer(kind=AnswerKind.COUNT, value=seq.length)
    if query.kind == QueryKind.POSITION_TO_ITEM:
        position = resolve_position(query.anchor, query.direction, query.offset, seq.length)
        return GoldAnswer(kind=AnswerKind.ITEM, item=seq.item_at(position))
    target_position = seq.position_of(query.target.text)
    if target_position is None:
        raise TargetNotFound(f"Target {query.target.text!r} not in sequence")
    _check_anchor(query.anchor, seq.length)
    n = offset_for_position(query.anchor, query.direction, target_position, seq.length)
    # la cible doit être atteignable depuis l'ancre dans la direction demandée
    if n < 1:
        raise OutOfRange(
            f"Target at position {target_position} is not reachable {query.direction.value} from the anchor"
        )
    return GoldAnswer(kind=AnswerKind.OFFSET, value=n)


def invert_query(seq: Sequence, query: IndexQuery) -> IndexQuery:
    """
    Transforme une requête position→item en la requête item→position équivalente.

    Args:
        seq (Sequence): Séquence de la requête.
        query (IndexQuery): Requête position→item valide.
    Returns:
        IndexQuery: Même ancre et direction, cible = élément de référence ; sa réponse vaut query.offset.
    """
    if query.kind != QueryKind.POSITION_TO_ITEM:
        raise ValueError(f"Only position-to-item queries can be inverted, got {query.kind.value}")
    target = gold_answer(seq, query).item
    return IndexQuery(
        kind=QueryKind.ITEM_TO_POSITION,
        anchor=query.anchor,
        direction=query.direction,
        offset=query.offset,
        target=target,
    )


def sample_query(kind: QueryKind, anchor_kind: AnchorKind, direction: Direction, seq: Sequence, stream) -> IndexQuery:
    """
    Tire une requête valide d'une forme donnée sur une séquence.

    Pour une ancre relative, r est tiré parmi les positions qui admettent au moins un offset
    dans la direction demandée ; n est ensuite tiré uniformément dans valid_offsets.

    Args:
        kind (QueryKind): Type de requête.
        anchor_kind (AnchorKind): Extrémité ou relative.
        direction (Direction): Direction d'indexation.
        seq (Sequence): Séquence cible.
        stream (np.random.Generator): Flux aléatoire déterministe.
    Returns:
        IndexQuery: Requête valide pour seq.
    Raises:
        OutOfRange: Si aucune requête de cette forme n'existe (ancre relative sur L=1).
    """
    if kind == QueryKind.COUNTING:
        return IndexQuery.counting()
    length = seq.length
    if anchor_kind == AnchorKind.ENDPOINT:
        anchor = Anchor.endpoint()
    else:
        candidates = relative_anchor_positions(direction, length)
        if not candidates:
            raise OutOfRange(f"No relative anchor admits a {direction.value} offset when L={length}")
        anchor = Anchor.relative(int(candidates[int(stream.integers(len(candidates)))]))
    offsets = sorted(valid_offsets(anchor, direction, length))
    n = int(offsets[int(stream.integers(len(offsets)))])
    return build_query(kind, anchor, direction, n, seq)


def relative_anchor_positions(direction: Direction, length: int) -> list:
    """Positions r qui admettent au moins un offset dans la direction donnée."""
    if direction == Direction.FORWARD:
        return list(range(1, length))
    return list(range(2, length + 1))


def build_query(kind: QueryKind, anchor: Anchor, direction: Direction, n: int, seq: Sequence) -> IndexQuery:
    """
    Construit la requête (anchor, direction, n) du type voulu sur seq.

    Args:
        kind (QueryKind): Position→item ou item→position.
        anchor (Anchor): Ancre.
        direction (Direction): Direction.
        n (int): Offset.
        seq (Sequence): Séquence (pour la cible item→position).
    Returns:
        IndexQuery: Requête valide.
    """
    if kind == QueryKind.COUNTING:
        return IndexQuery.counting()
    position = resolve_position(anchor, direction, n, seq.length)
    if kind == QueryKind.POSITION_TO_ITEM:
        return IndexQuery(kind=kind, anchor=anchor, direction=direction, offset=n)
    return IndexQuery(kind=kind, anchor=anchor, direction=direction, offset=n, target=seq.item_at(position))
