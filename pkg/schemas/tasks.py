from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from processing.errors import OutOfRange


class ItemKind(str, Enum):
    LETTER = "letter"
    WORD = "word"
    CODE_LINE = "code_line"
    GENERIC = "generic"


class AnchorKind(str, Enum):
    ENDPOINT = "endpoint"
    RELATIVE = "relative"


class Direction(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


class QueryKind(str, Enum):
    POSITION_TO_ITEM = "pos2item"
    ITEM_TO_POSITION = "item2pos"
    COUNTING = "count"


class AnswerKind(str, Enum):
    ITEM = "item"
    OFFSET = "offset"
    COUNT = "count"
    VALUE = "value"  # valeur entière d'une expression PyIndex


class Item(BaseModel):
    """Un élément d'une séquence (lettre, mot, ligne de code...)."""
    model_config = ConfigDict(frozen=True)

    text: str
    kind: ItemKind = ItemKind.GENERIC

    @model_validator(mode="after")
    def _check_text(self):
        if not self.text or not self.text.strip():
            raise ValueError("Item text must be non-empty")
        if self.kind == ItemKind.LETTER and (len(self.text) != 1 or not ("A" <= self.text <= "Z")):
            raise ValueError(f"Letter items must be a single uppercase letter, got {self.text!r}")
        return self


class Sequence(BaseModel):
    """Séquence ordonnée d'éléments deux à deux distincts (positions 1-based)."""
    model_config = ConfigDict(frozen=True)

    items: List[Item] = Field(min_length=1)

    @field_validator("items")
    @classmethod
    def _distinct(cls, items):
        texts = [item.text for item in items]
        if len(set(texts)) != len(texts):
            raise ValueError("Sequence items must be pairwise distinct")
        return items

    @classmethod
    def from_texts(cls, texts: List[str], kind: ItemKind = ItemKind.GENERIC) -> "Sequence":
        return cls(items=[Item(text=text, kind=kind) for text in texts])

    @property
    def length(self) -> int:
        return len(self.items)

    @property
    def texts(self) -> List[str]:
        return [item.text for item in self.items]

    @property
    def item_kind(self) -> ItemKind:
        return self.items[0].kind

    def item_at(self, position: int) -> Item:
        """
        Renvoie l'élément à la position absolue (1-based).

        Args:
            position (int): Position dans [1, L].
        Returns:
            Item: L'élément à cette position.
        """
        if not 1 <= position <= self.length:
            raise OutOfRange(f"Position {position} outside [1, {self.length}]")
        return self.items[position - 1]

    def position_of(self, text: str) -> Optional[int]:
        """Position 1-based d'un élément par son texte, ou None s'il est absent."""
        for index, item in enumerate(self.items, start=1):
            if item.text == text:
                return index
        return None


class Anchor(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: AnchorKind
    position: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_position(self):
        if self.kind == AnchorKind.RELATIVE and self.position is None:
            raise ValueError("Relative anchors need a position r")
        if self.kind == AnchorKind.ENDPOINT and self.position is not None:
            raise ValueError("Endpoint anchors carry no position")
        return self

    @classmethod
    def endpoint(cls) -> "Anchor":
        return cls(kind=AnchorKind.ENDPOINT)

    @classmethod
    def relative(cls, position: int) -> "Anchor":
        return cls(kind=AnchorKind.RELATIVE, position=position)


class IndexQuery(BaseModel):
    """
    Requête positionnelle : type + ancre + direction + offset n (+ cible pour item→position).
    Les requêtes de comptage ne portent ni ancre, ni direction, ni offset.
    """
    model_config = ConfigDict(frozen=True)

    kind: QueryKind
    anchor: Optional[Anchor] = None
    direction: Optional[Direction] = None
    offset: Optional[int] = Field(default=None, ge=1)
    target: Optional[Item] = None

    @model_validator(mode="after")
    def _check_shape(self):
        if self.kind == QueryKind.COUNTING:
            if self.anchor is not None or self.direction is not None or self.offset is not None or self.target is not None:
                raise ValueError("Counting queries carry no anchor, direction, offset or target")
            return self
        if self.anchor is None or self.direction is None:
            raise ValueError(f"{self.kind.value} queries need an anchor and a direction")
        if self.kind == QueryKind.POSITION_TO_ITEM:
            if self.offset is None:
                raise ValueError("Position-to-item queries need an offset")
            if self.target is not None:
                raise ValueError("Position-to-item queries carry no target")
        if self.kind == QueryKind.ITEM_TO_POSITION and self.target is None:
            raise ValueError("Item-to-position queries need a target")
        return self

    @classmethod
    def counting(cls) -> "IndexQuery":
        return cls(kind=QueryKind.COUNTING)


class GoldAnswer(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: AnswerKind
    item: Optional[Item] = None
    value: Optional[int] = None

    @model_validator(mode="after")
    def _check_variant(self):
        if self.kind == AnswerKind.ITEM:
            if self.item is None or self.value is not None:
                raise ValueError("Item answers hold exactly an item")
        else:
            if self.value is None or self.item is not None:
                raise ValueError("Integer answers hold exactly a value")
            if self.kind in (AnswerKind.OFFSET, AnswerKind.COUNT) and self.value < 1:
                raise ValueError("Offsets and counts are positive integers")
        return self

    def as_text(self) -> str:
        """Forme canonique de la réponse (texte de l'élément ou entier décimal)."""
        if self.kind == AnswerKind.ITEM:
            return self.item.text.strip()
        return str(self.value)

    @property
    def is_item(self) -> bool:
        return self.kind == AnswerKind.ITEM


class Condition(BaseModel):
    """Coordonnées d'une condition d'évaluation (tâche, ancre, direction, type d'élément, L, variante)."""
    model_config = ConfigDict(frozen=True)

    task: str
    anchor: Optional[AnchorKind] = None
    direction: Optional[Direction] = None
    item_kind: Optional[ItemKind] = None
    length: Optional[int] = None
    variant: str = "default"
    category: Optional[str] = None

    def slug(self) -> str:
        """Identifiant lisible, utilisé comme nom de fichier."""
        parts = [self.task]
        for value in (self.anchor, self.direction, self.item_kind):
            if value is not None:
                parts.append(value.value)
        if self.category:
            parts.append(self.category.lower())
        if self.length is not None:
            parts.append(f"L{self.length}")
        parts.append(self.variant)
        return "_".join(parts)
