from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from schemas.tasks import Condition, GoldAnswer, IndexQuery, Item, ItemKind, Sequence


class ListFormat(str, Enum):
    COMMA_LINE = "comma_line"
    BULLET_LIST = "bullet_list"
    NUMBERED_LIST = "numbered_list"
    CODE_BLOCK = "code_block"


class Phrasing(str, Enum):
    ORDINAL_FROM_START = "ordinal_from_start"
    ORDINAL_FROM_END = "ordinal_from_end"
    SECOND_TO_LAST_STYLE = "second_to_last_style"
    RELATIONAL_BEFORE_AFTER = "relational_before_after"


class AnswerStyle(str, Enum):
    BARE = "bare"
    FRAMED = "framed"


class PromptVariant(BaseModel):
    model_config = ConfigDict(frozen=True)

    list_format: ListFormat = ListFormat.COMMA_LINE
    phrasing: Phrasing = Phrasing.ORDINAL_FROM_START
    answer_instruction: Optional[str] = None
    answer_style: AnswerStyle = AnswerStyle.BARE

    @property
    def variant_id(self) -> str:
        return f"{self.list_format.value}-{self.phrasing.value}-{self.answer_style.value}"


class ChatMessage(BaseModel):
    model_config = ConfigDict(frozen=True)

    role: str
    content: str

    @model_validator(mode="after")
    def _check_role(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown role {self.role!r}")
        return self


class Demonstration(BaseModel):
    model_config = ConfigDict(frozen=True)

    sequence: Optional[Sequence] = None
    query: Optional[IndexQuery] = None
    source_text: Optional[str] = None  # démonstrations PyIndex
    answer: GoldAnswer


class PromptInstance(BaseModel):
    """Prompt few-shot rendu + métadonnées liant la requête de test à sa réponse de référence."""
    model_config = ConfigDict(frozen=True)

    prompt_id: str
    messages: List[ChatMessage]
    instruction: str
    demos: List[Demonstration] = Field(min_length=3, max_length=3)
    sequence: Optional[Sequence] = None
    test_query: Optional[IndexQuery] = None
    source_text: Optional[str] = None
    gold: GoldAnswer
    condition: Condition
    seed_coordinates: Dict[str, object] = Field(default_factory=dict)

    def candidates(self) -> List[Item]:
        return list(self.sequence.items) if self.sequence is not None else []


class CorpusRecord(BaseModel):
    source: str
    text: str = Field(min_length=1)
    turns: Optional[List[ChatMessage]] = None

    @model_validator(mode="after")
    def _check_turns(self):
        if self.turns:
            for index, turn in enumerate(self.turns):
                expected = "user" if index % 2 == 0 else "assistant"
                if turn.role != expected:
                    raise ValueError(f"turn {index} should be {expected}, got {turn.role}")
        return self


class StructureKind(str, Enum):
    NUMBERED_LIST = "numbered_list"
    BULLET_LIST = "bullet_list"
    MARKDOWN_TABLE = "markdown_table"
    CODE_BLOCK = "code_block"


class ExtractedStructure(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: StructureKind
    items: List[str] = Field(min_length=5)
    source: str
    span: Tuple[int, int]
    dropped: int = 0  # éléments retirés (doublons, trop longs)

    @property
    def item_kind(self) -> ItemKind:
        return ItemKind.CODE_LINE if self.kind == StructureKind.CODE_BLOCK else ItemKind.GENERIC


class TrainingExample(BaseModel):
    messages: List[ChatMessage]
    answer_text: str
    answer_span: Tuple[int, int]
    condition: Condition
    provenance: str


class SftExample(BaseModel):
    messages: List[ChatMessage]
    target_text: str
    answer_text: str
    answer_span: Tuple[int, int]
    condition: Condition
    provenance: str


class ExportManifest(BaseModel):
    path: str
    total: int
    seed: Optional[int] = None
    counts: Dict[str, int] = Field(default_factory=dict)
    per_direction: Dict[str, int] = Field(default_factory=dict)
    per_source: Dict[str, int] = Field(default_factory=dict)


class PyIndexCase(BaseModel):
    model_config = ConfigDict(frozen=True)

    case_id: str
    category: str
    source_text: str
    expression: str
    xs: List[int]
    gold: int
    seed_coordinates: Dict[str, object] = Field(default_factory=dict)


class ParsedKind(str, Enum):
    ITEM = "item"
    INTEGER = "integer"
    UNPARSEABLE = "unparseable"


class ParsedAnswer(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ParsedKind
    item: Optional[Item] = None
    value: Optional[int] = None

    @classmethod
    def unparseable(cls) -> "ParsedAnswer":
        return cls(kind=ParsedKind.UNPARSEABLE)

    def matches(self, gold: GoldAnswer) -> bool:
        if self.kind == ParsedKind.UNPARSEABLE:
            return False
        if gold.is_item:
            return self.kind == ParsedKind.ITEM and self.item.text == gold.item.text
        return self.kind == ParsedKind.INTEGER and self.value == gold.value


class TrialRecord(BaseModel):
    """Un appel de modèle : prompt, réponse brute, réponse analysée, correction, coordonnées."""
    condition: Condition
    prompt_id: str
    offset: Optional[int] = None
    anchor_position: Optional[int] = None
    queried_position: Optional[int] = None
    sequence: List[str] = Field(default_factory=list)
    gold: GoldAnswer
    raw_response: str = ""
    reasoning_trace: Optional[str] = None
    parsed: ParsedAnswer
    correct: bool
    error: Optional[str] = None
    latency: float = 0.0
    backend_id: str
    reasoning: str = "off"
    seed_coordinates: Dict[str, object] = Field(default_factory=dict)


class ConfusionMatrix(BaseModel):
    queried_labels: List[int]
    answered_labels: List[str]
    counts: List[List[int]]
    row_percentages: List[List[float]]
    descending: bool = False


class AccuracyReport(BaseModel):
    overall: float
    n_trials: int
    per_offset: Dict[int, float]
    per_offset_trials: Dict[int, int]
    per_condition: List[Dict[str, object]]
    asymmetry: List[Dict[str, object]]
