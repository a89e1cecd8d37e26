from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from schemas.tasks import AnchorKind, Direction, ItemKind, QueryKind

DEFAULT_API_KEY_ENV = "POSKIT_API_KEY"


class GenSpec(BaseModel):
    """Paramètres d'un lot de séquences : pool, longueur (fixe ou intervalle inclusif), graine, nombre."""
    pool: str
    length: Union[int, Tuple[int, int]]
    seed: int = Field(ge=0, lt=2**64)
    count: int = Field(default=1, ge=1)

    @field_validator("length")
    @classmethod
    def _check_length(cls, value):
        if isinstance(value, int):
            if value < 1:
                raise ValueError("length must be positive")
        else:
            low, high = value
            if low < 1 or high < low:
                raise ValueError(f"invalid length range {value}")
        return value

    @property
    def length_range(self) -> Tuple[int, int]:
        if isinstance(self.length, int):
            return self.length, self.length
        return tuple(self.length)


class MixtureCounts(BaseModel):
    synthetic: int = Field(default=20000, ge=0)
    code: int = Field(default=4000, ge=0)
    adapted: int = Field(default=46000, ge=0)

    @property
    def total(self) -> int:
        return self.synthetic + self.code + self.adapted


class MixtureConfig(BaseModel):
    """Composition du mélange d'entraînement positionnel."""
    p_forward: float = Field(default=0.3, ge=0, le=1)
    p_endpoint: float = Field(default=0.3, ge=0, le=1)
    p_multiturn: float = Field(default=0.05, ge=0, le=1)
    p_framed: float = Field(default=0.0, ge=0, le=1)
    counts: MixtureCounts = Field(default_factory=MixtureCounts)
    seed: int = Field(default=0, ge=0, lt=2**64)
    synthetic_pools: List[str] = Field(default_factory=lambda: [
        "letters", "digits", "animals", "fruits", "cities", "elements", "languages", "instruments",
    ])
    synthetic_length: Tuple[int, int] = (10, 50)
    code_window: Tuple[int, int] = (5, 30)
    queries_per_structure: int = Field(default=1, ge=1)
    queries_per_window: int = Field(default=1, ge=1)
    include_counting: bool = False


class ReasoningMode(str, Enum):
    OFF = "off"
    BUDGET = "budget"


class ReasoningChannel(str, Enum):
    NATIVE = "native"
    FALLBACK = "fallback"


class BackendKind(str, Enum):
    OPENAI_COMPATIBLE = "openai_compatible"
    MOCK_ORACLE = "mock_oracle"
    MOCK_RANDOM = "mock_random"
    MOCK_REASONING_ORACLE = "mock_reasoning_oracle"


class BackendConfig(BaseModel):
    """Paramètres d'un backend chat-completion."""
    name: str
    kind: BackendKind = BackendKind.OPENAI_COMPATIBLE
    endpoint: Optional[str] = None
    model: str = "default"
    temperature: float = Field(default=0.7, ge=0)
    max_answer_tokens: int = Field(default=32, ge=1)
    reasoning: ReasoningMode = ReasoningMode.OFF
    reasoning_budget: int = Field(default=256, ge=1)
    reasoning_channel: ReasoningChannel = ReasoningChannel.NATIVE
    request_timeout: float = Field(default=60.0, gt=0)
    max_retries: int = Field(default=4, ge=0, le=10)
    concurrency: int = Field(default=4, ge=1)
    api_key_env: str = DEFAULT_API_KEY_ENV
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_endpoint(self):
        if self.kind == BackendKind.OPENAI_COMPATIBLE and not self.endpoint:
            raise ValueError(f"backend {self.name!r}: endpoint URL required for HTTP backends")
        return self

    @property
    def backend_id(self) -> str:
        return f"{self.name}:{self.model}"

    def sampling_params(self) -> Dict[str, object]:
        """Paramètres qui entrent dans la clé de cache."""
        params = {
            "temperature": self.temperature,
            "max_answer_tokens": self.max_answer_tokens,
            "reasoning": self.reasoning.value,
        }
        if self.reasoning == ReasoningMode.BUDGET:
            params["reasoning_budget"] = self.reasoning_budget
            params["reasoning_channel"] = self.reasoning_channel.value
        return params


class GridConfig(BaseModel):
    """Grille de conditions : tâches × ancres × directions × types d'éléments × longueurs."""
    tasks: List[QueryKind] = Field(default_factory=lambda: [QueryKind.POSITION_TO_ITEM, QueryKind.ITEM_TO_POSITION])
    anchors: List[AnchorKind] = Field(default_factory=lambda: [AnchorKind.ENDPOINT, AnchorKind.RELATIVE])
    directions: List[Direction] = Field(default_factory=lambda: [Direction.FORWARD, Direction.BACKWARD])
    item_kinds: List[ItemKind] = Field(default_factory=lambda: [ItemKind.LETTER, ItemKind.WORD])
    lengths: List[int] = Field(default_factory=lambda: [5, 10, 20])
    include_counting: bool = True
    pools: Dict[ItemKind, str] = Field(default_factory=lambda: {ItemKind.LETTER: "letters", ItemKind.WORD: "animals"})
    sequences_per_condition: int = Field(default=50, ge=1)
    trials_per_position: Optional[int] = Field(default=None, ge=1)
    list_format: str = "comma_line"
    answer_style: str = "bare"

    @model_validator(mode="after")
    def _non_empty(self):
        retrieval = self.tasks and self.anchors and self.directions
        if not self.item_kinds or not self.lengths or not (retrieval or self.include_counting):
            raise ValueError("condition grid is empty")
        for kind in self.item_kinds:
            if kind not in self.pools:
                raise ValueError(f"no pool configured for item kind {kind.value}")
        return self


class CorpusSource(BaseModel):
    """Description d'un corpus JSONL et des champs à lire."""
    path: str
    id_field: str = "id"
    text_field: Optional[str] = "text"
    turns_field: Optional[str] = None
    role_field: str = "role"
    content_field: str = "content"
    role_map: Dict[str, str] = Field(default_factory=lambda: {"human": "user", "gpt": "assistant"})


class PyIndexConfig(BaseModel):
    per_category: int = Field(default=20, ge=1)


class RunConfig(BaseModel):
    """Fichier de configuration déclaratif d'une exécution complète."""
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    output_dir: str = "outputs"
    workers: int = Field(default=4, ge=1)
    grid: GridConfig = Field(default_factory=GridConfig)
    mixture: MixtureConfig = Field(default_factory=MixtureConfig)
    backends: List[BackendConfig] = Field(default_factory=list)
    pyindex: PyIndexConfig = Field(default_factory=PyIndexConfig)
    code_corpora: List[CorpusSource] = Field(default_factory=list)
    adapted_corpora: List[CorpusSource] = Field(default_factory=list)
    pool_files: Dict[str, str] = Field(default_factory=dict)
    cache_dir: Optional[str] = None

    def backend(self, name: str) -> BackendConfig:
        for backend in self.backends:
            if backend.name == name:
                return backend
        raise KeyError(name)
