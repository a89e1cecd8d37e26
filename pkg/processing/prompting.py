"""
Rendu des requêtes en prompts few-shot (3 démonstrations + question de test).

Le texte reprend la présentation des prompts d'origine :
    Below is a sequence of letters. What is the second-to-last letter?
    Respond with ONLY that single letter, nothing else.

    X, V, Z, Y.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence as Seq, Tuple

import numpy as np

from processing.errors import IncompatibleVariant, OutOfRange
from processing.sequences import ItemPool, get_pool, sample_sequence
from processing.tasks import gold_answer, sample_query
from processing.utils import stable_hash
from schemas.records import (
    AnswerStyle, ChatMessage, Demonstration, ListFormat, Phrasing, PromptInstance, PromptVariant, PyIndexCase,
)
from schemas.tasks import (
    AnchorKind, AnswerKind, Condition, Direction, GoldAnswer, IndexQuery, ItemKind, QueryKind, Sequence,
)

logger = logging.getLogger(__name__)

N_DEMOS = 3
MAX_DEMO_ATTEMPTS = 50

NOUNS = {
    ItemKind.LETTER: ("letter", "letters"),
    ItemKind.WORD: ("word", "words"),
    ItemKind.CODE_LINE: ("line", "lines"),
    ItemKind.GENERIC: ("item", "items"),
}

NUMBER_WORDS = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
]

ORDINAL_WORDS = [
    "zeroth", "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
    "eleventh", "twelfth", "thirteenth", "fourteenth", "fifteenth", "sixteenth", "seventeenth", "eighteenth",
    "nineteenth", "twentieth",
]

TENS_WORDS = ["", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"]

COUNTING_QUESTION = "How many items are in the sequence?"
INTEGER_INSTRUCTION = "Respond with ONLY the number, nothing else."
CODE_LINE_INSTRUCTION = (
    "Respond with ONLY that single line, exactly as written (without the leading whitespace), nothing else."
)
PYINDEX_QUESTION = "Below is a short Python snippet. What value does the last expression evaluate to?"
PYINDEX_INSTRUCTION = "Respond with ONLY that value, nothing else."
ANSWER_FRAME = "The answer is {answer}."


def ordinal_suffix(n: int) -> str:
    """Suffixe ordinal anglais (11, 12 et 13 prennent "th")."""
    if 10 <= n % 100 <= 13:
        return "th"
    return {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")


def number_word(n: int) -> str:
    """Nombre en toutes lettres jusqu'à 99 ("twenty-three"), en chiffres au-delà."""
    if 0 <= n < len(NUMBER_WORDS):
        return NUMBER_WORDS[n]
    if not 0 < n < 100:
        return str(n)
    tens, unit = divmod(n, 10)
    return TENS_WORDS[tens] if unit == 0 else f"{TENS_WORDS[tens]}-{NUMBER_WORDS[unit]}"


def ordinal_word(n: int) -> str:
    """Ordinal en toutes lettres jusqu'à 99 ("third", "forty-second"), "100th" au-delà."""
    if 0 <= n < len(ORDINAL_WORDS):
        return ORDINAL_WORDS[n]
    if not 0 < n < 100:
        return f"{n}{ordinal_suffix(n)}"
    tens, unit = divmod(n, 10)
    if unit == 0:
        return f"{TENS_WORDS[tens][:-1]}ieth"
    return f"{TENS_WORDS[tens]}-{ORDINAL_WORDS[unit]}"


def to_last_phrase(n: int) -> str:
    """1 -> "last", 2 -> "second-to-last", 3 -> "third-to-last"..."""
    if n == 1:
        return "last"
    return f"{ordinal_word(n)}-to-last"


def render_ordinal(n: int, direction: Direction, to_last_style: bool = False, spelled: bool = False) -> str:
    """
    Rend une position ordinale.

    Args:
        n (int): Offset (n >= 1).
        direction (Direction): Avant ("from the beginning") ou arrière ("from the end").
        to_last_style (bool): En arrière, utilise "second-to-last" au lieu de "2nd position from the end".
        spelled (bool): Ordinal en toutes lettres ("third position"), pour les séquences de nombres.
    Returns:
        str: Par exemple "3rd position from the beginning", "2nd position from the end" ou "second-to-last".
    """
    if n < 1:
        raise OutOfRange(f"Ordinals start at 1, got {n}")
    if direction == Direction.BACKWARD and to_last_style:
        return to_last_phrase(n)
    where = "from the beginning" if direction == Direction.FORWARD else "from the end"
    ordinal = ordinal_word(n) if spelled else f"{n}{ordinal_suffix(n)}"
    return f"{ordinal} position {where}"


def default_phrasing(query: IndexQuery) -> Phrasing:
    """Formulation par défaut compatible avec l'ancre et la direction de la requête."""
    if query.kind == QueryKind.COUNTING:
        return Phrasing.ORDINAL_FROM_START
    if query.anchor.kind == AnchorKind.RELATIVE:
        return Phrasing.RELATIONAL_BEFORE_AFTER
    if query.direction == Direction.FORWARD:
        return Phrasing.ORDINAL_FROM_START
    return Phrasing.ORDINAL_FROM_END


def check_compatible(query: IndexQuery, variant: PromptVariant) -> None:
    """
    Vérifie que la formulation correspond à l'ancre et à la direction.

    Raises:
        IncompatibleVariant: Si la combinaison n'a pas de sens (ex. second-to-last en avant).
    """
    if query.kind == QueryKind.COUNTING:
        return
    phrasing = variant.phrasing
    anchor = query.anchor.kind
    allowed = {
        (AnchorKind.ENDPOINT, Direction.FORWARD): {Phrasing.ORDINAL_FROM_START},
        (AnchorKind.ENDPOINT, Direction.BACKWARD): {Phrasing.ORDINAL_FROM_END, Phrasing.SECOND_TO_LAST_STYLE},
        (AnchorKind.RELATIVE, Direction.FORWARD): {Phrasing.RELATIONAL_BEFORE_AFTER},
        (AnchorKind.RELATIVE, Direction.BACKWARD): {Phrasing.RELATIONAL_BEFORE_AFTER},
    }[(anchor, query.direction)]
    if phrasing not in allowed:
        raise IncompatibleVariant(
            f"Phrasing {phrasing.value} cannot express a {anchor.value} {query.direction.value} query"
        )


def render_list(texts: Seq[str], list_format: ListFormat) -> str:
    """
    Met en forme les éléments d'une séquence.

    Args:
        texts (list[str]): Éléments dans l'ordre.
        list_format (ListFormat): Ligne séparée par des virgules, puces, liste numérotée ou bloc de code.
    Returns:
        str: Bloc de texte prêt à insérer dans le prompt.
    """
    if list_format == ListFormat.COMMA_LINE:
        return ", ".join(texts) + "."
    if list_format == ListFormat.BULLET_LIST:
        return "\n".join(f"- {text}" for text in texts)
    if list_format == ListFormat.NUMBERED_LIST:
        return "\n".join(f"{index}. {text}" for index, text in enumerate(texts, start=1))
    return "```\n" + "\n".join(texts) + "\n```"


def numeric_items(seq: Sequence) -> bool:
    """Vrai si un élément est un nombre : les ordinaux en chiffres pourraient alors répéter la réponse."""
    return any(text.strip().isdigit() for text in seq.texts)


def _mention(text: str, kind: ItemKind) -> str:
    # les lignes de code sont citées entre backticks pour rester lisibles dans la phrase
    return f"`{text.strip()}`" if kind == ItemKind.CODE_LINE else text


@dataclass(frozen=True)
class RenderedQuestion:
    header: str
    question: str
    instruction: str
    listing: str

    @property
    def instruction_text(self) -> str:
        """Consigne sans la liste (vérifiée pour l'absence de fuite de la réponse)."""
        return f"{self.header} {self.question}\n{self.instruction}"

    @property
    def user_text(self) -> str:
        if not self.listing:
            return self.instruction_text
        return f"{self.instruction_text}\n\n{self.listing}"


def _question_text(seq: Sequence, query: IndexQuery, phrasing: Phrasing) -> str:
    kind = seq.item_kind
    noun = NOUNS[kind][0]
    spelled = numeric_items(seq)
    if query.kind == QueryKind.COUNTING:
        return COUNTING_QUESTION
    if query.kind == QueryKind.POSITION_TO_ITEM:
        n = query.offset
        if phrasing == Phrasing.RELATIONAL_BEFORE_AFTER:
            anchor_item = _mention(seq.item_at(query.anchor.position).text, kind)
            side = "after" if query.direction == Direction.FORWARD else "before"
            unit = "position" if n == 1 else "positions"
            return f"What {noun} is {number_word(n)} {unit} {side} {anchor_item}?"
        if phrasing == Phrasing.SECOND_TO_LAST_STYLE:
            return f"What is the {render_ordinal(n, query.direction, to_last_style=True)} {noun}?"
        return f"What {noun} is at the {render_ordinal(n, query.direction, spelled=spelled)}?"
    target = _mention(query.target.text, kind)
    if phrasing == Phrasing.RELATIONAL_BEFORE_AFTER:
        anchor_item = _mention(seq.item_at(query.anchor.position).text, kind)
        side = "after" if query.direction == Direction.FORWARD else "before"
        return f"How many positions {side} {anchor_item} is {target}?"
    if query.direction == Direction.FORWARD:
        return f"At what position from the beginning is {target}? The first {noun} is position one."
    return f"At what position from the end is {target}? The last {noun} is position one."


def _instruction(seq: Sequence, query: IndexQuery, variant: PromptVariant) -> str:
    if variant.answer_instruction:
        return variant.answer_instruction
    if query.kind != QueryKind.POSITION_TO_ITEM:
        return INTEGER_INSTRUCTION
    if seq.item_kind == ItemKind.CODE_LINE:
        return CODE_LINE_INSTRUCTION
    return f"Respond with ONLY that single {NOUNS[seq.item_kind][0]}, nothing else."


def render_question(seq: Sequence, query: IndexQuery, variant: PromptVariant, reference: Optional[str] = None) -> RenderedQuestion:
    """
    Rend la question zéro-shot (en-tête, question, consigne, liste) d'une requête.

    Args:
        seq (Sequence): Séquence interrogée.
        query (IndexQuery): Requête.
        variant (PromptVariant): Format de liste et formulation.
        reference (str, optional): Si fourni, la liste n'est pas recopiée et l'en-tête
            renvoie à une liste déjà présente dans le contexte (ex. "the numbered list in your previous answer").
    Returns:
        RenderedQuestion: Les morceaux du message utilisateur.
    """
    check_compatible(query, variant)
    plural = NOUNS[seq.item_kind][1]
    if reference:
        header = f"Consider {reference}."
        listing = ""
    else:
        if variant.list_format == ListFormat.CODE_BLOCK and seq.item_kind == ItemKind.CODE_LINE:
            header = "Below is a code snippet."
        else:
            header = f"Below is a sequence of {plural}."
        listing = render_list(seq.texts, variant.list_format)
    return RenderedQuestion(
        header=header,
        question=_question_text(seq, query, variant.phrasing),
        instruction=_instruction(seq, query, variant),
        listing=listing,
    )


def render_answer(gold: GoldAnswer, style: AnswerStyle = AnswerStyle.BARE) -> Tuple[str, Tuple[int, int]]:
    """
    Rend la réponse de l'assistant et la position (en caractères) de la réponse dans ce texte.

    Args:
        gold (GoldAnswer): Réponse de référence.
        style (AnswerStyle): Réponse seule, ou encadrée par "The answer is ...".
    Returns:
        tuple: (texte du message, (début, fin) en caractères).
    """
    answer = gold.as_text()
    if style == AnswerStyle.FRAMED:
        prefix = ANSWER_FRAME.split("{answer}")[0]
        return ANSWER_FRAME.format(answer=answer), (len(prefix), len(prefix) + len(answer))
    return answer, (0, len(answer))


def condition_for(seq: Sequence, query: IndexQuery, variant: PromptVariant) -> Condition:
    return Condition(
        task=query.kind.value,
        anchor=query.anchor.kind if query.anchor else None,
        direction=query.direction,
        item_kind=seq.item_kind,
        length=seq.length,
        variant=variant.variant_id,
    )


def _demo_pool(seq: Sequence, pool: Optional[ItemPool]) -> ItemPool:
    if pool is not None:
        return pool
    if seq.item_kind == ItemKind.LETTER:
        return get_pool("letters")
    raise ValueError(f"A pool (or explicit demo sequences) is required for {seq.item_kind.value} items")


def _sample_demo_sequences(seq: Sequence, pool: ItemPool, stream: np.random.Generator) -> List[Sequence]:
    used = [frozenset(seq.texts)]
    demos = []
    for _ in range(N_DEMOS):
        candidate = None
        for _attempt in range(MAX_DEMO_ATTEMPTS):
            candidate = sample_sequence(pool, seq.length, stream)
            if frozenset(candidate.texts) not in used:
                break
        else:
            # pool trop petit pour des ensembles distincts (ex. L = 26 lettres) : on se contente d'un ordre différent
            logger.debug(f"Démonstration non distincte en multiensemble (pool={pool.name}, L={seq.length})")
        used.append(frozenset(candidate.texts))
        demos.append(candidate)
    return demos


def _messages_with_demos(demo_pairs: List[Tuple[str, str]], test_text: str) -> List[ChatMessage]:
    messages = []
    for user_text, answer_text in demo_pairs:
        messages.append(ChatMessage(role="user", content=user_text))
        messages.append(ChatMessage(role="assistant", content=answer_text))
    messages.append(ChatMessage(role="user", content=test_text))
    return messages


def prompt_hash(messages: List[ChatMessage]) -> str:
    """Empreinte stable d'une liste de messages (clé de cache et d'appariement)."""
    return stable_hash([message.model_dump() for message in messages])


def render_prompt(
    seq: Sequence,
    query: IndexQuery,
    variant: PromptVariant,
    demo_stream: np.random.Generator,
    pool: Optional[ItemPool] = None,
    demo_sequences: Optional[List[Sequence]] = None,
    seed_coordinates: Optional[dict] = None,
) -> PromptInstance:
    """
    Rend un prompt few-shot : 3 démonstrations de la même tâche puis la question de test.

    Chaque démonstration garde le type de requête, l'ancre, la direction, le type d'élément et la
    formulation du test, mais utilise une séquence tirée indépendamment et un offset retiré.

    Args:
        seq (Sequence): Séquence de test.
        query (IndexQuery): Requête de test.
        variant (PromptVariant): Variante de présentation.
        demo_stream (np.random.Generator): Flux des démonstrations.
        pool (ItemPool, optional): Pool des séquences de démonstration (lettres par défaut).
        demo_sequences (list[Sequence], optional): Séquences de démonstration imposées (3).
        seed_coordinates (dict, optional): Coordonnées de graine recopiées dans l'instance.
    Returns:
        PromptInstance: Messages + métadonnées ; la réponse n'apparaît jamais dans le tour de test.
    Raises:
        IncompatibleVariant: Formulation incompatible avec la requête.
        OutOfRange: Requête invalide pour la séquence.
    """
    check_compatible(query, variant)
    gold = gold_answer(seq, query)
    if demo_sequences is None:
        demo_sequences = _sample_demo_sequences(seq, _demo_pool(seq, pool), demo_stream)
    if len(demo_sequences) != N_DEMOS:
        raise ValueError(f"Exactly {N_DEMOS} demonstrations are required, got {len(demo_sequences)}")

    demos, pairs = [], []
    anchor_kind = query.anchor.kind if query.anchor else None
    for demo_seq in demo_sequences:
        demo_query = sample_query(query.kind, anchor_kind, query.direction, demo_seq, demo_stream)
        demo_gold = gold_answer(demo_seq, demo_query)
        demos.append(Demonstration(sequence=demo_seq, query=demo_query, answer=demo_gold))
        answer_text, _ = render_answer(demo_gold, variant.answer_style)
        pairs.append((render_question(demo_seq, demo_query, variant).user_text, answer_text))

    rendered = render_question(seq, query, variant)
    messages = _messages_with_demos(pairs, rendered.user_text)
    return PromptInstance(
        prompt_id=prompt_hash(messages),
        messages=messages,
        instruction=rendered.instruction_text,
        demos=demos,
        sequence=seq,
        test_query=query,
        gold=gold,
        condition=condition_for(seq, query, variant),
        seed_coordinates=seed_coordinates or {},
    )


def render_pyindex_question(source_text: str) -> str:
    return f"{PYINDEX_QUESTION}\n{PYINDEX_INSTRUCTION}\n\n```python\n{source_text}\n```"


def render_pyindex_prompt(case: PyIndexCase, demos: List[PyIndexCase]) -> PromptInstance:
    """
    Rend un cas PyIndex précédé de 3 démonstrations de la même catégorie.

    Args:
        case (PyIndexCase): Cas de test.
        demos (list[PyIndexCase]): Trois cas de démonstration de la même catégorie.
    Returns:
        PromptInstance: Prompt dont la réponse attendue est la valeur de l'expression.
    """
    if len(demos) != N_DEMOS:
        raise ValueError(f"Exactly {N_DEMOS} demonstrations are required, got {len(demos)}")
    pairs = [(render_pyindex_question(demo.source_text), str(demo.gold)) for demo in demos]
    messages = _messages_with_demos(pairs, render_pyindex_question(case.source_text))
    return PromptInstance(
        prompt_id=prompt_hash(messages),
        messages=messages,
        instruction=f"{PYINDEX_QUESTION}\n{PYINDEX_INSTRUCTION}",
        demos=[
            Demonstration(source_text=demo.source_text, answer=GoldAnswer(kind=AnswerKind.VALUE, value=demo.gold))
            for demo in demos
        ],
        source_text=case.source_text,
        gold=GoldAnswer(kind=AnswerKind.VALUE, value=case.gold),
        condition=Condition(task="pyindex", category=case.category, length=len(case.xs), variant="snippet"),
        seed_coordinates={"case_id": case.case_id, **case.seed_coordinates},
    )
