"""
PyIndex : expressions d'indexation de listes Python et leur interpréteur déterministe.

Grammaire couverte : la liste xs, entiers, moins unaire, + - %, len(xs), e1[e2],
xs[a:b], xs.index(v), sorted(xs), list(reversed(xs)).
"""
import ast
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from processing.errors import (
    DivisionByZero, GenerationExhausted, IndexOutOfRange, UnsupportedNode, ValueNotFound,
)
from processing.utils import read_jsonl, substream, write_lines_atomic
from schemas.records import PyIndexCase

logger = logging.getLogger(__name__)

LIST_NAME = "xs"
LENGTH_RANGE = (5, 12)
VALUE_RANGE = (0, 99)
MAX_DEPTH = 4
MAX_ATTEMPTS = 100

REFERENCE_BUILTINS = {"len": len, "sorted": sorted, "reversed": reversed, "list": list}


class PyIndexCategory(str, Enum):
    FORWARD = "Forward"
    BACKWARD = "Backward"
    NESTED = "Nested"
    EXPRESSION = "Expression"
    CHAINED = "Chained"


# ---------- Arbre syntaxique ----------

@dataclass(frozen=True)
class ListRef:
    pass


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Neg:
    operand: "PyExpr"


@dataclass(frozen=True)
class BinOp:
    op: str  # "+", "-" ou "%"
    left: "PyExpr"
    right: "PyExpr"


@dataclass(frozen=True)
class Len:
    operand: "PyExpr"


@dataclass(frozen=True)
class Subscript:
    target: "PyExpr"
    index: "PyExpr"


@dataclass(frozen=True)
class Slice:
    target: "PyExpr"
    lower: Optional["PyExpr"]
    upper: Optional["PyExpr"]


@dataclass(frozen=True)
class IndexCall:
    target: "PyExpr"
    value: "PyExpr"


@dataclass(frozen=True)
class Sorted:
    operand: "PyExpr"


@dataclass(frozen=True)
class ReversedList:
    operand: "PyExpr"


PyExpr = Union[ListRef, Const, Neg, BinOp, Len, Subscript, Slice, IndexCall, Sorted, ReversedList]
XS = ListRef()


def depth(expr: PyExpr) -> int:
    """Profondeur de l'arbre (une feuille vaut 1)."""
    if isinstance(expr, (ListRef, Const)):
        return 1
    if isinstance(expr, (Neg, Len, Sorted, ReversedList)):
        return 1 + depth(expr.operand)
    if isinstance(expr, BinOp):
        return 1 + max(depth(expr.left), depth(expr.right))
    if isinstance(expr, Subscript):
        return 1 + max(depth(expr.target), depth(expr.index))
    if isinstance(expr, IndexCall):
        return 1 + max(depth(expr.target), depth(expr.value))
    if isinstance(expr, Slice):
        bounds = [depth(bound) for bound in (expr.lower, expr.upper) if bound is not None]
        return 1 + max([depth(expr.target)] + bounds)
    raise UnsupportedNode(f"Unknown node {type(expr).__name__}")


def render_expr(expr: PyExpr) -> str:
    """Texte Python exécutable d'une expression."""
    if isinstance(expr, ListRef):
        return LIST_NAME
    if isinstance(expr, Const):
        return str(expr.value)
    if isinstance(expr, Neg):
        return f"-{render_expr(expr.operand)}"
    if isinstance(expr, BinOp):
        return f"{render_expr(expr.left)} {expr.op} {render_expr(expr.right)}"
    if isinstance(expr, Len):
        return f"len({render_expr(expr.operand)})"
    if isinstance(expr, Subscript):
        return f"{render_expr(expr.target)}[{render_expr(expr.index)}]"
    if isinstance(expr, Slice):
        lower = render_expr(expr.lower) if expr.lower is not None else ""
        upper = render_expr(expr.upper) if expr.upper is not None else ""
        return f"{render_expr(expr.target)}[{lower}:{upper}]"
    if isinstance(expr, IndexCall):
        return f"{render_expr(expr.target)}.index({render_expr(expr.value)})"
    if isinstance(expr, Sorted):
        return f"sorted({render_expr(expr.operand)})"
    if isinstance(expr, ReversedList):
        return f"list(reversed({render_expr(expr.operand)}))"
    raise UnsupportedNode(f"Unknown node {type(expr).__name__}")


def render_snippet(xs: List[int], expr: PyExpr) -> str:
    return f"{LIST_NAME} = [{', '.join(str(value) for value in xs)}]\n{render_expr(expr)}"


# ---------- Analyse ----------

BINARY_OPS = {ast.Add: "+", ast.Sub: "-", ast.Mod: "%"}


def _convert(node: ast.AST) -> PyExpr:
    if isinstance(node, ast.Expression):
        return _convert(node.body)
    if isinstance(node, ast.Name):
        if node.id != LIST_NAME:
            raise UnsupportedNode(f"Unknown name {node.id!r}")
        return XS
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, int):
            raise UnsupportedNode(f"Unsupported literal {node.value!r}")
        return Const(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return Neg(_convert(node.operand))
    if isinstance(node, ast.BinOp) and type(node.op) in BINARY_OPS:
        return BinOp(BINARY_OPS[type(node.op)], _convert(node.left), _convert(node.right))
    if isinstance(node, ast.Subscript):
        if isinstance(node.slice, ast.Slice):
            if node.slice.step is not None:
                raise UnsupportedNode("Slice steps are not supported")
            lower = _convert(node.slice.lower) if node.slice.lower is not None else None
            upper = _convert(node.slice.upper) if node.slice.upper is not None else None
            return Slice(_convert(node.value), lower, upper)
        return Subscript(_convert(node.value), _convert(node.slice))
    if isinstance(node, ast.Call) and not node.keywords and len(node.args) == 1:
        func = node.func
        if isinstance(func, ast.Attribute) and func.attr == "index":
            return IndexCall(_convert(func.value), _convert(node.args[0]))
        if isinstance(func, ast.Name) and func.id == "len":
            return Len(_convert(node.args[0]))
        if isinstance(func, ast.Name) and func.id == "sorted":
            return Sorted(_convert(node.args[0]))
        inner = node.args[0]
        if (isinstance(func, ast.Name) and func.id == "list" and isinstance(inner, ast.Call)
                and isinstance(inner.func, ast.Name) and inner.func.id == "reversed"
                and len(inner.args) == 1 and not inner.keywords):
            return ReversedList(_convert(inner.args[0]))
    raise UnsupportedNode(f"Unsupported syntax: {ast.dump(node)[:80]}")


def parse_expression(text: str) -> PyExpr:
    """
    Convertit le texte d'une expression en arbre PyExpr.

    Args:
        text (str): Expression, ex. "xs[len(xs) - 2]".
    Returns:
        PyExpr: Arbre équivalent.
    Raises:
        UnsupportedNode: Si l'expression sort de la grammaire (ou n'est pas du Python valide).
    """
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as e:
        raise UnsupportedNode(f"Invalid expression {text!r}: {e.msg}") from e
    return _convert(tree)


def parse_snippet(source_text: str) -> Tuple[List[int], PyExpr]:
    """Sépare un snippet "xs = [...]" + expression en (valeurs, arbre)."""
    assignment, _, expression = source_text.strip().partition("\n")
    name, _, literal = assignment.partition("=")
    if name.strip() != LIST_NAME:
        raise UnsupportedNode(f"Snippet must start with '{LIST_NAME} = [...]'")
    try:
        xs = ast.literal_eval(literal.strip())
    except (ValueError, SyntaxError) as e:
        raise UnsupportedNode(f"Invalid list literal: {literal.strip()!r}") from e
    if not isinstance(xs, list) or not all(isinstance(value, int) for value in xs):
        raise UnsupportedNode("The list literal must contain integers only")
    return xs, parse_expression(expression)


# ---------- Évaluation ----------

def _as_list(value, context: str) -> list:
    if not isinstance(value, list):
        raise UnsupportedNode(f"{context} expects a list")
    return value


def _as_int(value, context: str) -> int:
    if not isinstance(value, int):
        raise UnsupportedNode(f"{context} expects an integer")
    return value


def _clamp(bound: Optional[int], size: int, default: int) -> int:
    # bornes de tranche : négatif = depuis la fin, puis ramené dans [0, size]
    if bound is None:
        return default
    if bound < 0:
        bound += size
    return min(max(bound, 0), size)


def _eval(expr: PyExpr, xs: List[int]):
    if isinstance(expr, ListRef):
        return list(xs)
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Neg):
        return -_as_int(_eval(expr.operand, xs), "unary minus")
    if isinstance(expr, BinOp):
        left = _as_int(_eval(expr.left, xs), expr.op)
        right = _as_int(_eval(expr.right, xs), expr.op)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if right == 0:
            raise DivisionByZero(f"{left} % 0")
        return left % right
    if isinstance(expr, Len):
        return len(_as_list(_eval(expr.operand, xs), "len()"))
    if isinstance(expr, Subscript):
        values = _as_list(_eval(expr.target, xs), "subscript")
        index = _as_int(_eval(expr.index, xs), "subscript index")
        if not -len(values) <= index < len(values):
            raise IndexOutOfRange(f"Index {index} out of range for a list of length {len(values)}")
        return values[index]
    if isinstance(expr, Slice):
        values = _as_list(_eval(expr.target, xs), "slice")
        size = len(values)
        lower = _clamp(None if expr.lower is None else _as_int(_eval(expr.lower, xs), "slice"), size, 0)
        upper = _clamp(None if expr.upper is None else _as_int(_eval(expr.upper, xs), "slice"), size, size)
        return values[lower:upper] if lower < upper else []
    if isinstance(expr, IndexCall):
        values = _as_list(_eval(expr.target, xs), "index()")
        value = _as_int(_eval(expr.value, xs), "index() argument")
        for position, candidate in enumerate(values):
            if candidate == value:
                return position
        raise ValueNotFound(f"{value} is not in the list")
    if isinstance(expr, Sorted):
        return sorted(_as_list(_eval(expr.operand, xs), "sorted()"))
    if isinstance(expr, ReversedList):
        return _as_list(_eval(expr.operand, xs), "reversed()")[::-1]
    raise UnsupportedNode(f"Unknown node {type(expr).__name__}")


def evaluate(expr: PyExpr, xs: List[int]) -> int:
    """
    Évalue une expression PyIndex (sémantique Python : indices 0-based, négatifs depuis la fin,
    tranches semi-ouvertes bornées, index() = première occurrence).

    Args:
        expr (PyExpr): Expression de la grammaire.
        xs (list[int]): Valeurs de la liste.
    Returns:
        int: Valeur de l'expression.
    Raises:
        IndexOutOfRange, ValueNotFound, DivisionByZero, UnsupportedNode
    """
    result = _eval(expr, xs)
    if not isinstance(result, int):
        raise UnsupportedNode("The expression must evaluate to an integer")
    return result


def reference_evaluate(source_text: str) -> int:
    """
    Oracle indépendant : exécute le snippet avec l'interpréteur Python dans un espace de noms
    restreint à len, sorted, reversed et list.

    Args:
        source_text (str): Snippet "xs = [...]" + expression.
    Returns:
        int: Valeur calculée par Python.
    """
    assignment, _, expression = source_text.strip().partition("\n")
    namespace = {"__builtins__": REFERENCE_BUILTINS}
    exec(assignment, namespace)
    return eval(expression, namespace)


# ---------- Génération ----------

def _sample_values(length: int, stream: np.random.Generator) -> List[int]:
    low, high = VALUE_RANGE
    return [int(value) for value in stream.choice(np.arange(low, high + 1), size=length, replace=False)]


def _randint(stream: np.random.Generator, low: int, high: int) -> int:
    """Entier uniforme dans [low, high] inclus."""
    return int(stream.integers(low, high + 1))


def _expression_template(xs: List[int], stream: np.random.Generator) -> PyExpr:
    length = len(xs)
    template = _randint(stream, 0, 3)
    if template == 0:
        target = _randint(stream, 0, length - 1)
        a = _randint(stream, 0, target)
        return Subscript(XS, BinOp("+", Const(a), Const(target - a)))
    if template == 1:
        return Subscript(XS, BinOp("-", Len(XS), Const(_randint(stream, 1, length))))
    if template == 2:
        return Subscript(XS, BinOp("%", Const(_randint(stream, length, VALUE_RANGE[1])), Len(XS)))
    return IndexCall(XS, Const(xs[_randint(stream, 0, length - 1)]))


def _chained_template(xs: List[int], stream: np.random.Generator) -> PyExpr:
    length = len(xs)
    template = _randint(stream, 0, 2)
    if template == 0:
        lower = _randint(stream, 0, length - 1)
        upper = _randint(stream, lower + 1, length)
        return Subscript(Slice(XS, Const(lower), Const(upper)), Const(_randint(stream, 0, upper - lower - 1)))
    if template == 1:
        return Subscript(Sorted(XS), Const(_randint(stream, 0, length - 1)))
    return Subscript(ReversedList(XS), Const(_randint(stream, 0, length - 1)))


def generate_case(category: PyIndexCategory, stream: np.random.Generator, case_id: str = "",
                  seed_coordinates: Optional[dict] = None) -> PyIndexCase:
    """
    Génère un cas PyIndex d'une catégorie.

    Args:
        category (PyIndexCategory): Forward, Backward, Nested, Expression ou Chained.
        stream (np.random.Generator): Flux aléatoire du cas.
        case_id (str): Identifiant du cas.
        seed_coordinates (dict, optional): Coordonnées de graine à conserver.
    Returns:
        PyIndexCase: Cas dont gold est calculé par evaluate.
    Raises:
        GenerationExhausted: Si aucun cas valide n'est obtenu dans le budget de tirages.
    """
    category = PyIndexCategory(category)
    for attempt in range(MAX_ATTEMPTS):
        length = _randint(stream, *LENGTH_RANGE)
        if category == PyIndexCategory.NESTED:
            xs = [int(value) for value in stream.integers(0, length, size=length)]
        else:
            xs = _sample_values(length, stream)

        if category == PyIndexCategory.FORWARD:
            expr = Subscript(XS, Const(_randint(stream, 0, length - 1)))
        elif category == PyIndexCategory.BACKWARD:
            expr = Subscript(XS, Neg(Const(_randint(stream, 1, length))))
        elif category == PyIndexCategory.NESTED:
            expr = Subscript(XS, Subscript(XS, Const(_randint(stream, 0, length - 1))))
        elif category == PyIndexCategory.EXPRESSION:
            expr = _expression_template(xs, stream)
        else:
            expr = _chained_template(xs, stream)

        if depth(expr) > MAX_DEPTH:
            continue
        try:
            gold = evaluate(expr, xs)
        except (IndexOutOfRange, ValueNotFound, DivisionByZero) as e:
            logger.debug(f"Tirage {attempt} rejeté ({category.value}) : {e}")
            continue
        return PyIndexCase(
            case_id=case_id,
            category=category.value,
            source_text=render_snippet(xs, expr),
            expression=render_expr(expr),
            xs=xs,
            gold=gold,
            seed_coordinates=seed_coordinates or {},
        )
    raise GenerationExhausted(f"No valid {category.value} case after {MAX_ATTEMPTS} attempts")


def generate_benchmark(seed: int, per_category: int = 20) -> List[PyIndexCase]:
    """
    Génère le benchmark PyIndex : per_category cas pour chacune des 5 catégories.

    Chaque cas a son propre sous-flux (seed, catégorie, index, essai) ; un snippet déjà
    présent est retiré avec l'essai suivant.

    Args:
        seed (int): Graine globale.
        per_category (int): Nombre de cas par catégorie.
    Returns:
        list[PyIndexCase]: 5 × per_category cas, ordonnés par (catégorie, index).
    Raises:
        GenerationExhausted: Si les snippets distincts ne suffisent pas.
    """
    cases, seen = [], set()
    for category in PyIndexCategory:
        for index in range(per_category):
            for attempt in range(MAX_ATTEMPTS):
                coordinates = {"seed": seed, "category": category.value, "index": index, "attempt": attempt}
                stream = substream(seed, "pyindex", category.value, index, attempt)
                case = generate_case(category, stream, f"{category.value}-{index:03d}", coordinates)
                if case.source_text not in seen:
                    break
            else:
                raise GenerationExhausted(f"Could not find a new {category.value} snippet for case {index}")
            seen.add(case.source_text)
            cases.append(case)
    logger.info(f"Benchmark PyIndex : {len(cases)} cas générés (seed={seed})")
    return cases


def write_benchmark(path: Union[str, Path], cases: List[PyIndexCase]) -> int:
    return write_lines_atomic(path, (case.model_dump_json() for case in cases))


def read_benchmark(path: Union[str, Path]) -> List[PyIndexCase]:
    return [PyIndexCase.model_validate(raw) for raw in read_jsonl(path)]
