"""
Analyse des réponses et calcul des scores : correspondance exacte, précision par offset,
matrices de confusion et asymétrie avant / arrière.
"""
import logging
import re
from typing import Callable, Dict, List, Optional, Tuple

import pandas as pd

from processing.errors import EmptySubset, MissingDirection, MixedConditions, OutOfRange
from processing.tasks import resolve_position
from schemas.records import AccuracyReport, ConfusionMatrix, ParsedAnswer, ParsedKind, PromptInstance, TrialRecord
from schemas.tasks import Anchor, AnchorKind, Direction, GoldAnswer, Item, ItemKind

logger = logging.getLogger(__name__)

FENCE_RE = re.compile(r"```[^\n`]*\n?(.*?)\n?```", re.DOTALL)
INTEGER_RE = re.compile(r"\d+")
QUOTE_PAIRS = {'"': '"', "'": "'", "`": "`", "“": "”", "‘": "’", "«": "»"}
UNPARSEABLE_LABEL = "unparseable"
OUT_OF_RANGE_LABEL = "out_of_range"


# ---------- Analyse des réponses ----------

def normalize_response(raw: str) -> str:
    """
    Normalise une réponse brute : espaces, blocs ``` (contenu conservé), guillemets et backticks englobants.

    Args:
        raw (str): Réponse du modèle.
    Returns:
        str: Texte normalisé.
    """
    text = FENCE_RE.sub(lambda match: match.group(1), raw or "").strip()
    while len(text) >= 2 and text[0] in QUOTE_PAIRS and text[-1] == QUOTE_PAIRS[text[0]]:
        text = text[1:-1].strip()
    # backtick isolé restant (bloc non fermé)
    return text.strip("`").strip()


def _token_pattern(text: str) -> re.Pattern:
    return re.compile(r"(?<!\w)" + re.escape(text) + r"(?!\w)")


def parse_item_response(raw: str, candidates: List[Item]) -> ParsedAnswer:
    """
    Associe une réponse à l'un des éléments candidats de la séquence.

    Le candidat retenu est celui dont la première occurrence (en mot entier) est la plus à
    gauche ; à égalité, le plus long. Les mots sont comparés sans casse, les lettres avec
    casse (une réponse d'un seul caractère est mise en majuscule), les lignes de code sans
    leur indentation.

    Args:
        raw (str): Réponse brute.
        candidates (list[Item]): Éléments de la séquence.
    Returns:
        ParsedAnswer: Élément reconnu, ou Unparseable.
    """
    text = normalize_response(raw)
    if not text or not candidates:
        return ParsedAnswer.unparseable()
    kind = candidates[0].kind
    if kind == ItemKind.LETTER:
        if len(text) == 1:
            text = text.upper()
    elif kind != ItemKind.CODE_LINE:
        text = text.casefold()

    best: Optional[Tuple[int, int, Item]] = None
    for candidate in candidates:
        needle = candidate.text.strip()
        if kind not in (ItemKind.LETTER, ItemKind.CODE_LINE):
            needle = needle.casefold()
        match = _token_pattern(needle).search(text)
        if match is None:
            continue
        rank = (match.start(), -len(needle))
        if best is None or rank < best[:2]:
            best = (rank[0], rank[1], candidate)
    if best is None:
        return ParsedAnswer.unparseable()
    return ParsedAnswer(kind=ParsedKind.ITEM, item=best[2])


def parse_integer_response(raw: str) -> ParsedAnswer:
    """
    Extrait le premier entier décimal de la réponse ("4th" -> 4).

    Args:
        raw (str): Réponse brute.
    Returns:
        ParsedAnswer: Entier, ou Unparseable sans chiffre.
    """
    match = INTEGER_RE.search(normalize_response(raw))
    if match is None:
        return ParsedAnswer.unparseable()
    return ParsedAnswer(kind=ParsedKind.INTEGER, value=int(match.group(0)))


def parse_answer(raw: str, gold: GoldAnswer, candidates: List[Item]) -> ParsedAnswer:
    """Choisit l'espace de réponse d'après la réponse de référence."""
    if gold.is_item:
        return parse_item_response(raw, candidates)
    return parse_integer_response(raw)


def trial_candidates(trial: TrialRecord) -> List[Item]:
    kind = trial.condition.item_kind or ItemKind.GENERIC
    return [Item(text=text, kind=kind) for text in trial.sequence]


def score_prompt(prompt: PromptInstance, raw: str) -> Tuple[ParsedAnswer, bool]:
    parsed = parse_answer(raw, prompt.gold, prompt.candidates())
    return parsed, parsed.matches(prompt.gold)


def rescore(trials: List[TrialRecord]) -> List[TrialRecord]:
    """
    Réanalyse les réponses brutes (quel que soit le backend qui a produit les essais).

    Args:
        trials (list[TrialRecord]): Essais à rescorer.
    Returns:
        list[TrialRecord]: Essais avec parsed et correct recalculés.
    """
    rescored = []
    for trial in trials:
        parsed = parse_answer(trial.raw_response, trial.gold, trial_candidates(trial))
        rescored.append(trial.model_copy(update={"parsed": parsed, "correct": parsed.matches(trial.gold)}))
    return rescored


# ---------- Précision ----------

def accuracy(trials: List[TrialRecord], subset: Optional[Callable[[TrialRecord], bool]] = None) -> float:
    """
    Précision en correspondance exacte sur un sous-ensemble d'essais.

    Args:
        trials (list[TrialRecord]): Essais.
        subset (callable, optional): Prédicat de sélection (ex. offset == 3).
    Returns:
        float: Fraction d'essais corrects (une réponse inexploitable est fausse).
    Raises:
        EmptySubset: Si le sous-ensemble est vide.
    """
    selected = [trial for trial in trials if subset is None or subset(trial)]
    if not selected:
        raise EmptySubset("No trial matches the subset")
    return sum(1 for trial in selected if trial.correct) / len(selected)


def trials_frame(trials: List[TrialRecord]) -> pd.DataFrame:
    """Un essai par ligne avec ses coordonnées de condition."""
    rows = []
    for trial in trials:
        condition = trial.condition
        rows.append({
            "slug": condition.slug(),
            "task": condition.task,
            "anchor": condition.anchor.value if condition.anchor else None,
            "direction": condition.direction.value if condition.direction else None,
            "item_kind": condition.item_kind.value if condition.item_kind else None,
            "length": condition.length,
            "category": condition.category,
            "offset": trial.offset,
            "correct": float(trial.correct),
        })
    return pd.DataFrame(rows, columns=[
        "slug", "task", "anchor", "direction", "item_kind", "length", "category", "offset", "correct",
    ])


def per_offset_accuracy(trials: List[TrialRecord]) -> Tuple[Dict[int, float], Dict[int, int]]:
    """
    Précision Acc(T_n) et effectif par offset n.

    Seuls les essais de récupération ont un offset : le comptage et PyIndex sont ignorés. La moyenne
    des précisions par offset pondérée par les effectifs vaut donc la précision des seuls essais de
    récupération, et non la précision globale dès que d'autres essais sont présents.
    """
    df = trials_frame(trials).dropna(subset=["offset"])
    if df.empty:
        return {}, {}
    grouped = df.groupby(df["offset"].astype(int))["correct"].agg(["mean", "count"])
    return (
        {int(n): float(row["mean"]) for n, row in grouped.iterrows()},
        {int(n): int(row["count"]) for n, row in grouped.iterrows()},
    )


def direction_summary(trials: List[TrialRecord]) -> pd.DataFrame:
    """
    Moyenne et écart-type des précisions par position, pour chaque (tâche, ancre, direction).

    Args:
        trials (list[TrialRecord]): Essais de récupération.
    Returns:
        pd.DataFrame: Colonnes task, anchor, direction, mean, sd, n_positions, n_trials.
    """
    df = trials_frame(trials).dropna(subset=["offset", "direction"])
    columns = ["task", "anchor", "direction", "mean", "sd", "n_positions", "n_trials"]
    if df.empty:
        return pd.DataFrame(columns=columns)
    per_position = df.groupby(["task", "anchor", "direction", "offset"])["correct"].agg(["mean", "count"]).reset_index()
    summary = per_position.groupby(["task", "anchor", "direction"]).agg(
        mean=("mean", "mean"),
        sd=("mean", lambda values: float(values.std(ddof=0))),
        n_positions=("offset", "count"),
        n_trials=("count", "sum"),
    ).reset_index()
    return summary[columns]


def asymmetry_rows(summary: pd.DataFrame) -> List[Dict[str, object]]:
    """Écart avant - arrière pour chaque (tâche, ancre) couverte dans les deux directions."""
    rows = []
    for (task, anchor), group in summary.groupby(["task", "anchor"]):
        by_direction = group.set_index("direction")
        if Direction.FORWARD.value not in by_direction.index or Direction.BACKWARD.value not in by_direction.index:
            continue
        forward = by_direction.loc[Direction.FORWARD.value]
        backward = by_direction.loc[Direction.BACKWARD.value]
        rows.append({
            "task": task,
            "anchor": anchor,
            "forward_mean": float(forward["mean"]),
            "forward_sd": float(forward["sd"]),
            "backward_mean": float(backward["mean"]),
            "backward_sd": float(backward["sd"]),
            "asymmetry": float(forward["mean"] - backward["mean"]),
        })
    return rows


def _per_condition(trials: List[TrialRecord]) -> List[Dict[str, object]]:
    df = trials_frame(trials)
    rows = []
    for slug, group in df.groupby("slug", sort=True):
        with_offset = group.dropna(subset=["offset"])
        sd = 0.0
        if not with_offset.empty:
            sd = float(with_offset.groupby("offset")["correct"].mean().std(ddof=0))
        first = group.iloc[0]
        rows.append({
            "condition": slug,
            "task": first["task"],
            "anchor": first["anchor"],
            "direction": first["direction"],
            "item_kind": first["item_kind"],
            "length": None if pd.isna(first["length"]) else int(first["length"]),
            "accuracy": float(group["correct"].mean()),
            "n_trials": int(len(group)),
            "sd_across_positions": sd,
        })
    return rows


def accuracy_report(trials: List[TrialRecord]) -> AccuracyReport:
    """
    Rapport de précision : global, par offset, par condition, et asymétrie quand elle est calculable.

    overall porte sur tous les essais (comptage et PyIndex compris) ; per_offset ne couvre que la
    récupération. Sur une condition de récupération seule, overall est la moyenne de per_offset
    pondérée par per_offset_trials.

    Args:
        trials (list[TrialRecord]): Essais.
    Returns:
        AccuracyReport: Rapport complet.
    Raises:
        EmptySubset: Sans aucun essai.
    """
    overall = accuracy(trials)
    per_offset, per_offset_trials = per_offset_accuracy(trials)
    return AccuracyReport(
        overall=overall,
        n_trials=len(trials),
        per_offset=per_offset,
        per_offset_trials=per_offset_trials,
        per_condition=_per_condition(trials),
        asymmetry=asymmetry_rows(direction_summary(trials)),
    )


def asymmetry_report(trials: List[TrialRecord]) -> AccuracyReport:
    """
    Rapport d'asymétrie avant / arrière par tâche.

    Args:
        trials (list[TrialRecord]): Essais couvrant les deux directions d'au moins une tâche.
    Returns:
        AccuracyReport: Rapport dont asymmetry est non vide.
    Raises:
        MissingDirection: Si aucune tâche n'a ses deux directions.
    """
    report = accuracy_report(trials)
    if not report.asymmetry:
        raise MissingDirection("No task is covered in both directions")
    return report


def pyindex_summary(trials: List[TrialRecord]) -> pd.DataFrame:
    """Précision par catégorie PyIndex puis moyenne non pondérée des catégories."""
    df = trials_frame(trials)
    df = df[df["task"] == "pyindex"]
    if df.empty:
        return pd.DataFrame(columns=["category", "accuracy", "n_trials"])
    summary = df.groupby("category")["correct"].agg(accuracy="mean", n_trials="count").reset_index()
    mean_row = pd.DataFrame([{
        "category": "mean", "accuracy": float(summary["accuracy"].mean()), "n_trials": int(summary["n_trials"].sum()),
    }])
    return pd.concat([summary, mean_row], ignore_index=True)


# ---------- Matrice de confusion ----------

def _answered_label(trial: TrialRecord) -> object:
    parsed = trial.parsed
    if parsed.kind == ParsedKind.UNPARSEABLE:
        return UNPARSEABLE_LABEL
    if trial.condition.anchor is None:
        return parsed.value
    if parsed.kind == ParsedKind.ITEM:
        return trial.sequence.index(parsed.item.text) + 1 if parsed.item.text in trial.sequence else UNPARSEABLE_LABEL
    anchor = Anchor.endpoint() if trial.condition.anchor == AnchorKind.ENDPOINT else Anchor.relative(trial.anchor_position)
    try:
        return resolve_position(anchor, trial.condition.direction, parsed.value, len(trial.sequence))
    except OutOfRange:
        return OUT_OF_RANGE_LABEL


def confusion(trials: List[TrialRecord]) -> ConfusionMatrix:
    """
    Matrice de confusion position demandée / position répondue, normalisée par ligne.

    Les axes sont des positions absolues (longueur pour le comptage). Pour les tâches arrière,
    ils sont ordonnés par position décroissante afin que les bonnes réponses restent sur la
    diagonale. Les colonnes se terminent par "unparseable" (et "out_of_range" si nécessaire).

    Args:
        trials (list[TrialRecord]): Essais d'une seule condition.
    Returns:
        ConfusionMatrix: Effectifs et pourcentages par ligne.
    Raises:
        MixedConditions: Si les essais couvrent plusieurs conditions.
        EmptySubset: Sans essai.
    """
    if not trials:
        raise EmptySubset("No trial to build a confusion matrix")
    condition = trials[0].condition
    if any(trial.condition != condition for trial in trials):
        raise MixedConditions("Confusion matrices need trials of a single condition")
    counting = condition.anchor is None
    queried = [trial.gold.value if counting else trial.queried_position for trial in trials]
    answered = [_answered_label(trial) for trial in trials]

    descending = condition.direction == Direction.BACKWARD
    row_labels = sorted(set(queried), reverse=descending)
    numeric = sorted({label for label in answered if isinstance(label, int)} | set(row_labels), reverse=descending)
    column_labels = [str(label) for label in numeric]
    if OUT_OF_RANGE_LABEL in answered:
        column_labels.append(OUT_OF_RANGE_LABEL)
    column_labels.append(UNPARSEABLE_LABEL)

    table = pd.crosstab(
        pd.Series(queried, name="queried"),
        pd.Series([str(label) for label in answered], name="answered"),
    ).reindex(index=row_labels, columns=column_labels, fill_value=0)
    percentages = table.div(table.sum(axis=1), axis=0).fillna(0.0) * 100
    return ConfusionMatrix(
        queried_labels=[int(label) for label in row_labels],
        answered_labels=column_labels,
        counts=table.astype(int).values.tolist(),
        row_percentages=percentages.astype(float).values.tolist(),
        descending=descending,
    )


def confusion_frame(matrix: ConfusionMatrix) -> pd.DataFrame:
    """Une ligne par cellule : queried, answered, count, row_pct."""
    rows = []
    for row_index, queried in enumerate(matrix.queried_labels):
        for column_index, answered in enumerate(matrix.answered_labels):
            rows.append({
                "queried": queried,
                "answered": answered,
                "count": matrix.counts[row_index][column_index],
                "row_pct": matrix.row_percentages[row_index][column_index],
            })
    return pd.DataFrame(rows, columns=["queried", "answered", "count", "row_pct"])
