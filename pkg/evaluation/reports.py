"""
Écriture des rapports : résumé JSON et tables CSV prêtes à tracer (aucune figure n'est produite).
"""
import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import pandas as pd

from evaluation.scoring import (
    accuracy_report, confusion, confusion_frame, direction_summary, per_offset_accuracy, pyindex_summary,
)
from processing.utils import write_json
from schemas.records import TrialRecord

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"
DIRECTION_FILE = "direction_summary.csv"
PYINDEX_FILE = "pyindex_summary.csv"
REASONING_FILE = "reasoning_comparison.csv"


def group_by_condition(trials: List[TrialRecord]) -> Dict[str, List[TrialRecord]]:
    groups: Dict[str, List[TrialRecord]] = {}
    for trial in trials:
        groups.setdefault(trial.condition.slug(), []).append(trial)
    return dict(sorted(groups.items()))


def accuracy_frame(trials: List[TrialRecord]) -> pd.DataFrame:
    """Une ligne par offset n : position, accuracy, n_trials."""
    per_offset, counts = per_offset_accuracy(trials)
    rows = [{"position": n, "accuracy": per_offset[n], "n_trials": counts[n]} for n in sorted(per_offset)]
    return pd.DataFrame(rows, columns=["position", "accuracy", "n_trials"])


def direction_table(trials: List[TrialRecord]) -> pd.DataFrame:
    """Table task, mean, sd (une ligne par tâche/ancre/direction, écart-type entre positions)."""
    summary = direction_summary(trials)
    table = pd.DataFrame({
        "task": summary["task"] + "/" + summary["anchor"] + "/" + summary["direction"],
        "mean": summary["mean"],
        "sd": summary["sd"],
    })
    return table.sort_values("task").reset_index(drop=True)


def write_reports(trials: List[TrialRecord], out_dir: Union[str, Path]) -> Dict[str, object]:
    """
    Écrit tous les rapports d'un ensemble d'essais.

    Fichiers produits :
        summary.json, confusion_<condition>.csv, accuracy_<condition>.csv,
        direction_summary.csv, pyindex_summary.csv (si des essais PyIndex sont présents).

    Args:
        trials (list[TrialRecord]): Essais (tous backends confondus).
        out_dir (str | Path): Répertoire de sortie.
    Returns:
        dict: Résumé écrit dans summary.json.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = accuracy_report(trials)
    summary = report.model_dump(mode="json")

    for slug, group in group_by_condition(trials).items():
        if group[0].condition.task == "pyindex":
            continue
        confusion_frame(confusion(group)).to_csv(out_dir / f"confusion_{slug}.csv", index=False)
        if group[0].offset is not None:
            accuracy_frame(group).to_csv(out_dir / f"accuracy_{slug}.csv", index=False)

    directions = direction_table(trials)
    if not directions.empty:
        directions.to_csv(out_dir / DIRECTION_FILE, index=False)
    pyindex = pyindex_summary(trials)
    if not pyindex.empty:
        pyindex.to_csv(out_dir / PYINDEX_FILE, index=False)
        summary["pyindex"] = pyindex.to_dict(orient="records")

    write_json(out_dir / SUMMARY_FILE, summary)
    logger.info(f"Rapports écrits dans {out_dir} ({len(trials)} essais, précision {report.overall:.3f})")
    return summary


def reasoning_table(pairs: List[Tuple[TrialRecord, TrialRecord]]) -> pd.DataFrame:
    """
    Table appariée sans / avec raisonnement par (tâche, position).

    Args:
        pairs (list[tuple]): Couples (essai off, essai budget) de même prompt.
    Returns:
        pd.DataFrame: Colonnes task, position, accuracy_off, accuracy_on, delta.
    """
    rows = []
    for off, on in pairs:
        condition = off.condition
        task = "/".join(
            value for value in (
                condition.task,
                condition.anchor.value if condition.anchor else None,
                condition.direction.value if condition.direction else None,
            ) if value
        )
        rows.append({"task": task, "position": off.offset, "off": float(off.correct), "on": float(on.correct)})
    columns = ["task", "position", "accuracy_off", "accuracy_on", "delta"]
    if not rows:
        return pd.DataFrame(columns=columns)
    df = pd.DataFrame(rows)
    table = df.groupby(["task", "position"], dropna=False).agg(
        accuracy_off=("off", "mean"), accuracy_on=("on", "mean"),
    ).reset_index()
    table["delta"] = table["accuracy_on"] - table["accuracy_off"]
    return table[columns]


def write_reasoning_table(pairs: List[Tuple[TrialRecord, TrialRecord]], out_dir: Union[str, Path]) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / REASONING_FILE
    reasoning_table(pairs).to_csv(path, index=False)
    return path
