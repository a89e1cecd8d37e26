import json
from pathlib import Path

import pandas as pd
import pytest
import yaml

import poskit
from evaluation.runner import load_trials
from processing.eval_sets import read_prompts
from processing.sft_export import read_export

SMALL_CONFIG = {
    "seed": 42,
    "workers": 2,
    "grid": {
        "tasks": ["pos2item", "item2pos"],
        "anchors": ["endpoint"],
        "directions": ["forward", "backward"],
        "item_kinds": ["letter"],
        "lengths": [5],
        "include_counting": True,
        "sequences_per_condition": 2,
    },
    "mixture": {"counts": {"synthetic": 30, "code": 0, "adapted": 0}},
    "pyindex": {"per_category": 2},
}


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    """Répertoire de travail isolé avec une petite configuration YAML ; renvoie (config, sortie)."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("POSKIT_CACHE_DIR", raising=False)
    out = tmp_path / "out"
    config_path = tmp_path / "small.yaml"
    config_path.write_text(yaml.safe_dump(SMALL_CONFIG), encoding="utf-8")
    return str(config_path), out


def _run(config_path, out, *args):
    return poskit.main([args[0], "--config", config_path, "--out", str(out), *args[1:]])


def test_usage_errors_exit_1(tmp_path, monkeypatch):
    """
    Teste les codes de sortie d'usage : option inconnue, graine absente, fichier de configuration invalide.

    Args:
        tmp_path: fixture pytest (répertoire temporaire)
        monkeypatch: fixture pytest
    Returns:
        None
    """
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as excinfo:
        poskit.main(["generate", "--no-such-flag"])
    assert excinfo.value.code == poskit.EXIT_USAGE
    with pytest.raises(SystemExit) as excinfo:
        poskit.main(["eval"])
    assert excinfo.value.code == poskit.EXIT_USAGE

    assert poskit.main(["generate", "--out", str(tmp_path / "out")]) == poskit.EXIT_USAGE
    assert poskit.main(["generate", "--config", str(tmp_path / "missing.yaml"), "--seed", "1"]) == poskit.EXIT_USAGE
    broken = tmp_path / "broken.yaml"
    broken.write_text("seed: [unclosed", encoding="utf-8")
    assert poskit.main(["generate", "--config", str(broken)]) == poskit.EXIT_USAGE
    invalid = tmp_path / "invalid.yaml"
    invalid.write_text("seed: -4\n", encoding="utf-8")
    assert poskit.main(["generate", "--config", str(invalid)]) == poskit.EXIT_USAGE


def test_eval_errors(workspace):
    config_path, out = workspace
    assert _run(config_path, out, "eval", "--backend", "mock-oracle") == poskit.EXIT_USAGE
    assert _run(config_path, out, "generate") == poskit.EXIT_OK
    assert _run(config_path, out, "eval", "--backend", "nowhere") == poskit.EXIT_USAGE
    assert _run(config_path, out, "score") == poskit.EXIT_USAGE


def test_generate_skips_existing(workspace):
    """
    Teste que generate ne réécrit pas un fichier existant sauf avec --force.

    Args:
        workspace: configuration et répertoire de sortie
    Returns:
        None
    """
    config_path, out = workspace
    assert _run(config_path, out, "generate") == poskit.EXIT_OK
    files = sorted((out / "prompts").glob("*.jsonl"))
    assert [path.name for path in files] == [
        "count_letter_L5.jsonl",
        "item2pos_endpoint_backward_letter_L5.jsonl",
        "item2pos_endpoint_forward_letter_L5.jsonl",
        "pos2item_endpoint_backward_letter_L5.jsonl",
        "pos2item_endpoint_forward_letter_L5.jsonl",
    ]
    assert (out / "prompts" / poskit.RESOLVED_CONFIG).exists()

    target = out / "prompts" / "pos2item_endpoint_forward_letter_L5.jsonl"
    original = target.read_bytes()
    target.write_text("", encoding="utf-8")
    assert _run(config_path, out, "generate") == poskit.EXIT_OK
    assert target.read_bytes() == b""
    assert _run(config_path, out, "generate", "--force") == poskit.EXIT_OK
    assert target.read_bytes() == original


def test_full_mock_run(workspace, capsys):
    """
    Teste une chaîne complète avec le backend oracle : generate, pyindex, eval, score, report, export-sft.

    Args:
        workspace: configuration et répertoire de sortie
        capsys: fixture pytest pour lire la sortie standard
    Returns:
        None
    """
    config_path, out = workspace
    assert _run(config_path, out, "generate") == poskit.EXIT_OK
    assert _run(config_path, out, "pyindex") == poskit.EXIT_OK
    assert len(read_prompts(out / "pyindex" / poskit.PYINDEX_PROMPTS)) == 10

    assert _run(config_path, out, "eval", "--backend", "mock-oracle") == poskit.EXIT_OK
    trial_files = sorted((out / "trials" / "mock-oracle").glob("*.jsonl"))
    assert len(trial_files) == 6
    assert (out / "trials" / "mock-oracle" / "pyindex.jsonl").exists()
    trials = [trial for path in trial_files for trial in load_trials(path)]
    assert len(trials) == 4 * 10 + 2 + 10
    assert all(trial.correct for trial in trials)
    assert list((out / "cache").rglob("*.json"))

    capsys.readouterr()
    assert _run(config_path, out, "score") == poskit.EXIT_OK
    printed = capsys.readouterr().out
    assert printed.startswith("overall accuracy: 1.0000 (52 trials)")
    summary = json.loads((out / "reports" / "summary.json").read_text(encoding="utf-8"))
    assert summary["overall"] == 1.0

    assert _run(config_path, out, "report") == poskit.EXIT_OK
    reports = out / "reports"
    assert (reports / "direction_summary.csv").exists()
    assert (reports / "pyindex_summary.csv").exists()
    assert len(list(reports.glob("confusion_*.csv"))) == 5
    assert len(list(reports.glob("accuracy_*.csv"))) == 4

    assert _run(config_path, out, "export-sft") == poskit.EXIT_OK
    printed = capsys.readouterr().out
    assert "exported 30 records" in printed
    assert (out / "training" / poskit.MIXTURE_FILE).exists()
    records = read_export(out / "sft" / "sft.jsonl")
    assert len(records) == 30
    manifest = json.loads((out / "sft" / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["seed"] == 42
    assert sum(manifest["per_source"].values()) == 30


def test_compare_reasoning(workspace):
    """
    Teste --compare-reasoning : essais sans / avec raisonnement et table appariée.

    Args:
        workspace: configuration et répertoire de sortie
    Returns:
        None
    """
    config_path, out = workspace
    assert _run(config_path, out, "generate") == poskit.EXIT_OK
    assert _run(config_path, out, "eval", "--backend", "mock-reasoning-oracle", "--compare-reasoning") == poskit.EXIT_OK
    directory = out / "trials" / "mock-reasoning-oracle"
    off = load_trials(directory / "reasoning-off" / "pos2item_endpoint_forward_letter_L5.jsonl")
    on = load_trials(directory / "reasoning-budget" / "pos2item_endpoint_forward_letter_L5.jsonl")
    assert len(off) == len(on) == 10
    assert not any(trial.correct for trial in off)
    assert all(trial.correct for trial in on)
    table = pd.read_csv(directory / "reasoning_comparison.csv")
    retrieval = table.dropna(subset=["position"])
    assert (retrieval["delta"] == 1.0).all()


def test_adapt_with_corpora(workspace):
    config_path, out = workspace
    fixtures = Path(__file__).parent / "fixtures"
    small = {**SMALL_CONFIG, "mixture": {"counts": {"synthetic": 5, "code": 1, "adapted": 3}}}
    Path(config_path).write_text(yaml.safe_dump(small), encoding="utf-8")
    assert _run(
        config_path, out, "adapt",
        "--code", str(fixtures / "code.jsonl"),
        "--corpus", str(fixtures / "documents.jsonl"),
    ) == poskit.EXIT_OK
    lines = (out / "training" / poskit.MIXTURE_FILE).read_text(encoding="utf-8").splitlines()
    assert len(lines) == 9
    assert _run(config_path, out, "adapt", "--force", "--code", "missing.jsonl") == poskit.EXIT_USAGE
