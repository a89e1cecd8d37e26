"""
poskit : génération, évaluation et scoring de tâches de récupération par position.

Usage :
    python poskit.py generate --config config/eval.yaml --seed 42
    python poskit.py adapt --seed 42 --corpus data/docs.jsonl --code data/code.jsonl
    python poskit.py pyindex --seed 42
    python poskit.py eval --backend mock-oracle
    python poskit.py score
    python poskit.py report
    python poskit.py export-sft --seed 42
"""
import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from evaluation.backends import BUILTIN_BACKENDS, ResponseCache
from evaluation.reports import write_reasoning_table, write_reports
from evaluation.runner import load_trials, run_reasoning_comparison, run_to_file, write_trials
from evaluation.scoring import accuracy_report, rescore
from processing.corpus_adapters import build_mixture, load_code_snippets, load_corpus, read_mixture, write_mixture
from processing.errors import ConfigError, PoskitError
from processing.eval_sets import (
    build_pyindex_prompts, generate_condition_prompts, grid_cells, read_prompts, write_prompts,
)
from processing.pyindex import generate_benchmark, write_benchmark
from processing.sequences import get_pool
from processing.sft_export import export
from processing.utils import write_json
from schemas.config import BackendConfig, CorpusSource, RunConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

RESOLVED_CONFIG = "resolved_config.yaml"
MIXTURE_FILE = "mixture.jsonl"
BENCHMARK_FILE = "benchmark.jsonl"
PYINDEX_PROMPTS = "prompts.jsonl"

logger = logging.getLogger("poskit")


class PoskitArgumentParser(argparse.ArgumentParser):
    """Erreurs d'arguments : code de sortie 1 (usage / configuration)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


# ---------- Configuration ----------

def load_config(path: Optional[str]) -> RunConfig:
    """
    Charge la configuration YAML (ou la configuration par défaut sans fichier).

    Args:
        path (str, optional): Fichier YAML.
    Returns:
        RunConfig: Configuration validée.
    Raises:
        ConfigError: Fichier introuvable, YAML invalide ou champ invalide.
    """
    if not path:
        return RunConfig()
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
        return RunConfig.model_validate(raw)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except (yaml.YAMLError, ValidationError) as e:
        raise ConfigError(f"invalid config {path}: {e}") from e


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Applique les options de la ligne de commande par-dessus le fichier."""
    config = load_config(args.config)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out:
        updates["output_dir"] = args.out
    if args.workers:
        updates["workers"] = args.workers
    if updates:
        try:
            config = RunConfig.model_validate({**config.model_dump(), **updates})
        except ValidationError as e:
            raise ConfigError(f"invalid command-line option: {e}") from e
    return config


def require_seed(config: RunConfig) -> int:
    if config.seed is None:
        raise ConfigError("seed required")
    return config.seed


def write_resolved_config(config: RunConfig, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / RESOLVED_CONFIG, "w", encoding="utf-8") as f:
        yaml.safe_dump(config.model_dump(mode="json"), f, sort_keys=False, allow_unicode=True)


def output_dir(config: RunConfig, name: str) -> Path:
    return Path(config.output_dir) / name


# ---------- Sous-commandes ----------

def cmd_generate(config: RunConfig, args: argparse.Namespace) -> int:
    """Écrit un fichier de prompts par condition de la grille."""
    seed = require_seed(config)
    directory = output_dir(config, "prompts")
    write_resolved_config(config, directory)
    start = time.time()
    cells = grid_cells(config.grid)
    for cell in cells:
        path = directory / f"{cell.name}.jsonl"
        if path.exists() and not args.force:
            logger.info(f"{cell.name} déjà présent, skip.")
            continue
        prompts = generate_condition_prompts(cell, config.grid, seed, config.pool_files, config.workers)
        write_prompts(path, prompts)
        logger.info(f"{cell.name} : {len(prompts)} prompts")
    logger.info(f"{len(cells)} conditions générées en {time.time() - start:.2f} sec")
    return EXIT_OK


def _mixture_sources(config: RunConfig, args: argparse.Namespace):
    code_sources = list(config.code_corpora) + [CorpusSource(path=path) for path in args.code or []]
    adapted_sources = list(config.adapted_corpora) + [
        CorpusSource(path=path, turns_field=args.turns_field) for path in args.corpus or []
    ]
    for source in code_sources + adapted_sources:
        if not Path(source.path).exists():
            raise ConfigError(f"corpus not found: {source.path}")
    snippets = [snippet for source in code_sources for snippet in load_code_snippets(source)]
    records = [record for source in adapted_sources for record in load_corpus(source)]
    pools = [get_pool(name, config.pool_files) for name in config.mixture.synthetic_pools]
    return pools, snippets, records


def _build_mixture_file(config: RunConfig, args: argparse.Namespace, path: Path) -> int:
    seed = require_seed(config)
    mixture = config.mixture.model_copy(update={"seed": seed})
    pools, snippets, records = _mixture_sources(config, args)
    logger.info(
        f"Mélange : {mixture.counts.synthetic} synthétiques, {mixture.counts.code} code "
        f"({len(snippets)} extraits), {mixture.counts.adapted} adaptés ({len(records)} documents)"
    )
    return write_mixture(path, build_mixture(mixture, pools, snippets, records, workers=config.workers))


def cmd_adapt(config: RunConfig, args: argparse.Namespace) -> int:
    """Construit le mélange d'entraînement (synthétique + code + corpus adaptés)."""
    require_seed(config)
    directory = output_dir(config, "training")
    write_resolved_config(config, directory)
    path = directory / MIXTURE_FILE
    if path.exists() and not args.force:
        logger.info(f"{path} déjà présent, skip.")
        return EXIT_OK
    _build_mixture_file(config, args, path)
    return EXIT_OK


def cmd_pyindex(config: RunConfig, args: argparse.Namespace) -> int:
    """Génère le benchmark PyIndex et ses prompts."""
    seed = require_seed(config)
    directory = output_dir(config, "pyindex")
    write_resolved_config(config, directory)
    path = directory / BENCHMARK_FILE
    if path.exists() and not args.force:
        logger.info(f"{path} déjà présent, skip.")
        return EXIT_OK
    cases = generate_benchmark(seed, args.per_category or config.pyindex.per_category)
    write_benchmark(path, cases)
    write_prompts(directory / PYINDEX_PROMPTS, build_pyindex_prompts(cases, seed))
    logger.info(f"{len(cases)} cas PyIndex écrits dans {path}")
    return EXIT_OK


def backend_config(config: RunConfig, name: str) -> BackendConfig:
    """Backend déclaré dans la configuration, ou backend simulé intégré (mock-oracle, mock-random...)."""
    try:
        return config.backend(name)
    except KeyError:
        if name in BUILTIN_BACKENDS:
            return BackendConfig(name=name, kind=BUILTIN_BACKENDS[name], seed=config.seed or 0)
        raise ConfigError(f"unknown backend {name!r}")


def prompt_files(config: RunConfig) -> List[Path]:
    files = sorted(output_dir(config, "prompts").glob("*.jsonl"))
    pyindex_prompts = output_dir(config, "pyindex") / PYINDEX_PROMPTS
    if pyindex_prompts.exists():
        files.append(pyindex_prompts)
    return files


def cmd_eval(config: RunConfig, args: argparse.Namespace) -> int:
    """Exécute les jeux de prompts sur un backend (reprise des fichiers partiels)."""
    backend = backend_config(config, args.backend)
    files = prompt_files(config)
    if not files:
        raise ConfigError("no prompt sets found, run 'generate' or 'pyindex' first")
    directory = output_dir(config, "trials") / backend.name
    write_resolved_config(config, directory)
    cache = ResponseCache(config.cache_dir or os.getenv("POSKIT_CACHE_DIR") or output_dir(config, "cache"))

    if args.compare_reasoning:
        pairs = []
        for path in files:
            stem = "pyindex" if path.parent.name == "pyindex" else path.stem
            file_pairs = run_reasoning_comparison(read_prompts(path), backend, cache=cache)
            write_trials(directory / "reasoning-off" / f"{stem}.jsonl", [off for off, _ in file_pairs])
            write_trials(directory / "reasoning-budget" / f"{stem}.jsonl", [on for _, on in file_pairs])
            pairs.extend(file_pairs)
        table = write_reasoning_table(pairs, directory)
        logger.info(f"Comparaison avec / sans raisonnement : {len(pairs)} paires, table {table}")
        return EXIT_OK

    total = 0
    for path in files:
        stem = "pyindex" if path.parent.name == "pyindex" else path.stem
        total += len(run_to_file(read_prompts(path), backend, directory / f"{stem}.jsonl", cache=cache))
    logger.info(f"{total} essais pour {backend.backend_id}")
    return EXIT_OK


def _load_trial_files(config: RunConfig, args: argparse.Namespace):
    target = Path(args.trials) if args.trials else output_dir(config, "trials")
    paths = [target] if target.is_file() else sorted(target.rglob("*.jsonl"))
    trials = [trial for path in paths for trial in load_trials(path)]
    if not trials:
        raise ConfigError(f"no trial records found under {target}")
    return rescore(trials)


def cmd_score(config: RunConfig, args: argparse.Namespace) -> int:
    """Rescore des essais et résumé de précision (summary.json)."""
    trials = _load_trial_files(config, args)
    report = accuracy_report(trials)
    directory = output_dir(config, "reports")
    write_resolved_config(config, directory)
    write_json(directory / "summary.json", report.model_dump(mode="json"))
    print(f"overall accuracy: {report.overall:.4f} ({report.n_trials} trials)")
    for row in report.per_condition:
        print(f"  {row['condition']}: {row['accuracy']:.4f} (n={row['n_trials']})")
    return EXIT_OK


def cmd_report(config: RunConfig, args: argparse.Namespace) -> int:
    """Rapports complets : JSON + CSV de confusion, de précision par position et d'asymétrie."""
    trials = _load_trial_files(config, args)
    directory = output_dir(config, "reports")
    write_resolved_config(config, directory)
    write_reports(trials, directory)
    return EXIT_OK


def cmd_export_sft(config: RunConfig, args: argparse.Namespace) -> int:
    """Exporte le mélange au format SFT avec intervalles de réponse."""
    seed = require_seed(config)
    mixture_path = output_dir(config, "training") / MIXTURE_FILE
    if not mixture_path.exists():
        logger.info("Mélange absent, construction...")
        write_resolved_config(config, mixture_path.parent)
        _build_mixture_file(config, args, mixture_path)
    directory = output_dir(config, "sft")
    write_resolved_config(config, directory)
    manifest = export(read_mixture(mixture_path), directory, seed=seed)
    print(f"exported {manifest.total} records to {manifest.path}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "adapt": cmd_adapt,
    "pyindex": cmd_pyindex,
    "eval": cmd_eval,
    "score": cmd_score,
    "report": cmd_report,
    "export-sft": cmd_export_sft,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="fichier de configuration YAML")
    common.add_argument("--seed", type=int, help="graine globale (obligatoire pour la génération)")
    common.add_argument("--out", help="répertoire de sortie")
    common.add_argument("--workers", type=int, help="nombre de threads")
    common.add_argument("--force", action="store_true", help="régénère les sorties existantes")
    common.add_argument("--verbose", action="store_true", help="journalisation DEBUG")

    parser = PoskitArgumentParser(prog="poskit", description="Benchmarks de récupération par position")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=PoskitArgumentParser)
    subparsers.add_parser("generate", parents=[common], help="prompts d'évaluation par condition")

    corpus_args = argparse.ArgumentParser(add_help=False)
    corpus_args.add_argument("--corpus", action="append", help="corpus JSONL à adapter (répétable)")
    corpus_args.add_argument("--code", action="append", help="corpus JSONL d'extraits de code (répétable)")
    corpus_args.add_argument("--turns-field", help="champ des tours de dialogue dans --corpus")
    subparsers.add_parser("adapt", parents=[common, corpus_args], help="mélange d'entraînement")
    subparsers.add_parser("export-sft", parents=[common, corpus_args], help="export SFT + manifeste")

    pyindex = subparsers.add_parser("pyindex", parents=[common], help="benchmark PyIndex")
    pyindex.add_argument("--per-category", type=int, help="cas par catégorie (défaut 20)")

    evaluate = subparsers.add_parser("eval", parents=[common], help="exécution sur un backend")
    evaluate.add_argument("--backend", required=True, help="nom du backend (config ou mock-oracle, mock-random...)")
    evaluate.add_argument("--compare-reasoning", action="store_true", help="exécute sans puis avec raisonnement")

    for name in ("score", "report"):
        scoring = subparsers.add_parser(name, parents=[common], help="scores des essais")
        scoring.add_argument("--trials", help="fichier ou répertoire d'essais (défaut <out>/trials)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Point d'entrée de la ligne de commande.

    Returns:
        int: 0 en cas de succès, 1 pour une erreur d'usage ou de configuration, 2 pour une erreur d'exécution.
    """
    load_dotenv()
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
    )
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](config, args)
    except ConfigError as e:
        logger.error(f"Erreur de configuration : {e}")
        print(f"poskit: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (PoskitError, OSError) as e:
        logger.error(f"Erreur pipeline : {e}")
        print(f"poskit: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
