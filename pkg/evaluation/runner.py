"""
Exécution des prompts sur un backend : cache, reprise, concurrence bornée et comparaison
avec / sans raisonnement.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from evaluation.backends import Backend, BackendResponse, ResponseCache, make_backend
from evaluation.scoring import score_prompt
from processing.errors import MalformedResponse
from processing.tasks import resolve_position
from processing.utils import chunked, read_jsonl, write_lines_atomic
from schemas.config import BackendConfig, ReasoningMode
from schemas.records import ParsedAnswer, PromptInstance, TrialRecord
from schemas.tasks import AnchorKind, QueryKind

logger = logging.getLogger(__name__)

CHECKPOINT_EVERY = 200


def _query_coordinates(prompt: PromptInstance) -> Dict[str, Optional[int]]:
    query = prompt.test_query
    if query is None or query.kind == QueryKind.COUNTING:
        return {"offset": None, "anchor_position": None, "queried_position": None}
    anchor_position = query.anchor.position if query.anchor.kind == AnchorKind.RELATIVE else None
    if query.kind == QueryKind.POSITION_TO_ITEM:
        queried = resolve_position(query.anchor, query.direction, query.offset, prompt.sequence.length)
    else:
        queried = prompt.sequence.position_of(query.target.text)
    return {"offset": query.offset, "anchor_position": anchor_position, "queried_position": queried}


def _trial(prompt: PromptInstance, config: BackendConfig, response: Optional[BackendResponse],
           error: Optional[str] = None) -> TrialRecord:
    if response is None:
        parsed, correct, raw, reasoning, latency = ParsedAnswer.unparseable(), False, "", None, 0.0
    else:
        parsed, correct = score_prompt(prompt, response.text)
        raw, reasoning, latency = response.text, response.reasoning, response.latency
    return TrialRecord(
        condition=prompt.condition,
        prompt_id=prompt.prompt_id,
        sequence=prompt.sequence.texts if prompt.sequence is not None else [],
        gold=prompt.gold,
        raw_response=raw,
        reasoning_trace=reasoning,
        parsed=parsed,
        correct=correct,
        error=error,
        latency=latency,
        backend_id=config.backend_id,
        reasoning=config.reasoning.value,
        seed_coordinates=prompt.seed_coordinates,
        **_query_coordinates(prompt),
    )


def run_condition(
    prompts: List[PromptInstance],
    config: BackendConfig,
    cache: Optional[ResponseCache] = None,
    backend: Optional[Backend] = None,
) -> List[TrialRecord]:
    """
    Exécute chaque prompt une fois sur le backend et renvoie un essai par prompt.

    Les réponses sont mises en cache par (backend, empreinte du prompt, paramètres
    d'échantillonnage) ; au plus config.concurrency requêtes sont en cours simultanément.
    Une réponse mal formée donne un essai faux et inexploitable sans interrompre les autres.

    Args:
        prompts (list[PromptInstance]): Prompts à évaluer (non vide).
        config (BackendConfig): Backend et paramètres d'échantillonnage.
        cache (ResponseCache, optional): Cache de réponses.
        backend (Backend, optional): Instance déjà construite (sinon d'après config).
    Returns:
        list[TrialRecord]: Essais triés par empreinte de prompt.
    Raises:
        BackendUnavailable: Si le backend reste injoignable après les nouveaux essais.
    """
    if not prompts:
        raise ValueError("run_condition needs at least one prompt")
    backend = backend or make_backend(config)

    def _run(prompt: PromptInstance) -> TrialRecord:
        key = cache.key(config, prompt.prompt_id) if cache else None
        response = cache.get(key) if cache else None
        if response is None:
            try:
                response = backend.complete(prompt)
            except MalformedResponse as e:
                logger.warning(f"Réponse mal formée pour {prompt.prompt_id[:12]} : {e}")
                return _trial(prompt, config, None, error=str(e))
            if cache:
                cache.put(key, response)
        return _trial(prompt, config, response)

    with ThreadPoolExecutor(max_workers=config.concurrency) as executor:
        trials = list(executor.map(_run, prompts))
    return sorted(trials, key=lambda trial: trial.prompt_id)


def load_trials(path: Union[str, Path]) -> List[TrialRecord]:
    path = Path(path)
    if not path.exists():
        return []
    return [TrialRecord.model_validate(raw) for raw in read_jsonl(path)]


def write_trials(path: Union[str, Path], trials: List[TrialRecord]) -> int:
    ordered = sorted(trials, key=lambda trial: trial.prompt_id)
    return write_lines_atomic(path, (trial.model_dump_json() for trial in ordered))


def run_to_file(
    prompts: List[PromptInstance],
    config: BackendConfig,
    path: Union[str, Path],
    cache: Optional[ResponseCache] = None,
    backend: Optional[Backend] = None,
) -> List[TrialRecord]:
    """
    Exécute les prompts et écrit les essais en JSONL, en reprenant un fichier partiel existant.

    Seuls les prompts absents du fichier sont exécutés ; le fichier est réécrit (trié) tous
    les CHECKPOINT_EVERY prompts, si bien qu'une interruption ne perd que le dernier lot.

    Args:
        prompts (list[PromptInstance]): Prompts de la condition.
        config (BackendConfig): Backend.
        path (str | Path): Fichier d'essais.
        cache (ResponseCache, optional): Cache de réponses.
        backend (Backend, optional): Instance de backend.
    Returns:
        list[TrialRecord]: Tous les essais (anciens + nouveaux), triés par empreinte.
    """
    start = time.time()
    wanted = {prompt.prompt_id for prompt in prompts}
    done = {trial.prompt_id: trial for trial in load_trials(path) if trial.prompt_id in wanted}
    missing = [prompt for prompt in prompts if prompt.prompt_id not in done]
    if done:
        logger.info(f"{Path(path).name} : {len(done)} essais déjà présents, {len(missing)} à exécuter")
    backend = backend or make_backend(config)
    for batch in chunked(missing, CHECKPOINT_EVERY):
        for trial in run_condition(batch, config, cache=cache, backend=backend):
            done[trial.prompt_id] = trial
        write_trials(path, list(done.values()))
    if not missing and not Path(path).exists():
        write_trials(path, list(done.values()))
    trials = sorted(done.values(), key=lambda trial: trial.prompt_id)
    logger.info(f"{Path(path).name} : {len(trials)} essais en {time.time() - start:.2f} sec")
    return trials


def run_reasoning_comparison(
    prompts: List[PromptInstance],
    config: BackendConfig,
    cache: Optional[ResponseCache] = None,
) -> List[Tuple[TrialRecord, TrialRecord]]:
    """
    Exécute les mêmes prompts sans puis avec raisonnement (seul ce réglage change).

    Args:
        prompts (list[PromptInstance]): Prompts communs aux deux conditions.
        config (BackendConfig): Backend ; reasoning est forcé à off puis budget.
        cache (ResponseCache, optional): Cache (les deux réglages ont des clés distinctes).
    Returns:
        list[tuple]: Un couple (essai off, essai budget) par empreinte de prompt.
    """
    off_config = config.model_copy(update={"reasoning": ReasoningMode.OFF})
    on_config = config.model_copy(update={"reasoning": ReasoningMode.BUDGET})
    off_trials = {trial.prompt_id: trial for trial in run_condition(prompts, off_config, cache=cache)}
    on_trials = {trial.prompt_id: trial for trial in run_condition(prompts, on_config, cache=cache)}
    return [(off_trials[prompt_id], on_trials[prompt_id]) for prompt_id in sorted(off_trials)]
