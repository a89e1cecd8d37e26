"""
Backends de chat-completion : client HTTP (format OpenAI), backends simulés hors ligne et
cache de réponses adressé par contenu.
"""
import json
import logging
import os
import re
import threading
import time
from pathlib import Path
from typing import Dict, List, Optional, Union

import requests
from dotenv import load_dotenv
from pydantic import BaseModel
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from processing.errors import BackendUnavailable, MalformedResponse
from processing.pyindex import parse_snippet
from processing.utils import handle_error, stable_hash, substream, write_json
from schemas.config import BackendConfig, BackendKind, ReasoningChannel, ReasoningMode
from schemas.records import PromptInstance
from schemas.tasks import AnswerKind

load_dotenv()

logger = logging.getLogger(__name__)

THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)
FALLBACK_REASONING_INSTRUCTION = (
    "Before answering, think step by step inside a <think>...</think> block of at most {budget} tokens. "
    "After the closing </think> tag, give only the final answer."
)
UNSURE_ANSWER = "not sure"


class BackendResponse(BaseModel):
    text: str
    reasoning: Optional[str] = None
    latency: float = 0.0


class TransientHTTPError(Exception):
    """Échec HTTP que l'on peut retenter (429, 5xx)."""


RETRYABLE_ERRORS = (TransientHTTPError, requests.ConnectionError, requests.Timeout)


def split_reasoning(text: str):
    """
    Sépare le bloc <think>...</think> de la réponse finale.

    Args:
        text (str): Réponse brute.
    Returns:
        tuple: (réponse sans le bloc, contenu du bloc ou None). Un bloc non fermé
        (budget épuisé) est entièrement considéré comme du raisonnement.
    """
    match = THINK_RE.search(text)
    if match:
        return (text[:match.start()] + text[match.end():]).strip(), match.group(1).strip()
    if "<think>" in text:
        before, _, after = text.partition("<think>")
        return before.strip(), after.strip()
    return text, None


class Backend:
    """Base des backends : suit le nombre de requêtes en cours et le maximum observé."""

    def __init__(self, config: BackendConfig):
        self.config = config
        self._lock = threading.Lock()
        self.in_flight = 0
        self.max_in_flight = 0
        self.calls = 0

    def complete(self, prompt: PromptInstance) -> BackendResponse:
        with self._lock:
            self.in_flight += 1
            self.calls += 1
            self.max_in_flight = max(self.max_in_flight, self.in_flight)
        start = time.time()
        try:
            response = self._complete(prompt)
        finally:
            with self._lock:
                self.in_flight -= 1
        if not response.latency:
            response = response.model_copy(update={"latency": time.time() - start})
        return response

    def _complete(self, prompt: PromptInstance) -> BackendResponse:
        raise NotImplementedError


class HttpBackend(Backend):
    """Client d'un endpoint /chat/completions compatible OpenAI."""

    retry_wait = wait_exponential(multiplier=0.5, min=0.5, max=8)

    def payload(self, prompt: PromptInstance) -> Dict[str, object]:
        """Corps de la requête : messages, température, limite de tokens et canal de raisonnement."""
        config = self.config
        messages = [message.model_dump() for message in prompt.messages]
        max_tokens = config.max_answer_tokens
        reasoning_on = config.reasoning == ReasoningMode.BUDGET
        if reasoning_on:
            max_tokens += config.reasoning_budget
        payload = {
            "model": config.model,
            "messages": messages,
            "temperature": config.temperature,
            "max_tokens": max_tokens,
        }
        if not reasoning_on:
            return payload
        if config.reasoning_channel == ReasoningChannel.NATIVE:
            payload["chat_template_kwargs"] = {"enable_thinking": True}
        else:
            instruction = FALLBACK_REASONING_INSTRUCTION.format(budget=config.reasoning_budget)
            payload["messages"] = [{"role": "system", "content": instruction}] + messages
        return payload

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        api_key = os.getenv(self.config.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        return headers

    def _post(self, payload: Dict[str, object]) -> dict:
        response = requests.post(
            self.config.endpoint, json=payload, headers=self._headers(), timeout=self.config.request_timeout,
        )
        if response.status_code == 429 or response.status_code >= 500:
            logger.warning(f"Réponse HTTP {response.status_code} de {self.config.name}, nouvel essai")
            raise TransientHTTPError(f"HTTP {response.status_code}")
        if response.status_code >= 400:
            raise BackendUnavailable(f"{self.config.name}: HTTP {response.status_code}: {response.text[:200]}")
        try:
            return response.json()
        except ValueError as e:
            raise MalformedResponse(f"{self.config.name}: response is not JSON") from e

    def _complete(self, prompt: PromptInstance) -> BackendResponse:
        retryer = Retrying(
            stop=stop_after_attempt(self.config.max_retries + 1),
            wait=self.retry_wait,
            retry=retry_if_exception_type(RETRYABLE_ERRORS),
            reraise=True,
        )
        start = time.time()
        try:
            data = retryer(self._post, self.payload(prompt))
        except RETRYABLE_ERRORS as e:
            raise BackendUnavailable(
                f"{self.config.name} unreachable after {self.config.max_retries + 1} attempts: {e}"
            ) from e
        latency = time.time() - start
        try:
            message = data["choices"][0]["message"]
        except (KeyError, IndexError, TypeError) as e:
            raise MalformedResponse(f"{self.config.name}: no choices[0].message in response") from e
        text = message.get("content") or ""
        reasoning = message.get("reasoning_content")
        if self.config.reasoning_channel == ReasoningChannel.FALLBACK or "<think>" in text:
            text, fallback_reasoning = split_reasoning(text)
            reasoning = reasoning or fallback_reasoning
        return BackendResponse(text=text, reasoning=reasoning, latency=latency)


class OracleBackend(Backend):
    """Répond toujours la réponse de référence."""

    def _complete(self, prompt: PromptInstance) -> BackendResponse:
        reasoning = "mock reasoning" if self.config.reasoning == ReasoningMode.BUDGET else None
        return BackendResponse(text=prompt.gold.as_text(), reasoning=reasoning)


class RandomBackend(Backend):
    """Répond uniformément dans l'espace de réponse (tirage fixé par l'empreinte du prompt)."""

    def answer_space(self, prompt: PromptInstance) -> List[str]:
        gold = prompt.gold
        if gold.kind == AnswerKind.ITEM:
            return [item.text.strip() for item in prompt.candidates()]
        if gold.kind == AnswerKind.VALUE:
            xs, _ = parse_snippet(prompt.source_text)
            return [str(value) for value in xs]
        return [str(n) for n in range(1, prompt.sequence.length + 1)]

    def _complete(self, prompt: PromptInstance) -> BackendResponse:
        space = self.answer_space(prompt)
        stream = substream(self.config.seed, "mock-random", prompt.prompt_id)
        return BackendResponse(text=space[int(stream.integers(len(space)))])


class ReasoningOracleBackend(OracleBackend):
    """Oracle uniquement quand le raisonnement est activé ; sinon réponse inexploitable."""

    def _complete(self, prompt: PromptInstance) -> BackendResponse:
        if self.config.reasoning == ReasoningMode.BUDGET:
            return super()._complete(prompt)
        return BackendResponse(text=UNSURE_ANSWER)


BACKEND_CLASSES = {
    BackendKind.OPENAI_COMPATIBLE: HttpBackend,
    BackendKind.MOCK_ORACLE: OracleBackend,
    BackendKind.MOCK_RANDOM: RandomBackend,
    BackendKind.MOCK_REASONING_ORACLE: ReasoningOracleBackend,
}

BUILTIN_BACKENDS = {
    "mock-oracle": BackendKind.MOCK_ORACLE,
    "mock-random": BackendKind.MOCK_RANDOM,
    "mock-reasoning-oracle": BackendKind.MOCK_REASONING_ORACLE,
}


def make_backend(config: BackendConfig) -> Backend:
    return BACKEND_CLASSES[config.kind](config)


class ResponseCache:
    """
    Cache de réponses sur disque : un fichier JSON par clé (backend, prompt, paramètres d'échantillonnage).
    Lectures concurrentes libres, écritures atomiques sérialisées par un verrou.
    """

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)
        self._lock = threading.Lock()

    @staticmethod
    def key(config: BackendConfig, prompt_id: str) -> str:
        return stable_hash({
            "backend": config.backend_id,
            "prompt": prompt_id,
            "params": config.sampling_params(),
        })

    def _path(self, key: str) -> Path:
        return self.directory / key[:2] / f"{key}.json"

    def get(self, key: str) -> Optional[BackendResponse]:
        path = self._path(key)
        if not path.exists():
            return None
        try:
            with open(path, "r", encoding="utf-8") as f:
                return BackendResponse.model_validate(json.load(f))
        except (ValueError, OSError) as e:
            logger.warning(f"Entrée de cache illisible ignorée ({path.name}) : {e}")
            return None

    def put(self, key: str, response: BackendResponse) -> None:
        with self._lock:
            try:
                write_json(self._path(key), response.model_dump())
            except OSError as e:
                handle_error(e, f"Écriture du cache {key}")
