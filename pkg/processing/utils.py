import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Iterator, List, Union

import numpy as np

logger = logging.getLogger(__name__)


def handle_error(e, context=None):
    """
    Centralise la gestion et la journalisation des erreurs.

    Args:
        e (Exception): L'exception à traiter.
        context (str, optional): Contexte supplémentaire pour l'erreur.
    Returns:
        None: Lève l'exception après l'avoir journalisée.
    """
    msg = f"Erreur: {e}"
    if context:
        msg += f" | Context: {context}"
    logger.error(msg)
    raise e


def key_to_int(key: Union[int, str]) -> int:
    """
    Convertit une clé (entier ou chaîne) en entier 32 bits stable, utilisable dans un spawn_key numpy.

    Args:
        key (int | str): Clé à convertir.
    Returns:
        int: Entier non négatif, identique d'une exécution à l'autre.
    """
    if isinstance(key, int):
        if key < 0:
            raise ValueError(f"Negative stream key: {key}")
        return key
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def substream(seed: int, *keys: Union[int, str]) -> np.random.Generator:
    """
    Dérive un flux aléatoire indépendant à partir d'une graine et de coordonnées.

    Deux appels avec les mêmes (seed, keys) renvoient des flux identiques, quel que soit
    l'ordre ou le thread d'exécution.

    Args:
        seed (int): Graine globale (entier non signé 64 bits).
        *keys (int | str): Coordonnées (index de séquence, nom de condition...).
    Returns:
        np.random.Generator: Générateur numpy déterministe.
    """
    spawn_key = tuple(key_to_int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=spawn_key))


def stable_hash(payload: Any) -> str:
    """
    Calcule un hash sha256 stable d'un objet sérialisable en JSON.

    Args:
        payload (Any): Objet JSON (dict, list...).
    Returns:
        str: Empreinte hexadécimale.
    """
    text = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def read_jsonl(path: Union[str, Path]) -> Iterator[dict]:
    """
    Lit un fichier JSONL ligne par ligne.

    Args:
        path (str | Path): Chemin du fichier.
    Returns:
        Iterator[dict]: Un dictionnaire par ligne non vide.
    """
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                logger.warning(f"Ligne JSON invalide ignorée ({path}:{line_number}) : {e}")


def write_lines_atomic(path: Union[str, Path], lines: Iterable[str]) -> int:
    """
    Écrit des lignes dans un fichier de manière atomique (fichier temporaire puis renommage).

    Si une exception survient pendant l'itération, le fichier cible n'est pas modifié.

    Args:
        path (str | Path): Fichier de destination.
        lines (Iterable[str]): Lignes sans retour chariot final.
    Returns:
        int: Nombre de lignes écrites.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    count = 0
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            for line in lines:
                f.write(line)
                f.write("\n")
                count += 1
        os.replace(tmp_path, path)
    except Exception as e:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        handle_error(e, f"Écriture de {path}")
    return count


def write_json(path: Union[str, Path], payload: Any) -> None:
    """
    Écrit un objet JSON indenté (clés triées) de manière atomique.

    Args:
        path (str | Path): Fichier de destination.
        payload (Any): Objet sérialisable.
    Returns:
        None
    """
    text = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False)
    write_lines_atomic(path, [text])


def chunked(items: List[Any], size: int) -> Iterator[List[Any]]:
    """
    Découpe une liste en morceaux de taille fixe (le dernier peut être plus court).

    Args:
        items (list): Liste à découper.
        size (int): Taille des morceaux.
    Returns:
        Iterator[list]: Morceaux successifs.
    """
    for start in range(0, len(items), size):
        yield items[start:start + size]
