import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from processing.errors import ConfigError, PoolTooSmall
from processing.item_pools import BUILTIN_POOLS, POOL_ITEM_KINDS
from processing.utils import substream
from schemas.config import GenSpec
from schemas.tasks import ItemKind, Sequence

logger = logging.getLogger(__name__)

MAX_MEMBER_LENGTH = 30


@dataclass(frozen=True)
class ItemPool:
    """Pool d'éléments distincts dans lequel on tire les séquences."""
    name: str
    members: Tuple[str, ...]
    kind: ItemKind = ItemKind.WORD

    def __post_init__(self):
        if len(set(self.members)) != len(self.members):
            raise ConfigError(f"Pool {self.name!r} has duplicate members")
        too_long = [member for member in self.members if len(member) > MAX_MEMBER_LENGTH or not member.strip()]
        if too_long:
            raise ConfigError(f"Pool {self.name!r} has invalid members: {too_long[:3]}")

    def __len__(self):
        return len(self.members)


def get_pool(name: str, pool_files: Optional[Dict[str, str]] = None) -> ItemPool:
    """
    Renvoie un pool intégré, ou un pool utilisateur si un fichier est configuré pour ce nom.

    Args:
        name (str): Nom du pool (letters, digits, animals...).
        pool_files (dict, optional): {nom: chemin} des pools fournis par l'utilisateur.
    Returns:
        ItemPool: Le pool demandé.
    """
    if pool_files and name in pool_files:
        return load_pool_file(pool_files[name], name=name)
    if name not in BUILTIN_POOLS:
        raise ConfigError(f"Unknown pool {name!r}")
    return ItemPool(name=name, members=tuple(BUILTIN_POOLS[name]), kind=ItemKind(POOL_ITEM_KINDS[name]))


def load_pool_file(path: Union[str, Path], name: Optional[str] = None, kind: ItemKind = ItemKind.WORD) -> ItemPool:
    """
    Charge un pool depuis un fichier texte UTF-8 (un élément par ligne, lignes `#` ignorées).

    Args:
        path (str | Path): Fichier du pool.
        name (str, optional): Nom du pool (par défaut le nom du fichier).
        kind (ItemKind): Type des éléments.
    Returns:
        ItemPool: Pool chargé.
    """
    path = Path(path)
    members = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            # on ignore les lignes vides et les commentaires
            if not line or line.startswith("#"):
                continue
            members.append(line)
    if name == "letters":
        kind = ItemKind.LETTER
    return ItemPool(name=name or path.stem, members=tuple(members), kind=kind)


def sample_sequence(pool: ItemPool, length: int, stream: np.random.Generator) -> Sequence:
    """
    Tire L éléments distincts uniformément sans remise.

    Args:
        pool (ItemPool): Pool source.
        length (int): Longueur L voulue.
        stream (np.random.Generator): Flux aléatoire déterministe.
    Returns:
        Sequence: Séquence de L éléments distincts.
    Raises:
        PoolTooSmall: Si L dépasse la taille du pool.
    """
    if length > len(pool):
        raise PoolTooSmall(f"Pool {pool.name!r} has {len(pool)} members, cannot sample {length}")
    if length < 1:
        raise ValueError(f"Sequence length must be >= 1, got {length}")
    indices = stream.choice(len(pool), size=length, replace=False)
    return Sequence.from_texts([pool.members[int(i)] for i in indices], kind=pool.kind)


def sample_length(length_range: Tuple[int, int], pool: ItemPool, stream: np.random.Generator) -> int:
    """
    Tire une longueur uniforme dans un intervalle inclusif, borné par la taille du pool.

    Args:
        length_range (tuple): (min, max) inclusifs.
        pool (ItemPool): Pool utilisé (la borne haute est ramenée à sa taille).
        stream (np.random.Generator): Flux aléatoire.
    Returns:
        int: Longueur tirée.
    """
    low, high = length_range
    high = min(high, len(pool))
    if low > high:
        raise PoolTooSmall(f"Pool {pool.name!r} cannot realise lengths >= {low}")
    return int(stream.integers(low, high + 1))


def generate_eval_set(spec: GenSpec, pool: Optional[ItemPool] = None, workers: int = 1) -> List[Sequence]:
    """
    Génère spec.count séquences indépendantes et reproductibles.

    Chaque séquence utilise son propre sous-flux (seed, index) : le résultat ne dépend
    pas du nombre de workers.

    Args:
        spec (GenSpec): Pool, longueur, graine et nombre de séquences.
        pool (ItemPool, optional): Pool déjà chargé (sinon pool intégré spec.pool).
        workers (int): Nombre de threads de génération.
    Returns:
        list[Sequence]: Exactement spec.count séquences.
    """
    pool = pool or get_pool(spec.pool)
    low, high = spec.length_range
    if high > len(pool):
        raise PoolTooSmall(f"Pool {pool.name!r} has {len(pool)} members, lengths up to {high} requested")

    def _one(index: int) -> Sequence:
        stream = substream(spec.seed, "sequence", pool.name, index)
        length = low if low == high else sample_length((low, high), pool, stream)
        return sample_sequence(pool, length, stream)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            sequences = list(executor.map(_one, range(spec.count)))
    else:
        sequences = [_one(index) for index in range(spec.count)]
    logger.debug(f"{len(sequences)} séquences générées (pool={pool.name}, L={spec.length}, seed={spec.seed})")
    return sequences
