#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Parallélisme déterministe : les répliques sont découpées en blocs de taille
fixe, chaque bloc reçoit une graine dérivée de (graine maître, test, bloc).
Le découpage ne dépend jamais du nombre de workers.
"""

from __future__ import annotations

import hashlib
import logging
from multiprocessing import Pool
from typing import Callable, List, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 10_000


def derive_seed(master_seed: int, test: str, index: int) -> int:
    """Graine 64 bits figée : blake2b("{master}:{test}:{index}") tronqué à 8 octets."""
    digest = hashlib.blake2b(f"{int(master_seed)}:{test}:{int(index)}".encode("utf-8"),
                             digest_size=8).digest()
    return int.from_bytes(digest, "big")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def split_replicas(replicas: int, block_size: int = DEFAULT_BLOCK_SIZE) -> List[Tuple[int, int]]:
    """[(indice de bloc, nombre de répliques)] couvrant exactement `replicas`."""
    if block_size < 1:
        raise ValueError("block_size doit être >= 1")
    blocks = []
    start = 0
    while start < replicas:
        count = min(block_size, replicas - start)
        blocks.append((len(blocks), count))
        start += count
    return blocks


def run_blocks(task: Callable, args: Sequence, workers: int = 1) -> list:
    """
    Exécute `task` sur chaque élément de `args` et renvoie les résultats dans
    l'ordre des blocs (Pool.map conserve l'ordre), quel que soit `workers`.
    """
    args = list(args)
    if workers <= 1 or len(args) <= 1:
        return [task(a) for a in args]
    n_proc = min(workers, len(args))
    logger.debug("Pool de %d processus pour %d blocs", n_proc, len(args))
    with Pool(processes=n_proc) as pool:
        return pool.map(task, args)


def replica_tasks(master_seed: int, test: str, replicas: int,
                  block_size: int = DEFAULT_BLOCK_SIZE) -> List[Tuple[int, int]]:
    """[(graine du bloc, nombre de répliques)] pour un test donné."""
    return [(derive_seed(master_seed, test, b), count)
            for b, count in split_replicas(replicas, block_size)]
