#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import WindowExitError
from .engine import kernels
from .engine.kernels import HORIZONTAL, VERTICAL
from .engine.pool import DEFAULT_BLOCK_SIZE, make_rng, replica_tasks, run_blocks
from .env import Environment

logger = logging.getLogger(__name__)

# Au-delà, seules les statistiques courantes sont conservées
PATH_STORAGE_LIMIT = 2 ** 26


# ============================================================
# ========================= TYPES ============================
# ============================================================

@dataclass
class LocalTimeProfile:
    """Temps locaux xi(j, n) = #{1 <= k <= n : S(k) = j}, stockés sur [lo, lo + len)."""
    lo: int
    counts: np.ndarray
    horizon: int

    def __getitem__(self, level: int) -> int:
        i = int(level) - self.lo
        if 0 <= i < self.counts.size:
            return int(self.counts[i])
        return 0

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.lo, self.lo + self.counts.size)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def as_dict(self) -> Dict[int, int]:
        nz = np.flatnonzero(self.counts)
        return {int(self.lo + i): int(self.counts[i]) for i in nz}

    @classmethod
    def from_dict(cls, counts: Dict[int, int], horizon: Optional[int] = None) -> "LocalTimeProfile":
        if not counts:
            return cls(0, np.zeros(0, dtype=np.int64), horizon or 0)
        lo, hi = min(counts), max(counts)
        arr = np.zeros(hi - lo + 1, dtype=np.int64)
        for level, c in counts.items():
            arr[level - lo] = c
        total = int(arr.sum())
        return cls(lo, arr, total if horizon is None else horizon)

    def positive_part(self) -> np.ndarray:
        """xi(1..K) avec K le plus haut niveau visité (tableau vide si aucun)."""
        start = max(1 - self.lo, 0)
        out = self.counts[start:]
        if self.lo > 1:
            out = np.concatenate([np.zeros(self.lo - 1, dtype=np.int64), out])
        return np.trim_zeros(out, "b")


@dataclass
class GeometricDecomposition:
    N: int
    H: int
    V: int
    H_star: int
    block_levels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    block_counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    block_sums: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def truncated(self) -> int:
        return self.H_star - self.H

    def blocks_at(self, level: int) -> Tuple[int, int]:
        """(nombre de blocs, somme des G) au niveau donné."""
        hit = np.flatnonzero(self.block_levels == level)
        if hit.size == 0:
            return 0, 0
        return int(self.block_counts[hit[0]]), int(self.block_sums[hit[0]])

    def to_json(self) -> Dict:
        return {"N": self.N, "H": self.H, "V": self.V, "H_star": self.H_star}


@dataclass
class WalkPath:
    """
    Trajectoire C(n) = (C1(n), C2(n)), n = 0..N.

    Au-delà de PATH_STORAGE_LIMIT, `positions` et `step_kinds` valent None et
    seuls l'état final et les temps locaux verticaux sont conservés.
    """
    env: Environment
    seed: int
    N: int
    positions: Optional[np.ndarray]
    step_kinds: Optional[np.ndarray]
    final: Tuple[int, int]
    H: int
    V: int
    vertical_profile: LocalTimeProfile

    @property
    def stored(self) -> bool:
        return self.positions is not None

    @property
    def c1(self) -> np.ndarray:
        return self.positions[:, 0]

    @property
    def c2(self) -> np.ndarray:
        return self.positions[:, 1]

    def to_frame(self) -> pd.DataFrame:
        if not self.stored:
            raise ValueError("trajectoire non stockée (N au-delà de la limite de stockage)")
        kinds = np.empty(self.N + 1, dtype=object)
        kinds[0] = ""
        kinds[1:] = np.where(self.step_kinds == HORIZONTAL, "horizontal", "vertical")
        return pd.DataFrame({"n": np.arange(self.N + 1), "c1": self.c1,
                             "c2": self.c2, "kind": kinds})


# ============================================================
# ======================= SIMULATION =========================
# ============================================================

def _window(env: Environment, n_steps: int):
    half = kernels.window_half(n_steps)
    ptab = env.window(-half - 1, half + 1)
    return ptab, half + 1


def _buffers(N: int, store: bool):
    if store:
        pos = np.zeros((N + 1, 2), dtype=np.int64)
        kinds = np.zeros(N, dtype=np.uint8)
    else:
        pos = np.zeros((1, 2), dtype=np.int64)
        kinds = np.zeros(1, dtype=np.uint8)
    return pos, kinds


def _profile_from_counts(vcounts: np.ndarray, off: int, horizon: int) -> LocalTimeProfile:
    nz = np.flatnonzero(vcounts)
    if nz.size == 0:
        return LocalTimeProfile(0, np.zeros(0, dtype=np.int64), horizon)
    return LocalTimeProfile(int(nz[0] - off), vcounts[nz[0]:nz[-1] + 1].copy(), horizon)


def _check_ran(ran: int, N: int, half: int):
    if ran < N:
        raise WindowExitError(f"la marche a quitté la fenêtre de niveaux ±{half - 1} au pas {ran}")


def simulate_direct(env: Environment, N: int, seed: int, store: Optional[bool] = None) -> WalkPath:
    """Marche par transitions de Markov ; déterministe pour une graine donnée."""
    if N < 0:
        raise ValueError("N doit être >= 0")
    store = N <= PATH_STORAGE_LIMIT if store is None else store
    ptab, off = _window(env, N)
    state = np.zeros(kernels.STATE_SIZE, dtype=np.int64)
    vcounts = np.zeros(ptab.size, dtype=np.int64)
    pos, kinds = _buffers(N, store)
    ran = kernels.direct_run(ptab, off, N, make_rng(seed), state, vcounts, pos, kinds, store)
    _check_ran(ran, N, off)
    return WalkPath(
        env=env, seed=seed, N=N,
        positions=pos if store else None,
        step_kinds=kinds if store else None,
        final=(int(state[kernels.X]), int(state[kernels.Y])),
        H=int(state[kernels.H]), V=int(state[kernels.V]),
        vertical_profile=_profile_from_counts(vcounts, off, int(state[kernels.V])),
    )


def simulate_constructive(env: Environment, N: int, seed: int,
                          store: Optional[bool] = None) -> Tuple[WalkPath, GeometricDecomposition]:
    """
    Construction par blocs géométriques : S1 fournit les pas horizontaux, S2 les
    pas verticaux ; arrêt à exactement N pas (dernier bloc éventuellement tronqué).
    """
    if N < 0:
        raise ValueError("N doit être >= 0")
    store = N <= PATH_STORAGE_LIMIT if store is None else store
    ptab, off = _window(env, N)
    state = np.zeros(kernels.STATE_SIZE, dtype=np.int64)
    vcounts = np.zeros(ptab.size, dtype=np.int64)
    blocks = np.zeros(ptab.size, dtype=np.int64)
    sums = np.zeros(ptab.size, dtype=np.int64)
    pos, kinds = _buffers(N, store)
    ran = kernels.constructive_run(ptab, off, N, make_rng(seed), state, vcounts,
                                   blocks, sums, pos, kinds, store)
    _check_ran(ran, N, off)

    path = WalkPath(
        env=env, seed=seed, N=N,
        positions=pos if store else None,
        step_kinds=kinds if store else None,
        final=(int(state[kernels.X]), int(state[kernels.Y])),
        H=int(state[kernels.H]), V=int(state[kernels.V]),
        vertical_profile=_profile_from_counts(vcounts, off, int(state[kernels.V])),
    )
    used = np.flatnonzero(blocks)
    decomposition = GeometricDecomposition(
        N=N, H=path.H, V=path.V, H_star=int(state[kernels.HSTAR]),
        block_levels=used - off, block_counts=blocks[used], block_sums=sums[used],
    )
    return path, decomposition


def vertical_walk(path: WalkPath) -> np.ndarray:
    """S2(0..V_N) : la coordonnée verticale relevée après chaque pas vertical."""
    if not path.stored:
        raise ValueError("trajectoire non stockée")
    return np.concatenate([[0], path.c2[1:][path.step_kinds == VERTICAL]])


def simple_walk(n: int, rng: np.random.Generator) -> np.ndarray:
    """Marche simple symétrique S(0..n), S(0) = 0."""
    steps = rng.integers(0, 2, size=n, dtype=np.int8) * 2 - 1
    out = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(steps, dtype=np.int64, out=out[1:])
    return out


# ============================================================
# ===================== TEMPS LOCAUX =========================
# ============================================================

def local_time(values: Sequence[int], level: int, horizon: int) -> int:
    """#{k in 1..horizon : S(k) = level} (le pas `horizon` est compté)."""
    values = np.asarray(values)
    if horizon > values.size - 1:
        raise ValueError("horizon au-delà de la longueur de la suite")
    return int(np.count_nonzero(values[1:horizon + 1] == level))


def local_time_profile(values: Sequence[int], horizon: Optional[int] = None) -> LocalTimeProfile:
    values = np.asarray(values, dtype=np.int64)
    horizon = values.size - 1 if horizon is None else horizon
    if horizon > values.size - 1:
        raise ValueError("horizon au-delà de la longueur de la suite")
    window = values[1:horizon + 1]
    if window.size == 0:
        return LocalTimeProfile(0, np.zeros(0, dtype=np.int64), 0)
    lo = int(window.min())
    return LocalTimeProfile(lo, np.bincount(window - lo).astype(np.int64), horizon)


def max_local_time(values: Sequence[int], horizon: int) -> Tuple[int, int]:
    """(niveau, xi) maximisant le temps local ; égalités vers le plus petit niveau."""
    profile = local_time_profile(values, horizon)
    if profile.counts.size == 0:
        return 0, 0
    i = int(np.argmax(profile.counts))
    return profile.lo + i, int(profile.counts[i])


def sup_local_time_increment(values: Sequence[int], horizon: int) -> int:
    """sup_x |xi(x+1, n) - xi(x, n)|, bords du support compris."""
    profile = local_time_profile(values, horizon)
    if profile.counts.size == 0:
        return 0
    padded = np.concatenate([[0], profile.counts, [0]])
    return int(np.abs(np.diff(padded)).max())


def discrete_time_change(profile: LocalTimeProfile, gamma1: float, gamma2: float) -> float:
    """Â(n) = gamma1 * (temps aux niveaux >= 0) + gamma2 * (temps aux niveaux < 0)."""
    levels = profile.levels
    upper = int(profile.counts[levels >= 0].sum())
    lower = int(profile.counts[levels < 0].sum())
    return gamma1 * upper + gamma2 * lower


# ============================================================
# ======================== ENSEMBLES =========================
# ============================================================

@dataclass
class Ensemble:
    """États relevés aux instants `checkpoints` ; states[r, c, :] suit kernels.STATE_SIZE."""
    checkpoints: np.ndarray
    states: np.ndarray
    method: str

    def column(self, index: int, c: int = -1) -> np.ndarray:
        return self.states[:, c, index]

    def c1(self, c: int = -1):
        return self.column(kernels.X, c)

    def c2(self, c: int = -1):
        return self.column(kernels.Y, c)

    def H(self, c: int = -1):
        return self.column(kernels.H, c)

    def V(self, c: int = -1):
        return self.column(kernels.V, c)

    def H_star(self, c: int = -1):
        return self.column(kernels.HSTAR, c)

    def discrete_time_change(self, gamma1: float, gamma2: float, c: int = -1) -> np.ndarray:
        """Â2(V_N) à partir des temps locaux verticaux au-dessus / au-dessous de 0."""
        return gamma1 * self.column(kernels.VPOS, c) + gamma2 * self.column(kernels.VNEG, c)

    def to_frame(self, c: int = -1) -> pd.DataFrame:
        return pd.DataFrame({
            "replica": np.arange(self.states.shape[0]),
            "c1": self.c1(c), "c2": self.c2(c),
            "H": self.H(c), "V": self.V(c), "H_star": self.H_star(c),
        })


def _ensemble_block(task, env: Environment, checkpoints: np.ndarray, constructive: bool):
    seed, count = task
    half = kernels.window_half(int(checkpoints[-1]))
    ptab = env.window(-half - 1, half + 1)
    out = np.zeros((count, checkpoints.size, kernels.STATE_SIZE), dtype=np.int64)
    status = kernels.walk_batch(ptab, half + 1, checkpoints, count, make_rng(seed), constructive, out)
    if status < 0:
        raise WindowExitError(f"une réplique a quitté la fenêtre de niveaux ±{half}")
    return out


def walk_ensemble(env: Environment, checkpoints, replicas: int, master_seed: int,
                  test: str = "simulate", method: str = "constructive", workers: int = 1,
                  block_size: int = DEFAULT_BLOCK_SIZE) -> Ensemble:
    """
    Ensemble de répliques indépendantes relevées aux instants `checkpoints`
    (un entier N ou une suite croissante).
    """
    if method not in ("constructive", "direct"):
        raise ValueError(f"méthode inconnue : {method!r}")
    checkpoints = np.atleast_1d(np.asarray(checkpoints, dtype=np.int64))
    if np.any(np.diff(checkpoints) < 0) or checkpoints[0] < 0:
        raise ValueError("les instants de relevé doivent être croissants et >= 0")
    tasks = replica_tasks(master_seed, test, replicas, block_size)
    task = partial(_ensemble_block, env=env, checkpoints=checkpoints,
                   constructive=method == "constructive")
    parts = run_blocks(task, tasks, workers)
    states = (np.concatenate(parts, axis=0) if parts
              else np.zeros((0, checkpoints.size, kernels.STATE_SIZE), dtype=np.int64))
    return Ensemble(checkpoints, states, method)


# ============================================================
# ========================= EXPORT ===========================
# ============================================================

def write_path_csv(path: WalkPath, file) -> Path:
    file = Path(file)
    path.to_frame().to_csv(file, index=False)
    return file


def write_decomposition_json(decomposition: GeometricDecomposition, file) -> Path:
    file = Path(file)
    with open(file, "w", encoding="utf-8") as f:
        json.dump(decomposition.to_json(), f, sort_keys=True)
    return file
