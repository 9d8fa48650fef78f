#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Boucles de simulation compilées (numba).

Toutes les marches partagent un vecteur d'état int64 de taille STATE_SIZE,
ce qui permet de reprendre une simulation par tronçons (mode flux) ou de
relever l'état à des instants dyadiques (ensembles).
"""

import math

import numpy as np
from numba import njit

# Indices du vecteur d'état
X, Y, H, V, HSTAR, PENDING, PHASE, VPOS, VNEG = range(9)
STATE_SIZE = 9

HORIZONTAL = 1
VERTICAL = 0


def window_half(n_steps: int) -> int:
    """Demi-largeur de la fenêtre de niveaux pré-calculée pour n pas."""
    return int(min(n_steps, 20 * math.isqrt(max(n_steps, 1)) + 64))


@njit(cache=True)
def geometric_block(u, p):
    """Loi géométrique P(G=k) = 2p(1-2p)^k par inversion, u dans (0, 1]."""
    if p >= 0.5:
        return 0
    return int(math.floor(math.log(u) / math.log(1.0 - 2.0 * p)))


@njit(cache=True)
def _vertical(state, vcounts, off, up):
    y = state[Y] + (1 if up else -1)
    state[Y] = y
    state[V] += 1
    vcounts[y + off] += 1
    if y >= 0:
        state[VPOS] += 1
    else:
        state[VNEG] += 1


# ==========================================================
# ===================== MARCHE DIRECTE =====================
# ==========================================================

@njit(cache=True)
def direct_run(ptab, off, n_steps, rng, state, vcounts, pos, kinds, store):
    """
    Transitions de Markov : depuis le niveau j, +-1 vertical avec proba p_j
    chacun, +-1 horizontal avec proba 1/2 - p_j chacun.
    Retourne le nombre de pas effectués (< n_steps si la fenêtre est quittée).
    """
    size = ptab.shape[0]
    for k in range(n_steps):
        i = state[Y] + off
        if i < 1 or i > size - 2:
            return k
        p = ptab[i]
        u = rng.random()
        if u < 2.0 * p:
            _vertical(state, vcounts, off, u < p)
            kind = VERTICAL
        else:
            state[X] += 1 if u < 0.5 + p else -1
            state[H] += 1
            state[HSTAR] += 1
            kind = HORIZONTAL
        if store:
            pos[k + 1, 0] = state[X]
            pos[k + 1, 1] = state[Y]
            kinds[k] = kind
    return n_steps


# ==========================================================
# ================= CONSTRUCTION PAR BLOCS =================
# ==========================================================

@njit(cache=True)
def constructive_run(ptab, off, n_steps, rng, state, vcounts, blocks, sums, pos, kinds, store):
    """
    Construction géométrique : à chaque arrivée au niveau j on tire G ~ Geo(2p_j),
    on prend G pas horizontaux (marche S1) puis un pas vertical (marche S2).
    Le dernier bloc peut être tronqué ; HSTAR garde la somme non tronquée.
    """
    size = ptab.shape[0]
    k = 0
    while k < n_steps:
        if state[PHASE] == 0:
            i = state[Y] + off
            if i < 1 or i > size - 2:
                return k
            g = geometric_block(1.0 - rng.random(), ptab[i])
            state[HSTAR] += g
            state[PENDING] = g
            state[PHASE] = 1
            blocks[i] += 1
            sums[i] += g
        if state[PENDING] > 0:
            state[X] += 1 if rng.random() < 0.5 else -1
            state[H] += 1
            state[PENDING] -= 1
            kind = HORIZONTAL
        else:
            _vertical(state, vcounts, off, rng.random() < 0.5)
            state[PHASE] = 0
            kind = VERTICAL
        if store:
            pos[k + 1, 0] = state[X]
            pos[k + 1, 1] = state[Y]
            kinds[k] = kind
        k += 1
    return n_steps


@njit(cache=True)
def walk_batch(ptab, off, checkpoints, n_rep, rng, constructive, out):
    """
    n_rep répliques indépendantes ; out[r, c, :] reçoit l'état au pas checkpoints[c].
    Retourne -1 si une réplique sort de la fenêtre, 0 sinon.
    """
    size = ptab.shape[0]
    state = np.zeros(STATE_SIZE, dtype=np.int64)
    vcounts = np.zeros(size, dtype=np.int64)
    blocks = np.zeros(size, dtype=np.int64)
    sums = np.zeros(size, dtype=np.int64)
    pos = np.zeros((1, 2), dtype=np.int64)
    kinds = np.zeros(1, dtype=np.uint8)
    for r in range(n_rep):
        state[:] = 0
        vcounts[:] = 0
        done = 0
        for c in range(checkpoints.shape[0]):
            todo = checkpoints[c] - done
            if constructive:
                ran = constructive_run(ptab, off, todo, rng, state, vcounts,
                                       blocks, sums, pos, kinds, False)
            else:
                ran = direct_run(ptab, off, todo, rng, state, vcounts, pos, kinds, False)
            if ran < todo:
                return -1
            done = checkpoints[c]
            out[r, c, :] = state
    return 0


# ==========================================================
# =================== HORLOGE BROWNIENNE ===================
# ==========================================================

@njit(cache=True)
def clock_batch(g1, g2, s, dt, n_rep, rng, out):
    """
    Pour chaque réplique : premier instant t où A(t) = s (règle de l'extrémité
    gauche, interpolation linéaire dans la cellule) et Y(s) = W(t) interpolé.
    """
    sq = math.sqrt(dt)
    for r in range(n_rep):
        if s <= 0.0:
            out[r, 0] = 0.0
            out[r, 1] = 0.0
            continue
        k = 0
        a = 0.0
        w = 0.0
        while True:
            da = (g1 if w >= 0.0 else g2) * dt
            w_new = w + sq * rng.standard_normal()
            if a + da >= s:
                frac = (s - a) / da
                out[r, 0] = (k + frac) * dt
                out[r, 1] = w + frac * (w_new - w)
                break
            a += da
            w = w_new
            k += 1
    return 0


# ==========================================================
# ====================== TEMPS LOCAUX ======================
# ==========================================================

@njit(cache=True)
def running_max_local_time(values, lo, hi):
    """out[k] = max_x #{1 <= i <= k : S(i) = x}, pour k = 0..n."""
    n = values.shape[0] - 1
    counts = np.zeros(hi - lo + 1, dtype=np.int64)
    out = np.zeros(n + 1, dtype=np.int64)
    best = 0
    for k in range(1, n + 1):
        i = values[k] - lo
        counts[i] += 1
        if counts[i] > best:
            best = counts[i]
        out[k] = best
    return out
