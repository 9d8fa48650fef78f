#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import stats

from . import DegenerateEnvironmentError, InvalidEnvironmentError

logger = logging.getLogger(__name__)

NAMED_SETS = ("nonnegative", "positive", "negative", "even", "odd", "all")
DEFAULT_PROBE = 1024


class Kind(str, Enum):
    UNIFORM = "uniform"
    COMB = "comb"
    HPHC = "hphc"
    LEVEL_SET = "level_set"
    PERIODIC = "periodic"
    TABLE = "table"


# ============================================================
# ======================= ENVIRONNEMENT ======================
# ============================================================

def _in_named_set(levels: np.ndarray, name: str) -> np.ndarray:
    if name == "nonnegative":
        return levels >= 0
    if name == "positive":
        return levels > 0
    if name == "negative":
        return levels < 0
    if name == "even":
        return levels % 2 == 0
    if name == "odd":
        return levels % 2 != 0
    return np.ones(levels.shape, dtype=bool)


@dataclass(frozen=True)
class Environment:
    """
    Profil vertical p_j de la marche anisotrope.

    L'accesseur p(j) ne dépend que du niveau j ; `window(lo, hi)` en donne la
    version vectorisée utilisée par les noyaux de simulation. Aucune
    validation ici : passer par `make_environment`.
    """
    kind: Kind
    params: Tuple = ()
    reflected: bool = False

    def window(self, lo: int, hi: int) -> np.ndarray:
        """p(j) pour j = lo..hi (inclus), en float64."""
        levels = np.arange(lo, hi + 1, dtype=np.int64)
        if self.reflected:
            levels = -levels
        return self._profile(levels)

    def p(self, j: int) -> float:
        return float(self.window(int(j), int(j))[0])

    def mirrored(self) -> "Environment":
        """Environnement réfléchi p'(j) = p(-j) (échange les demi-plans)."""
        return Environment(self.kind, self.params, not self.reflected)

    def _profile(self, levels: np.ndarray) -> np.ndarray:
        kind = self.kind
        if kind == Kind.UNIFORM:
            return np.full(levels.shape, float(self.params[0]))
        if kind == Kind.COMB:
            return np.where(levels == 0, 0.25, 0.5)
        if kind == Kind.HPHC:
            return np.where(levels >= 0, 0.25, 0.5)
        if kind == Kind.LEVEL_SET:
            members, p_in, p_out = self.params
            if isinstance(members, str):
                inside = _in_named_set(levels, members)
            else:
                inside = np.isin(levels, np.asarray(members, dtype=np.int64))
            return np.where(inside, float(p_in), float(p_out))
        if kind == Kind.PERIODIC:
            values = np.asarray(self.params, dtype=float)
            return values[np.mod(levels, len(values))]
        if kind == Kind.TABLE:
            default, table = self.params
            out = np.full(levels.shape, float(default))
            for level, prob in table:
                out[levels == level] = prob
            return out
        raise InvalidEnvironmentError(f"type d'environnement inconnu : {kind}")

    @property
    def label(self) -> str:
        return self.kind.value + ("[mirrored]" if self.reflected else "")


@dataclass(frozen=True)
class ValidityVerdict:
    valid: bool
    level: Optional[int] = None
    reason: str = ""

    def __bool__(self):
        return self.valid


@dataclass
class CesaroProfile:
    gamma1: float
    gamma2: float
    tau: Optional[float]
    residuals_pos: np.ndarray
    residuals_neg: np.ndarray
    checkpoints: np.ndarray
    swapped: bool = False
    tau_pos: Optional[float] = None
    tau_neg: Optional[float] = None
    raw_gamma1: float = field(default=float("nan"))
    raw_gamma2: float = field(default=float("nan"))

    @property
    def degenerate(self) -> bool:
        """gamma1 == gamma2 : changement de temps linéaire."""
        return bool(np.isclose(self.gamma1, self.gamma2, rtol=0.0, atol=1e-9))

    @property
    def tau_in_range(self) -> bool:
        return self.tau is None or 0.5 < self.tau <= 1.0


# ============================================================
# ======================= CONSTRUCTION =======================
# ============================================================

def make_environment(spec) -> Environment:
    """
    Construit un environnement depuis une description (dict JSON ou nom).

    {"kind": "uniform", "p": 0.25} · {"kind": "comb"} · {"kind": "hphc"}
    {"kind": "level_set", "B": "nonnegative" | [0, 3, 7], "p_in": .25, "p_out": .5}
    {"kind": "periodic", "values": [0.25, 0.5]}
    {"kind": "table", "default": 0.5, "levels": {"0": 0.25, "-3": 0.1}}
    """
    if isinstance(spec, str):
        spec = {"kind": spec}
    if "kind" not in spec:
        raise InvalidEnvironmentError("description d'environnement sans champ 'kind'")
    try:
        kind = Kind(spec["kind"])
    except ValueError:
        raise InvalidEnvironmentError(f"type d'environnement inconnu : {spec['kind']!r}") from None

    if kind == Kind.UNIFORM:
        env = Environment(kind, (_probability(spec.get("p", 0.25), "p"),))
    elif kind in (Kind.COMB, Kind.HPHC):
        env = Environment(kind)
    elif kind == Kind.LEVEL_SET:
        members = spec.get("B", "nonnegative")
        if isinstance(members, str):
            if members not in NAMED_SETS:
                raise InvalidEnvironmentError(f"ensemble B inconnu : {members!r}")
        else:
            members = tuple(sorted(int(b) for b in members))
        env = Environment(kind, (members,
                                 _probability(spec.get("p_in", 0.25), "p_in"),
                                 _probability(spec.get("p_out", 0.5), "p_out")))
    elif kind == Kind.PERIODIC:
        values = spec.get("values")
        if not values:
            raise InvalidEnvironmentError("environnement périodique sans valeurs")
        env = Environment(kind, tuple(_probability(v, "values") for v in values))
    else:
        table = tuple(sorted((int(k), _probability(v, f"levels[{k}]", int(k)))
                             for k, v in spec.get("levels", {}).items()))
        env = Environment(kind, (_probability(spec.get("default", 0.5), "default"), table))

    verdict = validate_environment(env, _probe_for(env))
    if not verdict:
        if verdict.level is None:
            raise DegenerateEnvironmentError(verdict.reason)
        raise InvalidEnvironmentError(verdict.reason, level=verdict.level)
    return env


def _probability(value, name, level=None) -> float:
    p = float(value)
    if not 0.0 < p <= 0.5:
        raise InvalidEnvironmentError(f"probabilité hors de (0, 1/2] pour {name} : {p}", level=level)
    return p


def _probe_for(env: Environment) -> int:
    probe = DEFAULT_PROBE
    if env.kind == Kind.TABLE:
        probe = max([probe] + [abs(level) + 1 for level, _ in env.params[1]])
    if env.kind == Kind.LEVEL_SET and not isinstance(env.params[0], str) and env.params[0]:
        probe = max(probe, max(abs(b) for b in env.params[0]) + 1)
    return probe


def validate_environment(env: Environment, probe_range: int = DEFAULT_PROBE) -> ValidityVerdict:
    """Vérifie 0 < p(j) <= 1/2 sur [-probe_range, probe_range] et min p < 1/2."""
    if probe_range < 1:
        raise ValueError("probe_range doit être >= 1")
    levels = np.arange(-probe_range, probe_range + 1)
    probs = env.window(-probe_range, probe_range)
    bad = np.flatnonzero(~((probs > 0.0) & (probs <= 0.5)))
    if bad.size:
        level = int(levels[bad[0]])
        return ValidityVerdict(False, level, f"p({level}) = {probs[bad[0]]} hors de (0, 1/2]")
    if not np.any(probs < 0.5):
        return ValidityVerdict(False, None,
                               "tous les niveaux valent 1/2 : marche unidimensionnelle (cas exclu)")
    return ValidityVerdict(True)


def environment_from_json(data: Dict) -> Environment:
    return make_environment(data)


def environment_to_json(env: Environment) -> Dict:
    if env.reflected:
        raise InvalidEnvironmentError("un environnement réfléchi n'a pas de forme JSON")
    kind = env.kind
    if kind == Kind.UNIFORM:
        return {"kind": kind.value, "p": env.params[0]}
    if kind == Kind.LEVEL_SET:
        members, p_in, p_out = env.params
        return {"kind": kind.value, "B": members if isinstance(members, str) else list(members),
                "p_in": p_in, "p_out": p_out}
    if kind == Kind.PERIODIC:
        return {"kind": kind.value, "values": list(env.params)}
    if kind == Kind.TABLE:
        default, table = env.params
        return {"kind": kind.value, "default": default,
                "levels": {str(level): prob for level, prob in table}}
    return {"kind": kind.value}


def level_set_density(env: Environment, n: int) -> float:
    """|B_n| / (2n+1) avec B = {j : p(j) < 1/2}, sur [-n, n]."""
    return float(np.count_nonzero(env.window(-n, n) < 0.5)) / (2 * n + 1)


# ============================================================
# ===================== CONSTANTES CESARO ====================
# ============================================================

def _dyadic(n_max: int) -> np.ndarray:
    ks = [16]
    while ks[-1] * 2 <= n_max:
        ks.append(ks[-1] * 2)
    if ks[-1] != n_max:
        ks.append(n_max)
    return np.asarray(ks, dtype=np.int64)


def _side(inv: np.ndarray, ks: np.ndarray):
    """Moyennes de Cesàro a_k = k^-1 sum_{j<=k} p_j^-1 puis extrapolation de Richardson."""
    means = np.cumsum(inv) / np.arange(1, inv.size + 1)
    a = means[ks - 1]
    raw = a[-1] / 2.0
    diffs = np.abs(np.diff(a))
    keep = diffs > 1e-13 * np.abs(a[1:])
    tau = None
    gamma = raw
    if np.count_nonzero(keep) >= 2:
        fit = stats.linregress(np.log(ks[:-1][keep]), np.log(diffs[keep]))
        tau = float(-fit.slope)
        if tau > 0.05:
            # a_k = 2γ + c k^-τ  =>  2γ = a_n - (a_m - a_n) / ((n/m)^τ - 1)
            ratio = ks[-1] / ks[-2]
            gamma = (a[-1] - (a[-2] - a[-1]) / (ratio ** tau - 1.0)) / 2.0
    gamma = float(np.clip(gamma, 1.0, inv.max() / 2.0))
    return gamma, raw, tau, means


def cesaro_estimate(env: Environment, n_max: int = 1024) -> CesaroProfile:
    """
    Estime gamma1, gamma2 et tau de la condition de Cesàro sur les niveaux 1..n_max
    et -n_max..-1.

    Les constantes sont ordonnées gamma1 >= gamma2 : si l'entrée viole l'ordre,
    les demi-plans sont échangés et `swapped` vaut True (l'appelant doit alors
    travailler sur `env.mirrored()`).
    """
    if n_max < 16:
        raise ValueError("n_max doit être >= 16")
    ks = _dyadic(n_max)
    n = int(ks[-1])
    pos = 1.0 / env.window(1, n)
    neg = 1.0 / env.window(-n, -1)[::-1]

    g1, raw1, tau1, means_pos = _side(pos, ks)
    g2, raw2, tau2, means_neg = _side(neg, ks)

    swapped = g2 > g1 + 1e-12
    if swapped:
        g1, g2, raw1, raw2, tau1, tau2 = g2, g1, raw2, raw1, tau2, tau1
        means_pos, means_neg = means_neg, means_pos
        logger.info("Constantes échangées (gamma1 < gamma2 en entrée) : environnement réfléchi.")

    taus = [t for t in (tau1, tau2) if t is not None]
    return CesaroProfile(
        gamma1=float(g1),
        gamma2=float(g2),
        tau=min(taus) if taus else None,
        residuals_pos=means_pos[ks - 1] - 2.0 * g1,
        residuals_neg=means_neg[ks - 1] - 2.0 * g2,
        checkpoints=ks,
        swapped=bool(swapped),
        tau_pos=tau1,
        tau_neg=tau2,
        raw_gamma1=float(raw1),
        raw_gamma2=float(raw2),
    )


def oriented(env: Environment, n_max: int = 1024) -> Tuple[Environment, CesaroProfile]:
    """Environnement orienté pour que gamma1 >= gamma2, avec son profil."""
    profile = cesaro_estimate(env, n_max)
    return (env.mirrored() if profile.swapped else env), profile
