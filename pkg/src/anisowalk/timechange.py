#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import partial
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy import integrate

from . import DensitySingularityError, PointMassLawError
from .engine import kernels
from .engine.pool import DEFAULT_BLOCK_SIZE, make_rng, replica_tasks, run_blocks

logger = logging.getLogger(__name__)


# ============================================================
# ==================== TRAJECTOIRES W ========================
# ============================================================

@dataclass
class WienerGrid:
    dt: float
    values: np.ndarray
    seed: Optional[int] = None

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.values.size)

    @property
    def T(self) -> float:
        return self.dt * (self.values.size - 1)


def simulate_wiener(T: float, dt: float, seed) -> WienerGrid:
    """W sur la grille k*dt, k = 0..ceil(T/dt), incréments gaussiens de variance dt."""
    if dt <= 0:
        raise ValueError(f"pas de temps non positif : dt = {dt}")
    if dt > T:
        raise ValueError(f"dt = {dt} supérieur à l'horizon T = {T}")
    K = int(math.ceil(T / dt - 1e-9))
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    values = np.zeros(K + 1)
    np.cumsum(math.sqrt(dt) * rng.standard_normal(K), out=values[1:])
    return WienerGrid(dt, values, None if isinstance(seed, np.random.Generator) else seed)


# ============================================================
# ================ FONCTIONNELLE ADDITIVE A(t) ===============
# ============================================================

@dataclass
class TimeChange:
    gamma1: float
    gamma2: float
    A_values: np.ndarray
    source: WienerGrid

    @property
    def times(self) -> np.ndarray:
        return self.source.times

    @property
    def alpha(self) -> np.ndarray:
        """alpha(t) = A(t) - t."""
        return self.A_values - self.times


def _check_gammas(gamma1: float, gamma2: float):
    if gamma2 < 1.0:
        raise ValueError(f"gamma2 = {gamma2} < 1")
    if gamma1 < gamma2:
        raise ValueError(f"gamma1 = {gamma1} < gamma2 = {gamma2} : réfléchir l'environnement")


def additive_functional(W: WienerGrid, gamma1: float, gamma2: float) -> TimeChange:
    """
    A(k dt) = dt * (gamma1 * #cellules où W(gauche) >= 0 + gamma2 * #cellules où W(gauche) < 0).
    Les compteurs entiers évitent la dérive d'une somme cumulée de flottants.
    """
    _check_gammas(gamma1, gamma2)
    K = W.values.size - 1
    k = np.arange(K + 1)
    if gamma1 == gamma2:
        return TimeChange(gamma1, gamma2, gamma1 * (W.dt * k), W)
    upper = np.zeros(K + 1, dtype=np.int64)
    np.cumsum(W.values[:-1] >= 0.0, dtype=np.int64, out=upper[1:])
    lower = k - upper
    return TimeChange(gamma1, gamma2, W.dt * (gamma1 * upper + gamma2 * lower), W)


def check_time_change_bounds(tc: TimeChange) -> dict:
    """
    Monotonie de A et de A(t) - t, encadrement gamma2 t <= A(t) <= gamma1 t sur
    toute la grille ; tolérance de quelques ulp sur les comparaisons flottantes.
    """
    t = tc.times
    A = tc.A_values
    tol = 8.0 * np.finfo(float).eps * max(1.0, float(np.abs(A).max(initial=0.0)))
    checks = {
        "A_nondecreasing": bool(np.all(np.diff(A) >= -tol)),
        "alpha_nondecreasing": bool(np.all(np.diff(A - t) >= -tol)),
        "lower_bound": bool(np.all(A >= tc.gamma2 * t - tol)),
        "upper_bound": bool(np.all(A <= tc.gamma1 * t + tol)),
        "starts_at_zero": bool(A[0] == 0.0),
    }
    checks["ok"] = all(checks.values())
    return checks


def inverse_time_change(tc: TimeChange, s):
    """t tel que A(t) = s : recherche monotone sur la grille + interpolation linéaire."""
    s_arr = np.asarray(s, dtype=float)
    top = tc.A_values[-1]
    if np.any(s_arr < 0.0) or np.any(s_arr > top * (1 + 1e-12)):
        raise ValueError(f"argument hors de [0, A(T)] = [0, {top}]")
    out = np.interp(s_arr, tc.A_values, tc.times)
    return float(out) if out.ndim == 0 else out


def oscillating_bm(W: WienerGrid, gamma1: float, gamma2: float, sample_times):
    """Y(t) = W(A^{-1}(t)), W interpolé linéairement entre les points de grille."""
    tc = additive_functional(W, gamma1, gamma2)
    u = inverse_time_change(tc, sample_times)
    out = np.interp(u, W.times, W.values)
    return float(out) if np.ndim(out) == 0 else out


# ============================================================
# ================= DENSITÉS EN FORME CLOSE ==================
# ============================================================

@dataclass(frozen=True)
class DensitySpec:
    """
    Loi de A^{-1}(t) (variant "inverse") ou de t - A^{-1}(t) (variant "complement").
    gamma1 == gamma2 est admis : la loi est alors une masse de Dirac.
    """
    t: float
    gamma1: float
    gamma2: float
    variant: str = "inverse"

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError(f"t = {self.t} doit être > 0")
        if self.variant not in ("inverse", "complement"):
            raise ValueError(f"variante inconnue : {self.variant!r}")
        _check_gammas(self.gamma1, self.gamma2)

    @property
    def point_mass(self) -> bool:
        return self.gamma1 == self.gamma2

    @property
    def atom(self) -> float:
        a = self.t / self.gamma1
        return a if self.variant == "inverse" else self.t - a

    @property
    def support(self) -> Tuple[float, float]:
        lo, hi = self.t / self.gamma1, self.t / self.gamma2
        if self.variant == "inverse":
            return lo, hi
        return self.t * (1 - 1 / self.gamma2), self.t * (1 - 1 / self.gamma1)

    def with_variant(self, variant: str) -> "DensitySpec":
        return DensitySpec(self.t, self.gamma1, self.gamma2, variant)

    # Substitution v = m + r sin(theta) sur le support de A^{-1}(t)
    @property
    def _geometry(self):
        a, b = self.t / self.gamma1, self.t / self.gamma2
        return (a + b) / 2, (b - a) / 2, self.t / math.sqrt(self.gamma1 * self.gamma2)


def _require_variant(spec: DensitySpec, variant: str):
    if spec.variant != variant:
        raise ValueError(f"spécification de variante {spec.variant!r}, attendu {variant!r}")
    if spec.point_mass:
        raise PointMassLawError(f"gamma1 = gamma2 : masse de Dirac en v = {spec.atom}", spec.atom)


def _evaluate(spec: DensitySpec, v, formula):
    v_arr = np.asarray(v, dtype=float)
    lo, hi = spec.support
    if np.any((v_arr == lo) | (v_arr == hi)):
        raise DensitySingularityError(f"densité infinie aux bornes du support ({lo}, {hi})")
    inside = (v_arr > lo) & (v_arr < hi)
    out = np.zeros_like(v_arr)
    with np.errstate(invalid="ignore", divide="ignore"):
        out[inside] = formula(v_arr[inside])
    return float(out) if out.ndim == 0 else out


def inverse_density(spec: DensitySpec, v):
    """P(A^{-1}(t) in dv)/dv = t / (pi v) / sqrt((v g1 - t)(t - g2 v)) sur (t/g1, t/g2)."""
    _require_variant(spec, "inverse")
    t, g1, g2 = spec.t, spec.gamma1, spec.gamma2
    return _evaluate(spec, v, lambda x: t / (math.pi * x) / np.sqrt((x * g1 - t) * (t - g2 * x)))


def complement_density(spec: DensitySpec, v):
    """Densité de t - A^{-1}(t) sur (t(1 - 1/g2), t(1 - 1/g1))."""
    _require_variant(spec, "complement")
    t, g1, g2 = spec.t, spec.gamma1, spec.gamma2
    return _evaluate(spec, v, lambda x: t / (math.pi * (t - x))
                     / np.sqrt(((g1 - 1) * t - g1 * x) * (t * (1 - g2) + g2 * x)))


def density(spec: DensitySpec, v):
    return inverse_density(spec, v) if spec.variant == "inverse" else complement_density(spec, v)


def _inverse_cdf_raw(spec: DensitySpec, v: np.ndarray) -> np.ndarray:
    # Primitive en arctangente de la densité après substitution sinus
    m, r, c = spec._geometry
    theta = np.arcsin(np.clip((v - m) / r, -1.0, 1.0))
    return (2 / math.pi) * (np.arctan((m * np.tan(theta / 2) + r) / c) - math.atan((r - m) / c))


def inverse_cdf(spec: DensitySpec, v):
    """P(A^{-1}(t) <= v)."""
    s = spec.with_variant("inverse")
    v_arr = np.asarray(v, dtype=float)
    if s.point_mass:
        out = (v_arr >= s.atom).astype(float)
    else:
        out = np.clip(_inverse_cdf_raw(s, v_arr), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def complement_cdf(spec: DensitySpec, v):
    """P(t - A^{-1}(t) <= v) = P(A^{-1}(t) >= t - v) (loi continue hors cas dégénéré)."""
    v_arr = np.asarray(v, dtype=float)
    if spec.point_mass:
        out = (v_arr >= spec.with_variant("complement").atom).astype(float)
    else:
        out = 1.0 - inverse_cdf(spec, spec.t - v_arr)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def cdf(spec: DensitySpec, v):
    return inverse_cdf(spec, v) if spec.variant == "inverse" else complement_cdf(spec, v)


def density_integral(spec: DensitySpec) -> float:
    """Intégrale de la densité sur son support, quadrature après v = m + r sin(theta)."""
    lo, hi = spec.support
    if spec.point_mass:
        return 1.0
    m, r = (lo + hi) / 2, (hi - lo) / 2

    def integrand(theta):
        v = m + r * math.sin(theta)
        return float(density(spec, v)) * r * math.cos(theta)

    value, _ = integrate.quad(integrand, -math.pi / 2, math.pi / 2, epsabs=1e-13, epsrel=1e-12, limit=200)
    return value


def sample_law(spec: DensitySpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Tirages exacts par inversion de la fonction de répartition en forme close."""
    s = spec.with_variant("inverse")
    if s.point_mass:
        return np.full(n, spec.atom)
    m, r, c = s._geometry
    u = rng.random(n)
    phi = math.pi * u / 2 + math.atan((r - m) / c)
    theta = 2 * np.arctan((c * np.tan(phi) - r) / m)
    v = m + r * np.sin(theta)
    return v if spec.variant == "inverse" else spec.t - v


def density_table(spec: DensitySpec, grid_points: int = 201) -> pd.DataFrame:
    """
    Table (v, pdf, cdf) sur le support ; espacement v = m + r sin(theta) avec theta
    uniforme, qui resserre les points près des singularités. Les bornes portent pdf = inf.
    """
    if spec.point_mass:
        raise PointMassLawError(f"gamma1 = gamma2 : masse de Dirac en v = {spec.atom}", spec.atom)
    if grid_points < 3:
        raise ValueError("grid_points doit être >= 3")
    lo, hi = spec.support
    m, r = (lo + hi) / 2, (hi - lo) / 2
    theta = np.linspace(-math.pi / 2, math.pi / 2, grid_points)
    v = m + r * np.sin(theta)
    v[0], v[-1] = lo, hi
    pdf = np.full(grid_points, np.inf)
    pdf[1:-1] = density(spec, v[1:-1])
    return pd.DataFrame({"v": v, "pdf": pdf, "cdf": cdf(spec, v)})


# ============================================================
# ======================== ENSEMBLES =========================
# ============================================================

def _clock_block(task, gamma1: float, gamma2: float, s: float, dt: float):
    seed, count = task
    out = np.zeros((count, 2))
    kernels.clock_batch(gamma1, gamma2, s, dt, count, make_rng(seed), out)
    return out


def clock_ensemble(gamma1: float, gamma2: float, s: float, dt: float, replicas: int,
                   master_seed: int, test: str = "clock", workers: int = 1,
                   block_size: int = DEFAULT_BLOCK_SIZE) -> Tuple[np.ndarray, np.ndarray]:
    """(A^{-1}(s), Y(s)) pour `replicas` trajectoires browniennes indépendantes."""
    _check_gammas(gamma1, gamma2)
    if dt <= 0:
        raise ValueError(f"pas de temps non positif : dt = {dt}")
    tasks = replica_tasks(master_seed, test, replicas, block_size)
    parts = run_blocks(partial(_clock_block, gamma1=gamma1, gamma2=gamma2, s=s, dt=dt), tasks, workers)
    out = np.concatenate(parts, axis=0) if parts else np.zeros((0, 2))
    return out[:, 0], out[:, 1]


def histogram_frame(samples: np.ndarray, bins: int = 50) -> pd.DataFrame:
    counts, edges = np.histogram(samples, bins=bins)
    return pd.DataFrame({"bin_left": edges[:-1], "bin_right": edges[1:], "count": counts})
