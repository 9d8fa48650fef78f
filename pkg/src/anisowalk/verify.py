#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from . import DegenerateEnvironmentError, FitError, UnknownTestError
from .engine import kernels
from .engine.pool import DEFAULT_BLOCK_SIZE, derive_seed, make_rng, replica_tasks, run_blocks
from .engine.reports import dumps, make_report
from .env import Environment, make_environment, oriented, validate_environment
from .timechange import (DensitySpec, additive_functional, check_time_change_bounds, clock_ensemble,
                         complement_cdf, density_integral, inverse_cdf, simulate_wiener)
from .walk import (LocalTimeProfile, local_time_profile, simple_walk, simulate_direct,
                   sup_local_time_increment, walk_ensemble)

logger = logging.getLogger(__name__)

EPSILON = 0.1


# ============================================================
# ========================= TYPES ============================
# ============================================================

@dataclass
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    points: List[Tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared}


@dataclass
class GofReport:
    ks_distance: float
    n_samples: int
    reference: str
    threshold: float
    passed: bool

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class LilDiagnostic:
    name: str
    checkpoints: List[int]
    normalized_stats: List[float]
    target_constant: float
    band: Tuple[float, float] = (0.3, 1.7)

    @property
    def last(self) -> float:
        return self.normalized_stats[-1]

    @property
    def maximum(self) -> float:
        return max(self.normalized_stats)

    @property
    def ratio(self) -> float:
        return self.last / self.target_constant if self.target_constant > 0 else float("nan")

    @property
    def passed(self) -> bool:
        if self.target_constant <= 0:
            return abs(self.last) <= self.band[0]
        return self.band[0] <= self.ratio <= self.band[1]

    def to_dict(self) -> Dict:
        return {"name": self.name, "target": self.target_constant, "last": self.last,
                "max": self.maximum, "ratio": self.ratio, "pass": self.passed,
                "checkpoints": self.checkpoints, "normalized": self.normalized_stats}


# ============================================================
# ======================= OUTILS STAT ========================
# ============================================================

def exponent_regression(points: Sequence[Tuple[float, float]]) -> ExponentFit:
    """Moindres carrés sur (log N, log err) ; les erreurs nulles sont écartées."""
    usable = [(float(n), float(e)) for n, e in points if n > 0 and e > 0]
    if len(usable) < 3:
        raise FitError(f"au moins 3 points strictement positifs requis ({len(usable)} utilisables)")
    logs = np.log(np.asarray(usable))
    fit = stats.linregress(logs[:, 0], logs[:, 1])
    r2 = float(min(max(fit.rvalue ** 2, 0.0), 1.0))
    return ExponentFit(float(fit.slope), float(fit.intercept), r2,
                       [(float(a), float(b)) for a, b in logs])


def ks_one_sample(samples: np.ndarray, cdf: Callable) -> float:
    return float(stats.kstest(np.asarray(samples, dtype=float), cdf).statistic)


def two_sample_ks(a: np.ndarray, b: np.ndarray) -> float:
    """Distance KS à deux échantillons (symétrique en ses arguments)."""
    return float(stats.ks_2samp(np.asarray(a, dtype=float), np.asarray(b, dtype=float)).statistic)


def total_variation(p: Dict, q: Dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def _require_walkable(env: Environment):
    verdict = validate_environment(env)
    if not verdict:
        raise DegenerateEnvironmentError(verdict.reason)


# ============================================================
# ================= IDENTITÉ DE SOMMATION ====================
# ============================================================

def _positive_counts(profile) -> np.ndarray:
    if isinstance(profile, LocalTimeProfile):
        return profile.positive_part().astype(float)
    if isinstance(profile, dict):
        positive = {j: c for j, c in profile.items() if j >= 1}
        if not positive:
            return np.zeros(0)
        xi = np.zeros(max(positive))
        for j, c in positive.items():
            xi[j - 1] = c
        return xi
    return np.asarray(profile, dtype=float)


def abel_identity_check(profile, betas: Sequence[float], rho: float) -> Tuple[float, float, float]:
    """
    Sommation par parties sur les niveaux j >= 1 :
      sum_j xi(j)/beta_j = rho sum_j xi(j) + sum_j j (kappa_j - rho)(xi(j) - xi(j+1)),
    kappa_j = j^-1 sum_{k<=j} beta_k^-1. Retourne (lhs, rhs, |lhs - rhs|).
    """
    xi = _positive_counts(profile)
    K = xi.size
    betas = np.asarray(betas, dtype=float)
    if betas.size < K:
        raise ValueError(f"{betas.size} valeurs de beta pour un support de {K} niveaux")
    if np.any(betas[:max(K, 1)] <= 0):
        raise ValueError("beta doit être > 0")
    if K == 0:
        return 0.0, 0.0, 0.0
    inv = 1.0 / betas[:K]
    j = np.arange(1, K + 1)
    # j (kappa_j - rho) = sum_{k<=j} beta_k^-1 - rho j
    weights = np.cumsum(inv) - rho * j
    drops = xi - np.append(xi[1:], 0.0)
    lhs = math.fsum(xi * inv)
    rhs = rho * math.fsum(xi) + math.fsum(weights * drops)
    return lhs, rhs, abs(lhs - rhs)


# ============================================================
# ====================== ÉQUIVALENCE =========================
# ============================================================

def exact_endpoint_law(env: Environment, N: int) -> Dict[Tuple[int, int], float]:
    """Loi exacte de C(N) par programmation dynamique sur [-N, N]^2."""
    size = 2 * N + 1
    law = np.zeros((size, size))
    law[N, N] = 1.0
    p = env.window(-N, N)
    horiz = 0.5 - p
    for _ in range(N):
        nxt = np.zeros_like(law)
        nxt[:, 1:] += law[:, :-1] * p[:-1]
        nxt[:, :-1] += law[:, 1:] * p[1:]
        nxt[1:, :] += law[:-1, :] * horiz
        nxt[:-1, :] += law[1:, :] * horiz
        law = nxt
    xs, ys = np.nonzero(law)
    return {(int(x - N), int(y - N)): float(law[x, y]) for x, y in zip(xs, ys)}


def empirical_law(c1: np.ndarray, c2: np.ndarray) -> Dict[Tuple[int, int], float]:
    pairs, counts = np.unique(np.stack([c1, c2], axis=1), axis=0, return_counts=True)
    total = counts.sum()
    return {(int(x), int(y)): c / total for (x, y), c in zip(pairs, counts)}


def construction_equivalence_test(env: Environment, N_small: int, mc_samples: int, seed: int,
                                  workers: int = 1, block_size: int = DEFAULT_BLOCK_SIZE,
                                  method: str = "constructive") -> Dict:
    """Distance en variation totale entre la loi exacte de C(N_small) et l'échantillon simulé."""
    if N_small > 8:
        raise ValueError("N_small <= 8 requis (énumération exacte)")
    if mc_samples < 10 ** 6:
        logger.warning("⚠️ mc_samples = %d < 10^6 : seuil d'acceptation non garanti", mc_samples)
    exact = exact_endpoint_law(env, N_small)
    ens = walk_ensemble(env, N_small, mc_samples, seed, test=f"equivalence/{env.label}",
                        method=method, workers=workers, block_size=block_size)
    empirical = empirical_law(ens.c1(), ens.c2())
    return {"tv": total_variation(exact, empirical), "support": len(exact),
            "exact": exact, "empirical": empirical}


# ============================================================
# ================ ERREUR DE COUPLAGE (Â2) ===================
# ============================================================

def coupling_error_scan(env: Environment, N_grid: Sequence[int], replicas: int, seed: int,
                        workers: int = 1, block_size: int = DEFAULT_BLOCK_SIZE,
                        n_max: int = 1024) -> Tuple[ExponentFit, Dict]:
    """
    Médiane sur les répliques de |N - Â2(V_N)| pour chaque N, puis pente log-log.
    Â2 est calculé sur les temps locaux de la marche verticale de la construction.
    """
    _require_walkable(env)
    if replicas < 50:
        logger.warning("⚠️ replicas = %d < 50", replicas)
    env_o, profile = oriented(env, n_max)
    grid = np.asarray(sorted(N_grid), dtype=np.int64)
    ens = walk_ensemble(env_o, grid, replicas, seed, test=f"coupling/{env.label}",
                        workers=workers, block_size=block_size)
    medians = []
    for c, N in enumerate(grid):
        err = np.abs(N - ens.discrete_time_change(profile.gamma1, profile.gamma2, c))
        medians.append(float(np.median(err)))
    fit = exponent_regression(list(zip(grid.tolist(), medians)))
    tau = profile.tau if profile.tau is not None and profile.tau_in_range else 1.0
    bound = 5 / 4 - tau / 2 + EPSILON
    return fit, {"medians": medians, "N_grid": grid.tolist(), "bound": bound, "tau": tau,
                 "gamma1": profile.gamma1, "gamma2": profile.gamma2, "swapped": profile.swapped}


def truncation_scan(env: Environment, N_grid: Sequence[int], replicas: int, seed: int,
                    workers: int = 1, block_size: int = DEFAULT_BLOCK_SIZE, delta: float = 0.1) -> Dict:
    """
    max sur les répliques de (H* - H_N) / N^(1/2 + delta) pour chaque N, et pente
    log-log de ce rapport (tendance, None si moins de deux rapports non nuls).
    """
    grid = np.asarray(sorted(N_grid), dtype=np.int64)
    ens = walk_ensemble(env, grid, replicas, seed, test=f"truncation/{env.label}",
                        workers=workers, block_size=block_size)
    worst = [int((ens.H_star(c) - ens.H(c)).max(initial=0)) for c in range(grid.size)]
    ratios = [w / float(N) ** (0.5 + delta) for w, N in zip(worst, grid)]
    positive = [(N, r) for N, r in zip(grid.tolist(), ratios) if r > 0]
    trend = None
    if len(positive) >= 2 and len({N for N, _ in positive}) >= 2:
        logs = np.log(np.asarray(positive, dtype=float))
        trend = float(stats.linregress(logs[:, 0], logs[:, 1]).slope)
    return {"N_grid": grid.tolist(), "max_truncation": worst, "ratios": ratios, "trend_slope": trend}


# ============================================================
# ================== LOIS LIMITES (KS) =======================
# ============================================================

def endpoint_distribution_test(env: Environment, N: int, replicas: int,
                               gamma1: Optional[float] = None, gamma2: Optional[float] = None,
                               bm_replicas: int = 10 ** 5, dt: float = 1e-4, seed: int = 0,
                               workers: int = 1, block_size: int = DEFAULT_BLOCK_SIZE,
                               threshold_two: float = 0.03, threshold_one: float = 0.02) -> GofReport:
    """
    C2(N)/sqrt(N) sur les répliques de la marche contre Y(1) de la BM oscillante
    (KS à deux échantillons). Si gamma1 == gamma2, Y(1) ~ N(0, 1/gamma) : KS à un échantillon.
    """
    _require_walkable(env)
    if N < 10 ** 3 or replicas < 10 ** 4:
        logger.warning("⚠️ échelle réduite (N = %d, replicas = %d)", N, replicas)
    env_o, profile = oriented(env)
    g1 = profile.gamma1 if gamma1 is None else gamma1
    g2 = profile.gamma2 if gamma2 is None else gamma2
    ens = walk_ensemble(env_o, N, replicas, seed, test=f"endpoint/{env.label}",
                        workers=workers, block_size=block_size)
    walk_sample = ens.c2() / math.sqrt(N)

    if math.isclose(g1, g2, rel_tol=0.0, abs_tol=1e-9):
        sd = math.sqrt(1.0 / g1)
        d = ks_one_sample(walk_sample, stats.norm(0.0, sd).cdf)
        return GofReport(d, int(walk_sample.size), f"normal(0, {1.0 / g1:g})", threshold_one,
                         d <= threshold_one)

    _, y = clock_ensemble(g1, g2, 1.0, dt, bm_replicas, seed, test=f"endpoint-bm/{env.label}",
                          workers=workers, block_size=block_size)
    d = two_sample_ks(walk_sample, y)
    return GofReport(d, int(walk_sample.size),
                     f"Y(1), oscillating BM (g1={g1:g}, g2={g2:g}, dt={dt:g}, n={y.size})",
                     threshold_two, d <= threshold_two)


def horizontal_fraction_test(env: Environment, N: int, replicas: int, seed: int,
                             workers: int = 1, block_size: int = DEFAULT_BLOCK_SIZE,
                             threshold: float = 0.03, tolerance: float = 0.05) -> GofReport:
    """H_N/N contre la loi de 1 - A^{-1}(1) ; concentration autour de 1 - 1/gamma si dégénéré."""
    _require_walkable(env)
    if N < 10 ** 4:
        logger.warning("⚠️ N = %d < 10^4", N)
    env_o, profile = oriented(env)
    ens = walk_ensemble(env_o, N, replicas, seed, test=f"horizontal/{env.label}",
                        workers=workers, block_size=block_size)
    fraction = ens.H() / float(N)

    if profile.degenerate:
        centre = 1.0 - 1.0 / profile.gamma1
        dev = float(np.abs(fraction - centre).max(initial=0.0))
        return GofReport(dev, int(fraction.size), f"point mass at {centre:g}", tolerance, dev <= tolerance)

    spec = DensitySpec(1.0, profile.gamma1, profile.gamma2, "complement")
    d = ks_one_sample(fraction, partial(complement_cdf, spec))
    return GofReport(d, int(fraction.size),
                     f"1 - A^-1(1) (g1={profile.gamma1:g}, g2={profile.gamma2:g})", threshold, d <= threshold)


def inverse_law_test(gamma1: float, gamma2: float, t: float, dt: float, replicas: int, seed: int,
                     workers: int = 1, block_size: int = DEFAULT_BLOCK_SIZE,
                     threshold: float = 0.02, integral_tol: float = 1e-6) -> Dict:
    """Loi empirique de A^{-1}(t) contre la forme close ; intégrale des densités à 1."""
    spec = DensitySpec(t, gamma1, gamma2, "inverse")
    tinv, _ = clock_ensemble(gamma1, gamma2, t, dt, replicas, seed, test="inverse_law",
                             workers=workers, block_size=block_size)
    d = ks_one_sample(tinv, partial(inverse_cdf, spec))
    integrals = {v: density_integral(spec.with_variant(v)) for v in ("inverse", "complement")}
    integral_ok = all(abs(x - 1.0) <= integral_tol for x in integrals.values())
    return {"ks": d, "n": int(tinv.size), "integrals": integrals,
            "pass": bool(d <= threshold and integral_ok)}


def time_change_bounds_test(gamma1: float, gamma2: float, paths: int, T: float, dt: float,
                            seed: int) -> Dict:
    """Monotonie et encadrement de A(t) sur toutes les trajectoires, à chaque point de grille."""
    failures = 0
    for i in range(paths):
        W = simulate_wiener(T, dt, derive_seed(seed, "bounds", i))
        if not check_time_change_bounds(additive_functional(W, gamma1, gamma2))["ok"]:
            failures += 1
    return {"paths": paths, "failures": failures, "pass": failures == 0}


# ============================================================
# =============== INCRÉMENTS DES TEMPS LOCAUX ================
# ============================================================

def _increment_block(task, grid: np.ndarray):
    seed, count = task
    rng = make_rng(seed)
    out = np.zeros((count, grid.size), dtype=np.int64)
    for r in range(count):
        walk = simple_walk(int(grid[-1]), rng)
        for c, n in enumerate(grid):
            out[r, c] = sup_local_time_increment(walk, int(n))
    return out


def local_time_increment_scan(N_grid: Sequence[int], replicas: int, seed: int, workers: int = 1,
                              block_size: int = 10) -> Tuple[ExponentFit, Dict]:
    """Médiane de sup_x |xi(x+1, n) - xi(x, n)| pour la marche simple, puis pente log-log."""
    grid = np.asarray(sorted(N_grid), dtype=np.int64)
    tasks = replica_tasks(seed, "increments", replicas, block_size)
    sups = np.concatenate(run_blocks(partial(_increment_block, grid=grid), tasks, workers), axis=0)
    medians = np.median(sups, axis=0)
    fit = exponent_regression(list(zip(grid.tolist(), medians.tolist())))
    return fit, {"N_grid": grid.tolist(), "medians": medians.tolist()}


# ============================================================
# ==================== DIAGNOSTICS LIL =======================
# ============================================================

LIL_KINDS = ("walk_max", "local_time_max", "C1", "C2")


def _dyadic_checkpoints(k_min: int, N_max: int) -> np.ndarray:
    k = 1 << max(3, int(math.ceil(math.log2(k_min))))
    out = []
    while k <= N_max:
        out.append(k)
        k *= 2
    return np.asarray(out, dtype=np.int64)


def _running_sup(series: np.ndarray, scale: np.ndarray, k_min: int, checkpoints: np.ndarray,
                 use_min: bool = False) -> List[float]:
    normalized = series[k_min:] / scale[k_min:]
    acc = np.minimum.accumulate(normalized) if use_min else np.maximum.accumulate(normalized)
    return [float(acc[c - k_min]) for c in checkpoints]


def lil_diagnostics(kind: str, env: Optional[Environment], N_max: int, seed: int,
                    k_min: int = 256, band: Tuple[float, float] = (0.3, 1.7)) -> List[LilDiagnostic]:
    """
    Le long d'une trajectoire : sup (ou inf) courant, sur [k_min, n], de la statistique
    normalisée, relevé aux instants dyadiques. Diagnostic à tolérance large.
    """
    if kind not in LIL_KINDS:
        raise UnknownTestError(f"diagnostic LIL inconnu : {kind!r}")
    if N_max < 2 ** 16:
        logger.warning("⚠️ N_max = %d < 2^16", N_max)
    k_min = max(8, k_min)
    checkpoints = _dyadic_checkpoints(k_min, N_max)
    if checkpoints.size == 0:
        raise ValueError(f"aucun instant dyadique entre k_min = {k_min} et N_max = {N_max}")
    k = np.arange(N_max + 1, dtype=float)
    k[:3] = 3.0
    loglog = np.log(np.log(k))
    lil_scale = np.sqrt(2.0 * k * loglog)
    cps = checkpoints.tolist()

    if kind in ("walk_max", "local_time_max"):
        walk = simple_walk(N_max, make_rng(derive_seed(seed, f"lil/{kind}", 0)))
        if kind == "walk_max":
            running_max = np.maximum.accumulate(np.abs(walk)).astype(float)
            chung = running_max * np.sqrt(loglog / k)
            return [
                LilDiagnostic("walk_max_limsup", cps, _running_sup(running_max, lil_scale, k_min, checkpoints),
                              1.0, band),
                LilDiagnostic("walk_max_chung_liminf", cps,
                              _running_sup(chung, np.ones_like(k), k_min, checkpoints, use_min=True),
                              math.pi / math.sqrt(8.0), band),
            ]
        xi = kernels.running_max_local_time(walk, int(walk.min()), int(walk.max())).astype(float)
        return [LilDiagnostic("local_time_max_limsup", cps,
                              _running_sup(xi, lil_scale, k_min, checkpoints), 1.0, band)]

    env_o, profile = oriented(env)
    g1, g2 = profile.gamma1, profile.gamma2
    path = simulate_direct(env_o, N_max, derive_seed(seed, f"lil/{kind}/{env.label}", 0), store=True)
    scale = np.sqrt(k * loglog)
    if kind == "C1":
        series = path.c1.astype(float)
        targets = (math.sqrt(2.0 * (1.0 - 1.0 / g1)), math.sqrt(2.0 * (1.0 - 1.0 / g1)))
    else:
        series = path.c2.astype(float)
        targets = (math.sqrt(2.0 / g1), math.sqrt(2.0 / g2))
    return [
        LilDiagnostic(f"{kind}_limsup", cps, _running_sup(series, scale, k_min, checkpoints), targets[0], band),
        LilDiagnostic(f"{kind}_liminf", cps, _running_sup(-series, scale, k_min, checkpoints), targets[1], band),
    ]


# ============================================================
# ====================== DÉTERMINISME ========================
# ============================================================

def determinism_check(env: Environment, N: int, replicas: int, bm_replicas: int, dt: float, seed: int,
                      workers: Sequence[int] = (1, 8), block_size: int = 1000) -> Dict:
    """Relance le test de loi terminale avec plusieurs nombres de workers ; rapports identiques ?"""
    blobs, ks = [], []
    for w in workers:
        report = endpoint_distribution_test(env, N, replicas, bm_replicas=bm_replicas, dt=dt, seed=seed,
                                            workers=w, block_size=block_size)
        blobs.append(dumps(report.to_dict()))
        ks.append(report.ks_distance)
    return {"workers": list(workers), "identical": all(b == blobs[0] for b in blobs),
            "ks": ks}


# ============================================================
# ================== REGISTRE DES SUITES =====================
# ============================================================

@dataclass
class SuiteContext:
    params: Dict
    master_seed: int
    workers: int = 1
    block_size: int = DEFAULT_BLOCK_SIZE
    env_override: Optional[Environment] = None

    def environments(self, default) -> List[Environment]:
        if self.env_override is not None:
            return [self.env_override]
        specs = self.params.get("envs", default)
        return [make_environment(s) for s in specs]

    def seed(self, name: str) -> int:
        return derive_seed(self.master_seed, name, 0)


def _suite_abel(ctx: SuiteContext) -> Dict:
    p = ctx.params
    rng = make_rng(ctx.seed("abel"))
    worst = 0.0
    for _ in range(p.get("profiles", 1000)):
        walk = simple_walk(int(rng.integers(10, p.get("max_len", 5000))), rng)
        xi = local_time_profile(walk).positive_part()
        betas = rng.uniform(0.05, 1.0, size=xi.size + 1)
        rho = float(rng.uniform(1.0, 4.0))
        lhs, rhs, diff = abel_identity_check(xi, betas, rho)
        worst = max(worst, diff / max(abs(lhs), 1e-300))
    tol = p.get("rel_tol", 1e-12)
    return make_report("abel", p, {"max_rel_diff": worst}, tol, worst <= tol)


def _suite_equivalence(ctx: SuiteContext) -> Dict:
    p = ctx.params
    stat, ok = {}, True
    for env in ctx.environments(["comb", "hphc", {"kind": "uniform", "p": 0.25}]):
        res = construction_equivalence_test(env, p.get("N", 5), p.get("mc_samples", 10 ** 6),
                                            ctx.seed("equivalence"), ctx.workers, ctx.block_size)
        stat[env.label] = res["tv"]
        ok &= res["tv"] <= p.get("threshold", 0.01)
    return make_report("equivalence", p, stat, p.get("threshold", 0.01), ok)


def _suite_bounds(ctx: SuiteContext) -> Dict:
    p = ctx.params
    res = time_change_bounds_test(p.get("gamma1", 2.0), p.get("gamma2", 1.0), p.get("paths", 1000),
                                  p.get("T", 1.0), p.get("dt", 1e-4), ctx.seed("bounds"))
    return make_report("bounds", p, {"failures": res["failures"]}, 0, res["pass"])


def _suite_inverse_law(ctx: SuiteContext) -> Dict:
    p = ctx.params
    res = inverse_law_test(p.get("gamma1", 2.0), p.get("gamma2", 1.0), p.get("t", 1.0), p.get("dt", 1e-4),
                           p.get("replicas", 10 ** 5), ctx.seed("inverse_law"), ctx.workers, ctx.block_size,
                           p.get("threshold", 0.02), p.get("integral_tol", 1e-6))
    return make_report("inverse_law", p, {"ks": res["ks"], "integrals": res["integrals"]},
                       p.get("threshold", 0.02), res["pass"])


def _suite_endpoint(ctx: SuiteContext) -> Dict:
    p = ctx.params
    stat, ok = {}, True
    for env in ctx.environments(["hphc", {"kind": "uniform", "p": 0.25}]):
        rep = endpoint_distribution_test(env, p.get("N", 10 ** 4), p.get("replicas", 10 ** 4),
                                         bm_replicas=p.get("bm_replicas", 10 ** 5), dt=p.get("dt", 1e-4),
                                         seed=ctx.seed("endpoint"), workers=ctx.workers,
                                         block_size=ctx.block_size,
                                         threshold_two=p.get("threshold_two", 0.03),
                                         threshold_one=p.get("threshold_one", 0.02))
        stat[env.label] = rep.to_dict()
        ok &= rep.passed
    return make_report("endpoint", p, stat, {"two_sample": p.get("threshold_two", 0.03),
                                             "one_sample": p.get("threshold_one", 0.02)}, ok)


def _suite_horizontal(ctx: SuiteContext) -> Dict:
    p = ctx.params
    stat, ok = {}, True
    for env in ctx.environments(["hphc"]):
        rep = horizontal_fraction_test(env, p.get("N", 10 ** 5), p.get("replicas", 10 ** 4),
                                       ctx.seed("horizontal"), ctx.workers, ctx.block_size,
                                       p.get("threshold", 0.03), p.get("tolerance", 0.05))
        stat[env.label] = rep.to_dict()
        ok &= rep.passed
    return make_report("horizontal", p, stat, p.get("threshold", 0.03), ok)


def _dyadic_grid(p: Dict, lo: int, hi: int) -> List[int]:
    if "N_grid" in p:
        return [int(n) for n in p["N_grid"]]
    return [2 ** e for e in range(p.get("log2_min", lo), p.get("log2_max", hi) + 1)]


def _suite_coupling(ctx: SuiteContext) -> Dict:
    p = ctx.params
    stat, ok, points, fit_out = {}, True, [], None
    for env in ctx.environments(["hphc"]):
        fit, info = coupling_error_scan(env, _dyadic_grid(p, 10, 20), p.get("replicas", 200),
                                        ctx.seed("coupling"), ctx.workers, ctx.block_size)
        tau = p.get("tau", info["tau"])
        bound = p.get("max_slope", 5 / 4 - tau / 2 + EPSILON)
        stat[env.label] = {"slope": fit.slope, "bound": bound, "medians": info["medians"]}
        ok &= fit.slope <= bound
        points, fit_out = fit.points, fit.to_dict()
    return make_report("coupling", p, stat, p.get("max_slope", "5/4 - tau/2 + 0.1"), ok,
                       points=points, fit=fit_out)


def _suite_truncation(ctx: SuiteContext) -> Dict:
    p = ctx.params
    stat, ok = {}, True
    for env in ctx.environments(["hphc"]):
        res = truncation_scan(env, _dyadic_grid(p, 10, 18), p.get("replicas", 200),
                              ctx.seed("truncation"), ctx.workers, ctx.block_size)
        stat[env.label] = res
        trend_ok = res["trend_slope"] is None or res["trend_slope"] <= p.get("max_trend", 0.0)
        ok &= max(res["ratios"]) <= p.get("max_ratio", 1.0) and trend_ok
    return make_report("truncation", p, stat,
                       {"max_ratio": p.get("max_ratio", 1.0), "max_trend": p.get("max_trend", 0.0)}, ok)


def _suite_increments(ctx: SuiteContext) -> Dict:
    p = ctx.params
    fit, info = local_time_increment_scan(_dyadic_grid(p, 10, 22), p.get("replicas", 100),
                                          ctx.seed("increments"), ctx.workers, p.get("block_size", 10))
    bound = p.get("max_slope", 0.35)
    return make_report("increments", p, {"slope": fit.slope, "medians": info["medians"]}, bound,
                       fit.slope <= bound, points=fit.points, fit=fit.to_dict())


def _suite_lil(ctx: SuiteContext) -> Dict:
    p = ctx.params
    band = tuple(p.get("band", (0.3, 1.7)))
    envs = ctx.environments(["hphc"])
    stat, ok = {}, True
    for kind in p.get("kinds", list(LIL_KINDS)):
        for diag in lil_diagnostics(kind, envs[0], p.get("N_max", 2 ** 24), ctx.seed("lil"),
                                    p.get("k_min", 256), band):
            stat[diag.name] = diag.to_dict()
            ok &= diag.passed
    return make_report("lil", p, stat, list(band), ok)


def _suite_determinism(ctx: SuiteContext) -> Dict:
    p = ctx.params
    env = ctx.environments(["hphc"])[0]
    res = determinism_check(env, p.get("N", 10 ** 4), p.get("replicas", 10 ** 4), p.get("bm_replicas", 10 ** 5),
                            p.get("dt", 1e-4), ctx.seed("determinism"), tuple(p.get("workers", (1, 8))),
                            ctx.block_size)
    return make_report("determinism", p, res, "byte-identical", res["identical"])


def _suite_regression(ctx: SuiteContext) -> Dict:
    p = ctx.params
    fit = exponent_regression([(n, n ** 0.5) for n in (4, 16, 64, 256, 1024)])
    ok = abs(fit.slope - 0.5) <= 1e-12 and fit.r_squared >= 1 - 1e-12
    return make_report("regression", p, fit.to_dict(), 0.5, ok, points=fit.points, fit=fit.to_dict())


SUITES: Dict[str, Callable[[SuiteContext], Dict]] = {
    "equivalence": _suite_equivalence,
    "bounds": _suite_bounds,
    "inverse_law": _suite_inverse_law,
    "endpoint": _suite_endpoint,
    "horizontal": _suite_horizontal,
    "coupling": _suite_coupling,
    "abel": _suite_abel,
    "increments": _suite_increments,
    "lil": _suite_lil,
    "determinism": _suite_determinism,
    "truncation": _suite_truncation,
    "regression": _suite_regression,
}

# Opération du module couverte par chaque suite
OPERATIONS = {
    "equivalence": "construction_equivalence_test",
    "bounds": "time_change_bounds_test",
    "inverse_law": "inverse_law_test",
    "endpoint": "endpoint_distribution_test",
    "horizontal": "horizontal_fraction_test",
    "coupling": "coupling_error_scan",
    "abel": "abel_identity_check",
    "increments": "local_time_increment_scan",
    "lil": "lil_diagnostics",
    "determinism": "determinism_check",
    "truncation": "truncation_scan",
    "regression": "exponent_regression",
}


def resolve_suite(names) -> List[str]:
    if isinstance(names, str):
        names = [n.strip() for n in names.split(",") if n.strip()]
    if "all" in names:
        return list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UnknownTestError(f"test inconnu : {', '.join(unknown)}")
    return list(names)


def run_suite(name: str, ctx: SuiteContext) -> Dict:
    if name not in SUITES:
        raise UnknownTestError(f"test inconnu : {name}")
    logger.info("--- Début du test %s ---", name)
    report = SUITES[name](ctx)
    logger.info("%s %s : %s", "✅" if report["pass"] else "❌", name, "succès" if report["pass"] else "échec")
    return report
