#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Interface en ligne de commande : simulate | verify | density | lil | equivalence | export.

Priorité des réglages : options CLI > ANISO_SEED (graine maître) > config.json > DEFAULT_CONFIG.
Codes de sortie : 0 succès, 1 échec d'un test, 2 erreur d'usage / configuration / E-S.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from . import CONFIG_PATH, AnisoError, load_config
from .engine.pool import derive_seed
from .engine.reports import RunManifest, config_hash, export_run, make_report, write_report
from .env import environment_to_json, make_environment
from .timechange import DensitySpec, clock_ensemble, density_table, histogram_frame
from .verify import SuiteContext, construction_equivalence_test, lil_diagnostics, resolve_suite, run_suite
from .walk import simulate_constructive, simulate_direct, walk_ensemble, write_decomposition_json, write_path_csv

logger = logging.getLogger(__name__)

SEED_ENV_VAR = "ANISO_SEED"

DEFAULT_CONFIG: Dict = {
    "paths": {"output_dir": "data/outputs"},
    "environment": {"kind": "hphc"},
    "master_seed": 20240601,
    "workers": 1,
    "block_size": 10_000,
    "simulate": {"process": "walk", "method": "constructive", "N": 10_000, "replicas": 1,
                 "bins": 50, "gamma1": 2.0, "gamma2": 1.0, "t": 1.0, "dt": 1e-4},
    "density": {"t": 1.0, "gamma1": 2.0, "gamma2": 1.0, "grid_points": 201},
    "lil": {"kinds": ["walk_max", "local_time_max", "C1", "C2"], "N_max": 2 ** 24, "k_min": 256,
            "band": [0.3, 1.7]},
    "equivalence": {"N": 5, "mc_samples": 10 ** 6, "threshold": 0.01, "method": "constructive"},
    "verify": {"suite": "all"},
}


class UsageError(AnisoError):
    pass


# ============================================================
# ===================== CONFIGURATION ========================
# ============================================================

def _merge(base: Dict, override: Dict) -> Dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_env_flag(text: str):
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise UsageError(f"--env : JSON invalide ({e.msg})") from None
    return {"kind": text}


def _parse_grid(text: str) -> List[int]:
    try:
        grid = [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--n-grid : liste d'entiers attendue, reçu {text!r}") from None
    if not grid:
        raise UsageError("--n-grid : liste vide")
    return grid


@dataclass
class ExperimentConfig:
    """Configuration résolue d'une exécution ; `document` est ce qui est haché."""
    document: Dict
    overrides: Dict = field(default_factory=dict)
    env_from_flag: bool = False

    @property
    def master_seed(self) -> int:
        return int(self.document["master_seed"])

    @property
    def workers(self) -> int:
        return int(self.document["workers"])

    @property
    def block_size(self) -> int:
        return int(self.document["block_size"])

    @property
    def output_dir(self) -> Path:
        return Path(self.document["paths"]["output_dir"])

    @property
    def environment(self):
        return make_environment(self.document["environment"])

    def section(self, name: str) -> Dict:
        return self.document.get(name, {})

    @property
    def hash(self) -> str:
        return config_hash(self.document)

    @classmethod
    def resolve(cls, args: argparse.Namespace) -> "ExperimentConfig":
        if args.config:
            file_config = load_config(args.config)
        else:
            file_config = load_config() if CONFIG_PATH.exists() else {}
        document = _merge(DEFAULT_CONFIG, file_config)

        seed_env = os.environ.get(SEED_ENV_VAR)
        if seed_env is not None:
            try:
                document["master_seed"] = int(seed_env)
            except ValueError:
                raise UsageError(f"{SEED_ENV_VAR} doit être un entier, reçu {seed_env!r}") from None
        if args.seed is not None:
            document["master_seed"] = args.seed
        if args.workers is not None:
            document["workers"] = args.workers
        if args.out is not None:
            document["paths"]["output_dir"] = args.out
        env_from_flag = args.env is not None
        if env_from_flag:
            document["environment"] = _parse_env_flag(args.env)

        overrides = {}
        for flag, key in (("N", "N"), ("replicas", "replicas"), ("dt", "dt"), ("g1", "gamma1"),
                          ("g2", "gamma2"), ("t", "t"), ("tau", "tau"), ("grid_points", "grid_points"),
                          ("process", "process"), ("method", "method")):
            value = getattr(args, flag, None)
            if value is not None:
                overrides[key] = value
        if getattr(args, "n_grid", None):
            overrides["N_grid"] = _parse_grid(args.n_grid)

        command = args.command
        if command == "verify":
            names = resolve_suite(args.suite or document["verify"].get("suite", "all"))
            document["verify"]["suite"] = names
            for name in names:
                document["verify"][name] = _merge(document["verify"].get(name, {}), overrides)
        elif command == "lil":
            lil_over = dict(overrides)
            if "N" in lil_over:
                lil_over["N_max"] = lil_over.pop("N")
            document["lil"] = _merge(document["lil"], lil_over)
        elif command in document and isinstance(document[command], dict):
            document[command] = _merge(document[command], overrides)

        cfg = cls(document, overrides, env_from_flag)
        cfg.environment  # validation anticipée
        return cfg


# ============================================================
# ========================= SORTIES ==========================
# ============================================================

def _prepare_out(cfg: ExperimentConfig) -> Path:
    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"répertoire de sortie non inscriptible : {out_dir}")
    return out_dir


def _finish(manifest: RunManifest, out_dir: Path, written: List[Path]) -> Path:
    for path in written:
        manifest.add(path, out_dir)
    manifest.finished = RunManifest.now()
    return manifest.save(out_dir)


def _new_manifest(command: str, cfg: ExperimentConfig) -> RunManifest:
    return RunManifest(command=command, config_hash=cfg.hash, started=RunManifest.now())


# ============================================================
# ======================== COMMANDES =========================
# ============================================================

def cmd_simulate(cfg: ExperimentConfig) -> int:
    """Trajectoire (1 réplique) ou ensemble de points terminaux, ou horloge BM (--process bm)."""
    sec = cfg.section("simulate")
    out_dir = _prepare_out(cfg)
    manifest = _new_manifest("simulate", cfg)
    written: List[Path] = []
    replicas = int(sec["replicas"])
    logger.info("--- Début de la simulation (%s) ---", sec["process"])

    if sec["process"] == "bm":
        tinv, y = clock_ensemble(float(sec["gamma1"]), float(sec["gamma2"]), float(sec["t"]), float(sec["dt"]),
                                 replicas, cfg.master_seed, test="simulate-bm", workers=cfg.workers,
                                 block_size=cfg.block_size)
        path = out_dir / "bm_ensemble.csv"
        pd.DataFrame({"replica": np.arange(tinv.size), "tinv": tinv, "y": y}).to_csv(path, index=False)
        written.append(path)
        for name, sample in (("tinv", tinv), ("y", y)):
            hist = out_dir / f"hist_{name}.csv"
            histogram_frame(sample, int(sec["bins"])).to_csv(hist, index=False)
            written.append(hist)
    elif sec["process"] != "walk":
        raise UsageError(f"processus inconnu : {sec['process']!r} (walk | bm)")
    else:
        env = cfg.environment
        N = int(sec["N"])
        grid = sec.get("N_grid")
        if replicas == 1 and not grid:
            seed = derive_seed(cfg.master_seed, "simulate", 0)
            if sec["method"] == "direct":
                walk = simulate_direct(env, N, seed)
            else:
                walk, decomposition = simulate_constructive(env, N, seed)
                written.append(write_decomposition_json(decomposition, out_dir / "decomposition.json"))
            if walk.stored:
                written.append(write_path_csv(walk, out_dir / "path.csv"))
            else:
                logger.warning("⚠️ N = %d au-delà de la limite de stockage : seul l'état final est écrit", N)
                path = out_dir / "final_state.csv"
                pd.DataFrame([{"N": N, "c1": walk.final[0], "c2": walk.final[1],
                               "H": walk.H, "V": walk.V}]).to_csv(path, index=False)
                written.append(path)
        else:
            checkpoints = sorted(int(n) for n in grid) if grid else [N]
            ens = walk_ensemble(env, checkpoints, replicas, cfg.master_seed, method=sec["method"],
                                workers=cfg.workers, block_size=cfg.block_size)
            frames = [ens.to_frame(c).assign(N=n) for c, n in enumerate(checkpoints)]
            path = out_dir / "endpoints.csv"
            pd.concat(frames, ignore_index=True).to_csv(path, index=False)
            written.append(path)
            n_last = checkpoints[-1]
            scaled = ens.c2() / math.sqrt(n_last) if n_last > 0 else ens.c2().astype(float)
            hist = out_dir / "hist_c2.csv"
            histogram_frame(scaled, int(sec["bins"])).to_csv(hist, index=False)
            written.append(hist)

    manifest_path = _finish(manifest, out_dir, written)
    logger.info("✅ Simulation terminée : %s", manifest_path)
    return 0


def cmd_verify(cfg: ExperimentConfig) -> int:
    """Exécute les suites demandées ; code 0 si et seulement si toutes passent."""
    verify_sec = cfg.section("verify")
    names = verify_sec["suite"]
    out_dir = _prepare_out(cfg)
    manifest = _new_manifest("verify", cfg)
    written: List[Path] = []
    override = cfg.environment if cfg.env_from_flag else None

    for name in names:
        ctx = SuiteContext(params=verify_sec.get(name, {}), master_seed=cfg.master_seed,
                           workers=cfg.workers, block_size=cfg.block_size, env_override=override)
        report = run_suite(name, ctx)
        written.extend(write_report(report, out_dir))
        manifest.summary[name] = report["pass"]

    _finish(manifest, out_dir, written)
    failed = [n for n, ok in manifest.summary.items() if not ok]
    if failed:
        logger.info("❌ %d test(s) en échec : %s", len(failed), ", ".join(failed))
        return 1
    logger.info("✅ Tous les tests passent (%d)", len(names))
    return 0


def cmd_density(cfg: ExperimentConfig) -> int:
    """Tables (v, pdf, cdf) des deux variantes ; simple avis si gamma1 == gamma2."""
    sec = cfg.section("density")
    spec = DensitySpec(float(sec["t"]), float(sec["gamma1"]), float(sec["gamma2"]), "inverse")
    if spec.point_mass:
        print(f"point mass: A^-1(t) = {spec.atom:g} almost surely (gamma1 = gamma2 = {spec.gamma1:g})")
        return 0
    out_dir = _prepare_out(cfg)
    manifest = _new_manifest("density", cfg)
    written = []
    for variant in ("inverse", "complement"):
        path = out_dir / f"density_{variant}.csv"
        density_table(spec.with_variant(variant), int(sec["grid_points"])).to_csv(path, index=False)
        written.append(path)
    manifest_path = _finish(manifest, out_dir, written)
    logger.info("✅ Tables de densité écrites : %s", manifest_path)
    return 0


def cmd_lil(cfg: ExperimentConfig) -> int:
    sec = cfg.section("lil")
    out_dir = _prepare_out(cfg)
    manifest = _new_manifest("lil", cfg)
    written: List[Path] = []
    env = cfg.environment
    stat, ok = {}, True
    for kind in sec["kinds"]:
        logger.info("--- Début du diagnostic LIL %s ---", kind)
        for diag in lil_diagnostics(kind, env, int(sec["N_max"]), cfg.master_seed, int(sec["k_min"]),
                                    tuple(sec["band"])):
            stat[diag.name] = diag.to_dict()
            ok &= diag.passed
            path = out_dir / f"lil_{diag.name}.csv"
            pd.DataFrame({"n": diag.checkpoints, "normalized": diag.normalized_stats}).to_csv(path, index=False)
            written.append(path)
    report = make_report("lil", sec, stat, list(sec["band"]), ok)
    written.extend(write_report(report, out_dir))
    manifest.summary["lil"] = report["pass"]
    _finish(manifest, out_dir, written)
    return 0 if ok else 1


def cmd_equivalence(cfg: ExperimentConfig) -> int:
    sec = cfg.section("equivalence")
    out_dir = _prepare_out(cfg)
    manifest = _new_manifest("equivalence", cfg)
    env = cfg.environment
    res = construction_equivalence_test(env, int(sec["N"]), int(sec["mc_samples"]),
                                        derive_seed(cfg.master_seed, "equivalence", 0), cfg.workers,
                                        cfg.block_size, sec.get("method", "constructive"))
    keys = sorted(set(res["exact"]) | set(res["empirical"]))
    table = out_dir / "equivalence.csv"
    pd.DataFrame({"c1": [k[0] for k in keys], "c2": [k[1] for k in keys],
                  "exact": [res["exact"].get(k, 0.0) for k in keys],
                  "empirical": [res["empirical"].get(k, 0.0) for k in keys]}).to_csv(table, index=False)
    threshold = float(sec["threshold"])
    params = dict(sec, environment=environment_to_json(env))
    report = make_report("equivalence", params, {env.label: res["tv"]}, threshold, res["tv"] <= threshold)
    written = [table] + write_report(report, out_dir)
    manifest.summary["equivalence"] = report["pass"]
    _finish(manifest, out_dir, written)
    return 0 if report["pass"] else 1


def cmd_export(run_dir: Path, fmt: str) -> int:
    written = export_run(run_dir, fmt)
    logger.info("✅ Export écrit : %s", ", ".join(str(p) for p in written))
    return 0


# ============================================================
# ========================== ENTRÉE ==========================
# ============================================================

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="anisowalk", description="Marche aléatoire anisotrope sur Z^2 et vérifications.")
    parser.add_argument("command", choices=["simulate", "verify", "density", "lil", "equivalence", "export"])
    parser.add_argument("--config", help="document JSON de configuration")
    parser.add_argument("--env", help="nom d'environnement (hphc, comb, ...) ou description JSON")
    parser.add_argument("--N", type=int)
    parser.add_argument("--n-grid", dest="n_grid", help="liste d'horizons séparés par des virgules")
    parser.add_argument("--replicas", type=int)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--g1", type=float)
    parser.add_argument("--g2", type=float)
    parser.add_argument("--t", type=float)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--grid-points", dest="grid_points", type=int)
    parser.add_argument("--process", choices=["walk", "bm"])
    parser.add_argument("--method", choices=["constructive", "direct"])
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out")
    parser.add_argument("--suite")
    parser.add_argument("--format", choices=["csv", "json"], default="json")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "density": cmd_density,
    "lil": cmd_lil,
    "equivalence": cmd_equivalence,
}


def _fail(exc: BaseException) -> int:
    message = " ".join(str(exc).split())
    print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
    return 2


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "export":
            if args.out is None:
                raise UsageError("export : --out doit désigner le répertoire de l'exécution")
            return cmd_export(Path(args.out), args.format)
        cfg = ExperimentConfig.resolve(args)
        return COMMANDS[args.command](cfg)
    except (AnisoError, ValueError, KeyError, OSError) as exc:
        return _fail(exc)


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    sys.exit(main())
