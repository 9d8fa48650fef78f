#!/usr/bin/env python3
# -*- coding: utf-8 -*-

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from .. import ManifestError, __version__

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
# Champs sans effet sur les résultats : exclus de l'empreinte de configuration
VOLATILE_KEYS = ("workers", "paths", "DESCRIPTION")


def _native(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"type non sérialisable : {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON canonique : clés triées, indentation fixe ; identique d'une exécution à l'autre."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_native, allow_nan=True)


def config_hash(config: Dict) -> str:
    stable = {k: v for k, v in config.items() if k not in VOLATILE_KEYS}
    return hashlib.sha256(json.dumps(stable, sort_keys=True, default=_native).encode("utf-8")).hexdigest()


# ============================================================
# ======================== RAPPORTS ==========================
# ============================================================

def make_report(test: str, params: Dict, statistic, threshold, passed: bool,
                points: Optional[List] = None, **extra) -> Dict:
    report = {
        "test": test,
        "params": params,
        "statistic": statistic,
        "threshold": threshold,
        "pass": bool(passed),
        "points": points if points is not None else [],
    }
    report.update(extra)
    return report


def write_report(report: Dict, out_dir: Path) -> List[Path]:
    """report_<test>.json, plus fit_<test>.csv si le rapport porte des points (log N, log err)."""
    out_dir = Path(out_dir)
    written = []
    path = out_dir / f"report_{report['test']}.json"
    path.write_text(dumps(report) + "\n", encoding="utf-8")
    written.append(path)
    if report.get("points") and isinstance(report["points"][0], (list, tuple)):
        fit_path = out_dir / f"fit_{report['test']}.csv"
        pd.DataFrame(report["points"], columns=["log_n", "log_err"]).to_csv(fit_path, index=False)
        written.append(fit_path)
    return written


# ============================================================
# ======================== MANIFESTE =========================
# ============================================================

@dataclass
class RunManifest:
    command: str
    config_hash: str
    version: str = __version__
    started: str = ""
    finished: str = ""
    outputs: List[str] = field(default_factory=list)
    summary: Dict[str, bool] = field(default_factory=dict)

    @staticmethod
    def now() -> str:
        return datetime.now(timezone.utc).isoformat(timespec="seconds")

    def add(self, path: Path, out_dir: Path):
        name = str(Path(path).relative_to(out_dir))
        if name not in self.outputs:
            self.outputs.append(name)

    def save(self, out_dir: Path) -> Path:
        path = Path(out_dir) / MANIFEST_NAME
        path.write_text(dumps(asdict(self)) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, run_dir: Path) -> "RunManifest":
        path = Path(run_dir) / MANIFEST_NAME
        if not path.exists():
            raise ManifestError(f"{MANIFEST_NAME} introuvable dans {run_dir}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            return cls(**data)
        except (json.JSONDecodeError, TypeError) as e:
            raise ManifestError(f"{MANIFEST_NAME} corrompu dans {run_dir} ({e})") from e


def summary_bytes(summary: Dict[str, bool]) -> bytes:
    return json.dumps(summary, sort_keys=True).encode("utf-8")


# ============================================================
# ========================== EXPORT ==========================
# ============================================================

def _load_reports(run_dir: Path, manifest: RunManifest) -> List[Dict]:
    reports = []
    for name in manifest.outputs:
        if name.startswith("report_") and name.endswith(".json"):
            path = Path(run_dir) / name
            if not path.exists():
                raise ManifestError(f"sortie référencée absente : {name}")
            reports.append(json.loads(path.read_text(encoding="utf-8")))
    return reports


def export_run(run_dir, fmt: str = "json") -> List[Path]:
    """Regroupe les rapports d'une exécution en un fichier (json) ou deux tables (csv)."""
    run_dir = Path(run_dir)
    manifest = RunManifest.load(run_dir)
    reports = _load_reports(run_dir, manifest)

    if fmt == "json":
        path = run_dir / "export.json"
        path.write_text(dumps({"manifest": asdict(manifest), "reports": reports}) + "\n", encoding="utf-8")
        return [path]
    if fmt != "csv":
        raise ValueError(f"format d'export inconnu : {fmt!r}")

    rows = [{"test": r["test"], "pass": r["pass"],
             "statistic": json.dumps(r["statistic"], sort_keys=True, default=_native),
             "threshold": json.dumps(r["threshold"], sort_keys=True, default=_native),
             "params": json.dumps(r["params"], sort_keys=True, default=_native)} for r in reports]
    path = run_dir / "export.csv"
    pd.DataFrame(rows, columns=["test", "pass", "statistic", "threshold", "params"]).to_csv(path, index=False)
    written = [path]

    fits = [dict(r["fit"], test=r["test"]) for r in reports if isinstance(r.get("fit"), dict)]
    if fits:
        fit_path = run_dir / "export_fits.csv"
        pd.DataFrame(fits, columns=["slope", "intercept", "r_squared", "test"]).to_csv(fit_path, index=False)
        written.append(fit_path)
    return written


def load_export(path) -> Dict[str, bool]:
    """Relit un export et restitue le résumé {test: pass} du manifeste."""
    path = Path(path)
    if path.suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        return data["manifest"]["summary"]
    df = pd.read_csv(path)
    return {str(t): bool(p) for t, p in zip(df["test"], df["pass"])}
