#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import logging
import sys
import time
from pathlib import Path

# Le paquet vit sous src/ (layout setuptools)
sys.path.insert(0, str(Path(__file__).resolve().parent / "src"))

from anisowalk.cli import main  # noqa: E402


def run_pipeline(argv=None):
    """Point d'entrée : délègue à la CLI et encadre l'exécution."""
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    argv = sys.argv[1:] if argv is None else argv
    start_time = time.time()

    print("=" * 60)
    print("🚀 MARCHE ALÉATOIRE ANISOTROPE")
    print(f"   Commande : {' '.join(argv) if argv else '(aucune)'}")
    print("=" * 60)

    code = main(argv)

    elapsed = (time.time() - start_time) / 60
    print("\n" + "=" * 60)
    if code == 0:
        print(f"✅ TERMINÉ AVEC SUCCÈS en {elapsed:.2f} minutes")
    elif code == 1:
        print(f"❌ AU MOINS UN TEST EN ÉCHEC ({elapsed:.2f} minutes)")
    else:
        print("❌ ERREUR : voir le message ci-dessus")
    print("=" * 60)
    return code


if __name__ == "__main__":
    sys.exit(run_pipeline())
