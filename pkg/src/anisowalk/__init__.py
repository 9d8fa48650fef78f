from pathlib import Path
import json

__version__ = "0.1.0"

ROOT = Path(__file__).resolve().parents[2]
CONFIG_PATH = ROOT / "config.json"


def load_config(path=None):
    """Charge le document de configuration JSON (par défaut ROOT/config.json)."""
    config_path = Path(path) if path is not None else CONFIG_PATH
    if not config_path.exists():
        raise FileNotFoundError(f"Le fichier de configuration est introuvable : {config_path}")
    with open(config_path, "r", encoding="utf-8") as f:
        return json.load(f)


# ============================================================
# ======================== ERREURS ===========================
# ============================================================

class AnisoError(Exception):
    """Racine des erreurs du paquet."""


class InvalidEnvironmentError(AnisoError, ValueError):
    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level


class DegenerateEnvironmentError(InvalidEnvironmentError):
    """Tous les niveaux à 1/2 : la marche est unidimensionnelle."""


class DensitySingularityError(AnisoError, ValueError):
    pass


class PointMassLawError(AnisoError, ValueError):
    """gamma1 == gamma2 : la loi de A^{-1}(t) est une masse de Dirac en t/gamma."""

    def __init__(self, message, atom):
        super().__init__(message)
        self.atom = atom


class FitError(AnisoError, ValueError):
    pass


class UnknownTestError(AnisoError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "test inconnu"


class ManifestError(AnisoError):
    pass


class WindowExitError(AnisoError, RuntimeError):
    """La marche a quitté la fenêtre de niveaux pré-calculée."""
