"""
Configuration settings for the magnon gadget lab.
"""

import os
from typing import Dict, Any
from dotenv import load_dotenv

load_dotenv()

# Encourage UTF-8 on Windows consoles; CSV headers carry Greek symbols
os.environ.setdefault("PYTHONUTF8", "1")
os.environ.setdefault("PYTHONIOENCODING", "utf-8")

import sys
try:
    sys.stdout.reconfigure(encoding="utf-8")
    sys.stderr.reconfigure(encoding="utf-8")
except Exception:
    pass


class Settings:
    """Lab settings read from the environment (.env supported)."""

    # Output
    LAB_OUTPUT_DIR: str = os.getenv("LAB_OUTPUT_DIR", "results")
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE: str = os.getenv("LOG_FILE", "magnon_gadget_lab.log")

    # Operator algebra
    DENSE_SITE_CAP: int = int(os.getenv("DENSE_SITE_CAP", "14"))
    PRUNE_TOLERANCE: float = float(os.getenv("PRUNE_TOLERANCE", "1e-14"))

    # Exact diagonalization
    DEGENERACY_TOLERANCE: float = float(os.getenv("DEGENERACY_TOLERANCE", "1e-10"))
    EIGEN_PRECISION_DPS: int = int(os.getenv("EIGEN_PRECISION_DPS", "40"))

    # Anyon thermodynamics
    ADIABATICITY_THRESHOLD: float = float(os.getenv("ADIABATICITY_THRESHOLD", "0.1"))
    INCLUDE_ZEEMAN_OFFSET: bool = os.getenv("INCLUDE_ZEEMAN_OFFSET", "True").lower() == "true"

    # Backaction
    BACKACTION_HZ_REGULATOR: float = float(os.getenv("BACKACTION_HZ_REGULATOR", "1e-4"))

    # Monte Carlo
    MC_MAX_SPINS: int = int(os.getenv("MC_MAX_SPINS", "400000"))
    MC_PARALLEL: bool = os.getenv("MC_PARALLEL", "False").lower() == "true"

    # Application
    APP_TITLE: str = "Magnon Gadget Lab"
    APP_VERSION: str = os.getenv("APP_VERSION", "1.0.0")

    def as_dict(self) -> Dict[str, Any]:
        """Return settings as a plain dict (embedded into run manifests)."""
        return {
            "LAB_OUTPUT_DIR": self.LAB_OUTPUT_DIR,
            "DENSE_SITE_CAP": self.DENSE_SITE_CAP,
            "PRUNE_TOLERANCE": self.PRUNE_TOLERANCE,
            "DEGENERACY_TOLERANCE": self.DEGENERACY_TOLERANCE,
            "EIGEN_PRECISION_DPS": self.EIGEN_PRECISION_DPS,
            "ADIABATICITY_THRESHOLD": self.ADIABATICITY_THRESHOLD,
            "INCLUDE_ZEEMAN_OFFSET": self.INCLUDE_ZEEMAN_OFFSET,
            "BACKACTION_HZ_REGULATOR": self.BACKACTION_HZ_REGULATOR,
            "MC_MAX_SPINS": self.MC_MAX_SPINS,
            "MC_PARALLEL": self.MC_PARALLEL,
            "APP_VERSION": self.APP_VERSION,
        }


settings = Settings()


# Basic validation to avoid surprise runs
import logging
if settings.DENSE_SITE_CAP > 14:
    logging.warning(f"DENSE_SITE_CAP={settings.DENSE_SITE_CAP} allows dense matrices above 2^14; expect very large memory use.")
if not 0.0 < settings.PRUNE_TOLERANCE < 1e-6:
    logging.warning(f"PRUNE_TOLERANCE={settings.PRUNE_TOLERANCE} is outside the usual range (0, 1e-6).")
