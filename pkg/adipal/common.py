"""Shared configuration, logging and errors for adipal."""

import logging
import os
from pathlib import Path

# Configuration
# Every value can be overridden through an ADIPAL_* environment variable.
PSD_TOL = float(os.getenv("ADIPAL_PSD_TOL", "1e-12"))
STABILITY_TOL = float(os.getenv("ADIPAL_STABILITY_TOL", "1e-12"))
STRICT_MODE = os.getenv("ADIPAL_STRICT", "true").lower() == "true"
WORKERS = int(os.getenv("ADIPAL_WORKERS", "1"))
ENABLE_AUDIT_LOG = os.getenv("ADIPAL_AUDIT_LOG", "true").lower() == "true"
LOG_LEVEL = os.getenv("ADIPAL_LOG_LEVEL", "INFO").upper()

# Run log and caches live under ~/.adipal/ unless ADIPAL_HOME says otherwise
ADIPAL_DIR = Path(os.getenv("ADIPAL_HOME", str(Path.home() / ".adipal")))
AUDIT_LOG_FILE = ADIPAL_DIR / "audit.log"


class AdipalError(Exception):
    """Base class for all errors raised by adipal."""


class StructureError(AdipalError, ValueError):
    """Input has the wrong shape: non-square, asymmetric or mismatched dimensions."""


class ParameterError(AdipalError, ValueError):
    """A scalar argument is outside its admissible range."""


class InconsistentMatrixError(AdipalError, ValueError):
    """A diffusion matrix couples a direction that has no diffusion of its own."""


class DomainError(AdipalError, ValueError):
    """Argument lies outside the domain where a formula is defined."""


class UnsupportedDimensionError(AdipalError, ValueError):
    """Requested a result that is only available for some spatial dimensions."""


class ConsistencyError(AdipalError, RuntimeError):
    """An internal numerical consistency check failed."""


class ConfigError(AdipalError, ValueError):
    """A problem or experiment file could not be understood."""


class InstabilityError(AdipalError, ArithmeticError):
    """A time step produced non-finite values.

    Attributes:
        step_index: 1-based index of the step that overflowed (None when unknown)
        stage: Name of the stage where the first non-finite value appeared
    """

    def __init__(self, step_index, stage: str = ""):
        self.step_index = step_index
        self.stage = stage
        where = f" in stage {stage}" if stage else ""
        super().__init__(
            f"Non-finite values at step {step_index}{where}.\n"
            f"The scheme is unstable for this step size and theta. "
            f"Set ADIPAL_STRICT=false to let the run continue and record an infinite error."
        )


# Audit logging setup with rotation
audit_logger = logging.getLogger("adipal.audit")
if ENABLE_AUDIT_LOG and not audit_logger.handlers:
    from logging.handlers import RotatingFileHandler

    try:
        ADIPAL_DIR.mkdir(parents=True, exist_ok=True)
        audit_logger.setLevel(getattr(logging, LOG_LEVEL, logging.INFO))
        # Rotate at 10MB, keep 3 backup files
        handler = RotatingFileHandler(
            AUDIT_LOG_FILE,
            maxBytes=10 * 1024 * 1024,
            backupCount=3,
        )
        handler.setFormatter(logging.Formatter("%(asctime)s - %(levelname)s - %(message)s"))
        audit_logger.addHandler(handler)
    except OSError:
        # Read-only home: keep running without a run log
        audit_logger.addHandler(logging.NullHandler())
