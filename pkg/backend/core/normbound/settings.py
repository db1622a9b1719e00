# backend/core/normbound/settings.py

import logging
import os
from dataclasses import dataclass, replace

# Defaults shared by the core modules and the CLI
DEFAULT_ROOT_TOLERANCE = 1e-13
DEFAULT_IDENTITY_TOLERANCE = 1e-10
MAX_HERMITE_DEGREE = 200
MAX_EVEN_K = 40
VERIFY_KMAX_RANGE = (2, 12)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


@dataclass(frozen=True)
class Tolerances:
    """Numerical knobs threaded through the solvers.

    Args:
        root_tolerance: relative backward error accepted for a root square.
        root_max_iterations: refinement cap per root before giving up.
        condition_cap: closed-form matching condition estimate above which a warning is attached.
        identity_tolerance: pass threshold for the half-bound identities.
        lp_pivot_tolerance: smallest pivot magnitude the simplex accepts.
        lp_feasibility_tolerance: phase-one objective / residual threshold.
        lp_active_threshold: mass above which a grid point counts as active.
        symmetry_tolerance: max |mass(x) - mass(-x)| accepted by the symmetry report.
    """
    root_tolerance: float = DEFAULT_ROOT_TOLERANCE
    root_max_iterations: int = 200
    condition_cap: float = 1e12
    identity_tolerance: float = DEFAULT_IDENTITY_TOLERANCE
    lp_pivot_tolerance: float = 1e-11
    lp_feasibility_tolerance: float = 1e-9
    lp_active_threshold: float = 1e-10
    symmetry_tolerance: float = 1e-8

    def with_overrides(self, **overrides) -> "Tolerances":
        """Copy with the given fields replaced; None values are ignored."""
        changes = {name: value for name, value in overrides.items() if value is not None}
        for name, value in changes.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        return replace(self, **changes)


DEFAULT_TOLERANCES = Tolerances()


def configure_logging(verbosity: int = 0) -> None:
    """Configure root logging once for command-line use.

    NORMBOUND_LOG_LEVEL sets the base level; each -v lowers it by one step.
    """
    base = os.environ.get("NORMBOUND_LOG_LEVEL", "WARNING").upper()
    level = getattr(logging, base, logging.WARNING)
    level = max(logging.DEBUG, level - 10 * verbosity)
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)
