# lrgmp - Compute resource detection and configuration
# AGPL-3.0-or-later
#
# Reports the scatter-add backend (numba JIT or numpy fallback) and sizes
# the sweep worker pool: n-1 CPU cores, RAM budget capped at 40%.
# numba is optional at runtime; missing or broken installs fall back to numpy.

import logging
import os

import psutil

from lrgmp.config import CPU_RESERVE_CORES, RAM_MAX_FRACTION
from lrgmp.message.kernels import JIT_AVAILABLE

log = logging.getLogger(__name__)


class ComputeBackend:
    NUMPY = "numpy"
    NUMBA = "numba"


class ComputeConfig:
    def __init__(self):
        logical = psutil.cpu_count(logical=True) or os.cpu_count() or 1
        self.backend      = ComputeBackend.NUMBA if JIT_AVAILABLE else ComputeBackend.NUMPY
        self.cpu_cores    = max(1, logical - CPU_RESERVE_CORES)
        self.ram_limit_gb = psutil.virtual_memory().total * RAM_MAX_FRACTION / (1024 ** 3)

    def workers_for(self, tasks: int) -> int:
        """Worker processes for `tasks` independent jobs (never more than tasks)."""
        return max(1, min(self.cpu_cores, tasks))


def detect_and_configure() -> ComputeConfig:
    cfg = ComputeConfig()
    log.debug("compute backend: %s", backend_label(cfg))
    return cfg


# Module-level singleton - populated on first use
_config: ComputeConfig | None = None


def get_config() -> ComputeConfig:
    global _config
    if _config is None:
        _config = detect_and_configure()
    return _config


def backend_label(cfg: ComputeConfig | None = None) -> str:
    cfg = cfg or get_config()
    return f"{cfg.backend} scatter · {cfg.cpu_cores} cores · {cfg.ram_limit_gb:.1f} GB RAM"
