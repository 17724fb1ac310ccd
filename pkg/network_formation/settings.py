"""
Package-wide defaults

Values may be overridden with NETFORM_<NAME> environment variables; nothing
is required to be set.
"""
import os
from typing import Any, Dict

DEFAULTS: Dict[str, Any] = {
    'SNAPSHOT_STRIDE': 10,
    'BATCH_SIZE': 256,
    'MAX_WORKERS': 1,
    'FIXATION_TOL': 0.01,
    'RANK_REL_TOL': 0.05,
    'TRAP_TOL': 0.05,
    'FLOAT_FORMAT': '{:.6f}',
    'STATISTIC_FORMAT': '{:.6g}',
    'LOG_LEVEL': 'WARNING',
    'ENV_PREFIX': 'NETFORM_',
}


def get(name: str, default: Any = None) -> Any:
    """Return a setting, preferring the environment over package defaults"""
    fallback = DEFAULTS.get(name, default)
    raw = os.environ.get(DEFAULTS['ENV_PREFIX'] + name)
    if raw is None:
        return fallback
    if isinstance(fallback, bool):
        return raw.lower() in ('1', 'true', 'yes')
    if isinstance(fallback, int):
        return int(raw)
    if isinstance(fallback, float):
        return float(raw)
    return raw
