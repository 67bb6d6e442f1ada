import os
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Self

from superell.errors import ConfigError

DEFAULT_BUDGET = 10**7
DEFAULT_MAX_FIELD_ORDER = 1 << 16
DEFAULT_ERROR_CONSTANT = 4
DEFAULT_SHARD_SIZE = 10_000
DEFAULT_RANGE_SHARD_SIZE = 1 << 16
DEFAULT_REJECTION_FACTOR = 1000

BUDGET_ENV = "SUPERELL_BUDGET"
MAX_FIELD_ORDER_ENV = "SUPERELL_MAX_FIELD_ORDER"
REJECTION_FACTOR_ENV = "SUPERELL_REJECTION_FACTOR"


@dataclass(frozen=True)
class Settings:
    """Process-wide knobs shared by the harness."""

    budget: int = DEFAULT_BUDGET
    "Maximum number of polynomials an exhaustive enumeration may visit"

    max_field_order: int = DEFAULT_MAX_FIELD_ORDER
    "Largest q for which field tables are built (also bounds oracle extensions)"

    error_constant: int = DEFAULT_ERROR_CONSTANT
    "C in the interpolation envelope C * q^(d/n + 1)"

    shard_size: int = DEFAULT_SHARD_SIZE
    "Monte-Carlo samples per shard; fixes the random streams independently of workers"

    range_shard_size: int = DEFAULT_RANGE_SHARD_SIZE
    "Enumeration positions per exhaustive or counting shard"

    rejection_factor: int = DEFAULT_REJECTION_FACTOR
    "A sample shard gives up after rejection_factor * (quota + 1) draws"

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> Self:
        """
        Build settings from defaults overridden by environment variables.

        Raises:
            ConfigError: If a variable is set but is not a positive integer.
        """
        env = os.environ if environ is None else environ
        settings = cls()
        if BUDGET_ENV in env:
            settings = replace(settings, budget=_positive_int(BUDGET_ENV, env[BUDGET_ENV]))
        if MAX_FIELD_ORDER_ENV in env:
            settings = replace(
                settings,
                max_field_order=_positive_int(MAX_FIELD_ORDER_ENV, env[MAX_FIELD_ORDER_ENV]),
            )
        if REJECTION_FACTOR_ENV in env:
            settings = replace(
                settings,
                rejection_factor=_positive_int(REJECTION_FACTOR_ENV, env[REJECTION_FACTOR_ENV]),
            )
        return settings


def _positive_int(name: str, raw: str) -> int:
    try:
        value = int(raw.strip().replace("_", ""))
    except ValueError:
        raise ConfigError(f"{name}: expected a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{name}: expected a positive integer, got {raw!r}")
    return value
