"""Run configuration assembled from command line flags and the environment."""
import argparse
import logging
import os
from dataclasses import dataclass
from typing import Mapping, Optional

from gkit.constants import KG_REAL_UPPER, Constants
from gkit.exceptions import ConfigError

logger = logging.getLogger(__name__)

THREADS_ENV = "GKIT_THREADS"
FORMATS = ("json", "csv")


def default_threads(environ: Optional[Mapping[str, str]] = None) -> int:
    """Worker count from ``GKIT_THREADS``, else every available cpu."""
    environ = os.environ if environ is None else environ
    raw = environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer")


@dataclass(frozen=True)
class RunConfig:
    tol: float = 1e-10
    seed: int = 0
    kg_effective: float = KG_REAL_UPPER
    enum_limit: int = 22
    threads: int = 1
    output: Optional[str] = None
    fmt: str = "json"

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol!r}")
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed!r}")
        if self.enum_limit < 1:
            raise ConfigError(f"enum_limit must be at least 1, got {self.enum_limit!r}")
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads!r}")
        if self.fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.fmt!r}")
        # raises ConfigError on kg_effective below the known lower bound
        self.constants

    @property
    def constants(self) -> Constants:
        return Constants(kg_effective=self.kg_effective)

    @classmethod
    def from_args(
        cls, args: argparse.Namespace, environ: Optional[Mapping[str, str]] = None
    ) -> "RunConfig":
        """Build the configuration from parsed flags.

        ``--threads`` wins over ``GKIT_THREADS``, which wins over the cpu count.
        """
        threads = getattr(args, "threads", None)
        if threads is None:
            threads = default_threads(environ)
        config = cls(
            tol=args.tol,
            seed=args.seed,
            kg_effective=args.kg,
            enum_limit=args.enum_limit,
            threads=threads,
            output=args.output,
            fmt=args.format,
        )
        logger.debug("run configuration: %s", config)
        return config
