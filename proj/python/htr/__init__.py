"""Python front end for the hybrid transactional replication simulator."""

from ._htr import (
    ConfigError,
    FaultBoundError,
    InputError,
    check,
    corrupt,
    counterexample,
    run,
)

__all__ = ["ConfigError", "FaultBoundError", "InputError", "check", "corrupt", "counterexample", "run"]
