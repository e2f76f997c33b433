"""Exception hierarchy shared by every module.

The CLI maps these onto process exit codes, so raising the right class
matters more than the message text.
"""


class MtlcError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(MtlcError):
    """A caller violated an operation's precondition."""


class ShapeError(ContractError):
    """Array dimensions do not line up; message names both shapes."""


class ConfigError(MtlcError):
    """Invalid run configuration (exit code 2)."""


class DataError(MtlcError):
    """Corpus ingestion or schema failure (exit code 3)."""


class NumericalError(MtlcError):
    """Non-finite values or a non-converging numeric routine (exit code 4)."""


class CorruptArtifactError(MtlcError):
    """A checkpoint or other stored artifact failed validation (exit code 5)."""
