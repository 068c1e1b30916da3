"""Exception types shared across the toolkit."""


class FormatError(ValueError):
    """Malformed binary input (CIFAR records, PPM streams)."""


class CorruptRecordError(FormatError):
    """A structurally valid record with an illegal field (e.g. label byte > 9)."""


class DimensionError(ValueError):
    """Array dimensions violate an operation's contract."""


class CheckpointFormatError(ValueError):
    """Checkpoint bytes fail the magic/version/shape guards."""


class ConfigError(ValueError):
    """Experiment configuration cannot be executed as given."""


class UndefinedRateError(ValueError):
    """A rate was requested over an empty denominator."""


class InvariantError(RuntimeError):
    """A harness re-verification of an attack invariant failed."""
