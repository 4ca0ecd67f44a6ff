"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Tensor shapes incompatible with the requested operation."""


class NumericError(ValueError):
    """Non-finite values where finite ones are required."""


class ConfigError(ValueError):
    """Invalid model, training, or CLI configuration."""


class CheckpointError(ValueError):
    """Unreadable or incompatible parameter container."""


class CorpusError(ValueError):
    """Malformed corpus content."""


class SchemaError(CorpusError):
    """Slot name or value outside the declared schema."""


class StructureError(CorpusError):
    """Dialog structure violation, e.g. a KB result with no preceding API call."""


class LexicalisationError(RuntimeError):
    """A template placeholder could not be filled."""
