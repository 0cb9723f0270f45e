"""Exception types shared across the package."""


class LeafSVError(Exception):
    """Base class for all package errors."""


class ModelParseError(LeafSVError):
    """The model document does not conform to the JSON schema."""


class ModelValidationError(LeafSVError):
    """The model document parsed but violates a structural invariant."""


class DatasetError(LeafSVError):
    """Tabular input could not be ingested."""


class UnsupportedConditioningError(LeafSVError):
    """No observation in the dataset matches the conditioning values."""

    def __init__(self, message, subset=None, values=None, instance=None):
        super().__init__(message)
        self.subset = subset
        self.values = values
        self.instance = instance


class DegenerateQueryError(LeafSVError):
    """Every compatible leaf was excluded; the reduced value is undefined."""


class ConfigError(LeafSVError):
    """Invalid run configuration or player partition."""
