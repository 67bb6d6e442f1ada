class SuperellError(Exception):
    """Base class for all errors raised by superell."""


class FieldError(SuperellError, ValueError):
    """Invalid field construction or field arithmetic (e.g. inverting zero)."""


class PolynomialError(SuperellError, ValueError):
    """Invalid polynomial input, such as a zero polynomial where f != 0 is required."""


class TheoryError(SuperellError, ValueError):
    """Parameters outside the standing hypotheses, such as gcd(q, m) != 1 or n < 2."""


class ConfigError(SuperellError, ValueError):
    """Experiment configuration or environment settings are unusable."""


class GeometricallyReducibleError(SuperellError):
    """The normalization count was requested for a geometrically reducible curve."""


class SplittingFieldTooLarge(SuperellError):
    """The splitting extension needed by the Frobenius oracle exceeds the field bound."""


class BudgetExceeded(SuperellError):
    """An exhaustive enumeration would exceed the configured budget."""
