"""Exception hierarchy shared by the library and the command line."""


class StructBathError(Exception):
    """Base class for every error raised by this package."""


class SingularityError(StructBathError, ArithmeticError):
    """A resolvent, denominator or pole was hit (or nearly hit).

    Attributes
    ----------
    omega : float or None
        Frequency at which the singularity occurred, when known.
    where : str or None
        Human-readable location (layer, level or matrix name).
    """

    def __init__(self, message, omega=None, where=None):
        super().__init__(message)
        self.omega = omega
        self.where = where


class ConfigError(StructBathError):
    """Base class for problems with an input document."""


class ParseError(ConfigError):
    """Document is not well-formed JSON."""


class SchemaError(ConfigError):
    """Document is well-formed but violates the schema.

    ``path`` is a JSONPath-like string (``$.nodes[2].omega_ghz``).
    """

    def __init__(self, message, path="$"):
        super().__init__(f"{path}: {message}")
        self.path = path


class ValidationError(ConfigError):
    """A network violates one or more structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid network: {lines}")


class QuadratureError(StructBathError):
    """Numerical integration did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
