"""Exception types shared across the package."""


class FreqSucError(Exception):
    pass


class SchemaError(FreqSucError, ValueError):
    """A configuration file does not parse or lacks a documented field."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ValidationError(FreqSucError, ValueError):
    """A value parses but violates a type invariant."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class AssumptionError(FreqSucError, ValueError):
    """Inputs fall outside the regime a closed-form expression was derived for."""


class NumericError(FreqSucError, ArithmeticError):
    pass


class ModelError(FreqSucError, ValueError):
    """Misuse of the MILP builder (duplicate names, foreign handles, bad bounds)."""


class SolverError(FreqSucError, RuntimeError):
    def __init__(self, message, step=None, partial=None):
        self.step = step
        self.partial = partial
        super().__init__(message)


class ConfigurationError(FreqSucError, RuntimeError):
    """A requested backend or resource is not available."""
