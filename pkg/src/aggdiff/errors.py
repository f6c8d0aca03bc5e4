"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    pass


class InvalidDataError(ValueError):
    pass


class NumericalBlowupError(ArithmeticError):
    """The state stopped being finite. ``time`` is when it was detected."""

    def __init__(self, message, time):
        super().__init__(f"{message} (t={time!r})")
        self.time = time


class StiffnessAbortError(NumericalBlowupError):
    """The CFL time step fell below ``dt_min``."""


class DegenerateProfileError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


class PreconditionError(ValueError):
    def __init__(self, hypothesis, message):
        super().__init__(f"{hypothesis}: {message}")
        self.hypothesis = hypothesis


class ConfigError(ValueError):
    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key
