"""Exception types shared across the package."""


class ScalePressError(Exception):
    """Base class for package-specific errors."""


class InvalidArgumentError(ScalePressError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(ScalePressError, ValueError):
    """A numeric argument lies outside the domain of the function."""


class SizeLimitError(ScalePressError, RuntimeError):
    """An exact computation would exceed the configured size caps."""


class InvalidSystemError(ScalePressError, ValueError):
    """A finite system violates one of its structural invariants."""


class ConfigError(ScalePressError, ValueError):
    """Experiment configuration failed validation.

    Carries the full list of offending fields so a single run reports
    every problem at once.
    """

    def __init__(self, problems):
        self.problems = tuple(problems)
        super().__init__("invalid config: " + "; ".join(self.problems))
