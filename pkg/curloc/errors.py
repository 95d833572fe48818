import typing


class InputError(ValueError):
    """A value passed to an operation lies outside its domain."""


class ConfigError(ValueError):
    """A configuration is internally inconsistent."""


class GradientError(ArithmeticError):
    def __init__(self, component: str, value: float):
        super().__init__(
            f"Non-finite gradient in {component}: {value!r}, step rejected"
        )
        self.component = component
        self.value = value

    def __reduce__(self) -> tuple[typing.Any, ...]:
        return (self.__class__, (self.component, self.value))


class RunError(RuntimeError):
    """A component failed inside a training run.

    The failing step index is kept on the exception and the original error
    is chained as ``__cause__``.
    """

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step
        self.message = message

    def __reduce__(self) -> tuple[typing.Any, ...]:
        # rebuilt from its fields when sent back from a worker process
        return (self.__class__, (self.step, self.message))

    @classmethod
    def from_exception(cls, step: int, error: Exception) -> "RunError":
        return cls(step, f"{type(error).__name__}: {error}")

