"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration or scenario parameters; no partial work is done."""


class GainSynthesisError(RuntimeError):
    """Riccati fixed-point iteration failed to converge."""

    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual
