"""Exception hierarchy shared across the simulator."""


class CemimoError(Exception):
    """Base class for all simulator errors."""

    def to_dict(self) -> dict:
        payload = {"error": type(self).__name__, "message": str(self)}
        payload.update({k: v for k, v in vars(self).items() if not k.startswith("_")})
        return payload


class ConfigurationError(CemimoError, ValueError):
    """Invalid parameter or inconsistent dimensions."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class NumericalRankError(CemimoError, ArithmeticError):
    """Channel Gram matrix too ill-conditioned to invert."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = float(condition)


class DivergenceError(CemimoError, ArithmeticError):
    """Non-finite objective during phase optimization (step size too large)."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = int(step)


class InfeasibleError(CemimoError):
    """No tested beamforming gain meets the interference ceiling."""

    def __init__(self, message: str, best_mui_ratio_db: float):
        super().__init__(message)
        self.best_mui_ratio_db = float(best_mui_ratio_db)


class CapacityError(CemimoError):
    """Exhaustive search would exceed the evaluation budget."""


class FitQualityError(CemimoError):
    """Polynomial PA fit residual exceeds the allowed error."""

    def __init__(self, message: str, residual_rms: float):
        super().__init__(message)
        self.residual_rms = float(residual_rms)


class NotCompressiveError(CemimoError):
    """PA gain never drops 1 dB below its small-signal value before clipping."""
