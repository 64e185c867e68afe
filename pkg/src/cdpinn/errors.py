"""Exception hierarchy shared by every cdpinn module."""


class CdpinnError(Exception):
    """Base class for all package errors."""


class DimensionError(CdpinnError, ValueError):
    pass


class HermiticityError(CdpinnError, ValueError):
    pass


class ScopeError(CdpinnError, ValueError):
    pass


class ConfigError(CdpinnError, ValueError):
    pass


class FormatError(CdpinnError, ValueError):
    pass


class UnsupportedVersion(FormatError):
    pass


class ValidationError(CdpinnError, ValueError):
    """A problem definition violates an invariant.

    ``check`` names the failed check, e.g. ``"hermiticity"`` or ``"dimension"``.
    """

    def __init__(self, check, message=None):
        self.check = check
        super().__init__(check if message is None else f"{check}: {message}")


class UnknownDistanceError(CdpinnError, KeyError):
    def __init__(self, distance, supported):
        self.distance = distance
        self.supported = tuple(supported)
        super().__init__(
            f"no built-in H2 data for d={distance!r}; supported: "
            + ", ".join(f"h2:{d:.1f}" for d in self.supported)
        )

    def __str__(self):
        return self.args[0]


class NumericsError(CdpinnError, ArithmeticError):
    def __init__(self, message, epoch=None, coordinate=None, last_checkpoint=None):
        self.epoch = epoch
        self.coordinate = coordinate
        self.last_checkpoint = last_checkpoint
        super().__init__(message)


class DegenerateSpectrumError(CdpinnError, ArithmeticError):
    def __init__(self, m, n, gap):
        self.m, self.n, self.gap = m, n, gap
        super().__init__(f"coupled degeneracy between levels {m} and {n} (gap {gap:.3e})")


class IllConditionedError(CdpinnError, ArithmeticError):
    def __init__(self, message, condition_number):
        self.condition_number = condition_number
        super().__init__(f"{message} (condition number {condition_number:.3e})")


class StepSizeError(CdpinnError, ArithmeticError):
    def __init__(self, drift, t, dt):
        self.drift, self.t, self.dt = drift, t, dt
        super().__init__(
            f"norm drift {drift:.3e} at t={t:.6g} exceeds 1e-6; reduce dt (currently {dt:g})"
        )
