"""Exception hierarchy shared by the estimation, cleaning and backtest code."""


class GcmError(Exception):
    """Base class for all errors raised by :mod:`gcmport`."""


class DegenerateSeries(GcmError, ValueError):
    """A series has zero dispersion under the chosen kernel."""

    def __init__(self, message, asset=None):
        super().__init__(message)
        self.asset = asset


class DegenerateFold(GcmError, ValueError):
    pass


class ZeroCrossSectionalVol(GcmError, ValueError):
    def __init__(self, t):
        super().__init__(f"cross-sectional volatility vanishes at time index {t}")
        self.t = t


class ConstantAsset(GcmError, ValueError):
    def __init__(self, i):
        super().__init__(f"asset {i} has zero standard deviation after normalization")
        self.asset = i


class NotPSD(GcmError, ValueError):
    pass


class NotSymmetric(GcmError, ValueError):
    pass


class PoleHit(GcmError, ZeroDivisionError):
    pass


class NoBulk(GcmError, ValueError):
    pass


class NegativeZeta(GcmError, ValueError):
    pass


class DimensionMismatch(GcmError, ValueError):
    pass


class SingularCovariance(GcmError, ArithmeticError):
    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class ZeroPredictor(GcmError, ValueError):
    pass


class MissingContext(GcmError, KeyError):
    pass
