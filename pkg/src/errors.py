"""
Exception hierarchy shared by the analysis, simulation and CLI layers
"""


class RCPError(Exception):
    """Base class for all toolkit errors"""


class ParameterError(RCPError, ValueError):
    """Invalid parameter or argument outside the model's domain"""


class ConsistencyError(RCPError):
    """Derived quantities contradict each other"""


class NumericalError(RCPError):
    """A numerical procedure failed"""


class IntegrationError(NumericalError):
    """Non-finite state produced by the fluid integrator"""

    def __init__(self, message, step=None, time=None, value=None):
        details = []
        if step is not None:
            details.append(f"step={step}")
        if time is not None:
            details.append(f"t={time:.6g}")
        if value is not None:
            details.append(f"value={value!r}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)
        self.step = step
        self.time = time
        self.value = value


class DegenerateParametersError(NumericalError):
    """Normal-form constant undefined for these parameters"""


class ResonanceError(NumericalError):
    """Second-harmonic denominator vanishes"""


class OracleDisagreementError(NumericalError):
    """Analytic stability verdict and numerical root scan disagree"""
