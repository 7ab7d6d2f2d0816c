from typing import Iterable, List, Optional


class IsoFlowError(Exception):
    """Base class for every error raised by isoflow"""


class ParameterViolation(IsoFlowError):
    """One or more family preconditions failed"""

    def __init__(self, messages, family: Optional[str] = None):
        if isinstance(messages, str):
            messages = [messages]
        self.messages: List[str] = list(messages)
        self.family = family
        prefix = f"{family}: " if family else ""
        super().__init__(prefix + "; ".join(self.messages))


class DegenerateDelta(ParameterViolation):
    """E(kappa, tau) data with kappa - 4 tau^2 = 0"""


class DegenerateCurve(ParameterViolation):
    """Vertical cylinder over a geodesic (k_g = 0) has no closed form"""


class UnsupportedFamily(IsoFlowError):
    """Operation is not defined for this ambient family"""


class StepSizeUnderflow(IsoFlowError):
    """Adaptive step control stalled"""

    def __init__(self, message: str, last_time: Optional[float] = None):
        self.last_time = last_time
        super().__init__(message)


class FocalPoint(IsoFlowError):
    """D(r) is singular, the parallel hypersurface degenerates"""

    def __init__(self, r: float, det: float):
        self.r = r
        self.det = det
        super().__init__(f"focal point at r={r!r} (det D={det:.3e})")


class InsufficientSamples(IsoFlowError):
    pass


class NoSingularity(IsoFlowError):
    pass


class InconclusiveWindow(IsoFlowError):
    """Too few samples in the last decade before the singular time"""

    def __init__(self, count: int, required: int):
        self.count = count
        self.required = required
        super().__init__(f"{count} samples in final decade, need {required}")


class ModelConstructionFailure(IsoFlowError):
    pass


class DegenerateVertex(IsoFlowError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"adjacent vertices coincide at index {index}")


class StepRejected(IsoFlowError):
    """Curve lost embeddedness after a step, the caller retries with a smaller dt"""

    def __init__(self, dt: float, reason: str):
        self.dt = dt
        self.reason = reason
        super().__init__(f"step dt={dt:.3e} rejected: {reason}")


class DistanceSolverFailure(IsoFlowError):
    pass


class ConfigParseError(IsoFlowError):
    """Scenario file could not be parsed or validated"""

    def __init__(self, errors: Iterable[str]):
        self.errors: List[str] = list(errors)
        super().__init__("; ".join(self.errors))
