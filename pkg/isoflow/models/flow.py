from enum import Enum
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class FlowStatus(str, Enum):
    RUNNING = "Running"
    FOCAL_REACHED = "FocalReached"   # epsilon reached the stop gap before the focal radius
    BLOW_UP = "BlowUp"               # |H| over threshold or step size underflow
    CONVERGED = "Converged"          # H vanished, the parallels approach a minimal one
    MAX_TIME = "MaxTime"


class SingularityType(str, Enum):
    TYPE_I = "TypeI"
    TYPE_II = "TypeII"
    NO_SINGULARITY = "NoSingularity"


class Route(str, Enum):
    CATALOG = "catalog"   # closed-form H(r) of the family
    JACOBI = "jacobi"     # H(r) from the numerically propagated D(r)


class FlowDescriptor(BaseModel):
    """Everything the reduced flow needs about one family, in the family's own sign"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    n: int
    route: Route = Route.CATALOG
    H_of_r: Callable[[float], float]
    normA2_of_r: Callable[[float], float]
    detD_of_r: Callable[[float], float]
    focal_r: Optional[float] = None
    ricci_normal: float = 0.0

    @property
    def orientation(self) -> int:
        """Sign of H(0); the flow moves toward this side"""
        return -1 if self.H_of_r(0.0) < 0 else 1


class FlowSample(BaseModel):
    t: float
    epsilon: float
    H: float
    normA2: float
    detD: float


TRAJECTORY_COLUMNS = ["t", "epsilon", "H", "normA2", "detD"]


class FlowTrajectory(BaseModel):
    """Sampled solution of epsilon' = H(epsilon)"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    descriptor: FlowDescriptor
    samples: List[FlowSample] = Field(default_factory=list)
    status: FlowStatus = FlowStatus.RUNNING
    T_est: Optional[float] = None
    t_end: float = 0.0
    orientation: int = 1
    # crossing times of the focal gaps, keyed by the gap value
    gap_times: Dict[float, float] = Field(default_factory=dict)
    epsilon_at: Optional[Callable[[float], float]] = None
    message: Optional[str] = None

    def arrays(self):
        t = np.array([s.t for s in self.samples])
        eps = np.array([s.epsilon for s in self.samples])
        H = np.array([s.H for s in self.samples])
        normA2 = np.array([s.normA2 for s in self.samples])
        return t, eps, H, normA2

    def rows(self):
        for s in self.samples:
            yield [s.t, s.epsilon, s.H, s.normA2, s.detD]

    @property
    def final(self) -> FlowSample:
        return self.samples[-1]


class SingularityReport(BaseModel):
    """Singular time, focal displacement and Type I/II classification"""

    T: Optional[float] = None
    T_richardson: Optional[float] = None
    T_tail: Optional[float] = None
    focal_r: Optional[float] = None
    type: SingularityType = SingularityType.NO_SINGULARITY
    Lambda: Optional[float] = None
    Lambda_half_window: Optional[float] = None
    Lambda_spread: Optional[float] = None
    window_stable: Optional[bool] = None
    bound_ok: Optional[bool] = None
    notes: List[str] = Field(default_factory=list)


class BoundCheck(BaseModel):
    """Outcome of the |A|^2 <= C~/(exp(2(T - t)) - 1) diagnostic"""

    ok: bool
    skipped: bool = False
    window_count: int = 0
    worst_ratio: Optional[float] = None
    slack: float = 2.0
    note: Optional[str] = None
