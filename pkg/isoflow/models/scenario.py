import itertools
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from isoflow.models.catalog import Provenance
from isoflow.models.flow import Route

SCHEMA_VERSION = 1


class ScenarioKind(str, Enum):
    FLOW_RUN = "FlowRun"
    JACOBI_PROBE = "JacobiProbe"
    CATALOG_VERIFY = "CatalogVerify"
    BUMP_EXPERIMENT = "BumpExperiment"
    SWEEP = "Sweep"


class FamilyRef(BaseModel):
    """Catalog family by name with its parameters"""

    model_config = ConfigDict(extra="forbid")

    name: str
    params: Dict[str, float] = Field(default_factory=dict)


class BumpParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p: Tuple[float, float]
    h: float
    sigma: float
    R: float
    O: Tuple[float, float] = (0.0, 0.0)
    vertices: Optional[int] = Field(None, ge=16)
    dt: Optional[float] = Field(None, gt=0)
    floor: Optional[float] = Field(None, ge=0)

    def space(self) -> Dict[str, Any]:
        """AmbientSpec data of the product this experiment lives in"""
        return {"family": "BumpProduct", "p": self.p, "h": self.h, "sigma": self.sigma, "R": self.R, "O": self.O}


class Scenario(BaseModel):
    """One run described by a scenario file"""

    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1]
    id: str = Field("run", pattern=r"^[A-Za-z0-9_.-]+$")
    kind: ScenarioKind

    # FlowRun, JacobiProbe and sweeps over them
    family: Optional[FamilyRef] = None
    route: Route = Route.CATALOG
    t_max: Optional[float] = Field(None, gt=0)
    samples: int = Field(200, ge=10)

    # JacobiProbe
    r_max: Optional[float] = Field(None, gt=0)
    r_steps: int = Field(200, ge=5)

    # CatalogVerify, empty means the default catalog
    families: List[FamilyRef] = Field(default_factory=list)

    # BumpExperiment
    bump: Optional[BumpParams] = None

    # Sweep
    child_kind: Optional[ScenarioKind] = None
    sweep: Dict[str, List[float]] = Field(default_factory=dict)

    tolerances: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_kind(self) -> "Scenario":
        errors = []
        kind = self.child_kind if self.kind == ScenarioKind.SWEEP else self.kind

        if self.kind == ScenarioKind.SWEEP:
            if self.child_kind is None:
                errors.append("child_kind is required for a Sweep")
            elif self.child_kind in (ScenarioKind.SWEEP, ScenarioKind.CATALOG_VERIFY):
                errors.append(f"cannot sweep over {self.child_kind.value}")
            if not self.sweep:
                errors.append("sweep must name at least one parameter")
            for key, values in self.sweep.items():
                if not values:
                    errors.append(f"sweep.{key} has no values")
        elif self.sweep or self.child_kind is not None:
            errors.append("sweep and child_kind are only valid for a Sweep")

        if kind in (ScenarioKind.FLOW_RUN, ScenarioKind.JACOBI_PROBE) and self.family is None:
            errors.append(f"family is required for {kind.value}")
        if kind == ScenarioKind.BUMP_EXPERIMENT and self.bump is None:
            errors.append("bump is required for BumpExperiment")

        if errors:
            raise ValueError("; ".join(errors))
        return self

    @property
    def run_kind(self) -> ScenarioKind:
        return self.child_kind if self.kind == ScenarioKind.SWEEP else self.kind

    def family_refs(self) -> List[FamilyRef]:
        refs = list(self.families)
        if self.family is not None:
            refs.append(self.family)
        return refs

    def expand(self) -> List["Scenario"]:
        """Child scenarios of a sweep, the cartesian product of the swept values"""
        if self.kind != ScenarioKind.SWEEP:
            return [self]

        keys = sorted(self.sweep)
        children = []
        for index, values in enumerate(itertools.product(*(self.sweep[k] for k in keys))):
            data = self.model_dump(mode="json", exclude={"sweep", "child_kind"})
            data["kind"] = self.child_kind.value
            data["id"] = f"{self.id}-{index:03d}"
            for key, value in zip(keys, values):
                if data.get("bump") is not None and key in BumpParams.model_fields:
                    data["bump"][key] = value
                elif key in Scenario.model_fields or data.get("family") is None:
                    data[key] = value
                else:
                    data["family"]["params"][key] = value
            children.append(Scenario.model_validate(data))
        return children


class CheckStatus(str, Enum):
    PASSED = "passed"
    FAILED = "failed"
    FLAGGED = "flagged"   # reported, does not fail the run
    SKIPPED = "skipped"


class Check(BaseModel):
    """One verification with the provenance of the formula it compares against"""

    name: str
    family: Optional[str] = None
    status: CheckStatus
    value: Optional[float] = None
    tolerance: Optional[float] = None
    provenance: Optional[Provenance] = None
    note: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.status == CheckStatus.FAILED

    @classmethod
    def compare(
        cls,
        name: str,
        value: float,
        tolerance: float,
        family: Optional[str] = None,
        provenance: Optional[Provenance] = None,
        note: Optional[str] = None,
    ) -> "Check":
        status = CheckStatus.PASSED if value <= tolerance else CheckStatus.FAILED
        return cls(
            name=name, family=family, status=status, value=value,
            tolerance=tolerance, provenance=provenance, note=note,
        )


class ScenarioResult(BaseModel):
    """Outcome of run_scenario"""

    id: str
    kind: ScenarioKind
    checks: List[Check] = Field(default_factory=list)
    artifacts: List[str] = Field(default_factory=list)
    errors: List[str] = Field(default_factory=list)
    children: List["ScenarioResult"] = Field(default_factory=list)
    details: Dict[str, Any] = Field(default_factory=dict)

    @property
    def failures(self) -> List[Check]:
        own = [c for c in self.checks if c.failed]
        return own + [f for child in self.children for f in child.failures]

    @property
    def all_errors(self) -> List[str]:
        return self.errors + [e for child in self.children for e in child.all_errors]

    @property
    def passed(self) -> bool:
        return not self.failures and not self.all_errors

    def summary(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "kind": self.kind.value,
            "passed": self.passed,
            "checks": [c.model_dump(mode="json") for c in self.checks],
            "failures": [c.model_dump(mode="json") for c in self.failures],
            "errors": self.all_errors,
            "artifacts": sorted(self.artifacts),
            "details": self.details,
            "children": [child.summary() for child in self.children],
        }


ScenarioResult.model_rebuild()
