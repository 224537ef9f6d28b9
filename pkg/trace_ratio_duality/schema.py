import json
from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import InstanceValidationError
from .model import NgtrpInstance, ProblemInstance, ngtrp_to_gtrp

Matrix = List[List[float]]

ASYMMETRY_TOL = 1e-8


def as_matrix(a) -> Matrix:
    """Row-major nested lists of plain floats."""
    return [[float(v) for v in row] for row in np.atleast_2d(np.asarray(a, dtype=float))]


class _Finite(BaseModel):
    model_config = ConfigDict(allow_inf_nan=False)


# === Instance files ===


class InstanceFile(_Finite):
    n: int = Field(..., ge=1, description="Number of rows of X (size of A and B).")
    p: int = Field(..., ge=1, description="Number of columns of X (size of G).")
    A: Matrix = Field(..., description="Positive definite n x n denominator matrix.")
    B: Matrix = Field(..., description="Symmetric n x n numerator matrix.")
    G: Matrix = Field(..., description="Positive definite p x p weight matrix.")
    alpha: Optional[float] = Field(
        None, description="Denominator constant of a non-homogeneous instance."
    )
    beta: Optional[float] = Field(
        None, description="Numerator constant of a non-homogeneous instance."
    )

    @model_validator(mode="after")
    def _check_shapes(self):
        if self.p > self.n:
            raise ValueError(f"p={self.p} exceeds n={self.n}")
        for name, size in (("A", self.n), ("B", self.n), ("G", self.p)):
            rows = getattr(self, name)
            if len(rows) != size or any(len(r) != size for r in rows):
                raise ValueError(f"{name} must be {size}x{size}")
            a = np.asarray(rows, dtype=float)
            scale = max(1.0, float(np.abs(a).max()))
            if np.abs(a - a.T).max() > ASYMMETRY_TOL * scale:
                raise ValueError(f"{name} is not symmetric (asymmetry above {ASYMMETRY_TOL} relative)")
        return self

    @property
    def is_ngtrp(self) -> bool:
        return self.alpha is not None or self.beta is not None

    def to_instance(self) -> tuple[ProblemInstance, "TransformSection | None"]:
        """Validated instance, homogenized first when alpha/beta are present."""
        base = ProblemInstance.create(self.A, self.B, self.G)
        if not self.is_ngtrp:
            return base, None
        ng = NgtrpInstance(base=base, alpha=self.alpha or 0.0, beta=self.beta or 0.0)
        inst = ngtrp_to_gtrp(ng)
        scale = float(np.trace(base.G))
        transform = TransformSection(
            alpha=ng.alpha, beta=ng.beta, A_shift=ng.alpha / scale, B_shift=ng.beta / scale
        )
        return inst, transform

    @classmethod
    def from_instance(cls, inst: ProblemInstance) -> "InstanceFile":
        return cls(n=inst.n, p=inst.p, A=as_matrix(inst.A), B=as_matrix(inst.B), G=as_matrix(inst.G))


class SLemmaInputFile(_Finite):
    H: Matrix = Field(..., description="Symmetric p x p matrix.")
    Q: Matrix = Field(..., description="Symmetric n x n matrix.")


# === Report sections ===


class PrimalSection(_Finite):
    value: float = Field(..., description="Optimal ratio found by Dinkelbach's method.")
    X: Matrix = Field(..., description="Maximizer with orthonormal columns.")
    iterations: int
    residual: float = Field(..., description="|F(mu)| at the final iterate.")


class DualsSection(_Finite):
    gtrp: Optional[float] = None
    gr: Optional[float] = None
    gs: Optional[float] = None
    grs: Optional[float] = None


class GapsSection(_Finite):
    gtrp: Optional[float] = None
    gs: Optional[float] = None


class GapConditionSection(_Finite):
    multiplicity: int
    holds: bool
    boundary: bool = False


class GrsCertificateSection(_Finite):
    mu: float
    M: Matrix
    W: Matrix
    minEig: float
    traceSlack: float


class GsCertificateSection(_Finite):
    rho: float
    S: Matrix
    minEig: float
    traceS: float


class CertificatesSection(_Finite):
    grs: Optional[GrsCertificateSection] = None
    gs: Optional[GsCertificateSection] = None


class TransformSection(_Finite):
    alpha: float
    beta: float
    A_shift: float = Field(..., description="alpha / tr(G), added to the diagonal of A.")
    B_shift: float = Field(..., description="beta / tr(G), added to the diagonal of B.")


class SLemmaSection(_Finite):
    kind: Literal["witness", "certificate"]
    verified: bool
    X: Optional[Matrix] = None
    value: Optional[float] = None
    M: Optional[Matrix] = None
    W: Optional[Matrix] = None
    minEig: Optional[float] = None
    traceSlack: Optional[float] = None
    violations: List[str] = Field(default_factory=list)


class MetaSection(_Finite):
    tolerances: Dict[str, float]
    seed: int
    version: str = "1"
    source: Optional[str] = None


class ReportFile(_Finite):
    primal: Optional[PrimalSection] = None
    duals: Optional[DualsSection] = None
    gaps: Optional[GapsSection] = None
    gap_condition: Optional[GapConditionSection] = None
    certificates: Optional[CertificatesSection] = None
    transform: Optional[TransformSection] = None
    slemma: Optional[SLemmaSection] = None
    meta: MetaSection


def dump_report(report: ReportFile) -> str:
    """Deterministic JSON text; floats use the shortest round-trip repr."""
    return json.dumps(report.model_dump(exclude_none=True), indent=2)


def load_report(text: str) -> ReportFile:
    return ReportFile.model_validate_json(text)


def load_instance_text(text: str, source: str = "<input>") -> InstanceFile:
    """Parse instance JSON, naming line and column on syntax errors."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceValidationError(
            f"Malformed JSON in {source} at line {e.lineno}, column {e.colno}: {e.msg}"
        )
    try:
        return InstanceFile.model_validate(data)
    except ValueError as e:
        raise InstanceValidationError(f"Invalid instance in {source}: {e}")
