"""
Tariff Game Data Structures

Defines the model description documents, solver configuration and result
structures of the tariff game. Pydantic is used for strong typing and JSON
round-tripping of everything the command line reads or writes.
"""

from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

DEFAULT_M = 100.0


class Family(str, Enum):
    """Currency-demand function family"""
    RATIONAL_SQUARE = "rational_square"
    CLIPPED_LINEAR = "clipped_linear"
    EXPONENTIAL = "exponential"
    CLIPPED_EXP_GROWTH = "clipped_exp_growth"
    EMPIRICAL = "empirical"


class Role(str, Enum):
    """Which nation's demand a function describes (also the side of a player)"""
    DOMESTIC = "domestic"
    FOREIGN = "foreign"


class RootMultiplicity(str, Enum):
    UNIQUE = "unique"
    MULTIPLE_DETECTED = "multiple_detected"


class GainMethod(str, Enum):
    QUADRATURE = "quadrature"
    EXPECTATION_SUM = "expectation_sum"


# --- Model Description Documents ---

class FamilySpec(BaseModel):
    """One demand function in the model JSON document"""
    family: Family
    params: Dict[str, Any] = Field(default_factory=dict, description="Family parameters")


class ModelSpec(BaseModel):
    """Model JSON document: {"domestic": ..., "foreign": ..., "M": 100}"""
    model_config = ConfigDict(populate_by_name=True)

    domestic: FamilySpec
    foreign: FamilySpec
    M: float = Field(DEFAULT_M, gt=1.0, description="Truncation bound of the rate/tariff box")
    symmetric: Optional[bool] = Field(
        None, description="Symmetric-nations flag; detected on a grid when omitted"
    )


# --- Solver Configuration ---

class SolverConfig(BaseModel):
    """Brackets, tolerances, iteration caps, grid densities and RNG seed"""
    tol_root: float = Field(1e-10, gt=0, description="Absolute x-tolerance of the rate bisection")
    tol_root_oracle: float = Field(1e-14, gt=0, description="Rate tolerance inside best responses")
    tol_nash: float = Field(1e-8, gt=0, description="Max |residual| of an accepted Nash triple")
    tol_sym: float = Field(1e-9, gt=0, description="Tolerance of the symmetric-nations check")
    max_newton_iters: int = Field(100, ge=1)
    newton_damping: float = Field(0.5, gt=0, lt=1, description="Step shrink factor")
    newton_starts: int = Field(6, ge=1, description="Seeds handed to Newton")
    jacobian_step: float = Field(1e-6, gt=0)
    scan_points: int = Field(2048, ge=2, description="Log-spaced balance scan on [1/M, M]")
    seed_grid: int = Field(24, ge=8, description="Seed scan resolution per tariff")
    best_response_grid: int = Field(256, ge=3)
    tol_argmax: float = Field(1e-6, gt=0)
    max_rounds: int = Field(200, ge=1, description="Best-response iteration cap")
    quad_epsabs: float = Field(1e-12, gt=0)
    quad_epsrel: float = Field(1e-12, gt=0)
    quad_limit: int = Field(200, ge=10)
    rng_seed: int = Field(20240501, ge=0)


class LoggingSettings(BaseModel):
    level: str = "INFO"


class OutputSettings(BaseModel):
    significant_digits: int = Field(12, ge=1, le=17)
    write_manifest: bool = True
    workers: int = Field(4, ge=1)


class AppConfig(BaseModel):
    """Global Application Configuration"""
    solver: SolverConfig = Field(default_factory=SolverConfig)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)


# --- Tariffs and Equilibrium Results ---

class TariffPair(BaseModel):
    """Retained fractions (theta, theta*); the tariff rates are 1-theta and 1-theta*"""
    model_config = ConfigDict(frozen=True)

    theta: float
    theta_star: float

    def swapped(self) -> "TariffPair":
        return TariffPair(theta=self.theta_star, theta_star=self.theta)


class RateSolution(BaseModel):
    """Equilibrium exchange rate for a fixed tariff pair"""
    rate_e: float
    residual: float
    bracket: Tuple[float, float]
    root_multiplicity: RootMultiplicity = RootMultiplicity.UNIQUE
    roots: List[float] = Field(default_factory=list, description="All roots found on the scan")
    at_boundary: bool = Field(False, description="Root sits on the edge of [1/M, M]")


class RateSensitivities(BaseModel):
    """Implicit derivatives e_theta, e_theta* of the equilibrium rate"""
    de_dtheta: float
    de_dtheta_star: float
    denominator: float


class GainReport(BaseModel):
    """Gain from trade of both nations at one (e, theta, theta*)"""
    gain_domestic: float
    gain_foreign: float
    method: GainMethod
    truncation_error_bound: float = 0.0
    regularized: bool = Field(
        False, description="A divergent tail was cut at U; the gain is shifted by a constant"
    )
    standard_error_domestic: Optional[float] = None
    standard_error_foreign: Optional[float] = None
    rate_e: Optional[float] = None
    theta: Optional[float] = None
    theta_star: Optional[float] = None


class EquilibriumTriple(BaseModel):
    """Nash triple (e, theta, theta*) with its diagnostics"""
    e_hat: float
    theta_hat: float
    theta_star_hat: float
    foc_residuals: Tuple[float, float, float]
    soc_pass: Tuple[bool, bool] = (False, False)
    sensitivities: Optional[RateSensitivities] = None
    boundary_flag: bool = False
    method: str = "newton"
    gain_domestic: Optional[float] = None
    gain_foreign: Optional[float] = None
    candidates: List[Dict[str, Any]] = Field(default_factory=list)
    diagnostics: Dict[str, Any] = Field(default_factory=dict)

    @property
    def tariffs(self) -> TariffPair:
        return TariffPair(theta=self.theta_hat, theta_star=self.theta_star_hat)

    @property
    def residual_norm(self) -> float:
        return float(max(abs(r) for r in self.foc_residuals))

    @property
    def accepted(self) -> bool:
        return all(self.soc_pass) and not self.boundary_flag


# --- Diagnostic Reports ---

class MonotoneReport(BaseModel):
    passed: bool
    role: Role
    grid_n: int
    violation: Optional[Tuple[float, float, float, float]] = Field(
        None, description="First violating pair (x1, D(x1), x2, D(x2))"
    )
    out_of_range: List[float] = Field(default_factory=list, description="Grid x with D(x) outside [0,1]")


class ReciprocalRateReport(BaseModel):
    rate: float
    rate_swapped: float
    product_error: float


class SymmetryGainReport(BaseModel):
    rate: float
    gain_domestic: float
    gain_foreign_swapped: float
    difference: float


class SecondOrderReport(BaseModel):
    """Second-order condition values; ine1 < 0 and ine2 > 0 at a maximum"""
    ine1: float
    ine2: float
    ine2_literal: float
    curvature_domestic: float
    curvature_foreign: float

    @property
    def passed(self) -> Tuple[bool, bool]:
        return (self.ine1 < 0.0, self.ine2 > 0.0)


# --- Monte Carlo Scenario ---

class LogNormalLaw(BaseModel):
    law: Literal["lognormal"] = "lognormal"
    mu: float = 0.0
    sigma: float = Field(1.0, gt=0)


class UniformLaw(BaseModel):
    law: Literal["uniform"] = "uniform"
    a: float = Field(..., gt=0, description="Lower bound (strictly positive support)")
    b: float

    @model_validator(mode="after")
    def _ordered(self) -> "UniformLaw":
        if self.b <= self.a:
            raise ValueError(f"uniform law needs a < b, got a={self.a}, b={self.b}")
        return self


class ConstantLaw(BaseModel):
    law: Literal["constant"] = "constant"
    c: float = Field(..., gt=0)


class LomaxLaw(BaseModel):
    """Pareto type II law with survival (1 + x/scale)^-shape"""
    law: Literal["lomax"] = "lomax"
    shape: float = Field(..., gt=0)
    scale: float = Field(1.0, gt=0)


DistributionSpec = Annotated[
    Union[LogNormalLaw, UniformLaw, ConstantLaw, LomaxLaw], Field(discriminator="law")
]


class ScenarioSpec(BaseModel):
    """Laws of the commodity universe (p, p*, d, d*)"""
    n: int = Field(..., ge=1, description="Number of commodities")
    p: DistributionSpec
    p_star: DistributionSpec
    d: DistributionSpec
    d_star: DistributionSpec
    rng_seed: int = Field(20240501, ge=0)


class RunManifest(BaseModel):
    """Provenance record written next to every output file"""
    command: str
    model_digest: Optional[str] = None
    config: Dict[str, Any] = Field(default_factory=dict)
    tool_version: str
    rng_seed: Optional[int] = None
    rng_algorithm: Optional[str] = None
    wall_time: float = 0.0
    created_at: str = ""
    extra: Dict[str, Any] = Field(default_factory=dict, description="Command-specific facts")


# --- Reproduction Report ---

class ReproductionCheck(BaseModel):
    """One compared quantity of a worked example"""
    block: str
    quantity: str
    expected: float
    actual: Optional[float] = None
    tolerance: float
    passed: bool = False
    note: str = ""


class ReproductionReport(BaseModel):
    checks: List[ReproductionCheck] = Field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[ReproductionCheck]:
        return [c for c in self.checks if not c.passed]
