"""
Commodity Monte Carlo

A commodity universe is N quadruples (p_k, p*_k, d_k, d*_k): prices in the
two national currencies and annual demands. With r_k = p_k / p*_k,

    D(x)  = sum p*_k d_k 1{r_k > x} / C_N,    C_N  = sum p*_k d_k
    D*(x) = sum p_k d*_k 1{r_k < x} / C*_N,   C*_N = sum p_k d*_k

and the gains are the matching sums over the commodities each nation imports.
Every array is drawn from its own Philox stream spawned from one SeedSequence.
"""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from loguru import logger

from src.tariff_game.demand import DemandFunction, MarketModel
from src.tariff_game.errors import ConfigError, DomainError
from src.tariff_game.gains import truncation_bound
from src.tariff_game.structures import (
    DEFAULT_M,
    ConstantLaw,
    DistributionSpec,
    Family,
    GainMethod,
    GainReport,
    LogNormalLaw,
    LomaxLaw,
    Role,
    ScenarioSpec,
    TariffPair,
    UniformLaw,
)

RNG_ALGORITHM = "numpy.random.Philox (4x64-10) streams spawned from numpy.random.SeedSequence"
STREAMS = ("p", "p_star", "d", "d_star")


@dataclass(frozen=True, eq=False)
class CommoditySample:
    """Prices and demands of a sampled commodity universe."""
    p: np.ndarray
    p_star: np.ndarray
    d: np.ndarray
    d_star: np.ndarray

    def __post_init__(self) -> None:
        arrays = [np.asarray(a, dtype=float) for a in (self.p, self.p_star, self.d, self.d_star)]
        n = arrays[0].size
        if n < 1 or any(a.ndim != 1 or a.size != n for a in arrays):
            raise DomainError("sample arrays must be non-empty, 1-d and of equal length")
        if np.any(arrays[0] <= 0) or np.any(arrays[1] <= 0):
            raise DomainError("commodity prices must be strictly positive")
        if np.any(arrays[2] < 0) or np.any(arrays[3] < 0):
            raise DomainError("commodity demands must be nonnegative")
        for name, a in zip(STREAMS, arrays):
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.c_n <= 0 or self.c_n_star <= 0:
            raise DomainError("normalisers C_N and C*_N must be positive")

    @property
    def n(self) -> int:
        return int(self.p.size)

    @property
    def ratios(self) -> np.ndarray:
        return self.p / self.p_star

    @property
    def c_n(self) -> float:
        return float(np.dot(self.p_star, self.d))

    @property
    def c_n_star(self) -> float:
        return float(np.dot(self.p, self.d_star))


def _streams(seed: int, count: int) -> list:
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def _draw(law: DistributionSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    if isinstance(law, LogNormalLaw):
        return rng.lognormal(law.mu, law.sigma, n)
    if isinstance(law, UniformLaw):
        return rng.uniform(law.a, law.b, n)
    if isinstance(law, ConstantLaw):
        return np.full(n, law.c)
    if isinstance(law, LomaxLaw):
        return law.scale * rng.pareto(law.shape, n)
    raise ConfigError(f"unsupported law {law!r}")


def sample_commodities(spec: ScenarioSpec) -> CommoditySample:
    """Draw spec.n independent commodities; deterministic for a fixed rng_seed."""
    rngs = _streams(spec.rng_seed, len(STREAMS))
    laws = (spec.p, spec.p_star, spec.d, spec.d_star)
    arrays: Dict[str, np.ndarray] = {}
    for name, law, rng in zip(STREAMS, laws, rngs):
        values = _draw(law, rng, spec.n)
        if np.any(values <= 0):
            raise DomainError(f"nonpositive draw in '{name}' ({law.law} law)")
        arrays[name] = values
    logger.info(f"Sampled {spec.n} commodities (seed={spec.rng_seed})")
    return CommoditySample(**arrays)


def empirical_demands(s: CommoditySample, M: float = DEFAULT_M) -> MarketModel:
    """Step-function pair (D, D*) keyed by the price ratios p/p*."""
    r = s.ratios
    domestic = DemandFunction(
        family=Family.EMPIRICAL,
        role=Role.DOMESTIC,
        breakpoints=r,
        weights=s.p_star * s.d,
    )
    foreign = DemandFunction(
        family=Family.EMPIRICAL,
        role=Role.FOREIGN,
        breakpoints=r,
        weights=s.p * s.d_star,
    )
    return MarketModel(demand_domestic=domestic, demand_foreign=foreign, truncation_bound_M=M)


def _ratio_terms(num: np.ndarray, den: np.ndarray) -> tuple:
    """Ratio estimate sum(num)/sum(den) and its delta-method influence values."""
    mean_den = den.mean()
    ratio = num.sum() / den.sum()
    return ratio, (num - ratio * den) / mean_den


def expectation_gain(s: CommoditySample, e: float, t: TariffPair) -> GainReport:
    """
    Gains as sums over the imported commodities, each normalised like the
    demand function it integrates:

        G  = E(p d;   r > e/theta)/C_N   - E(p d*;  r < theta* e)/C*_N
        G* = E(p* d*; r < theta* e)/C*_N - E(p* d;  r > e/theta)/C_N

    A commodity exactly at a threshold is imported by neither nation.
    Standard errors are delta-method errors of the ratio estimators.
    """
    if e <= 0 or t.theta <= 0 or t.theta_star <= 0:
        raise DomainError("rate and tariffs must be positive")
    r = s.ratios
    domestic_imports = r > e / t.theta
    foreign_imports = r < t.theta_star * e

    weight = s.p_star * s.d
    weight_star = s.p * s.d_star
    g1, z1 = _ratio_terms(s.p * s.d * domestic_imports, weight)
    g2, z2 = _ratio_terms(s.p * s.d_star * foreign_imports, weight_star)
    h1, y1 = _ratio_terms(s.p_star * s.d_star * foreign_imports, weight_star)
    h2, y2 = _ratio_terms(s.p_star * s.d * domestic_imports, weight)

    se = None
    se_star = None
    if s.n > 1:
        root_n = np.sqrt(s.n)
        se = float(np.std(z1 - z2, ddof=1) / root_n)
        se_star = float(np.std(y1 - y2, ddof=1) / root_n)

    return GainReport(
        gain_domestic=float(g1 - g2),
        gain_foreign=float(h1 - h2),
        method=GainMethod.EXPECTATION_SUM,
        standard_error_domestic=se,
        standard_error_foreign=se_star,
        rate_e=e,
        theta=t.theta,
        theta_star=t.theta_star,
    )


def matched_sample(model: MarketModel, n: int, seed: int = 0) -> CommoditySample:
    """
    Commodity universe whose empirical demands converge to an analytic model.

    Ratios r are Lomax(1) draws with density q(r) = (1 + r)^-2, p* = 1, p = r
    and importance-weighted demands

        d = -D'(r) / q(r),    d* = D*'(r) / (r q(r)),

    so that E(p* d 1{r > x}) = D(x) and E(p d* 1{r < x}) = D*(x). Demand
    functions whose gain integral diverges get zero weight beyond the same
    fixed bound the quadrature uses.
    """
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    if model.is_empirical:
        raise DomainError("matched samples need an analytic model")
    (rng,) = _streams(seed, 1)
    r = rng.pareto(1.0, n)
    r = np.where(r > 0.0, r, np.finfo(float).tiny)
    q = (1.0 + r) ** -2

    bound = truncation_bound(model)
    d = -np.asarray(model.dD(r)) / q
    d_star = np.asarray(model.dDstar(r)) / (r * q)
    if model.demand_domestic.heavy_tail:
        d = np.where(r <= bound, d, 0.0)
    if model.demand_foreign.heavy_tail:
        d_star = np.where(r >= 1.0 / bound, d_star, 0.0)

    logger.debug(f"Matched sample of {n} commodities (seed={seed})")
    return CommoditySample(p=r, p_star=np.ones(n), d=np.maximum(d, 0.0), d_star=np.maximum(d_star, 0.0))


def sup_distance(model: MarketModel, target: MarketModel, points: int = 4000) -> float:
    """max over a log grid on [1/M^2, M^2] of |D - D~| and |D* - D~*|."""
    bound = truncation_bound(target)
    grid = np.geomspace(1.0 / bound, bound, points)
    return float(
        max(
            np.max(np.abs(np.asarray(model.D(grid)) - target.D(grid))),
            np.max(np.abs(np.asarray(model.Dstar(grid)) - target.Dstar(grid))),
        )
    )


def load_scenario(path: str) -> ScenarioSpec:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return ScenarioSpec.model_validate_json(f.read())
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read scenario {path}: {e}") from e


def scenario_seeded(spec: ScenarioSpec, seed: Optional[int]) -> ScenarioSpec:
    return spec if seed is None else spec.model_copy(update={"rng_seed": seed})
