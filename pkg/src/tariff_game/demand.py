"""
Currency Demand Functions

D(x) is the domestic demand for foreign currency and D*(x) the foreign demand
for domestic currency at exchange rate x (domestic units per foreign unit).
Both are normalised values of imported commodities:

    D(0) = 1, D(inf) = 0 (nonincreasing),  D*(0) = 0, D*(inf) = 1 (nondecreasing).

A parametric family names a shape f. Decreasing shapes are used as they are in
the domestic role and mirrored, D*(x) = f(1/x), in the foreign role; the
increasing clipped exponential-growth shape is mirrored in the domestic role
instead. Empirical step functions come from sampled commodity universes and
are smoothed with a Gaussian kernel whenever derivatives are requested.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
from loguru import logger
from scipy.special import lambertw
from scipy.stats import norm

from src.tariff_game.errors import ConfigError, DomainError, KinkError
from src.tariff_game.structures import (
    DEFAULT_M,
    Family,
    FamilySpec,
    ModelSpec,
    MonotoneReport,
    Role,
)

ArrayLike = Union[float, np.ndarray]

KINK_RTOL = 1e-12
SYMMETRY_GRID = 1000
# x-values evaluated per block when smoothing large empirical samples
_KERNEL_BLOCK = 64


@dataclass(frozen=True)
class _Shape:
    """A parametric shape f with its derivatives, evaluated on float arrays."""
    value: Callable[[np.ndarray], np.ndarray]
    first: Callable[[np.ndarray], np.ndarray]
    second: Callable[[np.ndarray], np.ndarray]
    decreasing: bool
    limit_at_infinity: float
    kinks: Tuple[float, ...] = ()
    # f grows linearly at 0, so the tail integral of the gain diverges
    linear_at_zero: bool = False


def _require(params: Dict[str, Any], name: str, family: Family, lower: float = 0.0) -> float:
    if name not in params:
        raise ConfigError(f"{family.value} needs parameter '{name}'")
    value = float(params[name])
    if not value > lower:
        raise ConfigError(f"{family.value} parameter {name}={value} must be > {lower}")
    return value


def _build_shape(family: Family, params: Dict[str, Any]) -> _Shape:
    if family == Family.RATIONAL_SQUARE:
        return _Shape(
            value=lambda y: (1.0 + y) ** -2,
            first=lambda y: -2.0 * (1.0 + y) ** -3,
            second=lambda y: 6.0 * (1.0 + y) ** -4,
            decreasing=True,
            limit_at_infinity=0.0,
        )

    if family == Family.CLIPPED_LINEAR:
        alpha = _require(params, "alpha", family)
        kink = 1.0 / alpha
        return _Shape(
            value=lambda y: np.maximum(1.0 - alpha * y, 0.0),
            first=lambda y: np.where(y < kink, -alpha, 0.0),
            second=lambda y: np.zeros_like(y),
            decreasing=True,
            limit_at_infinity=0.0,
            kinks=(kink,),
        )

    if family == Family.EXPONENTIAL:
        delta = _require(params, "delta", family)
        return _Shape(
            value=lambda y: np.exp(-delta * y),
            first=lambda y: -delta * np.exp(-delta * y),
            second=lambda y: delta**2 * np.exp(-delta * y),
            decreasing=True,
            limit_at_infinity=0.0,
        )

    if family == Family.CLIPPED_EXP_GROWTH:
        alpha = _require(params, "alpha", family)
        beta = float(params.get("beta", 0.0))
        if beta < 0:
            raise ConfigError(f"clipped_exp_growth parameter beta={beta} must be >= 0")
        # alpha*x*exp(beta*x) = 1  <=>  beta*x = W(beta/alpha)
        clip = float(lambertw(beta / alpha).real) / beta if beta > 0 else 1.0 / alpha
        return _Shape(
            value=lambda y: np.minimum(alpha * y * np.exp(beta * y), 1.0),
            first=lambda y: np.where(y < clip, alpha * (beta * y + 1.0) * np.exp(beta * y), 0.0),
            second=lambda y: np.where(
                y < clip, alpha * (beta**2 * y + 2.0 * beta) * np.exp(beta * y), 0.0
            ),
            decreasing=False,
            limit_at_infinity=1.0,
            kinks=(clip,),
            linear_at_zero=True,
        )

    raise ConfigError(f"no parametric shape for family {family.value}")


def silverman_bandwidth(breakpoints: np.ndarray, weights: np.ndarray) -> float:
    """h = 1.06 * sigma * n^(-1/5) with weighted sigma and effective sample size."""
    total = float(weights.sum())
    mean = float(np.dot(weights, breakpoints) / total)
    sigma = math.sqrt(float(np.dot(weights, (breakpoints - mean) ** 2) / total))
    n_eff = total**2 / float(np.dot(weights, weights))
    if sigma == 0.0:
        # a single atom: fall back to a width relative to its position
        sigma = 1e-3 * max(abs(mean), 1.0)
    return 1.06 * sigma * n_eff ** (-0.2)


@dataclass(frozen=True, eq=False)
class DemandFunction:
    """
    Immutable currency-demand function.

    Args:
        family: shape family
        role: Domestic (nonincreasing D) or Foreign (nondecreasing D*)
        params: family parameters (alpha, beta, delta)
        breakpoints: sorted price ratios p/p* of an empirical step function
        weights: nonnegative weights of the breakpoints
        bandwidth: when set, the empirical steps are replaced by their
            Gaussian-kernel smoothing everywhere
    """
    family: Family
    role: Role
    params: Dict[str, float] = field(default_factory=dict)
    breakpoints: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    bandwidth: Optional[float] = None

    def __post_init__(self) -> None:
        if self.family == Family.EMPIRICAL:
            if self.breakpoints is None or self.weights is None:
                raise ConfigError("empirical demand needs breakpoints and weights")
            r = np.asarray(self.breakpoints, dtype=float)
            w = np.asarray(self.weights, dtype=float)
            if r.ndim != 1 or r.shape != w.shape or r.size == 0:
                raise ConfigError("breakpoints and weights must be equal-length 1-d arrays")
            if np.any(r <= 0) or np.any(w < 0) or w.sum() <= 0:
                raise ConfigError("empirical breakpoints must be > 0 and weights >= 0, not all 0")
            order = np.argsort(r, kind="stable")
            r, w = r[order], w[order]
            r.setflags(write=False)
            w.setflags(write=False)
            object.__setattr__(self, "breakpoints", r)
            object.__setattr__(self, "weights", w)
            object.__setattr__(self, "_cumulative", np.concatenate(([0.0], np.cumsum(w))))
            object.__setattr__(self, "_shape", None)
            if self.bandwidth is not None and not self.bandwidth > 0:
                raise ConfigError(f"kernel bandwidth must be > 0, got {self.bandwidth}")
        else:
            object.__setattr__(self, "_shape", _build_shape(self.family, self.params))

    # ==================== Properties ====================

    @property
    def is_empirical(self) -> bool:
        return self.family == Family.EMPIRICAL

    @property
    def is_smoothed(self) -> bool:
        return self.is_empirical and self.bandwidth is not None

    @property
    def mirrored(self) -> bool:
        """Whether the role evaluates the shape at 1/x."""
        if self._shape is None:
            return False
        return self._shape.decreasing != (self.role == Role.DOMESTIC)

    @property
    def kinks(self) -> Tuple[float, ...]:
        """Points in the role's argument space where the function is not smooth."""
        if self._shape is None:
            return ()
        if self.mirrored:
            return tuple(sorted(1.0 / k for k in self._shape.kinks))
        return self._shape.kinks

    @property
    def heavy_tail(self) -> bool:
        """The gain integral over this function diverges and must be truncated."""
        return self._shape is not None and self._shape.linear_at_zero

    # ==================== Evaluation ====================

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return self.value(x)

    def value(self, x: ArrayLike) -> ArrayLike:
        """Evaluate the function; x must be nonnegative."""
        arr = self._checked(x)
        if self.is_empirical:
            out = self._kernel_value(arr) if self.is_smoothed else self._step_value(arr)
        else:
            out = self._parametric_value(arr)
        return _like(x, np.clip(out, 0.0, 1.0))

    def derivative(self, x: ArrayLike, order: int = 1) -> ArrayLike:
        """First or second derivative; raises KinkError exactly at a clip point."""
        if order not in (1, 2):
            raise DomainError(f"derivative order must be 1 or 2, got {order}")
        arr = self._checked(x)
        if self.is_empirical:
            return _like(x, self._kernel_derivative(arr, order))
        self._reject_kinks(arr, order)
        return _like(x, self._parametric_derivative(arr, order))

    def _checked(self, x: ArrayLike) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if np.any(np.isnan(arr)) or np.any(arr < 0):
            raise DomainError(f"demand functions are defined for x >= 0, got {x}")
        return arr

    def _parametric_value(self, x: np.ndarray) -> np.ndarray:
        shape = self._shape
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            if not self.mirrored:
                return shape.value(x)
            y = np.divide(1.0, x, out=np.full_like(x, np.inf), where=x > 0)
            return np.where(x > 0, shape.value(y), shape.limit_at_infinity)

    def _parametric_derivative(self, x: np.ndarray, order: int) -> np.ndarray:
        shape = self._shape
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            if not self.mirrored:
                return shape.first(x) if order == 1 else shape.second(x)
            # g(x) = f(1/x): g' = -f'(y) y^2, g'' = f''(y) y^4 + 2 f'(y) y^3
            y = np.divide(1.0, x, out=np.full_like(x, np.inf), where=x > 0)
            if order == 1:
                out = -shape.first(y) * y**2
            else:
                out = shape.second(y) * y**4 + 2.0 * shape.first(y) * y**3
            # every family flattens out at x -> 0 under the mirror
            return np.where(np.isfinite(out) & (x > 0), out, 0.0)

    def _reject_kinks(self, x: np.ndarray, order: int) -> None:
        for kink in self.kinks:
            hits = np.abs(x - kink) <= KINK_RTOL * max(1.0, kink)
            if np.any(hits):
                step = 1e-9 * max(1.0, kink)
                left = float(self._parametric_derivative(np.array(kink - step), order))
                right = float(self._parametric_derivative(np.array(kink + step), order))
                raise KinkError(kink, left, right)

    def _step_value(self, x: np.ndarray) -> np.ndarray:
        r, cum = self.breakpoints, self._cumulative
        total = cum[-1]
        if self.role == Role.DOMESTIC:
            # commodities with ratio strictly above x are imported
            idx = np.searchsorted(r, x, side="right")
            return (total - cum[idx]) / total
        idx = np.searchsorted(r, x, side="left")
        return cum[idx] / total

    def _kernel_cdf(self, x: np.ndarray) -> np.ndarray:
        """Smoothed D or D* at arbitrary real x (no domain check)."""
        h = self.kernel_bandwidth
        r, w = self.breakpoints, self.weights
        total = self._cumulative[-1]
        flat = np.atleast_1d(x).ravel()
        out = np.empty_like(flat)
        sign = 1.0 if self.role == Role.DOMESTIC else -1.0
        for start in range(0, flat.size, _KERNEL_BLOCK):
            block = flat[start:start + _KERNEL_BLOCK]
            z = sign * (r[None, :] - block[:, None]) / h
            out[start:start + _KERNEL_BLOCK] = norm.cdf(z) @ w / total
        return out.reshape(np.shape(x))

    def _kernel_value(self, x: np.ndarray) -> np.ndarray:
        return self._kernel_cdf(x)

    def _kernel_derivative(self, x: np.ndarray, order: int) -> np.ndarray:
        if order == 1:
            step = np.maximum(1e-6, 1e-6 * x)
            return (self._kernel_cdf(x + step) - self._kernel_cdf(x - step)) / (2.0 * step)
        # wider step keeps the second difference above rounding noise
        step = np.maximum(1e-4, 1e-4 * x)
        return (
            self._kernel_cdf(x + step) - 2.0 * self._kernel_cdf(x) + self._kernel_cdf(x - step)
        ) / step**2

    @property
    def kernel_bandwidth(self) -> float:
        if self.bandwidth is not None:
            return float(self.bandwidth)
        return silverman_bandwidth(self.breakpoints, self.weights)

    # ==================== Transformations ====================

    def smoothed(self, bandwidth: Optional[float] = None) -> "DemandFunction":
        """Kernel-smoothed copy of an empirical function (parametric ones are returned as is)."""
        if not self.is_empirical:
            return self
        h = bandwidth if bandwidth is not None else self.kernel_bandwidth
        logger.debug(f"Smoothing empirical {self.role.value} demand with bandwidth {h:.4g}")
        return DemandFunction(
            family=self.family,
            role=self.role,
            breakpoints=self.breakpoints,
            weights=self.weights,
            bandwidth=h,
        )

    def reflected(self) -> "DemandFunction":
        """x -> self(1/x) in the opposite role."""
        role = Role.FOREIGN if self.role == Role.DOMESTIC else Role.DOMESTIC
        if not self.is_empirical:
            return DemandFunction(family=self.family, role=role, params=dict(self.params))
        return DemandFunction(
            family=self.family,
            role=role,
            breakpoints=1.0 / self.breakpoints,
            weights=self.weights,
            bandwidth=None,
        )

    def to_spec(self) -> FamilySpec:
        if not self.is_empirical:
            return FamilySpec(family=self.family, params=dict(self.params))
        params: Dict[str, Any] = {
            "breakpoints": self.breakpoints.tolist(),
            "weights": self.weights.tolist(),
        }
        if self.bandwidth is not None:
            params["bandwidth"] = self.bandwidth
        return FamilySpec(family=self.family, params=params)

    @classmethod
    def from_spec(cls, spec: FamilySpec, role: Role) -> "DemandFunction":
        if spec.family == Family.EMPIRICAL:
            params = spec.params
            if "breakpoints" not in params or "weights" not in params:
                raise ConfigError("empirical family needs 'breakpoints' and 'weights'")
            bandwidth = params.get("bandwidth")
            return cls(
                family=spec.family,
                role=role,
                breakpoints=np.asarray(params["breakpoints"], dtype=float),
                weights=np.asarray(params["weights"], dtype=float),
                bandwidth=float(bandwidth) if bandwidth is not None else None,
            )
        return cls(
            family=spec.family,
            role=role,
            params={k: float(v) for k, v in spec.params.items()},
        )


def _like(x: ArrayLike, out: np.ndarray) -> ArrayLike:
    return float(out) if np.ndim(x) == 0 else out


# ==================== Operations ====================

def evaluate(d: DemandFunction, x: ArrayLike) -> ArrayLike:
    """Value of D or D* at x >= 0."""
    return d.value(x)


def eval_deriv(d: DemandFunction, x: ArrayLike, order: int = 1) -> ArrayLike:
    """Analytic derivative (parametric) or kernel-smoothed central difference (empirical)."""
    return d.derivative(x, order)


def check_monotone(d: DemandFunction, grid_n: int, M: float = DEFAULT_M) -> MonotoneReport:
    """Check boundedness in [0, 1] and role monotonicity on a uniform grid over [0, M]."""
    if grid_n < 2:
        raise DomainError(f"grid_n must be >= 2, got {grid_n}")
    grid = np.linspace(0.0, M, grid_n)
    values = np.asarray(d.value(grid))

    out_of_range = grid[(values < 0.0) | (values > 1.0)].tolist()
    steps = np.diff(values)
    bad = np.flatnonzero(steps > 0) if d.role == Role.DOMESTIC else np.flatnonzero(steps < 0)

    violation = None
    if bad.size:
        i = int(bad[0])
        violation = (float(grid[i]), float(values[i]), float(grid[i + 1]), float(values[i + 1]))
        logger.warning(f"{d.family.value} ({d.role.value}) not monotone near x={grid[i]:.6g}")

    return MonotoneReport(
        passed=violation is None and not out_of_range,
        role=d.role,
        grid_n=grid_n,
        violation=violation,
        out_of_range=out_of_range,
    )


# ==================== Market Model ====================

@dataclass(frozen=True, eq=False)
class MarketModel:
    """The pair (D, D*) with the truncation bound M of the rate/tariff box."""
    demand_domestic: DemandFunction
    demand_foreign: DemandFunction
    truncation_bound_M: float = DEFAULT_M
    symmetric_flag: bool = False
    tol_sym: float = 1e-9

    def __post_init__(self) -> None:
        if not self.truncation_bound_M > 1.0:
            raise ConfigError(f"truncation bound M must be > 1, got {self.truncation_bound_M}")
        if self.demand_domestic.role != Role.DOMESTIC or self.demand_foreign.role != Role.FOREIGN:
            raise ConfigError("market model needs a domestic D and a foreign D*")
        if self.symmetric_flag:
            gap = symmetry_gap(self.demand_domestic, self.demand_foreign, self.truncation_bound_M)
            if gap > self.tol_sym:
                raise DomainError(
                    f"model flagged symmetric but max |D(x) - D*(1/x)| = {gap:.3e} > {self.tol_sym}"
                )

    @property
    def M(self) -> float:
        return self.truncation_bound_M

    @property
    def lower(self) -> float:
        return 1.0 / self.truncation_bound_M

    @property
    def is_empirical(self) -> bool:
        return self.demand_domestic.is_empirical or self.demand_foreign.is_empirical

    @property
    def is_smooth(self) -> bool:
        return all(
            not d.is_empirical or d.is_smoothed
            for d in (self.demand_domestic, self.demand_foreign)
        )

    def D(self, x: ArrayLike) -> ArrayLike:
        return self.demand_domestic.value(x)

    def Dstar(self, x: ArrayLike) -> ArrayLike:
        return self.demand_foreign.value(x)

    def dD(self, x: ArrayLike, order: int = 1) -> ArrayLike:
        return self.demand_domestic.derivative(x, order)

    def dDstar(self, x: ArrayLike, order: int = 1) -> ArrayLike:
        return self.demand_foreign.derivative(x, order)

    def smoothed(self) -> "MarketModel":
        return MarketModel(
            demand_domestic=self.demand_domestic.smoothed(),
            demand_foreign=self.demand_foreign.smoothed(),
            truncation_bound_M=self.truncation_bound_M,
            symmetric_flag=False,
        )

    def reciprocal(self) -> "MarketModel":
        """Model in the reciprocal currency: D~(x) = D*(1/x), D~*(x) = D(1/x)."""
        return MarketModel(
            demand_domestic=self.demand_foreign.reflected(),
            demand_foreign=self.demand_domestic.reflected(),
            truncation_bound_M=self.truncation_bound_M,
            symmetric_flag=self.symmetric_flag,
            tol_sym=self.tol_sym,
        )

    def with_bound(self, M: float) -> "MarketModel":
        return MarketModel(
            demand_domestic=self.demand_domestic,
            demand_foreign=self.demand_foreign,
            truncation_bound_M=M,
            symmetric_flag=self.symmetric_flag,
            tol_sym=self.tol_sym,
        )

    def to_spec(self) -> ModelSpec:
        return ModelSpec(
            domestic=self.demand_domestic.to_spec(),
            foreign=self.demand_foreign.to_spec(),
            M=self.truncation_bound_M,
            symmetric=self.symmetric_flag,
        )

    def digest(self) -> str:
        """sha256 of the canonical model JSON."""
        payload = json.dumps(self.to_spec().model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    @classmethod
    def from_spec(cls, spec: ModelSpec, tol_sym: float = 1e-9) -> "MarketModel":
        domestic = DemandFunction.from_spec(spec.domestic, Role.DOMESTIC)
        foreign = DemandFunction.from_spec(spec.foreign, Role.FOREIGN)
        symmetric = spec.symmetric
        if symmetric is None:
            symmetric = symmetry_gap(domestic, foreign, spec.M) <= tol_sym
            logger.debug(f"Symmetric-nations flag detected as {symmetric}")
        return cls(
            demand_domestic=domestic,
            demand_foreign=foreign,
            truncation_bound_M=spec.M,
            symmetric_flag=symmetric,
            tol_sym=tol_sym,
        )


def symmetry_gap(domestic: DemandFunction, foreign: DemandFunction, M: float) -> float:
    """max |D(x) - D*(1/x)| over a log-spaced grid on [1/M, M]."""
    grid = np.geomspace(1.0 / M, M, SYMMETRY_GRID)
    return float(np.max(np.abs(np.asarray(domestic.value(grid)) - foreign.value(1.0 / grid))))


def load_model(path: str, tol_sym: float = 1e-9) -> MarketModel:
    """Read a model JSON document from disk."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            spec = ModelSpec.model_validate(json.load(f))
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read model {path}: {e}") from e
    return MarketModel.from_spec(spec, tol_sym=tol_sym)


def reference_model(name: str, **params: float) -> MarketModel:
    """
    The example markets:
        "schwartz": symmetric rational_square
        "clipped_linear": symmetric clipped_linear(alpha)
        "exponential": exponential(delta) against clipped_exp_growth(alpha, beta)
    """
    if name == "schwartz":
        spec = ModelSpec(
            domestic=FamilySpec(family=Family.RATIONAL_SQUARE),
            foreign=FamilySpec(family=Family.RATIONAL_SQUARE),
            symmetric=True,
        )
    elif name == "clipped_linear":
        alpha = params.get("alpha", 0.5)
        spec = ModelSpec(
            domestic=FamilySpec(family=Family.CLIPPED_LINEAR, params={"alpha": alpha}),
            foreign=FamilySpec(family=Family.CLIPPED_LINEAR, params={"alpha": alpha}),
            symmetric=True,
        )
    elif name == "exponential":
        spec = ModelSpec(
            domestic=FamilySpec(
                family=Family.EXPONENTIAL, params={"delta": params.get("delta", 2.5)}
            ),
            foreign=FamilySpec(
                family=Family.CLIPPED_EXP_GROWTH,
                params={"alpha": params.get("alpha", 0.01), "beta": params.get("beta", 2.0)},
            ),
            symmetric=False,
        )
    else:
        raise ConfigError(f"unknown example model '{name}'")
    return MarketModel.from_spec(spec)
