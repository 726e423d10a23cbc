"""
Gains From Trade

    G(e, theta, theta*)  = -int_{e/theta}^inf y D'(y) dy - D*(theta* e)
    G*(e, theta, theta*) =  int_0^{theta* e} D*'(u)/u du  - D(e/theta)

The foreign integral is the published form int_{1/(theta* e)}^inf
(1/y) D*'(1/y) dy after the change of variables u = 1/y. Parametric demand
functions are integrated by QUADPACK (infinite-range rule where the tail
converges, split at clip kinks); empirical step functions are summed over
their breakpoints, which is the expectation form of the same quantities.
"""

from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.integrate import quad

from src.tariff_game.demand import DemandFunction, MarketModel
from src.tariff_game.equilibrium import check_rate, check_tariffs, solve_rate
from src.tariff_game.errors import DomainError, IntegrationError
from src.tariff_game.structures import (
    GainMethod,
    GainReport,
    Role,
    SolverConfig,
    SymmetryGainReport,
    TariffPair,
)

# quadrature error estimates above this are treated as non-convergence
MAX_ABSERR = 1e-9


def truncation_bound(model: MarketModel) -> float:
    """Upper limit used for divergent domestic tails (1/U for foreign ones)."""
    return model.M * model.M


def _segments(lo: float, hi: float, kinks: Iterable[float]) -> List[Tuple[float, float]]:
    cuts = [lo] + [k for k in kinks if lo < k < hi] + [hi]
    return list(zip(cuts[:-1], cuts[1:]))


def integrate(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    cfg: SolverConfig,
    kinks: Iterable[float] = (),
) -> Tuple[float, float]:
    """
    Adaptive Gauss-Kronrod integral of f over [lo, hi] (hi may be inf),
    split at the given kinks.

    Returns:
        (value, summed error estimate)
    """
    if hi <= lo:
        return 0.0, 0.0
    total, error = 0.0, 0.0
    for a, b in _segments(lo, hi, kinks):
        result = quad(
            f,
            a,
            b,
            epsabs=cfg.quad_epsabs,
            epsrel=cfg.quad_epsrel,
            limit=cfg.quad_limit,
            full_output=1,
        )
        value, abserr = result[0], result[1]
        if len(result) > 3:
            if abserr > MAX_ABSERR or not np.isfinite(value):
                raise IntegrationError(f"quad on [{a:.6g}, {b:.6g}]: {result[3]}")
            logger.debug(f"quad on [{a:.6g}, {b:.6g}] accepted with estimate {abserr:.2e}")
        total += value
        error += abserr
    return total, error


# ==================== Import Values ====================

def domestic_import_value(
    model: MarketModel, a: float, cfg: SolverConfig
) -> Tuple[float, float, bool]:
    """
    -int_a^inf y D'(y) dy: value of the domestic imports when e/theta = a.

    Returns:
        (value, error estimate, regularized)
    """
    d = model.demand_domestic
    if d.is_empirical:
        return _step_import_value(d, a), 0.0, False
    if d.heavy_tail:
        upper = truncation_bound(model)
        value, err = integrate(lambda y: -y * d.derivative(y), a, upper, cfg, d.kinks)
        return value, err, True
    value, err = integrate(lambda y: -y * d.derivative(y), a, np.inf, cfg, d.kinks)
    return value, err, False


def foreign_import_value(
    model: MarketModel, b: float, cfg: SolverConfig
) -> Tuple[float, float, bool]:
    """int_0^b D*'(u)/u du: value of the foreign imports when theta* e = b."""
    d = model.demand_foreign
    if d.is_empirical:
        return _step_import_value(d, b), 0.0, False
    lower = 1.0 / truncation_bound(model) if d.heavy_tail else 0.0
    value, err = integrate(lambda u: d.derivative(u) / u, lower, b, cfg, d.kinks)
    return value, err, d.heavy_tail


def _step_import_value(d: DemandFunction, limit: float) -> float:
    """Breakpoint sums: sum r w 1{r > a} / W (domestic) or sum w / r 1{r < b} / W (foreign)."""
    r, w = d.breakpoints, d.weights
    total = float(w.sum())
    if d.role == Role.DOMESTIC:
        mask = r > limit
        return float(np.dot(r[mask], w[mask]) / total)
    mask = r < limit
    return float(np.dot(w[mask], 1.0 / r[mask]) / total)


def import_value_by_parts(model: MarketModel, role: Role, limit: float, cfg: SolverConfig) -> float:
    """
    Integration-by-parts form of the import value, for smooth analytic models:

        -int_a^inf y D'(y) dy = a D(a) + int_a^inf D(y) dy            (y D(y) -> 0)
        int_0^b D*'(u)/u du   = D*(b)/b + int_0^b D*(u)/u^2 du        (D*(u)/u -> 0)
    """
    if role == Role.DOMESTIC:
        d = model.demand_domestic
        if d.is_empirical or d.heavy_tail:
            raise DomainError("by-parts form needs y D(y) -> 0 at infinity")
        tail, _ = integrate(lambda y: d.value(y), limit, np.inf, cfg, d.kinks)
        return limit * d.value(limit) + tail
    d = model.demand_foreign
    if d.is_empirical or d.heavy_tail:
        raise DomainError("by-parts form needs D*(u)/u -> 0 at zero")
    body, _ = integrate(lambda u: d.value(u) / (u * u), 0.0, limit, cfg, d.kinks)
    return d.value(limit) / limit + body


# ==================== Gains ====================

def gain_domestic(
    model: MarketModel, e: float, t: TariffPair, cfg: Optional[SolverConfig] = None
) -> float:
    """G(e, theta, theta*)."""
    cfg = cfg or SolverConfig()
    check_rate(model, e)
    check_tariffs(model, t)
    value, _, _ = domestic_import_value(model, e / t.theta, cfg)
    return value - float(model.Dstar(t.theta_star * e))


def gain_foreign(
    model: MarketModel, e: float, t: TariffPair, cfg: Optional[SolverConfig] = None
) -> float:
    """G*(e, theta, theta*)."""
    cfg = cfg or SolverConfig()
    check_rate(model, e)
    check_tariffs(model, t)
    value, _, _ = foreign_import_value(model, t.theta_star * e, cfg)
    return value - float(model.D(e / t.theta))


def gain_for(
    model: MarketModel, side: Role, e: float, t: TariffPair, cfg: Optional[SolverConfig] = None
) -> float:
    if side == Role.DOMESTIC:
        return gain_domestic(model, e, t, cfg)
    return gain_foreign(model, e, t, cfg)


def evaluate_gains(
    model: MarketModel,
    t: TariffPair,
    e: Optional[float] = None,
    cfg: Optional[SolverConfig] = None,
) -> GainReport:
    """Both gains at (e, theta, theta*); e defaults to the solved equilibrium rate."""
    cfg = cfg or SolverConfig()
    if e is None:
        e = solve_rate(model, t, cfg).rate_e
    check_rate(model, e)
    check_tariffs(model, t)

    dom, dom_err, dom_reg = domestic_import_value(model, e / t.theta, cfg)
    fgn, fgn_err, fgn_reg = foreign_import_value(model, t.theta_star * e, cfg)
    method = GainMethod.EXPECTATION_SUM if model.is_empirical else GainMethod.QUADRATURE

    return GainReport(
        gain_domestic=dom - float(model.Dstar(t.theta_star * e)),
        gain_foreign=fgn - float(model.D(e / t.theta)),
        method=method,
        truncation_error_bound=dom_err + fgn_err,
        regularized=dom_reg or fgn_reg,
        rate_e=e,
        theta=t.theta,
        theta_star=t.theta_star,
    )


def symmetry_gain_check(
    model: MarketModel, t: TariffPair, cfg: Optional[SolverConfig] = None
) -> SymmetryGainReport:
    """|G*(1/e(theta, theta*), theta*, theta) - G(e(theta, theta*), theta, theta*)|."""
    if not model.symmetric_flag:
        raise DomainError("gain symmetry check needs a symmetric model")
    cfg = cfg or SolverConfig()
    e = solve_rate(model, t, cfg).rate_e
    g = gain_domestic(model, e, t, cfg)
    g_swapped = gain_foreign(model, 1.0 / e, t.swapped(), cfg)
    return SymmetryGainReport(
        rate=e,
        gain_domestic=g,
        gain_foreign_swapped=g_swapped,
        difference=abs(g_swapped - g),
    )
