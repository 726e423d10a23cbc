"""
Exchange-Rate Equilibrium

Under tariffs 1-theta and 1-theta* the currency market clears when

    x * D(x / theta) = D*(theta* * x),

searched on the box [1/M, M]. The balance is scanned on a log-spaced grid and
every sign change is refined by bisection; bisection rather than Newton because
empirical D may be a step function.
"""

from typing import List, Optional

import numpy as np
from loguru import logger
from scipy.optimize import bisect

from src.tariff_game.demand import MarketModel
from src.tariff_game.errors import DomainError, NoEquilibriumInBox, SingularDenominator
from src.tariff_game.structures import (
    RateSensitivities,
    RateSolution,
    ReciprocalRateReport,
    RootMultiplicity,
    SolverConfig,
    TariffPair,
)

SINGULAR_DENOMINATOR = 1e-12
# relative slack on the box edges
_BOX_RTOL = 1e-12


def check_tariffs(model: MarketModel, t: TariffPair) -> None:
    """Raise DomainError unless 1/M <= theta, theta* <= 1."""
    lo = model.lower * (1.0 - _BOX_RTOL)
    hi = 1.0 + _BOX_RTOL
    for name, value in (("theta", t.theta), ("theta_star", t.theta_star)):
        if not lo <= value <= hi:
            raise DomainError(f"{name}={value} outside [{model.lower:.6g}, 1]")


def check_rate(model: MarketModel, x: float) -> None:
    if not model.lower * (1.0 - _BOX_RTOL) <= x <= model.M * (1.0 + _BOX_RTOL):
        raise DomainError(f"rate x={x} outside [{model.lower:.6g}, {model.M:.6g}]")


def _balance(model: MarketModel, x, t: TariffPair):
    """Unchecked balance, vectorised over x."""
    return x * np.asarray(model.D(x / t.theta)) - np.asarray(model.Dstar(t.theta_star * x))


def currency_balance(model: MarketModel, x: float, t: TariffPair) -> float:
    """x * D(x/theta) - D*(theta* x); zero exactly at an equilibrium rate."""
    check_rate(model, x)
    check_tariffs(model, t)
    return float(_balance(model, float(x), t))


def scan_grid(model: MarketModel, points: int) -> np.ndarray:
    """Log-spaced scan grid on [1/M, M]; x = 1 is always a node."""
    return np.union1d(np.geomspace(model.lower, model.M, points), [1.0])


def solve_rate(
    model: MarketModel,
    t: TariffPair,
    cfg: Optional[SolverConfig] = None,
    tol: Optional[float] = None,
) -> RateSolution:
    """
    Solve the currency balance for the equilibrium exchange rate.

    Args:
        model: market model
        t: tariff pair
        cfg: solver configuration (scan_points, tol_root)
        tol: override of the absolute bisection tolerance on x

    Returns:
        RateSolution with the smallest root; MultipleDetected when the
        balance changes sign more than once on the scan grid
    """
    cfg = cfg or SolverConfig()
    xtol = tol if tol is not None else cfg.tol_root
    check_tariffs(model, t)

    grid = scan_grid(model, cfg.scan_points)
    values = _balance(model, grid, t)
    signs = np.sign(values)

    roots: List[float] = []
    brackets: List[tuple] = []
    i = 0
    while i < grid.size:
        if signs[i] == 0.0:
            roots.append(float(grid[i]))
            brackets.append((float(grid[i]), float(grid[i])))
            # a run of exact zeros counts once
            while i + 1 < grid.size and signs[i + 1] == 0.0:
                i += 1
        elif i + 1 < grid.size and signs[i] * signs[i + 1] < 0.0:
            lo, hi = float(grid[i]), float(grid[i + 1])
            root = bisect(lambda x: float(_balance(model, x, t)), lo, hi, xtol=xtol, maxiter=500)
            roots.append(float(root))
            brackets.append((lo, hi))
        i += 1

    if not roots:
        raise NoEquilibriumInBox(
            f"balance keeps sign {signs[0]:+.0f} on [{model.lower:.6g}, {model.M:.6g}] "
            f"at theta={t.theta:.6g}, theta*={t.theta_star:.6g}"
        )

    multiplicity = RootMultiplicity.UNIQUE
    if len(roots) > 1:
        multiplicity = RootMultiplicity.MULTIPLE_DETECTED
        logger.warning(
            f"{len(roots)} exchange-rate roots at theta={t.theta:.6g}, "
            f"theta*={t.theta_star:.6g}; returning the smallest"
        )

    e = roots[0]
    at_boundary = bool(
        np.isclose(e, model.lower, rtol=1e-9, atol=0.0) or np.isclose(e, model.M, rtol=1e-9, atol=0.0)
    )
    if at_boundary:
        logger.warning(f"Exchange rate {e:.6g} sits on the edge of the box")

    return RateSolution(
        rate_e=e,
        residual=float(_balance(model, e, t)),
        bracket=brackets[0],
        root_multiplicity=multiplicity,
        roots=roots,
        at_boundary=at_boundary,
    )


def solve_free_trade_rate(model: MarketModel, cfg: Optional[SolverConfig] = None) -> RateSolution:
    """Rate of the untaxed balance x D(x) = D*(x)."""
    return solve_rate(model, TariffPair(theta=1.0, theta_star=1.0), cfg)


def rate_sensitivities(
    model: MarketModel,
    e: float,
    t: TariffPair,
    balance_tol: float = 1e-9,
) -> RateSensitivities:
    """
    Implicit derivatives of the equilibrium rate with respect to both tariffs:

        e_theta  = (e^2/theta^2) D'(e/theta) / denom
        e_theta* = e D*'(theta* e) / denom
        denom    = D(e/theta) + (e/theta) D'(e/theta) - theta* D*'(theta* e)
    """
    residual = currency_balance(model, e, t)
    if abs(residual) > balance_tol:
        raise DomainError(f"e={e:.12g} is not a solved rate (balance residual {residual:.3e})")

    a = e / t.theta
    b = t.theta_star * e
    d_a = float(model.D(a))
    dd_a = float(model.dD(a))
    dds_b = float(model.dDstar(b))

    denom = d_a + a * dd_a - t.theta_star * dds_b
    if abs(denom) < SINGULAR_DENOMINATOR:
        raise SingularDenominator(denom)

    return RateSensitivities(
        de_dtheta=(e * e / (t.theta * t.theta)) * dd_a / denom,
        de_dtheta_star=e * dds_b / denom,
        denominator=denom,
    )


def reciprocal_rate_check(
    model: MarketModel, t: TariffPair, cfg: Optional[SolverConfig] = None
) -> ReciprocalRateReport:
    """For symmetric nations e(theta*, theta) = 1 / e(theta, theta*)."""
    if not model.symmetric_flag:
        raise DomainError("reciprocal rate check needs a symmetric model")
    rate = solve_rate(model, t, cfg).rate_e
    rate_swapped = solve_rate(model, t.swapped(), cfg).rate_e
    return ReciprocalRateReport(
        rate=rate,
        rate_swapped=rate_swapped,
        product_error=abs(rate * rate_swapped - 1.0),
    )
