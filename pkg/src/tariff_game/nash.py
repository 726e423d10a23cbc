"""
Nash Equilibrium Tariffs

An interior Nash point (e, theta, theta*) of the tariff game solves

    r1 = e D(e/theta) - D*(theta* e)                      = 0   (balance)
    r2 = D(e/theta) - theta*(1 - theta) D*'(theta* e)      = 0   (domestic FOC)
    r3 = D(e/theta) - (e/theta)(theta* - 1) D'(e/theta)    = 0   (foreign FOC)

and both gains are locally concave in the own tariff there. The generic
solver runs damped Newton on (r1, r2, r3) from the best points of a tariff
scan; best-response iteration is a derivative-free oracle for the same point;
symmetric and exponential markets have scalar fast paths.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import bisect, minimize_scalar

from src.tariff_game.demand import MarketModel, reference_model
from src.tariff_game.equilibrium import (
    check_rate,
    check_tariffs,
    rate_sensitivities,
    solve_rate,
)
from src.tariff_game.errors import (
    BoundaryError,
    DomainError,
    NoNashFound,
    NonConvergent,
    SaddleRejected,
    TariffGameError,
    describe,
)
from src.tariff_game.gains import evaluate_gains, gain_for
from src.tariff_game.structures import (
    DEFAULT_M,
    EquilibriumTriple,
    RateSensitivities,
    Role,
    SecondOrderReport,
    SolverConfig,
    TariffPair,
)

BOUNDARY_TOL = 1e-9
DEDUP_TOL = 1e-6
# smallest Newton step factor before a start is abandoned
MIN_STEP = 1e-12
POLISH_STEPS = 3
BR_STEP_TOL = 1e-6


# ==================== First-Order Conditions ====================

def _residual_vector(model: MarketModel, z: Sequence[float]) -> np.ndarray:
    e, theta, theta_star = z
    a = e / theta
    b = theta_star * e
    d_a = model.D(a)
    return np.array(
        [
            e * d_a - model.Dstar(b),
            d_a - theta_star * (1.0 - theta) * model.dDstar(b),
            d_a - a * (theta_star - 1.0) * model.dD(a),
        ]
    )


def foc_residuals(model: MarketModel, e: float, t: TariffPair) -> Tuple[float, float, float]:
    """The residuals (r1, r2, r3) of the Nash system at (e, theta, theta*)."""
    check_rate(model, e)
    check_tariffs(model, t)
    r1, r2, r3 = _residual_vector(model, (e, t.theta, t.theta_star))
    return float(r1), float(r2), float(r3)


def foc_residuals_reduced(model: MarketModel, e: float, t: TariffPair) -> Tuple[float, float]:
    """
    Alternative forms of the foreign-side conditions, both zero at a Nash point:

        s1 = D*(theta* e) - e theta*(1 - theta) D*'(theta* e)
        s2 = D~(e~/theta*) - (e~/theta*)(theta - 1) D~'(e~/theta*)

    with e~ = 1/e and D~(x) = D*(1/x) the demand of the reciprocal market.
    """
    check_rate(model, e)
    check_tariffs(model, t)
    b = t.theta_star * e
    s1 = model.Dstar(b) - e * t.theta_star * (1.0 - t.theta) * model.dDstar(b)

    recip = model.reciprocal()
    c = (1.0 / e) / t.theta_star
    s2 = recip.D(c) - c * (t.theta - 1.0) * recip.dD(c)
    return float(s1), float(s2)


# ==================== Second-Order Conditions ====================

def second_order_report(
    model: MarketModel,
    e: float,
    t: TariffPair,
    sens: Optional[RateSensitivities] = None,
    balance_tol: float = 1e-7,
) -> SecondOrderReport:
    """
    Second-order conditions at a first-order point.

        ine1 = theta*^2 (1-theta) e_theta D*''(b) - theta* D*'(b)
               - ((e_theta theta - e)/theta^2) D'(a)                       < 0
        ine2 = ((2-theta*) e_theta* - e) D'(a)
               + ((1-theta*) e e_theta*/theta) D''(a)                      > 0

    with a = e/theta and b = theta* e. The domestic curvature of the gain is
    (e_theta/theta) ine1 and the foreign one (e_theta*/(theta* e)) ine2/theta.
    """
    if sens is None:
        sens = rate_sensitivities(model, e, t, balance_tol=balance_tol)
    theta, theta_star = t.theta, t.theta_star
    e_t, e_ts = sens.de_dtheta, sens.de_dtheta_star
    a = e / theta
    b = theta_star * e

    d1_a = float(model.dD(a))
    d2_a = float(model.dD(a, 2))
    ds1_b = float(model.dDstar(b))
    ds2_b = float(model.dDstar(b, 2))

    ine1 = (
        theta_star**2 * (1.0 - theta) * e_t * ds2_b
        - theta_star * ds1_b
        - ((e_t * theta - e) / theta**2) * d1_a
    )
    ine2 = ((2.0 - theta_star) * e_ts - e) * d1_a + ((1.0 - theta_star) * e * e_ts / theta) * d2_a
    ine2_literal = theta * (theta_star * e_ts + e) * d1_a - (1.0 - theta_star) * e_ts * e * d2_a

    return SecondOrderReport(
        ine1=ine1,
        ine2=ine2,
        ine2_literal=ine2_literal,
        curvature_domestic=(e_t / theta) * ine1,
        curvature_foreign=(e_ts / (theta_star * e)) * (ine2 / theta),
    )


def check_second_order(model: MarketModel, triple: EquilibriumTriple) -> Tuple[bool, bool]:
    """Strict-inequality flags (ine1 < 0, ine2 > 0) at a triple."""
    report = second_order_report(model, triple.e_hat, triple.tariffs, triple.sensitivities)
    return report.passed


def gain_curvature(model: MarketModel, triple: EquilibriumTriple) -> Tuple[float, float]:
    """Second derivatives of G in theta and of G* in theta* at a first-order point."""
    report = second_order_report(model, triple.e_hat, triple.tariffs, triple.sensitivities)
    return report.curvature_domestic, report.curvature_foreign


# ==================== Candidate Assessment ====================

def _on_boundary(model: MarketModel, e: float, theta: float, theta_star: float) -> bool:
    edges = (model.lower, 1.0)
    return (
        any(abs(theta - edge) <= BOUNDARY_TOL for edge in edges)
        or any(abs(theta_star - edge) <= BOUNDARY_TOL for edge in edges)
        or abs(e - model.lower) <= BOUNDARY_TOL
        or abs(e - model.M) <= BOUNDARY_TOL
    )


def _no_trade(model: MarketModel, e: float, theta: float, theta_star: float) -> bool:
    """Degenerate points where neither nation imports satisfy the FOC trivially."""
    return float(model.D(e / theta)) <= 0.0 or float(model.Dstar(theta_star * e)) <= 0.0


def assess(
    model: MarketModel,
    e: float,
    t: TariffPair,
    cfg: SolverConfig,
    method: str,
    diagnostics: Optional[Dict[str, Any]] = None,
) -> EquilibriumTriple:
    """Residuals, sensitivities, second-order flags and gains at a point."""
    diagnostics = dict(diagnostics or {})
    try:
        residuals = foc_residuals(model, e, t)
    except DomainError as err:
        residuals = (math.nan, math.nan, math.nan)
        diagnostics["residual_error"] = describe(err)

    sens = None
    soc = (False, False)
    try:
        sens = rate_sensitivities(model, e, t, balance_tol=10.0 * cfg.tol_nash + abs(residuals[0]))
        report = second_order_report(model, e, t, sens)
        soc = report.passed
        diagnostics["second_order"] = report.model_dump()
    except TariffGameError as err:
        diagnostics["second_order_error"] = describe(err)

    gain_domestic = gain_foreign = None
    try:
        gains = evaluate_gains(model, t, e, cfg)
        gain_domestic, gain_foreign = gains.gain_domestic, gains.gain_foreign
        diagnostics["gains_regularized"] = gains.regularized
    except TariffGameError as err:
        diagnostics["gain_error"] = describe(err)

    return EquilibriumTriple(
        e_hat=e,
        theta_hat=t.theta,
        theta_star_hat=t.theta_star,
        foc_residuals=residuals,
        soc_pass=soc,
        sensitivities=sens,
        boundary_flag=_on_boundary(model, e, t.theta, t.theta_star),
        method=method,
        gain_domestic=gain_domestic,
        gain_foreign=gain_foreign,
        diagnostics=diagnostics,
    )


def _rank_key(triple: EquilibriumTriple) -> Tuple[bool, bool, float, float]:
    total_gain = (triple.gain_domestic or 0.0) + (triple.gain_foreign or 0.0)
    norm = triple.residual_norm if not math.isnan(triple.residual_norm) else math.inf
    return (not all(triple.soc_pass), triple.boundary_flag, norm, -total_gain)


def _summary(triple: EquilibriumTriple) -> Dict[str, Any]:
    return {
        "e": triple.e_hat,
        "theta": triple.theta_hat,
        "theta_star": triple.theta_star_hat,
        "residual_norm": triple.residual_norm,
        "soc_pass": list(triple.soc_pass),
        "boundary": triple.boundary_flag,
    }


def _select(triples: List[EquilibriumTriple]) -> EquilibriumTriple:
    """Best-ranked triple carrying every candidate; SaddleRejected if it fails the SOC."""
    triples = sorted(triples, key=_rank_key)
    best = triples[0].model_copy(update={"candidates": [_summary(t) for t in triples]})
    if len(triples) > 1:
        logger.warning(f"{len(triples)} first-order points found; reporting the best ranked")
    if not all(best.soc_pass):
        raise SaddleRejected(best)
    return best


# ==================== Damped Newton ====================

@dataclass
class _NewtonRun:
    z: np.ndarray
    residuals: np.ndarray
    iterations: int
    converged: bool
    history: List[float] = field(default_factory=list)


def _in_box(model: MarketModel, z: np.ndarray) -> bool:
    e, theta, theta_star = z
    lo = model.lower
    return lo <= e <= model.M and lo <= theta <= 1.0 and lo <= theta_star <= 1.0


def _jacobian(model: MarketModel, z: np.ndarray, h: float) -> np.ndarray:
    jac = np.empty((3, 3))
    for j in range(3):
        step = np.zeros(3)
        step[j] = h
        jac[:, j] = (_residual_vector(model, z + step) - _residual_vector(model, z - step)) / (2 * h)
    return jac


def _newton(model: MarketModel, z0: np.ndarray, cfg: SolverConfig) -> _NewtonRun:
    z = np.asarray(z0, dtype=float).copy()
    F = _residual_vector(model, z)
    run = _NewtonRun(z=z, residuals=F, iterations=0, converged=False)

    for it in range(cfg.max_newton_iters + 1):
        run.iterations = it
        run.history.append(float(np.max(np.abs(F))))
        if np.max(np.abs(F)) <= cfg.tol_nash:
            run.converged = True
            break
        if it == cfg.max_newton_iters:
            break

        jac = _jacobian(model, z, cfg.jacobian_step)
        try:
            step = np.linalg.solve(jac, -F)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -F, rcond=None)[0]

        norm = float(np.linalg.norm(F))
        lam = 1.0
        while lam >= MIN_STEP:
            candidate = z + lam * step
            if _in_box(model, candidate):
                try:
                    F_new = _residual_vector(model, candidate)
                except DomainError:
                    F_new = None
                if F_new is not None and np.all(np.isfinite(F_new)):
                    if np.linalg.norm(F_new) < norm:
                        break
            lam *= cfg.newton_damping
        else:
            logger.debug(f"Newton stalled at z={z} after {it} iterations")
            break

        z, F = candidate, F_new
        run.z, run.residuals = z, F

    if run.converged:
        _polish(model, run, cfg)
    return run


def _polish(model: MarketModel, run: _NewtonRun, cfg: SolverConfig) -> None:
    """Full Newton steps past tol_nash while they keep reducing the residual."""
    for _ in range(POLISH_STEPS):
        try:
            step = np.linalg.solve(_jacobian(model, run.z, cfg.jacobian_step), -run.residuals)
            candidate = run.z + step
            if not _in_box(model, candidate):
                return
            F_new = _residual_vector(model, candidate)
        except (np.linalg.LinAlgError, DomainError):
            return
        if not np.all(np.isfinite(F_new)) or np.linalg.norm(F_new) >= np.linalg.norm(run.residuals):
            return
        run.z, run.residuals = candidate, F_new
        run.history.append(float(np.max(np.abs(F_new))))


def _seeds(model: MarketModel, cfg: SolverConfig) -> List[Tuple[float, np.ndarray]]:
    """
    Interior scan points ranked by |(r2, r3)| / D(e/theta), e from the rate solver.

    The raw norm vanishes where trade dies out (theta* near 1/M). Box edges
    are not seeded.
    """
    grid = np.linspace(model.lower, 1.0, cfg.seed_grid)[1:-1]
    seeds: List[Tuple[float, np.ndarray]] = []
    skipped = 0
    for theta in grid:
        for theta_star in grid:
            t = TariffPair(theta=float(theta), theta_star=float(theta_star))
            try:
                e = solve_rate(model, t, cfg).rate_e
                if _no_trade(model, e, t.theta, t.theta_star):
                    continue
                r = _residual_vector(model, (e, t.theta, t.theta_star))
            except TariffGameError as err:
                skipped += 1
                logger.debug(f"Seed ({theta:.4f}, {theta_star:.4f}) skipped: {err}")
                continue
            scale = float(model.D(e / theta))
            seeds.append((math.hypot(r[1], r[2]) / scale, np.array([e, theta, theta_star])))
    if skipped:
        logger.info(f"Seed scan skipped {skipped} of {grid.size ** 2} points")
    seeds.sort(key=lambda s: s[0])
    return seeds


def solve_nash(
    model: MarketModel,
    cfg: Optional[SolverConfig] = None,
    starts: Optional[Sequence[Sequence[float]]] = None,
) -> EquilibriumTriple:
    """
    Solve the three-equation Nash system by damped Newton.

    Args:
        model: smooth market model (parametric or kernel-smoothed empirical)
        cfg: solver configuration
        starts: explicit (e, theta, theta*) starts; by default the
            cfg.newton_starts best points of the seed scan, followed by
            further seeds while none has converged

    Returns:
        The best-ranked converged triple with every candidate attached

    Raises:
        NoNashFound: no start converged to a trading first-order point
        SaddleRejected: the best converged point fails the second-order conditions
    """
    cfg = cfg or SolverConfig()
    if not model.is_smooth:
        raise DomainError("Nash system needs derivatives; smooth the empirical model first")

    scanned = starts is None
    if scanned:
        starts = [z for _, z in _seeds(model, cfg)]
        logger.info(f"Running damped Newton from the best {cfg.newton_starts} of {len(starts)} seeds")

    found: List[np.ndarray] = []
    triples: List[EquilibriumTriple] = []
    for k, z0 in enumerate(starts):
        # scanned seeds past newton_starts are tried only until one converges
        if scanned and k >= cfg.newton_starts and triples:
            break
        try:
            run = _newton(model, np.asarray(z0, dtype=float), cfg)
        except TariffGameError as err:
            logger.debug(f"Start {k} failed: {err}")
            continue
        if not run.converged:
            logger.debug(f"Start {k} did not converge (|F| = {run.history[-1]:.3e})")
            continue
        e, theta, theta_star = (float(v) for v in run.z)
        if _no_trade(model, e, theta, theta_star):
            continue
        if any(np.max(np.abs(run.z - other)) <= DEDUP_TOL for other in found):
            continue
        found.append(run.z)
        triples.append(
            assess(
                model,
                e,
                TariffPair(theta=theta, theta_star=theta_star),
                cfg,
                method="newton",
                diagnostics={"iterations": run.iterations, "start": [float(v) for v in z0]},
            )
        )

    if not triples:
        raise NoNashFound(f"none of {len(starts)} Newton starts converged")

    best = _select(triples)
    logger.info(
        f"Nash point e={best.e_hat:.10g}, theta={best.theta_hat:.10g}, "
        f"theta*={best.theta_star_hat:.10g} (|r|={best.residual_norm:.2e})"
    )
    return best


# ==================== Best Response ====================

def _own_gain(
    model: MarketModel, side: Role, own: float, opponent: float, cfg: SolverConfig
) -> float:
    if side == Role.DOMESTIC:
        t = TariffPair(theta=own, theta_star=opponent)
    else:
        t = TariffPair(theta=opponent, theta_star=own)
    e = solve_rate(model, t, cfg, tol=cfg.tol_root_oracle).rate_e
    return gain_for(model, side, e, t, cfg)


def best_response(
    model: MarketModel,
    side: Role,
    opponent_tariff: float,
    cfg: Optional[SolverConfig] = None,
) -> float:
    """
    Own tariff maximising the side's gain against a fixed opponent tariff.

    A best_response_grid scan of [1/M, 1] is refined by bounded Brent search
    (golden section with parabolic steps) around the best grid point. Grid
    points where the rate cannot be solved are skipped.
    """
    cfg = cfg or SolverConfig()
    if not model.lower <= opponent_tariff <= 1.0:
        raise DomainError(f"opponent tariff {opponent_tariff} outside [{model.lower:.6g}, 1]")

    grid = np.linspace(model.lower, 1.0, cfg.best_response_grid)
    values = np.full(grid.size, -np.inf)
    skipped: List[Dict[str, Any]] = []
    for i, own in enumerate(grid):
        try:
            values[i] = _own_gain(model, side, float(own), opponent_tariff, cfg)
        except TariffGameError as err:
            skipped.append({"own": float(own), **describe(err)})
    if skipped:
        logger.warning(f"Best response ({side.value}) skipped {len(skipped)} grid points")
    if not np.any(np.isfinite(values)):
        raise NoNashFound(f"no admissible {side.value} tariff against {opponent_tariff:.6g}")

    i = int(np.argmax(values))
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, grid.size - 1)])

    def objective(own: float) -> float:
        try:
            return -_own_gain(model, side, own, opponent_tariff, cfg)
        except TariffGameError:
            return np.inf

    result = minimize_scalar(
        objective, bounds=(lo, hi), method="bounded", options={"xatol": cfg.tol_argmax / 10}
    )
    if np.isfinite(result.fun) and -result.fun >= values[i]:
        return float(result.x)
    return float(grid[i])


def best_response_iteration(
    model: MarketModel,
    start: TariffPair,
    cfg: Optional[SolverConfig] = None,
) -> EquilibriumTriple:
    """
    Alternate best responses (domestic, then foreign) until the tariffs move
    by less than the step tolerance.

    Raises:
        NonConvergent: no fixed point within cfg.max_rounds, with the trajectory
    """
    cfg = cfg or SolverConfig()
    check_tariffs(model, start)
    # the argmax is only known to tol_argmax, so steps below that are noise
    step_tol = max(BR_STEP_TOL, 2.0 * cfg.tol_argmax)

    theta, theta_star = start.theta, start.theta_star
    trajectory = [(theta, theta_star)]
    for round_no in range(1, cfg.max_rounds + 1):
        new_theta = best_response(model, Role.DOMESTIC, theta_star, cfg)
        new_theta_star = best_response(model, Role.FOREIGN, new_theta, cfg)
        delta = max(abs(new_theta - theta), abs(new_theta_star - theta_star))
        theta, theta_star = new_theta, new_theta_star
        trajectory.append((theta, theta_star))
        logger.debug(f"Round {round_no}: theta={theta:.8f}, theta*={theta_star:.8f}, step={delta:.2e}")
        if delta < step_tol:
            break
    else:
        raise NonConvergent(trajectory)

    t = TariffPair(theta=theta, theta_star=theta_star)
    e = solve_rate(model, t, cfg, tol=cfg.tol_root_oracle).rate_e
    logger.info(f"Best-response iteration settled after {round_no} rounds")
    return assess(
        model,
        e,
        t,
        cfg,
        method="best_response",
        diagnostics={"rounds": round_no, "trajectory": [list(p) for p in trajectory]},
    )


# ==================== Symmetric Fast Path ====================

def _bracketed_roots(f, grid: np.ndarray, xtol: float) -> List[float]:
    """Bisection roots of every strict sign change of f on the grid; NaNs are skipped."""
    values = np.array([f(x) for x in grid])
    roots = []
    for i in range(grid.size - 1):
        v0, v1 = values[i], values[i + 1]
        if np.isfinite(v0) and np.isfinite(v1) and v0 * v1 < 0.0:
            roots.append(float(bisect(f, grid[i], grid[i + 1], xtol=xtol, maxiter=500)))
    return roots


def solve_symmetric(model: MarketModel, cfg: Optional[SolverConfig] = None) -> EquilibriumTriple:
    """
    Nash point of symmetric nations: e = 1 and theta = theta* solving

        theta D(1/theta) = (theta - 1) D'(1/theta)   on [1/M, 1].
    """
    cfg = cfg or SolverConfig()
    if not model.symmetric_flag:
        raise DomainError("symmetric fast path needs a symmetric model")

    def phi(theta: float) -> float:
        try:
            y = 1.0 / theta
            return theta * float(model.D(y)) - (theta - 1.0) * float(model.dD(y))
        except DomainError:
            return math.nan

    grid = np.linspace(model.lower, 1.0, cfg.scan_points)
    roots = _bracketed_roots(phi, grid, xtol=min(cfg.tol_root, 1e-12))
    if not roots:
        raise NoNashFound("symmetric equation has no sign change on [1/M, 1]")

    triples = [
        assess(model, 1.0, TariffPair(theta=r, theta_star=r), cfg, method="symmetric")
        for r in roots
    ]
    triples = sorted(triples, key=_rank_key)
    best = triples[0].model_copy(update={"candidates": [_summary(t) for t in triples]})
    logger.info(f"Symmetric Nash tariff theta = theta* = {best.theta_hat:.12g}")
    return best


# ==================== Exponential Fast Path ====================

def exponential_sensitivities(
    alpha: float, beta: float, delta: float, theta: float, theta_star: float
) -> RateSensitivities:
    """
    Closed-form rate sensitivities of D(x) = exp(-delta x) against
    D*(x) = alpha x exp(beta x) before the clip:

        e_theta  = -delta ln(alpha theta*) / (theta theta* beta + delta)^2
        e_theta* = (beta theta^2 theta* ln(alpha theta*) - theta (theta theta* beta + delta))
                   / (theta* (theta theta* beta + delta)^2)
    """
    L = math.log(alpha * theta_star)
    s = theta * theta_star * beta + delta
    e = -theta * L / s
    a, b = e / theta, theta_star * e
    denom = (
        math.exp(-delta * a)
        - a * delta * math.exp(-delta * a)
        - theta_star * alpha * (beta * b + 1.0) * math.exp(beta * b)
    )
    return RateSensitivities(
        de_dtheta=-delta * L / s**2,
        de_dtheta_star=(beta * theta**2 * theta_star * L - theta * s) / (theta_star * s**2),
        denominator=denom,
    )


def solve_exponential_family(
    alpha: float,
    beta: float,
    delta: float,
    cfg: Optional[SolverConfig] = None,
    M: float = DEFAULT_M,
    cross_check: bool = True,
) -> EquilibriumTriple:
    """
    Nash point of D(x) = exp(-delta x) against D*(x) = min(alpha x exp(beta x), 1).

    theta* solves, with L = ln(alpha theta*),

        beta t (t-1) = (t beta - (t-1) delta L + delta)(t - (t-1) L),

    then theta = ((theta*-1) delta L - delta)/(theta* beta) and
    e = -theta L/(theta theta* beta + delta).

    With cross_check the generic Newton solver is run on the same market and
    the largest coordinate gap is stored as diagnostics["generic_gap"].
    """
    cfg = cfg or SolverConfig()
    if not (alpha > 0 and beta > 0 and delta > 0):
        raise DomainError("alpha, beta, delta must be positive")
    if not alpha < 1:
        raise DomainError(f"alpha={alpha} must be < 1")
    model = reference_model("exponential", alpha=alpha, beta=beta, delta=delta).with_bound(M)

    def h(t: float) -> float:
        L = math.log(alpha * t)
        return beta * t * (t - 1.0) - (t * beta - (t - 1.0) * delta * L + delta) * (t - (t - 1.0) * L)

    grid = np.linspace(model.lower, 1.0, cfg.scan_points)[1:-1]
    roots = _bracketed_roots(h, grid, xtol=min(cfg.tol_root, 1e-14))
    if not roots:
        raise NoNashFound("theta* equation has no sign change on (1/M, 1)")

    triples: List[EquilibriumTriple] = []
    rejected: List[str] = []
    for theta_star in roots:
        L = math.log(alpha * theta_star)
        theta = ((theta_star - 1.0) * delta * L - delta) / (theta_star * beta)
        if not model.lower <= theta <= 1.0:
            rejected.append(f"theta*={theta_star:.6g} gives theta={theta:.6g}")
            continue
        e = -theta * L / (theta * theta_star * beta + delta)
        if not model.lower <= e <= model.M:
            rejected.append(f"theta*={theta_star:.6g} gives e={e:.6g}")
            continue
        b = theta_star * e
        if alpha * b * math.exp(beta * b) >= 1.0:
            rejected.append(f"theta*={theta_star:.6g} leaves the unclipped region")
            continue
        t = TariffPair(theta=theta, theta_star=theta_star)
        triple = assess(model, e, t, cfg, method="exp_family")
        closed = exponential_sensitivities(alpha, beta, delta, theta, theta_star)
        triple.diagnostics["closed_form_sensitivities"] = closed.model_dump()
        triples.append(triple)

    if not triples:
        raise BoundaryError("; ".join(rejected))
    for reason in rejected:
        logger.debug(f"Closed-form root dropped: {reason}")

    best = _select(triples)
    if cross_check:
        generic = solve_nash(model, cfg)
        gap = max(
            abs(generic.e_hat - best.e_hat),
            abs(generic.theta_hat - best.theta_hat),
            abs(generic.theta_star_hat - best.theta_star_hat),
        )
        best.diagnostics["generic_gap"] = gap
        if gap > 1e-6:
            logger.warning(f"Closed form and generic solver differ by {gap:.3e}")
    return best
