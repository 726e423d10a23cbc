"""
Sweeps and Curve Export

Tabular outputs for plotting: demand curves, the equilibrium-rate surface
over the tariff box and the gain sweep. Grid cells are independent and are
evaluated concurrently on worker threads; failed cells stay empty instead of
aborting the sweep (the rate surface also names the error class), and rows
are sorted by
(theta, theta_star) so the output does not depend on scheduling.
"""

import asyncio
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from src.tariff_game.demand import MarketModel
from src.tariff_game.equilibrium import solve_rate
from src.tariff_game.errors import DomainError, TariffGameError
from src.tariff_game.gains import evaluate_gains
from src.tariff_game.structures import SolverConfig, TariffPair

CURVE_COLUMNS = ["x", "D", "Dstar", "Dstar_recip"]
SURFACE_COLUMNS = ["theta", "theta_star", "e", "error"]
SWEEP_COLUMNS = ["theta", "theta_star", "e", "G", "Gstar"]


def demand_curves(
    model: MarketModel, x_min: float = 0.0, x_max: float = 10.0, points: int = 200
) -> pd.DataFrame:
    """
    D(x), D*(x) and D*(1/x) on a log-spaced grid. When x_min is 0 the first
    row is x = 0 itself, followed by points - 1 log-spaced values.
    """
    if points < 2:
        raise DomainError(f"points must be >= 2, got {points}")
    if x_min < 0 or x_max <= x_min:
        raise DomainError(f"invalid curve range [{x_min}, {x_max}]")

    if x_min == 0.0:
        x = np.concatenate(([0.0], np.geomspace(x_max * 1e-4, x_max, points - 1)))
    else:
        x = np.geomspace(x_min, x_max, points)
    with np.errstate(divide="ignore"):
        recip = np.where(x > 0, 1.0 / np.where(x > 0, x, 1.0), np.inf)

    return pd.DataFrame(
        {
            "x": x,
            "D": model.D(x),
            "Dstar": model.Dstar(x),
            "Dstar_recip": model.Dstar(recip),
        },
        columns=CURVE_COLUMNS,
    )


def tariff_grid(model: MarketModel, grid_k: int) -> List[Tuple[float, float]]:
    if grid_k < 2:
        raise DomainError(f"grid must be >= 2, got {grid_k}")
    axis = np.linspace(model.lower, 1.0, grid_k)
    return [(float(a), float(b)) for a in axis for b in axis]


async def _run_cells(
    cells: Sequence[Tuple[float, float]],
    evaluate: Callable[[float, float], Dict[str, Any]],
    workers: int,
) -> List[Dict[str, Any]]:
    semaphore = asyncio.Semaphore(workers)

    async def run(cell: Tuple[float, float]) -> Dict[str, Any]:
        async with semaphore:
            return await asyncio.to_thread(evaluate, *cell)

    async with asyncio.TaskGroup() as tg:
        tasks = [tg.create_task(run(cell)) for cell in cells]
    return [task.result() for task in tasks]


def run_grid(
    cells: Sequence[Tuple[float, float]],
    evaluate: Callable[[float, float], Dict[str, Any]],
    columns: List[str],
    workers: int = 4,
) -> pd.DataFrame:
    rows = asyncio.run(_run_cells(cells, evaluate, workers))
    failed = sum(1 for row in rows if row.get("error"))
    if failed:
        logger.warning(f"{failed} of {len(rows)} grid cells failed")
    frame = pd.DataFrame(rows, columns=columns)
    return frame.sort_values(["theta", "theta_star"], kind="stable").reset_index(drop=True)


def rate_surface(
    model: MarketModel,
    grid_k: int,
    cfg: Optional[SolverConfig] = None,
    workers: int = 4,
) -> pd.DataFrame:
    """Equilibrium rate over a grid_k x grid_k grid of the tariff box."""
    cfg = cfg or SolverConfig()

    def cell(theta: float, theta_star: float) -> Dict[str, Any]:
        row: Dict[str, Any] = {"theta": theta, "theta_star": theta_star, "e": None, "error": ""}
        try:
            row["e"] = solve_rate(model, TariffPair(theta=theta, theta_star=theta_star), cfg).rate_e
        except TariffGameError as err:
            row["error"] = type(err).__name__
        return row

    logger.info(f"Rate surface on a {grid_k}x{grid_k} grid ({workers} workers)")
    return run_grid(tariff_grid(model, grid_k), cell, SURFACE_COLUMNS, workers)


def gain_sweep(
    model: MarketModel,
    grid_k: int,
    cfg: Optional[SolverConfig] = None,
    workers: int = 4,
) -> pd.DataFrame:
    """Rate and both gains over a grid_k x grid_k grid of the tariff box."""
    cfg = cfg or SolverConfig()

    def cell(theta: float, theta_star: float) -> Dict[str, Any]:
        row: Dict[str, Any] = {
            "theta": theta,
            "theta_star": theta_star,
            "e": None,
            "G": None,
            "Gstar": None,
            "error": "",
        }
        try:
            report = evaluate_gains(model, TariffPair(theta=theta, theta_star=theta_star), cfg=cfg)
            row.update(e=report.rate_e, G=report.gain_domestic, Gstar=report.gain_foreign)
        except TariffGameError as err:
            row["error"] = type(err).__name__
        return row

    logger.info(f"Gain sweep on a {grid_k}x{grid_k} grid ({workers} workers)")
    return run_grid(tariff_grid(model, grid_k), cell, SWEEP_COLUMNS, workers)


def to_csv(frame: pd.DataFrame, digits: int = 12) -> str:
    """CSV text with fixed significant digits; missing values are empty."""
    return frame.to_csv(index=False, float_format=f"%.{digits}g", na_rep="", lineterminator="\n")
