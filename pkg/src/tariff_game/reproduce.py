"""
Worked-Example Reproduction

Runs the three reference markets end to end and compares each quantity with
its published value:

    schwartz         rational_square, symmetric: (1, 1/3, 1/3)
    clipped_linear   alpha in {0.25, 0.5, 0.8}:  theta = theta* = 2 alpha/(1 + alpha)
    exponential      (alpha, beta, delta) = (0.01, 2, 2.5): (0.81, 0.54, 0.73),
                     e_theta = 1.13, e_theta* = -0.49
"""

import time
from typing import Callable, List, Optional

from loguru import logger

from src.tariff_game.demand import reference_model
from src.tariff_game.errors import TariffGameError
from src.tariff_game.nash import solve_exponential_family, solve_nash, solve_symmetric
from src.tariff_game.structures import (
    EquilibriumTriple,
    ReproductionCheck,
    ReproductionReport,
    SolverConfig,
)

CLIPPED_ALPHAS = (0.25, 0.5, 0.8)
EXPONENTIAL_PARAMS = (0.01, 2.0, 2.5)


class ReproductionEvaluator:
    """
    Compares solver output against the reference values of the worked examples.
    """

    def __init__(self, cfg: Optional[SolverConfig] = None):
        self.cfg = cfg or SolverConfig()
        self.checks: List[ReproductionCheck] = []

    def run(self) -> ReproductionReport:
        """Evaluate every block; a block whose solver fails records failed checks."""
        start = time.perf_counter()
        self.checks = []
        self._guard("schwartz", self._schwartz)
        for alpha in CLIPPED_ALPHAS:
            self._guard(
                f"clipped_linear(alpha={alpha})",
                lambda block, a=alpha: self._clipped_linear(a, block),
            )
        self._guard("exponential", self._exponential)
        report = ReproductionReport(checks=list(self.checks), wall_time=time.perf_counter() - start)

        logger.info(
            f"Reproduction: {len(report.checks) - len(report.failures)}/{len(report.checks)} "
            f"checks passed in {report.wall_time:.2f}s"
        )
        return report

    # ==================== Blocks ====================

    def _schwartz(self, block: str) -> None:
        triple = solve_nash(reference_model("schwartz"), self.cfg)
        self._triple(block, triple, (1.0, 1.0 / 3.0, 1.0 / 3.0), 1e-8)
        self._soc(block, triple)

    def _clipped_linear(self, alpha: float, block: str) -> None:
        triple = solve_symmetric(reference_model("clipped_linear", alpha=alpha), self.cfg)
        self._compare(block, "theta", 2 * alpha / (1 + alpha), triple.theta_hat, 1e-8)
        self._soc(block, triple)

    def _exponential(self, block: str) -> None:
        alpha, beta, delta = EXPONENTIAL_PARAMS
        closed = solve_exponential_family(alpha, beta, delta, self.cfg)

        self._triple(block, closed, (0.81, 0.54, 0.73), 5e-3)
        self._compare(block, "closed form vs Newton", 0.0, closed.diagnostics.get("generic_gap"), 1e-6)
        sens = closed.sensitivities
        self._compare(block, "e_theta", 1.13, sens.de_dtheta if sens else None, 1e-2)
        self._compare(block, "e_theta_star", -0.49, sens.de_dtheta_star if sens else None, 1e-2)
        self._soc(block, closed)

    # ==================== Helpers ====================

    def _guard(self, block: str, run: Callable[[str], None]) -> None:
        try:
            run(block)
        except TariffGameError as err:
            logger.error(f"{block}: {type(err).__name__}: {err}")
            self.checks.append(
                ReproductionCheck(
                    block=block,
                    quantity="solver",
                    expected=0.0,
                    tolerance=0.0,
                    note=f"{type(err).__name__}: {err}",
                )
            )

    def _compare(
        self, block: str, quantity: str, expected: float, actual: Optional[float], tol: float
    ) -> None:
        passed = actual is not None and abs(actual - expected) <= tol
        self.checks.append(
            ReproductionCheck(
                block=block,
                quantity=quantity,
                expected=expected,
                actual=actual,
                tolerance=tol,
                passed=passed,
            )
        )

    def _triple(self, block: str, triple: EquilibriumTriple, expected, tol: float) -> None:
        actual = (triple.e_hat, triple.theta_hat, triple.theta_star_hat)
        for name, want, got in zip(("e", "theta", "theta_star"), expected, actual):
            self._compare(block, name, want, got, tol)

    def _soc(self, block: str, triple: EquilibriumTriple) -> None:
        for name, flag in zip(("ine1", "ine2"), triple.soc_pass):
            self.checks.append(
                ReproductionCheck(
                    block=block,
                    quantity=f"second order {name}",
                    expected=1.0,
                    actual=float(flag),
                    tolerance=0.0,
                    passed=bool(flag),
                )
            )


def format_table(report: ReproductionReport) -> str:
    """Plain-text pass/fail table."""
    header = f"{'block':<26} {'quantity':<24} {'expected':>14} {'actual':>16} {'tol':>8}  result"
    lines = [header, "-" * len(header)]
    for c in report.checks:
        actual = "-" if c.actual is None else f"{c.actual:.10g}"
        lines.append(
            f"{c.block:<26} {c.quantity:<24} {c.expected:>14.6g} {actual:>16} "
            f"{c.tolerance:>8.0e}  {'PASS' if c.passed else 'FAIL'}"
            + (f"  ({c.note})" if c.note else "")
        )
    lines.append(f"{'ALL PASS' if report.passed else 'MISMATCH'} in {report.wall_time:.2f}s")
    return "\n".join(lines)
