"""
Tariff Game Errors

Exception hierarchy shared by the solvers. Library code raises these; only the
command-line layer maps them to exit codes.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, List, Optional, Tuple

if TYPE_CHECKING:
    from src.tariff_game.structures import EquilibriumTriple


class TariffGameError(Exception):
    """Base class for every solver failure."""


class ConfigError(TariffGameError):
    """Unreadable or invalid model/configuration document."""


class DomainError(TariffGameError, ValueError):
    """Argument outside the function domain or the tariff/rate box."""


class KinkError(DomainError):
    """Derivative requested exactly at the clip point of a clipped family."""

    def __init__(self, x: float, left_value: float, right_value: float):
        self.x = x
        self.left_value = left_value
        self.right_value = right_value
        super().__init__(
            f"derivative undefined at kink x={x:.12g} "
            f"(left={left_value:.12g}, right={right_value:.12g})"
        )


class NoEquilibriumInBox(TariffGameError):
    """The currency balance has no sign change on [1/M, M]."""


class SingularDenominator(TariffGameError):
    """The rate sensitivities do not exist (balance slope vanishes)."""

    def __init__(self, denominator: float):
        self.denominator = denominator
        super().__init__(f"balance slope {denominator:.3e} too close to zero")


class IntegrationError(TariffGameError):
    """Quadrature did not converge."""


class BoundaryError(TariffGameError):
    """A closed-form solution left the admissible box."""


class NoNashFound(TariffGameError):
    """No start converged to a solution of the first-order system."""


class SaddleRejected(TariffGameError):
    """A first-order point was found but the second-order conditions fail."""

    def __init__(self, triple: "EquilibriumTriple"):
        self.triple = triple
        super().__init__(
            f"second-order conditions fail at (e={triple.e_hat:.6g}, "
            f"theta={triple.theta_hat:.6g}, theta*={triple.theta_star_hat:.6g}): "
            f"soc={triple.soc_pass}"
        )


class NonConvergent(TariffGameError):
    """Best-response iteration did not settle within the round cap."""

    def __init__(self, trajectory: List[Tuple[float, float]], message: Optional[str] = None):
        self.trajectory = trajectory
        super().__init__(message or f"no fixed point after {len(trajectory)} rounds")


def describe(error: BaseException) -> dict[str, Any]:
    """Compact machine-readable description used in per-cell failure records."""
    return {"error": type(error).__name__, "message": str(error)}
