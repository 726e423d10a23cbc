"""
Tariff Game - Non-Cooperative Tariff and Exchange-Rate Solver

Solver library and command line for the two-nation tariff game.
"""

__version__ = "1.0.0"
__author__ = "Tariff Game Team"


from .tariff_game import MarketModel, SolverConfig, solve_nash

__all__ = [
    "MarketModel",
    "SolverConfig",
    "solve_nash",
]
