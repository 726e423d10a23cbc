"""
Tariff Game

Nash-equilibrium import tariffs and the exchange rate they induce for two
nations trading commodities, with analytic and sampled currency demand.
"""

__version__ = "1.0.0"

from .demand import DemandFunction, MarketModel, load_model, reference_model
from .equilibrium import currency_balance, solve_rate
from .gains import evaluate_gains, gain_domestic, gain_foreign
from .nash import solve_exponential_family, solve_nash, solve_symmetric
from .structures import EquilibriumTriple, SolverConfig, TariffPair

__all__ = [
    "DemandFunction",
    "MarketModel",
    "load_model",
    "reference_model",
    "currency_balance",
    "solve_rate",
    "evaluate_gains",
    "gain_domestic",
    "gain_foreign",
    "solve_nash",
    "solve_symmetric",
    "solve_exponential_family",
    "EquilibriumTriple",
    "SolverConfig",
    "TariffPair",
]
