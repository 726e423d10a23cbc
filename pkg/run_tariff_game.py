#!/usr/bin/env python3
"""
Tariff Game: Nash tariffs and exchange rates for two trading nations

Main entry point; see `python run_tariff_game.py --help`.
"""

import sys

from src.tariff_game.cli import main

if __name__ == "__main__":
    sys.exit(main())
