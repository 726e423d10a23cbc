import io

import numpy as np
import pandas as pd
import pytest

from src.tariff_game.errors import DomainError
from src.tariff_game.sweep import (
    CURVE_COLUMNS,
    SURFACE_COLUMNS,
    SWEEP_COLUMNS,
    demand_curves,
    gain_sweep,
    rate_surface,
    tariff_grid,
    to_csv,
)


def test_curves_include_origin(exponential):
    frame = demand_curves(exponential, 0.0, 10.0, 6)
    assert list(frame.columns) == CURVE_COLUMNS
    assert len(frame) == 6
    assert frame.loc[0, "x"] == 0.0
    assert frame.loc[0, "D"] == 1.0
    assert frame.loc[0, "Dstar"] == 0.0


def test_curves_reference_row(schwartz):
    frame = demand_curves(schwartz, 0.0, 10.0, 6)
    row = frame.iloc[(frame["x"] - 1.0).abs().argmin()]
    assert row["x"] == pytest.approx(1.0)
    assert row["D"] == pytest.approx(0.25, abs=1e-12)
    assert row["Dstar_recip"] == pytest.approx(0.25, abs=1e-12)


def test_curves_validate_range(schwartz):
    with pytest.raises(DomainError):
        demand_curves(schwartz, 5.0, 1.0, 10)
    with pytest.raises(DomainError):
        demand_curves(schwartz, 0.0, 10.0, 1)


def test_tariff_grid(schwartz):
    cells = tariff_grid(schwartz, 3)
    assert len(cells) == 9
    assert cells[0] == (pytest.approx(0.01), pytest.approx(0.01))
    assert cells[-1] == (1.0, 1.0)


def test_rate_surface_symmetric_diagonal(schwartz):
    frame = rate_surface(schwartz, 4, workers=2)
    assert list(frame.columns) == SURFACE_COLUMNS
    assert len(frame) == 16
    diagonal = frame[np.isclose(frame["theta"], frame["theta_star"])]
    np.testing.assert_allclose(diagonal["e"].astype(float), 1.0, atol=1e-8)
    assert (frame["error"] == "").all()
    # sorted regardless of worker scheduling
    assert frame[["theta", "theta_star"]].equals(
        frame[["theta", "theta_star"]].sort_values(["theta", "theta_star"]).reset_index(drop=True)
    )


@pytest.mark.slow
def test_rate_surface_exponential_reference(exponential):
    frame = rate_surface(exponential, 100, workers=4)
    nearest = ((frame["theta"] - 0.54) ** 2 + (frame["theta_star"] - 0.73) ** 2).idxmin()
    assert frame.loc[nearest, "e"] == pytest.approx(0.81, abs=0.01)


def test_gain_sweep_columns(schwartz, cfg):
    frame = gain_sweep(schwartz, 3, cfg, workers=2)
    assert list(frame.columns) == SWEEP_COLUMNS
    assert len(frame) == 9
    diagonal = frame[np.isclose(frame["theta"], frame["theta_star"])]
    np.testing.assert_allclose(diagonal["G"].astype(float), diagonal["Gstar"].astype(float), atol=1e-8)


def test_csv_header_and_digits(schwartz):
    text = to_csv(gain_sweep(schwartz, 2, workers=1), digits=6)
    assert text.splitlines()[0] == "theta,theta_star,e,G,Gstar"
    parsed = pd.read_csv(io.StringIO(text))
    assert len(parsed) == 4
    assert parsed["e"].iloc[-1] == pytest.approx(1.0)
