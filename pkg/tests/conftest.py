import json

import pytest

from src.tariff_game.demand import reference_model
from src.tariff_game.structures import SolverConfig


@pytest.fixture(scope="session")
def cfg():
    return SolverConfig()


@pytest.fixture(scope="session")
def oracle_cfg():
    """Coarser own-tariff grid; the Brent refinement restores the accuracy."""
    return SolverConfig(best_response_grid=64)


@pytest.fixture(scope="session")
def schwartz():
    return reference_model("schwartz")


@pytest.fixture(scope="session")
def clipped():
    return reference_model("clipped_linear", alpha=0.5)


@pytest.fixture(scope="session")
def exponential():
    return reference_model("exponential")


@pytest.fixture
def model_file(tmp_path):
    """Write a model to a JSON document and return its path."""

    def write(model, name="model.json"):
        path = tmp_path / name
        path.write_text(json.dumps(model.to_spec().model_dump(mode="json")), encoding="utf-8")
        return str(path)

    return write
