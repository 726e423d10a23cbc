import json

import numpy as np
import pytest
from pydantic import ValidationError

from src.tariff_game.demand import check_monotone, reference_model
from src.tariff_game.errors import ConfigError, DomainError
from src.tariff_game.gains import evaluate_gains
from src.tariff_game.montecarlo import (
    CommoditySample,
    empirical_demands,
    expectation_gain,
    load_scenario,
    matched_sample,
    sample_commodities,
    scenario_seeded,
    sup_distance,
)
from src.tariff_game.structures import (
    ConstantLaw,
    GainMethod,
    LogNormalLaw,
    ScenarioSpec,
    TariffPair,
    UniformLaw,
)


def lognormal_spec(n=100_000, seed=20240501):
    return ScenarioSpec(
        n=n,
        p=LogNormalLaw(mu=0.0, sigma=0.5),
        p_star=LogNormalLaw(mu=0.0, sigma=0.5),
        d=UniformLaw(a=0.5, b=1.5),
        d_star=UniformLaw(a=0.5, b=1.5),
        rng_seed=seed,
    )


def test_constant_laws():
    spec = ScenarioSpec(
        n=5,
        p=ConstantLaw(c=1.0),
        p_star=ConstantLaw(c=1.0),
        d=ConstantLaw(c=1.0),
        d_star=ConstantLaw(c=1.0),
    )
    sample = sample_commodities(spec)
    for values in (sample.p, sample.p_star, sample.d, sample.d_star):
        assert np.array_equal(values, np.ones(5))
    assert sample.c_n == 5.0
    assert sample.c_n_star == 5.0

    model = empirical_demands(sample)
    assert model.D(0.5) == 1.0
    assert model.D(1.0) == 0.0
    assert model.Dstar(1.0) == 0.0
    assert model.Dstar(1.5) == 1.0


def test_sampling_is_deterministic():
    a = sample_commodities(lognormal_spec())
    b = sample_commodities(lognormal_spec())
    for name in ("p", "p_star", "d", "d_star"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c = sample_commodities(lognormal_spec(seed=1))
    assert not np.array_equal(a.p, c.p)


def test_empty_universe_rejected():
    with pytest.raises(ValidationError):
        lognormal_spec(n=0)


def test_invalid_sample_rejected():
    with pytest.raises(DomainError):
        CommoditySample(p=np.array([1.0]), p_star=np.array([0.0]), d=np.array([1.0]), d_star=np.array([1.0]))
    with pytest.raises(DomainError):
        CommoditySample(p=np.array([1.0]), p_star=np.array([1.0]), d=np.array([0.0]), d_star=np.array([1.0]))


def test_empirical_demands_shape():
    sample = sample_commodities(lognormal_spec(n=5000))
    model = empirical_demands(sample)
    assert model.D(0.0) == 1.0
    assert model.D(float(sample.ratios.max())) == 0.0
    assert model.Dstar(float(sample.ratios.max()) * 1.01) == 1.0
    assert check_monotone(model.demand_domestic, grid_n=500, M=10.0).passed
    assert check_monotone(model.demand_foreign, grid_n=500, M=10.0).passed


def test_expectation_gain_single_commodity():
    sample = CommoditySample(
        p=np.array([2.0]), p_star=np.array([1.0]), d=np.array([1.0]), d_star=np.array([1.0])
    )
    report = expectation_gain(sample, 1.0, TariffPair(theta=1.0, theta_star=1.0))
    assert report.gain_domestic == pytest.approx(2.0)
    assert report.gain_foreign == pytest.approx(-1.0)
    assert report.method == GainMethod.EXPECTATION_SUM
    assert report.standard_error_domestic is None


def test_expectation_gain_without_trade():
    sample = CommoditySample(
        p=np.array([2.0]), p_star=np.array([1.0]), d=np.array([1.0]), d_star=np.array([1.0])
    )
    report = expectation_gain(sample, 1.0, TariffPair(theta=0.01, theta_star=0.01))
    assert report.gain_domestic == 0.0
    assert report.gain_foreign == 0.0


def test_expectation_gain_reports_standard_errors():
    sample = sample_commodities(lognormal_spec(n=10_000))
    report = expectation_gain(sample, 1.0, TariffPair(theta=0.8, theta_star=0.8))
    assert report.standard_error_domestic > 0
    assert report.standard_error_foreign > 0


def test_matched_sample_needs_analytic_model():
    empirical = empirical_demands(sample_commodities(lognormal_spec(n=100)))
    with pytest.raises(DomainError):
        matched_sample(empirical, 100)


@pytest.mark.slow
def test_matched_sample_converges(schwartz):
    errors = [sup_distance(empirical_demands(matched_sample(schwartz, n, seed=5)), schwartz) for n in (1_000, 10_000, 100_000)]
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] <= 0.02


@pytest.mark.slow
@pytest.mark.parametrize("name", ["schwartz", "exponential"])
def test_quadrature_and_expectation_agree(name, cfg, request):
    model = request.getfixturevalue(name)
    sample = matched_sample(model, 100_000, seed=17)
    points = [(0.9, 0.9), (0.6, 0.8), (0.8, 0.5), (0.5, 0.5), (0.95, 0.7)]
    for theta, theta_star in points:
        t = TariffPair(theta=theta, theta_star=theta_star)
        quadrature = evaluate_gains(model, t, cfg=cfg)
        mc = expectation_gain(sample, quadrature.rate_e, t)
        assert abs(mc.gain_domestic - quadrature.gain_domestic) <= 3 * mc.standard_error_domestic
        assert abs(mc.gain_foreign - quadrature.gain_foreign) <= 3 * mc.standard_error_foreign


def test_scenario_document(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(lognormal_spec(n=10).model_dump(mode="json")))
    spec = load_scenario(str(path))
    assert spec.n == 10
    assert scenario_seeded(spec, 7).rng_seed == 7
    assert scenario_seeded(spec, None) is spec

    path.write_text(json.dumps({"n": 10, "p": {"law": "cauchy"}}))
    with pytest.raises(ConfigError):
        load_scenario(str(path))
