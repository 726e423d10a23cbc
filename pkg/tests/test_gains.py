import math

import numpy as np
import pytest

from src.tariff_game.equilibrium import solve_rate
from src.tariff_game.errors import DomainError
from src.tariff_game.gains import (
    domestic_import_value,
    evaluate_gains,
    foreign_import_value,
    gain_domestic,
    gain_foreign,
    import_value_by_parts,
    symmetry_gain_check,
)
from src.tariff_game.montecarlo import empirical_demands, expectation_gain, sample_commodities
from src.tariff_game.structures import (
    ConstantLaw,
    GainMethod,
    LogNormalLaw,
    Role,
    ScenarioSpec,
    TariffPair,
    UniformLaw,
)


def test_exponential_import_value_closed_form(exponential, cfg):
    # -int_a^inf y D'(y) dy = (a + 1/delta) exp(-delta a)
    value, err, regularized = domestic_import_value(exponential, 1.5, cfg)
    assert value == pytest.approx(1.9 * math.exp(-3.75), rel=1e-10)
    assert value == pytest.approx(0.0446837, abs=1e-7)
    assert err <= 1e-9
    assert not regularized


@pytest.mark.parametrize("a", [0.1, 1.0, 3.0])
def test_rational_import_values(schwartz, cfg, a):
    dom, _, _ = domestic_import_value(schwartz, a, cfg)
    assert dom == pytest.approx(2 / (1 + a) - 1 / (1 + a) ** 2, rel=1e-10)
    fgn, _, _ = foreign_import_value(schwartz, a, cfg)
    assert fgn == pytest.approx(1 - 1 / (1 + a) ** 2, rel=1e-10)


def test_saturated_gain(exponential, cfg):
    # nothing is worth importing at e/theta = 100 and D*(100) = 1
    g = gain_domestic(exponential, 100.0, TariffPair(theta=1.0, theta_star=1.0), cfg)
    assert g == pytest.approx(-1.0, abs=1e-12)


def test_foreign_gain_small_rate_limit(schwartz, cfg):
    t = TariffPair(theta=1.0, theta_star=0.01)
    g = gain_foreign(schwartz, 0.01, t, cfg)
    assert g == pytest.approx(-float(schwartz.D(0.01)), abs=3e-4)


def test_free_trade_gains_are_symmetric(schwartz, cfg):
    report = evaluate_gains(schwartz, TariffPair(theta=1.0, theta_star=1.0), cfg=cfg)
    assert report.rate_e == pytest.approx(1.0, abs=1e-10)
    assert report.gain_domestic == pytest.approx(report.gain_foreign, abs=1e-10)
    assert report.method == GainMethod.QUADRATURE
    assert report.truncation_error_bound <= 1e-9


@pytest.mark.parametrize("theta", np.linspace(0.2, 1.0, 5))
@pytest.mark.parametrize("theta_star", np.linspace(0.2, 1.0, 5))
def test_gain_symmetry(schwartz, cfg, theta, theta_star):
    report = symmetry_gain_check(schwartz, TariffPair(theta=theta, theta_star=theta_star), cfg)
    assert report.difference <= 1e-8


def test_gain_symmetry_clipped_linear(clipped, cfg):
    for theta, theta_star in [(2 / 3, 2 / 3), (0.6, 0.9), (0.9, 0.7)]:
        report = symmetry_gain_check(clipped, TariffPair(theta=theta, theta_star=theta_star), cfg)
        assert report.difference <= 1e-8


def test_gain_symmetry_needs_symmetric_model(exponential, cfg):
    with pytest.raises(DomainError):
        symmetry_gain_check(exponential, TariffPair(theta=0.5, theta_star=0.5), cfg)


@pytest.mark.parametrize("limit", [0.3, 1.0, 2.5])
def test_integration_by_parts_agrees(schwartz, exponential, cfg, limit):
    for model in (schwartz, exponential):
        direct, _, _ = domestic_import_value(model, limit, cfg)
        assert import_value_by_parts(model, Role.DOMESTIC, limit, cfg) == pytest.approx(direct, abs=1e-9)
    direct, _, _ = foreign_import_value(schwartz, limit, cfg)
    assert import_value_by_parts(schwartz, Role.FOREIGN, limit, cfg) == pytest.approx(direct, abs=1e-9)


def test_by_parts_rejects_divergent_tail(exponential, cfg):
    with pytest.raises(DomainError):
        import_value_by_parts(exponential, Role.FOREIGN, 0.5, cfg)


@pytest.mark.parametrize(
    "name,triple",
    [("schwartz", (1.0, 1 / 3, 1 / 3)), ("clipped", (1.0, 2 / 3, 2 / 3))],
)
def test_gains_do_not_depend_on_box(name, triple, cfg, request):
    model = request.getfixturevalue(name)
    e, theta, theta_star = triple
    t = TariffPair(theta=theta, theta_star=theta_star)
    base = evaluate_gains(model, t, e, cfg)
    wide = evaluate_gains(model.with_bound(200.0), t, e, cfg)
    assert wide.gain_domestic == pytest.approx(base.gain_domestic, abs=1e-9)
    assert wide.gain_foreign == pytest.approx(base.gain_foreign, abs=1e-9)


def test_heavy_tail_is_regularized(exponential, cfg):
    t = TariffPair(theta=0.54, theta_star=0.73)
    base = evaluate_gains(exponential, t, 0.81, cfg)
    wide = evaluate_gains(exponential.with_bound(200.0), t, 0.81, cfg)
    assert base.regularized
    # only the foreign integral is cut, so only G* moves with the bound
    assert wide.gain_domestic == pytest.approx(base.gain_domestic, abs=1e-9)
    assert wide.gain_foreign != pytest.approx(base.gain_foreign, abs=1e-9)


def test_light_tails_are_not_regularized(schwartz, cfg):
    assert not evaluate_gains(schwartz, TariffPair(theta=0.5, theta_star=0.5), cfg=cfg).regularized


def test_rate_outside_box(schwartz, cfg):
    with pytest.raises(DomainError):
        gain_domestic(schwartz, 500.0, TariffPair(theta=0.5, theta_star=0.5), cfg)


def test_empirical_gains_match_expectation_sums(cfg):
    spec = ScenarioSpec(
        n=2000,
        p=LogNormalLaw(mu=0.0, sigma=0.5),
        p_star=LogNormalLaw(mu=0.0, sigma=0.5),
        d=UniformLaw(a=0.5, b=1.5),
        d_star=ConstantLaw(c=1.0),
        rng_seed=3,
    )
    sample = sample_commodities(spec)
    model = empirical_demands(sample)
    for theta, theta_star in [(0.9, 0.8), (0.5, 0.7)]:
        t = TariffPair(theta=theta, theta_star=theta_star)
        e = solve_rate(model, t, cfg).rate_e
        report = evaluate_gains(model, t, e, cfg)
        direct = expectation_gain(sample, e, t)
        assert report.method == GainMethod.EXPECTATION_SUM
        assert report.gain_domestic == pytest.approx(direct.gain_domestic, rel=1e-10, abs=1e-12)
        assert report.gain_foreign == pytest.approx(direct.gain_foreign, rel=1e-10, abs=1e-12)
