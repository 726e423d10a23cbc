import json
import math

import numpy as np
import pytest

from src.tariff_game.demand import (
    DemandFunction,
    MarketModel,
    check_monotone,
    eval_deriv,
    evaluate,
    load_model,
    reference_model,
)
from src.tariff_game.errors import ConfigError, DomainError, KinkError
from src.tariff_game.structures import Family, Role

FAMILIES = [
    (Family.RATIONAL_SQUARE, {}),
    (Family.CLIPPED_LINEAR, {"alpha": 0.5}),
    (Family.EXPONENTIAL, {"delta": 2.5}),
    (Family.CLIPPED_EXP_GROWTH, {"alpha": 0.01, "beta": 2.0}),
]


def make(family, role, **params):
    return DemandFunction(family=family, role=role, params=params)


def test_reference_values():
    rational = make(Family.RATIONAL_SQUARE, Role.DOMESTIC)
    assert evaluate(rational, 1.0) == pytest.approx(0.25, abs=1e-15)
    assert evaluate(rational, 0.0) == 1.0

    growth = make(Family.CLIPPED_EXP_GROWTH, Role.FOREIGN, alpha=0.01, beta=2.0)
    assert evaluate(growth, 0.0) == 0.0
    assert evaluate(growth, 50.0) == 1.0

    linear = make(Family.CLIPPED_LINEAR, Role.DOMESTIC, alpha=0.5)
    assert evaluate(linear, 3.0) == 0.0
    assert evaluate(linear, 1.0) == pytest.approx(0.5)


def test_reference_derivatives():
    assert eval_deriv(make(Family.EXPONENTIAL, Role.DOMESTIC, delta=2.5), 0.0) == pytest.approx(-2.5)
    assert eval_deriv(make(Family.RATIONAL_SQUARE, Role.DOMESTIC), 1.0) == pytest.approx(-0.25)
    growth = make(Family.CLIPPED_EXP_GROWTH, Role.FOREIGN, alpha=0.01, beta=2.0)
    assert eval_deriv(growth, 0.5) == pytest.approx(0.02 * math.e, rel=1e-12)


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        evaluate(make(Family.EXPONENTIAL, Role.DOMESTIC, delta=1.0), -0.1)


def test_kink_derivative_reports_one_sided_values():
    linear = make(Family.CLIPPED_LINEAR, Role.DOMESTIC, alpha=0.5)
    with pytest.raises(KinkError) as info:
        eval_deriv(linear, 2.0)
    assert info.value.x == pytest.approx(2.0)
    assert info.value.left_value == pytest.approx(-0.5)
    assert info.value.right_value == 0.0


def test_clip_point_is_continuous():
    growth = make(Family.CLIPPED_EXP_GROWTH, Role.FOREIGN, alpha=0.01, beta=2.0)
    (clip,) = growth.kinks
    assert 0.01 * clip * math.exp(2.0 * clip) == pytest.approx(1.0, abs=1e-12)
    assert evaluate(growth, clip * (1 - 1e-9)) == pytest.approx(1.0, abs=1e-7)
    assert evaluate(growth, clip * (1 + 1e-9)) == 1.0


@pytest.mark.parametrize("family,params", FAMILIES)
@pytest.mark.parametrize("role", [Role.DOMESTIC, Role.FOREIGN])
def test_monotone_and_bounded(family, params, role):
    report = check_monotone(make(family, role, **params), grid_n=1000)
    assert report.passed
    assert report.violation is None


def test_empirical_steps_are_monotone():
    r = np.array([0.5, 1.0, 2.0, 4.0])
    w = np.array([1.0, 0.0, 3.0, 1.0])
    for role in (Role.DOMESTIC, Role.FOREIGN):
        d = DemandFunction(family=Family.EMPIRICAL, role=role, breakpoints=r, weights=w)
        assert check_monotone(d, grid_n=200, M=10.0).passed


@pytest.mark.parametrize("family,params", FAMILIES)
@pytest.mark.parametrize("role", [Role.DOMESTIC, Role.FOREIGN])
def test_derivative_matches_central_difference(family, params, role):
    d = make(family, role, **params)
    x = np.geomspace(0.05, 20.0, 100)
    x = np.array([v for v in x if all(abs(v - k) > 1e-3 * max(1.0, k) for k in d.kinks)])
    h = 1e-6 * np.maximum(1.0, x)
    fd = (np.asarray(evaluate(d, x + h)) - np.asarray(evaluate(d, x - h))) / (2 * h)
    np.testing.assert_allclose(eval_deriv(d, x), fd, rtol=1e-6, atol=1e-9)


def test_second_derivative_of_mirrored_linear():
    # D*(u) = 1 - alpha/u, so D*'' = -2 alpha / u^3
    foreign = make(Family.CLIPPED_LINEAR, Role.FOREIGN, alpha=0.5)
    assert eval_deriv(foreign, 2.0 / 3.0, order=2) == pytest.approx(-3.375, rel=1e-12)
    assert eval_deriv(foreign, 2.0 / 3.0) == pytest.approx(1.125, rel=1e-12)


def test_symmetric_reflection(schwartz):
    x = np.geomspace(0.01, 100.0, 200)
    np.testing.assert_allclose(schwartz.D(x), schwartz.Dstar(1.0 / x), rtol=1e-14)


def test_empirical_steps():
    r = np.array([3.0, 1.0, 2.0])
    w = np.array([2.0, 1.0, 1.0])
    domestic = DemandFunction(family=Family.EMPIRICAL, role=Role.DOMESTIC, breakpoints=r, weights=w)
    foreign = DemandFunction(family=Family.EMPIRICAL, role=Role.FOREIGN, breakpoints=r, weights=w)

    assert evaluate(domestic, 0.0) == 1.0
    assert evaluate(domestic, 1.0) == pytest.approx(0.75)
    assert evaluate(domestic, 2.5) == pytest.approx(0.5)
    assert evaluate(domestic, 3.0) == 0.0
    assert evaluate(foreign, 1.0) == 0.0
    assert evaluate(foreign, 1.5) == pytest.approx(0.25)
    assert evaluate(foreign, 10.0) == 1.0


def test_smoothing_gives_finite_derivatives():
    rng = np.random.default_rng(7)
    r = rng.lognormal(0.0, 0.5, 400)
    w = np.ones_like(r)
    domestic = DemandFunction(family=Family.EMPIRICAL, role=Role.DOMESTIC, breakpoints=r, weights=w)
    smooth = domestic.smoothed()
    assert smooth.is_smoothed
    assert smooth.kernel_bandwidth > 0

    x = np.linspace(0.5, 2.0, 20)
    slope = np.asarray(eval_deriv(smooth, x))
    assert np.all(np.isfinite(slope))
    assert np.all(slope <= 0)
    assert np.max(np.abs(np.asarray(evaluate(smooth, x)) - evaluate(domestic, x))) < 0.15


def test_empirical_requires_weights():
    with pytest.raises(ConfigError):
        DemandFunction(family=Family.EMPIRICAL, role=Role.DOMESTIC, breakpoints=np.array([1.0]))


def test_reciprocal_model(exponential):
    recip = exponential.reciprocal()
    x = np.geomspace(0.05, 20.0, 50)
    np.testing.assert_allclose(recip.D(x), exponential.Dstar(1.0 / x), rtol=1e-14)
    np.testing.assert_allclose(recip.Dstar(x), exponential.D(1.0 / x), rtol=1e-14)


def test_symmetry_detected_from_document(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(
        json.dumps({"domestic": {"family": "rational_square"}, "foreign": {"family": "rational_square"}})
    )
    assert load_model(str(path)).symmetric_flag

    path.write_text(json.dumps(reference_model("exponential").to_spec().model_dump(mode="json")))
    assert not load_model(str(path)).symmetric_flag


def test_false_symmetry_flag_rejected(exponential):
    with pytest.raises(DomainError):
        MarketModel(
            demand_domestic=exponential.demand_domestic,
            demand_foreign=exponential.demand_foreign,
            symmetric_flag=True,
        )


def test_unknown_family_is_config_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"domestic": {"family": "cubic"}, "foreign": {"family": "exponential"}}))
    with pytest.raises(ConfigError):
        load_model(str(path))


def test_missing_parameter_is_config_error():
    with pytest.raises(ConfigError):
        make(Family.EXPONENTIAL, Role.DOMESTIC)


def test_digest_is_stable(schwartz):
    assert schwartz.digest() == reference_model("schwartz").digest()
    assert schwartz.digest() != reference_model("clipped_linear").digest()
