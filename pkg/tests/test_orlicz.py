import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from olex import (CapabilityError, ConfigurationError, DegenerateInputError, DomainError, NumericError,
                  WeightedSamples, check_orlicz, exp_minus_one, orlicz_norm, phi_from_spec, phi_mean,
                  power, power_of, table)
from olex.orlicz import require_c1

# frozen from 30-digit mpmath root finding
EXP_NORM_1_2 = 1.57792664639296235461266684025
EXP_SQUARED_NORM_1_2 = 1.67954274924143799326854202649
EXP_MEAN_1_2 = 1.62011450695827752463176337351

FAMILIES = [power(1), power(2), power(3.5), exp_minus_one(), power_of(exp_minus_one(), 2),
            table([[0, 0], [1, 1], [2, 3], [3, 6]])]


@pytest.mark.parametrize("phi", FAMILIES, ids=repr)
def test_families_pass_validation(phi):
    check_orlicz(phi)
    assert phi(0.0) == 0.0
    t = np.linspace(0.1, 3.5, 40)
    np.testing.assert_allclose(phi.inverse(phi(t)), t, rtol=1e-12)


@pytest.mark.parametrize("phi", FAMILIES[:5], ids=repr)
def test_derivative_matches_finite_difference(phi):
    t = np.linspace(0.2, 2.5, 12)
    h = 1e-6
    fd = (phi(t + h) - phi(t - h)) / (2 * h)
    np.testing.assert_allclose(phi.derivative(t), fd, rtol=1e-7)


@pytest.mark.parametrize("phi", FAMILIES, ids=repr)
def test_spec_round_trip(phi):
    again = phi_from_spec(json.dumps(phi.to_spec()))
    t = np.linspace(0, 3, 13)
    np.testing.assert_array_equal(again(t), phi(t))
    assert again.is_c1 == phi.is_c1


def test_spec_from_file(tmp_path):
    path = tmp_path / "phi.json"
    path.write_text(json.dumps({"type": "power_of", "base": {"type": "exp_minus_one"}, "p": 2}))
    assert phi_from_spec(str(path))(1.0) == pytest.approx((math.e - 1) ** 2)


@pytest.mark.parametrize("spec", [
    "{not json", {"p": 2}, {"type": "power"}, {"type": "gamma"}, {"type": "power", "p": 0.5},
    {"type": "table", "knots": [[0, 0], [1, 2], [2, 3]]},
    {"type": "table", "knots": [[0, 1], [1, 2]]},
    {"type": "table", "knots": [[0, 0], [1, 1], [1, 2]]},
    {"type": "table", "knots": [[0, 0]]},
])
def test_bad_specs_are_configuration_errors(spec):
    with pytest.raises(ConfigurationError):
        phi_from_spec(spec if isinstance(spec, dict) else spec)


def test_table_is_not_c1():
    phi = table([[0, 0], [1, 1], [2, 3]])
    assert not phi.is_c1
    with pytest.raises(CapabilityError):
        require_c1(phi)
    require_c1(power(2))
    # linear continuation beyond the last knot
    assert phi(4.0) == pytest.approx(7.0)


def test_norm_oracles():
    s = WeightedSamples(np.array([1.0, 2.0]), np.array([1.0, 1.0]))
    assert orlicz_norm(s, exp_minus_one()) == pytest.approx(EXP_NORM_1_2, rel=1e-12)
    assert orlicz_norm(s, power_of(exp_minus_one(), 2)) == pytest.approx(EXP_SQUARED_NORM_1_2, rel=1e-12)
    assert orlicz_norm(s, power(2)) == pytest.approx(math.sqrt(2.5), rel=1e-12)
    assert phi_mean(s, exp_minus_one()) == pytest.approx(EXP_MEAN_1_2, rel=1e-14)
    assert phi_mean(s, power(2)) == pytest.approx(math.sqrt(2.5), rel=1e-14)


def test_constant_sample_norm_is_the_constant():
    s = WeightedSamples(np.full(5, 3.0), np.arange(1.0, 6.0))
    for phi in FAMILIES:
        assert orlicz_norm(s, phi) == pytest.approx(3.0, rel=1e-12)


def test_degenerate_and_invalid_samples():
    with pytest.raises(DegenerateInputError):
        orlicz_norm(WeightedSamples(np.zeros(3), np.ones(3)), power(2))
    with pytest.raises(DomainError):
        WeightedSamples(np.ones(2), np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        WeightedSamples(np.array([1.0, -1.0]), np.ones(2))


def test_phi_mean_overflow_is_numeric_error():
    with pytest.raises(NumericError):
        phi_mean(WeightedSamples(np.array([1.0, 900.0]), np.ones(2)), exp_minus_one())


def test_norm_with_zero_samples_mixed_in():
    s = WeightedSamples(np.array([0.0, 0.0, 2.0]), np.ones(3))
    # mean (f/l)^2 = 1  =>  l = 2 / sqrt(3)
    assert orlicz_norm(s, power(2)) == pytest.approx(2 / math.sqrt(3), rel=1e-12)


samples = st.lists(st.tuples(st.floats(0.05, 20), st.floats(0.01, 10)), min_size=1, max_size=12)
phis = st.sampled_from(FAMILIES)


def _ws(data):
    v, w = zip(*data)
    return WeightedSamples(np.array(v), np.array(w))


@settings(max_examples=60, deadline=None)
@given(data=samples, phi=phis)
def test_norm_defining_identity(data, phi):
    s = _ws(data)
    lam = orlicz_norm(s, phi)
    assume(np.max(s.values) / lam < 30)
    mean = np.dot(s.weights, phi(s.values / lam)) / s.total
    assert mean == pytest.approx(phi(1.0), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(data=samples, phi=phis, c=st.floats(0.1, 10))
def test_norm_is_positively_homogeneous(data, phi, c):
    s = _ws(data)
    scaled = WeightedSamples(c * s.values, s.weights)
    assert orlicz_norm(scaled, phi) == pytest.approx(c * orlicz_norm(s, phi), rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(data=samples, phi=phis)
def test_norm_lies_between_min_and_max(data, phi):
    s = _ws(data)
    lam = orlicz_norm(s, phi)
    assert s.values.min() * (1 - 1e-12) <= lam <= s.values.max() * (1 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(data=samples)
def test_norm_is_nondecreasing_in_p(data):
    s = _ws(data)
    base = exp_minus_one()
    values = [orlicz_norm(s, power_of(base, p)) for p in (1, 2, 4, 8)]
    assert all(b >= a * (1 - 1e-10) for a, b in zip(values, values[1:]))


@settings(max_examples=60, deadline=None)
@given(data=samples, phi=st.sampled_from(FAMILIES[:5]))
def test_phi_mean_jensen_bounds(data, phi):
    # phi^{-1}(mean phi(f)) >= mean f by convexity
    s = _ws(data)
    assume(s.values.max() < 25)
    arith = np.dot(s.weights, s.values) / s.total
    assert phi_mean(s, phi) >= arith * (1 - 1e-10)


@settings(max_examples=100, deadline=None)
@given(t=st.floats(1e-3, 20), rel=st.floats(-0.5, 0.5), phi=phis)
def test_increment_matches_direct_difference(t, rel, phi):
    direct = float(phi(t * (1 + rel)) - phi(t))
    assert float(phi.increment(t, rel)) == pytest.approx(direct, rel=1e-9, abs=1e-12 * float(phi(t)) + 1e-300)


def test_increment_resolves_tiny_changes():
    phi = power_of(exp_minus_one(), 3)
    t, rel = 1.3, 1e-13
    expected = float(phi.derivative(t)) * t * rel
    assert float(phi.increment(t, rel)) == pytest.approx(expected, rel=1e-6)
