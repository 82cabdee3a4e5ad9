"""Exponent-pair validation: accepted ranges, rejection kinds, cached extremes."""
import numpy as np
import pytest

from pxlap import ExponentValidationError, validate_exponents


def test_constant_pair_accepted_with_unit_gap():
    p = np.full(10, 2.0)
    q = np.full(10, 7.0)
    field = validate_exponents(p, q, 3)
    assert field.p_minus == field.p_plus == 2.0
    assert np.allclose(field.pstar_values, 6.0)
    # gap inf(q - p*) = 1
    assert float(np.min(field.values_q - field.pstar_values)) == pytest.approx(1.0)


def test_equality_with_critical_exponent_rejected():
    p = np.full(10, 2.0)
    q = np.full(10, 6.0)
    with pytest.raises(ExponentValidationError) as err:
        validate_exponents(p, q, 3)
    assert "supercriticality gap error" in str(err.value)


def test_p_at_or_above_dimension_rejected():
    p = np.full(10, 3.5)
    q = np.full(10, 50.0)
    with pytest.raises(ExponentValidationError) as err:
        validate_exponents(p, q, 3)
    assert "exponent range error" in str(err.value)


def test_p_equal_one_rejected():
    with pytest.raises(ExponentValidationError) as err:
        validate_exponents(np.full(4, 1.0), np.full(4, 9.0), 2)
    assert "exponent range error" in str(err.value)


def test_nan_samples_rejected_as_malformed():
    p = np.array([1.5, np.nan, 1.5])
    with pytest.raises(ExponentValidationError) as err:
        validate_exponents(p, np.full(3, 9.0), 2)
    assert "malformed exponent data" in str(err.value)


def test_shape_mismatch_rejected():
    with pytest.raises(ExponentValidationError):
        validate_exponents(np.full(3, 1.5), np.full(4, 9.0), 2)


def test_pstar_formula_for_constant_p():
    field = validate_exponents(np.full(7, 1.5), np.full(7, 9.0), 2)
    assert field.pstar_minus == 2 * 1.5 / (2 - 1.5)
    assert np.all(field.pstar_values == field.pstar_minus)


def test_ramp_profile_extremes(ramp_exponents):
    assert ramp_exponents.p_minus == pytest.approx(1.5)
    assert ramp_exponents.p_plus == pytest.approx(1.8)
    assert ramp_exponents.q_minus == ramp_exponents.q_plus == 20.0
    assert ramp_exponents.pstar_minus == pytest.approx(6.0)


def test_revalidation_is_idempotent(ramp_exponents):
    again = validate_exponents(
        ramp_exponents.values_p, ramp_exponents.values_q, ramp_exponents.dim_N
    )
    assert again.same_data(ramp_exponents)
    assert again.p_minus == ramp_exponents.p_minus
    assert again.pstar_minus == ramp_exponents.pstar_minus


def test_raising_q_preserves_validity(rng):
    # p up to 1.7 at N = 2 puts the critical exponent near 11.3, so q must
    # clear that before the property can be exercised.
    p = 1.4 + 0.3 * rng.random(50)
    q = 12.0 + rng.random(50)
    base = validate_exponents(p, q, 2)
    bigger = validate_exponents(p, q + rng.random(50), 2)
    assert bigger.q_minus >= base.q_minus


def test_margin_rejects_float_ties():
    # q exceeds p* by less than the margin: deterministic rejection.
    p = np.full(5, 2.0)
    q = np.full(5, 6.0 + 1e-13)
    with pytest.raises(ExponentValidationError):
        validate_exponents(p, q, 3)
    validate_exponents(p, q, 3, margin=1e-14)
