import math

import numpy as np
import pytest

from models.domain.phase import FringeOrderMap
from models.domain.raster import ScalarMap
from services.phase import (
    equivalent_phase,
    equivalent_wavelength,
    fringe_order,
    max_fringe_order,
    unwrap_pair,
    unwrap_phase,
)
from utils.errors import DimensionMismatch, DomainError
from utils.numeric import TWO_PI, wrap_to_pi


def _row(values):
    return ScalarMap.from_array(np.atleast_2d(np.asarray(values, dtype=np.float64)))


# ── equivalent_wavelength ────────────────────────────────────────────────────


@pytest.mark.parametrize("lambda_h,lambda_l,expected", [(200, 250, 1000), (100, 200, 200), (5.0, 5.625, 45.0)])
def test_equivalent_wavelength(lambda_h, lambda_l, expected):
    assert equivalent_wavelength(lambda_h, lambda_l) == pytest.approx(expected)


def test_equal_wavelengths_rejected():
    with pytest.raises(DomainError):
        equivalent_wavelength(200, 200)


def test_exact_ratio_gives_nine_orders():
    assert max_fringe_order(5.0, equivalent_wavelength(5.0, 5.625)) == 8


# ── equivalent_phase ─────────────────────────────────────────────────────────


def test_identical_phases_give_zero():
    result = equivalent_phase(_row([0.3, -2.0]), _row([0.3, -2.0]))
    np.testing.assert_array_equal(result.values, 0.0)


def test_equivalent_phase_direct_evaluation():
    result = equivalent_phase(_row([-3.0]), _row([3.0]))
    assert result.values[0, 0] == pytest.approx(-6.0 + TWO_PI)
    assert result.values[0, 0] == pytest.approx(0.2832, abs=1e-4)


def test_equivalent_phase_range():
    rng = np.random.default_rng(5)
    high = _row(rng.uniform(-math.pi, math.pi, 500))
    low = _row(rng.uniform(-math.pi, math.pi, 500))
    values = equivalent_phase(high, low).values
    assert np.all(values >= 0.0) and np.all(values < TWO_PI)


def test_shape_mismatch_rejected():
    with pytest.raises(DimensionMismatch):
        equivalent_phase(ScalarMap.from_array(np.zeros((2, 3))), ScalarMap.from_array(np.zeros((3, 2))))


# ── fringe_order / unwrap_phase ──────────────────────────────────────────────


def test_start_of_range_is_order_zero():
    order = fringe_order(_row([-math.pi + 1e-6]), _row([1e-7]), 200.0, 1000.0)
    assert order.order[0, 0] == 0
    assert not order.clamped.any()


def test_out_of_band_order_clamped_and_flagged():
    # argument far above K_max = 4
    order = fringe_order(_row([-math.pi + 0.01]), _row([6.2]), 200.0, 1000.0)
    assert order.order[0, 0] == 4
    assert order.clamped[0, 0]


def test_zero_order_is_identity():
    phi = _row([0.1, -1.0, 2.5])
    zero = FringeOrderMap(order=np.zeros((1, 3)), mask=np.ones((1, 3), bool), clamped=np.zeros((1, 3), bool), max_order=4)
    np.testing.assert_array_equal(unwrap_phase(phi, zero).phase.values, phi.values)


def test_unwrap_direct_evaluation():
    order = FringeOrderMap(order=[[4]], mask=[[True]], clamped=[[False]], max_order=8)
    result = unwrap_phase(_row([math.pi]), order)
    assert result.phase.values[0, 0] == pytest.approx(9 * math.pi)


def test_ramp_replay_recovers_contiguous_bands():
    lambda_h, lambda_l = 200.0, 250.0
    x = np.arange(1000) + 0.5
    true_phase = TWO_PI * x / lambda_h - math.pi
    phi_h = _row(wrap_to_pi(true_phase))
    phi_l = _row(wrap_to_pi(TWO_PI * x / lambda_l - math.pi))

    lambda_eq = equivalent_wavelength(lambda_h, lambda_l)
    assert lambda_eq == pytest.approx(1000.0)
    phi_eq = equivalent_phase(phi_h, phi_l)
    # continuous over the whole range: a single monotone ramp
    assert np.all(np.diff(phi_eq.values[0]) > 0.0)
    np.testing.assert_allclose(phi_eq.values[0], TWO_PI * x / lambda_eq, atol=1e-9)

    result = unwrap_pair(phi_h, phi_l, lambda_h, lambda_l)
    order = result.fringe_order.order[0]
    assert set(order.tolist()) == {0, 1, 2, 3, 4}
    np.testing.assert_array_equal(order, (x // 200).astype(int))
    np.testing.assert_allclose(result.phase.values[0], true_phase, atol=1e-9)
    assert not result.fringe_order.clamped.any()
    assert result.lambda_eq == pytest.approx(1000.0)


def test_masked_pixels_propagate():
    mask = np.array([[True, False, True]])
    phi_h = ScalarMap(values=np.array([[0.1, 0.2, 0.3]]), mask=mask)
    phi_l = _row([0.05, 0.1, 0.15])
    result = unwrap_pair(phi_h, phi_l, 5.0, 5.625)
    np.testing.assert_array_equal(result.phase.mask, mask)


def _ramp(x, lambda_h=200.0, lambda_l=250.0):
    true_phase = TWO_PI * x / lambda_h - math.pi
    return true_phase, wrap_to_pi(true_phase), wrap_to_pi(TWO_PI * x / lambda_l - math.pi)


def test_order_survives_small_phase_noise():
    # band edges excluded: there noise legitimately clamps K or wraps phi_eq
    x = np.linspace(100.0, 900.0, 1000)
    true_phase, clean_h, clean_l = _ramp(x)
    rng = np.random.default_rng(21)
    for sigma in (0.005, 0.02, 0.05):
        for _ in range(20):
            phi_h = _row(wrap_to_pi(clean_h + rng.normal(0.0, sigma, x.size)))
            phi_l = _row(wrap_to_pi(clean_l + rng.normal(0.0, sigma, x.size)))
            result = unwrap_pair(phi_h, phi_l, 200.0, 250.0)
            assert np.max(np.abs(result.phase.values[0] - true_phase)) < 6.0 * sigma


def test_large_phase_noise_breaks_orders():
    x = np.linspace(100.0, 900.0, 1000)
    true_phase, clean_h, clean_l = _ramp(x)
    rng = np.random.default_rng(22)
    phi_h = _row(wrap_to_pi(clean_h + rng.normal(0.0, 0.5, x.size)))
    phi_l = _row(wrap_to_pi(clean_l + rng.normal(0.0, 0.5, x.size)))
    result = unwrap_pair(phi_h, phi_l, 200.0, 250.0)
    assert np.count_nonzero(np.abs(result.phase.values[0] - true_phase) > math.pi) > 0


def test_ramp_beyond_equivalent_wavelength_aliases():
    x = np.arange(1200) + 0.5
    true_phase, phi_h, phi_l = _ramp(x)
    result = unwrap_pair(_row(phi_h), _row(phi_l), 200.0, 250.0)
    order = result.fringe_order.order[0]
    inside, beyond = x < 1000.0, x >= 1000.0

    np.testing.assert_array_equal(order[inside], (x[inside] // 200).astype(int))
    np.testing.assert_allclose(result.phase.values[0, inside], true_phase[inside], atol=1e-9)
    # phi_eq restarts at lambda_eq, so the orders repeat from zero
    np.testing.assert_array_equal(order[beyond], ((x[beyond] - 1000.0) // 200).astype(int))
    np.testing.assert_allclose(
        result.phase.values[0, beyond], true_phase[beyond] - TWO_PI * 5, atol=1e-9
    )


def test_unwrap_is_pixel_local():
    rng = np.random.default_rng(9)
    x = rng.uniform(0.0, 1000.0, (12, 15))
    _, phi_h, phi_l = _ramp(x)
    permutation = rng.permutation(x.size)

    def shuffle(a):
        return a.reshape(-1)[permutation].reshape(a.shape)

    original = unwrap_pair(ScalarMap.from_array(phi_h), ScalarMap.from_array(phi_l), 200.0, 250.0)
    shuffled = unwrap_pair(ScalarMap.from_array(shuffle(phi_h)), ScalarMap.from_array(shuffle(phi_l)), 200.0, 250.0)
    np.testing.assert_array_equal(shuffled.phase.values, shuffle(original.phase.values))
    np.testing.assert_array_equal(shuffled.fringe_order.order, shuffle(original.fringe_order.order))
