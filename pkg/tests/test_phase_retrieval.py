import math

import numpy as np
import pytest

from conftest import sinusoid_stack
from models.domain.raster import FringeStack
from services.phase import phase_shifts, wrapped_phase
from utils.errors import DomainError, InvalidStack
from utils.numeric import TWO_PI, wrap_to_pi


def _phase_field(height=32, width=48):
    v, u = np.mgrid[0:height, 0:width]
    return wrap_to_pi(0.37 * u + 0.11 * v - 2.0)


# ── phase_shifts ─────────────────────────────────────────────────────────────


def test_four_step_schedule():
    schedule = phase_shifts(4)
    np.testing.assert_allclose(schedule.shifts, [0.0, math.pi / 2, math.pi, 3 * math.pi / 2])


def test_twenty_five_step_schedule():
    schedule = phase_shifts(25)
    assert schedule.n_steps == 25
    assert len(schedule.shifts) == 25
    assert schedule.shifts[-1] == pytest.approx(48 * math.pi / 25)
    np.testing.assert_allclose(np.diff(schedule.shifts), TWO_PI / 25)


def test_two_steps_rejected():
    with pytest.raises(DomainError):
        phase_shifts(2)


# ── wrapped_phase ────────────────────────────────────────────────────────────


def test_literal_sign_returns_negated_phase():
    phi0 = np.full((3, 3), math.pi / 3)
    result = wrapped_phase(sinusoid_stack(phi0, n_steps=25, sign=-1.0))
    np.testing.assert_allclose(result.phase.values, -math.pi / 3, atol=1e-10)


def test_exact_sinusoid_recovered():
    phi = _phase_field()
    result = wrapped_phase(sinusoid_stack(phi, n_steps=25, sign=1.0))
    assert result.phase.mask.all()
    diff = wrap_to_pi(result.phase.values - phi)
    assert np.max(np.abs(diff)) < 1e-10


def test_output_range_half_open():
    phi = np.array([[math.pi, -math.pi + 1e-3, 0.0]])
    result = wrapped_phase(sinusoid_stack(phi, n_steps=8, sign=1.0))
    assert np.all(result.phase.values > -math.pi)
    assert np.all(result.phase.values <= math.pi)
    assert abs(abs(result.phase.values[0, 0]) - math.pi) < 1e-10


@pytest.mark.parametrize("offset,amplitude", [(0.5, 0.5), (3.0, 0.2), (120.0, 40.0)])
def test_offset_and_amplitude_invariance(offset, amplitude):
    phi = _phase_field()
    base = wrapped_phase(sinusoid_stack(phi, sign=1.0)).phase.values
    scaled = wrapped_phase(sinusoid_stack(phi, offset=offset, amplitude=amplitude, sign=1.0)).phase.values
    assert np.max(np.abs(wrap_to_pi(scaled - base))) < 1e-12


def test_cyclic_relabelling_moves_phase_by_first_shift():
    phi = _phase_field()
    stack = sinusoid_stack(phi, n_steps=10, sign=1.0)
    order = np.roll(np.arange(10), -1)
    # frame k+1 becomes frame k; its shift is re-expressed relative to the new first frame
    shifts = np.mod(np.array(stack.shifts)[order] - stack.shifts[1], TWO_PI)
    relabelled = FringeStack.from_arrays(stack.as_array()[order], shifts)
    result = wrapped_phase(relabelled).phase.values
    expected = phi + stack.shifts[1]
    assert np.max(np.abs(wrap_to_pi(result - expected))) < 1e-10


def test_constant_frames_masked():
    stack = FringeStack.from_arrays(np.full((25, 4, 4), 0.6), [TWO_PI * k / 25 for k in range(25)])
    result = wrapped_phase(stack)
    assert result.phase.valid_count == 0


def test_low_modulation_pixels_masked():
    phi = _phase_field(4, 4)
    stack = sinusoid_stack(phi, offset=0.5, amplitude=0.5, sign=1.0)
    frames = stack.as_array()
    frames[:, 0, 0] = 0.5 + 0.001 * np.cos(phi[0, 0] + np.array(stack.shifts))
    result = wrapped_phase(FringeStack.from_arrays(frames, stack.shifts), modulation_threshold=0.02)
    assert not result.phase.mask[0, 0]
    assert result.phase.valid_count == 15


def test_invalid_stack_rejected():
    with pytest.raises(InvalidStack):
        wrapped_phase(sinusoid_stack(_phase_field(), n_steps=2))


def test_noise_std_falls_with_step_count():
    phi = np.full((60, 60), 0.4)
    spreads = []
    rng = np.random.default_rng(11)
    for n in (5, 10, 25):
        stack = sinusoid_stack(phi, n_steps=n, sign=1.0)
        noisy = stack.as_array() + rng.normal(0.0, 0.02, size=stack.as_array().shape)
        result = wrapped_phase(FringeStack.from_arrays(noisy, stack.shifts))
        spreads.append(float(np.std(wrap_to_pi(result.phase.values - phi))))
    assert spreads[0] > spreads[1] > spreads[2]
    # sigma_phi ~ sqrt(2/N) * sigma / amplitude
    assert spreads[2] == pytest.approx(math.sqrt(2 / 25) * 0.02 / 0.5, rel=0.15)


@pytest.mark.parametrize("n_steps", [3, 5, 25])
def test_matches_independent_least_squares_fit(n_steps):
    """Solve I_k = a + c*cos(d_k) + s*sin(d_k) per pixel; cos(phi + d) gives phi = atan2(-s, c)."""
    rng = np.random.default_rng(n_steps)
    phi = _phase_field(8, 10)
    stack = sinusoid_stack(phi, n_steps=n_steps, offset=0.6, amplitude=0.3, sign=1.0)
    frames = stack.as_array() + rng.normal(0.0, 0.01, size=stack.as_array().shape)
    result = wrapped_phase(FringeStack.from_arrays(frames, stack.shifts))

    shifts = np.asarray(stack.shifts)
    design = np.column_stack([np.ones(n_steps), np.cos(shifts), np.sin(shifts)])
    coefficients, *_ = np.linalg.lstsq(design, frames.reshape(n_steps, -1), rcond=None)
    expected = np.arctan2(-coefficients[2], coefficients[1]).reshape(phi.shape)
    assert np.max(np.abs(wrap_to_pi(result.phase.values - expected))) < 1e-10


def test_wrapped_phase_is_pixel_local():
    rng = np.random.default_rng(3)
    phi = _phase_field(16, 20)
    stack = sinusoid_stack(phi, n_steps=7, sign=1.0)
    frames = stack.as_array() + rng.normal(0.0, 0.01, size=stack.as_array().shape)
    permutation = rng.permutation(phi.size)
    shuffled = frames.reshape(7, -1)[:, permutation].reshape(frames.shape)

    original = wrapped_phase(FringeStack.from_arrays(frames, stack.shifts)).phase.values
    moved = wrapped_phase(FringeStack.from_arrays(shuffled, stack.shifts)).phase.values
    np.testing.assert_array_equal(moved, original.reshape(-1)[permutation].reshape(phi.shape))
