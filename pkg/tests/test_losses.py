import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from topomask.errors import ParameterError, ShapeError
from topomask.losses import EPS, LossParams, attention_mask_loss, focal_loss, total_loss


def test_spot_value():
    mpmath.mp.dps = 40
    ref = float(mpmath.mpf("0.68") * mpmath.mpf("0.01") * -mpmath.log(mpmath.mpf("0.9")))
    assert ref == pytest.approx(7.1645e-4, abs=1e-8)
    assert abs(focal_loss(0.9, 1) - ref) < 1e-15


def test_reduces_to_half_bce(rng):
    p = rng.random(1000)
    y = rng.integers(0, 2, 1000)
    pc = np.clip(p, EPS, 1 - EPS)
    bce = -(y * np.log(pc) + (1 - y) * np.log(1 - pc))
    assert np.max(np.abs(focal_loss(p, y, LossParams(0.5, 0.0)) - 0.5 * bce)) < 1e-12


@given(st.floats(0, 1), st.sampled_from([0, 1]), st.floats(0.01, 0.99), st.floats(0, 5))
def test_non_negative_and_finite(p, y, theta, gamma):
    v = focal_loss(p, y, LossParams(theta, gamma))
    assert np.isfinite(v) and v >= 0


def test_confident_correct_prediction_costs_nothing():
    assert focal_loss(1 - 1e-12, 1) < 1e-15
    assert focal_loss(0.0, 0) < 1e-15


def test_params_validation():
    for kw in (dict(theta=0), dict(theta=1), dict(gamma=-1), dict(lam=-0.1)):
        with pytest.raises(ParameterError):
            LossParams(**kw)


def test_mask_loss_examples():
    z = np.zeros((4, 4))
    assert attention_mask_loss(z, z, z, z) == 0
    m1 = z.copy()
    m1.ravel()[:8] = 0.5
    assert attention_mask_loss(m1, z, z, z) == 2.0
    assert attention_mask_loss(2 * m1, z, z, z) == 8.0
    with pytest.raises(ShapeError):
        attention_mask_loss(z, np.zeros((3, 3)), z, z)


def test_total_loss():
    assert LossParams().lam == 0.01
    assert total_loss(0.3, 5.0, 0) == 0.3
    assert total_loss(0.3, 5.0) == pytest.approx(0.35)
    assert total_loss(0.3, 10.0) - total_loss(0.3, 5.0) == pytest.approx(5 * 0.01)
