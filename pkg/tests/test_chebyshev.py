import math

import numpy as np
import pytest
import scipy.signal.windows as sw
from hypothesis import given, settings, strategies as st

from qheat.chebyshev import (
    chebyshev_polynomial,
    dolph_chebyshev_window,
    filter_response,
    filter_weights,
    main_lobe_halfwidth,
)


def test_polynomial_examples():
    assert chebyshev_polynomial(0, 0.3) == 1.0
    assert chebyshev_polynomial(1, 0.3) == 0.3
    assert chebyshev_polynomial(2, 0.0) == -1.0
    assert chebyshev_polynomial(3, 0.5) == pytest.approx(-1.0, abs=1e-15)
    assert chebyshev_polynomial(5, math.cos(math.pi / 7)) == pytest.approx(
        math.cos(5 * math.pi / 7), abs=1e-12)
    with pytest.raises(ValueError):
        chebyshev_polynomial(-1, 0.0)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(0, 40), theta=st.floats(0, math.pi))
def test_trig_identity(n, theta):
    assert chebyshev_polynomial(n, math.cos(theta)) == pytest.approx(
        math.cos(n * theta), abs=1e-11)


def test_polynomial_vectorized_matches_numpy_basis():
    x = np.linspace(-1.5, 1.5, 11)
    for n in range(8):
        ref = np.polynomial.chebyshev.chebval(x, [0] * n + [1])
        np.testing.assert_allclose(chebyshev_polynomial(n, x), ref, atol=1e-12)


@pytest.mark.filterwarnings("ignore:This window is not suitable")
@pytest.mark.parametrize("length", [2, 7, 16, 31, 32, 65])
@pytest.mark.parametrize("db", [30.0, 40.0, 80.0])
def test_window_matches_scipy(length, db):
    np.testing.assert_allclose(dolph_chebyshev_window(length, db),
                               sw.chebwin(length, db), atol=1e-12)


def test_window_input_checks():
    with pytest.raises(ValueError):
        dolph_chebyshev_window(0, 40)
    with pytest.raises(ValueError):
        dolph_chebyshev_window(8, 0)
    np.testing.assert_array_equal(dolph_chebyshev_window(1, 40), [1.0])


def test_weights_unit_gain_and_equiripple_sidelobes():
    w = filter_weights(32, 40.0)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    hw = main_lobe_halfwidth(32, 40.0)
    phases = np.linspace(hw, 2 * math.pi - hw, 4001)
    mag = np.abs(filter_response(w, phases))
    assert mag.max() <= 0.01 + 1e-10
    # edge of the main lobe sits exactly at the sidelobe level
    assert abs(filter_response(w, hw)) == pytest.approx(0.01, abs=1e-10)
    assert abs(filter_response(w, 0.0)) == pytest.approx(1.0, abs=1e-15)


def test_filter_response_matches_direct_sum():
    w = np.random.default_rng(0).random(9)
    phi = 0.7
    ref = sum(wj * np.exp(1j * j * phi) for j, wj in enumerate(w)) / w.sum()
    assert filter_response(w, phi) == pytest.approx(ref, abs=1e-14)
    with pytest.raises(ValueError):
        filter_response([1.0, -1.0], 0.1)
