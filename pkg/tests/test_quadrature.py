import math

import numpy as np
import pytest
from scipy import integrate

from qjwork.quadrature import QuadratureError, adaptive_simpson, cumulative_integrals


@pytest.mark.parametrize("f,a,b", [
    (np.sin, 0.0, math.pi),
    (lambda t: np.exp(-t) * np.cos(20 * t), 0.0, 5.0),
    (lambda t: np.sin(t) ** 2 * np.cos(0.05 * t) ** 2, 0.0, 20 * math.pi),
    (lambda t: t ** 1.5, 0.0, 1.0),
])
def test_against_scipy_quad(f, a, b):
    ref, _ = integrate.quad(lambda x: float(f(np.array([x]))[0]), a, b,
                            epsabs=1e-13, limit=500)
    val = adaptive_simpson(f, a, b, tol=1e-10, min_intervals=16)
    assert abs(val - ref) < 1e-9


def test_vector_valued():
    f = lambda t: np.stack([np.cos(t), t ** 2], axis=1)
    val = adaptive_simpson(f, 0.0, 2.0, tol=1e-11)
    np.testing.assert_allclose(val, [math.sin(2.0), 8.0 / 3.0], atol=1e-10)


def test_polynomials_exact_to_cubic():
    val, info = adaptive_simpson(lambda t: 4 * t ** 3 - t, -1.0, 3.0, full_output=True)
    assert val == pytest.approx(80.0 - 4.0, abs=1e-12)
    assert info["error"] < 1e-12


def test_reversed_and_empty_interval():
    assert adaptive_simpson(np.exp, 1.0, 0.0) == pytest.approx(-(math.e - 1), abs=1e-9)
    assert adaptive_simpson(np.exp, 1.0, 1.0) == 0.0


def test_nonconvergence_reported():
    with pytest.raises(QuadratureError) as exc:
        adaptive_simpson(lambda t: np.sign(t - 0.3), 0.0, 1.0, tol=1e-14, max_level=5)
    assert exc.value.achieved > 0


def test_cumulative_integrals():
    pts = np.array([0.0, 2.0, 0.5, 1.0])
    out = cumulative_integrals(np.cos, pts)
    np.testing.assert_allclose(out, np.sin(pts), atol=1e-11)
