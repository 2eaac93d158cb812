import numpy as np
import pytest

from mpdg.errors import ConfigurationError
from mpdg.quadrature import gauss_lobatto_rule, gauss_rule, quadrature_set


def test_lobatto_closed_forms():
    x, w = gauss_lobatto_rule(2)
    assert np.allclose(x, [0.0, 1.0]) and np.allclose(w, [0.5, 0.5])
    x, w = gauss_lobatto_rule(3)
    assert np.allclose(x, [0.0, 0.5, 1.0]) and np.allclose(w, [1 / 6, 2 / 3, 1 / 6])


def test_gauss_exactness_degree():
    x, w = gauss_rule(2)
    assert np.dot(w, x**3) == pytest.approx(0.25, rel=1e-14)  # degree 2n-1 = 3
    for n in (1, 2, 3, 4):
        x, w = gauss_rule(n)
        assert w.sum() == pytest.approx(1.0, rel=1e-14)
        for deg in range(2 * n):
            assert np.dot(w, x**deg) == pytest.approx(1.0 / (deg + 1), rel=1e-12), (n, deg)


def test_lobatto_exactness_degree():
    for n in (2, 3, 4):
        x, w = gauss_lobatto_rule(n)
        assert w.sum() == pytest.approx(1.0, rel=1e-14)
        for deg in range(2 * n - 2):
            assert np.dot(w, x**deg) == pytest.approx(1.0 / (deg + 1), rel=1e-12), (n, deg)


def test_counts_satisfy_both_conditions():
    for k in range(1, 5):
        qs = quadrature_set(k)
        lhat = len(qs.lobatto_points)
        assert 2 * lhat - 1 >= k
        assert 2 * lhat - 3 >= k
        assert len(qs.gauss_points) == k + 1


def test_first_lobatto_weight():
    assert quadrature_set(1).first_lobatto_weight == pytest.approx(0.5)
    assert quadrature_set(2).first_lobatto_weight == pytest.approx(1 / 6)


def test_operators_exact_on_polynomials():
    for k in (1, 2, 3):
        qs = quadrature_set(k)
        coef = np.arange(1.0, k + 2.0)
        f = np.polyval(coef, qs.gauss_points)
        df = np.polyval(np.polyder(coef), qs.gauss_points)
        assert np.allclose(qs.deriv @ f, df, rtol=1e-12, atol=1e-12)
        assert qs.edge0 @ f == pytest.approx(np.polyval(coef, 0.0), rel=1e-13)
        assert qs.edge1 @ f == pytest.approx(np.polyval(coef, 1.0), rel=1e-13)
        assert np.allclose(qs.to_lobatto @ f, np.polyval(coef, qs.lobatto_points), rtol=1e-13)


def test_invalid_counts_raise():
    with pytest.raises(ConfigurationError):
        gauss_rule(0)
    with pytest.raises(ConfigurationError):
        gauss_lobatto_rule(1)
