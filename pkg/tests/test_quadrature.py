import math

import numpy as np
import pytest

from shrinktest.quadrature import (
    QuadratureError,
    integrate_finite,
    integrate_half_line,
    integrate_tail,
    integrate_unit,
    integrate_unit_vec,
)


class TestHalfLine:
    def test_exponential_moments(self):
        assert integrate_half_line(lambda u: math.exp(-u)) == pytest.approx(1.0, rel=1e-9)
        assert integrate_half_line(lambda u: u * math.exp(-u)) == pytest.approx(1.0, rel=1e-9)

    def test_half_cauchy_density(self):
        # The variance density tau/(pi sqrt(u)(tau^2+u)) integrates to one,
        # singular endpoint and heavy tail included.
        tau = 0.02
        assert integrate_half_line(
            lambda u: tau / (math.pi * math.sqrt(u) * (tau * tau + u))
        ) == pytest.approx(1.0, rel=1e-9)

    def test_breakpoint_hint(self):
        val = integrate_half_line(lambda u: math.exp(-u), points_u=[3.0])
        assert val == pytest.approx(1.0, rel=1e-9)


class TestTail:
    def test_exponential_tail(self):
        assert integrate_tail(lambda u: math.exp(-u), 2.5) == pytest.approx(
            math.exp(-2.5), rel=1e-9
        )

    def test_polynomial_tail(self):
        assert integrate_tail(lambda u: u**-2.0, 4.0) == pytest.approx(0.25, rel=1e-9)


class TestUnitInterval:
    def test_sqrt_singularities_both_ends(self):
        # beta(1/2, 1/2): integral of 1/sqrt(z(1-z)) over (0,1) is pi.
        val = integrate_unit(lambda z, omz: 1.0 / math.sqrt(z * omz))
        assert val == pytest.approx(math.pi, rel=1e-9)

    def test_vector_components_share_mesh(self):
        val = integrate_unit_vec(lambda z, omz: np.array([1.0, z, z * z]))
        np.testing.assert_allclose(val, [1.0, 0.5, 1.0 / 3.0], rtol=1e-9)


class TestFiniteInterval:
    def test_basic(self):
        assert integrate_finite(lambda u: u, 0.0, 2.0) == pytest.approx(2.0, rel=1e-12)

    def test_empty_interval_rejected(self):
        with pytest.raises(ValueError):
            integrate_finite(lambda u: u, 2.0, 2.0)


class TestNonConvergence:
    def test_noisy_integrand_raises_with_achieved_error(self):
        rng = np.random.default_rng(0)

        def noisy(z, omz):
            return float(rng.normal())

        with pytest.raises(QuadratureError) as err:
            integrate_unit(noisy, rel_tol=1e-12)
        assert err.value.achieved is not None
