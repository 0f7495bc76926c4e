"""Closed-form wavefunctions at complex positions and contour sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.hermite import hermval

from iholab.analytic_waves import (
    ContourSpec,
    SampledWave,
    Scheme,
    WaveId,
    WaveKind,
    coherent_annihilation,
    coherent_parameter,
    gauss_hermite_scaled,
    hermite_complex,
    phi_alpha_r,
    phi_derivative,
    phi_from_alpha,
    psi_os,
    psi_r,
    psi_r_tilde,
    sample,
)
from iholab.errors import ConfigurationError, InvalidParameterError, WaveOverflowError
from iholab.fock_engine import SystemParams
from scipy.special import factorial

UNIT = SystemParams()
PI_Q = np.pi ** -0.25

finite = st.floats(-3, 3, allow_nan=False)


# ---------------------------------------------------------------- Hermite


def test_hermite_low_orders():
    assert hermite_complex(0, 2.7 - 1j) == 1
    assert hermite_complex(1, 3 + 4j) == 6 + 8j
    assert hermite_complex(3, 2.0) == pytest.approx(40.0, abs=1e-12)


def test_hermite_frozen_value():
    z = 0.3 - 1.1j
    assert hermite_complex(7, z) == pytest.approx(-6895.100313600002 + 5844.065075200001j, rel=1e-14)
    assert hermite_complex(7, z) == pytest.approx(hermval(z, [0] * 7 + [1]), rel=1e-13)


def test_hermite_vectorised():
    z = np.array([0.0, 1.0, 1j])
    np.testing.assert_allclose(hermite_complex(2, z), 4 * z * z - 2)


@pytest.mark.parametrize("n", [-1, 201, 2.0, True])
def test_hermite_rejects_order(n):
    with pytest.raises(InvalidParameterError):
        hermite_complex(n, 0.1)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(0, 30), re=finite, im=finite)
def test_hermite_matches_numpy_series(n, re, im):
    z = complex(re, im)
    ref = hermval(z, [0] * n + [1])
    assert abs(hermite_complex(n, z) - ref) <= 1e-10 * max(1.0, abs(ref))


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 30), re=finite, im=finite)
def test_hermite_derivative_identity(n, re, im):
    # H_n'(z) = 2n H_{n-1}(z), checked with a complex-step-free central difference
    z, h = complex(re, im), 1e-6
    d = (hermite_complex(n, z + h) - hermite_complex(n, z - h)) / (2 * h)
    ref = 2 * n * hermite_complex(n - 1, z)
    assert abs(d - ref) <= 1e-5 * max(1.0, abs(ref))


@settings(max_examples=50, deadline=None)
@given(n=st.integers(0, 40), re=finite, im=finite)
def test_hermite_parity(n, re, im):
    z = complex(re, im)
    assert hermite_complex(n, -z) == pytest.approx((-1) ** n * hermite_complex(n, z), rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------- oscillator functions


def test_psi_os_vacuum_at_origin():
    assert psi_os(0, 0.0, UNIT) == pytest.approx(PI_Q, abs=1e-15)
    assert psi_os(1, 0.0, UNIT) == 0


def test_psi_os_frozen_complex_value():
    z = 0.3 + 0.4j
    ref = PI_Q / np.sqrt(2**4 * 24) * hermval(z, [0, 0, 0, 0, 1]) * np.exp(-z * z / 2)
    assert psi_os(4, z, UNIT) == pytest.approx(ref, rel=1e-14)
    assert psi_os(4, z, UNIT) == pytest.approx(0.5148165036754189 - 0.5441822508812156j, rel=1e-14)


@pytest.mark.parametrize("n", [0, 2, 5, 40])
def test_psi_os_normalised_by_quadrature(n):
    t, w = ContourSpec(0.0, 200).rule(UNIT)
    assert np.sum(w * np.abs(psi_os(n, t, UNIT)) ** 2) == pytest.approx(1.0, abs=1e-10)


def test_psi_os_length_scale():
    p = SystemParams(mass=4.0, omega=1.0, hbar=1.0)
    assert psi_os(0, 0.0, p) == pytest.approx(PI_Q * np.sqrt(2.0))


def test_psi_os_overflow():
    with pytest.raises(WaveOverflowError):
        psi_os(0, 50j, UNIT)


# ---------------------------------------------------------------- inverted-oscillator functions


def test_psi_r_frozen_value():
    x = 0.7
    z = np.exp(1j * np.pi / 4) * x
    ref = np.exp(1j * np.pi / 8) * PI_Q / np.sqrt(8 * 6) * (8 * z**3 - 12 * z) * np.exp(-0.5j * x * x)
    assert psi_r(3, x, UNIT) == pytest.approx(ref, rel=1e-14)
    assert psi_r(3, x, UNIT) == pytest.approx(-0.7812041599338919 - 0.5545994368944104j, rel=1e-14)


def test_psi_r_vacuum_has_constant_modulus():
    x = np.linspace(-30, 30, 41)
    np.testing.assert_allclose(np.abs(psi_r(0, x, UNIT)), PI_Q, rtol=1e-14)


def test_psi_r_tilde_is_conjugate_on_real_line():
    x = np.linspace(-4, 4, 17)
    for n in range(6):
        np.testing.assert_allclose(psi_r_tilde(n, x, UNIT), np.conj(psi_r(n, x, UNIT)), rtol=1e-14, atol=1e-15)


def test_scaling_identity_relative():
    rng = np.random.default_rng(7)
    x = rng.uniform(-4, 4, 100)
    for n in range(9):
        lhs = psi_r(n, x, UNIT)
        rhs = np.exp(1j * np.pi / 8) * psi_os(n, x * np.exp(1j * np.pi / 4), UNIT)
        assert np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))) <= 1e-12


def test_psi_r_solves_inverted_equation():
    # -psi''/2 - x^2 psi/2 = i(n + 1/2) psi in units 1
    x, h = np.linspace(-2, 2, 9), 1e-4
    for n in range(4):
        f = psi_r(n, x, UNIT)
        d2 = (psi_r(n, x + h, UNIT) - 2 * f + psi_r(n, x - h, UNIT)) / h**2
        lhs = -d2 / 2 - x * x * f / 2
        np.testing.assert_allclose(lhs, 1j * (n + 0.5) * f, atol=1e-5 * max(1, np.abs(f).max()))


# ---------------------------------------------------------------- coherent wave


def test_coherent_parameter():
    assert coherent_parameter(2.0) == pytest.approx(np.sqrt(2) * (1 + 1j))
    with pytest.raises(InvalidParameterError):
        coherent_parameter(-1.0)


def test_phi_zero_amplitude_is_vacuum():
    x = np.linspace(-3, 3, 7) + 0.2j
    vacuum = np.exp(1j * np.pi / 8) * (2 * np.pi**2) ** -0.25 * np.exp(-0.5j * x * x)
    np.testing.assert_allclose(phi_alpha_r(0.0, x, UNIT), vacuum, rtol=1e-14)
    # same profile as psi_0^r, with the smaller printed prefactor
    np.testing.assert_allclose(phi_alpha_r(0.0, x, UNIT) / psi_r(0, x, UNIT), (2 * np.pi) ** -0.25, rtol=1e-14)


def test_phi_frozen_value():
    assert phi_alpha_r(1.0, 0.5, UNIT) == pytest.approx(0.4219448124908453 + 0.21689088097783632j, rel=1e-14)


def test_phi_is_annihilation_eigenfunction():
    alpha = coherent_parameter(1.0)
    x = np.linspace(-2, 2, 50).astype(complex)

    def phi(z):
        return phi_from_alpha(alpha, z, UNIT)

    got = coherent_annihilation(phi, x, UNIT)
    assert np.max(np.abs(got - alpha * phi(x))) <= 1e-8


def test_phi_derivative_matches_difference():
    alpha = coherent_parameter(0.6)
    x, h = np.linspace(-1, 1, 5) + 0.1j, 1e-6
    num = (phi_from_alpha(alpha, x + h, UNIT) - phi_from_alpha(alpha, x - h, UNIT)) / (2 * h)
    np.testing.assert_allclose(phi_derivative(alpha, x, UNIT), num, rtol=1e-8)


def test_phi_eta_norm_on_dilation_ray():
    # on x = t e^{-i pi/4}, |phi|^2 = exp(2 sqrt2 Re(alpha) t - t^2) / (sqrt2 pi)
    for am in (0.0, 0.25, 1.0, 2.0):
        alpha = coherent_parameter(am)
        c = ContourSpec(-np.pi / 4, 200, center=np.sqrt(2) * alpha.real)
        t, w = c.rule(UNIT)
        f = phi_from_alpha(alpha, t * c.direction, UNIT)
        assert np.sum(w * np.abs(f) ** 2) == pytest.approx(np.exp(am * am) / np.sqrt(2 * np.pi), rel=1e-12)


# ---------------------------------------------------------------- quadrature and sampling


def test_gauss_hermite_scaled_integrates_plain_gaussians():
    s, w = gauss_hermite_scaled(400)
    assert np.all(np.isfinite(w)) and np.all(w > 0)
    assert np.sum(w * np.exp(-s * s)) == pytest.approx(np.sqrt(np.pi), rel=1e-13)
    assert np.sum(w * s * s * np.exp(-s * s)) == pytest.approx(np.sqrt(np.pi) / 2, rel=1e-12)


def test_contour_spec_validation():
    with pytest.raises(ConfigurationError):
        ContourSpec(node_count=4)
    with pytest.raises(ConfigurationError):
        ContourSpec(angle=np.pi / 2)
    with pytest.raises(ConfigurationError):
        ContourSpec(scheme=Scheme.GAUSS_LEGENDRE_TRUNCATED)
    with pytest.raises(ConfigurationError):
        ContourSpec(half_width=5.0)
    c = ContourSpec(0.0, 64, "gauss_legendre_truncated", half_width=6.0)
    t, w = c.rule(UNIT)
    assert t.min() > -6 and t.max() < 6 and w.sum() == pytest.approx(12.0)


def test_sample_odd_rule_hits_origin():
    c = ContourSpec(-np.pi / 4, 9)
    s = sample(WaveId(WaveKind.PSI_R, 0), c, UNIT)
    assert s.nodes[4] == 0
    assert s.values[4] == pytest.approx(psi_r(0, 0.0, UNIT))


def test_sample_callable_and_label():
    c = ContourSpec(0.0, 16)
    s = sample(lambda z: np.ones_like(z), c, UNIT, label="one")
    assert s.label == "one" and np.all(s.values == 1)
    assert sample(WaveId("phi_alpha_r", alpha_mod=1.0), c, UNIT).label == "phi_alpha_r alpha_mod=1.0"
    assert np.all(s.scaled(2j).values == 2j)


def test_sampled_wave_rejects_nonfinite_values():
    c = ContourSpec(0.0, 8)
    t, w = c.rule(UNIT)
    with pytest.raises(WaveOverflowError):
        SampledWave(c, t, w, np.full(8, np.nan + 0j), "bad")
    with pytest.raises(ConfigurationError):
        SampledWave(c, t[::-1], w, np.ones(8, complex), "reversed")


def test_norm_factor_agrees_with_factorial():
    # psi_os at a generic point against an explicit normalisation
    n, x = 6, 0.37
    ref = PI_Q / np.sqrt(2.0**n * factorial(n)) * hermval(x, [0] * n + [1]) * np.exp(-x * x / 2)
    assert psi_os(n, x, UNIT) == pytest.approx(ref, rel=1e-14)
