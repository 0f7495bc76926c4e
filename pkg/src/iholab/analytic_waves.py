"""Closed-form wavefunctions evaluated at complex positions, and contour sampling.

Positions are physical; internally every function works with the
dimensionless coordinate xi = x / l, l = sqrt(hbar / m w), and carries the
l^{-1/2} density factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy.special import gammaln, roots_hermite, roots_legendre

from .errors import ConfigurationError, InvalidParameterError, WaveOverflowError
from .fock_engine import SystemParams

HERMITE_MAX_ORDER = 200
_PI_QUARTER = np.pi ** -0.25
_LOG_MAX = 700.0


class Scheme(str, Enum):
    GAUSS_HERMITE = "gauss_hermite"
    GAUSS_LEGENDRE_TRUNCATED = "gauss_legendre_truncated"


@dataclass(frozen=True)
class ContourSpec:
    """Ray t*e^{i angle} in the complex position plane plus a quadrature rule on t.

    ``center`` shifts the Gauss-Hermite nodes along the ray, which keeps the
    rule accurate for Gaussians whose peak has drifted away from the origin.
    """

    angle: float = -np.pi / 4
    node_count: int = 200
    scheme: Scheme = Scheme.GAUSS_HERMITE
    half_width: float | None = None
    center: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.node_count < 8:
            raise ConfigurationError(f"node_count must be >= 8, got {self.node_count}")
        if not abs(self.angle) < np.pi / 2:
            raise ConfigurationError(f"|angle| must be < pi/2, got {self.angle}")
        if self.scheme is Scheme.GAUSS_LEGENDRE_TRUNCATED:
            if self.half_width is None or not self.half_width > 0:
                raise ConfigurationError("truncated scheme needs a positive half_width")
        elif self.half_width is not None:
            raise ConfigurationError("half_width only applies to the truncated scheme")

    @property
    def direction(self) -> complex:
        return complex(np.exp(1j * self.angle))

    def rule(self, params: SystemParams) -> tuple[np.ndarray, np.ndarray]:
        """Nodes t_k (physical length) and weights w_k for plain integrals over t."""
        if self.scheme is Scheme.GAUSS_HERMITE:
            s, w = gauss_hermite_scaled(self.node_count)
            scale = params.length_scale
            return self.center + scale * s, scale * w
        s, w = roots_legendre(self.node_count)
        return self.center + self.half_width * s, self.half_width * w


@dataclass(frozen=True)
class SampledWave:
    contour: ContourSpec
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    label: str

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.values)):
            raise WaveOverflowError(f"non-finite samples for {self.label}")
        if np.any(np.diff(self.nodes) <= 0):
            raise ConfigurationError("nodes must be strictly increasing")
        if not (self.nodes.shape == self.weights.shape == self.values.shape):
            raise ConfigurationError("nodes, weights and values must align")

    def scaled(self, c: complex) -> "SampledWave":
        return SampledWave(self.contour, self.nodes, self.weights, c * self.values, f"{c}*{self.label}")


def gauss_hermite_scaled(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes with weights w_k e^{s_k^2} for plain integrals over s.

    Uses w_k e^{s_k^2} = 1 / (n phi_{n-1}(s_k)^2) with normalised Hermite
    functions, which stays finite where the raw weights underflow.
    """
    s, _ = roots_hermite(n)
    phi = np.pi**-0.25 * np.exp(-s * s / 2)
    if n > 1:
        prev, phi = phi, np.sqrt(2.0) * s * phi
        for k in range(1, n - 1):
            prev, phi = phi, np.sqrt(2.0 / (k + 1)) * s * phi - np.sqrt(k / (k + 1)) * prev
    return s, 1.0 / (n * phi * phi)


# ---------------------------------------------------------------- Hermite


def _check_order(n: int) -> None:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 0:
        raise InvalidParameterError(f"order must be a non-negative integer, got {n!r}")
    if n > HERMITE_MAX_ORDER:
        raise InvalidParameterError(f"order {n} exceeds the supported maximum {HERMITE_MAX_ORDER}")


def hermite_complex(n: int, z):
    """Physicists' Hermite polynomial by H_{k+1} = 2z H_k - 2k H_{k-1}."""
    _check_order(n)
    z = np.asarray(z, dtype=complex)
    h_prev = np.ones_like(z)
    if n == 0:
        return h_prev if h_prev.ndim else complex(h_prev)
    h = 2 * z
    for k in range(1, n):
        h_prev, h = h, 2 * z * h - 2 * k * h_prev
    return h if h.ndim else complex(h)


def _gaussian(exponent: np.ndarray, label: str) -> np.ndarray:
    if np.any(np.real(exponent) > _LOG_MAX):
        raise WaveOverflowError(f"Gaussian factor of {label} out of range")
    return np.exp(exponent)


def _finish(value: np.ndarray, label: str):
    if not np.all(np.isfinite(value)):
        raise WaveOverflowError(f"{label} overflowed")
    return value if value.ndim else complex(value)


def _hermite_function(n: int, xi: np.ndarray) -> np.ndarray:
    """pi^{-1/4} H_n(xi) / sqrt(2^n n!) by the normalised three-term recurrence."""
    h_prev = np.full_like(xi, _PI_QUARTER)
    if n == 0:
        return h_prev
    h = np.sqrt(2.0) * xi * h_prev
    for k in range(1, n):
        h_prev, h = h, np.sqrt(2.0 / (k + 1)) * xi * h - np.sqrt(k / (k + 1)) * h_prev
    return h


def psi_os(n: int, x, params: SystemParams):
    """Normalised oscillator eigenfunction at (possibly complex) x."""
    _check_order(n)
    xi = np.asarray(x, dtype=complex) / params.length_scale
    g = _gaussian(-xi * xi / 2, f"psi_os n={n}")
    return _finish(_hermite_function(n, xi) * g / np.sqrt(params.length_scale), f"psi_os n={n}")


def _norm_factor(n: int) -> float:
    return float(np.exp(-0.5 * (n * np.log(2.0) + gammaln(n + 1))))


def psi_r(n: int, x, params: SystemParams):
    """Inverted-oscillator generalised eigenfunction, branch e^{i pi/8}(m w / pi hbar)^{1/4}."""
    _check_order(n)
    xi = np.asarray(x, dtype=complex) / params.length_scale
    pref = np.exp(1j * np.pi / 8) * _PI_QUARTER / np.sqrt(params.length_scale)
    g = _gaussian(-0.5j * xi * xi, f"psi_r n={n}")
    h = hermite_complex(n, np.exp(1j * np.pi / 4) * xi)
    return _finish(pref * _norm_factor(n) * h * g, f"psi_r n={n}")


def psi_r_tilde(n: int, x, params: SystemParams):
    """Dual family, branch e^{-i pi/8}(m w / pi hbar)^{1/4}; conj of psi_r on the real line."""
    _check_order(n)
    xi = np.asarray(x, dtype=complex) / params.length_scale
    pref = np.exp(-1j * np.pi / 8) * _PI_QUARTER / np.sqrt(params.length_scale)
    g = _gaussian(0.5j * xi * xi, f"psi_r_tilde n={n}")
    h = hermite_complex(n, np.exp(-1j * np.pi / 4) * xi)
    return _finish(pref * _norm_factor(n) * h * g, f"psi_r_tilde n={n}")


def coherent_parameter(alpha_mod: float, phase: float = np.pi / 4) -> complex:
    if not alpha_mod >= 0:
        raise InvalidParameterError(f"alpha_mod must be >= 0, got {alpha_mod!r}")
    return complex(alpha_mod * np.exp(1j * phase))


def phi_alpha_r(alpha_mod: float, x, params: SystemParams, phase: float = np.pi / 4):
    """Coherent wave of the inverted oscillator, alpha = alpha_mod e^{i phase}.

    (i m w / 2 hbar pi^2)^{1/4} e^{-i|alpha|^2/2} exp(sqrt(2i m w/hbar) alpha x - i m w x^2 / 2 hbar)
    """
    alpha = coherent_parameter(alpha_mod, phase)
    return phi_from_alpha(alpha, x, params)


def phi_from_alpha(alpha: complex, x, params: SystemParams):
    xi = np.asarray(x, dtype=complex) / params.length_scale
    pref = np.exp(1j * np.pi / 8) * (2.0 * np.pi**2) ** -0.25 / np.sqrt(params.length_scale)
    expo = -0.5j * abs(alpha) ** 2 + np.sqrt(2j) * alpha * xi - 0.5j * xi * xi
    return _finish(pref * _gaussian(expo, "phi_alpha_r"), "phi_alpha_r")


def phi_derivative(alpha: complex, x, params: SystemParams):
    """d/dx of ``phi_from_alpha``."""
    xi = np.asarray(x, dtype=complex) / params.length_scale
    return (np.sqrt(2j) * alpha - 1j * xi) / params.length_scale * phi_from_alpha(alpha, x, params)


def coherent_annihilation(phi: Callable, x, params: SystemParams, step: float = 1e-5):
    """Apply sqrt(i m w / 2 hbar) x + hbar/sqrt(2 i m w hbar) d/dx with a central difference."""
    x = np.asarray(x, dtype=complex)
    xi = x / params.length_scale
    h = step * params.length_scale
    dphi = (phi(x + h) - phi(x - h)) / (2 * h)
    return np.sqrt(0.5j) * xi * phi(x) + params.length_scale / np.sqrt(2j) * dphi


# ---------------------------------------------------------------- sampling


class WaveKind(str, Enum):
    PSI_OS = "psi_os"
    PSI_R = "psi_r"
    PSI_R_TILDE = "psi_r_tilde"
    PHI_ALPHA_R = "phi_alpha_r"


@dataclass(frozen=True)
class WaveId:
    kind: WaveKind
    n: int = 0
    alpha_mod: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", WaveKind(self.kind))

    @property
    def label(self) -> str:
        if self.kind is WaveKind.PHI_ALPHA_R:
            return f"{self.kind.value} alpha_mod={self.alpha_mod!r}"
        return f"{self.kind.value} n={self.n}"

    def evaluate(self, z, params: SystemParams):
        if self.kind is WaveKind.PSI_OS:
            return psi_os(self.n, z, params)
        if self.kind is WaveKind.PSI_R:
            return psi_r(self.n, z, params)
        if self.kind is WaveKind.PSI_R_TILDE:
            return psi_r_tilde(self.n, z, params)
        return phi_alpha_r(self.alpha_mod, z, params)


def sample(wave, contour: ContourSpec, params: SystemParams, label: str | None = None) -> SampledWave:
    """Sample ``wave`` (a WaveId or a callable of complex positions) on the contour."""
    t, w = contour.rule(params)
    z = t * contour.direction
    if isinstance(wave, WaveId):
        values = wave.evaluate(z, params)
        label = label or wave.label
    else:
        values = wave(z)
        label = label or getattr(wave, "__name__", "callable")
    return SampledWave(contour, t, w, np.asarray(values, dtype=complex), label)
