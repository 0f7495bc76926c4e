"""The eta pseudo-scalar product and the structural diagnostics built on it.

The real-line integrals of the inverted-oscillator eigenfunctions diverge, so
the position-space pairing is defined by continuation onto the ray
x = t e^{-i pi/4}, where every product collapses to an oscillator integral.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_legendre

from .analytic_waves import (
    ContourSpec,
    SampledWave,
    WaveId,
    WaveKind,
    coherent_parameter,
    phi_from_alpha,
    psi_os,
    psi_r,
    sample,
)
from .errors import ConditioningError, ConfigurationError, InvalidDimensionError, InvalidParameterError
from .fock_engine import (
    FockState,
    OperatorMatrix,
    SystemParams,
    build_rho_eta,
    build_rho_inverse,
    condition_estimate,
    max_abs,
)

DILATION_ANGLE = -np.pi / 4
PAIRING_RTOL = 1e-8
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class GramReport:
    n_max: int
    method: str
    gram: np.ndarray
    max_offdiag: float
    max_diag_dev: float

    @classmethod
    def from_gram(cls, gram: np.ndarray, method: str) -> "GramReport":
        dev = gram - np.eye(gram.shape[0])
        diag = np.abs(np.diag(dev))
        off = np.abs(dev - np.diag(np.diag(dev)))
        return cls(gram.shape[0] - 1, method, gram, float(off.max()), float(diag.max()))

    @property
    def max_deviation(self) -> float:
        return max(self.max_offdiag, self.max_diag_dev)

    def to_record(self) -> dict:
        return {
            "n_max": self.n_max,
            "method": self.method,
            "gram_real": self.gram.real.tolist(),
            "gram_imag": self.gram.imag.tolist(),
            "max_offdiag": self.max_offdiag,
            "max_diag_dev": self.max_diag_dev,
        }


@dataclass(frozen=True)
class ResidualReport:
    name: str
    block: tuple[int, int]
    value: float
    condition_estimate: float

    def __post_init__(self) -> None:
        if not self.value >= 0:
            raise ValueError("residual must be non-negative")

    def to_record(self) -> dict:
        return asdict(self)


def to_json(report: GramReport | ResidualReport) -> str:
    return json.dumps(report.to_record(), sort_keys=True)


# ---------------------------------------------------------------- products


def _same_contour(f: SampledWave, g: SampledWave) -> None:
    if f.contour != g.contour or not np.array_equal(f.nodes, g.nodes):
        raise ConfigurationError(f"contour mismatch between {f.label} and {g.label}")


def c_product(f: SampledWave, g: SampledWave) -> complex:
    """Bilinear integral of f g along the ray, Jacobian e^{i theta} included."""
    _same_contour(f, g)
    return complex(np.sum(f.weights * f.values * g.values) * f.contour.direction)


def eta_product_contour(f: SampledWave, g: SampledWave) -> complex:
    """Sesquilinear eta product <f|eta|g> = integral of conj(f) g along the -pi/4 ray."""
    _same_contour(f, g)
    if not np.isclose(f.contour.angle, DILATION_ANGLE, rtol=0, atol=1e-15):
        raise ConfigurationError("the eta product is only defined on the -pi/4 ray")
    return complex(np.sum(f.weights * np.conj(f.values) * g.values))


def eta_product_fock(u: FockState, v: FockState, eta: OperatorMatrix, guard: bool = True) -> complex:
    """u^H eta v.

    With ``guard`` the rounding bound dim*eps*|u||eta||v| is compared with the
    result and a ConditioningError is raised when it exceeds PAIRING_RTOL of it.
    """
    if not (u.dim == v.dim == eta.dim):
        raise InvalidDimensionError(f"dimension mismatch {u.dim}, {v.dim}, {eta.dim}")
    value = complex(np.vdot(u.coeffs, eta.entries @ v.coeffs))
    if guard:
        scale = float(np.linalg.norm(u.coeffs) * np.linalg.norm(eta.entries) * np.linalg.norm(v.coeffs))
        bound = u.dim * _EPS * scale
        if bound > PAIRING_RTOL * max(abs(value), np.finfo(float).tiny):
            raise ConditioningError("eta pairing dominated by rounding", scale / max(abs(value), 1e-300))
    return value


# ---------------------------------------------------------------- Gram matrices


def fock_families(params: SystemParams, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Columns rho^-1 e_n (psi_n) and rho e_n (tilde psi_n = eta psi_n), n <= n_max."""
    rinv = build_rho_inverse(params).entries
    rho, _ = build_rho_eta(params)
    return rinv[:, : n_max + 1], rho.entries[:, : n_max + 1]


def gram_fock(params: SystemParams, n_max: int) -> np.ndarray:
    psi, tilde = fock_families(params, n_max)
    return tilde.conj().T @ psi


def gram_contour(params: SystemParams, n_max: int, nodes: int = 200) -> np.ndarray:
    contour = ContourSpec(DILATION_ANGLE, nodes)
    waves = [sample(WaveId(WaveKind.PSI_R, n), contour, params) for n in range(n_max + 1)]
    return np.array([[c_product(wm, wn) for wn in waves] for wm in waves])


def biorthonormality_gram(n_max: int, method: str, params: SystemParams, nodes: int = 200) -> GramReport:
    """G[m, n] = <tilde psi_m | psi_n> by the Fock or the contour route."""
    if not 0 <= n_max <= 20:
        raise InvalidParameterError(f"n_max must lie in 0..20, got {n_max}")
    if method == "fock":
        if params.dim < 8 * n_max:
            raise InvalidDimensionError(f"fock route needs dim >= {8 * n_max}")
        return GramReport.from_gram(gram_fock(params, n_max), method)
    if method == "contour":
        return GramReport.from_gram(gram_contour(params, n_max, nodes), method)
    raise ConfigurationError(f"unknown method {method!r}")


# ---------------------------------------------------------------- completeness


def chirped_gaussian(params: SystemParams) -> Callable:
    """exp(-(1+i) x^2 / 2 l^2): its expansion in psi_n^r converges geometrically."""

    def f(z):
        xi = np.asarray(z, dtype=complex) / params.length_scale
        return np.exp(-(1 + 1j) * xi * xi / 2)

    f.__name__ = "chirped_gaussian"
    return f


def displaced_vacuum(params: SystemParams, alpha_mod: float = 1.0) -> Callable:
    """The coherent wave exp[alpha Abar] phi_0 with alpha = alpha_mod e^{i pi/4}."""
    alpha = coherent_parameter(alpha_mod)

    def f(z):
        return phi_from_alpha(alpha, z, params)

    f.__name__ = f"displaced_vacuum_{alpha_mod!r}"
    return f


def completeness_residual(
    n_terms: int,
    testpoints: Sequence[complex],
    params: SystemParams,
    test_function: Callable | None = None,
    nodes: int = 200,
) -> float:
    """sup over testpoints of |K_N f - f| for the partial kernel sum_{n<N} psi_n(x) tilde psi_n(x').

    The coefficients <tilde psi_n | f> are continued onto the -pi/4 ray, so
    ``test_function`` must be entire with Gaussian decay along that ray.  The
    default is the displaced vacuum of unit modulus.
    """
    if not 1 <= n_terms <= 64:
        raise InvalidParameterError(f"n_terms must lie in 1..64, got {n_terms}")
    f = test_function or displaced_vacuum(params)
    contour = ContourSpec(DILATION_ANGLE, nodes)
    fs = sample(f, contour, params)
    x = np.asarray(testpoints, dtype=complex)
    approx = np.zeros_like(x)
    for n in range(n_terms):
        coeff = c_product(sample(WaveId(WaveKind.PSI_R, n), contour, params), fs)
        approx += coeff * psi_r(n, x, params)
    return float(np.max(np.abs(approx - f(x))))


# ---------------------------------------------------------------- quasi-Hermiticity


def quasi_hermiticity_residual(h: OperatorMatrix, eta: OperatorMatrix, block: range) -> ResidualReport:
    """max |H^dagger eta - eta H| on the index block, with eta's condition estimate."""
    if h.dim != eta.dim:
        raise InvalidDimensionError("H and eta dimensions differ")
    start, stop = block.start, block.stop
    if not (0 <= start < stop <= h.dim // 2 + 1):
        raise InvalidParameterError(f"block {block} must lie within 0..{h.dim // 2}")
    hm, em = h.entries, eta.entries
    r = hm.conj().T @ em - em @ hm
    return ResidualReport(
        "quasi_hermiticity",
        (start, stop),
        max_abs(r[start:stop, start:stop]),
        condition_estimate(em),
    )


# ---------------------------------------------------------------- divergence


def truncated_norm(n: int, half_length: float, params: SystemParams, kind: str = "psi_r", panel: float = 1.0) -> float:
    """Integral of |psi_n|^2 over [-L, L] by composite Gauss-Legendre."""
    wave = {"psi_r": psi_r, "psi_os": psi_os}[kind]
    panels = max(1, int(np.ceil(2 * half_length / (panel * params.length_scale))))
    s, w = roots_legendre(24)
    edges = np.linspace(-half_length, half_length, panels + 1)
    mid = (edges[:-1] + edges[1:]) / 2
    half = (edges[1] - edges[0]) / 2
    x = (mid[:, None] + half * s[None, :]).ravel()
    weights = np.tile(half * w, panels)
    return float(np.sum(weights * np.abs(wave(n, x, params)) ** 2))


def divergence_exponent(
    n: int, cutoffs: Sequence[float], params: SystemParams | None = None, kind: str = "psi_r"
) -> float:
    """Least-squares slope of log(integral over [-L, L] of |psi_n|^2) against log L."""
    params = params or SystemParams()
    if not 0 <= n <= 10:
        raise InvalidParameterError(f"n must lie in 0..10, got {n}")
    cut = np.asarray(cutoffs, dtype=float)
    if cut.size < 2 or np.any(np.diff(cut) <= 0) or cut[0] <= 0:
        raise InvalidParameterError("cutoffs must be positive and strictly increasing")
    norms = np.array([truncated_norm(n, L, params, kind) for L in cut])
    slope, _ = np.polyfit(np.log(cut), np.log(norms), 1)
    return float(slope)
