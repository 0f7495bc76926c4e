"""Generalised coherent states of the inverted oscillator and their dynamics.

A coherent state is an eigenvector of A = rho^-1 a rho.  Its Fock coefficients
do not decay (they behave like k^{-1/4}), so the truncated vector is only
trustworthy on a central block and every Fock-side check is block-restricted.
Moments are eta-expectations of the eta-pseudo-Hermitian observables
X = rho^-1 x rho and P = rho^-1 p rho, evaluated along the -pi/4 ray where the
eta product is an ordinary L^2 integral.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .analytic_waves import ContourSpec, coherent_parameter, phi_derivative, phi_from_alpha
from .errors import (
    ConditioningError,
    DegenerateStateError,
    InvalidParameterError,
    NumericalConsistencyError,
    PreconditionError,
    RangeError,
    TruncationError,
)
from .fock_engine import (
    Family,
    FockState,
    OperatorMatrix,
    SystemParams,
    Symmetry,
    build_hamiltonians,
    build_rho_inverse,
    matrix_exponential,
    max_abs,
)
from .pseudo_metric import DILATION_ANGLE, PAIRING_RTOL

PHASE = np.pi / 4
MAX_GROWTH = 3.0
TAIL_TOL = 1e-12
RESIDUAL_GATE = 1e-6
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class CoherentSpec:
    """|alpha|, its phase, and a time in units of 1/omega."""

    alpha_mod: float
    phase: float = PHASE
    time: float = 0.0
    override_phase: bool = False

    def __post_init__(self) -> None:
        if not (np.isfinite(self.alpha_mod) and self.alpha_mod >= 0):
            raise InvalidParameterError(f"alpha_mod must be >= 0, got {self.alpha_mod!r}")
        if not (np.isfinite(self.time) and self.time >= 0):
            raise InvalidParameterError(f"time must be >= 0, got {self.time!r}")
        if self.phase != PHASE and not self.override_phase:
            raise InvalidParameterError("phase is fixed to pi/4; set override_phase to explore")

    @property
    def alpha(self) -> complex:
        return coherent_parameter(self.alpha_mod, self.phase) * float(np.exp(self.time))


@dataclass(frozen=True)
class ExpectationReport:
    time: float
    x_mean: complex
    p_mean: complex
    x2_mean: complex
    p2_mean: complex
    dx: float
    dp: float
    product: float
    eta_norm: float
    alpha: complex = 0j
    residual: float = 0.0

    COLUMNS = ("t", "x_mean", "p_mean", "x2_mean", "p2_mean", "dx", "dp", "product", "eta_norm")

    def row(self) -> dict:
        return {
            "t": self.time,
            "x_mean": self.x_mean,
            "p_mean": self.p_mean,
            "x2_mean": self.x2_mean,
            "p2_mean": self.p2_mean,
            "dx": self.dx,
            "dp": self.dp,
            "product": self.product,
            "eta_norm": self.eta_norm,
        }


@dataclass(frozen=True)
class TrajectoryRecord:
    times: tuple[float, ...]
    x_c: tuple[float, ...]
    p_c: tuple[float, ...]
    method: str

    def __post_init__(self) -> None:
        if not (len(self.times) == len(self.x_c) == len(self.p_c)):
            raise ValueError("trajectory columns must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


# ---------------------------------------------------------------- Fock side


def apply_inverted_annihilation(v: np.ndarray) -> np.ndarray:
    """A v with A = (a + i a+)/sqrt2 in units m = w = hbar = 1."""
    k = np.sqrt(np.arange(1, v.size, dtype=float))
    out = np.zeros_like(v, dtype=complex)
    out[:-1] += k * v[1:]
    out[1:] += 1j * k * v[:-1]
    return out / np.sqrt(2.0)


def apply_inverted_creation(v: np.ndarray) -> np.ndarray:
    """Abar v with Abar = (i a + a+)/sqrt2."""
    k = np.sqrt(np.arange(1, v.size, dtype=float))
    out = np.zeros_like(v, dtype=complex)
    out[:-1] += 1j * k * v[1:]
    out[1:] += k * v[:-1]
    return out / np.sqrt(2.0)


def default_block(dim: int) -> int:
    """Edge disturbances of the truncated propagator reach index ~dim e^{-2wt}/4; dim/32 is safe for wt <= 1."""
    return max(8, dim // 32)


def vacuum_component(alpha: complex) -> complex:
    """<0| rho^-1 |alpha> for the normalised oscillator coherent state |alpha>."""
    return complex(2**0.25 * np.exp(-abs(alpha) ** 2 / 2 + 0.5j * alpha * alpha))


def required_dim(alpha_mod: float, tol: float = TAIL_TOL) -> int:
    """Smallest dim with |alpha|^n / sqrt(n!) < tol at n = dim - 1 (rounded up to even)."""
    if alpha_mod == 0:
        return 4
    n = 1
    while n * np.log(alpha_mod) - 0.5 * gammaln(n + 1) >= np.log(tol) or n < 3:
        n += 1
    dim = n + 1
    return dim + (dim % 2)


def make_coherent(spec: CoherentSpec, params: SystemParams) -> FockState:
    """rho^-1 |alpha> for the eta-normalised coherent state, alpha = spec.alpha.

    Built from the eigen-equation A v = alpha v, which fixes the three-term
    recurrence v_{k+1} = (sqrt2 alpha v_k - i sqrt k v_{k-1}) / sqrt(k+1), seeded
    with the exact vacuum component.  This avoids the rounding of the dense
    rho^-1, whose columns lose about a digit per index.
    """
    alpha = spec.alpha
    need = required_dim(abs(alpha))
    if params.dim < need:
        raise TruncationError(f"coherent tail too large at dim {params.dim}", need)
    v = np.zeros(params.dim, dtype=complex)
    v[0] = vacuum_component(alpha)
    v[1] = np.sqrt(2.0) * alpha * v[0]
    for k in range(1, params.dim - 1):
        v[k + 1] = (np.sqrt(2.0) * alpha * v[k] - 1j * np.sqrt(k) * v[k - 1]) / np.sqrt(k + 1)
    return FockState(v, Family.INVERTED, f"coherent alpha={alpha!r}")


def coherent_by_similarity(spec: CoherentSpec, params: SystemParams) -> FockState:
    """Dense rho^-1 applied to the oscillator coherent vector (cross-check route)."""
    alpha = spec.alpha
    n = np.arange(params.dim)
    c = np.exp(n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1) - abs(alpha) ** 2 / 2) if alpha else (n == 0) * 1.0
    c = c * np.exp(1j * n * np.angle(alpha))
    rinv = build_rho_inverse(params).entries
    return FockState(rinv @ c, Family.INVERTED, f"coherent (similarity) alpha={alpha!r}")


def displaced_vacuum_series(alpha: complex, params: SystemParams, max_terms: int = 400) -> FockState:
    """exp[alpha Abar] applied to the inverted vacuum by its truncated power series."""
    vac = make_coherent(CoherentSpec(0.0), params).coeffs
    total = vac.copy()
    term = vac.copy()
    for k in range(1, max_terms):
        term = alpha * apply_inverted_creation(term) / k
        total += term
        if np.linalg.norm(term) <= _EPS * np.linalg.norm(total):
            break
    return FockState(total, Family.INVERTED, f"exp(alpha Abar) vacuum alpha={alpha!r}")


def annihilation_residual(state: FockState, alpha: complex, block: int | None = None) -> float:
    """||(A v - alpha v)_B|| / ||v_B|| on the block 0..B-1."""
    b = block or default_block(state.dim)
    v = state.coeffs
    r = apply_inverted_annihilation(v) - alpha * v
    return float(np.linalg.norm(r[:b]) / np.linalg.norm(v[:b]))


def fit_alpha(state: FockState, block: int | None = None) -> tuple[complex, float]:
    """Block Rayleigh quotient for the A-eigenvalue and the matching residual."""
    b = block or default_block(state.dim)
    v = state.coeffs
    av = apply_inverted_annihilation(v)
    den = np.vdot(v[:b], v[:b])
    if abs(den) < 1e-300:
        raise DegenerateStateError("state vanishes on the fitting block")
    alpha = complex(np.vdot(v[:b], av[:b]) / den)
    return alpha, annihilation_residual(state, alpha, b)


def block_deviation(u: FockState, v: FockState, block: int | None = None) -> float:
    """||u_B - v_B|| / ||v_B||."""
    b = block or default_block(v.dim)
    return float(np.linalg.norm(u.coeffs[:b] - v.coeffs[:b]) / np.linalg.norm(v.coeffs[:b]))


def evolution_amplitude(alpha: complex, omega_t: float) -> float:
    """Scalar c with exp(-i H_r t) rho^-1|alpha> = c rho^-1|alpha e^{wt}> for normalised |.>."""
    return float(np.exp(omega_t / 2 + (abs(alpha) ** 2 * (np.exp(2 * omega_t) - 1)) / 2))


# ---------------------------------------------------------------- evolution


def _check_time(t: float, params: SystemParams) -> float:
    wt = params.omega * t
    if not np.isfinite(wt) or t < 0:
        raise RangeError(f"time must be finite and >= 0, got {t!r}")
    if wt > MAX_GROWTH:
        raise RangeError(f"omega*t = {wt:.6g} exceeds the growth budget {MAX_GROWTH}")
    return wt


def evolve(state: FockState, t: float, params: SystemParams) -> FockState:
    """exp(-i H_r t / hbar) state with the unitary propagator of the truncated H_r."""
    _check_time(t, params)
    if state.dim != params.dim:
        raise InvalidParameterError("state and params dimensions differ")
    if t == 0:
        return state
    _, h_r = build_hamiltonians(params)
    gen = OperatorMatrix(-1j * t / params.hbar * h_r.entries, Symmetry.ANTI_HERMITIAN)
    u = matrix_exponential(gen)
    return FockState(u.entries @ state.coeffs, state.family, f"{state.label} t={t!r}")


def evolve_many(state: FockState, times: Sequence[float], params: SystemParams) -> list[FockState]:
    """Same propagator via one eigendecomposition of H_r, for time sweeps."""
    for t in times:
        _check_time(t, params)
    _, h_r = build_hamiltonians(params)
    w, u = np.linalg.eigh(h_r.entries)
    c = u.conj().T @ state.coeffs
    return [
        FockState(u @ (np.exp(-1j * w * t / params.hbar) * c), state.family, f"{state.label} t={t!r}")
        for t in times
    ]


# ---------------------------------------------------------------- expectations


def eta_expectation(state: FockState, op: OperatorMatrix, eta: OperatorMatrix, guard: bool = True) -> complex:
    """(v^H eta O v) / (v^H eta v).

    ``guard`` refuses results whose rounding bound exceeds PAIRING_RTOL of the
    eta norm, which happens quickly because eta is exponentially ill-conditioned,
    and results where the top quarter of the basis carries more than
    PAIRING_RTOL of the eta norm, i.e. where the truncation edge dominates.
    """
    v = state.coeffs
    if not (v.size == op.dim == eta.dim):
        raise InvalidParameterError("dimension mismatch")
    ev = eta.entries @ v
    norm = complex(np.vdot(v, ev))
    if abs(norm) < 1e-300:
        raise DegenerateStateError("eta norm below 1e-300")
    if guard:
        scale = float(np.linalg.norm(v) ** 2 * np.linalg.norm(eta.entries))
        if v.size * _EPS * scale > PAIRING_RTOL * abs(norm):
            raise ConditioningError("eta expectation dominated by rounding", scale / abs(norm))
        edge = 3 * v.size // 4
        share = abs(np.vdot(v[edge:], ev[edge:])) / abs(norm)
        if share > PAIRING_RTOL:
            raise ConditioningError("eta expectation dominated by the truncation edge", share)
    return complex(np.vdot(ev, op.entries @ v) / norm)


def contour_moments(alpha: complex, params: SystemParams, nodes: int = 200) -> dict:
    """eta moments of X and P for the coherent wave with parameter alpha.

    On the ray z = t e^{-i pi/4} the eta product is the plain integral of
    conj(f) g over t, X acts as multiplication by t and P as -i hbar e^{-i pi/4} d/dz.
    """
    xi0 = np.sqrt(2.0) * alpha.real
    contour = ContourSpec(DILATION_ANGLE, nodes, center=xi0 * params.length_scale)
    t, w = contour.rule(params)
    z = t * contour.direction
    f = phi_from_alpha(alpha, z, params)
    df = phi_derivative(alpha, z, params)
    dens = w * np.abs(f) ** 2
    norm = dens.sum()
    pf = -1j * params.hbar * np.exp(-1j * np.pi / 4) * df
    return {
        "x": complex(np.sum(dens * t) / norm),
        "x2": complex(np.sum(dens * t * t) / norm),
        "p": complex(np.sum(w * np.conj(f) * pf) / norm),
        "p2": complex(np.sum(w * np.abs(pf) ** 2) / norm),
    }


def _spread(second: complex, first: complex, name: str) -> float:
    var = (second - first * first).real
    if var < -1e-10:
        raise NumericalConsistencyError(f"negative variance for {name}: {var!r}")
    return float(np.sqrt(max(var, 0.0)))


def uncertainties(
    state: FockState,
    params: SystemParams,
    time: float = 0.0,
    block: int | None = None,
    nodes: int = 200,
) -> ExpectationReport:
    """eta moments, spreads and their product for a coherent Fock state.

    The A-eigenvalue is fitted on the central block and gated at RESIDUAL_GATE,
    the amplitude is read from the vacuum component, and the moments of the
    identified wave are integrated on the -pi/4 ray.
    """
    alpha, residual = fit_alpha(state, block)
    if residual > RESIDUAL_GATE:
        raise NumericalConsistencyError(
            f"state is not an A-eigenvector on the block (residual {residual:.3g})"
        )
    amp = state.coeffs[0] / vacuum_component(alpha)
    m = contour_moments(alpha, params, nodes)
    dx = _spread(m["x2"], m["x"], "x")
    dp = _spread(m["p2"], m["p"], "p")
    return ExpectationReport(
        time=float(time),
        x_mean=m["x"],
        p_mean=m["p"],
        x2_mean=m["x2"],
        p2_mean=m["p2"],
        dx=dx,
        dp=dp,
        product=dx * dp,
        eta_norm=float(abs(amp) ** 2),
        alpha=alpha,
        residual=residual,
    )


# ---------------------------------------------------------------- classical


def classical_trajectory(
    x0: float,
    p0: float,
    t_grid: Sequence[float],
    params: SystemParams,
    method: str = "closed_form",
    dt: float = 1e-3,
) -> TrajectoryRecord:
    """Solve x'' = w^2 x with p = m x'."""
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0 or np.any(np.diff(t) <= 0):
        raise InvalidParameterError("t_grid must be non-empty and strictly increasing")
    m, w = params.mass, params.omega
    if method == "closed_form":
        x = x0 * np.cosh(w * t) + p0 / (m * w) * np.sinh(w * t)
        p = p0 * np.cosh(w * t) + m * w * x0 * np.sinh(w * t)
    elif method == "rk4":
        if not dt > 0:
            raise InvalidParameterError("dt must be positive")

        def rhs(y: np.ndarray) -> np.ndarray:
            return np.array([y[1] / m, m * w * w * y[0]])

        y = np.array([x0, p0], dtype=float)
        # integrate from 0 to the first grid point, then between grid points
        now = 0.0
        out = []
        for target in t:
            span = target - now
            steps = int(np.ceil(abs(span) / dt - 1e-12)) if span else 0
            h = span / steps if steps else 0.0
            for _ in range(steps):
                k1 = rhs(y)
                k2 = rhs(y + h / 2 * k1)
                k3 = rhs(y + h / 2 * k2)
                k4 = rhs(y + h * k3)
                y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            now = target
            out.append(y.copy())
        x, p = np.array(out).T
    else:
        raise InvalidParameterError(f"unknown method {method!r}")
    return TrajectoryRecord(tuple(map(float, t)), tuple(map(float, x)), tuple(map(float, p)), method)


# ---------------------------------------------------------------- BCH


def bch_check(
    generator: OperatorMatrix,
    b: OperatorMatrix,
    c: complex,
    block: int | None = None,
    tol: float = 1e-10,
) -> float:
    """Block residual of exp(g) exp(B) exp(-g) - exp(e^c B), given [g, B] = c B on the block."""
    stop = block or generator.dim // 4 + 1
    g, bm = generator.entries, b.entries
    defect = max_abs((g @ bm - bm @ g - c * bm)[:stop, :stop])
    if defect > tol:
        raise PreconditionError("[g, B] = c B fails on the block", defect)
    eg = matrix_exponential(OperatorMatrix(g), cross_check=False).entries
    emg = matrix_exponential(OperatorMatrix(-g), cross_check=False).entries
    eb = matrix_exponential(OperatorMatrix(bm), cross_check=False).entries
    ecb = matrix_exponential(OperatorMatrix(np.exp(c) * bm), cross_check=False).entries
    return max_abs((eg @ eb @ emg - ecb)[:stop, :stop])
