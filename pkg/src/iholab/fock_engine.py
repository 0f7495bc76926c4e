"""Dense operators of the inverted oscillator in a truncated Fock basis.

All matrices are built in the dimensionless frame m = omega = hbar = 1 and
rescaled to physical units on the way out, so ``SystemParams`` owns every
unit conversion.  Truncation to ``dim`` levels breaks the unbounded dilation
similarity at the basis edge; identities involving it are only meaningful on
a central index block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla

from .errors import (
    ConditioningError,
    InvalidDimensionError,
    InvalidParameterError,
    MatrixOverflowError,
    NumericalConsistencyError,
)

HERMITIAN_RTOL = 1e-13
EXPM_CROSSCHECK_RTOL = 1e-10
DEFAULT_MAX_CONDITION = 1e13
_EPS = np.finfo(float).eps


class Symmetry(str, Enum):
    HERMITIAN = "hermitian"
    ANTI_HERMITIAN = "anti_hermitian"
    GENERAL = "general"


class Family(str, Enum):
    OSCILLATOR = "oscillator"
    INVERTED = "inverted"
    TILDE = "tilde"


@dataclass(frozen=True)
class SystemParams:
    """Physical constants plus the Fock truncation size."""

    mass: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0
    dim: int = 128

    def __post_init__(self) -> None:
        for name in ("mass", "omega", "hbar"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be positive and finite, got {value!r}")
        if isinstance(self.dim, bool) or not isinstance(self.dim, (int, np.integer)):
            raise InvalidDimensionError(f"dim must be an integer, got {self.dim!r}")
        if self.dim < 4 or self.dim % 2:
            raise InvalidDimensionError(f"dim must be even and >= 4, got {self.dim}")

    @property
    def length_scale(self) -> float:
        return float(np.sqrt(self.hbar / (self.mass * self.omega)))

    @property
    def momentum_scale(self) -> float:
        return float(np.sqrt(self.hbar * self.mass * self.omega))

    @property
    def energy_scale(self) -> float:
        return self.hbar * self.omega

    def with_dim(self, dim: int) -> "SystemParams":
        return SystemParams(self.mass, self.omega, self.hbar, dim)


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex square matrix tagged with a symmetry label."""

    entries: np.ndarray
    symmetry: Symmetry = Symmetry.GENERAL

    def __post_init__(self) -> None:
        entries = _frozen(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidDimensionError(f"operator must be square, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise MatrixOverflowError("operator has non-finite entries", float("inf"))
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "symmetry", Symmetry(self.symmetry))
        if self.symmetry is not Symmetry.GENERAL:
            sign = 1.0 if self.symmetry is Symmetry.HERMITIAN else -1.0
            defect = max_abs(entries - sign * entries.conj().T)
            scale = max_abs(entries)
            if defect > HERMITIAN_RTOL * scale:
                raise NumericalConsistencyError(
                    f"{self.symmetry.value} tag violated: defect {defect:.3g} vs scale {scale:.3g}"
                )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T, self.symmetry)

    def block(self, stop: int) -> np.ndarray:
        return self.entries[:stop, :stop]


@dataclass(frozen=True)
class FockState:
    """Coefficient vector in the truncated number basis."""

    coeffs: np.ndarray
    family: Family = Family.OSCILLATOR
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        coeffs = _frozen(self.coeffs)
        if coeffs.ndim != 1:
            raise InvalidDimensionError("coefficients must form a vector")
        if not np.all(np.isfinite(coeffs)):
            raise MatrixOverflowError("state has non-finite coefficients", float("inf"))
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "family", Family(self.family))
        if self.family is Family.OSCILLATOR:
            norm = float(np.linalg.norm(coeffs))
            if abs(norm - 1.0) > 1e-10:
                raise NumericalConsistencyError(f"oscillator state must have unit norm, got {norm!r}")

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]


def basis_state(dim: int, n: int) -> FockState:
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"level {n} outside truncation {dim}")
    e = np.zeros(dim, dtype=complex)
    e[n] = 1.0
    return FockState(e, Family.OSCILLATOR, f"e_{n}")


# ---------------------------------------------------------------- ladder algebra


def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def build_annihilation(dim: int) -> OperatorMatrix:
    """a[n, n+1] = sqrt(n+1); the creation operator is ``.dagger()``."""
    if isinstance(dim, bool) or not isinstance(dim, (int, np.integer)) or dim < 2:
        raise InvalidDimensionError(f"dim must be an integer >= 2, got {dim!r}")
    return OperatorMatrix(_ladder(int(dim)))


def dilation_generator_matrix(dim: int) -> OperatorMatrix:
    """K = i(a+^2 - a^2) for any dim >= 2 (no parity-balance requirement)."""
    a = build_annihilation(dim).entries
    ad = a.conj().T
    return OperatorMatrix(1j * (ad @ ad - a @ a), Symmetry.HERMITIAN)


def _dimensionless_xp(dim: int) -> tuple[np.ndarray, np.ndarray]:
    a = _ladder(dim)
    ad = a.conj().T
    return (a + ad) / np.sqrt(2.0), 1j * (ad - a) / np.sqrt(2.0)


def build_position_momentum(params: SystemParams) -> tuple[OperatorMatrix, OperatorMatrix]:
    x, p = _dimensionless_xp(params.dim)
    return (
        OperatorMatrix(params.length_scale * x, Symmetry.HERMITIAN),
        OperatorMatrix(params.momentum_scale * p, Symmetry.HERMITIAN),
    )


def build_hamiltonians(params: SystemParams) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Return (H_os, H_r).

    Both come from the ladder forms (a+a + a a+)/2 and -(a+^2 + a^2)/2, which
    equal the truncated p^2/2m +- m w^2 x^2/2 products exactly.
    """
    a = _ladder(params.dim)
    ad = a.conj().T
    e = params.energy_scale
    h_os = e * (ad @ a + a @ ad) / 2.0
    h_r = -e * (ad @ ad + a @ a) / 2.0
    return OperatorMatrix(h_os, Symmetry.HERMITIAN), OperatorMatrix(h_r, Symmetry.HERMITIAN)


def build_dilation_generator(params: SystemParams) -> OperatorMatrix:
    """K = (xp + px)/hbar, which is unit free."""
    return dilation_generator_matrix(params.dim)


# ---------------------------------------------------------------- matrix functions


def matrix_exponential(m: OperatorMatrix, cross_check: bool = True) -> OperatorMatrix:
    """exp(M) by scaling and squaring with Pade (scipy), spectral cross-check if Hermitian."""
    a = m.entries
    norm1 = float(np.linalg.norm(a, 1))
    with np.errstate(all="ignore"):
        result = sla.expm(a)
    if not np.all(np.isfinite(result)):
        raise MatrixOverflowError("matrix exponential overflowed", norm1)
    if m.symmetry is Symmetry.HERMITIAN:
        if cross_check:
            w, u = np.linalg.eigh(a)
            with np.errstate(all="ignore"):
                spectral = (u * np.exp(w)) @ u.conj().T
            scale = max_abs(spectral)
            if not np.isfinite(scale):
                raise MatrixOverflowError("spectral exponential overflowed", norm1)
            gap = max_abs(result - spectral)
            if gap > EXPM_CROSSCHECK_RTOL * scale:
                raise NumericalConsistencyError(
                    f"Pade and spectral exponentials disagree: {gap:.3g} vs scale {scale:.3g}"
                )
        return OperatorMatrix(result, Symmetry.HERMITIAN)
    return OperatorMatrix(result, Symmetry.GENERAL)


def spectral_exponential(m: OperatorMatrix) -> np.ndarray:
    """U exp(Lambda) U^H for a Hermitian matrix; used as an independent oracle."""
    if m.symmetry is not Symmetry.HERMITIAN:
        raise NumericalConsistencyError("spectral route needs a Hermitian operator")
    w, u = np.linalg.eigh(m.entries)
    return (u * np.exp(w)) @ u.conj().T


def scaled(m: OperatorMatrix, c: complex) -> OperatorMatrix:
    """c*M keeping the symmetry tag when c preserves it."""
    if m.symmetry is Symmetry.GENERAL or c == 0:
        sym = Symmetry.GENERAL
    elif np.imag(c) == 0:
        sym = m.symmetry
    elif np.real(c) == 0:
        sym = Symmetry.ANTI_HERMITIAN if m.symmetry is Symmetry.HERMITIAN else Symmetry.HERMITIAN
    else:
        sym = Symmetry.GENERAL
    return OperatorMatrix(c * m.entries, sym)


def build_rho_eta(params: SystemParams) -> tuple[OperatorMatrix, OperatorMatrix]:
    """rho = exp(pi K / 8) and eta = exp(pi K / 4)."""
    k = build_dilation_generator(params)
    return (
        matrix_exponential(scaled(k, np.pi / 8)),
        matrix_exponential(scaled(k, np.pi / 4)),
    )


def build_rho_inverse(params: SystemParams) -> OperatorMatrix:
    """rho^-1 = exp(-pi K / 8), exact inverse of the truncated rho without a solve."""
    k = build_dilation_generator(params)
    return matrix_exponential(scaled(k, -np.pi / 8))


def condition_estimate(m: np.ndarray) -> float:
    """1-norm condition number estimate (LAPACK gecon on an LU factorization)."""
    lu, piv = sla.lu_factor(m, check_finite=True)
    anorm = float(np.linalg.norm(m, 1))
    gecon = sla.get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or rcond == 0.0:
        return float("inf")
    return float(1.0 / rcond)


def conditioned_solve(
    m: np.ndarray, b: np.ndarray, max_condition: float = DEFAULT_MAX_CONDITION
) -> tuple[np.ndarray, float]:
    """Solve M X = B by partial-pivot LU plus one refinement step.

    Returns (X, condition estimate).  Raises ConditioningError when the
    estimate exceeds ``max_condition``, so inaccurate results never pass silently.
    """
    with np.errstate(all="ignore"):
        lu, piv = sla.lu_factor(m)
    anorm = float(np.linalg.norm(m, 1))
    gecon = sla.get_lapack_funcs("gecon", (lu,))
    rcond, _ = gecon(lu, anorm, norm="1")
    cond = float("inf") if rcond == 0.0 else float(1.0 / rcond)
    if cond > max_condition:
        raise ConditioningError("linear solve refused", cond)
    x = sla.lu_solve((lu, piv), b)
    r = b - m @ x
    x = x + sla.lu_solve((lu, piv), r)
    return x, cond


def inverse(m: OperatorMatrix, max_condition: float = DEFAULT_MAX_CONDITION) -> tuple[OperatorMatrix, float]:
    x, cond = conditioned_solve(m.entries, np.eye(m.dim, dtype=complex), max_condition)
    if not np.all(np.isfinite(x)):
        raise ConditioningError("inverse is not finite", cond)
    return OperatorMatrix(x), cond


def similarity(
    s: OperatorMatrix, m: OperatorMatrix, max_condition: float = DEFAULT_MAX_CONDITION
) -> tuple[np.ndarray, float]:
    """S M S^-1 via a right solve (S^-1 never formed explicitly)."""
    sm = s.entries @ m.entries
    # X S = SM  <=>  S^T X^T = (SM)^T
    xt, cond = conditioned_solve(s.entries.T, sm.T, max_condition)
    return xt.T, cond


def inverse_similarity(
    s: OperatorMatrix, m: OperatorMatrix, max_condition: float = DEFAULT_MAX_CONDITION
) -> tuple[np.ndarray, float]:
    """S^-1 M S via a left solve."""
    return conditioned_solve(s.entries, m.entries @ s.entries, max_condition)


# ---------------------------------------------------------------- inverted ladder


def build_inverted_ladder(params: SystemParams) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Closed forms A = e^{i pi/4}(x/(sqrt2 l) + l p/(sqrt2 hbar)), Abar likewise with -p.

    These are the infinite-basis values of rho^-1 a rho and rho^-1 a+ rho
    projected onto the truncation.
    """
    x, p = build_position_momentum(params)
    xs = x.entries / (np.sqrt(2.0) * params.length_scale)
    ps = p.entries / (np.sqrt(2.0) * params.momentum_scale)
    phase = np.exp(1j * np.pi / 4)
    return OperatorMatrix(phase * (xs + ps)), OperatorMatrix(phase * (xs - ps))


def inverted_ladder_by_similarity(
    params: SystemParams, max_condition: float = DEFAULT_MAX_CONDITION
) -> tuple[OperatorMatrix, OperatorMatrix, float]:
    """rho^-1 a rho and rho^-1 a+ rho formed densely; returns (A, Abar, cond(rho))."""
    rho, _ = build_rho_eta(params)
    a = build_annihilation(params.dim)
    big_a, cond = inverse_similarity(rho, a, max_condition)
    big_abar, _ = inverse_similarity(rho, a.dagger(), max_condition)
    return OperatorMatrix(big_a), OperatorMatrix(big_abar), cond


def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


@dataclass(frozen=True)
class SimilarityReport:
    block: int
    rho_residual: float
    eta_residual: float
    ladder_residual: float
    rho_condition: float
    eta_condition: float


def verify_similarity(
    params: SystemParams,
    max_condition: float = DEFAULT_MAX_CONDITION,
    block: int | None = None,
) -> SimilarityReport:
    """Central-block residuals of the three similarity statements.

    (i)   rho H_r rho^-1 - i H_os
    (ii)  eta (i H_os) eta^-1 + i H_os
    (iii) H_r - i hbar w (Abar A + A Abar)/2
    Residuals (i) and (ii) require solves with rho and eta; a ConditioningError
    is raised when their condition estimate exceeds ``max_condition``.
    ``block`` is the exclusive end of the index block (default dim/2 + 1).
    """
    stop = params.dim // 2 + 1 if block is None else block
    h_os, h_r = build_hamiltonians(params)
    rho, eta = build_rho_eta(params)
    i_h_os = 1j * h_os.entries
    m1, cond_rho = similarity(rho, h_r, max_condition)
    m2, cond_eta = similarity(eta, OperatorMatrix(i_h_os), max_condition)
    big_a, big_abar = build_inverted_ladder(params)
    a, abar = big_a.entries, big_abar.entries
    m3 = h_r.entries - 1j * params.energy_scale * (abar @ a + a @ abar) / 2.0
    return SimilarityReport(
        block=stop,
        rho_residual=max_abs((m1 - i_h_os)[:stop, :stop]),
        eta_residual=max_abs((m2 + i_h_os)[:stop, :stop]),
        ladder_residual=max_abs(m3[:stop, :stop]),
        rho_condition=cond_rho,
        eta_condition=cond_eta,
    )


# ---------------------------------------------------------------- spectra


def similarity_spectrum(
    params: SystemParams, max_condition: float = float("inf")
) -> tuple[np.ndarray, float]:
    """Eigenvalues of the dense matrix rho^-1 (i H_os) rho, sorted by imaginary part."""
    h_os, _ = build_hamiltonians(params)
    rho, _ = build_rho_eta(params)
    m, cond = inverse_similarity(rho, OperatorMatrix(1j * h_os.entries), max_condition)
    ev = np.linalg.eigvals(m)
    return ev[np.lexsort((ev.real, ev.imag))], cond


def dilated_hamiltonian(params: SystemParams, fraction: float = 0.5) -> OperatorMatrix:
    """rho_s H_r rho_s^-1 with rho_s = exp(s K), s = fraction*pi/8, from the scaling rules.

    x -> e^{-2is} x and p -> e^{2is} p, so fraction 0 gives H_r and fraction 1
    gives i H_os.  No ill-conditioned matrix product is formed.
    """
    if not 0.0 <= fraction <= 1.0:
        raise InvalidParameterError("fraction must lie in [0, 1]")
    s = fraction * np.pi / 8
    x, p = _dimensionless_xp(params.dim)
    h = (np.exp(4j * s) * (p @ p) - np.exp(-4j * s) * (x @ x)) / 2.0
    return OperatorMatrix(params.energy_scale * h)


def dilated_spectrum(params: SystemParams, n_levels: int = 6, fraction: float = 0.5) -> np.ndarray:
    """Lowest ``n_levels`` eigenvalues of the dilated Hamiltonian on the imaginary axis.

    The discretised continuum lies off the axis; resonances sit on it.
    """
    ev = np.linalg.eigvals(dilated_hamiltonian(params, fraction).entries)
    on_axis = ev[np.abs(ev.real) <= 1e-6 * np.maximum(1.0, np.abs(ev))]
    on_axis = on_axis[on_axis.imag > 0]
    on_axis = on_axis[np.argsort(on_axis.imag)]
    if on_axis.size < n_levels:
        raise NumericalConsistencyError(
            f"only {on_axis.size} imaginary eigenvalues resolved at dim {params.dim}"
        )
    return on_axis[:n_levels]


@dataclass(frozen=True)
class EigenResidual:
    n: int
    block: float
    full: float


def eigen_residuals(params: SystemParams, n_max: int = 5, block: int | None = None) -> list[EigenResidual]:
    """||H_r v_n - i hbar w (n+1/2) v_n|| / ||v_n|| for v_n = rho^-1 e_n.

    ``block`` restricts both norms to indices 0..block-1 (default dim/2 + 1);
    the full-vector value is reported alongside.
    """
    stop = params.dim // 2 + 1 if block is None else block
    _, h_r = build_hamiltonians(params)
    rinv = build_rho_inverse(params).entries
    out = []
    for n in range(n_max + 1):
        v = rinv[:, n]
        r = h_r.entries @ v - 1j * params.energy_scale * (n + 0.5) * v
        out.append(
            EigenResidual(
                n,
                float(np.linalg.norm(r[:stop]) / np.linalg.norm(v[:stop])),
                float(np.linalg.norm(r) / np.linalg.norm(v)),
            )
        )
    return out
