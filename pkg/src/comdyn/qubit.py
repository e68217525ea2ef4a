"""Commutative two-level dynamics in closed form.

The generator combines a sigma_3 rotation at rate eps(t), pumping between
the levels at rate gamma(t) split by a mixing parameter mu, and a dephasing
block with a Hermitian 2x2 coefficient matrix c(t) over the level
projectors. All of these commute at different times, so the dynamics
diagonalizes once in the mu-dependent damping basis

    g = (omega, sigma+, sigma-, sigma_3),   h = (I, sigma+, sigma-, sigma),

with omega = mu pi_1 + (1 - mu) pi_0 the invariant state and
sigma = (1 - mu) pi_1 - mu pi_0. The eigenvalues are (0, Gamma(t),
conj(Gamma(t)), -gamma(t)) with

    Gamma(t) = -1/2 [gamma + c_00 + c_11 - 2 c_10 + 2 i eps],

so the propagator is a sum of four scalar exponentials of coefficient
integrals. Matrix conventions are fixed as sigma+ = |1><0|, pi_0 = |0><0|,
pi_1 = |1><1|, sigma_3 = pi_1 - pi_0, which makes the bi-orthogonality
tr(g_a^dag h_b) = delta exact (and exact in rational arithmetic when mu is
a Fraction).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .classical import PropagationMode, condition_grid, integration_window
from .errors import PreconditionFailedError
from .superop import DEFAULT_TOL, SuperOperator
from .timefn import TimeFunction, as_time_function

E00 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
E11 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)   # |1><0|
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|
PI0 = E00   # sigma- sigma+
PI1 = E11   # sigma+ sigma-
SIGMA3 = PI1 - PI0
IDENTITY2 = np.eye(2, dtype=complex)


def _is_exact_number(mu) -> bool:
    return isinstance(mu, (Fraction, int)) and not isinstance(mu, bool)


def damping_basis(mu):
    """Bi-orthogonal pair (g, h) diagonalizing every generator of the family.

    For an exact ``mu`` (int or Fraction) the arrays are object-dtype and
    tr(g_a^dag h_b) = delta_ab holds exactly in rational arithmetic.
    """
    if _is_exact_number(mu):
        zero, one = Fraction(0), Fraction(1)
        mu = Fraction(mu)
        omega = np.array([[one - mu, zero], [zero, mu]], dtype=object)
        sigma = np.array([[-mu, zero], [zero, one - mu]], dtype=object)
        sp = np.array([[zero, zero], [one, zero]], dtype=object)
        sm = np.array([[zero, one], [zero, zero]], dtype=object)
        s3 = np.array([[-one, zero], [zero, one]], dtype=object)
        ident = np.array([[one, zero], [zero, one]], dtype=object)
    else:
        mu = float(mu)
        omega = np.array([[1.0 - mu, 0.0], [0.0, mu]], dtype=complex)
        sigma = np.array([[-mu, 0.0], [0.0, 1.0 - mu]], dtype=complex)
        sp, sm, s3, ident = SIGMA_PLUS, SIGMA_MINUS, SIGMA3, IDENTITY2
    g = (omega, sp, sm, s3)
    h = (ident, sp, sm, sigma)
    return g, h


@dataclass(frozen=True)
class QubitGeneratorSpec:
    """Coefficients of the two-level generator family.

    ``c`` is a 2x2 nest of TimeFunctions that must be Hermitian at every
    sampled time; ``mu`` is the mixing parameter in [0, 1].
    """

    epsilon: TimeFunction
    gamma: TimeFunction
    c: tuple
    mu: float

    def __post_init__(self):
        object.__setattr__(self, "epsilon", as_time_function(self.epsilon))
        object.__setattr__(self, "gamma", as_time_function(self.gamma))
        rows = tuple(tuple(as_time_function(f) for f in row) for row in self.c)
        if len(rows) != 2 or any(len(row) != 2 for row in rows):
            raise ValueError("c must be a 2x2 nest of coefficients")
        object.__setattr__(self, "c", rows)
        if not 0.0 <= float(self.mu) <= 1.0:
            raise ValueError(f"mixing parameter must lie in [0, 1], got {self.mu}")

    @classmethod
    def constant(cls, epsilon=0.0, gamma=0.0, c=((0.0, 0.0), (0.0, 0.0)),
                 mu=0.5) -> "QubitGeneratorSpec":
        return cls(epsilon, gamma, c, mu)

    def c_matrix(self, t: float, tol: float = 1e-9) -> np.ndarray:
        cmat = np.array([[self.c[0][0](t), self.c[0][1](t)],
                         [self.c[1][0](t), self.c[1][1](t)]], dtype=complex)
        scale = max(1.0, float(np.max(np.abs(cmat))))
        if np.max(np.abs(cmat - cmat.conj().T)) > tol * scale:
            raise ValueError(f"c(t) is not Hermitian at t={t}")
        return cmat

    def c_integral(self, t0: float, t1: float) -> np.ndarray:
        return np.array([[self.c[0][0].integrate(t0, t1), self.c[0][1].integrate(t0, t1)],
                         [self.c[1][0].integrate(t0, t1), self.c[1][1].integrate(t0, t1)]],
                        dtype=complex)


def _dissipator(jump: np.ndarray) -> np.ndarray:
    jj = jump.conj().T @ jump
    return (np.kron(jump.conj(), jump)
            - 0.5 * (np.kron(IDENTITY2, jj) + np.kron(jj.T, IDENTITY2)))


def build_generator(spec: QubitGeneratorSpec, t: float = 0.0) -> SuperOperator:
    """Assemble the generator at time t as a 4x4 superoperator."""
    eps = complex(spec.epsilon(t))
    gam = complex(spec.gamma(t))
    cmat = spec.c_matrix(t)
    mu = float(spec.mu)

    matrix = np.zeros((4, 4), dtype=complex)
    # Hamiltonian rotation -i/2 eps [sigma_3, .]
    matrix += (-0.5j * eps) * (np.kron(IDENTITY2, SIGMA3) - np.kron(SIGMA3.T, IDENTITY2))
    # pumping gamma (mu D[sigma+] + (1 - mu) D[sigma-])
    matrix += gam * (mu * _dissipator(SIGMA_PLUS) + (1.0 - mu) * _dissipator(SIGMA_MINUS))
    # dephasing sum c_ab (pi_a rho pi_b - 1/2 {pi_b pi_a, rho})
    projectors = (PI0, PI1)
    for alpha in range(2):
        for beta in range(2):
            coeff = cmat[alpha, beta]
            if coeff == 0:
                continue
            sandwich = np.kron(projectors[beta].T, projectors[alpha])
            product = projectors[beta] @ projectors[alpha]
            anti = 0.5 * (np.kron(IDENTITY2, product) + np.kron(product.T, IDENTITY2))
            matrix += coeff * (sandwich - anti)
    return SuperOperator(2, matrix)


def gamma_eigenvalue(spec: QubitGeneratorSpec, t: float = 0.0) -> complex:
    """The complex eigenvalue on sigma+.

    For real c_10 this is the closed form
    -1/2 [gamma + c_00 + c_11 - 2 c_10 + 2 i eps]; for complex c_10 the
    value is extracted from the assembled generator instead.
    """
    cmat = spec.c_matrix(t)
    if abs(cmat[1, 0].imag) <= 1e-12 * max(1.0, float(np.max(np.abs(cmat)))):
        return -0.5 * (complex(spec.gamma(t)) + cmat[0, 0] + cmat[1, 1]
                       - 2.0 * cmat[1, 0] + 2.0j * complex(spec.epsilon(t)))
    gen = build_generator(spec, t)
    return complex(np.vdot(SIGMA_PLUS, gen.apply(SIGMA_PLUS)))


def eigenvalue_integrals(spec: QubitGeneratorSpec, t0: float, t1: float) -> np.ndarray:
    """Integrals over [t0, t1] of the four mode eigenvalues
    (0, Gamma, conj Gamma, -gamma)."""
    gamma_int = complex(spec.gamma.integrate(t0, t1))
    eps_int = complex(spec.epsilon.integrate(t0, t1))
    cint = spec.c_integral(t0, t1)
    big_gamma = -0.5 * (gamma_int + cint[0, 0] + cint[1, 1]
                        - 2.0 * cint[1, 0] + 2.0j * eps_int)
    return np.array([0.0, big_gamma, np.conj(big_gamma), -gamma_int])


def _assemble(mu: float, mode_values: Sequence[complex]) -> SuperOperator:
    g, h = damping_basis(float(mu))
    matrix = np.zeros((4, 4), dtype=complex)
    for value, gm, hm in zip(mode_values, g, h):
        col = np.asarray(gm, dtype=complex).reshape(-1, order="F")
        row = np.asarray(hm, dtype=complex).reshape(-1, order="F")
        matrix += value * np.outer(col, row.conj())
    return SuperOperator(2, matrix)


def _check_psd(matrix: np.ndarray, tol: float) -> float:
    eigs = np.linalg.eigvalsh((matrix + matrix.conj().T) / 2.0)
    return float(np.min(eigs))


def propagate(spec: QubitGeneratorSpec, t0: float, t: float,
              mode: PropagationMode = "markov", tol: float = DEFAULT_TOL,
              grid_points: int = 201, check: bool = True) -> SuperOperator:
    """Closed-form propagator sum_a exp(int lambda_a) g_a tr(h_a^dag .).

    Markovian mode requires gamma(u) > -tol and c(u) >= 0 pointwise on
    [t0, t]; the homogeneous mode requires the running integrals over
    [0, tau] to satisfy the same signs for tau <= t - t0.
    """
    lo, hi = integration_window(t0, t, mode)
    if check:
        grid = condition_grid(lo, hi, grid_points)
        if mode == "markov":
            for u in grid:
                if float(np.real(spec.gamma(u))) < -tol:
                    raise PreconditionFailedError(
                        f"gamma({u}) = {spec.gamma(u)} negative (markov mode)",
                        witness=("gamma", float(u)))
                if _check_psd(spec.c_matrix(float(u)), tol) < -tol:
                    raise PreconditionFailedError(
                        f"c({u}) not positive semidefinite (markov mode)",
                        witness=("c", float(u)))
        else:
            for tau in grid:
                if tau == 0.0:
                    continue
                if float(np.real(spec.gamma.integrate(0.0, float(tau)))) < -tol:
                    raise PreconditionFailedError(
                        f"int_0^{tau} gamma < 0 (nonmarkov mode)",
                        witness=("gamma-integral", float(tau)))
                if _check_psd(spec.c_integral(0.0, float(tau)), tol) < -tol:
                    raise PreconditionFailedError(
                        f"int_0^{tau} c not positive semidefinite (nonmarkov mode)",
                        witness=("c-integral", float(tau)))
    integrals = eigenvalue_integrals(spec, lo, hi)
    return _assemble(spec.mu, np.exp(integrals))


@dataclass(frozen=True)
class VConjugation:
    """The basis-change map V with V f_a = g_a for f = (e11, s+, s-, e00)."""

    v: SuperOperator
    v_inverse: SuperOperator
    v_inverse_dual: SuperOperator


def v_conjugation(mu: float) -> VConjugation:
    """Construct V, V^-1 and V^-1# from the damping basis.

    V x = sum_a g_a (f_a, x) maps the orthonormal family
    f = (e11, sigma+, sigma-, e00) onto the damping basis g, and
    V^-1# maps it onto h; conjugating the diagonal projectors
    P_a x = f_a (f_a, x) with V therefore diagonalizes the whole family.
    """
    if not 0.0 <= float(mu) <= 1.0:
        raise ValueError(f"mixing parameter must lie in [0, 1], got {mu}")
    g, h = damping_basis(float(mu))
    f = (E11, SIGMA_PLUS, SIGMA_MINUS, E00)

    def rank_one_sum(lefts, rights):
        matrix = np.zeros((4, 4), dtype=complex)
        for lm, rm in zip(lefts, rights):
            col = np.asarray(lm, dtype=complex).reshape(-1, order="F")
            row = np.asarray(rm, dtype=complex).reshape(-1, order="F")
            matrix += np.outer(col, row.conj())
        return SuperOperator(2, matrix)

    return VConjugation(
        v=rank_one_sum(g, f),
        v_inverse=rank_one_sum(f, h),
        v_inverse_dual=rank_one_sum(h, f),
    )


def spectral_projector(index: int) -> SuperOperator:
    """P_index x = f_index (f_index, x) over f = (e11, s+, s-, e00)."""
    f = (E11, SIGMA_PLUS, SIGMA_MINUS, E00)[index]
    col = f.reshape(-1, order="F")
    return SuperOperator(2, np.outer(col, col.conj()))


@dataclass(frozen=True)
class ClassificationReport:
    markovian: bool
    nonmarkovian_valid: bool
    first_markov_violation: Optional[tuple]      # (time, condition)
    first_nonmarkov_violation: Optional[tuple]
    horizon: float

    def as_dict(self) -> dict:
        return {
            "markovian": self.markovian,
            "nonmarkovian_valid": self.nonmarkovian_valid,
            "first_markov_violation": self.first_markov_violation,
            "first_nonmarkov_violation": self.first_nonmarkov_violation,
            "horizon": self.horizon,
        }


def classify(spec: QubitGeneratorSpec, horizon: float,
             grid_points: int = 201, tol: float = DEFAULT_TOL) -> ClassificationReport:
    """Check the pointwise (Markovian) and integrated (non-Markovian)
    admissibility conditions on [0, horizon]."""
    grid = condition_grid(0.0, horizon, grid_points)
    markov_violation = None
    for u in grid:
        if float(np.real(spec.gamma(float(u)))) < -tol:
            markov_violation = (float(u), "gamma pointwise")
            break
        if _check_psd(spec.c_matrix(float(u)), tol) < -tol:
            markov_violation = (float(u), "c pointwise")
            break
    nonmarkov_violation = None
    for tau in grid:
        if tau == 0.0:
            continue
        if float(np.real(spec.gamma.integrate(0.0, float(tau)))) < -tol:
            nonmarkov_violation = (float(tau), "gamma integral")
            break
        if _check_psd(spec.c_integral(0.0, float(tau)), tol) < -tol:
            nonmarkov_violation = (float(tau), "c integral")
            break
    return ClassificationReport(
        markovian=markov_violation is None,
        nonmarkovian_valid=nonmarkov_violation is None,
        first_markov_violation=markov_violation,
        first_nonmarkov_violation=nonmarkov_violation,
        horizon=horizon,
    )
