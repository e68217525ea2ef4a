"""Weyl (generalized Pauli) operators on C_d and their N-partite products.

The unitaries u_{m,n}, defined by u_{m,n} e_k = lambda^{m k} e_{n+k} with
lambda = exp(2 pi i / d), form a projective representation of Z_d x Z_d:

    u_{m,n} u_{r,s} = lambda^{m.s} u_{m+r, n+s}
    u_{m,n}^dag     = lambda^{m.n} u_{-m,-n}
    tr(u_{m,n}^dag u_{k,l}) = d^N delta_mk delta_nl

N-partite operators are tensor products component-wise. A coefficient
field a(m, n) on the doubled lattice Z_d^N x Z_d^N induces the map

    A x = sum_{m,n} a(m, n) u_{n,-m} x u_{n,-m}^dag,

which is diagonal on the Weyl basis with eigenvalues given by the doubled
lattice Fourier transform: A u_{k,l} = a~(k, l) u_{k,l} with
a~(k, l) = sum_{m,n} a(m, n) lambda^{k.m + l.n}. All dynamics built here
(channels from probability fields, Lindblad generators from zero-sum rate
fields, propagators from time integrals of the rates) share the fixed
rank-one spectral projectors P_{m,n} x = u_{m,n} tr(u_{m,n}^dag x) / d^N,
so maps from different coefficient fields always commute.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Optional, Sequence, Union

import numpy as np

from . import classical
from .classical import (CirculantGenerator, LatticeField, PropagationMode,
                        condition_grid, dft)
from .errors import (DimensionMismatchError, NormalizationError,
                     PreconditionFailedError)
from .superop import DEFAULT_TOL, SuperOperator
from .timefn import Constant, as_time_function

Index = Union[int, Sequence[int]]

#: Hilbert-space dimension d^N up to which a family precomputes all
#: d^(2N) unitaries at construction.
CACHE_DIM_CAP = 32


def _as_index_tuple(value: Index, nparties: int, d: int) -> tuple:
    if isinstance(value, (int, np.integer)):
        if nparties != 1:
            raise DimensionMismatchError(
                f"scalar index given for an {nparties}-partite family")
        value = (int(value),)
    else:
        value = tuple(int(v) for v in value)
        if len(value) != nparties:
            raise DimensionMismatchError(
                f"index {value} has {len(value)} components, expected {nparties}")
    return tuple(v % d for v in value)


@lru_cache(maxsize=None)
def _single_weyl(d: int, m: int, n: int) -> np.ndarray:
    cols = np.arange(d)
    u = np.zeros((d, d), dtype=complex)
    u[(cols + n) % d, cols] = np.exp((2j * np.pi / d) * ((m * cols) % d))
    u.setflags(write=False)
    return u


def weyl_unitary(d: int, m: Index, n: Index) -> np.ndarray:
    """The unitary u_{m,n}; for sequences m, n the tensor product over parties."""
    if isinstance(m, (int, np.integer)) and isinstance(n, (int, np.integer)):
        return _single_weyl(d, int(m) % d, int(n) % d).copy()
    m = tuple(int(v) for v in np.atleast_1d(m))
    n = tuple(int(v) for v in np.atleast_1d(n))
    if len(m) != len(n):
        raise DimensionMismatchError("m and n must have the same number of parties")
    factors = [_single_weyl(d, mi % d, ni % d) for mi, ni in zip(m, n)]
    return reduce(np.kron, factors).copy()


class WeylFamily:
    """All Weyl unitaries of Z_d^N, cached when the Hilbert dimension allows."""

    def __init__(self, d: int, nparties: int = 1):
        if d < 2:
            raise ValueError(f"need d >= 2, got {d}")
        if nparties < 1:
            raise ValueError(f"need nparties >= 1, got {nparties}")
        self.d = d
        self.nparties = nparties
        self.dim = d ** nparties          # Hilbert space dimension
        self.count = self.dim ** 2        # number of (m, n) pairs, d^(2N)
        self._stack: Optional[np.ndarray] = None
        self._vec_columns: Optional[np.ndarray] = None
        if self.dim <= CACHE_DIM_CAP:
            self._stack = self._build_stack()

    # -- index bookkeeping ---------------------------------------------------

    def flat_index(self, m: Index, n: Index) -> int:
        """Row-major flat index of (m_1..m_N, n_1..n_N)."""
        m = _as_index_tuple(m, self.nparties, self.d)
        n = _as_index_tuple(n, self.nparties, self.d)
        flat = 0
        for v in m + n:
            flat = flat * self.d + v
        return flat

    def index_pair(self, flat: int) -> tuple:
        digits = []
        for _ in range(2 * self.nparties):
            digits.append(flat % self.d)
            flat //= self.d
        digits.reverse()
        return tuple(digits[:self.nparties]), tuple(digits[self.nparties:])

    # -- unitaries -------------------------------------------------------------

    def _build_stack(self) -> np.ndarray:
        stack = np.empty((self.count, self.dim, self.dim), dtype=complex)
        for flat in range(self.count):
            m, n = self.index_pair(flat)
            stack[flat] = weyl_unitary(self.d, m, n)
        return stack

    def unitary(self, m: Index, n: Index) -> np.ndarray:
        if self._stack is not None:
            return self._stack[self.flat_index(m, n)].copy()
        m = _as_index_tuple(m, self.nparties, self.d)
        n = _as_index_tuple(n, self.nparties, self.d)
        return weyl_unitary(self.d, m, n)

    def unitary_flat(self, flat: int) -> np.ndarray:
        if self._stack is not None:
            return self._stack[flat].copy()
        m, n = self.index_pair(flat)
        return weyl_unitary(self.d, m, n)

    def vec_columns(self) -> np.ndarray:
        """(dim^2, count) array whose columns are vec(u_{m,n}) in flat order."""
        if self._vec_columns is None:
            cols = np.empty((self.dim * self.dim, self.count), dtype=complex)
            for flat in range(self.count):
                cols[:, flat] = self.unitary_flat(flat).reshape(-1, order="F")
            self._vec_columns = cols
        return self._vec_columns


# ---------------------------------------------------------------------------
# algebra checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeylRelationsReport:
    d: int
    nparties: int
    product_residual: float
    adjoint_residual: float
    orthogonality_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.product_residual, self.adjoint_residual,
                   self.orthogonality_residual)

    def passed(self, tol: float = 1e-12) -> bool:
        return self.max_residual < tol

    def as_dict(self) -> dict:
        return {
            "d": self.d, "nparties": self.nparties,
            "product_residual": self.product_residual,
            "adjoint_residual": self.adjoint_residual,
            "orthogonality_residual": self.orthogonality_residual,
            "max_residual": self.max_residual,
        }


def relations_check(family: WeylFamily) -> WeylRelationsReport:
    """Exhaustively verify the product rule, the adjoint rule, and the
    orthogonality relations over all index pairs."""
    d, npar = family.d, family.nparties
    count = family.count
    stack = np.stack([family.unitary_flat(k) for k in range(count)])
    pairs = [family.index_pair(k) for k in range(count)]

    lam = 2j * np.pi / d
    product_residual = 0.0
    for a in range(count):
        ma, na = pairs[a]
        ua = stack[a]
        for b in range(count):
            mb, nb = pairs[b]
            phase = np.exp(lam * (sum(x * y for x, y in zip(ma, nb)) % d))
            target = family.flat_index(
                tuple((x + y) % d for x, y in zip(ma, mb)),
                tuple((x + y) % d for x, y in zip(na, nb)))
            res = float(np.max(np.abs(ua @ stack[b] - phase * stack[target])))
            product_residual = max(product_residual, res)

    adjoint_residual = 0.0
    for a in range(count):
        ma, na = pairs[a]
        phase = np.exp(lam * (sum(x * y for x, y in zip(ma, na)) % d))
        target = family.flat_index(tuple(-x % d for x in ma),
                                   tuple(-x % d for x in na))
        res = float(np.max(np.abs(stack[a].conj().T - phase * stack[target])))
        adjoint_residual = max(adjoint_residual, res)

    cols = family.vec_columns()
    gram = cols.conj().T @ cols
    orthogonality_residual = float(np.max(np.abs(
        gram - family.dim * np.eye(count))))

    return WeylRelationsReport(d, npar, product_residual, adjoint_residual,
                               orthogonality_residual)


# ---------------------------------------------------------------------------
# coefficient fields on the doubled lattice
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeylCoefficientField:
    """Coefficients a_t(m, n) on Z_d^N x Z_d^N (flat order: m axes then n axes).

    A probability field induces a CPTP unital channel; a real zero-sum field
    induces a (generally time-dependent) Lindblad generator.
    """

    d: int
    nparties: int
    coefficients: tuple

    def __post_init__(self):
        funcs = tuple(as_time_function(c) for c in self.coefficients)
        expected = self.d ** (2 * self.nparties)
        if len(funcs) != expected:
            raise DimensionMismatchError(
                f"field on Z_{self.d}^{self.nparties} x Z_{self.d}^{self.nparties} "
                f"needs {expected} coefficients, got {len(funcs)}")
        object.__setattr__(self, "coefficients", funcs)

    @classmethod
    def constant(cls, d: int, nparties: int, values: Sequence[complex]) -> "WeylCoefficientField":
        return cls(d, nparties, tuple(values))

    @property
    def is_constant(self) -> bool:
        return all(f.is_constant for f in self.coefficients)

    def family(self) -> WeylFamily:
        return WeylFamily(self.d, self.nparties)

    def as_circulant(self) -> CirculantGenerator:
        """The same coefficients viewed as rates on the doubled lattice."""
        return CirculantGenerator(self.d, 2 * self.nparties, self.coefficients)

    def values(self, t: float = 0.0) -> LatticeField:
        return LatticeField(self.d, 2 * self.nparties,
                            np.array([f(t) for f in self.coefficients]))

    def integrated(self, t0: float, t1: float) -> LatticeField:
        return LatticeField(self.d, 2 * self.nparties,
                            np.array([f.integrate(t0, t1) for f in self.coefficients]))


# ---------------------------------------------------------------------------
# maps from coefficient fields
# ---------------------------------------------------------------------------

def _conjugation_index(family: WeylFamily, flat: int) -> int:
    """Flat index of the unitary u_{n, -m} paired with coefficient a(m, n)."""
    m, n = family.index_pair(flat)
    return family.flat_index(n, tuple((-x) % family.d for x in m))


def map_from_values(family: WeylFamily, values: LatticeField) -> SuperOperator:
    """A x = sum a(m, n) u_{n,-m} x u_{n,-m}^dag for a fixed coefficient field."""
    if (values.d, values.naxes) != (family.d, 2 * family.nparties):
        raise DimensionMismatchError(
            f"coefficient field lives on Z_{values.d}^{values.naxes}, family "
            f"needs Z_{family.d}^{2 * family.nparties}")
    dim = family.dim
    matrix = np.zeros((dim * dim, dim * dim), dtype=complex)
    for flat in range(family.count):
        coeff = values.values[flat]
        if coeff == 0:
            continue
        u = family.unitary_flat(_conjugation_index(family, flat))
        matrix += coeff * np.kron(u.conj(), u)
    return SuperOperator(dim, matrix)


def map_from_coeffs(field: WeylCoefficientField, t: float = 0.0,
                    family: Optional[WeylFamily] = None) -> SuperOperator:
    if family is None:
        family = field.family()
    return map_from_values(family, field.values(t))


@dataclass(frozen=True)
class WeylSpectrum:
    """Eigenvalue field a~(k, l) over the fixed Weyl projector family."""

    family: WeylFamily
    eigenvalues: LatticeField

    def eigenvalue(self, k: Index, l: Index) -> complex:
        return complex(self.eigenvalues.values[self.family.flat_index(k, l)])

    def projector(self, m: Index, n: Index) -> SuperOperator:
        """P_{m,n} x = u_{m,n} tr(u_{m,n}^dag x) / d^N."""
        u = self.family.unitary(m, n)
        col = u.reshape(-1, order="F")
        return SuperOperator(self.family.dim,
                             np.outer(col, col.conj()) / self.family.dim)

    def assemble(self, values: Optional[np.ndarray] = None) -> SuperOperator:
        """sum_{m,n} v(m, n) P_{m,n}; defaults to the stored eigenvalues."""
        if values is None:
            values = self.eigenvalues.values
        values = np.asarray(values, dtype=complex).reshape(-1)
        cols = self.family.vec_columns()
        matrix = (cols * values) @ cols.conj().T / self.family.dim
        return SuperOperator(self.family.dim, matrix)


def spectrum_of_values(family: WeylFamily, values: LatticeField) -> WeylSpectrum:
    return WeylSpectrum(family, dft(values))


def map_spectrum(field: WeylCoefficientField, t: float = 0.0,
                 family: Optional[WeylFamily] = None) -> WeylSpectrum:
    """Spectral data of map_from_coeffs(field, t): the eigenvalue on u_{k,l}
    is the doubled-lattice Fourier transform a~(k, l)."""
    if family is None:
        family = field.family()
    return spectrum_of_values(family, field.values(t))


def spectrum_convention_residual(d: int, nparties: int = 1,
                                 values: Optional[np.ndarray] = None) -> float:
    """Exhaustive check that A u_{k,l} = a~(k, l) u_{k,l} for a generic field.

    Guards the phase-kernel convention a~(k,l) = sum a(m,n) lambda^(k.m+l.n)
    against drift; returns the max residual over all (k, l).
    """
    family = WeylFamily(d, nparties)
    if values is None:
        idx = np.arange(family.count)
        values = 1.0 / (idx + 2.0) + 1j / (3.0 * idx + 7.0)
    field = LatticeField(d, 2 * nparties, values)
    op = map_from_values(family, field)
    spec = spectrum_of_values(family, field)
    cols = family.vec_columns()
    image = op.matrix @ cols
    expected = cols * spec.eigenvalues.values
    return float(np.max(np.abs(image - expected)))


# ---------------------------------------------------------------------------
# Lindblad structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LindbladDecomposition:
    """Jump-operator form of a Weyl generator: no Hamiltonian part, jump
    operators u_{n,-m} with rates a(m, n) for (m, n) != 0; the origin
    coefficient is fixed by the zero-sum normalization."""

    family: WeylFamily
    jump_indices: tuple              # flat (m, n) indices, origin excluded
    rates: np.ndarray                # coefficients a(m, n) in the same order
    origin_rate: complex             # a(0, 0) = -sum of rates

    @property
    def markovian(self) -> bool:
        return bool(np.max(np.abs(self.rates.imag)) <= 1e-12
                    and np.min(self.rates.real) >= -1e-12)

    def jump_operator(self, position: int) -> np.ndarray:
        return self.family.unitary_flat(
            _conjugation_index(self.family, self.jump_indices[position]))

    def assemble(self) -> SuperOperator:
        """sum' a(m,n) (u x u^dag - x); equals the generator it came from."""
        dim = self.family.dim
        matrix = np.zeros((dim * dim, dim * dim), dtype=complex)
        eye = np.eye(dim * dim)
        for pos, rate in enumerate(self.rates):
            if rate == 0:
                continue
            u = self.jump_operator(pos)
            matrix += rate * (np.kron(u.conj(), u) - eye)
        return SuperOperator(dim, matrix)


def lindblad_decomposition(field: WeylCoefficientField, t: float = 0.0,
                           tol: float = DEFAULT_TOL,
                           family: Optional[WeylFamily] = None) -> LindbladDecomposition:
    if family is None:
        family = field.family()
    values = field.values(t).values
    total = complex(np.sum(values))
    if abs(total) > tol:
        raise NormalizationError(
            f"generator coefficients must sum to zero, got {total}")
    indices = tuple(k for k in range(family.count) if k != 0)
    rates = values[np.array(indices)]
    return LindbladDecomposition(family, indices, rates, -complex(np.sum(rates)))


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def evolve(field: WeylCoefficientField, t0: float, t: float,
           mode: PropagationMode = "markov", tol: float = DEFAULT_TOL,
           grid_points: int = classical.DEFAULT_GRID_POINTS,
           check: bool = True, family: Optional[WeylFamily] = None) -> SuperOperator:
    """Closed-form dynamical map A_{t,t0} = sum exp(I~(m,n)) P_{m,n}.

    I~ integrates the Fourier rates over [t0, t] (markov) or [0, t - t0]
    (nonmarkov). The coefficient field, viewed as a classical generator on
    the doubled lattice, must pass the matching Kolmogorov check.
    """
    lo, hi = classical.integration_window(t0, t, mode)
    if family is None:
        family = field.family()
    if check:
        lattice_gen = field.as_circulant()
        grid = condition_grid(lo, hi, grid_points)
        if mode == "markov":
            report = classical.kolmogorov_check_markov(lattice_gen, grid, tol)
        else:
            report = classical.kolmogorov_check_nonmarkov(lattice_gen, grid, tol)
        if not report.passed:
            v = report.first_violation
            raise PreconditionFailedError(
                f"Kolmogorov {report.mode} check failed at t={v.time}: "
                f"{v.condition} (index {v.index}, value {v.value:.6e})",
                witness=report)
    integ = field.integrated(lo, hi)
    relaxation = np.exp(dft(integ).values)
    return WeylSpectrum(family, LatticeField(field.d, 2 * field.nparties,
                                             relaxation)).assemble(relaxation)


def diagonal_action(field: WeylCoefficientField) -> CirculantGenerator:
    """Circulant rates governing the populations (diagonal matrix elements).

    The map sends e_ii to sum_{m,n} a(m,n) e_{i-m,i-m}, so the population
    vector obeys the classical master equation with the reflected row sum
    b(m) = sum_n a(-m, n).
    """
    d, npar = field.d, field.nparties
    size = d ** npar
    grid = np.array(field.coefficients, dtype=object).reshape(size, size)
    summed = [reduce(lambda x, y: x + y, row) for row in grid]

    coords = np.indices((d,) * npar).reshape(npar, size)
    reflected = (-coords) % d
    flat = np.zeros(size, dtype=np.intp)
    for axis in range(npar):
        flat = flat * d + reflected[axis]

    out = [summed[flat[k]] for k in range(size)]
    folded = [Constant(f(0.0)) if f.is_constant else f for f in out]
    return CirculantGenerator(d, npar, tuple(folded))


def embed_stochastic_matrix(transition: np.ndarray) -> SuperOperator:
    """Quantum rewriting of a stochastic map: rho -> sum T(m,n) e_mn rho e_nm.

    On a diagonal state diag(p) this reproduces the classical action
    diag(T p); it is the channel whose Kraus operators are sqrt(T(m,n)) e_mn
    when T is entrywise nonnegative.
    """
    transition = np.asarray(transition, dtype=complex)
    dim = transition.shape[0]
    if transition.shape != (dim, dim):
        raise DimensionMismatchError("transition matrix must be square")
    matrix = np.zeros((dim * dim, dim * dim), dtype=complex)
    for m in range(dim):
        for n in range(dim):
            unit = np.zeros((dim, dim), dtype=complex)
            unit[m, n] = 1.0
            matrix += transition[m, n] * np.kron(unit, unit)
    return SuperOperator(dim, matrix)
