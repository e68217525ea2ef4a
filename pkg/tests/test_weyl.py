import numpy as np
import pytest

from comdyn import oracle
from comdyn.classical import (CirculantGenerator, LatticeField, convolve,
                              propagate)
from comdyn.errors import NormalizationError, PreconditionFailedError
from comdyn.superop import compose, diagonalize, validate_channel
from comdyn.timefn import Constant, DampedTrig
from comdyn.weyl import (WeylCoefficientField, WeylFamily, diagonal_action,
                         embed_stochastic_matrix, evolve,
                         lindblad_decomposition, map_from_coeffs,
                         map_spectrum, relations_check,
                         spectrum_convention_residual, weyl_unitary)

from conftest import (multiset_residual, random_matrix,
                      random_probability_values)


def generator_rates(rng, d, nparties):
    """Random zero-sum rate field with nonnegative off-origin entries."""
    size = d ** (2 * nparties)
    values = rng.uniform(0.05, 0.8, size=size)
    values[0] = 0.0
    values[0] = -values.sum()
    return values


# ---------------------------------------------------------------------------
# the unitary family
# ---------------------------------------------------------------------------

def test_shift_and_phase_qubit():
    shift = weyl_unitary(2, 0, 1)
    assert np.array_equal(shift.real, np.array([[0, 1], [1, 0]]))
    phase = weyl_unitary(2, 1, 0)
    assert np.allclose(phase, np.diag([1.0, -1.0]))


def test_orthogonality_traces_qutrit():
    u12 = weyl_unitary(3, 1, 2)
    u21 = weyl_unitary(3, 2, 1)
    assert abs(np.trace(u12.conj().T @ u12) - 3.0) < 1e-13
    assert abs(np.trace(u12.conj().T @ u21)) < 1e-13


def test_square_of_u11_is_minus_identity():
    u11 = weyl_unitary(2, 1, 1)
    assert np.max(np.abs(u11 @ u11 + np.eye(2))) < 1e-14


def test_unitarity():
    for d in (2, 3, 4):
        for m in range(d):
            for n in range(d):
                u = weyl_unitary(d, m, n)
                assert np.max(np.abs(u.conj().T @ u - np.eye(d))) < 1e-13


@pytest.mark.parametrize("d,nparties", [(2, 1), (3, 1), (4, 1), (5, 1), (2, 2), (3, 2)])
def test_relations_exhaustive(d, nparties):
    report = relations_check(WeylFamily(d, nparties))
    assert report.max_residual < 1e-12


@pytest.mark.parametrize("d,nparties", [(2, 1), (3, 1), (5, 1), (2, 2), (3, 2), (5, 2)])
def test_spectrum_phase_kernel_convention(d, nparties):
    assert spectrum_convention_residual(d, nparties) < 1e-10


def test_family_index_roundtrip():
    family = WeylFamily(3, 2)
    for flat in range(family.count):
        m, n = family.index_pair(flat)
        assert family.flat_index(m, n) == flat


# ---------------------------------------------------------------------------
# maps from coefficient fields
# ---------------------------------------------------------------------------

def test_unit_field_gives_identity_map():
    values = np.zeros(4)
    values[0] = 1.0
    field = WeylCoefficientField.constant(2, 1, values)
    assert np.max(np.abs(map_from_coeffs(field).matrix - np.eye(4))) < 1e-13


def test_uniform_field_is_completely_depolarizing(rng):
    field = WeylCoefficientField.constant(2, 1, np.full(4, 0.25))
    op = map_from_coeffs(field)
    x = random_matrix(rng, 2)
    expected = np.trace(x) * np.eye(2) / 2.0
    assert np.max(np.abs(op.apply(x) - expected)) < 1e-13


def test_probability_field_gives_cptp_unital(rng):
    field = WeylCoefficientField.constant(3, 1, random_probability_values(rng, 9))
    report = validate_channel(map_from_coeffs(field))
    assert report.cp and report.tp and report.unital


def test_real_field_preserves_hermiticity(rng):
    field = WeylCoefficientField.constant(2, 1, rng.normal(size=4))
    op = map_from_coeffs(field)
    for _ in range(20):
        x = random_matrix(rng, 2)
        assert np.max(np.abs(op.apply(x.conj().T) - op.apply(x).conj().T)) < 1e-12


# ---------------------------------------------------------------------------
# spectrum and projectors
# ---------------------------------------------------------------------------

def test_spectrum_of_unit_field_is_ones():
    values = np.zeros(4)
    values[0] = 1.0
    field = WeylCoefficientField.constant(2, 1, values)
    assert np.max(np.abs(map_spectrum(field).eigenvalues.values - 1.0)) < 1e-13


def test_weyl_matrices_are_eigenvectors(rng):
    field = WeylCoefficientField.constant(2, 1, rng.normal(size=4))
    op = map_from_coeffs(field)
    spectrum = map_spectrum(field)
    family = spectrum.family
    for flat in range(family.count):
        u = family.unitary_flat(flat)
        value = spectrum.eigenvalues.values[flat]
        assert np.max(np.abs(op.apply(u) - value * u)) < 1e-11


def test_projector_algebra(rng):
    field = WeylCoefficientField.constant(2, 1, rng.normal(size=4))
    spectrum = map_spectrum(field)
    family = spectrum.family
    projectors = [spectrum.projector(*family.index_pair(k))
                  for k in range(family.count)]
    total = sum(p.matrix for p in projectors)
    assert np.max(np.abs(total - np.eye(4))) < 1e-11
    for i, p in enumerate(projectors):
        for j, q in enumerate(projectors):
            product = (p @ q).matrix
            expected = p.matrix if i == j else 0.0
            assert np.max(np.abs(product - expected)) < 1e-11


def test_spectrum_matches_generic_diagonalization(rng):
    field = WeylCoefficientField.constant(3, 1, rng.normal(size=9))
    op = map_from_coeffs(field)
    dec = diagonalize(op)
    assert multiset_residual(dec.eigenvalues,
                             map_spectrum(field).eigenvalues.values) < 1e-9


# ---------------------------------------------------------------------------
# commutativity and convolution of coefficient fields
# ---------------------------------------------------------------------------

def test_maps_commute_and_compose_by_convolution(rng):
    a_vals = rng.normal(size=16) + 1j * rng.normal(size=16)
    b_vals = rng.normal(size=16) + 1j * rng.normal(size=16)
    field_a = WeylCoefficientField.constant(4, 1, a_vals)
    field_b = WeylCoefficientField.constant(4, 1, b_vals)
    op_a, op_b = map_from_coeffs(field_a), map_from_coeffs(field_b)
    assert np.max(np.abs((op_a @ op_b).matrix - (op_b @ op_a).matrix)) < 1e-11
    conv = convolve(LatticeField(4, 2, a_vals), LatticeField(4, 2, b_vals))
    op_conv = map_from_coeffs(WeylCoefficientField.constant(4, 1, conv.values))
    assert np.max(np.abs(compose(op_a, op_b).matrix - op_conv.matrix)) < 1e-11


# ---------------------------------------------------------------------------
# Lindblad structure
# ---------------------------------------------------------------------------

def test_lindblad_zero_field():
    field = WeylCoefficientField.constant(2, 1, np.zeros(4))
    dec = lindblad_decomposition(field)
    assert np.max(np.abs(dec.assemble().matrix)) < 1e-14


def test_lindblad_dephasing_single_jump():
    gamma = 0.7
    # a(0,1) = gamma pairs with the jump unitary u_{1,0} (phase operator)
    values = np.array([-gamma, gamma, 0.0, 0.0])
    field = WeylCoefficientField.constant(2, 1, values)
    dec = lindblad_decomposition(field)
    active = [(pos, r) for pos, r in enumerate(dec.rates) if abs(r) > 0]
    assert len(active) == 1
    pos, rate = active[0]
    assert abs(rate - gamma) < 1e-14
    assert np.allclose(dec.jump_operator(pos), np.diag([1.0, -1.0]))
    assert np.max(np.abs(dec.assemble().matrix
                         - map_from_coeffs(field).matrix)) < 1e-13
    assert dec.markovian


def test_lindblad_reconstruction_and_trace_annihilation(rng):
    field = WeylCoefficientField.constant(3, 1, generator_rates(rng, 3, 1))
    gen = map_from_coeffs(field)
    dec = lindblad_decomposition(field)
    assert np.max(np.abs(dec.assemble().matrix - gen.matrix)) < 1e-12
    ident = np.eye(3)
    assert np.max(np.abs(gen.apply(ident))) < 1e-12
    from comdyn.superop import dual
    assert np.max(np.abs(dual(gen).apply(ident))) < 1e-12


def test_lindblad_requires_zero_sum():
    field = WeylCoefficientField.constant(2, 1, [0.1, 0.5, 0.0, 0.0])
    with pytest.raises(NormalizationError):
        lindblad_decomposition(field)


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def test_evolve_initial_condition(rng):
    field = WeylCoefficientField.constant(2, 1, generator_rates(rng, 2, 1))
    out = evolve(field, 0.5, 0.5)
    assert np.max(np.abs(out.matrix - np.eye(4))) < 1e-13


def test_evolve_constant_matches_exponential(rng):
    field = WeylCoefficientField.constant(3, 1, generator_rates(rng, 3, 1))
    tau = 1.4
    closed = evolve(field, 0.2, 0.2 + tau)
    reference = oracle.expm(tau * map_from_coeffs(field).matrix)
    assert np.max(np.abs(closed.matrix - reference)) < 1e-9


def test_evolve_time_dependent_matches_ordered_product():
    base = np.array([0.0, 0.6, 0.3, 0.8])
    field = WeylCoefficientField(2, 1, tuple(
        Constant(0.0) if k == 0 else
        DampedTrig.sin(amplitude=0.3 * base[k], offset=base[k])
        for k in range(4)))
    # close the zero-sum constraint: a(0,0) = -(sum of the others)
    others = [field.coefficients[k] for k in range(1, 4)]
    total = others[0] + others[1] + others[2]
    field = WeylCoefficientField(2, 1, (-1.0 * total,) + tuple(others))
    closed = evolve(field, 0.0, 2.0, "markov")
    reference = oracle.ordered_exp(
        lambda u: map_from_coeffs(field, u).matrix, 0.0, 2.0, 4096)
    assert np.max(np.abs(closed.matrix - reference)) < 1e-7


def test_evolve_produces_cptp_unital(rng):
    field = WeylCoefficientField.constant(2, 2, generator_rates(rng, 2, 2))
    out = evolve(field, 0.0, 0.9)
    report = validate_channel(out)
    assert report.cp and report.tp and report.unital
    assert report.unital_residual < 1e-12


def test_evolve_rejects_invalid_rates():
    field = WeylCoefficientField.constant(2, 1, [0.5, -0.5, 0.0, 0.0])
    with pytest.raises(PreconditionFailedError):
        evolve(field, 0.0, 1.0)


def test_evolve_nonmarkov_homogeneous(rng):
    values = generator_rates(rng, 2, 1)
    field = WeylCoefficientField(2, 1, tuple(
        DampedTrig.exp(amplitude=v, decay=-0.7) for v in values))
    a = evolve(field, 0.25, 1.0, "nonmarkov")
    b = evolve(field, 1.25, 2.0, "nonmarkov")
    assert np.max(np.abs(a.matrix - b.matrix)) < 1e-12


# ---------------------------------------------------------------------------
# diagonal (population) dynamics
# ---------------------------------------------------------------------------

def test_diagonal_action_of_unit_field():
    values = np.zeros(4)
    values[0] = 1.0
    field = WeylCoefficientField.constant(2, 1, values)
    gen = diagonal_action(field)
    assert np.allclose(gen.rates(0.0).values, [1.0, 0.0])


def test_diagonal_action_reflects_row_sums():
    # mass at (m, n) = (1, 0) shifts populations down by one site
    values = np.zeros(9)
    values[3] = 1.0   # flat index of (m, n) = (1, 0) for d = 3
    field = WeylCoefficientField.constant(3, 1, values)
    gen = diagonal_action(field)
    assert np.allclose(gen.rates(0.0).values.real, [0.0, 0.0, 1.0])


def test_diagonal_states_evolve_classically(rng):
    d = 3
    field = WeylCoefficientField.constant(d, 1, generator_rates(rng, d, 1))
    tau = 0.9
    quantum = evolve(field, 0.0, tau)
    p0 = random_probability_values(rng, d)
    rho0 = np.diag(p0).astype(complex)
    diag_quantum = np.real(np.diag(quantum.apply(rho0)))
    pop_gen = diagonal_action(field)
    pop_kernel = propagate(pop_gen, 0.0, tau)
    classical_result = convolve(pop_kernel, LatticeField(d, 1, p0)).values.real
    assert np.max(np.abs(diag_quantum - classical_result)) < 1e-10


def test_diagonal_states_evolve_classically_time_dependent(rng):
    d = 2
    base = generator_rates(rng, d, 1)
    field = WeylCoefficientField(d, 1, tuple(
        DampedTrig.sin(amplitude=0.4 * v, offset=v) for v in base))
    tau = 1.3
    quantum = evolve(field, 0.0, tau)
    p0 = random_probability_values(rng, d)
    rho0 = np.diag(p0).astype(complex)
    diag_quantum = np.real(np.diag(quantum.apply(rho0)))
    pop_kernel = propagate(diagonal_action(field), 0.0, tau)
    classical_result = convolve(pop_kernel, LatticeField(d, 1, p0)).values.real
    assert np.max(np.abs(diag_quantum - classical_result)) < 1e-10


def test_literal_row_sum_disagrees_on_asymmetric_fields(rng):
    # documents why the reflected sum is the population generator
    d = 3
    values = generator_rates(rng, d, 1)
    field = WeylCoefficientField.constant(d, 1, values)
    tau = 0.8
    quantum = evolve(field, 0.0, tau)
    p0 = random_probability_values(rng, d)
    diag_quantum = np.real(np.diag(quantum.apply(np.diag(p0).astype(complex))))
    literal = values.reshape(d, d).sum(axis=1)
    literal_kernel = propagate(CirculantGenerator.constant(d, 1, literal), 0.0, tau)
    literal_result = convolve(literal_kernel, LatticeField(d, 1, p0)).values.real
    assert np.max(np.abs(diag_quantum - literal_result)) > 1e-4


def test_embedded_stochastic_matrix_acts_on_diagonal(rng):
    d = 3
    gen = CirculantGenerator.constant(d, 1, [-1.1, 0.7, 0.4])
    tau = 0.6
    kernel = propagate(gen, 0.0, tau)
    from comdyn.classical import circulant_from_field
    transition = circulant_from_field(kernel).real
    embedded = embed_stochastic_matrix(transition)
    p0 = random_probability_values(rng, d)
    rho_t = embedded.apply(np.diag(p0).astype(complex))
    assert np.max(np.abs(np.diag(rho_t).real - transition @ p0)) < 1e-12
    assert np.max(np.abs(rho_t - np.diag(np.diag(rho_t)))) < 1e-14
