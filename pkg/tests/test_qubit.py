from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg

from comdyn import oracle
from comdyn.errors import PreconditionFailedError
from comdyn.qubit import (E00, E11, IDENTITY2, SIGMA3, SIGMA_MINUS, SIGMA_PLUS,
                          QubitGeneratorSpec, build_generator, classify,
                          damping_basis, eigenvalue_integrals,
                          gamma_eigenvalue, propagate, spectral_projector,
                          v_conjugation)
from comdyn.superop import validate_channel
from comdyn.timefn import Constant, DampedTrig

from conftest import multiset_residual, random_matrix


# ---------------------------------------------------------------------------
# damping basis
# ---------------------------------------------------------------------------

def test_damping_basis_exact_rational_biorthogonality():
    for mu in (Fraction(0), Fraction(1), Fraction(1, 3), Fraction(7, 11)):
        g, h = damping_basis(mu)
        for a in range(4):
            for b in range(4):
                # entries are rational, so the adjoint is the plain transpose
                value = sum(g[a][j, i] * h[b][j, i]
                            for i in range(2) for j in range(2))
                assert value == (1 if a == b else 0)


def test_damping_basis_floats():
    g, h = damping_basis(0.3)
    gram = np.array([[np.vdot(g[a], h[b]) for b in range(4)] for a in range(4)])
    assert np.max(np.abs(gram - np.eye(4))) < 1e-15


def test_conventions():
    assert np.array_equal(SIGMA_PLUS @ SIGMA_MINUS, E11)   # pi_1
    assert np.array_equal(SIGMA_MINUS @ SIGMA_PLUS, E00)   # pi_0
    assert np.array_equal(SIGMA3, E11 - E00)


# ---------------------------------------------------------------------------
# the generator
# ---------------------------------------------------------------------------

def test_zero_spec_gives_zero_generator():
    spec = QubitGeneratorSpec.constant()
    assert np.max(np.abs(build_generator(spec).matrix)) == 0.0


def test_balanced_pumping_spectrum():
    spec = QubitGeneratorSpec.constant(gamma=1.0, mu=0.5)
    eigs = np.linalg.eigvals(build_generator(spec).matrix)
    assert multiset_residual(eigs, [0.0, -0.5, -0.5, -1.0]) < 1e-12


def test_invariant_state_is_killed(rng):
    spec = QubitGeneratorSpec.constant(epsilon=0.4, gamma=1.3,
                                       c=((0.6, 0.25), (0.25, 0.9)), mu=0.37)
    g, _ = damping_basis(spec.mu)
    gen = build_generator(spec)
    assert np.max(np.abs(gen.apply(g[0]))) < 1e-15


def test_mode_actions():
    spec = QubitGeneratorSpec.constant(epsilon=0.8, gamma=1.1,
                                       c=((0.3, 0.1), (0.1, 0.5)), mu=0.6)
    gen = build_generator(spec)
    big_gamma = gamma_eigenvalue(spec)
    assert np.max(np.abs(gen.apply(SIGMA_PLUS) - big_gamma * SIGMA_PLUS)) < 1e-13
    assert np.max(np.abs(gen.apply(SIGMA_MINUS)
                         - np.conj(big_gamma) * SIGMA_MINUS)) < 1e-13
    assert np.max(np.abs(gen.apply(SIGMA3) + 1.1 * SIGMA3)) < 1e-13


def test_generators_commute_at_different_times():
    spec = QubitGeneratorSpec(
        epsilon=DampedTrig.cos(amplitude=0.5),
        gamma=DampedTrig.sin(amplitude=0.5, offset=1.0),
        c=((Constant(0.2), Constant(0.1)), (Constant(0.1), Constant(0.4))),
        mu=0.25)
    for t, s in ((0.0, 1.0), (0.3, 2.1), (1.7, 0.9)):
        a = build_generator(spec, t).matrix
        b = build_generator(spec, s).matrix
        assert np.linalg.norm(a @ b - b @ a, 2) < 1e-11


def test_hermitian_c_enforced():
    spec = QubitGeneratorSpec.constant(c=((0.0, 0.5), (0.2, 0.0)))
    with pytest.raises(ValueError, match="Hermitian"):
        build_generator(spec)


def test_mu_range_enforced():
    with pytest.raises(ValueError, match="mixing"):
        QubitGeneratorSpec.constant(mu=1.5)


# ---------------------------------------------------------------------------
# the coherence eigenvalue
# ---------------------------------------------------------------------------

def test_gamma_eigenvalue_pure_decay():
    spec = QubitGeneratorSpec.constant(gamma=1.0, mu=0.5)
    assert abs(gamma_eigenvalue(spec) + 0.5) < 1e-14


def test_gamma_eigenvalue_pure_rotation():
    spec = QubitGeneratorSpec.constant(epsilon=1.0, mu=0.5)
    assert abs(gamma_eigenvalue(spec) + 1.0j) < 1e-14


def test_gamma_eigenvalue_dephasing_free_direction():
    spec = QubitGeneratorSpec.constant(c=((1.0, 1.0), (1.0, 1.0)), mu=0.5)
    assert abs(gamma_eigenvalue(spec)) < 1e-14


def test_gamma_eigenvalue_matches_spectrum():
    spec = QubitGeneratorSpec.constant(epsilon=0.7, gamma=0.9,
                                       c=((0.4, 0.15), (0.15, 0.6)), mu=0.3)
    gen = build_generator(spec)
    big_gamma = gamma_eigenvalue(spec)
    expected = [0.0, big_gamma, np.conj(big_gamma), -0.9]
    assert multiset_residual(np.linalg.eigvals(gen.matrix), expected) < 1e-10


def test_gamma_eigenvalue_complex_offdiagonal():
    # complex c10: the value is read off the generator, and still matches
    # both the sigma+ eigenvalue and the closed expression
    c10 = 0.2 + 0.3j
    spec = QubitGeneratorSpec.constant(
        epsilon=0.4, gamma=0.8, c=((0.5, np.conj(c10)), (c10, 0.7)), mu=0.5)
    gen = build_generator(spec)
    value = gamma_eigenvalue(spec)
    assert np.max(np.abs(gen.apply(SIGMA_PLUS) - value * SIGMA_PLUS)) < 1e-12
    literal = -0.5 * (0.8 + 0.5 + 0.7 - 2 * c10 + 2j * 0.4)
    assert abs(value - literal) < 1e-12


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def test_propagate_initial_condition():
    spec = QubitGeneratorSpec.constant(gamma=1.0, mu=0.2)
    out = propagate(spec, 0.6, 0.6)
    assert np.max(np.abs(out.matrix - np.eye(4))) < 1e-14


def test_propagate_constant_matches_exponential():
    spec = QubitGeneratorSpec.constant(epsilon=0.5, gamma=1.2,
                                       c=((0.3, 0.1), (0.1, 0.6)), mu=0.4)
    tau = 1.7
    closed = propagate(spec, 0.2, 0.2 + tau)
    reference = scipy.linalg.expm(tau * build_generator(spec).matrix)
    assert np.max(np.abs(closed.matrix - reference)) < 1e-10


def test_propagate_time_dependent_matches_ordered_product():
    spec = QubitGeneratorSpec(
        epsilon=Constant(0.0), gamma=DampedTrig.sin(offset=1.0),
        c=((Constant(0.0), Constant(0.0)), (Constant(0.0), Constant(0.0))),
        mu=0.4)
    closed = propagate(spec, 0.0, 2.0)
    reference = oracle.ordered_exp(
        lambda u: build_generator(spec, u).matrix, 0.0, 2.0, 4096)
    assert np.max(np.abs(closed.matrix - reference)) < 1e-7


def test_propagate_fixes_invariant_state():
    spec = QubitGeneratorSpec.constant(epsilon=0.3, gamma=0.9,
                                       c=((0.2, 0.05), (0.05, 0.4)), mu=0.7)
    out = propagate(spec, 0.0, 2.5)
    g, _ = damping_basis(spec.mu)
    assert np.max(np.abs(out.apply(g[0]) - g[0])) < 1e-10


def test_propagate_hermiticity_and_trace(rng):
    spec = QubitGeneratorSpec.constant(epsilon=0.4, gamma=1.0,
                                       c=((0.3, 0.0), (0.0, 0.3)), mu=0.5)
    out = propagate(spec, 0.0, 1.3)
    for _ in range(10):
        x = random_matrix(rng, 2)
        rho = x @ x.conj().T
        rho /= np.trace(rho)
        image = out.apply(rho)
        assert np.max(np.abs(image - image.conj().T)) < 1e-12
        assert abs(np.trace(image) - 1.0) < 1e-12
    assert validate_channel(out).cptp


def test_propagate_coherence_and_population_factors():
    spec = QubitGeneratorSpec.constant(epsilon=0.6, gamma=1.1,
                                       c=((0.5, 0.2), (0.2, 0.3)), mu=0.35)
    tau = 0.9
    out = propagate(spec, 0.0, tau)
    integrals = eigenvalue_integrals(spec, 0.0, tau)
    # coherences multiply by exp(int Gamma)
    assert np.max(np.abs(out.apply(SIGMA_PLUS)
                         - np.exp(integrals[1]) * SIGMA_PLUS)) < 1e-12
    # populations relax toward the invariant state at rate exp(-int gamma):
    # rho0 decomposes as tr(rho0) omega + tr(sigma rho0) sigma_3 exactly
    g, _ = damping_basis(spec.mu)
    rho0 = E11
    image = out.apply(rho0)
    weight = np.exp(integrals[3])
    sigma = (1 - spec.mu) * E11 - spec.mu * E00
    expected = g[0] * np.trace(rho0) + weight * np.trace(sigma @ rho0) * SIGMA3
    assert np.max(np.abs(image - expected)) < 1e-12


def test_propagate_markov_precondition():
    spec = QubitGeneratorSpec(
        epsilon=Constant(0.0), gamma=DampedTrig.cos(),
        c=((Constant(0.0), Constant(0.0)), (Constant(0.0), Constant(0.0))),
        mu=0.5)
    with pytest.raises(PreconditionFailedError) as excinfo:
        propagate(spec, 0.0, 3.0, "markov")
    assert excinfo.value.witness[0] == "gamma"
    # integrated conditions hold on (0, pi), so the homogeneous mode works
    out = propagate(spec, 0.0, 3.0, "nonmarkov")
    assert validate_channel(out).cptp


def test_propagate_nonmarkov_precondition():
    spec = QubitGeneratorSpec.constant(gamma=-0.5, mu=0.5)
    with pytest.raises(PreconditionFailedError):
        propagate(spec, 0.0, 1.0, "nonmarkov")


# ---------------------------------------------------------------------------
# the diagonalizing map V
# ---------------------------------------------------------------------------

def test_v_maps_the_reference_basis():
    mu = 0.3
    vc = v_conjugation(mu)
    g, h = damping_basis(mu)
    assert np.max(np.abs(vc.v.apply(E00) - SIGMA3)) < 1e-14
    assert np.max(np.abs(vc.v.apply(E11) - g[0])) < 1e-14
    assert np.max(np.abs(vc.v.apply(SIGMA_PLUS) - SIGMA_PLUS)) < 1e-14
    assert np.max(np.abs(vc.v_inverse_dual.apply(E00) - h[3])) < 1e-14
    assert np.max(np.abs(vc.v_inverse_dual.apply(E11) - IDENTITY2)) < 1e-14


def test_v_boundary_mu_zero():
    vc = v_conjugation(0.0)
    # omega collapses onto the ground projector
    assert np.max(np.abs(vc.v.apply(E11) - E00)) < 1e-15


def test_v_inverse_identity():
    for mu in (0.0, 0.3, 1.0):
        vc = v_conjugation(mu)
        assert np.max(np.abs((vc.v @ vc.v_inverse).matrix - np.eye(4))) < 1e-13
        assert np.max(np.abs((vc.v_inverse @ vc.v).matrix - np.eye(4))) < 1e-13


def test_v_diagonalizes_the_generator():
    spec = QubitGeneratorSpec.constant(epsilon=0.9, gamma=1.4,
                                       c=((0.6, 0.2), (0.2, 0.8)), mu=0.65)
    gen = build_generator(spec)
    big_gamma = gamma_eigenvalue(spec)
    modes = [0.0, big_gamma, np.conj(big_gamma), -1.4]
    vc = v_conjugation(spec.mu)
    total = sum(lam * (vc.v @ spectral_projector(i) @ vc.v_inverse).matrix
                for i, lam in enumerate(modes))
    assert np.max(np.abs(total - gen.matrix)) < 1e-10


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def test_classify_constant_markovian():
    spec = QubitGeneratorSpec.constant(gamma=1.0, c=((0.2, 0.0), (0.0, 0.2)),
                                       mu=0.5)
    report = classify(spec, 5.0)
    assert report.markovian and report.nonmarkovian_valid


def test_classify_cosine_gamma():
    spec = QubitGeneratorSpec(
        epsilon=Constant(0.0), gamma=DampedTrig.cos(),
        c=((Constant(0.0), Constant(0.0)), (Constant(0.0), Constant(0.0))),
        mu=0.5)
    horizon = np.pi - 1e-9
    report = classify(spec, horizon)
    assert not report.markovian
    assert report.nonmarkovian_valid
    time, condition = report.first_markov_violation
    assert condition == "gamma pointwise"
    assert abs(time - np.pi / 2) < horizon / 200 + 1e-12


def test_classify_negative_gamma_rejected_in_both_senses():
    spec = QubitGeneratorSpec.constant(gamma=-1.0, mu=0.5)
    report = classify(spec, 1.0)
    assert not report.markovian
    assert not report.nonmarkovian_valid
