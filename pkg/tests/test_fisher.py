import numpy as np
import pytest
from hypothesis import given, strategies as st

from mifisher.errors import NotNormalized, NotTraceless, SingularOutcome
from mifisher.fisher import (
    adaptive_fi_explicit,
    adaptive_fi_given_first,
    check_extension_invariance,
    classical_fi,
    cq_family,
    cq_state,
    family_qfi,
    fi_marginal,
    outcome_probabilities,
    qfi,
    qfi_pure,
    random_povm,
    sld,
    sld_basis_measurement,
    sld_eigenbasis,
)
from mifisher.matcore import BipartiteDims, max_abs, projector
from mifisher.povm import (
    AdaptivePovm,
    basis_povm,
    computational_basis,
    pauli_basis,
    product_povm,
    trivial_povm,
)
from mifisher.states import (
    eval_derivative,
    generator_family,
    grid_family,
    make_builtin,
    product_family,
    random_density_matrix,
    random_generator_family,
    random_hermitian,
)

from conftest import seeds

QUBITS = BipartiteDims(2, 2)


# ------------------------------------------------------------------- SLD


def test_sld_diagonal_example():
    r = sld(np.diag([0.25, 0.75]), np.diag([1.0, -1.0]))
    assert max_abs(r.sld - np.diag([4.0, -4.0 / 3.0])) <= 1e-12
    assert abs(r.qfi - 16.0 / 3.0) <= 1e-12


def test_sld_zero_derivative():
    r = sld(np.diag([0.3, 0.7]), np.zeros((2, 2)))
    assert max_abs(r.sld) == 0.0 and r.qfi == 0.0


def test_sld_requires_traceless():
    with pytest.raises(NotTraceless):
        sld(np.diag([0.5, 0.5]), np.eye(2))


@given(seeds, st.integers(2, 4), st.one_of(st.none(), st.integers(1, 3)))
def test_sld_invariants(seed, dim, rank):
    r = np.random.default_rng(seed)
    rank = None if rank is None else min(rank, dim)
    f = random_generator_family(dim, r, rank=rank)
    rho, drho = f.matrix(0.3), eval_derivative(f, 0.3)
    s = sld(rho, drho)
    # reproduces the derivative on the support of rho
    p = s.eigenvectors[:, s.eigenvalues > 1e-10]
    proj = p @ p.conj().T
    lhs = 0.5 * (s.sld @ rho + rho @ s.sld)
    assert max_abs(proj @ (lhs - drho) @ proj) <= 1e-7
    assert abs(np.trace(rho @ s.sld @ s.sld).real - s.qfi) <= 1e-9


@pytest.mark.parametrize("theta", [0.0, 0.4, np.pi / 3, 2.5])
def test_bell_phase_qfi_is_one(theta):
    f = make_builtin("bell_phase")
    assert abs(family_qfi(f, theta).qfi - 1.0) <= 1e-9
    assert abs(qfi_pure(f.ket(theta), f.dket(theta)) - 1.0) <= 1e-12


def test_qfi_pure_examples():
    t = 0.8
    psi = np.array([1, np.exp(1j * t)]) / np.sqrt(2)
    dpsi = np.array([0, 1j * np.exp(1j * t)]) / np.sqrt(2)
    assert abs(qfi_pure(psi, dpsi) - 1.0) <= 1e-12
    assert qfi_pure(np.array([1.0, 0.0]), np.zeros(2)) == 0.0
    f = make_builtin("cossin")
    assert abs(qfi_pure(f.ket(0.7), f.dket(0.7)) - 1.0) <= 1e-12
    with pytest.raises(NotNormalized):
        qfi_pure(np.array([1.0, 1.0]), np.zeros(2))


@given(seeds)
def test_qfi_pure_agrees_with_sld(seed):
    r = np.random.default_rng(seed)
    f = random_generator_family(3, r, rank=1)
    rho = f.matrix(0.2)
    vals, vecs = np.linalg.eigh(rho)
    psi = vecs[:, -1]
    g = f.payload["generator"]
    dpsi = -1j * g @ psi
    assert abs(qfi_pure(psi, dpsi) - qfi(rho, eval_derivative(f, 0.2))) <= 1e-7


# ------------------------------------------------------------ classical FI


def test_cc_bernoulli_computational_product():
    f = make_builtin("cc_bernoulli")
    m = product_povm(computational_basis(2), computational_basis(2))
    assert abs(classical_fi(f.matrix(0.5), eval_derivative(f, 0.5), m) - 4.0) <= 1e-12


def test_constant_probabilities_give_zero():
    f = generator_family(np.diag([0.2, 0.8]), np.diag([1.0, -1.0]))
    assert classical_fi(f.matrix(0.4), eval_derivative(f, 0.4), computational_basis(2)) <= 1e-15


def test_bell_phase_xx_projectors():
    f = make_builtin("bell_phase")
    m = product_povm(pauli_basis("x"), pauli_basis("x"))
    assert abs(classical_fi(f.matrix(np.pi / 3), eval_derivative(f, np.pi / 3), m) - 1.0) <= 1e-12


def test_singular_outcome_raises():
    ts = [0.0, 0.1, 0.2]
    f = grid_family(ts, [np.diag([0.1, 0.9]), np.diag([0.0, 1.0]), np.diag([0.3, 0.7])])
    with pytest.raises(SingularOutcome):
        classical_fi(f.matrix(0.1), eval_derivative(f, 0.1), computational_basis(2))


def test_vanishing_outcome_with_vanishing_derivative_is_dropped():
    rho = np.diag([1.0, 0.0]).astype(complex)
    assert classical_fi(rho, np.zeros((2, 2)), computational_basis(2)) == 0.0


@given(seeds, st.integers(2, 3))
def test_braunstein_caves_and_attainability(seed, dim):
    r = np.random.default_rng(seed)
    f = random_generator_family(dim, r)
    rho, drho = f.matrix(0.5), eval_derivative(f, 0.5)
    s = sld(rho, drho)
    for _ in range(10):
        m = random_povm(dim, int(r.integers(2, 6)), r)
        assert classical_fi(rho, drho, m) <= s.qfi + 1e-7
    assert abs(classical_fi(rho, drho, sld_basis_measurement(s)) - s.qfi) <= 1e-7


def test_sld_basis_of_diagonal_family_is_computational():
    rho, drho = np.diag([0.3, 0.7]), np.diag([1.0, -1.0])
    s = sld(rho, drho)
    # eigenvalues ascend, so |1> (SLD eigenvalue -10/7) comes first
    assert max_abs(np.abs(sld_eigenbasis(s)) - np.eye(2)[:, ::-1]) <= 1e-12
    assert abs(classical_fi(rho, drho, sld_basis_measurement(s)) - s.qfi) <= 1e-9


def test_zero_derivative_any_basis_zero():
    s = sld(np.diag([0.3, 0.7]), np.zeros((2, 2)))
    assert classical_fi(np.diag([0.3, 0.7]), np.zeros((2, 2)), sld_basis_measurement(s)) == 0.0


@given(seeds)
def test_convexity_at_fixed_povm(seed):
    r = np.random.default_rng(seed)
    d = 3
    rho, sigma = random_density_matrix(d, r), random_density_matrix(d, r)
    drho, dsigma = random_hermitian(d, r, 0.1), random_hermitian(d, r, 0.1)
    drho -= np.trace(drho) / d * np.eye(d)
    dsigma -= np.trace(dsigma) / d * np.eye(d)
    m = random_povm(d, 4, r)
    fr, fs = classical_fi(rho, drho, m), classical_fi(sigma, dsigma, m)
    for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
        mix = classical_fi(lam * rho + (1 - lam) * sigma, lam * drho + (1 - lam) * dsigma, m)
        assert mix <= lam * fr + (1 - lam) * fs + 1e-8


@given(seeds)
def test_global_qfi_unitary_invariance(seed):
    r = np.random.default_rng(seed)
    f = random_generator_family(QUBITS, r)
    u = np.linalg.qr(r.normal(size=(4, 4)) + 1j * r.normal(size=(4, 4)))[0]
    rho, drho = f.matrix(0.6), eval_derivative(f, 0.6)
    assert abs(qfi(u @ rho @ u.conj().T, u @ drho @ u.conj().T) - qfi(rho, drho)) <= 1e-8


@given(seeds)
def test_additivity_on_products(seed):
    r = np.random.default_rng(seed)
    fa, fb = random_generator_family(2, r), random_generator_family(2, r)
    f = product_family(fa, fb)
    total = family_qfi(f, 0.3).qfi
    assert abs(total - family_qfi(fa, 0.3).qfi - family_qfi(fb, 0.3).qfi) <= 1e-7


def test_super_and_subadditivity_instances():
    b = make_builtin("bell_phase")
    assert family_qfi(b, 1.0).qfi > fi_marginal(b, 1.0, party="a") + fi_marginal(b, 1.0, party="b") + 0.5
    c = make_builtin("cossin")
    assert family_qfi(c, 1.0).qfi < fi_marginal(c, 1.0, party="a") + fi_marginal(c, 1.0, party="b") - 0.5


# ----------------------------------------------------------------- marginals


@pytest.mark.parametrize(
    "name,fa,fb",
    [("bell_phase", 0.0, 0.0), ("cossin", 1.0, 1.0), ("plus_phase_times_zero", 1.0, 0.0)],
)
def test_marginal_values(name, fa, fb):
    f = make_builtin(name)
    assert abs(fi_marginal(f, 0.7, party="a") - fa) <= 1e-9
    assert abs(fi_marginal(f, 0.7, party="b") - fb) <= 1e-9


# ----------------------------------------------------------------- CQ states


def test_cq_cc_bernoulli_z():
    s = cq_state(make_builtin("cc_bernoulli"), 0.3, pauli_basis("z"))
    assert np.allclose(s.probs, [0.3, 0.7], atol=1e-15)
    assert max_abs(s.conditionals[0].mat - np.diag([1, 0])) <= 1e-15
    assert max_abs(s.conditionals[1].mat - np.diag([0, 1])) <= 1e-15


def test_cq_bell_phase_x():
    t = 0.9
    s = cq_state(make_builtin("bell_phase"), t, pauli_basis("x"))
    assert np.allclose(s.probs, [0.5, 0.5], atol=1e-15)
    for c, sign in zip(s.conditionals, (1, -1)):
        want = projector(np.array([1, sign * np.exp(1j * t)]) / np.sqrt(2))
        assert max_abs(c.mat - want) <= 1e-12


def test_cq_product_state_conditionals_equal_marginal(rng):
    sa, sb = random_density_matrix(2, rng), random_density_matrix(3, rng)
    f = generator_family(np.kron(sa, sb), np.zeros((6, 6)), BipartiteDims(2, 3))
    s = cq_state(f, 0.0, random_povm(2, 3, rng))
    for c in s.conditionals:
        assert max_abs(c.mat - sb) <= 1e-12
    assert abs(sum(s.probs) - 1) <= 1e-9


def test_cq_excludes_zero_probability_outcomes():
    s = cq_state(make_builtin("plus_phase_times_zero"), 0.3, pauli_basis("z"), party="b")
    assert s.excluded == (False, True)
    assert s.conditionals[1] is None


# ------------------------------------------------------------------ adaptive


def _bell_x_sld_adaptive(theta):
    f = make_builtin("bell_phase")
    cq = cq_state(f, theta, pauli_basis("x"))
    conds = []
    for sign in (1, -1):
        psi = np.array([1, sign * np.exp(1j * theta)]) / np.sqrt(2)
        dpsi = np.array([0, sign * 1j * np.exp(1j * theta)]) / np.sqrt(2)
        rho = projector(psi)
        drho = np.outer(dpsi, psi.conj()) + np.outer(psi, dpsi.conj())
        conds.append(basis_povm(sld_eigenbasis(sld(rho, drho))))
    assert len(cq.conditionals) == 2
    return f, AdaptivePovm(pauli_basis("x"), tuple(conds))


def test_adaptive_given_first_bell_x():
    assert abs(adaptive_fi_given_first(make_builtin("bell_phase"), 0.5, pauli_basis("x")) - 1.0) <= 1e-9


def test_adaptive_given_first_on_products(rng):
    fa, fb = random_generator_family(2, rng), random_generator_family(2, rng)
    f = product_family(fa, fb)
    first = sld_basis_measurement(family_qfi(fa, 0.4))
    want = family_qfi(fa, 0.4).qfi + family_qfi(fb, 0.4).qfi
    assert abs(adaptive_fi_given_first(f, 0.4, first) - want) <= 1e-7


def test_adaptive_given_first_constant_family(rng):
    f = generator_family(random_density_matrix(4, rng), np.zeros((4, 4)), QUBITS)
    assert adaptive_fi_given_first(f, 0.1, pauli_basis("x")) == 0.0


def test_adaptive_explicit_bell():
    f, ap = _bell_x_sld_adaptive(0.5)
    r = adaptive_fi_explicit(f, 0.5, ap)
    assert abs(r.value - 1.0) <= 1e-9
    assert r.residual <= 1e-7


def test_adaptive_explicit_constant_conditionals_is_product(rng):
    f = random_generator_family(QUBITS, rng)
    ma, mb = random_povm(2, 2, rng), random_povm(2, 3, rng)
    r = adaptive_fi_explicit(f, 0.2, AdaptivePovm(ma, (mb, mb)))
    direct = classical_fi(f.matrix(0.2), eval_derivative(f, 0.2), product_povm(ma, mb))
    assert abs(r.value - direct) <= 1e-10


def test_adaptive_explicit_cc_bernoulli():
    f = make_builtin("cc_bernoulli")
    r = adaptive_fi_explicit(f, 0.3, AdaptivePovm(pauli_basis("z"), (pauli_basis("z"), pauli_basis("z"))))
    assert abs(r.value - 1 / 0.21) <= 1e-9
    assert abs(r.second_term) <= 1e-12


@given(seeds)
def test_conditional_probability_derivatives_sum_to_zero(seed):
    r = np.random.default_rng(seed)
    f = random_generator_family(BipartiteDims(2, 3), r)
    ap = AdaptivePovm(random_povm(2, 3, r), tuple(random_povm(3, 2, r) for _ in range(3)))
    res = adaptive_fi_explicit(f, 0.7, ap)
    assert all(abs(s) <= 1e-8 for s in res.conditional_dp_sums)
    assert res.residual <= 1e-6


@given(seeds)
def test_adaptive_b_to_a_matches_swapped_family(seed):
    r = np.random.default_rng(seed)
    f = random_generator_family(QUBITS, r)
    first = random_povm(2, 2, r)
    swap = np.eye(4)[[0, 2, 1, 3]]
    g = generator_family(swap @ f.matrix(0.0) @ swap, swap @ f.payload["generator"] @ swap, QUBITS)
    ba = adaptive_fi_given_first(f, 0.4, first, direction="b->a")
    ab = adaptive_fi_given_first(g, 0.4, first, direction="a->b")
    assert abs(ba - ab) <= 1e-9


@given(seeds)
def test_cq_family_sld_matches_adaptive_decomposition(seed):
    r = np.random.default_rng(seed)
    f = random_generator_family(QUBITS, r)
    first = random_povm(2, 2, r)
    via_sld = family_qfi(cq_family(f, first), 0.5).qfi
    assert abs(via_sld - adaptive_fi_given_first(f, 0.5, first)) <= 1e-6


# ----------------------------------------------------------------- extension


@given(seeds, st.integers(1, 3))
def test_extension_invariance(seed, k):
    r = np.random.default_rng(seed)
    f = random_generator_family(QUBITS, r)
    assert check_extension_invariance(f, 0.3, random_povm(2, 3, r), extension_dim=k, seed=seed) <= 1e-9


def test_extension_invariance_examples():
    assert check_extension_invariance(make_builtin("bell_phase"), 0.4, pauli_basis("z")) <= 1e-9
    f = make_builtin("cc_bernoulli")
    assert check_extension_invariance(f, 0.3, pauli_basis("z")) <= 1e-9
    rho, drho = f.matrix(0.3), eval_derivative(f, 0.3)
    from mifisher.povm import embed_local

    assert abs(classical_fi(rho, drho, embed_local(pauli_basis("z"), QUBITS, "a")) - 1 / 0.21) <= 1e-9


def test_outcome_probabilities_sum_to_one(rng):
    rho = random_density_matrix(3, rng)
    assert abs(outcome_probabilities(rho, random_povm(3, 5, rng)).sum() - 1) <= 1e-12
    assert outcome_probabilities(rho, trivial_povm(3))[0] == pytest.approx(1.0)
