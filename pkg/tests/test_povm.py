import numpy as np
import pytest
from hypothesis import given, strategies as st

from mifisher.errors import DimMismatch, InvalidPovm, MissingConditional
from mifisher.matcore import PAULI_Y, BipartiteDims, max_abs
from mifisher.povm import (
    AdaptivePovm,
    Povm,
    PovmClass,
    ProjectiveParam,
    adaptive_embed,
    computational_basis,
    embed_local,
    local_as_product,
    pauli_basis,
    product_as_adaptive,
    product_povm,
    projective_from_params,
    require_valid,
    sample_params,
    tetrahedral_povm,
    validate,
)

from conftest import seeds

QUBITS = BipartiteDims(2, 2)


def test_computational_basis_passes_with_tiny_residuals():
    r = validate(computational_basis(2))
    assert r.passed
    assert max(r.positivity_residual, r.completeness_residual, r.hermiticity_residual) <= 1e-15


def test_incomplete_povm_fails():
    r = validate(Povm((np.diag([1.0, 0.0]), np.diag([0.0, 0.5]))))
    assert not r.passed and "completeness" in r.failures
    with pytest.raises(InvalidPovm):
        require_valid(Povm((np.diag([1.0, 0.0]), np.diag([0.0, 0.5]))))


def test_negative_element_fails():
    r = validate(Povm((np.diag([1.5, 0.0]), np.diag([-0.5, 1.0]))))
    assert "positivity" in r.failures


def test_tetrahedral_povm_passes():
    assert validate(tetrahedral_povm()).passed


def test_class_tags_cover_six_classes():
    assert [c.value for c in PovmClass] == ["LocalA", "LocalB", "Product", "AdaptiveAtoB", "AdaptiveBtoA", "Global"]


def test_embed_local_z_on_a():
    m = embed_local(pauli_basis("z"), QUBITS, "a")
    assert max_abs(m.elements[0] - np.diag([1, 1, 0, 0])) <= 1e-15
    assert validate(m).passed
    with pytest.raises(DimMismatch):
        embed_local(computational_basis(3), QUBITS, "a")


def test_product_of_z_bases_is_computational():
    m = product_povm(pauli_basis("z"), pauli_basis("z"))
    for k in range(4):
        assert max_abs(m.elements[k] - np.diag(np.eye(4)[k])) <= 1e-15
    assert m.labels == (0, 1, 2, 3)


def test_product_label_is_row_major():
    m = product_povm(computational_basis(2), computational_basis(3))
    # element (i, j) = |i><i| (x) |j><j| sits at i * 3 + j
    assert max_abs(m.elements[1 * 3 + 2] - np.diag(np.eye(6)[5])) <= 1e-15


@given(seeds)
def test_adaptive_with_constant_conditionals_is_product(seed):
    r = np.random.default_rng(seed)
    ma = projective_from_params(ProjectiveParam(2, sample_params(2, r)))
    mb = projective_from_params(ProjectiveParam(2, sample_params(2, r)))
    joint = adaptive_embed(product_as_adaptive(ma, mb), QUBITS)
    prod = product_povm(ma, mb)
    assert all(max_abs(x - y) <= 1e-12 for x, y in zip(joint.elements, prod.elements))
    flipped = adaptive_embed(product_as_adaptive(ma, mb, "b->a"), QUBITS, "b->a")
    # b measured first: outcome order is (j, i), elements still M_i (x) N_j
    assert max_abs(sum(flipped.elements) - np.eye(4)) <= 1e-12


@given(seeds)
def test_adaptive_random_projective_parts_complete(seed):
    r = np.random.default_rng(seed)
    first = projective_from_params(ProjectiveParam(2, sample_params(2, r)))
    conds = tuple(projective_from_params(ProjectiveParam(3, sample_params(3, r))) for _ in range(2))
    joint = adaptive_embed(AdaptivePovm(first, conds), BipartiteDims(2, 3))
    assert validate(joint).completeness_residual <= 1e-12


def test_adaptive_missing_conditional():
    with pytest.raises(MissingConditional):
        adaptive_embed(AdaptivePovm(pauli_basis("x"), (pauli_basis("z"),)), QUBITS)


def test_zero_params_give_computational_basis():
    m = projective_from_params(ProjectiveParam(3, np.zeros(9)))
    for k in range(3):
        assert max_abs(m.elements[k] - np.diag(np.eye(3)[k])) <= 1e-15


def test_quarter_pi_y_generator_gives_x_basis():
    # H = (pi/4) Y: diagonal 0, upper entry (0, -pi/4 i) -> params (0, 0, 0, -pi/4)
    p = ProjectiveParam(2, [0.0, 0.0, 0.0, -np.pi / 4])
    x = pauli_basis("x")
    m = projective_from_params(p)
    # same projectors; exp(i pi/4 Y) lists |-> before |+>
    assert max_abs(m.elements[0] - x.elements[1]) <= 1e-12
    assert max_abs(m.elements[1] - x.elements[0]) <= 1e-12
    from mifisher.povm import params_to_hermitian

    assert max_abs(params_to_hermitian(2, p.params) - np.pi / 4 * PAULI_Y) <= 1e-15


@given(seeds, st.integers(2, 4))
def test_projective_always_valid(seed, dim):
    m = projective_from_params(ProjectiveParam(dim, sample_params(dim, np.random.default_rng(seed))))
    assert validate(m).passed
    assert len(m) == dim
    assert all(abs(np.trace(e) - 1) <= 1e-12 for e in m.elements)


def test_projective_wrong_length():
    with pytest.raises(DimMismatch):
        ProjectiveParam(2, np.zeros(3))


@given(seeds)
def test_class_inclusions(seed):
    r = np.random.default_rng(seed)
    ma = projective_from_params(ProjectiveParam(2, sample_params(2, r)))
    mb = projective_from_params(ProjectiveParam(2, sample_params(2, r)))
    # local into product: pairing with the trivial measurement reproduces embed_local
    la = local_as_product(ma, QUBITS, "a")
    assert validate(la).passed
    assert all(max_abs(x - y) <= 1e-12 for x, y in zip(la.elements, embed_local(ma, QUBITS, "a").elements))
    lb = local_as_product(mb, QUBITS, "b")
    assert all(max_abs(x - y) <= 1e-12 for x, y in zip(lb.elements, embed_local(mb, QUBITS, "b").elements))
    # product into both adaptive directions
    for direction in ("a->b", "b->a"):
        assert validate(adaptive_embed(product_as_adaptive(ma, mb, direction), QUBITS, direction)).passed
