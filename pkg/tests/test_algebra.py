import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otoclab import algebra as al


def test_basis_dimension_formula():
    for N in range(1, 201):
        basis = al.build_basis(N)
        assert basis.dim == (N + 1) * (N + 2) // 2


def test_basis_known_sizes():
    assert al.build_basis(2).dim == 6
    assert al.build_basis(60).dim == 1891
    assert al.build_basis(100).dim == 5151


def test_basis_states_valid():
    basis = al.build_basis(7)
    seen = set()
    for s in basis.states:
        assert min(s) >= 0 and sum(s) == 7
        assert s not in seen
        seen.add(s)


def test_basis_rejects_bad_n():
    with pytest.raises(al.InvalidParameterError):
        al.build_basis(0)
    with pytest.raises(al.InvalidParameterError):
        al.build_basis(-3)


def test_basis_ordering_lexicographic_ntau_l():
    basis = al.build_basis(2)
    keys = list(zip(basis.n_tau, basis.l))
    assert keys == sorted(keys)
    # (n_sigma, n_plus, n_minus) for N=2 in (n_tau, l) order
    assert basis.states == (
        (2, 0, 0), (1, 0, 1), (1, 1, 0), (0, 0, 2), (0, 1, 1), (0, 2, 0))


def test_parity_labels_partition_matches_block_dims():
    for N in (2, 5, 12):
        basis = al.build_basis(N)
        d1, d2 = al.parity_block_dims(basis)
        assert d1 + d2 == basis.dim
        assert int(np.sum(basis.parity_of == 1)) == d1
    assert al.parity_block_dims(al.build_basis(2)) == (4, 2)


def test_l_matrix_n1():
    basis = al.build_basis(1)
    l = al.generator_matrix(basis, "l").entries
    assert np.count_nonzero(l - np.diag(np.diag(l))) == 0
    by_state = {s: l[k, k] for k, s in enumerate(basis.states)}
    assert by_state[(1, 0, 0)] == 0
    assert by_state[(0, 1, 0)] == 1
    assert by_state[(0, 0, 1)] == -1


def test_n_tau_matrix_n2():
    basis = al.build_basis(2)
    n_tau = al.generator_matrix(basis, "n_tau").entries
    assert sorted(np.diag(n_tau)) == [0, 1, 1, 2, 2, 2]


def test_dx_action_on_sigma_state_n1():
    # D_x |1,0,0> = (|0,1,0> - |0,0,1>)/sqrt(2), by hand ladder algebra
    basis = al.build_basis(1)
    Dx = al.generator_matrix(basis, "D_x").entries
    col = Dx[:, basis.index_of[(1, 0, 0)]]
    expected = np.zeros(3)
    expected[basis.index_of[(0, 1, 0)]] = 1 / np.sqrt(2)
    expected[basis.index_of[(0, 0, 1)]] = -1 / np.sqrt(2)
    np.testing.assert_allclose(col, expected, atol=1e-15)


def test_unknown_generator():
    basis = al.build_basis(2)
    with pytest.raises(al.InvalidParameterError):
        al.generator_matrix(basis, "D_z")


def test_generator_symmetry_flags_exact():
    basis = al.build_basis(9)
    for name in al.GENERATOR_NAMES:
        op = al.generator_matrix(basis, name)
        if op.symmetric:
            assert np.max(np.abs(op.entries - op.entries.T)) == 0.0
        if op.times_i:
            assert np.array_equal(op.entries, -op.entries.T)
            assert op.hermitian
    # ladder operators pair up under transposition
    Dp = al.generator_matrix(basis, "D_plus").entries
    Dm = al.generator_matrix(basis, "D_minus").entries
    assert np.array_equal(Dp.T, Dm)
    Qp = al.generator_matrix(basis, "Q_plus").entries
    Qm = al.generator_matrix(basis, "Q_minus").entries
    assert np.array_equal(Qp.T, Qm)


def test_total_number_conservation_exact():
    basis = al.build_basis(6)
    n_total = al.OperatorMatrix(
        al.generator_matrix(basis, "n_s").entries
        + al.generator_matrix(basis, "n_tau").entries,
        basis.tag, True)
    for name in al.GENERATOR_NAMES:
        op = al.generator_matrix(basis, name)
        assert al.commutator_norm(op, n_total) == 0.0


def test_ladder_consistency_exact():
    # D^2 must equal its defining combination of boson products bitwise
    basis = al.build_basis(8)
    Dp = al.generator_matrix(basis, "D_plus").entries
    Dm = al.generator_matrix(basis, "D_minus").entries
    l = al.generator_matrix(basis, "l").entries
    M0 = Dp @ Dm
    M1 = Dm @ Dp
    rebuilt = ((M0 + M0.T) + (M1 + M1.T)) / 4 + l @ l
    D2 = al.generator_matrix(basis, "D_squared").entries
    assert np.array_equal(D2, rebuilt)


def test_casimir_commutes_with_o3_generators():
    basis = al.build_basis(8)
    D2 = al.generator_matrix(basis, "D_squared")
    for name in ("D_plus", "D_minus", "l", "D_x"):
        g = al.generator_matrix(basis, name)
        assert al.commutator_norm(D2, g) < 1e-12


def test_hamiltonian_diagonal_case():
    basis = al.build_basis(2)
    H = al.build_hamiltonian(al.ModelParams(2, 0.0, 0.0), basis)
    np.testing.assert_allclose(
        sorted(np.linalg.eigvalsh(H.entries)), [0, 0.5, 0.5, 1, 1, 1],
        atol=1e-14)


def test_hamiltonian_requires_n_ge_2():
    basis = al.build_basis(1)
    with pytest.raises(al.InvalidParameterError):
        al.build_hamiltonian(al.ModelParams(1, 0.5, 0.0), basis)


def test_hamiltonian_basis_mismatch():
    with pytest.raises(al.BasisMismatchError):
        al.build_hamiltonian(al.ModelParams(3, 0.5, 0.0), al.build_basis(4))


@pytest.mark.parametrize("xi,eps,partner", [
    (0.4, 0.0, "l"),
    (1.0, 0.4, "D_x"),
    (1.0, 0.4, "D_squared"),
    (0.0, 0.4, "n_plus_Q"),
])
def test_integrals_of_motion(xi, eps, partner):
    basis = al.build_basis(20)
    H = al.build_hamiltonian(al.ModelParams(20, xi, eps), basis)
    op = al.generator_matrix(basis, partner)
    assert al.commutator_norm(H, op) < 1e-10


def test_commutator_norm_basics():
    basis = al.build_basis(2)
    l = al.generator_matrix(basis, "l")
    Dx = al.generator_matrix(basis, "D_x")
    n_tau = al.generator_matrix(basis, "n_tau")
    n_s = al.generator_matrix(basis, "n_s")
    assert al.commutator_norm(l, l) == 0.0
    assert al.commutator_norm(n_tau, n_s) == 0.0
    # dense 6x6 oracle
    expected = np.linalg.norm(
        l.entries @ Dx.entries - Dx.entries @ l.entries)
    assert expected > 0.1
    assert al.commutator_norm(l, Dx) == pytest.approx(expected, rel=1e-14)


def test_commutator_norm_basis_mismatch():
    a = al.generator_matrix(al.build_basis(2), "l")
    b = al.generator_matrix(al.build_basis(3), "l")
    with pytest.raises(al.BasisMismatchError):
        al.commutator_norm(a, b)


def test_parity_blocks_identity():
    basis = al.build_basis(5)
    ident = al.OperatorMatrix(np.eye(basis.dim), basis.tag, True)
    B1, B2 = al.parity_blocks(ident, basis)
    # 1/sqrt(2) normalization costs one ulp on the diagonal
    np.testing.assert_allclose(B1.entries, np.eye(B1.dim), atol=1e-15)
    np.testing.assert_allclose(B2.entries, np.eye(B2.dim), atol=1e-15)


def test_parity_blocks_exact_decoupling():
    basis = al.build_basis(14)
    H = al.build_hamiltonian(al.ModelParams(14, 0.4, 0.4), basis)
    rotated = al.to_parity_basis(H, basis)
    d1, _ = al.parity_block_dims(basis)
    assert np.max(np.abs(rotated.entries[:d1, d1:])) == 0.0
    assert np.max(np.abs(rotated.entries[d1:, :d1])) == 0.0


def test_parity_blocks_spectrum_union():
    basis = al.build_basis(10)
    H = al.build_hamiltonian(al.ModelParams(10, 0.3, 0.5), basis)
    B1, B2 = al.parity_blocks(H, basis)
    merged = np.sort(np.concatenate([
        np.linalg.eigvalsh(B1.entries), np.linalg.eigvalsh(B2.entries)]))
    full = np.linalg.eigvalsh(H.entries)
    np.testing.assert_allclose(merged, full, atol=1e-9)


def test_parity_blocks_reject_parity_odd_operator():
    basis = al.build_basis(6)
    l = al.generator_matrix(basis, "l")
    with pytest.raises(al.InvalidParameterError):
        al.parity_blocks(l, basis)


@given(N=st.integers(min_value=2, max_value=25),
       xi=st.floats(min_value=0.0, max_value=1.0),
       eps=st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=20, deadline=None)
def test_hamiltonian_exactly_symmetric(N, xi, eps):
    basis = al.build_basis(N)
    H = al.build_hamiltonian(al.ModelParams(N, xi, eps), basis)
    assert np.max(np.abs(H.entries - H.entries.T)) == 0.0


def test_model_params_validation():
    with pytest.raises(al.InvalidParameterError):
        al.ModelParams(5, 1.5, 0.0)
    with pytest.raises(al.InvalidParameterError):
        al.ModelParams(5, 0.5, -0.1)
    with pytest.raises(al.InvalidParameterError):
        al.ModelParams(0, 0.5, 0.0)
