import numpy as np
import pytest

from otoclab import algebra as al
from otoclab import classical as cl
from otoclab import spectra as sp


def _model_eig(N, xi, eps):
    basis = al.build_basis(N)
    H = al.build_hamiltonian(al.ModelParams(N, xi, eps), basis)
    return basis, H, sp.diagonalize(H)


def test_identity_spectrum():
    ident = al.OperatorMatrix(np.eye(5), "test[5]", True)
    eig = sp.diagonalize(ident)
    np.testing.assert_allclose(eig.energies, np.ones(5), atol=1e-14)


def test_diagonal_hamiltonian_spectrum():
    _, _, eig = _model_eig(2, 0.0, 0.0)
    np.testing.assert_allclose(eig.energies, [0, 0.5, 0.5, 1, 1, 1], atol=1e-14)


def test_residual_invariants():
    _, H, eig = _model_eig(20, 0.4, 0.4)
    V = eig.vectors
    assert np.max(np.abs(V.T @ V - np.eye(eig.dim))) <= 1e-10
    recon = V.T @ H.entries @ V
    resid = np.max(np.abs(recon - np.diag(eig.energies)))
    assert resid <= 1e-9 * np.max(np.abs(eig.energies))
    assert np.all(np.diff(eig.energies) >= 0)


def test_trace_identity():
    _, H, eig = _model_eig(15, 0.7, 0.2)
    assert abs(eig.energies.sum() - np.trace(H.entries)) <= (
        1e-9 * eig.dim * np.max(np.abs(H.entries)))


def test_sign_convention_deterministic():
    _, H, eig1 = _model_eig(8, 0.4, 0.4)
    eig2 = sp.diagonalize(H)
    np.testing.assert_array_equal(eig1.vectors, eig2.vectors)
    picks = np.argmax(np.abs(eig1.vectors), axis=0)
    assert np.all(eig1.vectors[picks, np.arange(eig1.dim)] > 0)


def test_diagonalize_rejects_nonsymmetric():
    M = al.OperatorMatrix(np.arange(9.0).reshape(3, 3), "test[3]", False)
    with pytest.raises(al.InvalidParameterError):
        sp.diagonalize(M)


def test_o3_degeneracy_multiplets():
    # xi=1, eps=0: Casimir spectrum w(w+1) for w = N, N-2, ..., with odd
    # multiplicities 2w+1; brute-force diagonalization plus gap counting
    _, _, eig = _model_eig(6, 1.0, 0.0)
    sizes = sp.degenerate_multiplets(eig.energies, gap_tol=1e-9)
    assert sorted(sizes) == [1, 5, 9, 13]
    expected = sorted(-w * (w + 1) / 30.0 for w in (0, 2, 4, 6))
    level_values = []
    k = 0
    for size in sizes:
        level_values.append(eig.energies[k])
        k += size
    np.testing.assert_allclose(sorted(level_values), expected, atol=1e-12)


def test_to_eigenbasis_diagonalizes_h():
    _, H, eig = _model_eig(6, 0.4, 0.4)
    Ht = sp.to_eigenbasis(H, eig)
    np.testing.assert_allclose(Ht.entries, np.diag(eig.energies), atol=1e-12)


def test_to_eigenbasis_identity_and_norm():
    basis, H, eig = _model_eig(6, 0.4, 0.4)
    ident = al.OperatorMatrix(np.eye(eig.dim), basis.tag, True)
    np.testing.assert_allclose(sp.to_eigenbasis(ident, eig).entries,
                               np.eye(eig.dim), atol=1e-12)
    Dx = al.generator_matrix(basis, "D_x")
    t = sp.to_eigenbasis(Dx, eig)
    assert np.max(np.abs(t.entries - t.entries.T)) == 0.0
    assert abs(np.linalg.norm(t.entries) - np.linalg.norm(Dx.entries)) <= 1e-10


def test_to_eigenbasis_times_i_antisymmetry():
    basis, H, eig = _model_eig(6, 0.4, 0.4)
    Dy = al.generator_matrix(basis, "D_y")
    t = sp.to_eigenbasis(Dy, eig)
    assert t.times_i
    assert np.array_equal(t.entries, -t.entries.T)


def test_to_eigenbasis_basis_mismatch():
    basis, H, eig = _model_eig(6, 0.4, 0.4)
    other = al.generator_matrix(al.build_basis(7), "D_x")
    with pytest.raises(al.BasisMismatchError):
        sp.to_eigenbasis(other, eig)


def test_block_spectra_match_full():
    basis, H, eig = _model_eig(12, 0.4, 0.4)
    B1, B2 = al.parity_blocks(H, basis)
    merged = np.sort(np.concatenate([sp.diagonalize(B1).energies,
                                     sp.diagonalize(B2).energies]))
    np.testing.assert_allclose(merged, eig.energies, atol=1e-9)


def test_goe_determinism_and_symmetry():
    a = sp.goe_sample(40, seed=11)
    b = sp.goe_sample(40, seed=11)
    c = sp.goe_sample(40, seed=12)
    np.testing.assert_array_equal(a.entries, b.entries)
    assert np.max(np.abs(a.entries - a.entries.T)) == 0.0
    assert not np.array_equal(a.entries, c.entries)
    with pytest.raises(al.InvalidParameterError):
        sp.goe_sample(1, seed=0)


def test_goe_variance_structure():
    H = sp.goe_sample(400, seed=5).entries
    off = H[np.triu_indices(400, k=1)]
    diag = np.diag(H)
    sigma2 = 1.0 / 400
    assert abs(off.var() / sigma2 - 1) < 0.05
    assert abs(diag.var() / (2 * sigma2) - 1) < 0.25


def test_goe_semicircle_law():
    # Kolmogorov-Smirnov distance of pooled eigenvalues against the
    # analytic semicircle CDF on [-2, 2]
    dim = 500
    vals = []
    for k in range(20):
        vals.append(np.linalg.eigvalsh(sp.goe_sample(dim, seed=1000 + k).entries))
    x = np.sort(np.concatenate(vals))

    def semicircle_cdf(v):
        v = np.clip(v, -2.0, 2.0)
        return 0.5 + v * np.sqrt(4 - v * v) / (4 * np.pi) + np.arcsin(v / 2) / np.pi

    emp = np.arange(1, x.size + 1) / x.size
    ks = np.max(np.abs(emp - semicircle_cdf(x)))
    assert ks < 0.05


def test_ground_state_approaches_classical_minimum():
    # E_1(N) closes in on the classical minimum monotonically; oracle is a
    # numerical minimization of the classical Hamiltonian
    params = cl.ClassicalParams(xi=0.4, epsilon=0.4)
    _, e_min = cl.minimize_hamiltonian(params)
    gaps = []
    for N in (10, 20, 40, 50):
        _, _, eig = _model_eig(N, 0.4, 0.4)
        gaps.append(abs(eig.energies[0] - e_min))
    assert gaps[0] > gaps[1] > gaps[2] > gaps[3]
    assert gaps[3] < 0.02


def test_degenerate_multiplets_tolerance():
    e = np.array([0.0, 1e-12, 1.0, 1.0 + 2e-9, 2.0])
    assert sp.degenerate_multiplets(e, 1e-9) == [2, 1, 1, 1]
    assert sp.degenerate_multiplets(e, 1e-8) == [2, 2, 1]
    assert sp.degenerate_multiplets(np.array([]), 1e-9) == []
