"""Dense symmetric eigendecomposition, eigenbasis transforms, GOE sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .algebra import BasisMismatchError, InvalidParameterError, OperatorMatrix

__all__ = [
    "EigenSystem",
    "EigenOperator",
    "DiagonalizationError",
    "diagonalize",
    "to_eigenbasis",
    "goe_sample",
    "degenerate_multiplets",
]


class DiagonalizationError(RuntimeError):
    """Eigensolver failed to converge; carries the LAPACK info code."""


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and orthonormal eigenvectors of a symmetric matrix."""

    energies: np.ndarray
    vectors: np.ndarray  # columns are eigenvectors
    basis_tag: str

    @property
    def dim(self) -> int:
        return len(self.energies)

    @property
    def tag(self) -> str:
        return f"eigen[{self.basis_tag}]"


@dataclass(frozen=True)
class EigenOperator:
    """A Hermitian operator expressed in an eigenbasis (real storage).

    With times_i set, the physical operator is 1j * entries (entries then
    antisymmetric); otherwise entries are symmetric.
    """

    entries: np.ndarray
    system: EigenSystem
    times_i: bool = False

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def as_complex(self) -> np.ndarray:
        if self.times_i:
            return 1j * self.entries
        return self.entries.astype(complex)


def diagonalize(H: OperatorMatrix) -> EigenSystem:
    """Eigendecomposition of a real symmetric operator.

    Eigenvalues come back ascending; each eigenvector's sign is fixed by
    making its largest-magnitude component positive.
    """
    if not H.symmetric or H.times_i:
        raise InvalidParameterError("diagonalize expects a real symmetric operator")
    try:
        energies, vectors = scipy.linalg.eigh(H.entries)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise DiagonalizationError(f"eigh failed to converge: {exc}") from exc
    # deterministic sign convention
    picks = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[picks, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors = vectors * signs
    return EigenSystem(energies=energies, vectors=vectors, basis_tag=H.basis_tag)


def to_eigenbasis(V: OperatorMatrix, eig: EigenSystem) -> EigenOperator:
    """Conjugate an operator into the eigenbasis: Vec^T V Vec.

    The result is re-(anti)symmetrized exactly, which removes the rounding
    asymmetry of the two matrix products.
    """
    if V.basis_tag != eig.basis_tag:
        raise BasisMismatchError(
            f"operator basis {V.basis_tag} != eigensystem source {eig.basis_tag}"
        )
    M = eig.vectors.T @ V.entries @ eig.vectors
    if V.times_i:
        M = (M - M.T) / 2
    elif V.symmetric:
        M = (M + M.T) / 2
    return EigenOperator(entries=M, system=eig, times_i=V.times_i)


def goe_sample(dim: int, seed) -> OperatorMatrix:
    """Random GOE matrix with off-diagonal variance 1/dim (spectrum on ~[-2, 2]).

    Entries are Normal(0, sigma^2) off the diagonal and Normal(0, 2 sigma^2)
    on it, with sigma = 1/sqrt(dim); fully determined by the seed (an int or
    a sequence of ints fed to numpy's SeedSequence).
    """
    if dim < 2:
        raise InvalidParameterError(f"GOE dimension must be >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((dim, dim))
    H = (M + M.T) / np.sqrt(2.0 * dim)
    return OperatorMatrix(entries=H, basis_tag=f"goe[dim={dim},seed={seed}]",
                          symmetric=True)


def degenerate_multiplets(energies: np.ndarray, gap_tol: float) -> list[int]:
    """Sizes of degenerate groups in an ascending spectrum.

    Consecutive eigenvalues closer than gap_tol belong to the same group;
    eigenvalues themselves are never merged elsewhere in the package.
    """
    energies = np.asarray(energies)
    if energies.size == 0:
        return []
    sizes = []
    count = 1
    for gap in np.diff(energies):
        if gap < gap_tol:
            count += 1
        else:
            sizes.append(count)
            count = 1
    sizes.append(count)
    return sizes
