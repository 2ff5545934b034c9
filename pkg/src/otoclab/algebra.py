"""Finite u(3) boson algebra: Fock basis, generator matrices, model Hamiltonian.

The model lives in the fully symmetric representation with a fixed total
excitation number N shared by one scalar boson (sigma) and two circular
bosons (tau_+, tau_-).  All operators are bilinear products b_i^dag b_j of
the three modes, so every matrix conserves N and can be built densely over
the occupation basis |n_sigma, n_+, n_->.

Matrices are kept real.  The two genuinely imaginary generators (D_y, R_y)
are stored through their real antisymmetric part A with the convention
that the physical operator is 1j * A (see OperatorMatrix.times_i); OTOC
values are invariant under this substitution because the imaginary unit
enters every commutator term as a global factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "InvalidParameterError",
    "BasisMismatchError",
    "FockBasis",
    "ModelParams",
    "OperatorMatrix",
    "GENERATOR_NAMES",
    "build_basis",
    "generator_matrix",
    "build_hamiltonian",
    "to_parity_basis",
    "parity_blocks",
    "parity_block_dims",
    "commutator_norm",
]


class InvalidParameterError(ValueError):
    """Raised for out-of-domain model parameters or unknown identifiers."""


class BasisMismatchError(ValueError):
    """Raised when operators tagged with different bases are combined."""


@dataclass(frozen=True)
class FockBasis:
    """Occupation basis of the N-excitation sector.

    States are triples (n_sigma, n_plus, n_minus) ordered lexicographically
    by (n_tau, l) ascending, where n_tau = n_plus + n_minus and
    l = n_plus - n_minus.  ``parity_of[k]`` labels the invariant subspace
    (1 or 2) that the canonical parity combination built on state k falls
    into: the member with l >= 0 carries the symmetric combination
    (block 1 for even l), the member with l < 0 the antisymmetric one
    (block 1 for odd |l|).
    """

    n_total: int
    states: tuple[tuple[int, int, int], ...]
    index_of: dict[tuple[int, int, int], int]
    n_tau: np.ndarray
    l: np.ndarray
    parity_of: np.ndarray
    mirror: np.ndarray  # position of the l -> -l partner state

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def tag(self) -> str:
        return f"fock[N={self.n_total}]"


@dataclass(frozen=True)
class ModelParams:
    """Hamiltonian parameters: system size N, control xi, perturbation epsilon."""

    N: int
    xi: float
    epsilon: float = 0.0

    def __post_init__(self):
        if self.N < 1:
            raise InvalidParameterError(f"N must be >= 1, got {self.N}")
        if not 0.0 <= self.xi <= 1.0:
            raise InvalidParameterError(f"xi must be in [0, 1], got {self.xi}")
        if self.epsilon < 0.0:
            raise InvalidParameterError(f"epsilon must be >= 0, got {self.epsilon}")


@dataclass
class OperatorMatrix:
    """Dense real matrix of an operator in a tagged basis.

    If ``times_i`` is set the physical operator is ``1j * entries`` and the
    stored entries are antisymmetric; the operator itself is then Hermitian.
    """

    entries: np.ndarray
    basis_tag: str
    symmetric: bool
    times_i: bool = False

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def hermitian(self) -> bool:
        if self.times_i:
            return bool(np.array_equal(self.entries, -self.entries.T))
        return self.symmetric

    def as_complex(self) -> np.ndarray:
        """The physical operator as an explicit (complex) matrix."""
        if self.times_i:
            return 1j * self.entries
        return self.entries.astype(complex)

    def require_same_basis(self, other: "OperatorMatrix"):
        if self.basis_tag != other.basis_tag or self.dim != other.dim:
            raise BasisMismatchError(
                f"basis mismatch: {self.basis_tag}/{self.dim} vs "
                f"{other.basis_tag}/{other.dim}"
            )


def build_basis(N: int) -> FockBasis:
    """Enumerate the (N+1)(N+2)/2 occupation states of the N-boson sector."""
    if N < 1:
        raise InvalidParameterError(f"N must be >= 1, got {N}")
    states = []
    for n_tau in range(N + 1):
        # l runs -n_tau .. n_tau in steps of 2 (same parity as n_tau)
        for l in range(-n_tau, n_tau + 1, 2):
            n_plus = (n_tau + l) // 2
            n_minus = (n_tau - l) // 2
            states.append((N - n_tau, n_plus, n_minus))
    states = tuple(states)
    index_of = {s: k for k, s in enumerate(states)}
    n_tau_arr = np.array([s[1] + s[2] for s in states])
    l_arr = np.array([s[1] - s[2] for s in states])
    mirror = np.array([index_of[(s[0], s[2], s[1])] for s in states])
    parity = np.where(
        l_arr >= 0,
        np.where(l_arr % 2 == 0, 1, 2),
        np.where((-l_arr) % 2 == 1, 1, 2),
    )
    return FockBasis(
        n_total=N,
        states=states,
        index_of=index_of,
        n_tau=n_tau_arr,
        l=l_arr,
        parity_of=parity,
        mirror=mirror,
    )


def _bilinear(basis: FockBasis, i: int, j: int) -> np.ndarray:
    """Matrix of b_i^dag b_j over the Fock basis (modes 0=sigma, 1=+, 2=-)."""
    dim = basis.dim
    M = np.zeros((dim, dim))
    if i == j:
        np.fill_diagonal(M, [s[i] for s in basis.states])
        return M
    for col, s in enumerate(basis.states):
        if s[j] == 0:
            continue
        t = list(s)
        t[j] -= 1
        t[i] += 1
        M[basis.index_of[tuple(t)], col] = np.sqrt(s[j]) * np.sqrt(t[i])
    return M


def _symmetrize(M: np.ndarray) -> np.ndarray:
    # (x + y)/2 with transposed pairing is bitwise symmetric
    return (M + M.T) / 2


def _build_generators(basis: FockBasis) -> dict[str, tuple[np.ndarray, bool, bool]]:
    """All generator matrices as (entries, symmetric, times_i)."""
    E = {(i, j): _bilinear(basis, i, j) for i in range(3) for j in range(3) if i != j}
    n_s = _bilinear(basis, 0, 0)
    n_p = _bilinear(basis, 1, 1)
    n_m = _bilinear(basis, 2, 2)
    rt2 = np.sqrt(2.0)

    D_plus = rt2 * (E[(1, 0)] - E[(0, 2)])
    D_minus = rt2 * (E[(0, 1)] - E[(2, 0)])
    Q_plus = rt2 * E[(1, 2)]
    Q_minus = rt2 * E[(2, 1)]
    R_plus = rt2 * (E[(1, 0)] + E[(0, 2)])
    R_minus = rt2 * (E[(2, 0)] + E[(0, 1)])
    l = n_p - n_m

    # o(3) Casimir; per-product symmetrization keeps the result exactly
    # symmetric without disturbing the defining combination
    M0 = D_plus @ D_minus
    M1 = D_minus @ D_plus
    D_squared = ((M0 + M0.T) + (M1 + M1.T)) / 4 + l @ l

    Q = (Q_plus + Q_minus) / rt2
    gens: dict[str, tuple[np.ndarray, bool, bool]] = {
        "n_tau": (n_p + n_m, True, False),
        "n_s": (n_s, True, False),
        "l": (l, True, False),
        "D_plus": (D_plus, False, False),
        "D_minus": (D_minus, False, False),
        "D_x": ((D_plus + D_minus) / 2, True, False),
        "D_y": ((D_minus - D_plus) / 2, False, True),
        "Q_plus": (Q_plus, False, False),
        "Q_minus": (Q_minus, False, False),
        "Q": (Q, True, False),
        "R_x": ((R_plus + R_minus) / 2, True, False),
        "R_y": ((R_minus - R_plus) / 2, False, True),
        "D_squared": (D_squared, True, False),
        "n_plus_Q": ((n_p + n_m) + Q, True, False),
    }
    return gens


GENERATOR_NAMES = (
    "n_tau",
    "n_s",
    "l",
    "D_plus",
    "D_minus",
    "D_x",
    "D_y",
    "Q_plus",
    "Q_minus",
    "Q",
    "R_x",
    "R_y",
    "D_squared",
    "n_plus_Q",
)

_GEN_CACHE: dict[int, dict[str, tuple[np.ndarray, bool, bool]]] = {}


def _generators_for(basis: FockBasis) -> dict[str, tuple[np.ndarray, bool, bool]]:
    key = basis.n_total
    if key not in _GEN_CACHE:
        if len(_GEN_CACHE) > 6:
            _GEN_CACHE.clear()
        _GEN_CACHE[key] = _build_generators(basis)
    return _GEN_CACHE[key]


def generator_matrix(basis: FockBasis, which: str) -> OperatorMatrix:
    """Matrix of a u(3) generator (or named combination) in the Fock basis.

    D_y and R_y come back with times_i set: the stored real antisymmetric
    matrix A represents the Hermitian operator 1j * A.
    """
    gens = _generators_for(basis)
    if which not in gens:
        raise InvalidParameterError(
            f"unknown generator {which!r}; valid: {', '.join(GENERATOR_NAMES)}"
        )
    entries, symmetric, times_i = gens[which]
    return OperatorMatrix(
        entries=entries.copy(),
        basis_tag=basis.tag,
        symmetric=symmetric,
        times_i=times_i,
    )


def build_hamiltonian(params: ModelParams, basis: FockBasis) -> OperatorMatrix:
    """H = (1-xi)/N n_tau - xi/(N(N-1)) D^2 - epsilon/N D_x, real symmetric.

    xi interpolates between the u(2) limit (xi = 0) and the o(3) limit
    (xi = 1), both integrable; the unperturbed ground state crosses a phase
    transition at xi = 1/5 in the infinite-size limit.  epsilon breaks the
    o(2) symmetry (conservation of l) and turns on chaos.
    """
    if basis.n_total != params.N:
        raise BasisMismatchError(
            f"basis is for N={basis.n_total}, params have N={params.N}"
        )
    if params.N < 2:
        raise InvalidParameterError("Hamiltonian needs N >= 2 (1/(N(N-1)) factor)")
    gens = _generators_for(basis)
    N, xi, eps = params.N, params.xi, params.epsilon
    H = (
        ((1.0 - xi) / N) * gens["n_tau"][0]
        - (xi / (N * (N - 1))) * gens["D_squared"][0]
        - (eps / N) * gens["D_x"][0]
    )
    return OperatorMatrix(entries=H, basis_tag=basis.tag, symmetric=True)


@dataclass(frozen=True)
class _ParityRotation:
    """Index/coefficient form of the orthogonal change to the parity basis.

    Column a of the rotation has entries c1[a] at Fock position i1[a] and
    c2[a] at i2[a] (c2 = 0 for l = 0 states).  Columns are ordered block 1
    first; block 1 has size d1.
    """

    i1: np.ndarray
    i2: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    d1: int
    dim: int


_PARITY_CACHE: dict[int, _ParityRotation] = {}


def _parity_rotation(basis: FockBasis) -> _ParityRotation:
    if basis.n_total in _PARITY_CACHE:
        return _PARITY_CACHE[basis.n_total]
    dim = basis.dim
    i1 = np.arange(dim)
    i2 = basis.mirror.copy()
    zero_l = i2 == i1
    c1 = np.where(zero_l, 1.0, 1.0 / np.sqrt(2.0))
    # sign convention: the l >= 0 member carries |l> + |-l>, the l < 0
    # member |l> - |-l> (expressed from its own slot)
    c2 = np.where(zero_l, 0.0, np.where(basis.l >= 0, 1.0, -1.0) / np.sqrt(2.0))
    order = np.concatenate(
        [np.where(basis.parity_of == 1)[0], np.where(basis.parity_of == 2)[0]]
    )
    rot = _ParityRotation(
        i1=i1[order],
        i2=i2[order],
        c1=c1[order],
        c2=c2[order],
        d1=int(np.sum(basis.parity_of == 1)),
        dim=dim,
    )
    if len(_PARITY_CACHE) > 6:
        _PARITY_CACHE.clear()
    _PARITY_CACHE[basis.n_total] = rot
    return rot


def to_parity_basis(op: OperatorMatrix, basis: FockBasis) -> OperatorMatrix:
    """Rotate a Fock-basis operator into the ordered parity basis.

    The rotated elements are assembled by pairing mirror-related Fock
    elements before summation, so matrix elements forbidden by the parity
    selection rule cancel exactly (not just to rounding).
    """
    if op.basis_tag != basis.tag:
        raise BasisMismatchError(f"operator basis {op.basis_tag} != {basis.tag}")
    r = _parity_rotation(basis)
    X = op.entries
    X11 = X[np.ix_(r.i1, r.i1)]
    X22 = X[np.ix_(r.i2, r.i2)]
    X12 = X[np.ix_(r.i1, r.i2)]
    X21 = X[np.ix_(r.i2, r.i1)]
    c1r = r.c1[:, None]
    c2r = r.c2[:, None]
    c1c = r.c1[None, :]
    c2c = r.c2[None, :]
    # mirror-diagonal and mirror-off pairs grouped for exact cancellation
    out = ((c1r * c1c) * X11 + (c2r * c2c) * X22) + (
        (c1r * c2c) * X12 + (c2r * c1c) * X21
    )
    return OperatorMatrix(
        entries=out,
        basis_tag=f"parity[N={basis.n_total}]",
        symmetric=op.symmetric,
        times_i=op.times_i,
    )


def parity_block_dims(basis: FockBasis) -> tuple[int, int]:
    r = _parity_rotation(basis)
    return r.d1, basis.dim - r.d1


def parity_blocks(
    H: OperatorMatrix, basis: FockBasis, coupling_tol: float = 1e-12
) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Split a parity-invariant operator into its two invariant blocks.

    Raises InvalidParameterError if the rotated operator actually couples
    the blocks (relative to its largest in-block element).
    """
    rotated = to_parity_basis(H, basis)
    d1, _ = parity_block_dims(basis)
    X = rotated.entries
    B1 = X[:d1, :d1]
    B2 = X[d1:, d1:]
    cross = max(np.max(np.abs(X[:d1, d1:]), initial=0.0),
                np.max(np.abs(X[d1:, :d1]), initial=0.0))
    scale = max(np.max(np.abs(B1), initial=0.0), np.max(np.abs(B2), initial=0.0))
    if cross > coupling_tol * max(scale, 1e-300):
        ratio = cross / max(scale, 1e-300)
        raise InvalidParameterError(
            f"operator couples parity blocks: cross/in = {ratio:.3e}"
        )
    tag1 = f"parity1[N={basis.n_total}]"
    tag2 = f"parity2[N={basis.n_total}]"
    return (
        OperatorMatrix(B1.copy(), tag1, rotated.symmetric, rotated.times_i),
        OperatorMatrix(B2.copy(), tag2, rotated.symmetric, rotated.times_i),
    )


def commutator_norm(A: OperatorMatrix, B: OperatorMatrix) -> float:
    """Frobenius norm of [A, B].

    times_i flags only contribute global factors of i to the commutator, so
    the norm is computed from the stored real matrices directly.
    """
    A.require_same_basis(B)
    X = A.entries
    Y = B.entries
    return float(np.linalg.norm(X @ Y - Y @ X))
