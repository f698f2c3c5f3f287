"""Dense operator algebra for the cavity-qubit Hilbert space.

Composite basis ordering: the cavity Fock index varies slower than the
qubit index, so basis state ``2*m + s`` is ``|m> (x) |s>`` with ``s = 0``
the qubit ground state ``|g>`` and ``s = 1`` the excited state ``|e>``.
Tensor products therefore place the cavity factor first.  Everything is
a dense complex ``numpy`` array; no sparsity is used anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HilbertSpace",
    "Operator",
    "fock_annihilation",
    "pauli",
    "embed",
]

_HERMITICITY_TOL = 1e-12

_PAULI_MATRICES = {
    # (|g>, |e>) ordering with sp = |e><g|.
    "sp": np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex),
    "sm": np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex),
    "sx": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "sz": np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex),
}


@dataclass(frozen=True)
class HilbertSpace:
    """Truncated cavity Fock space tensored with a two-level qubit."""

    n_cavity: int
    n_atom: int = 2

    def __post_init__(self):
        if self.n_cavity < 2:
            raise ValueError(f"n_cavity must be >= 2, got {self.n_cavity}")
        if self.n_atom != 2:
            raise ValueError(f"only a two-level qubit is supported, got n_atom={self.n_atom}")

    @property
    def dim(self) -> int:
        return self.n_cavity * self.n_atom

    def index(self, m: int, s: int) -> int:
        """Composite basis index of ``|m> (x) |s>`` (s=0 ground, s=1 excited)."""
        if not (0 <= m < self.n_cavity and 0 <= s < self.n_atom):
            raise ValueError(f"basis labels out of range: m={m}, s={s}")
        return self.n_atom * m + s


@dataclass(frozen=True)
class Operator:
    """A dense matrix, optionally tagged with the composite space it acts on.

    Subsystem operators (bare cavity or qubit matrices) carry ``space=None``
    until they are lifted to the composite space with :func:`embed`.  When
    ``hermitian`` is set the matrix is validated against its adjoint at
    construction time.
    """

    matrix: np.ndarray
    space: HilbertSpace | None = None
    hermitian: bool = False
    label: str = field(default="", compare=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {mat.shape}")
        if self.space is not None and mat.shape[0] != self.space.dim:
            raise ValueError(
                f"matrix dimension {mat.shape[0]} does not match space dim {self.space.dim}"
            )
        if self.hermitian:
            dev = np.max(np.abs(mat - mat.conj().T))
            if dev > _HERMITICITY_TOL:
                raise ValueError(f"operator flagged hermitian deviates from H=H^dag by {dev:.3e}")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> "Operator":
        """Adjoint with the same space tag."""
        return Operator(self.matrix.conj().T, space=self.space, hermitian=self.hermitian,
                        label=self.label + "^dag" if self.label else "")


def fock_annihilation(space: HilbertSpace) -> Operator:
    """Cavity annihilation operator on the bare (un-embedded) Fock space.

    Acts as ``a|m> = sqrt(m)|m-1>``.  The truncation makes the canonical
    commutator ``[a, a^dag] = 1`` exact everywhere except the top retained
    Fock level.
    """
    n = space.n_cavity
    mat = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)
    return Operator(mat, label="a")


def pauli(name: str) -> Operator:
    """One of the qubit operators ``sx``, ``sz``, ``sp``, ``sm``.

    Conventions: ``sp = |e><g|``, ``sx = sp + sm`` and
    ``sz = sp@sm - sm@sp`` which is diag(-1, +1) in the (|g>, |e>) ordering.
    """
    if name not in _PAULI_MATRICES:
        raise ValueError(f"unknown qubit operator {name!r}; expected one of {sorted(_PAULI_MATRICES)}")
    hermitian = name in ("sx", "sz")
    return Operator(_PAULI_MATRICES[name].copy(), hermitian=hermitian, label=name)


def embed(op: Operator, subsystem: str, space: HilbertSpace) -> Operator:
    """Lift a subsystem operator to the composite space by tensoring identities.

    Parameters
    ----------
    op : Operator
        Bare cavity (n_cavity x n_cavity) or qubit (2 x 2) operator.
    subsystem : str
        Either ``"cavity"`` or ``"atom"``.
    space : HilbertSpace
        Target composite space.

    Returns
    -------
    Operator tagged with ``space``.  The cavity factor always comes first
    in the Kronecker product, matching the basis ordering of the package.
    """
    if subsystem == "cavity":
        if op.dim != space.n_cavity:
            raise ValueError(f"cavity operator dim {op.dim} != n_cavity {space.n_cavity}")
        mat = np.kron(op.matrix, np.eye(space.n_atom, dtype=complex))
    elif subsystem == "atom":
        if op.dim != space.n_atom:
            raise ValueError(f"atom operator dim {op.dim} != n_atom {space.n_atom}")
        mat = np.kron(np.eye(space.n_cavity, dtype=complex), op.matrix)
    else:
        raise ValueError(f"unknown subsystem {subsystem!r}; expected 'cavity' or 'atom'")
    return Operator(mat, space=space, hermitian=op.hermitian, label=op.label)
