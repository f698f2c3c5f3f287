"""Static Hamiltonian of the tunable-angle qubit-cavity model.

The closed-system Hamiltonian (hbar = 1, frequencies in units of the
cavity frequency unless stated otherwise) is

    H0 = omega_c a^dag a + omega_g sp sm
         + g (a + a^dag) (cos(theta) sz - sin(theta) sx)

with the qubit conventions of :mod:`polaritonsim.hilbert`.  The mixing
angle ``theta`` interpolates between purely longitudinal (theta = 0) and
purely transverse (theta = pi/2) coupling; away from multiples of pi/2
it breaks the excitation-parity symmetry of the transverse model.  For a
flux-tunable superconducting qubit the angle follows from the flux
offset through :func:`theta_from_flux`.

A coherent drive ``Omega cos(omega_l t) (a + a^dag)`` enters the
dynamics layer; only its amplitude and frequency live in
:class:`SystemParams` here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .hilbert import HilbertSpace, Operator, embed, fock_annihilation, pauli

__all__ = [
    "SystemParams",
    "EigenSystem",
    "build_static_hamiltonian",
    "drive_quadrature",
    "theta_from_flux",
    "diagonalize",
    "dressed_system",
    "transition_energy",
    "parity_diagnostic",
    "track_by_overlap",
    "truncation_shift",
]

# Eigenvalues closer than this (in omega_c units) are treated as degenerate
# when fixing a deterministic eigenvector order.
_DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters, all rates and frequencies in units of omega_c.

    ``omega_0`` is the reference frequency entering the dressed relaxation
    rates; when left ``None`` it defaults to the cavity frequency.
    """

    g: float
    theta: float
    omega_c: float = 1.0
    omega_g: float = 1.0
    gamma_a: float = 1e-2
    gamma_sigma: float = 1e-2
    Omega: float = 1e-3
    omega_l: float = 1.0
    omega_0: float | None = None

    def __post_init__(self):
        if self.omega_c <= 0 or self.omega_g <= 0:
            raise ValueError("omega_c and omega_g must be positive")
        if self.g < 0:
            raise ValueError("coupling g must be non-negative")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if self.gamma_a < 0 or self.gamma_sigma < 0:
            raise ValueError("decay rates must be non-negative")
        if self.Omega < 0:
            raise ValueError("drive amplitude must be non-negative")
        if self.omega_l <= 0:
            raise ValueError("drive frequency must be positive")
        if self.omega_0 is not None and self.omega_0 <= 0:
            raise ValueError("omega_0 must be positive when given")

    @property
    def omega_ref(self) -> float:
        """Reference frequency for the dressed relaxation rates."""
        return self.omega_c if self.omega_0 is None else self.omega_0

    def updated(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class EigenSystem:
    """Dressed states of the static Hamiltonian, ascending in energy.

    ``vectors[:, j]`` is the j-th dressed state expressed in the bare
    composite basis.  The three lowest levels play the roles of the
    dressed vacuum and the lower/upper single-excitation polaritons.
    """

    energies: np.ndarray
    vectors: np.ndarray
    params: SystemParams
    space: HilbertSpace

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    def state(self, j: int) -> np.ndarray:
        return self.vectors[:, j]


def build_static_hamiltonian(params: SystemParams, space: HilbertSpace) -> Operator:
    """Assemble the undriven Hamiltonian on the composite space."""
    a = embed(fock_annihilation(space), "cavity", space).matrix
    sp = embed(pauli("sp"), "atom", space).matrix
    sm = sp.conj().T
    sx = embed(pauli("sx"), "atom", space).matrix
    sz = embed(pauli("sz"), "atom", space).matrix
    x = a + a.conj().T
    coupling = math.cos(params.theta) * sz - math.sin(params.theta) * sx
    mat = (
        params.omega_c * (a.conj().T @ a)
        + params.omega_g * (sp @ sm)
        + params.g * (x @ coupling)
    )
    return Operator(mat, space=space, hermitian=True, label="H0")


def drive_quadrature(space: HilbertSpace) -> Operator:
    """Cavity quadrature ``a + a^dag`` on the composite space.

    This is both the operator the coherent drive couples to and the one
    whose dressed matrix elements define the emission channel.
    """
    a = embed(fock_annihilation(space), "cavity", space).matrix
    return Operator(a + a.conj().T, space=space, hermitian=True, label="x")


def theta_from_flux(i_p: float, delta_psi: float, gap: float) -> float:
    """Mixing angle of a flux qubit biased ``delta_psi`` from its sweet spot.

    ``cos(theta) = 2 i_p delta_psi / sqrt(gap^2 + (2 i_p delta_psi)^2)``
    with ``gap`` the qubit gap and ``i_p`` the persistent current.  At the
    sweet spot (``delta_psi = 0``) the coupling is purely transverse,
    theta = pi/2.

    Returns theta in (0, pi).
    """
    if gap <= 0:
        raise ValueError(f"qubit gap must be positive, got {gap}")
    eps = 2.0 * i_p * delta_psi
    return math.acos(eps / math.hypot(gap, eps))


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        k = int(np.argmax(np.abs(out[:, j])))
        pivot = out[k, j]
        out[:, j] *= pivot.conj() / abs(pivot)
        # kill the residual imaginary rounding on the pivot itself
        out[k, j] = out[k, j].real
    return out


def _order_degenerate(energies: np.ndarray, vectors: np.ndarray, scale: float):
    """Impose a fixed (arbitrary but deterministic) order inside degenerate groups.

    Members of a group with energy spread below the degeneracy tolerance are
    sorted by lexicographic comparison of their phase-fixed components.
    """
    order = np.arange(energies.shape[0])
    tol = _DEGENERACY_TOL * scale
    start = 0
    while start < len(energies):
        stop = start + 1
        while stop < len(energies) and energies[stop] - energies[start] < tol:
            stop += 1
        if stop - start > 1:
            keys = [
                tuple(np.round(np.concatenate([vectors[:, j].real, vectors[:, j].imag]), 12))
                for j in order[start:stop]
            ]
            order[start:stop] = order[start:stop][np.lexsort(np.array(keys).T[::-1])]
        start = stop
    return energies[order], vectors[:, order]


def diagonalize(h: Operator, params: SystemParams, space: HilbertSpace) -> EigenSystem:
    """Full dense eigendecomposition of a Hermitian Hamiltonian.

    Energies come out ascending.  Eigenvector phases are fixed by making
    the largest-magnitude component of each vector real and positive, and
    exact degeneracies are broken by a deterministic lexicographic rule,
    so repeated runs produce identical dressed bases.
    """
    if h.matrix.shape[0] != space.dim:
        raise ValueError("Hamiltonian dimension does not match the space")
    energies, vectors = np.linalg.eigh(h.matrix)
    vectors = _fix_phases(vectors)
    energies, vectors = _order_degenerate(energies, vectors, params.omega_c)
    vectors = _fix_phases(vectors)
    residual = np.max(np.abs(h.matrix @ vectors - vectors * energies[None, :]))
    if residual > 1e-10 * params.omega_c * max(1.0, np.max(np.abs(energies))):
        raise np.linalg.LinAlgError(f"eigendecomposition residual too large: {residual:.3e}")
    return EigenSystem(energies=energies, vectors=vectors, params=params, space=space)


def dressed_system(params: SystemParams, space: HilbertSpace) -> EigenSystem:
    """Build and diagonalize the static Hamiltonian in one step."""
    return diagonalize(build_static_hamiltonian(params, space), params, space)


def transition_energy(eig: EigenSystem, j: int, k: int) -> float:
    """Energy difference ``omega_k - omega_j`` for dressed levels j < k."""
    if not 0 <= j < k < eig.dim:
        raise ValueError(f"need 0 <= j < k < {eig.dim}, got j={j}, k={k}")
    return float(eig.energies[k] - eig.energies[j])


def parity_diagnostic(eig: EigenSystem) -> np.ndarray:
    """Expectation of the excitation parity in every dressed state.

    The parity operator is ``exp(i pi a^dag a) (x) diag(+1, -1)``, the
    symmetry conserved by a purely transverse coupling (theta = pi/2).
    Values of magnitude 1 mean the eigenstate has sharp parity; values in
    between diagnose parity breaking by the longitudinal coupling part.
    """
    n = eig.space.n_cavity
    cav = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    qub = np.array([1.0, -1.0])
    pi_diag = np.kron(cav, qub)
    vals = np.einsum("ij,i,ij->j", eig.vectors.conj(), pi_diag, eig.vectors).real
    return vals


def track_by_overlap(reference: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Match eigenvector columns to a reference basis by maximal overlap.

    Returns ``perm`` such that ``vectors[:, perm[i]]`` is the continuation
    of ``reference[:, i]``.  Pairs are assigned greedily in descending
    overlap order, which is exact away from crossings and deterministic at
    them.
    """
    overlap = np.abs(reference.conj().T @ vectors) ** 2
    n = overlap.shape[0]
    perm = np.full(n, -1)
    taken = np.zeros(n, dtype=bool)
    order = np.argsort(overlap, axis=None)[::-1]
    assigned = 0
    for flat in order:
        i, j = divmod(int(flat), n)
        if perm[i] < 0 and not taken[j]:
            perm[i] = j
            taken[j] = True
            assigned += 1
            if assigned == n:
                break
    return perm


def truncation_shift(params: SystemParams, n_cavity: int, n_levels: int = 6,
                     bump: int = 5) -> float:
    """Largest change of the lowest ``n_levels`` energies when the Fock
    truncation is raised from ``n_cavity`` to ``n_cavity + bump``.

    Used as the mandatory truncation health check: a converged truncation
    keeps this below 1e-6 omega_c at the strongest coupling of a run.
    """
    eig_lo = dressed_system(params, HilbertSpace(n_cavity))
    eig_hi = dressed_system(params, HilbertSpace(n_cavity + bump))
    return float(np.max(np.abs(eig_lo.energies[:n_levels] - eig_hi.energies[:n_levels])))
