"""Dressed-basis dissipation for the driven qubit-cavity system.

Loss is treated in the eigenbasis of the full static Hamiltonian, not in
the bare basis: each ordered pair of dressed levels j < k contributes an
independent downward jump ``|psi_j><psi_k|`` whose rate

    Gamma_c^{jk} = gamma_c * (Delta_kj / omega_0) * |C_c^{jk}|^2,
    C_c^{jk} = -i <psi_j| (c - c^dag) |psi_k>,   c in {a, sm}

is weighted by the transition frequency ``Delta_kj = omega_k - omega_j``
and by the dressed matrix element of the bare channel operator.  This is
the zero-temperature master equation that remains physical in the
ultrastrong coupling regime: the dressed vacuum is exactly dark, and
coupling-angle-induced parity breaking shows up directly as nonzero
cascade rates between the two single-excitation polaritons.

No secular cross terms between different jumps are kept, so in the
dressed basis the static generator acts elementwise on the density
matrix apart from a population-gain term on the diagonal.  That
structure is exploited by the propagation layer; the equivalent dense
superoperator is materialized as well since every contract check runs
against it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import HilbertSpace, embed, fock_annihilation, pauli
from .model import EigenSystem, SystemParams, drive_quadrature

__all__ = [
    "JumpSet",
    "Generator",
    "transition_amplitudes",
    "relaxation_rates",
    "build_jump_set",
    "build_generator",
    "apply_static",
]

_CHANNELS = ("cavity", "atom")


@dataclass(frozen=True)
class JumpSet:
    """Per-channel dressed transition amplitudes and relaxation rates.

    Both arrays are dim x dim and strictly upper triangular: entry [j, k]
    with j < k refers to the downward jump k -> j.  Everything else is 0.
    """

    channel: str
    amplitudes: np.ndarray
    rates: np.ndarray

    def total_rate_out(self) -> np.ndarray:
        """Total depletion rate of each dressed level through this channel."""
        return self.rates.sum(axis=0)


@dataclass(frozen=True)
class Generator:
    """Master-equation generator in the dressed basis.

    ``static_part`` is the dense superoperator of the undriven evolution
    (Hamiltonian commutator plus both dissipators) acting on row-major
    vectorized density matrices.  The structured fields carry the same
    content for the fast propagation path:

    ``phase_decay[m, n] = i (omega_n - omega_m) - (W_m + W_n) / 2`` with
    ``W_k`` the total depletion rate of level k, and ``gain[j, k]`` the
    total feeding rate of level j from level k.  The coherent drive
    ``Omega cos(omega_l t)`` couples through ``drive_matrix``, the cavity
    quadrature rotated to the dressed basis.
    """

    params: SystemParams
    energies: np.ndarray
    jumps: tuple[JumpSet, ...]
    gain: np.ndarray
    widths: np.ndarray
    phase_decay: np.ndarray
    drive_matrix: np.ndarray
    static_part: np.ndarray

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    @property
    def Omega(self) -> float:
        return self.params.Omega

    @property
    def omega_l(self) -> float:
        return self.params.omega_l

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.params.omega_l


def _channel_operator(channel: str, space: HilbertSpace) -> np.ndarray:
    if channel == "cavity":
        return embed(fock_annihilation(space), "cavity", space).matrix
    if channel == "atom":
        return embed(pauli("sm"), "atom", space).matrix
    raise ValueError(f"unknown channel {channel!r}; expected one of {_CHANNELS}")


def transition_amplitudes(eig: EigenSystem, channel: str) -> np.ndarray:
    """Dressed amplitudes ``-i <psi_j|(c - c^dag)|psi_k>`` for j < k.

    ``-i (c - c^dag)`` is Hermitian, so the magnitudes are symmetric in
    (j, k); only the strictly upper triangle (downward jumps) is kept.
    """
    c = _channel_operator(channel, eig.space)
    full = -1j * (eig.vectors.conj().T @ (c - c.conj().T) @ eig.vectors)
    return np.triu(full, k=1)


def relaxation_rates(eig: EigenSystem, channel: str, gamma_c: float,
                     omega_0: float) -> np.ndarray:
    """Frequency-weighted downward rates for one loss channel.

    rate[j, k] = gamma_c * (omega_k - omega_j) / omega_0 * |C[j, k]|^2.
    """
    if gamma_c < 0:
        raise ValueError("channel rate must be non-negative")
    if omega_0 <= 0:
        raise ValueError("reference frequency must be positive")
    amps = transition_amplitudes(eig, channel)
    delta = eig.energies[None, :] - eig.energies[:, None]
    return gamma_c * np.triu(delta, k=1) / omega_0 * np.abs(amps) ** 2


def build_jump_set(eig: EigenSystem, channel: str, gamma_c: float,
                   omega_0: float) -> JumpSet:
    return JumpSet(
        channel=channel,
        amplitudes=transition_amplitudes(eig, channel),
        rates=relaxation_rates(eig, channel, gamma_c, omega_0),
    )


def _static_superoperator(phase_decay: np.ndarray, gain: np.ndarray) -> np.ndarray:
    """Dense superoperator on row-major vec(rho) equivalent to the
    elementwise phase/decay action plus the diagonal gain term."""
    dim = phase_decay.shape[0]
    sup = np.diag(phase_decay.reshape(-1)).astype(complex)
    diag_idx = np.arange(dim) * dim + np.arange(dim)
    sup[np.ix_(diag_idx, diag_idx)] += gain
    return sup


def build_generator(eig: EigenSystem, jumps: tuple[JumpSet, ...] | list[JumpSet],
                    params: SystemParams) -> Generator:
    """Assemble the full time-dependent generator from the jump sets.

    The drive term is not folded into ``static_part``; it is applied with
    its instantaneous amplitude ``Omega cos(omega_l t)`` by the
    propagation layer.
    """
    jumps = tuple(jumps)
    if not jumps:
        raise ValueError("at least one jump set is required")
    dim = eig.dim
    gain = np.zeros((dim, dim))
    for js in jumps:
        if js.rates.shape != (dim, dim):
            raise ValueError("jump set dimension does not match the eigensystem")
        gain = gain + js.rates
    widths = gain.sum(axis=0)
    omega = eig.energies
    phase_decay = (
        1j * (omega[None, :] - omega[:, None])
        - 0.5 * (widths[:, None] + widths[None, :])
    )
    x = drive_quadrature(eig.space).matrix
    drive_matrix = eig.vectors.conj().T @ x @ eig.vectors
    return Generator(
        params=params,
        energies=omega.copy(),
        jumps=jumps,
        gain=gain,
        widths=widths,
        phase_decay=phase_decay,
        drive_matrix=drive_matrix,
        static_part=_static_superoperator(phase_decay, gain),
    )


def apply_static(gen: Generator, rho: np.ndarray) -> np.ndarray:
    """Structured action of the undriven generator on one or a batch of
    density matrices (batch axes leading).  Matches
    ``static_part @ vec(rho)`` to rounding."""
    dim = gen.dim
    rho = np.ascontiguousarray(rho)
    out = gen.phase_decay * rho
    pops = rho.reshape(rho.shape[:-2] + (dim * dim,))[..., :: dim + 1]
    gains = pops @ gen.gain.T
    out.reshape(out.shape[:-2] + (dim * dim,))[..., :: dim + 1] += gains
    return out
