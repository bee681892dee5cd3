"""System definitions and the worked initial-state scenarios.

* Example 1: driven V-type three-level atom (levels ``g, e1, e2``), coupling
  ``L = sigma_1 + sigma_2`` with ``sigma_j = |g><e_j|``, laser on ``g <-> e2``.
* Example 2: two-level atom ``H_S = w1 sigma^+ sigma``, ``L = sigma + sigma^+``,
  two-component mixtures of atom-photon states.
* Example 3: the single-component version of Example 2.

Photon packets are single-excitation states ``sum_k G_k |1_k>`` with the
Gaussian amplitudes of :func:`oqs.bath.gaussian_packet`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import BathModel, gaussian_packet
from .initial_state import VACUUM, FockOperator, GammaTerm, InitialState, single

NORM_TOL = 1e-8


@dataclass(frozen=True)
class SystemSpec:
    """System Hamiltonian, coupling operator and the projector on excited levels."""

    hamiltonian: np.ndarray
    coupling: np.ndarray
    excited_projector: np.ndarray | None = None
    name: str = "custom"

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        c = np.asarray(self.coupling, dtype=complex)
        if h.shape != c.shape or h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("H_S and L must be square matrices of equal size")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "coupling", c)
        if self.excited_projector is not None:
            object.__setattr__(self, "excited_projector", np.asarray(self.excited_projector, dtype=complex))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def sigma_z(self) -> np.ndarray:
        """``2 P_exc - 1``; defined only when an excited projector is known."""
        if self.excited_projector is None:
            raise ValueError("sigma_z needs an excited-state projector")
        return 2.0 * self.excited_projector - np.eye(self.dim)


def _ket(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def two_level_system(omega1: float) -> SystemSpec:
    """Levels ``g = 0``, ``e = 1``; ``H_S = w1 |e><e|``, ``L = sigma + sigma^+``."""
    sigma = np.outer(_ket(2, 0), _ket(2, 1))
    h = omega1 * sigma.conj().T @ sigma
    return SystemSpec(h, sigma + sigma.conj().T, np.diag([0.0, 1.0]), "two_level")


def v_atom_system(omega1: float, omega2: float, epsilon_l: float = 0.0, omega_l: float = 0.0) -> SystemSpec:
    """Levels ``g = 0``, ``e1 = 1``, ``e2 = 2`` in the frame rotating at ``omega_l``."""
    s1 = np.outer(_ket(3, 0), _ket(3, 1))
    s2 = np.outer(_ket(3, 0), _ket(3, 2))
    h = (omega1 - omega_l) * s1.conj().T @ s1 + (omega2 - omega_l) * s2.conj().T @ s2
    h = h + epsilon_l * (s2 + s2.conj().T)
    return SystemSpec(h, s1 + s2, np.diag([0.0, 1.0, 1.0]), "v_atom")


def packet_state(amplitudes) -> dict:
    return {single(k): complex(g) for k, g in enumerate(amplitudes) if g != 0}


def _check_norm(total: float, what: str):
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"{what} is not normalised (norm^2 = {total:.10f})")


def _entangled_terms(ket_packet, ket_vacuum, packet, weight, n_modes, label, max_exc=2):
    """Components of ``w |u>|packet><...| + ...`` for ``|Psi> = |u> (x) packet + |v> (x) |0>``.

    ``ket_packet`` (= ``|u>``) multiplies the photon packet and ``ket_vacuum``
    (= ``|v>``) the vacuum. Returns four terms ordered
    (packet-packet, vacuum-vacuum, v-u coherence, u-v coherence).
    """
    u, v = ket_packet, ket_vacuum
    vac = {VACUUM: 1.0}
    pk = packet_state(packet)
    terms = [
        GammaTerm.build(weight * np.outer(u, u.conj()), FockOperator.outer(pk, pk, max_exc), n_modes, f"{label}0"),
        GammaTerm.build(weight * np.outer(v, v.conj()), FockOperator.outer(vac, vac, max_exc), n_modes, f"{label}1"),
        GammaTerm.build(weight * np.outer(v, u.conj()), FockOperator.outer(vac, pk, max_exc), n_modes, f"{label}2"),
        GammaTerm.build(weight * np.outer(u, v.conj()), FockOperator.outer(pk, vac, max_exc), n_modes, f"{label}3"),
    ]
    return terms, (0, 1, 3, 2)


def _product_term(psi_s, packet, weight, n_modes, label, max_exc=2):
    psi_b = {VACUUM: 1.0 / np.sqrt(2.0)}
    for occ, g in packet_state(packet).items():
        psi_b[occ] = g / np.sqrt(2.0)
    return GammaTerm.build(weight * np.outer(psi_s, psi_s.conj()), FockOperator.projector(psi_b, max_exc), n_modes, label)


def build_example1(kind: str, bath: BathModel, A: complex = np.sqrt(0.5), B: complex = np.sqrt(0.25),
                   C: complex = np.sqrt(0.25), sigma: float = np.sqrt(0.1), k0: float | None = None,
                   omega1: float = 1.0, omega2: float = 0.5, epsilon_l: float = 0.0,
                   omega_l: float = 0.0) -> tuple[SystemSpec, InitialState]:
    """V-atom with ``|Psi> = (A|e1> + B|e2>)|0> + C|g> sum_k G_k |1_k>`` (NSL)
    or ``|psi_s><psi_s| (x) |psi_b><psi_b|`` with ``psi_s = A|e1> + B|e2> + C|g>``
    and ``psi_b = (|0> + sum_k G_k |1_k>)/sqrt 2`` (SL).

    ``k0`` (packet centre) defaults to ``omega1``; bath frequencies are shifted by
    ``omega_l`` into the laser frame.
    """
    kind = kind.upper()
    bath = bath.in_rotating_frame(omega_l)
    system = v_atom_system(omega1, omega2, epsilon_l, omega_l)
    packet = gaussian_packet(bath, omega1 if k0 is None else k0, sigma).amplitudes
    _check_norm(abs(A) ** 2 + abs(B) ** 2 + abs(C) ** 2 * np.sum(np.abs(packet) ** 2), "Example 1 state")
    e = A * _ket(3, 1) + B * _ket(3, 2)
    g = C * _ket(3, 0)
    n = bath.n_modes
    if kind == "NSL":
        terms, pairing = _entangled_terms(g, e, packet, 1.0, n, "g")
        return system, InitialState(tuple(terms), pairing)
    if kind == "SL":
        return system, InitialState((_product_term(e + g, packet, 1.0, n, "product"),), (0,))
    raise ValueError(f"Example 1 kind must be NSL or SL, got {kind!r}")


def build_example2(kind: str, bath: BathModel, A1: complex = np.sqrt(0.5), B1: complex = np.sqrt(0.5),
                   A2: complex = np.sqrt(0.8), B2: complex = np.sqrt(0.2), sigma1: float = 1.0,
                   sigma2: float = np.sqrt(0.5), k0: float | None = None, omega1: float = 1.0,
                   A: complex = np.sqrt(0.5), B: complex = np.sqrt(0.5),
                   weights=(0.5, 0.5)) -> tuple[SystemSpec, InitialState]:
    """Two-level atom with two-component mixtures (NSL, SL) or a vacuum product (DC).

    NSL: ``sum_j w_j |Psi_j><Psi_j|``, ``|Psi_j> = A_j |g> sum_k G^j_k |1_k> + B_j |e>|0>``.
    SL: ``sum_j w_j |psi_j><psi_j| (x) |psi_b^j><psi_b^j|``.
    DC: ``|psi_0><psi_0| (x) |0><0|`` with ``psi_0 = A|g> + B|e>``.
    Each component is normalised on its own, so the weights ``w_j`` must sum to 1.
    """
    kind = kind.upper()
    system = two_level_system(omega1)
    n = bath.n_modes
    g, e = _ket(2, 0), _ket(2, 1)
    if kind == "DC":
        _check_norm(abs(A) ** 2 + abs(B) ** 2, "DC state")
        psi = A * g + B * e
        term = GammaTerm.build(np.outer(psi, psi.conj()), FockOperator.vacuum(), n, "product")
        return system, InitialState((term,), (0,))
    _check_norm(float(np.sum(weights)), "mixture weights")
    centre = omega1 if k0 is None else k0
    comps = [(A1, B1, sigma1, weights[0]), (A2, B2, sigma2, weights[1])]
    terms, pairing = [], []
    for j, (a, b, sig, w) in enumerate(comps, start=1):
        packet = gaussian_packet(bath, centre, sig).amplitudes
        _check_norm(abs(a) ** 2 * np.sum(np.abs(packet) ** 2) + abs(b) ** 2, f"component {j}")
        if kind == "NSL":
            sub, pair = _entangled_terms(a * g, b * e, packet, w, n, f"j{j}.")
            pairing.extend(p + len(terms) for p in pair)
            terms.extend(sub)
        elif kind == "SL":
            pairing.append(len(terms))
            terms.append(_product_term(a * g + b * e, packet, w, n, f"j{j}"))
        else:
            raise ValueError(f"Example 2 kind must be NSL, SL or DC, got {kind!r}")
    return system, InitialState(tuple(terms), tuple(pairing))


def build_example3(kind: str, bath: BathModel, A: complex = np.sqrt(0.5), B: complex = np.sqrt(0.5),
                   sigma: float = 1.0, k0: float | None = None,
                   omega1: float = 0.5) -> tuple[SystemSpec, InitialState]:
    """Two-level atom: ``|Psi> = A|g> sum_k G_k |1_k> + B|e>|0>`` (NSL) or
    ``|psi_0><psi_0| (x) |psi_b><psi_b|`` with ``psi_0 = A|g> + B|e>`` (SL)."""
    kind = kind.upper()
    system = two_level_system(omega1)
    n = bath.n_modes
    g, e = _ket(2, 0), _ket(2, 1)
    packet = gaussian_packet(bath, omega1 if k0 is None else k0, sigma).amplitudes
    _check_norm(abs(A) ** 2 * np.sum(np.abs(packet) ** 2) + abs(B) ** 2, "Example 3 state")
    if kind == "NSL":
        terms, pairing = _entangled_terms(A * g, B * e, packet, 1.0, n, "")
        return system, InitialState(tuple(terms), pairing)
    if kind == "SL":
        return system, InitialState((_product_term(A * g + B * e, packet, 1.0, n, "product"),), (0,))
    raise ValueError(f"Example 3 kind must be NSL or SL, got {kind!r}")
