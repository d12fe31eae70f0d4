"""PSK symbols and constructive-interference constraints.

The per-user QoS constraint keeps the noise-free received symbol, after
rotation by the conjugate symbol phase, inside a sector that sits at least
``sqrt(sigma^2 * Gamma)`` past the PSK decision boundaries:

    |Im(h~_k^H x)| <= (Re(h~_k^H x) - sqrt(sigma_k^2 Gamma_k)) * tan(pi/M)

The rotated channel is built so that ``h~_k^H x = conj(s_k) * (h_k^H x)``,
i.e. the received symbol is rotated onto the positive real axis when it
matches ``s_k``.  For BPSK the sector degenerates to the half plane
``Re(h~_k^H x) >= threshold`` and the imaginary part is unconstrained.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi, tan

import numpy as np

from .errors import ContractViolation
from .signal_model import Scenario, snr_user

FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class PskSymbol:
    """One point of the M-PSK alphabet {exp(j(2m-1)pi/M), m=1..M}."""

    order: int
    index: int

    def __post_init__(self):
        if self.order < 2 or (self.order & (self.order - 1)) != 0:
            raise ContractViolation(f"PSK order must be a power of two >= 2, got {self.order}")
        if not 1 <= self.index <= self.order:
            raise ContractViolation(f"symbol index {self.index} outside 1..{self.order}")

    @property
    def value(self) -> complex:
        return np.exp(1j * (2 * self.index - 1) * pi / self.order)


def psk_alphabet(order: int):
    return [PskSymbol(order, m) for m in range(1, order + 1)]


def decode_psk(y: complex, order: int):
    """Map a received sample to the symbol whose sector contains its phase.

    Sector m covers phases [2(m-1)pi/M, 2m pi/M).  Returns None for y == 0
    (undecodable).
    """
    if order < 2 or (order & (order - 1)) != 0:
        raise ContractViolation(f"PSK order must be a power of two >= 2, got {order}")
    if y == 0:
        return None
    ang = float(np.angle(y)) % (2 * pi)
    m = int(ang // (2 * pi / order)) + 1
    return PskSymbol(order, min(m, order))


def decode_psk_indices(y: np.ndarray, order: int) -> np.ndarray:
    """Vectorized decode over an array of samples; index 0 marks y == 0."""
    ang = np.angle(y) % (2 * pi)
    m = (ang // (2 * pi / order)).astype(int) + 1
    m = np.minimum(m, order)
    return np.where(y == 0, 0, m)


@dataclass(frozen=True)
class CiConstraintSet:
    """Rotated channels plus the half-space description of the CI region.

    ``rotated_channels[k]`` is ``h_k * s_k`` so that the rotated receive
    value is ``rotated_channels[k]^H x = conj(s_k) h_k^H x``.
    """

    rotated_channels: np.ndarray = field(compare=False)
    thresholds: np.ndarray = field(compare=False)
    tan_phi: float
    power_budget: float
    psk_order: int

    @property
    def n_users(self) -> int:
        return self.rotated_channels.shape[0]

    @property
    def n_tx(self) -> int:
        return self.rotated_channels.shape[1]

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.power_budget))

    def halfspaces(self):
        """Linear description: rows g_j with Re(g_j^H x) >= r_j.

        Two rows per user for M >= 4, one per user for BPSK.
        """
        u = self.rotated_channels
        if self.psk_order == 2:
            return u.copy(), self.thresholds.copy()
        t = self.tan_phi
        g = np.concatenate([u * (t - 1j), u * (t + 1j)], axis=0)
        r = np.concatenate([self.thresholds * t, self.thresholds * t])
        return g, r

    def rotated_values(self, x) -> np.ndarray:
        return self.rotated_channels.conj() @ np.asarray(x, dtype=np.complex128)

    def margins(self, x) -> np.ndarray:
        """Per-user signed distance-like slack to the nearest CI boundary."""
        y = self.rotated_values(x)
        if self.psk_order == 2:
            return np.real(y) - self.thresholds
        return (np.real(y) - self.thresholds) * self.tan_phi - np.abs(np.imag(y))

    def power_margin(self, x) -> float:
        x = np.asarray(x, dtype=np.complex128)
        return float(self.power_budget - np.real(x.conj() @ x))


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    per_user_margins: np.ndarray = field(compare=False)
    power_margin: float


def build_constraints(scenario: Scenario, channels, symbols, gammas) -> CiConstraintSet:
    """Assemble the CI constraint set for given channels, symbols and SNR targets."""
    channels = [np.asarray(h, dtype=np.complex128) for h in channels]
    gammas = np.asarray(gammas, dtype=float)
    k = len(channels)
    if not (len(symbols) == k and gammas.shape == (k,) and scenario.n_users == k):
        raise ContractViolation(
            f"need matching channels/symbols/gammas/users, got {len(channels)}/"
            f"{len(symbols)}/{gammas.shape[0]}/{scenario.n_users}"
        )
    if np.any(gammas < 0):
        raise ContractViolation("SNR targets must be nonnegative")
    rotated = np.stack([h * s.value for h, s in zip(channels, symbols)]) if k else np.zeros(
        (0, scenario.n_tx), dtype=np.complex128
    )
    thresholds = np.sqrt(np.asarray(scenario.user_noise_vars) * gammas) if k else np.zeros(0)
    order = scenario.psk_order
    tan_phi = float("inf") if order == 2 else tan(pi / order)
    return CiConstraintSet(
        rotated_channels=rotated,
        thresholds=thresholds,
        tan_phi=tan_phi,
        power_budget=float(scenario.power_budget),
        psk_order=order,
    )


def check_feasible(cs: CiConstraintSet, x, tol: float = FEASIBILITY_TOL) -> FeasibilityReport:
    margins = cs.margins(x)
    pm = cs.power_margin(x)
    ok = bool(np.all(margins >= -tol) and pm >= -tol)
    return FeasibilityReport(feasible=ok, per_user_margins=margins, power_margin=pm)


def ci_implies_snr(cs: CiConstraintSet, x, k: int) -> bool:
    """CI feasibility forces SNR_k >= Gamma_k: Re of the rotated value already
    exceeds sqrt(sigma^2 Gamma), and the modulus can only be larger."""
    y = cs.rotated_values(x)[k]
    need = cs.thresholds[k] ** 2
    return bool(abs(y) ** 2 >= need * (1.0 - 1e-9))


def verify_snr_targets(scenario: Scenario, channels, x, gammas, rel_tol: float = 1e-9):
    """Measured per-user SNR against targets; returns (snrs, all_met)."""
    gammas = np.asarray(gammas, dtype=float)
    snrs = np.array([snr_user(scenario, h, x, user=i) for i, h in enumerate(channels)])
    return snrs, bool(np.all(snrs >= gammas * (1.0 - rel_tol)))
