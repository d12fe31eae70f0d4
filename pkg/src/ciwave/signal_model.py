"""Array model, clutter statistics, radar SINR and the MVDR receive filter.

Conventions, fixed once here:

* Transmit/receive steering for a half-wavelength ULA:
  ``a(theta)[n] = exp(-j*pi*n*sin(theta)) / sqrt(N)``.
* The two-way steering matrix is ``U(theta) = a_r(theta) a_t(theta)^T``
  with a plain transpose, not a conjugate transpose.  The transmit
  beampattern therefore samples ``|a_t(theta)^T x|^2``.
* All powers are linear and normalized so the radar noise variance is the
  unit: configuration values in dB convert once at ingestion via
  ``10**(dB/10)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import pi

import numpy as np

from .errors import ContractViolation, DegenerateGeometry
from .numerics import herm_solve


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * np.log10(value)


@dataclass(frozen=True)
class Scenario:
    """Physical parameters of one radar-communication setup.

    Angles are radians in (-pi/2, pi/2); powers and variances are linear,
    normalized to the radar noise variance.
    """

    n_tx: int
    n_rx: int
    target_angle: float
    target_power: float
    clutter_angles: tuple = ()
    clutter_powers: tuple = ()
    radar_noise_var: float = 1.0
    user_noise_vars: tuple = (1.0,)
    power_budget: float = 1000.0
    psk_order: int = 4

    def __post_init__(self):
        object.__setattr__(self, "clutter_angles", tuple(float(a) for a in self.clutter_angles))
        object.__setattr__(self, "clutter_powers", tuple(float(p) for p in self.clutter_powers))
        object.__setattr__(self, "user_noise_vars", tuple(float(v) for v in self.user_noise_vars))
        if self.n_tx < 1 or self.n_rx < 1:
            raise ContractViolation("antenna counts must be positive")
        if len(self.clutter_angles) != len(self.clutter_powers):
            raise ContractViolation("clutter angle and power lists must have equal length")
        for label, angle in [("target", self.target_angle)] + [
            ("clutter", a) for a in self.clutter_angles
        ]:
            if not -pi / 2 < angle < pi / 2:
                raise ContractViolation(f"{label} angle {angle} outside (-pi/2, pi/2)")
        for label, val in (
            [("target_power", self.target_power), ("radar_noise_var", self.radar_noise_var),
             ("power_budget", self.power_budget)]
            + [("clutter_power", p) for p in self.clutter_powers]
            + [("user_noise_var", v) for v in self.user_noise_vars]
        ):
            if not val > 0:
                raise ContractViolation(f"{label} must be positive, got {val}")
        m = self.psk_order
        if m < 2 or (m & (m - 1)) != 0:
            raise ContractViolation(f"psk_order must be a power of two >= 2, got {m}")

    @property
    def n_users(self) -> int:
        return len(self.user_noise_vars)

    @property
    def n_clutter(self) -> int:
        return len(self.clutter_angles)

    @property
    def mu(self) -> float:
        """Target power-to-noise ratio multiplying the radar SINR."""
        return self.target_power / self.radar_noise_var

    @property
    def clutter_b(self) -> tuple:
        return tuple(p / self.radar_noise_var for p in self.clutter_powers)


@dataclass(frozen=True)
class SteeringMatrix:
    """Rank-one two-way array response at one angle."""

    angle: float
    matrix: np.ndarray = field(compare=False)


@lru_cache(maxsize=4096)
def _steering(n: int, angle: float) -> np.ndarray:
    v = np.exp(-1j * pi * np.arange(n) * np.sin(angle)) / np.sqrt(n)
    v.flags.writeable = False
    return v


def steering_tx(scenario: Scenario, angle: float) -> np.ndarray:
    """Unit-norm transmit steering vector a_t(angle)."""
    return _steering(scenario.n_tx, float(angle))


def steering_rx(scenario: Scenario, angle: float) -> np.ndarray:
    """Unit-norm receive steering vector a_r(angle)."""
    return _steering(scenario.n_rx, float(angle))


def steering_matrix(scenario: Scenario, angle: float) -> SteeringMatrix:
    """Two-way response U(angle) = a_r(angle) a_t(angle)^T (note: transpose)."""
    a_r = steering_rx(scenario, angle)
    a_t = steering_tx(scenario, angle)
    return SteeringMatrix(angle=float(angle), matrix=np.outer(a_r, a_t))


def _clutter_gains(scenario: Scenario, x: np.ndarray) -> np.ndarray:
    """Per-source received amplitudes a_t(theta_i)^T x."""
    if scenario.n_clutter == 0:
        return np.zeros(0, dtype=np.complex128)
    return np.array([steering_tx(scenario, th) @ x for th in scenario.clutter_angles])


def clutter_covariance(scenario: Scenario, x) -> np.ndarray:
    """Sigma(x) = sum_i b_i U_i x x^H U_i^H, normalized by the noise variance.

    Each term is rank one: U_i x = (a_t_i^T x) a_r_i.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.shape != (scenario.n_tx,):
        raise ContractViolation(f"waveform shape {x.shape} does not match n_tx={scenario.n_tx}")
    sigma = np.zeros((scenario.n_rx, scenario.n_rx), dtype=np.complex128)
    gains = _clutter_gains(scenario, x)
    for b, th, g in zip(scenario.clutter_b, scenario.clutter_angles, gains):
        a_r = steering_rx(scenario, th)
        sigma += (b * abs(g) ** 2) * np.outer(a_r, a_r.conj())
    return 0.5 * (sigma + sigma.conj().T)


def _whitened_rx_gain(scenario: Scenario, x) -> float:
    """a_r0^H [Sigma(x)+I]^{-1} a_r0, the scalar that sets Phi(x)."""
    sigma = clutter_covariance(scenario, x)
    a_r = steering_rx(scenario, scenario.target_angle)
    sol = herm_solve(sigma + np.eye(scenario.n_rx), a_r)
    return float(np.real(a_r.conj() @ sol))


def sinr_matrix(scenario: Scenario, x) -> np.ndarray:
    """Phi(x) = U0^H [Sigma(x)+I]^{-1} U0; rank one because U0 is."""
    a_t = steering_tx(scenario, scenario.target_angle)
    gain = _whitened_rx_gain(scenario, x)
    return gain * np.outer(a_t.conj(), a_t)


def sinr_quadratic(scenario: Scenario, x) -> float:
    """mu * x^H Phi(x) x, the radar SINR achieved with the MVDR filter."""
    x = np.asarray(x, dtype=np.complex128)
    a_t = steering_tx(scenario, scenario.target_angle)
    return scenario.mu * _whitened_rx_gain(scenario, x) * abs(a_t @ x) ** 2


def objective_gradient(scenario: Scenario, x) -> np.ndarray:
    """Exact gradient of f(x) = -x^H Phi(x) x, including the clutter term.

    The frozen-Phi linearization uses -2 Phi x alone; the full derivative
    adds the sensitivity of the whitened receive gain to the clutter power
    the waveform deposits at each interferer angle.
    """
    x = np.asarray(x, dtype=np.complex128)
    a_t = steering_tx(scenario, scenario.target_angle)
    a_r = steering_rx(scenario, scenario.target_angle)
    sigma = clutter_covariance(scenario, x)
    v = herm_solve(sigma + np.eye(scenario.n_rx), a_r)
    gain = float(np.real(a_r.conj() @ v))
    ux = a_t @ x
    grad = -2.0 * gain * ux * a_t.conj()
    q = abs(ux) ** 2
    for b, th in zip(scenario.clutter_b, scenario.clutter_angles):
        a_ti = steering_tx(scenario, th)
        a_ri = steering_rx(scenario, th)
        coupling = abs(a_ri.conj() @ v) ** 2
        grad += q * 2.0 * b * coupling * (a_ti @ x) * a_ti.conj()
    return grad


def mvdr_beamformer(scenario: Scenario, x) -> np.ndarray:
    """Distortionless minimum-variance receive filter for waveform x."""
    x = np.asarray(x, dtype=np.complex128)
    u0 = steering_matrix(scenario, scenario.target_angle).matrix
    ux = u0 @ x
    sigma = clutter_covariance(scenario, x)
    sol = herm_solve(sigma + np.eye(scenario.n_rx), ux)
    denom = np.real(ux.conj() @ sol)
    if denom < 1e-12:
        raise DegenerateGeometry(
            f"target response U0 x is numerically null (quadratic form {denom:.3e})"
        )
    return sol / denom


def sinr_rad(scenario: Scenario, x, w) -> float:
    """Radar output SINR for waveform x and receive filter w."""
    x = np.asarray(x, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    if np.linalg.norm(w) == 0:
        raise ContractViolation("receive filter w must be nonzero")
    u0 = steering_matrix(scenario, scenario.target_angle).matrix
    sigma = clutter_covariance(scenario, x)
    num = scenario.mu * abs(w.conj() @ (u0 @ x)) ** 2
    den = np.real(w.conj() @ ((sigma + np.eye(scenario.n_rx)) @ w))
    return float(num / den)


def snr_user(scenario: Scenario, h_k, x, user: int = 0) -> float:
    """Receive SNR |h_k^H x|^2 / sigma_k^2 for one communication user."""
    h_k = np.asarray(h_k, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    if h_k.shape != x.shape:
        raise ContractViolation(f"channel shape {h_k.shape} does not match waveform {x.shape}")
    return float(abs(h_k.conj() @ x) ** 2 / scenario.user_noise_vars[user])


def transmit_beampattern(scenario: Scenario, waveforms, angles) -> np.ndarray:
    """Average radiated power |a_t(theta)^T x|^2 over the given waveforms."""
    waveforms = [np.asarray(x, dtype=np.complex128) for x in waveforms]
    if not waveforms:
        raise ContractViolation("need at least one waveform")
    angles = np.asarray(angles, dtype=float)
    xs = np.stack(waveforms)
    out = np.zeros(angles.shape, dtype=float)
    for i, th in enumerate(angles.ravel()):
        a_t = steering_tx(scenario, float(th))
        out.ravel()[i] = np.mean(np.abs(xs @ a_t) ** 2)
    return out
