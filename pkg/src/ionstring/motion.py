"""Wavefront probing of hot axial motion with CPMG sequences.

Semiclassical model: an ion oscillating along the trap axis sees a
phase-modulated drive whenever the beam's wavevector has a component
k_z along the axis. A train of N_p alternating pi-pulses separated by
T_wait accumulates the phase

    Phi = k_z a [ sin(w t_i) A_Np(x) + cos(w t_i) B_Np(x) ],  x = w T_wait,

with trigonometric coefficient sums A_Np, B_Np, and excites the qubit
to (1 - cos Phi)/2. Averaging over a thermal motional distribution at
temperature T gives

    e = 1/2 (1 - exp(-kB T k_z^2 C^2 / (2 m w^2))),   C^2 = A^2 + B^2,

where C^2 also has the closed form
4 (sin((Np+1)(x+pi)/2) / tan((x+pi)/2))^2, peaking at 4 (Np+1)^2 for x
an odd multiple of pi.

Quantum model: a two-level system coupled to one harmonic mode through
H = w (a+ a + 1/2) + (Omega/2)(e^(i eta (a + a+)) s+ e^(-i Delta t)
+ h.c.), evolved exactly through the finite-duration pulse train in a
truncated Fock basis and averaged over a thermal distribution. This
reproduces the intermediate peaks at full trap periods that appear
when Omega is comparable to the trap frequency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import eval_chebyu

from ionstring.constants import HBAR, KB
from ionstring.errors import FockCutoffError

_CUTOFF_MARGIN = 50


@dataclass(frozen=True)
class SemiclassicalParams:
    """Inputs of the thermal point-particle model (SI units)."""

    omega: float
    t_wait: float
    n_pulses: int
    k_z: float
    temperature: float
    mass: float

    def __post_init__(self):
        if min(self.omega, self.t_wait, self.mass) <= 0:
            raise ValueError("omega, t_wait, and mass must be positive")
        if self.temperature < 0 or self.k_z < 0:
            raise ValueError("temperature and k_z must be >= 0")
        if self.n_pulses < 1:
            raise ValueError("n_pulses must be >= 1")


@dataclass(frozen=True)
class PhaseCoefficients:
    """A, B sums and C^2 by both evaluation routes."""

    a: np.ndarray
    b: np.ndarray
    c2: np.ndarray
    c2_closed: np.ndarray


def phase_coefficients(n_pulses: int, x) -> PhaseCoefficients:
    """Coefficient sums of the accumulated phase at x = omega * T_wait.

    ``c2`` comes from the direct trigonometric sums, ``c2_closed`` from
    the closed form, evaluated through the Chebyshev identity
    sin((Np+1)u)/sin(u) = U_Np(cos u) so that the removable
    singularities at odd multiples of pi take their limit values.
    """
    x = np.asarray(x, dtype=float)
    n = np.arange(1, n_pulses + 1)
    sign = (-1.0) ** n
    a = (
        1.0
        + 2.0 * np.einsum("n,n...->...", sign, np.cos(np.multiply.outer(n, x)))
        + (-1.0) ** (n_pulses + 1) * np.cos((n_pulses + 1) * x)
    )
    b = (
        2.0 * np.einsum("n,n...->...", sign, np.sin(np.multiply.outer(n, x)))
        + (-1.0) ** (n_pulses + 1) * np.sin((n_pulses + 1) * x)
    )
    u = 0.5 * (x + np.pi)
    ratio = eval_chebyu(n_pulses, np.cos(u)) * np.cos(u)
    return PhaseCoefficients(a=a, b=b, c2=a**2 + b**2, c2_closed=4.0 * ratio**2)


def peak_c2(n_pulses: int) -> float:
    """Maximum of C^2, reached when omega*T_wait is an odd multiple of pi."""
    return 4.0 * (n_pulses + 1) ** 2


def trajectory_excitation(
    n_pulses: int,
    omega: float,
    t_wait: float,
    k_z: float,
    amplitude: float,
    t_start: float,
) -> float:
    """Excitation for one fixed classical trajectory z(t) = a sin(w t).

    Uses the accumulated-phase form with the A/B coefficient sums; the
    independent check is a chain of 2x2 rotation matrices.
    """
    coeff = phase_coefficients(n_pulses, omega * t_wait)
    phi = k_z * amplitude * (
        np.sin(omega * t_start) * coeff.a + np.cos(omega * t_start) * coeff.b
    )
    return float(0.5 * (1.0 - np.cos(phi)))


def thermal_excitation(params: SemiclassicalParams) -> float:
    """Thermally averaged excitation after the pulse train, in [0, 1/2]."""
    c2 = phase_coefficients(params.n_pulses, params.omega * params.t_wait).c2_closed
    exponent = (
        KB
        * params.temperature
        * params.k_z**2
        * c2
        / (2.0 * params.mass * params.omega**2)
    )
    return float(0.5 * (1.0 - np.exp(-exponent)))


def peak_excitation(params: SemiclassicalParams) -> float:
    """Excitation at the C^2 maximum (T_wait at odd half trap periods)."""
    exponent = (
        2.0
        * KB
        * params.temperature
        * params.k_z**2
        * (params.n_pulses + 1) ** 2
        / (params.mass * params.omega**2)
    )
    return float(0.5 * (1.0 - np.exp(-exponent)))


def infer_k_z(
    e_max: float,
    omega: float,
    n_pulses: int,
    temperature: float,
    mass: float,
) -> float:
    """Invert the peak-excitation formula for the axial wavevector."""
    if not 0.0 < e_max < 0.5:
        raise ValueError("peak excitation must lie strictly between 0 and 1/2 (model saturates at 1/2)")
    if temperature <= 0:
        raise ValueError("temperature must be positive to infer a tilt")
    exponent = -np.log(1.0 - 2.0 * e_max)
    return float(
        np.sqrt(exponent * mass * omega**2 / (2.0 * KB * temperature * (n_pulses + 1) ** 2))
    )


def infer_tilt(
    e_max: float,
    omega: float,
    n_pulses: int,
    temperature: float,
    mass: float,
    k_total: float,
) -> float:
    """Wavefront tilt angle (rad) explaining a measured peak excitation."""
    k_z = infer_k_z(e_max, omega, n_pulses, temperature, mass)
    if k_z > k_total:
        raise ValueError("inferred k_z exceeds the full wavevector")
    return float(np.arcsin(k_z / k_total))


def curvature_radius(alpha_first: float, alpha_last: float, span: float) -> float:
    """Wavefront curvature radius R = span / |tilt difference|.

    A vanishing tilt difference means flat wavefronts; infinity is
    returned in that case.
    """
    d_alpha = abs(alpha_last - alpha_first)
    if d_alpha == 0.0:
        return float("inf")
    return float(span / d_alpha)


def temperature_from_nbar(nbar: float, omega: float) -> float:
    """Temperature whose mean thermal energy equals (nbar + 1/2) hbar w."""
    return HBAR * omega * (nbar + 0.5) / KB


@dataclass(frozen=True)
class WavefrontGeometry:
    """Per-ion tilt angles with the derived curvature radius."""

    tilts: np.ndarray
    span: float

    @property
    def radius(self) -> float:
        return curvature_radius(self.tilts[0], self.tilts[-1], self.span)


@dataclass(frozen=True)
class SpinMotionParams:
    """Inputs of the quantum spin-motion solver.

    ``eta`` is the Lamb-Dicke parameter along the motion axis (wavefront
    tilt enters as eta = sin(alpha) k sqrt(hbar/(2 m w))), ``rabi`` and
    ``detuning`` the drive parameters, ``nbar`` the thermal mean phonon
    number, and ``fock_cutoff`` the basis truncation, which must obey
    the adequacy rule cutoff >= 5 nbar + 20.
    """

    eta: float
    rabi: float
    omega: float
    detuning: float = 0.0
    nbar: float = 0.0
    fock_cutoff: int = 100

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.rabi <= 0 or self.omega <= 0:
            raise ValueError("rabi and omega must be positive")
        if self.nbar < 0:
            raise ValueError("nbar must be >= 0")
        if self.fock_cutoff < 5 * self.nbar + 20:
            raise ValueError(
                f"fock_cutoff {self.fock_cutoff} violates the adequacy rule "
                f">= 5*nbar + 20 = {5 * self.nbar + 20:.0f}"
            )

    @property
    def pi_time(self) -> float:
        return np.pi / self.rabi


@dataclass(frozen=True)
class QuantumScanResult:
    """Thermal CPMG excitation curve with truncation bookkeeping."""

    t_wait: np.ndarray
    excitation: np.ndarray
    truncated_weight: float
    max_leak: float
    max_norm_error: float
    fock_cutoff: int


def _thermal_weights(nbar: float, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)
    if nbar == 0:
        w = np.zeros(n_max + 1)
        w[0] = 1.0
        return w
    r = nbar / (nbar + 1.0)
    return r**n / (nbar + 1.0)


def _pulse_propagators(params: SpinMotionParams):
    """Eigen-factorized pulse Hamiltonian; phases enter by conjugation."""
    dim = params.fock_cutoff + 1
    n = np.arange(dim)
    h_motion = params.omega * (n + 0.5)

    ladder = np.sqrt(n[1:])
    x = np.zeros((dim, dim))
    x[np.arange(dim - 1), np.arange(1, dim)] = ladder
    x += x.T
    xe, xv = np.linalg.eigh(x)
    displacement = (xv * np.exp(1j * params.eta * xe)[None, :]) @ xv.conj().T

    h = np.zeros((2 * dim, 2 * dim), dtype=complex)
    h[:dim, :dim] = np.diag(h_motion - 0.5 * params.detuning)
    h[dim:, dim:] = np.diag(h_motion + 0.5 * params.detuning)
    h[:dim, dim:] = 0.5 * params.rabi * displacement
    h[dim:, :dim] = 0.5 * params.rabi * displacement.conj().T
    energies, vectors = np.linalg.eigh(h)

    def propagator(duration: float) -> np.ndarray:
        return (vectors * np.exp(-1j * energies * duration)[None, :]) @ vectors.conj().T

    wait_diag = np.concatenate(
        [h_motion - 0.5 * params.detuning, h_motion + 0.5 * params.detuning]
    )
    return propagator, wait_diag


def _apply_pulse(u0: np.ndarray, phase: float, psi: np.ndarray, dim: int) -> np.ndarray:
    """W(phase) U0 W(phase)^dag applied to the state stack."""
    if phase == 0.0:
        return u0 @ psi
    up = np.exp(-0.5j * phase)
    w = np.concatenate([np.full(dim, up), np.full(dim, up.conjugate())])
    return w[:, None] * (u0 @ (w.conj()[:, None] * psi))


def quantum_cpmg_scan(
    params: SpinMotionParams,
    n_pulses: int,
    t_wait_values,
    initial_fock: int | None = None,
    thermal_tail: float = 1e-4,
    leak_tol: float = 1e-6,
) -> QuantumScanResult:
    """Excitation vs pi-pulse spacing for the full quantum model.

    The sequence is pi/2 - [wait, pi] x n_pulses - pi/2 with half-length
    free gaps at both ends; ``t_wait`` is the start-to-start separation
    of consecutive pi-pulses, so every value must exceed the pi-time.
    Pulses rotate about +/-x alternately, the embedding pi/2-pulses
    about -y and +y, all with the finite duration pi/rabi (pi/2-pulses
    half of it).

    Initial states are Fock states |down, n> weighted by a thermal
    distribution of mean ``nbar``, truncated once its cumulative weight
    reaches 1 - ``thermal_tail`` (or at the cutoff margin, whichever is
    lower) and renormalized; the clipped weight is reported, never
    silently dropped. Passing ``initial_fock`` evolves that single Fock
    state instead.

    Raises
    ------
    FockCutoffError
        If population at the truncation boundary exceeds ``leak_tol``.
    """
    t_wait = np.atleast_1d(np.asarray(t_wait_values, dtype=float))
    t_pi = params.pi_time
    if np.any(t_wait < t_pi):
        raise ValueError(
            f"t_wait below the pi-time {t_pi:.3e}; pulses would overlap"
        )

    dim = params.fock_cutoff + 1
    if initial_fock is not None:
        if not 0 <= initial_fock <= params.fock_cutoff - _CUTOFF_MARGIN:
            raise ValueError(
                f"initial Fock state must stay {_CUTOFF_MARGIN} below the cutoff"
            )
        init_levels = np.array([initial_fock])
        weights = np.ones(1)
        truncated = 0.0
    else:
        hard_cap = max(0, params.fock_cutoff - _CUTOFF_MARGIN)
        w_full = _thermal_weights(params.nbar, hard_cap)
        cumulative = np.cumsum(w_full)
        hits = np.nonzero(cumulative >= 1.0 - thermal_tail)[0]
        n_top = int(hits[0]) if hits.size else hard_cap
        weights = w_full[: n_top + 1]
        truncated = float(1.0 - weights.sum())
        weights = weights / weights.sum()
        init_levels = np.arange(n_top + 1)

    propagator, wait_diag = _pulse_propagators(params)
    u_pi = propagator(t_pi)
    u_half = propagator(0.5 * t_pi)

    psi0 = np.zeros((2 * dim, init_levels.size), dtype=complex)
    psi0[dim + init_levels, np.arange(init_levels.size)] = 1.0

    excitation = np.empty(t_wait.shape)
    max_leak = 0.0
    max_norm_error = 0.0
    for idx, tw in enumerate(t_wait):
        gap = tw - t_pi
        phase_half_gap = np.exp(-1j * wait_diag * 0.5 * gap)
        phase_full_gap = np.exp(-1j * wait_diag * gap)

        psi = _apply_pulse(u_half, 1.5 * np.pi, psi0, dim)  # pi/2 about -y
        psi = phase_half_gap[:, None] * psi
        for pulse in range(n_pulses):
            psi = _apply_pulse(u_pi, 0.0 if pulse % 2 == 0 else np.pi, psi, dim)
            if pulse < n_pulses - 1:
                psi = phase_full_gap[:, None] * psi
        psi = phase_half_gap[:, None] * psi
        psi = _apply_pulse(u_half, 0.5 * np.pi, psi, dim)  # pi/2 about +y

        boundary = [dim - 2, dim - 1, 2 * dim - 2, 2 * dim - 1]
        leak = float(np.max(np.sum(np.abs(psi[boundary, :]) ** 2, axis=0)))
        max_leak = max(max_leak, leak)
        if leak > leak_tol:
            raise FockCutoffError(
                f"population {leak:.2e} at the Fock-basis boundary exceeds "
                f"{leak_tol:.0e}; increase fock_cutoff beyond {params.fock_cutoff}"
            )
        norms = np.sum(np.abs(psi) ** 2, axis=0)
        max_norm_error = max(max_norm_error, float(np.max(np.abs(norms - 1.0))))
        p_up = np.sum(np.abs(psi[:dim, :]) ** 2, axis=0)
        excitation[idx] = float(weights @ p_up)

    return QuantumScanResult(
        t_wait=t_wait,
        excitation=excitation,
        truncated_weight=truncated,
        max_leak=max_leak,
        max_norm_error=max_norm_error,
        fock_cutoff=params.fock_cutoff,
    )
