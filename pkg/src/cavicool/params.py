"""Physical parameters, derived coupling constants and analytic steady states.

Unit convention (fixed throughout the package):

    hbar = k = omega_R = 1   with omega_R = hbar k^2 / 2m  =>  m = 1/2

so positions are measured in 1/k, momenta in hbar*k, energies in
hbar*omega_R, and every rate (kappa, Gamma, g0, detunings, pump
amplitudes) in omega_R.  With m = 1/2 the kinetic energy is simply p^2
and the velocity is xdot = 2p.

A two-level particle with transition coupling g(x) = g0*cos(x) sits in a
single lossy standing-wave mode.  After adiabatic elimination of the
internal state the per-photon saturation, dispersive shift, absorptive
rate and effective transverse pump are

    s       = g0^2 / (delta_a^2 + gamma^2)
    u0      = s * delta_a
    gamma0  = s * gamma
    eta_eff = omega * g0 * delta_a / (delta_a^2 + gamma^2)

and the optical potential seen by the particle is

    V(x) = u0*|alpha|^2*cos^2(x) + 2*eta_eff*Re(alpha)*cos(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

MASS = 0.5          # particle mass in the hbar = k = omega_R = 1 system
UBAR_SQ_DEFAULT = 0.4  # mean squared projection of emission direction on the axis


@dataclass(frozen=True)
class SystemParams:
    """All physical rates and drives of a run, in recoil units.

    Exactly one of the transverse-pump descriptions must be given:
    either the bare Rabi frequency ``omega`` or the effective pump
    ``eta_eff`` (the other is derived).  Longitudinal-only setups use
    ``omega = 0``.
    """

    kappa: float                 # cavity decay rate
    gamma: float                 # spontaneous emission rate
    g0: float                    # atom-field coupling
    delta_a: float               # pump - atom detuning
    delta_c: float               # pump - cavity detuning
    eta_l: float                 # longitudinal pump amplitude
    omega: float | None = None   # transverse Rabi frequency
    eta_eff: float | None = None # effective transverse pump (alternative to omega)
    ubar_sq: float = UBAR_SQ_DEFAULT

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.g0 < 0:
            raise ValueError(f"g0 must be >= 0, got {self.g0}")
        if self.eta_l < 0:
            raise ValueError(f"eta_l must be >= 0, got {self.eta_l}")
        if not 0.0 <= self.ubar_sq <= 1.0:
            raise ValueError(f"ubar_sq must lie in [0, 1], got {self.ubar_sq}")
        if (self.omega is None) == (self.eta_eff is None):
            raise ValueError("exactly one of omega / eta_eff must be given")
        if self.omega is not None and self.omega < 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")

    def with_values(self, **kw) -> "SystemParams":
        """Copy with fields replaced; used by the scan grid."""
        return replace(self, **kw)


@dataclass(frozen=True)
class DerivedParams:
    """Per-photon coupling constants computed once from SystemParams."""

    u0: float        # dispersive cavity shift per photon
    gamma0: float    # absorptive rate per photon
    eta_eff: float   # effective transverse pump
    s: float         # saturation per photon


def derive(p: SystemParams) -> DerivedParams:
    """Adiabatic-elimination constants u0, gamma0, eta_eff and s.

    Rejects the degenerate on-resonance lossless atom delta_a = gamma = 0,
    for which the eliminated coherence has no steady state.
    """
    denom = p.delta_a ** 2 + p.gamma ** 2
    if denom == 0.0:
        raise ValueError("delta_a = gamma = 0 is unphysical (no atomic steady state)")
    s = p.g0 ** 2 / denom
    u0 = s * p.delta_a
    gamma0 = s * p.gamma
    if p.eta_eff is not None:
        eta_eff = p.eta_eff
    else:
        eta_eff = p.omega * p.g0 * p.delta_a / denom
    return DerivedParams(u0=u0, gamma0=gamma0, eta_eff=eta_eff, s=s)


def omega_from_eta_eff(p: SystemParams) -> float:
    """Back-compute the Rabi frequency when eta_eff was specified directly.

    Needed only by total_intensity().  eta_eff != 0 with delta_a = 0 or
    g0 = 0 is contradictory (the scattering channel vanishes).
    """
    if p.omega is not None:
        return p.omega
    if p.eta_eff == 0.0:
        return 0.0
    if p.delta_a == 0.0 or p.g0 == 0.0:
        raise ValueError("eta_eff != 0 requires delta_a != 0 and g0 != 0")
    return p.eta_eff * (p.delta_a ** 2 + p.gamma ** 2) / (p.g0 * p.delta_a)


def potential(x: float, alpha: complex, d: DerivedParams) -> float:
    """Optical potential V(x) = u0|a|^2 cos^2(x) + 2 eta_eff Re(a) cos(x)."""
    c = math.cos(x)
    return d.u0 * abs(alpha) ** 2 * c * c + 2.0 * d.eta_eff * alpha.real * c


def force(x: float, alpha: complex, d: DerivedParams) -> float:
    """Dipole force -dV/dx = u0|a|^2 sin(2x) + 2 eta_eff Re(a) sin(x)."""
    return (d.u0 * abs(alpha) ** 2 * math.sin(2.0 * x)
            + 2.0 * d.eta_eff * alpha.real * math.sin(x))


def steady_state_alpha(x: float, p: SystemParams, d: DerivedParams,
                       simplified: bool = False) -> complex:
    """Field fixed point at frozen position x with the noise switched off.

        alpha_st = (eta_l - i eta_eff cos x)
                   / (kappa + gamma0 cos^2 x - i (delta_c - u0 cos^2 x))

    ``simplified=True`` drops the absorptive gamma0 term, which recovers
    the textbook intensity estimate |alpha_st|^2 = eta^2/(kappa^2 + delta_eff^2)
    for a purely longitudinal pump.
    """
    if p.kappa <= 0.0:
        raise ValueError("steady_state_alpha requires kappa > 0")
    c = math.cos(x)
    loss = p.kappa if simplified else p.kappa + d.gamma0 * c * c
    det = p.delta_c - d.u0 * c * c
    return (p.eta_l - 1j * d.eta_eff * c) / (loss - 1j * det)


def predicted_temperature(p: SystemParams, delta_eff: float) -> float:
    """Cavity-cooling temperature estimate k_B T = (kappa^2 + delta_eff^2)/(4|delta_eff|).

    Diverges at delta_eff = 0 (no cooling channel), hence rejected.
    Minimised at |delta_eff| = kappa where it equals min_temperature().
    """
    if delta_eff == 0.0:
        raise ValueError("delta_eff = 0 has no stationary temperature")
    return (p.kappa ** 2 + delta_eff ** 2) / (4.0 * abs(delta_eff))


def min_temperature(p: SystemParams) -> float:
    """Lower bound k_B T_min = kappa/2 of the cavity-cooling temperature."""
    return p.kappa / 2.0


def total_intensity(x: float, alpha: complex, p: SystemParams) -> float:
    """Total light intensity |alpha cos(x) + omega/g0|^2 at the particle.

    Includes the interference between the cavity field and the transverse
    pump; the pure mode intensity is |alpha|^2 cos^2(x).
    """
    if p.g0 <= 0.0:
        raise ValueError("total_intensity requires g0 > 0")
    w = omega_from_eta_eff(p)
    return abs(alpha * math.cos(x) + w / p.g0) ** 2
