"""Unit system, physical constants and the radial Fourier transform.

Natural units hbar = c = m_e = 1 are used throughout: energies are in m_e c^2,
lengths in electron Compton wavelengths (hbar / m_e c).  The Fourier
convention is the unitary one,

    f^(k) = (2 pi)^{-3/2} \\int d^3x e^{-i k.x} f(x),

so that the transform of 1/|x| is sqrt(2/pi)/|k|^2.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError

ALPHA = 7.2973525693e-3
ELECTRON_COMPTON_FM = 386.15926796
ELECTRON_MASS_EV = 510998.95
MUON_MASS = 206.7682830
PROTON_MASS = 1836.15267343
EULER_GAMMA = float(np.euler_gamma)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
FOURIER_NORM = (2.0 * math.pi) ** -1.5


@dataclasses.dataclass(frozen=True)
class Constants:
    """Immutable bundle of the constants threaded through a computation.

    Parameters
    ----------
    alpha : float
        Fine-structure constant.
    m_eff : float
        Mass of the bound particle in electron masses (1 for electrons).
    electron_compton_fm : float
        One natural length unit expressed in femtometres.
    electron_mass_ev : float
        m_e c^2 in eV, used only to convert reported energies.
    """

    alpha: float = ALPHA
    m_eff: float = 1.0
    electron_compton_fm: float = ELECTRON_COMPTON_FM
    electron_mass_ev: float = ELECTRON_MASS_EV
    euler_gamma: float = dataclasses.field(default=EULER_GAMMA, init=False)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.m_eff > 0.0:
            raise DomainError(f"m_eff must be positive, got {self.m_eff}")
        if not self.electron_compton_fm > 0.0:
            raise DomainError("electron_compton_fm must be positive")

    @classmethod
    def from_dict(cls, data):
        """Build from a JSON config block; unknown keys are rejected."""
        data = dict(data or {})
        allowed = {"alpha", "m_eff", "electron_compton_fm", "electron_mass_ev"}
        unknown = set(data) - allowed
        if unknown:
            raise DomainError(f"unknown constants keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "m_eff": self.m_eff,
            "electron_compton_fm": self.electron_compton_fm,
            "electron_mass_ev": self.electron_mass_ev,
        }

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def reduced_mass(particle_mass, nucleus_mass=PROTON_MASS):
    """Two-body reduced mass, all masses in electron-mass units."""
    return particle_mass * nucleus_mass / (particle_mass + nucleus_mass)


def muonic_constants(reduced=True, nucleus_mass=PROTON_MASS, **overrides):
    """Constants for a muon bound to a nucleus (reduced mass by default)."""
    m = reduced_mass(MUON_MASS, nucleus_mass) if reduced else MUON_MASS
    return Constants(m_eff=m, **overrides)


def fm_to_natural(length_fm, constants=None):
    """Convert femtometres to electron Compton wavelengths."""
    constants = constants or Constants()
    if length_fm < 0:
        raise DomainError(f"length must be non-negative, got {length_fm}")
    return length_fm / constants.electron_compton_fm


def fourier_radial(f, k, r_tail=20.0, n_cycles=40, n_avg=20, tol=1e-9):
    """Unitary 3D Fourier transform of a spherically symmetric function.

    Computes sqrt(2/pi)/k * int_0^inf r sin(kr) f(r) dr.  The integral is split
    at the zeros of sin(kr); beyond ``r_tail`` the half-cycle partial sums are
    accelerated by repeated averaging, which also assigns the Abel value to
    integrands such as r * (1/r) that do not decay.

    Parameters
    ----------
    f : callable
        Radial profile, vectorised or scalar.  Never evaluated at r = 0.
    k : float
        Wavenumber, k >= 0.
    r_tail : float
        Radius after which f is assumed smooth and slowly varying.
    tol : float
        Absolute tolerance on the unnormalised integral.

    Raises
    ------
    QuadratureError
        If the averaged partial sums have not settled to ``tol``.
    """
    if k < 0:
        raise DomainError(f"wavenumber must be non-negative, got {k}")
    if k == 0:
        val, err = integrate.quad(lambda r: r * r * f(r), 0.0, np.inf,
                                  epsabs=1e-15, epsrel=1e-12, limit=500)
        if not err <= max(tol, 1e-10 * abs(val)):
            raise QuadratureError("k = 0 moment integral did not converge", err)
        return SQRT_2_OVER_PI * val

    total, err = oscillatory_integral(lambda r: r * f(r) * math.sin(k * r), math.pi / k,
                                      r_tail, n_cycles, n_avg)
    if not err <= max(tol, 1e-10 * abs(total)):
        raise QuadratureError(f"radial Fourier transform at k={k} did not settle", err)
    return SQRT_2_OVER_PI * total / k


def oscillatory_integral(g, half_period, r_tail=20.0, n_cycles=40, n_avg=20):
    """int_0^inf g(r) dr for g oscillating with the given half period.

    Each half period is integrated adaptively; past ``r_tail`` the partial
    sums are smoothed by ``n_avg`` rounds of neighbour averaging (an Euler
    transform for alternating series).  Returns ``(value, error_estimate)``.
    """
    first = int(math.ceil(r_tail / half_period))
    pieces = np.empty(first + n_cycles)
    err = 0.0
    for j in range(first + n_cycles):
        pieces[j], e = integrate.quad(g, j * half_period, (j + 1) * half_period,
                                      epsabs=1e-16, epsrel=1e-13, limit=200)
        err += e
    sums = np.cumsum(pieces)[first:]
    for _ in range(n_avg):
        sums = 0.5 * (sums[1:] + sums[:-1])
    err += abs(sums[-1] - sums[-2])
    return sums[-1], err
