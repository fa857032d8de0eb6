"""Spherically symmetric nuclear charge models.

Every model is normalised analytically to total charge Z and carries its
density n(r), its Fourier transform n^(k), the potential phi = |.|^{-1} * n
and phi^(k) = 4 pi n^(k) / k^2.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy import special

from .errors import DomainError, SingularityError, UnsupportedOperationError
from .units import FOURIER_NORM, Constants, fm_to_natural

KINDS = ("gaussian", "point", "uniform_ball")


@dataclasses.dataclass(frozen=True)
class NuclearModel:
    """A nuclear charge distribution.

    ``width`` is the Gaussian standard deviation ``a`` or the ball radius
    ``R``, in natural units; it is ignored for point nuclei.
    """

    kind: str
    Z: float
    width: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown nuclear model kind {self.kind!r}; expected one of {KINDS}")
        if not self.Z > 0:
            raise DomainError(f"Z must be positive, got {self.Z}")
        if self.kind != "point" and not self.width > 0:
            raise DomainError(f"{self.kind} model needs a positive width, got {self.width}")

    @classmethod
    def point(cls, Z):
        return cls("point", Z)

    @classmethod
    def gaussian(cls, Z, a):
        return cls("gaussian", Z, a)

    @classmethod
    def uniform_ball(cls, Z, R):
        return cls("uniform_ball", Z, R)

    @classmethod
    def from_descriptor(cls, desc, constants=None):
        """Build from ``{"kind", "Z", "width_fm"}`` (or ``width`` in natural units)."""
        desc = dict(desc)
        unknown = set(desc) - {"kind", "Z", "width_fm", "width"}
        if unknown:
            raise DomainError(f"unknown model keys: {sorted(unknown)}")
        if "width_fm" in desc and "width" in desc:
            raise DomainError("give either width_fm or width, not both")
        width = desc.get("width", 0.0)
        if "width_fm" in desc:
            width = fm_to_natural(desc["width_fm"], constants or Constants())
        return cls(desc["kind"], float(desc["Z"]), float(width))

    def descriptor(self):
        return {"kind": self.kind, "Z": self.Z, "width": self.width}

    def scaled(self, factor):
        """Same shape, charge multiplied by ``factor``."""
        return dataclasses.replace(self, Z=self.Z * factor)

    @property
    def is_point(self):
        return self.kind == "point"


def density(model, r):
    """Charge density n(r).  Not defined for point nuclei."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be non-negative")
    if model.kind == "point":
        raise UnsupportedOperationError("a point nucleus has no pointwise density")
    if model.kind == "gaussian":
        a = model.width
        out = model.Z * (2 * math.pi * a * a) ** -1.5 * np.exp(-r * r / (2 * a * a))
    else:
        R = model.width
        out = np.where(r <= R, 3 * model.Z / (4 * math.pi * R**3), 0.0)
    return out[()] if out.ndim == 0 else out


def _ball_form_factor(x):
    # 3 (sin x - x cos x) / x^3; below |x| = 1 the closed form cancels, use
    # the series sum_{n>=1} (-1)^{n+1} 6n x^{2n-2} / (2n+1)!
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1.0
    xs = np.where(small, 1.0, x)
    exact = 3 * (np.sin(xs) - xs * np.cos(xs)) / xs**3
    x2 = np.where(small, x * x, 0.0)
    series = np.zeros_like(x2)
    for n in range(12, 0, -1):
        series = (-1) ** (n + 1) * 6 * n / math.factorial(2 * n + 1) + x2 * series
    return np.where(small, series, exact)


def density_fourier(model, k):
    """n^(k) in the unitary convention; n^(0) = (2 pi)^{-3/2} Z."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise DomainError("wavenumber must be non-negative")
    base = FOURIER_NORM * model.Z
    if model.kind == "point":
        out = np.full_like(k, base)
    elif model.kind == "gaussian":
        out = base * np.exp(-0.5 * (model.width * k) ** 2)
    else:
        out = base * _ball_form_factor(k * model.width)
    return out[()] if out.ndim == 0 else out


def potential(model, r):
    """phi(r) = (|.|^{-1} * n)(r), positive, bounded by Z/r."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be non-negative")
    Z = model.Z
    if model.kind == "point":
        if np.any(r == 0):
            raise SingularityError("the point-nucleus potential is singular at r = 0")
        out = Z / r
    elif model.kind == "gaussian":
        a = model.width
        x = r / (a * math.sqrt(2))
        safe = np.where(x < 1e-8, 1.0, r)
        out = np.where(x < 1e-8,
                       Z * math.sqrt(2 / math.pi) / a * (1 - x * x / 3),
                       Z * special.erf(x) / safe)
    else:
        R = model.width
        safe = np.where(r == 0, 1.0, r)
        out = np.where(r <= R, Z * (3 * R * R - r * r) / (2 * R**3), Z / safe)
    return out[()] if out.ndim == 0 else out


def potential_fourier(model, k):
    """phi^(k) = 4 pi n^(k) / k^2 for k > 0."""
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise SingularityError("phi^(k) diverges at k = 0; use grids with k > 0")
    out = 4 * math.pi * density_fourier(model, k) / (k * k)
    return out[()] if np.ndim(out) == 0 else out
