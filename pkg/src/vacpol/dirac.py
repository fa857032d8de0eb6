"""Bound states of the radial Dirac operator and hydrogenic reference states.

For a central potential energy V(r) and channel kappa the radial operator
acting on (G, F) = r * (large, small) components is

    [ m + V          -d/dr + kappa/r ]
    [ d/dr + kappa/r  -m + V         ]

It is discretised on a staggered grid in a mapped variable x with r = r(x):
G lives on the nodes x_i, F on the midpoints x_{i-1/2}.  Amplitudes are
stored scaled by sqrt(h r'(x)) so that the discrete operator is a real
symmetric matrix; ordering the unknowns as F_{1/2}, G_1, F_{3/2}, G_2, ...
makes it tridiagonal.  The free operator squared is block diagonal with
blocks m^2 + B^T B and m^2 + B B^T, so the discretisation has no states
inside the gap when V = 0 and no doubled branch.
"""

from __future__ import annotations

import dataclasses
import json
import math

import numpy as np
from scipy import linalg, special

from . import nuclear
from .errors import DomainError, SupercriticalError

SCHEMES = ("uniform", "log")


@dataclasses.dataclass(frozen=True)
class RadialGrid:
    """Box [0, r_max] (or [r_min, r_max] on the log scheme) with n_points cells.

    Parameters
    ----------
    r_max : float
        Box radius; the small component vanishes there.
    n_points : int
        Number of large-component nodes (the matrix has dimension 2 n_points).
    scheme : {"uniform", "log"}
        ``log`` uses r = exp(x), which makes the r^gamma behaviour of Coulomb
        states at the origin smooth in x.
    r_min : float
        Inner boundary of the log scheme; G vanishes there.
    """

    r_max: float
    n_points: int
    scheme: str = "log"
    r_min: float = 1e-10

    def __post_init__(self):
        if not self.r_max > 0:
            raise DomainError("r_max must be positive")
        if self.n_points < 64:
            raise DomainError("n_points must be at least 64")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}")
        if self.scheme == "log" and not 0 < self.r_min < self.r_max:
            raise DomainError("log scheme needs 0 < r_min < r_max")

    def refined(self, factor=2):
        return dataclasses.replace(self, n_points=self.n_points * factor)

    def with_r_max(self, r_max):
        # keeps the x-spacing (approximately) fixed
        x_old = self._x_range()
        new = dataclasses.replace(self, r_max=r_max)
        n = int(round(self.n_points * new._x_range() / x_old))
        return dataclasses.replace(new, n_points=max(n, 64))

    def _x_range(self):
        if self.scheme == "log":
            return math.log(self.r_max / self.r_min)
        return self.r_max

    @property
    def step(self):
        return self._x_range() / (self.n_points + 0.5)

    def nodes(self):
        """Return ``(r_large, r_small, w_large, w_small)``; w = h dr/dx."""
        h = self.step
        i = np.arange(1, self.n_points + 1)
        xg = h * i
        xf = h * (i - 0.5)
        if self.scheme == "log":
            rg = self.r_min * np.exp(xg)
            rf = self.r_min * np.exp(xf)
            return rg, rf, h * rg, h * rf
        return xg, xf, np.full(self.n_points, h), np.full(self.n_points, h)

    def descriptor(self):
        return {"r_max": self.r_max, "n_points": self.n_points, "scheme": self.scheme,
                "r_min": self.r_min if self.scheme == "log" else 0.0}

    @classmethod
    def for_coupling(cls, zalpha, m=1.0, n_states=3, n_points=4000, scheme="log"):
        """Grid whose box holds the first ``n_states`` states of each channel."""
        n_max = n_states + 1
        r_max = 24.0 * n_max * n_max / (max(zalpha, 1e-3) * m * n_max)
        r_max = max(r_max, 20.0 / m)
        return cls(r_max=r_max, n_points=n_points, scheme=scheme, r_min=1e-10 / m)


def coulomb_dirac_energy(n_r, kappa, zalpha):
    """Point-Coulomb Dirac bound-state energy in units of the particle mass.

    E = [1 + (Z alpha)^2 / (n_r + sqrt(kappa^2 - (Z alpha)^2))^2]^{-1/2}.
    """
    kappa = int(kappa)
    if kappa == 0:
        raise DomainError("kappa must be a nonzero integer")
    if zalpha >= 1:
        raise SupercriticalError(f"Z alpha = {zalpha} >= 1 is outside the subcritical regime")
    if zalpha < 0:
        raise DomainError("Z alpha must be non-negative")
    if n_r < 0 or (kappa > 0 and n_r < 1):
        raise DomainError(f"n_r = {n_r} is not allowed for kappa = {kappa}")
    gamma = math.sqrt(kappa * kappa - zalpha * zalpha)
    return 1.0 / math.sqrt(1.0 + (zalpha / (n_r + gamma)) ** 2)


def coulomb_reference_levels(kappa, zalpha, count):
    """The ``count`` lowest analytic levels of channel kappa."""
    start = 1 if kappa > 0 else 0
    return np.array([coulomb_dirac_energy(start + j, kappa, zalpha) for j in range(count)])


def potential_energy(model, alpha):
    """V(r) = -alpha phi(r) for a nuclear model."""
    return lambda r: -alpha * nuclear.potential(model, r)


def tridiagonal_operator(potential, kappa, grid, m=1.0):
    """Diagonal and off-diagonal of the interleaved symmetric operator.

    ``potential`` is the potential energy V(r), vectorised over radii.
    """
    if kappa == 0:
        raise DomainError("kappa must be a nonzero integer")
    rg, rf, wg, wf = grid.nodes()
    h = grid.step
    n = grid.n_points
    diag = np.empty(2 * n)
    diag[0::2] = -m + potential(rf)
    diag[1::2] = m + potential(rg)
    # (d/dr + kappa/r) G at the midpoint, in scaled amplitudes; dr/dx = w/h
    jf = wf / h
    jg = wg / h
    same = np.sqrt(jf / jg) * (1.0 / (jf * h) + kappa / (2.0 * rf))
    below = np.sqrt(jf[1:] / jg[:-1]) * (-1.0 / (jf[1:] * h) + kappa / (2.0 * rf[1:]))
    off = np.empty(2 * n - 1)
    off[0::2] = same
    off[1::2] = below
    return diag, off


def dense_operator(potential, kappa, grid, m=1.0):
    """The same operator as a dense symmetric matrix (interleaved ordering)."""
    diag, off = tridiagonal_operator(potential, kappa, grid, m)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


@dataclasses.dataclass
class ChannelSpectrum:
    """Eigenpairs of one kappa channel.

    ``eigenvalues`` are in units of the particle mass.  ``large`` and
    ``small`` hold the radial amplitudes G and F (one row per state),
    sampled on ``r_large`` and ``r_small``, normalised so that
    int (G^2 + F^2) dr = 1.
    """

    kappa: int
    grid: RadialGrid
    m: float
    eigenvalues: np.ndarray
    gap_states: np.ndarray
    r_large: np.ndarray = None
    r_small: np.ndarray = None
    large: np.ndarray = None
    small: np.ndarray = None
    spurious: list = dataclasses.field(default_factory=list)

    @property
    def gap_energies(self):
        return self.eigenvalues[self.gap_states]

    def norms(self):
        _, _, wg, wf = self.grid.nodes()
        return np.sum(self.large**2 * wg, axis=1) + np.sum(self.small**2 * wf, axis=1)

    def mean_radius(self):
        _, _, wg, wf = self.grid.nodes()
        return (np.sum(self.large**2 * wg * self.r_large, axis=1)
                + np.sum(self.small**2 * wf * self.r_small, axis=1))

    def to_dict(self, include_spinors=False):
        out = {
            "kappa": self.kappa,
            "m": self.m,
            "grid": self.grid.descriptor(),
            "eigenvalues": self.eigenvalues.tolist(),
            "gap_indices": self.gap_states.tolist(),
            "spurious": list(self.spurious),
        }
        if include_spinors and self.large is not None:
            out["r_large"] = self.r_large.tolist()
            out["r_small"] = self.r_small.tolist()
            out["large"] = self.large.tolist()
            out["small"] = self.small.tolist()
        return out

    def to_json(self, include_spinors=False):
        return json.dumps(self.to_dict(include_spinors), indent=1)

    def spinors_csv(self, state):
        """CSV of one state's amplitudes on the merged staggered grid."""
        rows = ["r,component,value"]
        for r, v in zip(self.r_small, self.small[state]):
            rows.append(f"{r!r},small,{v!r}")
        for r, v in zip(self.r_large, self.large[state]):
            rows.append(f"{r!r},large,{v!r}")
        return "\n".join(rows) + "\n"


def _roughness(vec):
    # ||grid-scale difference||^2 / ||vec||^2: ~ (k h)^2 for smooth modes, ~4 for zig-zag
    d = np.diff(vec)
    return float(np.dot(d, d) / max(np.dot(vec, vec), 1e-300))


def solve_channel(potential, kappa, grid, m=1.0, select="gap", spurious_threshold=1.0):
    """Diagonalise the discretised radial operator of channel ``kappa``.

    Parameters
    ----------
    potential : callable
        Potential energy V(r) in units of m_e c^2.
    kappa : int
        Nonzero channel index.
    grid : RadialGrid
    m : float
        Particle mass in electron masses.
    select : {"gap", "all"}
        ``gap`` returns only eigenpairs in (-m, m); ``all`` the full spectrum.
    spurious_threshold : float
        Gap states whose amplitudes oscillate on the grid scale beyond this
        roughness are excluded from ``gap_states`` and listed in ``spurious``.
    """
    if not m > 0:
        raise DomainError("mass must be positive")
    diag, off = tridiagonal_operator(potential, kappa, grid, m)
    if select == "gap":
        w, v = linalg.eigh_tridiagonal(diag, off, select="v", select_range=(-m, m), tol=1e-15 * m)
    elif select == "all":
        w, v = linalg.eigh_tridiagonal(diag, off)
    else:
        raise DomainError("select must be 'gap' or 'all'")
    rg, rf, wg, wf = grid.nodes()
    small = (v[0::2, :] / np.sqrt(wf)[:, None]).T
    large = (v[1::2, :] / np.sqrt(wg)[:, None]).T
    # sign convention: large component positive near its first maximum
    for j in range(large.shape[0]):
        idx = np.argmax(np.abs(large[j]))
        if large[j, idx] < 0:
            large[j] *= -1
            small[j] *= -1
    spec = ChannelSpectrum(int(kappa), grid, m, w / m, np.array([], dtype=int),
                           rg, rf, large, small)
    _order_degenerate(spec)
    in_gap = np.flatnonzero(np.abs(spec.eigenvalues) < 1.0)
    keep = []
    for i in in_gap:
        rough = _roughness(spec.large[i] * np.sqrt(wg)) + _roughness(spec.small[i] * np.sqrt(wf))
        if rough > spurious_threshold:
            spec.spurious.append({"index": int(i), "energy": float(spec.eigenvalues[i]),
                                  "roughness": rough})
        else:
            keep.append(i)
    spec.gap_states = np.array(keep, dtype=int)
    return spec


def _order_degenerate(spec, tol=1e-12):
    # eigenvalues come sorted; within near-degenerate clusters order by <r>
    w = spec.eigenvalues
    if len(w) < 2:
        return
    order = np.arange(len(w))
    radius = spec.mean_radius()
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol:
            if i - start > 1:
                block = order[start:i]
                order[start:i] = block[np.argsort(radius[block], kind="stable")]
            start = i
    if np.any(order != np.arange(len(w))):
        spec.eigenvalues = w[order]
        spec.large = spec.large[order]
        spec.small = spec.small[order]


def extrapolated_gap_energies(potential, kappa, grid, m=1.0, count=None):
    """Richardson extrapolation of gap energies over grids N and 2N.

    Returns ``(extrapolated, coarse, fine)``, each truncated to the common
    number of gap states (or ``count``).  The scheme is second order in the
    mapped spacing.
    """
    coarse = solve_channel(potential, kappa, grid, m).gap_energies
    fine = solve_channel(potential, kappa, grid.refined(2), m).gap_energies
    n = min(len(coarse), len(fine)) if count is None else count
    if len(coarse) < n or len(fine) < n:
        raise DomainError(f"fewer than {n} gap states on the grid; enlarge r_max")
    coarse, fine = coarse[:n], fine[:n]
    return fine + (fine - coarse) / 3.0, coarse, fine


def box_error(potential, kappa, grid, m=1.0, count=1):
    """max |E(r_max) - E(1.5 r_max)| over the first ``count`` gap states."""
    a = solve_channel(potential, kappa, grid, m).gap_energies[:count]
    b = solve_channel(potential, kappa, grid.with_r_max(1.5 * grid.r_max), m).gap_energies[:count]
    if len(a) < count or len(b) < count:
        return math.inf
    return float(np.max(np.abs(a - b)))


@dataclasses.dataclass(frozen=True)
class HydrogenicState:
    """Nonrelativistic hydrogenic state with Bohr radius 1/coupling.

    ``coupling`` is Z alpha m_eff in natural (electron Compton) units.
    """

    n: int
    l: int
    coupling: float

    def __post_init__(self):
        if self.n < 1 or not 0 <= self.l <= self.n - 1:
            raise DomainError(f"invalid quantum numbers n={self.n}, l={self.l}")
        if not self.coupling > 0:
            raise DomainError("coupling must be positive")

    def radial(self, r):
        return hydrogenic_radial(self.n, self.l, self.coupling, r)

    def density_at_origin(self):
        """|psi(0)|^2 = coupling^3 / (pi n^3) for s states, 0 otherwise."""
        if self.l > 0:
            return 0.0
        return self.coupling**3 / (math.pi * self.n**3)

    @property
    def extent(self):
        """Radius beyond which the density is negligible (< 1e-16 relative)."""
        return (2.0 * self.n * self.n + 40.0 * self.n) / self.coupling


def hydrogenic_radial(n, l, coupling, r):
    """Normalised radial function R_nl(r), int R^2 r^2 dr = 1."""
    if n < 1 or not 0 <= l <= n - 1:
        raise DomainError(f"invalid quantum numbers n={n}, l={l}")
    if not coupling > 0:
        raise DomainError("coupling must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be non-negative")
    rho = 2.0 * coupling * r / n
    log_norm = 0.5 * (3 * math.log(2.0 * coupling / n) + special.gammaln(n - l)
                      - math.log(2.0 * n) - special.gammaln(n + l + 1))
    out = math.exp(log_norm) * np.exp(-0.5 * rho) * rho**l * special.eval_genlaguerre(n - l - 1, 2 * l + 1, rho)
    return out[()] if out.ndim == 0 else out
