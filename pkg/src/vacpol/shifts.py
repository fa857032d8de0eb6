"""First-order vacuum-polarisation level shifts.

delta E = -alpha^2 int d^3x U(x) |psi(x)|^2, evaluated with nonrelativistic
hydrogenic densities (the heuristic estimate) or, behind a flag, with the
discrete Dirac amplitudes of :mod:`vacpol.dirac`.  Energies are in m_e c^2
and lengths in electron Compton wavelengths: U keeps the electron scale
whatever the bound particle, only the orbit shrinks with m_eff.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy import integrate, interpolate

from . import dirac, kernel, nuclear
from .errors import CoverageError, DomainError
from .units import EULER_GAMMA, Constants

# beyond this radius the point-nucleus U is below e^{-80} of its scale
POINT_U_RANGE = 40.0
TAIL_MASS_TOL = 1e-8


def point_u_closure(Z):
    """U(r) of a point nucleus, vanishing beyond ``POINT_U_RANGE``."""

    def u(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = r < POINT_U_RANGE
        if np.any(inside):
            out[inside] = kernel.uehling_point_position(Z, r[inside])
        return out[()] if out.ndim == 0 else out

    u.support = POINT_U_RANGE
    u.label = "point-nucleus s-integral"
    return u


def _tail_mass(state, r0):
    val, _ = integrate.quad(lambda r: (r * state.radial(r)) ** 2, r0, np.inf, limit=200)
    return val


def first_order_shift(U, state, constants=None, epsrel=1e-9):
    """delta E = -alpha^2 int_0^inf r^2 U(r) R(r)^2 dr for a hydrogenic state.

    Parameters
    ----------
    U : RadialTable or callable
        Tabulated U (extended nuclei) or a callable such as
        :func:`point_u_closure`.  A callable may carry a ``support``
        attribute beyond which it is identically zero.
    state : dirac.HydrogenicState

    Raises
    ------
    CoverageError
        If a table stops short of the state and more than 1e-8 of the
        probability lies outside it.
    """
    constants = constants or Constants()
    alpha2 = constants.alpha**2
    if isinstance(U, kernel.RadialTable):
        r = U.r_values
        tail = _tail_mass(state, r[-1])
        if tail > TAIL_MASS_TOL:
            raise CoverageError(f"table ends at r={r[-1]:.4g} but {tail:.2e} of the state lies beyond it")
        # cubic spline of r^3 U R^2 in x = log r; U is flat below the first node
        x = np.log(r)
        g = r**3 * U.values * state.radial(r) ** 2
        body = interpolate.CubicSpline(x, g).integrate(x[0], x[-1])
        head, _ = integrate.quad(lambda s: s * s * U.values[0] * state.radial(s) ** 2, 0.0, r[0])
        return -alpha2 * (body + head)
    upper = min(getattr(U, "support", math.inf), state.extent)
    scale = 1.0 / state.coupling
    breaks = [b for b in (0.05, 0.5, 2.0, 8.0, scale, 4 * scale) if b < upper]
    f = lambda s: s * s * float(U(s)) * state.radial(s) ** 2
    val, err = integrate.quad(f, 0.0, upper, points=sorted(breaks) or None,
                              epsabs=0.0, epsrel=epsrel, limit=400)
    return -alpha2 * val


def dirac_density_shift(U, spectrum, state, constants=None):
    """Extension: delta E with the discrete Dirac density of one state.

    ``state`` indexes ``spectrum.eigenvalues``; U is a callable or table.
    """
    constants = constants or Constants()
    _, _, wg, wf = spectrum.grid.nodes()
    if isinstance(U, kernel.RadialTable):
        spline = interpolate.CubicSpline(np.log(U.r_values), U.values)
        def U(r, _s=spline, _t=U):
            r = np.asarray(r, dtype=float)
            x = np.clip(np.log(r), np.log(_t.r_values[0]), np.log(_t.r_values[-1]))
            return np.where(r > _t.r_values[-1], 0.0, _s(x))
    big = np.sum(U(spectrum.r_large) * spectrum.large[state] ** 2 * wg)
    small = np.sum(U(spectrum.r_small) * spectrum.small[state] ** 2 * wf)
    return -constants.alpha**2 * (big + small)


def point_limit_shift(n, l, Z, alpha, m=1.0):
    """-4 Z^4 alpha^5 m^3 / (15 pi n^3) for l = 0, else 0 (units m_e c^2).

    Uses |psi(0)|^2 = (Z alpha m)^3/(pi n^3) and int U = 4Z/15.
    """
    if n < 1 or not 0 <= l <= n - 1:
        raise DomainError(f"invalid quantum numbers n={n}, l={l}")
    if l > 0:
        return 0.0
    return -4.0 * Z**4 * alpha**5 * m**3 / (15.0 * math.pi * n**3)


def levelsplit_as_printed(Z, alpha, m=1.0):
    """The rough n = 2 estimate -Z^4 alpha^5 m / 30, reported for comparison only."""
    return -(Z**4) * alpha**5 * m / 30.0


@dataclasses.dataclass(frozen=True)
class EffectivePotential:
    r: float
    exact: float
    approximation: float
    relative_difference: float
    log_enhanced: bool


def effective_potential(Z, alpha, r):
    """-alpha phi - alpha^2 U near a point nucleus, with its two-term form.

    ``log_enhanced`` marks radii where the small-r law of U is within 1%,
    i.e. where the log-enhanced 1/r term controls the polarisation part.
    """
    if r <= 0:
        raise DomainError("radius must be positive")
    u = kernel.uehling_point_position(Z, r)
    exact = -alpha * Z / r - alpha**2 * u
    approx = -alpha * Z / r + alpha**2 * 2.0 / (3.0 * math.pi) * Z / r * (math.log(r) + 5.0 / 6.0 + EULER_GAMMA)
    law = float(kernel.uehling_point_small_r(Z, r))
    enhanced = law > 0 and abs(u / law - 1.0) < 0.01
    return EffectivePotential(r, exact, approx, abs(exact / approx - 1.0), enhanced)


def effective_coupling(Z, alpha, log_r):
    """r |phi_eff(r)| from the two-term form, as a function of log r.

    Grows without bound like alpha^2 (2Z/3pi) log(1/r) as r -> 0.
    """
    return alpha * Z - alpha**2 * 2.0 * Z / (3.0 * math.pi) * (log_r + 5.0 / 6.0 + EULER_GAMMA)


def critical_log_radius(Z, alpha, bound=1.0):
    """log r below which r |phi_eff| exceeds ``bound``."""
    return -(bound - alpha * Z) * 3.0 * math.pi / (2.0 * Z * alpha**2) - 5.0 / 6.0 - EULER_GAMMA


def instability_table(Z, alpha, bounds=(0.5, 1.0, 2.0, 10.0)):
    """For each bound c, the log r at which r |phi_eff| first exceeds c."""
    rows = []
    for c in bounds:
        lr = critical_log_radius(Z, alpha, c)
        rows.append({"bound": c, "log_r": lr, "coupling_at_log_r": effective_coupling(Z, alpha, lr),
                     "coupling_at_10x_smaller_log_r": effective_coupling(Z, alpha, 10 * lr)})
    return rows


@dataclasses.dataclass
class ShiftReport:
    """Shifts for a list of (n, l) states of one nucleus and particle mass."""

    model: dict
    constants: dict
    rows: list
    splittings: dict
    notes: list = dataclasses.field(default_factory=list)
    extra: dict = dataclasses.field(default_factory=dict)

    def row(self, n, l):
        for r in self.rows:
            if r["n"] == n and r["l"] == l:
                return r
        raise KeyError((n, l))

    def to_dict(self):
        return {"model": self.model, "constants": self.constants, "states": self.rows,
                "splittings": self.splittings, "notes": self.notes, **self.extra}

    def to_table(self):
        head = f"{'n':>3} {'l':>3} {'delta_E [m_e c^2]':>22} {'delta_E [eV]':>16} {'point limit':>16} {'ratio':>10}"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            ratio = r["delta_E"] / r["point_limit"] if r["point_limit"] else float("nan")
            lines.append(f"{r['n']:>3} {r['l']:>3} {r['delta_E']:>22.10e} {r['delta_E_eV']:>16.6e} "
                         f"{r['point_limit']:>16.6e} {ratio:>10.5f}")
        for n, s in sorted(self.splittings.items()):
            lines.append(f"splitting dE({n},0) - dE({n},1) = {s['m_e_c2']:.10e} m_e c^2 = {s['eV']:.6e} eV")
        lines.extend(f"note: {t}" for t in self.notes)
        return "\n".join(lines) + "\n"


def _u_source(model, extent, n_table=400):
    if model.is_point:
        return point_u_closure(model.Z)
    r = np.geomspace(1e-5, max(extent, 50.0), n_table)
    return kernel.uehling_position(model, r)


def shift_report(model, states, constants=None, density="schroedinger", grid_points=6000):
    """ShiftReport for ``states`` (iterable of (n, l)).

    ``density="dirac"`` evaluates the expectation value with discrete Dirac
    amplitudes (kappa = -1 for l = 0, kappa = +1 for l = 1); this goes
    beyond the nonrelativistic estimate and is labelled as such.
    """
    constants = constants or Constants()
    coupling = model.Z * constants.alpha * constants.m_eff
    states = [tuple(s) for s in states]
    hyd = [dirac.HydrogenicState(n, l, coupling) for n, l in states]
    extent = max(h.extent for h in hyd)
    U = _u_source(model, extent)
    ev = constants.electron_mass_ev
    rows = []
    notes = []
    if density == "dirac":
        notes.append("extension: Dirac densities from the discretised radial operator")
        zalpha = model.Z * constants.alpha
        pot = dirac.potential_energy(model, constants.alpha) if not model.is_point else (lambda r: -zalpha / r)
        grid = dirac.RadialGrid.for_coupling(zalpha, constants.m_eff, n_states=max(n for n, _ in states),
                                             n_points=grid_points)
        spectra = {}
    for (n, l), h in zip(states, hyd):
        if density == "dirac":
            if l > 1:
                raise DomainError("the Dirac-density variant covers l = 0 and l = 1 (kappa = -1, +1)")
            kappa = -1 if l == 0 else 1
            if kappa not in spectra:
                spectra[kappa] = dirac.solve_channel(pot, kappa, grid, constants.m_eff)
            idx = n - 1 if kappa < 0 else n - 2
            spec = spectra[kappa]
            dE = dirac_density_shift(U, spec, spec.gap_states[idx], constants)
        elif density == "schroedinger":
            dE = first_order_shift(U, h, constants)
        else:
            raise DomainError("density must be 'schroedinger' or 'dirac'")
        pl = point_limit_shift(n, l, model.Z, constants.alpha, constants.m_eff)
        rows.append({"n": n, "l": l, "delta_E": dE, "delta_E_eV": dE * ev,
                     "point_limit": pl, "point_limit_eV": pl * ev})
    splittings = {}
    for n in sorted({n for n, _ in states}):
        if (n, 0) in states and (n, 1) in states:
            s = rows[states.index((n, 0))]["delta_E"] - rows[states.index((n, 1))]["delta_E"]
            splittings[n] = {"m_e_c2": s, "eV": s * ev}
    printed = levelsplit_as_printed(model.Z, constants.alpha, constants.m_eff)
    notes.append(f"rough n=2 estimate -Z^4 alpha^5 m/30 = {printed:.6e} m_e c^2 is pi times the "
                 f"n=2 point-limit value {point_limit_shift(2, 0, model.Z, constants.alpha, constants.m_eff):.6e}; "
                 f"acceptance uses the latter")
    return ShiftReport(model.descriptor(), constants.to_dict(), rows, splittings, notes)


def muonic_report(model, states=((2, 0), (2, 1)), constants=None, density="schroedinger"):
    """Shift report for a heavy bound particle plus its electronic counterpart.

    ``constants.m_eff`` carries the muon mass (reduced by default, see
    :func:`vacpol.units.muonic_constants`).  ``extra`` records the electronic
    splitting of the same nucleus and the enhancement ratio.
    """
    from .units import muonic_constants

    constants = constants or muonic_constants()
    report = shift_report(model, states, constants, density)
    electronic = shift_report(model, states, constants.replace(m_eff=1.0), density)
    ratios = {}
    for n, s in report.splittings.items():
        e = electronic.splittings[n]["m_e_c2"]
        ratios[n] = s["m_e_c2"] / e if e else float("nan")
    report.extra = {"electronic_splittings": electronic.splittings, "enhancement_ratio": ratios,
                    "electronic_states": electronic.rows}
    report.notes.append("muonic orbit lies inside the polarisation cloud: the point-limit formula does not apply")
    return report
