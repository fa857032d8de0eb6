"""Polarisation kernel C(k), induced vacuum density and the Uehling potential.

Momentum-space objects follow the unitary Fourier convention of
:mod:`vacpol.units`.  For a nucleus with density n and potential phi,

    rho_vac^(k) = phi^(k) C(k) / (4 pi^2),
    U^(k)       = phi^(k) C(k) / (pi k^2) = 4 n^(k) C(k) / k^4,

and U(r) is recovered by the radial inverse transform.  The point nucleus
goes through a separate one-dimensional representation because its U^(k)
only decays like log(k)/k^2.
"""

from __future__ import annotations

import dataclasses
import io
import json
import math
import warnings

import numpy as np
from scipy import integrate, special

from . import nuclear
from .errors import (
    DomainError,
    InvariantViolation,
    QuadratureError,
    SingularityError,
    UnsupportedOperationError,
)
from .units import EULER_GAMMA, SQRT_2_OVER_PI, fourier_radial, oscillatory_integral

# below this k the closed form of C loses more than ~1e-13 to cancellation
SERIES_SWITCH = 0.5
ROUTE_RTOL = 1e-14


def _series_coefficients(n_terms=24):
    # C(k) = sum_j c_j k^(2j+2), from log(1+y) expanded under the x-integral;
    # int_0^1 (1-x^2)^m dx = (2m)!! / (2m+1)!!
    coeffs = []
    for j in range(1, n_terms + 1):
        m = j + 1
        moment = 1.0
        for i in range(1, m + 1):
            moment *= (2 * i) / (2 * i + 1)
        coeffs.append(0.5 * (-1) ** (j + 1) / j * 4.0**-j * moment)
    return np.array(coeffs)


_C_SERIES = _series_coefficients()


def _c_over_k4_series(k):
    k2 = k * k
    # Horner in k^2 for sum_j c_j k^(2j-2)
    acc = np.zeros_like(k2)
    for c in _C_SERIES[::-1]:
        acc = acc * k2 + c
    return acc


def c_closed(k):
    """Closed form of the polarisation kernel C(k).

    Uses the Taylor series of the integral representation for k < 0.5, where
    the closed form suffers catastrophic cancellation between its O(1/k^2)
    pieces, and the exact expression

        C = k^2/3 [ (1 - 2/k^2) s L + 4/k^2 - 5/3 ],  s = sqrt(1 + 4/k^2),
        L = log((s+1)/(s-1)) = 2 log(k (s+1) / 2)

    elsewhere.  The second form of L is exact because s^2 - 1 = 4/k^2 and
    stays accurate for arbitrarily large k.
    """
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise DomainError("wavenumber must be non-negative")
    small = k < SERIES_SWITCH
    ks = np.where(small, 1.0, k)
    inv2 = 1.0 / (ks * ks)
    s = np.sqrt(1.0 + 4.0 * inv2)
    L = 2.0 * np.log(ks * (s + 1.0) / 2.0)
    big = ks * ks / 3.0 * ((1.0 - 2.0 * inv2) * s * L + 4.0 * inv2 - 5.0 / 3.0)
    kk = np.where(small, k, 0.0)
    out = np.where(small, kk**4 * _c_over_k4_series(kk), big)
    return out[()] if out.ndim == 0 else out


def c_over_k4(k):
    """C(k)/k^4, finite at k = 0 where it equals 1/15."""
    k = np.asarray(k, dtype=float)
    small = k < SERIES_SWITCH
    ks = np.where(small, 1.0, k)
    out = np.where(small, _c_over_k4_series(np.where(small, k, 0.0)), c_closed(ks) / ks**4)
    return out[()] if out.ndim == 0 else out


def c_integral(k, epsrel=1e-13):
    """C(k) from its one-dimensional integral representation.

    (k^2/2) int_0^1 (1 - x^2) log(1 + k^2 (1 - x^2)/4) dx, by adaptive
    Gauss-Kronrod quadrature.

    Raises
    ------
    QuadratureError
        When the achieved relative error exceeds 1e-11.
    """
    if k < 0:
        raise DomainError("wavenumber must be non-negative")
    if k == 0:
        return 0.0
    q = 0.25 * k * k
    val, err = integrate.quad(lambda x: (1 - x * x) * math.log1p(q * (1 - x * x)),
                              0.0, 1.0, epsabs=0.0, epsrel=epsrel, limit=200)
    if not err <= 1e-11 * abs(val):
        raise QuadratureError(f"C integral at k={k} failed", err)
    return 0.5 * k * k * val


@dataclasses.dataclass(frozen=True)
class KernelEval:
    k: float
    C: float
    rho_vac_hat: float
    U_hat: float


def vacuum_density_fourier(model, k):
    """rho_vac^(k) = phi^(k) C(k) / (4 pi^2); zero at k = 0."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise DomainError("wavenumber must be non-negative")
    # phi^ C = 4 pi n^ k^2 (C/k^4): finite form, valid at k = 0 as well
    out = nuclear.density_fourier(model, k) * k * k * c_over_k4(k) / math.pi
    return out[()] if np.ndim(out) == 0 else out


def uehling_fourier(model, k):
    """U^(k), computed by both algebraic routes which must agree to 1e-14.

    Raises
    ------
    InvariantViolation
        If phi^ C / (pi k^2) and 4 n^ C / k^4 disagree.
    """
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise SingularityError("U^(k) is evaluated on k > 0; its k -> 0 limit is 4 n^(0)/15")
    C = c_closed(k)
    via_phi = nuclear.potential_fourier(model, k) * C / (math.pi * k * k)
    via_n = 4.0 * nuclear.density_fourier(model, k) * C / k**4
    scale = np.maximum(np.abs(via_n), np.finfo(float).tiny)
    if np.any(np.abs(via_phi - via_n) > ROUTE_RTOL * scale):
        worst = float(np.max(np.abs(via_phi - via_n) / scale))
        raise InvariantViolation(f"U^ routes disagree, relative difference {worst:.3e}")
    return via_n


def _uehling_fourier_regular(model, k):
    # U^ including the k = 0 limit, used inside quadratures
    return 4.0 * nuclear.density_fourier(model, k) * c_over_k4(k)


def kernel_eval(model, k):
    """All momentum-space quantities at one k > 0."""
    return KernelEval(float(k), float(c_closed(k)),
                      float(vacuum_density_fourier(model, k)),
                      float(uehling_fourier(model, k)))


@dataclasses.dataclass(frozen=True)
class RadialTable:
    """Samples of a radial function with per-point error estimates."""

    r_values: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    meta: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        r = np.asarray(self.r_values, dtype=float)
        v = np.asarray(self.values, dtype=float)
        e = np.asarray(self.errors, dtype=float)
        if r.ndim != 1 or v.shape != r.shape or e.shape != r.shape:
            raise DomainError("r_values, values and errors must be 1-D of equal length")
        if np.any(np.diff(r) <= 0):
            raise DomainError("r_values must be strictly increasing")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(e))):
            raise DomainError("table values must be finite")
        object.__setattr__(self, "r_values", r)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "errors", e)

    def __len__(self):
        return len(self.r_values)

    def scaled(self, factor):
        return RadialTable(self.r_values, self.values * factor,
                           self.errors * abs(factor), dict(self.meta))

    def to_csv(self, header=None):
        buf = io.StringIO()
        for key, val in (header or {}).items():
            buf.write(f"# {key}: {val}\n")
        for key, val in self.meta.items():
            buf.write(f"# {key}: {val}\n")
        buf.write("r,value,abs_error_estimate\n")
        for r, v, e in zip(self.r_values, self.values, self.errors):
            buf.write(f"{float(r)!r},{float(v)!r},{float(e)!r}\n")
        return buf.getvalue()

    def to_dict(self):
        return {
            "meta": dict(self.meta),
            "columns": ["r", "value", "abs_error_estimate"],
            "r": self.r_values.tolist(),
            "value": self.values.tolist(),
            "abs_error_estimate": self.errors.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(np.array(data["r"]), np.array(data["value"]),
                   np.array(data["abs_error_estimate"]), dict(data.get("meta", {})))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def _k_cutoff(model):
    if model.kind == "gaussian":
        # n^ below 1e-20 of its k = 0 value
        return math.sqrt(2 * 46.0) / model.width
    return 50.0 / model.width


def uehling_position(model, r_values, epsabs=1e-16):
    """U(r) for an extended nucleus on the radii ``r_values``.

    U(r) = sqrt(2/pi)/r int_0^inf k sin(kr) U^(k) dk, evaluated with
    QUADPACK's sine-weighted rules: QAWO on [0, K] and QAWF on the tail.

    Raises
    ------
    UnsupportedOperationError
        For point nuclei; use :func:`uehling_point_position`.
    QuadratureError
        If the oscillatory quadrature does not converge.
    """
    if model.is_point:
        raise UnsupportedOperationError(
            "uehling_position needs an extended nucleus; use uehling_point_position for point nuclei")
    r_values = np.atleast_1d(np.asarray(r_values, dtype=float))
    if np.any(r_values <= 0):
        raise DomainError("grid radii must be positive")
    if model.kind == "uniform_ball":
        return _uehling_ball_table(model, r_values)
    K = _k_cutoff(model)
    g = lambda k: k * _uehling_fourier_regular(model, k)
    values = np.empty_like(r_values)
    errors = np.empty_like(r_values)
    scale = abs(float(_uehling_fourier_regular(model, 0.0)))
    for i, r in enumerate(r_values):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            head, e1 = integrate.quad(g, 0.0, K, weight="sin", wvar=r,
                                      epsabs=epsabs, epsrel=1e-12, limit=400)
            tail, e2 = integrate.quad(g, K, np.inf, weight="sin", wvar=r,
                                      epsabs=epsabs, limlst=100)
        pref = SQRT_2_OVER_PI / r
        err = pref * (e1 + e2)
        val = pref * (head + tail)
        if not err <= 1e-9 * abs(val) + 1e-14 * scale:
            raise QuadratureError(f"inverse transform of U^ failed at r={r}", err)
        values[i] = val
        errors[i] = err
    meta = {"quantity": "U(r)", "model": json.dumps(model.descriptor(), sort_keys=True),
            "provenance": "inverse radial Fourier transform of 4 n^ C/k^4; QAWO head + QAWF tail"}
    return RadialTable(r_values, values, errors, meta)


def _ball_shell_integral(b, r, R):
    # int_0^R r' (e^{-b|r-r'|} - e^{-b(r+r')}) dr'
    outer = (1.0 - math.exp(-b * R) * (1.0 + b * R)) * math.exp(-b * r)
    if r >= R:
        inner = math.exp(-b * (r - R)) * (b * R - 1.0) + math.exp(-b * r)
    else:
        inner = 2.0 * b * r + math.exp(-b * r) - math.exp(-b * (R - r)) * (1.0 + b * R)
    return (inner - outer) / (b * b)


def _ball_integrand(t, r, R):
    c = math.cosh(t)
    sh = math.sinh(t)
    weight = (1.0 + 0.5 / (c * c)) * (sh * sh) / (c * c)
    return weight * _ball_shell_integral(2.0 * c, r, R) / c


def _uehling_ball_table(model, r_values):
    """U(r) of a uniform ball as the point-U kernel averaged over the charge.

    The angular average and the radial integral over the ball are done in
    closed form, leaving one smooth integral over the spectral variable
    s = cosh t of the point representation.
    """
    R = model.width
    rho0 = 3.0 * model.Z / (4.0 * math.pi * R**3)
    values = np.empty_like(r_values)
    errors = np.empty_like(r_values)
    for i, r in enumerate(r_values):
        t_max = math.acosh(1.0 + 40.0 / max(r - R, 0.5)) + 1.0
        val, err = integrate.quad(_ball_integrand, 0.0, t_max, args=(r, R),
                                  epsabs=0.0, epsrel=1e-12, limit=200)
        if not err <= 1e-9 * abs(val):
            raise QuadratureError(f"ball Uehling integral at r={r} failed", err)
        pref = 2.0 / (3.0 * math.pi) * math.pi * rho0 / r
        values[i] = pref * val
        errors[i] = pref * err
    meta = {"quantity": "U(r)", "model": json.dumps(model.descriptor(), sort_keys=True),
            "provenance": "position-space average of the point kernel over the ball; s = cosh t quadrature"}
    return RadialTable(r_values, values, errors, meta)


def _point_integrand(t, r):
    # s = cosh t removes the sqrt(s^2 - 1) endpoint; e^{-2r} factored out
    c = math.cosh(t)
    sh = math.sinh(t)
    return math.exp(-2.0 * r * (c - 1.0)) * (1.0 + 0.5 / (c * c)) * (sh * sh) / (c * c)


def _uehling_point_scalar(Z, r, epsrel):
    t_max = math.acosh(1.0 + 40.0 / r)
    val, err = integrate.quad(_point_integrand, 0.0, t_max, args=(r,),
                              epsabs=0.0, epsrel=epsrel, limit=200)
    if not err <= 1e-10 * abs(val):
        raise QuadratureError(f"point Uehling integral at r={r} failed", err)
    pref = 2.0 * Z / (3.0 * math.pi * r) * math.exp(-2.0 * r)
    return pref * val, pref * err


def uehling_point_position(Z, r, epsrel=1e-13, with_error=False):
    """Uehling potential of a point charge Z.

    U(r) = 2Z/(3 pi r) int_1^inf e^{-2rs} (1 + 1/(2 s^2)) sqrt(s^2-1)/s^2 ds,
    integrated after the substitution s = cosh t, which makes the integrand
    smooth and doubly-exponentially decaying.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr <= 0):
        raise DomainError("radius must be positive")
    vals = np.empty_like(r_arr)
    errs = np.empty_like(r_arr)
    for i, ri in enumerate(r_arr):
        vals[i], errs[i] = _uehling_point_scalar(Z, float(ri), epsrel)
    if np.ndim(r) == 0:
        return (vals[0], errs[0]) if with_error else vals[0]
    return (vals, errs) if with_error else vals


def uehling_point_table(Z, r_values):
    r_values = np.asarray(r_values, dtype=float)
    vals, errs = uehling_point_position(Z, r_values, with_error=True)
    meta = {"quantity": "U(r)", "model": json.dumps({"kind": "point", "Z": Z}),
            "provenance": "one-dimensional s-integral, s = cosh t, adaptive Gauss-Kronrod"}
    return RadialTable(r_values, vals, errs, meta)


def uehling_point_small_r(Z, r):
    """Leading small-r law -(2Z/3 pi r)(log r + 5/6 + gamma)."""
    r = np.asarray(r, dtype=float)
    return -2.0 * Z / (3.0 * math.pi * r) * (np.log(r) + 5.0 / 6.0 + EULER_GAMMA)


def uehling_point_large_r(Z, r):
    """Leading large-r law Z e^{-2r} r^{-5/2} / (4 sqrt(pi))."""
    r = np.asarray(r, dtype=float)
    return Z / (4.0 * math.sqrt(math.pi)) * np.exp(-2.0 * r) * r**-2.5


def uehling_point_fourier_route(Z, r, **kw):
    """Point U(r) as the inverse transform of 4 n^ C / k^4 (independent route)."""
    model = nuclear.NuclearModel.point(Z)
    return fourier_radial(lambda k: _uehling_fourier_regular(model, k), r, **kw)


# F0 and the diagonal divergence -------------------------------------------

F0_LOG_COEFFICIENT = 1.0 / (6.0 * math.pi**2)


def f0_integral(xi):
    """The field-independent divergent part F0(xi) of the diagonal kernel.

    After the angular integration the p-integral splits into Fourier
    integrals of (1+p^2)^{-3/2} and (1+p^2)^{-5/2}, which are modified
    Bessel functions; the 1/xi pieces cancel and

        F0(xi) = -(xi K1(xi) + 2 K0(xi)) / (12 pi^2).

    As xi -> 0 this behaves like log(xi)/(6 pi^2) + const.
    See :func:`f0_radial_quadrature` for the numerical one-dimensional route.
    """
    if xi == 0:
        raise SingularityError("F0 diverges logarithmically at xi = 0")
    if xi < 0:
        raise DomainError("xi must be positive")
    return -(xi * special.k1(xi) + 2.0 * special.k0(xi)) / (12.0 * math.pi**2)


def f0_small_xi_constant():
    """lim_{xi->0} F0(xi) - log(xi)/(6 pi^2)."""
    return -(1.0 + 2.0 * (math.log(2.0) - EULER_GAMMA)) / (12.0 * math.pi**2)


def f0_radial_quadrature(xi):
    """F0 by direct quadrature of the angle-integrated radial integrand.

        F0 = -1/(4 pi^2) int_0^inf p^2 [ j0(x)/(1+p^2)
                                         + 2 p^2/(1+p^2) j1(x)/x ] (1+p^2)^{-3/2} dp

    with x = p xi, summed over half periods of the Bessel oscillation.
    """
    if xi <= 0:
        raise DomainError("xi must be positive")

    def g(p):
        x = p * xi
        q = 1.0 + p * p
        j1_over_x = special.spherical_jn(1, x) / x if x > 1e-4 else (1.0 - x * x / 10.0) / 3.0
        return p * p * (special.spherical_jn(0, x) / q + 2.0 * p * p / q * j1_over_x) * q**-1.5

    val, err = oscillatory_integral(g, math.pi / xi, r_tail=max(50.0, 20.0 / xi))
    if err > 1e-9 * max(1.0, abs(val)):
        raise QuadratureError(f"F0 quadrature at xi={xi} failed", err)
    return -val / (4.0 * math.pi**2)


def _diag_integrand(p, u, k):
    # (p^2 - k^2/4 + 1 - E- E+) / (E- E+ (E- + E+)) with the numerator
    # rewritten as -k^2 (p^2 (1-u^2) + 1) / (p^2 - k^2/4 + 1 + E- E+)
    pk = p * k * u
    base = p * p + 0.25 * k * k + 1.0
    em = np.sqrt(base - pk)
    ep = np.sqrt(base + pk)
    num = -k * k * (p * p * (1.0 - u * u) + 1.0) / (p * p - 0.25 * k * k + 1.0 + em * ep)
    return num / (em * ep * (em + ep))


def _panels(lo, hi, ratio=2.0):
    edges = [lo]
    step = 1.0
    x = lo
    while x < hi:
        x = min(hi, max(x + step, x * ratio))
        edges.append(x)
    return np.array(edges)


def _radial_angular_integral(func, k, cutoff, n_p=40, n_u=48):
    """2 pi int_0^cutoff p^2 dp int_{-1}^1 du func(p, u, k) by panel Gauss-Legendre."""
    xu, wu = np.polynomial.legendre.leggauss(n_u)
    # integrand is even in u
    u = 0.5 * (xu + 1.0)
    wu = 0.5 * wu * 2.0
    xp, wp = np.polynomial.legendre.leggauss(n_p)
    edges = _panels(0.0, cutoff)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        p = 0.5 * (b - a) * (xp + 1.0) + a
        P, U = np.meshgrid(p, u, indexing="ij")
        vals = func(P, U, k) @ wu
        total += 0.5 * (b - a) * np.sum(wp * p * p * vals)
    return 2.0 * math.pi * total


def diagonal_value(model, k, cutoff):
    """Diagonal (xi = 0) kernel at wavenumber k with |p| <= cutoff."""
    if model is None:
        return 0.0
    pref = float(nuclear.potential_fourier(model, k)) / (4.0 * math.pi**3)
    return pref * _radial_angular_integral(_diag_integrand, k, cutoff)


@dataclasses.dataclass(frozen=True)
class DivergenceStudy:
    k: float
    cutoffs: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    predicted_slope: float

    def to_dict(self):
        return {"k": self.k, "cutoffs": self.cutoffs.tolist(), "values": self.values.tolist(),
                "slope": self.slope, "intercept": self.intercept,
                "r_squared": self.r_squared, "predicted_slope": self.predicted_slope}


def diagonal_divergence_study(model, cutoffs, k=1.0, fit_window=(1e2, 1e4)):
    """Cut-off dependence of the diagonal kernel; grows affinely in log(cutoff).

    ``model=None`` stands for phi = 0.  The fit uses the cutoffs inside
    ``fit_window``; the predicted slope from the large-p expansion of the
    integrand is -k^2 phi^(k) / (6 pi^2).
    """
    cutoffs = np.asarray(cutoffs, dtype=float)
    if np.any(cutoffs < 1) or np.any(np.diff(cutoffs) <= 0):
        raise DomainError("cutoffs must be increasing and >= 1")
    values = np.array([diagonal_value(model, k, L) for L in cutoffs])
    mask = (cutoffs >= fit_window[0] * (1 - 1e-12)) & (cutoffs <= fit_window[1] * (1 + 1e-12))
    if mask.sum() < 2:
        mask = np.ones_like(cutoffs, dtype=bool)
    x = np.log(cutoffs[mask])
    y = values[mask]
    if np.all(y == 0):
        slope, intercept, r2 = 0.0, 0.0, 1.0
    else:
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        ss_tot = np.sum((y - y.mean()) ** 2)
        r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    predicted = 0.0 if model is None else -k * k * float(nuclear.potential_fourier(model, k)) / (6 * math.pi**2)
    return DivergenceStudy(float(k), cutoffs, values, float(slope), float(intercept), float(r2), predicted)


def _rhov_integrand(p, u, k):
    e = np.sqrt(1.0 + p * p)
    counter = k * k * (p * p * (1.0 - u * u) + 1.0) / (4.0 * e**5)
    return _diag_integrand(p, u, k) + counter


def vacuum_density_momentum_integral(model, k, cutoff=2e4):
    """rho_vac^(k) from the renormalised three-dimensional p-integral.

    Independent of C(k): the log-divergent diagonal term plus its
    field-independent counterterm, integrated to ``cutoff`` (the combined
    integrand falls like p^-5).
    """
    pref = float(nuclear.potential_fourier(model, k)) / (4.0 * math.pi**3)
    return pref * _radial_angular_integral(_rhov_integrand, k, cutoff)
