import math

import numpy as np
import pytest
from scipy import integrate

from vacpol import kernel, shifts
from vacpol.dirac import HydrogenicState
from vacpol.errors import CoverageError, DomainError
from vacpol.nuclear import NuclearModel
from vacpol.units import Constants, muonic_constants

ALPHA = 1 / 137.036
C = Constants(alpha=ALPHA)
POINT = NuclearModel.point(1.0)


def _w(s):
    return (1 + 1 / (2 * s * s)) * math.sqrt(s * s - 1) / (s * s)


def swapped_order_shift(n, l, Z, alpha, m=1.0):
    """-alpha^2 (2Z/3pi) int_1^inf w(s) int_0^inf r e^{-2rs} R^2 dr ds.

    The r-integral is done analytically for the hydrogenic densities, so the
    point-nucleus U is never evaluated.
    """
    c = Z * alpha * m
    if (n, l) == (1, 0):
        inner = lambda s: 4 * c**3 / (2 * s + 2 * c) ** 2
    elif (n, l) == (2, 0):
        inner = lambda s: 0.5 * c**3 * (1 / (2 * s + c) ** 2 - 2 * c / (2 * s + c) ** 3
                                        + 1.5 * c * c / (2 * s + c) ** 4)
    elif (n, l) == (2, 1):
        inner = lambda s: c**5 / 24 * 6 / (2 * s + c) ** 4
    else:
        raise ValueError((n, l))
    val, _ = integrate.quad(lambda s: _w(s) * inner(s), 1, np.inf, epsabs=0, epsrel=1e-13, limit=200)
    return -alpha**2 * 2 * Z / (3 * math.pi) * val


# point_limit_shift ---------------------------------------------------------

def test_point_limit_examples():
    assert shifts.point_limit_shift(2, 1, 1, ALPHA) == 0.0
    # -4 alpha^5 / (15 pi 8) evaluated by hand
    assert shifts.point_limit_shift(2, 0, 1, ALPHA) == pytest.approx(-2.1956115457214356e-13, rel=1e-14)
    assert shifts.point_limit_shift(1, 0, 1, ALPHA) / shifts.point_limit_shift(2, 0, 1, ALPHA) == pytest.approx(8)
    with pytest.raises(DomainError):
        shifts.point_limit_shift(1, 1, 1, ALPHA)


def test_point_limit_is_density_at_origin_times_charge():
    # -(4 Z alpha^2 / 15) |psi(0)|^2
    for n in (1, 2, 3):
        state = HydrogenicState(n, 0, 2 * ALPHA * 3.0)
        expect = -4 * 2 * ALPHA**2 / 15 * state.density_at_origin()
        assert shifts.point_limit_shift(n, 0, 2, ALPHA, 3.0) == pytest.approx(expect, rel=1e-14)


# first_order_shift ---------------------------------------------------------

def test_zero_potential_gives_zero():
    zero = lambda r: 0.0 * r
    assert shifts.first_order_shift(zero, HydrogenicState(1, 0, ALPHA), C) == 0.0


@pytest.mark.parametrize("n,l", [(1, 0), (2, 0), (2, 1)])
def test_point_shift_against_swapped_order_oracle(n, l):
    u = shifts.point_u_closure(1.0)
    got = shifts.first_order_shift(u, HydrogenicState(n, l, ALPHA), C)
    assert got == pytest.approx(swapped_order_shift(n, l, 1.0, ALPHA), rel=1e-6)


def test_uehling_shift_numbers():
    u = shifts.point_u_closure(1.0)
    e = {s: shifts.first_order_shift(u, HydrogenicState(*s, ALPHA), C) for s in [(1, 0), (2, 0), (2, 1), (3, 0)]}
    assert e[(2, 0)] == pytest.approx(-2.196e-13, rel=0.02)
    assert e[(1, 0)] / e[(2, 0)] == pytest.approx(8, rel=0.02)
    assert e[(1, 0)] / e[(3, 0)] == pytest.approx(27, rel=0.02)
    assert abs(e[(2, 1)]) <= 0.01 * abs(e[(2, 0)])
    assert all(e[s] < 0 for s in [(1, 0), (2, 0), (3, 0)])


def test_table_route_matches_closure():
    state = HydrogenicState(2, 0, ALPHA)
    r = np.geomspace(1e-6, state.extent, 500)
    table = kernel.uehling_point_table(1.0, r)
    closure = shifts.first_order_shift(shifts.point_u_closure(1.0), state, C)
    assert shifts.first_order_shift(table, state, C) == pytest.approx(closure, rel=1e-6)


def test_table_coverage_error():
    state = HydrogenicState(2, 0, ALPHA)
    table = kernel.uehling_point_table(1.0, np.geomspace(1e-4, 10.0, 50))
    with pytest.raises(CoverageError):
        shifts.first_order_shift(table, state, C)


@pytest.mark.slow
def test_gaussian_width_converges_to_point_limit():
    widths = [0.1, 0.03, 0.01]
    values = [shifts.shift_report(NuclearModel.gaussian(1.0, a), [(2, 0)], C).rows[0]["delta_E"] for a in widths]
    point = shifts.first_order_shift(shifts.point_u_closure(1.0), HydrogenicState(2, 0, ALPHA), C)
    gaps = [abs(v - point) for v in values]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-4 * abs(point)
    # and the point quadrature sits within 2% of the point-limit formula
    assert point == pytest.approx(shifts.point_limit_shift(2, 0, 1, ALPHA), rel=0.02)


# reports -------------------------------------------------------------------

def test_shift_report_contents():
    rep = shifts.shift_report(POINT, [(2, 0), (2, 1)], C)
    r20 = rep.row(2, 0)
    assert r20["delta_E_eV"] == pytest.approx(r20["delta_E"] * 510998.95, rel=1e-15)
    assert r20["point_limit"] == shifts.point_limit_shift(2, 0, 1, ALPHA)
    split = rep.splittings[2]["m_e_c2"]
    assert split == pytest.approx(r20["delta_E"], rel=0.01)
    d = rep.to_dict()
    assert d["model"]["kind"] == "point" and len(d["states"]) == 2
    text = rep.to_table()
    assert "pi times" in text and "splitting" in text
    with pytest.raises(KeyError):
        rep.row(3, 0)


def test_levelsplit_as_printed_is_pi_times_point_limit():
    assert shifts.levelsplit_as_printed(1, ALPHA) == pytest.approx(math.pi * shifts.point_limit_shift(2, 0, 1, ALPHA))


def test_dirac_density_variant_is_labelled_and_close():
    rep = shifts.shift_report(POINT, [(1, 0), (2, 0), (2, 1)], C, density="dirac")
    ref = shifts.shift_report(POINT, [(1, 0), (2, 0), (2, 1)], C)
    assert any(n.startswith("extension") for n in rep.notes)
    for s in [(1, 0), (2, 0)]:
        assert rep.row(*s)["delta_E"] == pytest.approx(ref.row(*s)["delta_E"], rel=2e-3)
    with pytest.raises(DomainError):
        shifts.shift_report(POINT, [(3, 2)], C, density="dirac")


def test_unknown_density_mode():
    with pytest.raises(DomainError):
        shifts.shift_report(POINT, [(1, 0)], C, density="klein-gordon")


def test_muonic_report_reduces_to_electronic():
    mu = shifts.muonic_report(POINT, constants=C.replace(m_eff=1.0))
    el = shifts.shift_report(POINT, [(2, 0), (2, 1)], C)
    assert [r["delta_E"] for r in mu.rows] == [r["delta_E"] for r in el.rows]
    assert mu.extra["enhancement_ratio"][2] == 1.0


def test_muonic_enhancement_against_oracle():
    mc = muonic_constants(alpha=ALPHA)
    rep = shifts.muonic_report(POINT, constants=mc)
    m = mc.m_eff
    split_mu = swapped_order_shift(2, 0, 1, ALPHA, m) - swapped_order_shift(2, 1, 1, ALPHA, m)
    split_e = swapped_order_shift(2, 0, 1, ALPHA) - swapped_order_shift(2, 1, 1, ALPHA)
    assert rep.splittings[2]["m_e_c2"] == pytest.approx(split_mu, rel=1e-6)
    assert rep.extra["enhancement_ratio"][2] == pytest.approx(split_mu / split_e, rel=1e-6)
    assert rep.extra["enhancement_ratio"][2] > 1e5
    # the orbit sits inside the polarisation cloud: the point-limit formula is off by far more than 10%
    r20 = rep.row(2, 0)
    assert abs(r20["delta_E"] / r20["point_limit"] - 1) > 0.1


# effective potential -------------------------------------------------------

@pytest.mark.parametrize("r", [1e-4, 3e-4])
def test_effective_potential_small_r(r):
    ep = shifts.effective_potential(1.0, ALPHA, r)
    assert ep.relative_difference <= 0.01
    assert ep.log_enhanced


def test_effective_potential_far_field():
    r = 15.0
    ep = shifts.effective_potential(1.0, ALPHA, r)
    assert ep.exact == pytest.approx(-ALPHA / r, rel=math.exp(-2 * r))
    assert not ep.log_enhanced


def test_effective_potential_weak_coupling_limit():
    r = 0.01
    ep = shifts.effective_potential(1.0, 1e-9, r)
    assert ep.exact / 1e-9 == pytest.approx(-1 / r, rel=1e-8)
    with pytest.raises(DomainError):
        shifts.effective_potential(1.0, ALPHA, 0.0)


def test_effective_coupling_is_unbounded():
    lr = shifts.critical_log_radius(1.0, ALPHA, 1.0)
    assert shifts.effective_coupling(1.0, ALPHA, lr) == pytest.approx(1.0, rel=1e-12)
    for row in shifts.instability_table(1.0, ALPHA):
        assert row["coupling_at_10x_smaller_log_r"] > row["bound"]
        assert row["log_r"] < 0
    # any bound is exceeded at small enough r
    assert shifts.effective_coupling(1.0, ALPHA, 10 * shifts.critical_log_radius(1.0, ALPHA, 100.0)) > 100
