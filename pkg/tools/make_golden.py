"""Regenerate src/vacpol/data/golden.json from high-precision mpmath oracles.

None of these oracles calls into vacpol: each value comes from a direct
quadrature of the defining integral at 40 significant digits (18 for the slower
two-dimensional momentum integrals, a few minutes each).
"""

import json
import pathlib

import mpmath as mp

mp.mp.dps = 40


def c_integral(k):
    k = mp.mpf(k)
    f = lambda x: (1 - x**2) * mp.log(1 + k**2 * (1 - x**2) / 4)
    return k**2 / 2 * mp.quad(f, [0, 1])


def u_point(Z, r):
    r = mp.mpf(r)
    f = lambda s: mp.exp(-2 * r * s) * (1 + 1 / (2 * s**2)) * mp.sqrt(s**2 - 1) / s**2
    return 2 * Z / (3 * mp.pi * r) * mp.quad(f, [1, 2, 5, mp.inf])


def f0_two_dimensional(xi):
    """-(1/16 pi^3) int d^3p (1 - p^2 u^2/(1+p^2)) e^{i p xi u} (1+p^2)^{-3/2}.

    Radial times angular quadrature: the u-integral is done numerically at
    each p and the oscillatory p-integral is summed over half periods.
    """
    with mp.workdps(18):
        return _f0(mp.mpf(xi))


def _f0(xi):
    def radial(p):
        e2 = 1 + p**2
        ang = mp.quad(lambda u: (1 - p**2 * u**2 / e2) * mp.cos(p * xi * u), [-1, 0, 1])
        return 2 * mp.pi * p**2 * ang / e2**1.5

    val = mp.quadosc(radial, [0, mp.inf], omega=xi)
    return -val / (16 * mp.pi**3)


def main():
    entries = {
        "C(1)": (c_integral(1), "mpmath 40-digit quadrature of the one-dimensional kernel integral", 1e-12),
        "C(3.7)": (c_integral("3.7"), "mpmath 40-digit quadrature of the one-dimensional kernel integral", 1e-12),
        "U_point(Z=1,r=1)": (u_point(1, 1), "mpmath 40-digit quadrature of the point-nucleus s-integral", 1e-10),
        "U_point(Z=1,r=0.01)": (u_point(1, "0.01"), "mpmath 40-digit quadrature of the point-nucleus s-integral", 1e-10),
        "F0(2)": (f0_two_dimensional(2), "mpmath radial x angular quadrature of the momentum integral", 1e-8),
        "F0(4)": (f0_two_dimensional(4), "mpmath radial x angular quadrature of the momentum integral", 1e-8),
    }
    out = {"format": "vacpol-golden-1", "values": {}}
    for key, (val, prov, rtol) in entries.items():
        out["values"][key] = {"value": float(mp.nstr(val, 17)), "repr": mp.nstr(val, 17),
                              "rtol": rtol, "provenance": prov}
    path = pathlib.Path(__file__).resolve().parents[1] / "src" / "vacpol" / "data" / "golden.json"
    path.write_text(json.dumps(out, indent=2) + "\n")
    print(path.read_text())


if __name__ == "__main__":
    main()
