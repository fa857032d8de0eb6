"""Command-line front end.

    vacpol uehling | spectrum | shift | spectral-lab | verify [options]

Exit status: 0 success, 1 configuration error, 2 numerical failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import io
import json
import math
import os
import sys
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning

from . import __version__, dirac, kernel, nuclear, shifts, spectral, verify
from .config import ConfigError, RunConfig, _drop_none, atomic_write, output_dir
from .errors import (CoverageError, DomainError, GapCrossingError, InvariantViolation,
                     QuadratureError, SupercriticalError, UnsupportedOperationError)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3

NUMERIC_ERRORS = (QuadratureError, InvariantViolation, GapCrossingError, CoverageError)


# output helpers -------------------------------------------------------------

def _provenance_header(cfg, provenance):
    return {"vacpol": __version__, "config_sha256": cfg.sha256(), "provenance": provenance}


def _csv(header, columns, rows):
    buf = io.StringIO()
    for key, val in header.items():
        buf.write(f"# {key}: {val}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json(obj):
    return json.dumps(verify._plain(obj), indent=1, sort_keys=False) + "\n"


class _Writer:
    """Collects output files and writes them only after every computation succeeded."""

    def __init__(self, directory):
        self.directory = directory
        self.files = []

    def add(self, name, text):
        self.files.append((name, text))

    def commit(self):
        paths = []
        for name, text in self.files:
            path = os.path.join(self.directory, name)
            atomic_write(path, text)
            paths.append(path)
        return paths


def _parallel_map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# subcommands ----------------------------------------------------------------

def cmd_uehling(cfg, writer, threads):
    """U(r) table and the momentum table of C, rho_vac^ and U^."""
    sec = cfg.section("uehling")
    model = cfg.model()
    r = np.geomspace(sec["r_min"], sec["r_max"], sec["n_r"])
    k = np.geomspace(sec["k_min"], sec["k_max"], sec["n_k"])
    chunks = np.array_split(r, max(1, min(threads, len(r))))
    if model.is_point:
        parts = _parallel_map(lambda c: kernel.uehling_point_table(model.Z, c), chunks, threads)
    else:
        parts = _parallel_map(lambda c: kernel.uehling_position(model, c), chunks, threads)
    table = kernel.RadialTable(np.concatenate([p.r_values for p in parts]),
                               np.concatenate([p.values for p in parts]),
                               np.concatenate([p.errors for p in parts]), dict(parts[0].meta))
    evals = [kernel.kernel_eval(model, x) for x in k]
    head = _provenance_header(cfg, table.meta.get("provenance", ""))
    mom_head = _provenance_header(cfg, "closed-form kernel C; rho_vac^ = phi^ C/(4 pi^2); U^ = 4 n^ C/k^4")
    mom_cols = ["k", "C", "rho_vac_hat", "U_hat"]
    mom_rows = [(e.k, e.C, e.rho_vac_hat, e.U_hat) for e in evals]
    if cfg.data["format"] == "csv":
        writer.add("uehling_position.csv", table.to_csv({k_: v for k_, v in head.items() if k_ != "provenance"}))
        writer.add("uehling_momentum.csv", _csv(mom_head, mom_cols, mom_rows))
    else:
        writer.add("uehling_position.json", _json({**head, "model": model.descriptor(), "table": table.to_dict()}))
        writer.add("uehling_momentum.json", _json({**mom_head, "model": model.descriptor(), "columns": mom_cols,
                                                   **{c: [row[i] for row in mom_rows] for i, c in enumerate(mom_cols)}}))
    return f"U(r) at {len(r)} radii, kernel at {len(k)} wavenumbers"


def _spectrum_setup(cfg):
    sec = cfg.section("spectrum")
    model = cfg.model()
    alpha = cfg.constants().alpha
    zalpha = sec.get("zalpha")
    if zalpha is None:
        zalpha = model.Z * alpha
    if zalpha >= 1.0:
        raise SupercriticalError(f"Z alpha = {zalpha:.6g} >= 1: the construction assumes Z alpha < 1 "
                                 "(subcritical coupling); refusing to solve")
    if zalpha == 0:
        pot = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    elif model.is_point:
        pot = lambda r: -zalpha / np.asarray(r, dtype=float)
    else:
        pot = lambda r: -zalpha * nuclear.potential(model, r) / model.Z
    r_max = sec.get("r_max")
    if r_max is None:
        grid = dirac.RadialGrid.for_coupling(zalpha, 1.0, sec["n_states"], sec["n_points"], sec["scheme"])
    else:
        grid = dirac.RadialGrid(r_max, sec["n_points"], sec["scheme"])
    return model, zalpha, pot, grid, sec


def cmd_spectrum(cfg, writer, threads):
    """Gap spectra per kappa and a comparison with the point-Coulomb levels."""
    model, zalpha, pot, grid, sec = _spectrum_setup(cfg)
    kappas = sec["kappas"]

    def one(kappa):
        spec = dirac.solve_channel(pot, kappa, grid)
        fine = dirac.solve_channel(pot, kappa, grid.refined(2)).gap_energies if sec["refine"] else None
        return spec, fine

    results = _parallel_map(one, kappas, threads)
    cols = ["kappa", "index", "energy", "coulomb_reference", "difference"]
    if sec["refine"]:
        cols += ["energy_2N", "extrapolated", "convergence"]
    rows = []
    for kappa, (spec, fine) in zip(kappas, results):
        gap = spec.gap_energies[: sec["n_states"]]
        ref = dirac.coulomb_reference_levels(kappa, zalpha, len(gap)) if zalpha > 0 else []
        for i, e in enumerate(gap):
            row = [kappa, i + 1, float(e), float(ref[i]), float(e - ref[i])]
            if sec["refine"]:
                if fine is not None and i < len(fine):
                    row += [float(fine[i]), float(fine[i] + (fine[i] - e) / 3.0), float(fine[i] - e)]
                else:
                    row += [math.nan] * 3
            rows.append(row)
    head = _provenance_header(cfg, "staggered finite differences, tridiagonal eigensolver; "
                                   "reference: Sommerfeld point-Coulomb formula")
    spectra = {str(k): s.to_dict(sec["spinors"]) for k, (s, _) in zip(kappas, results)}
    writer.add("spectrum.json", _json({**head, "model": model.descriptor(), "zalpha": zalpha,
                                       "spectra": spectra}))
    if cfg.data["format"] == "csv":
        writer.add("spectrum_comparison.csv", _csv(head, cols, rows))
    else:
        writer.add("spectrum_comparison.json", _json({**head, "columns": cols, "rows": rows}))
    n_gap = sum(len(s.gap_states) for s, _ in results)
    return f"Z alpha = {zalpha:.6g}: {n_gap} gap states over kappa = {kappas}"


def cmd_shift(cfg, writer, threads):
    """First-order shifts for the configured states; electronic or muonic."""
    sec = cfg.section("shift")
    model = cfg.model()
    constants = cfg.constants()
    states = [tuple(s) for s in sec["states"]]
    for n, l in states:
        if n < 1 or l > n - 1:
            raise ConfigError(f"shift/states: invalid quantum numbers ({n}, {l})")
    if sec["muonic"]:
        report = shifts.muonic_report(model, states, constants, sec["density"])
    else:
        report = shifts.shift_report(model, states, constants, sec["density"])
    prov = ("radial quadrature of -alpha^2 int r^2 U R_nl^2 with "
            + ("Dirac densities (extension)" if sec["density"] == "dirac" else "Schroedinger densities"))
    head = _provenance_header(cfg, prov)
    cols = ["n", "l", "delta_E", "delta_E_eV", "point_limit", "point_limit_eV"]
    rows = [[r[c] for c in cols] for r in report.rows]
    if cfg.data["format"] == "csv":
        writer.add("shift.csv", _csv(head, cols, rows))
    else:
        writer.add("shift.json", _json({**head, **report.to_dict()}))
    writer.add("shift.txt", "".join(f"# {k}: {v}\n" for k, v in head.items()) + report.to_table())
    return report.to_table().rstrip()


def cmd_spectral_lab(cfg, writer, threads):
    """Contour vs spectral projector difference, norm study, Q1 and Q2 checks."""
    sec = cfg.section("spectral_lab")
    model = cfg.model()
    if model.is_point:
        raise ConfigError("spectral-lab needs an extended (gaussian or uniform_ball) model")
    zalpha = sec["zalpha"]
    if zalpha >= 1.0:
        raise SupercriticalError(f"Z alpha = {zalpha} >= 1 is outside the subcritical regime")
    grid = dirac.RadialGrid(sec["r_max"], sec["n_points"], "uniform")
    free = spectral.OperatorMatrix.radial_dirac(sec["kappa"], grid)
    pert = spectral.OperatorMatrix.radial_dirac(sec["kappa"], grid, model, zalpha)
    pair = spectral.projector_pair(free, pert)
    contour = spectral.q_contour(free, pert, tol=sec["tol"])
    rel = spectral.relative_frobenius(contour.Q, pair.Q)
    hs = spectral.hs_norm_study(model, zalpha, sec["hs_points"], sec["kappa"], sec["r_max"])
    pairs = spectral.random_momenta(sec["n_momenta"], 3, seed=sec["seed"])
    q1 = []
    q2 = []
    for p, q, p1 in pairs:
        a = spectral.q1_trace_kernel(p, q, model)
        b = spectral.q1_trace_eta_quadrature(p, q, model)
        q1.append({"p": p, "q": q, "closed_form": a, "eta_quadrature": b,
                   "relative_difference": abs(a - b) / abs(a) if a else abs(b)})
        q2.append({"p": p, "p1": p1, "q": q, **spectral.q2_density_cancellation(p, p1, q, model)})
    head = _provenance_header(cfg, "spectral projectors by dense eigendecomposition; contour by "
                                   "exp-sinh trapezoid on the imaginary axis; 4x4 eta-quadrature oracles")
    report = {**head, "model": model.descriptor(), "zalpha": zalpha, "kappa": sec["kappa"],
              "grid": grid.descriptor(),
              "contour": {"relative_frobenius_vs_spectral": rel, **contour.to_dict()},
              "idempotency_defects": pair.idempotency_defects(),
              "hs_norm_study": hs, "q1_trace": q1, "q2_density": q2,
              "seed": sec["seed"]}
    if cfg.data["format"] == "csv":
        cols = ["quantity", "value"]
        rows = [("contour_relative_frobenius", rel), ("contour_nodes", contour.nodes)]
        rows += [(f"hs_norm_n{r['n_points']}", r["hs_norm"]) for r in hs["rows"]]
        rows += [("q1_max_relative_difference", max(x["relative_difference"] for x in q1)),
                 ("q2_max_residual_over_half_grid", max(x["residual"] / x["half_grid"] for x in q2))]
        writer.add("spectral_lab.csv", _csv(head, cols, rows))
    writer.add("spectral_lab.json", _json(report))
    return f"contour vs spectral: {rel:.2e} (relative Frobenius), {contour.nodes} nodes"


def cmd_verify(cfg, writer, threads, golden=None):
    sec = cfg.section("verify")
    only = sec.get("only") or []
    unknown = sorted(set(only) - set(verify.CHECK_IDS))
    if unknown:
        raise ConfigError(f"unknown check id(s) {unknown}; known ids: {', '.join(verify.CHECK_IDS)}")
    golden = golden or sec.get("golden")
    if golden is not None and not os.path.exists(golden):
        raise ConfigError(f"golden file not found: {golden}")
    results = verify.run(only, golden)
    for r in results:
        print(r.line(), flush=True)
    rep = verify.report(results)
    writer.add("verify.json", _json({**_provenance_header(cfg, "acceptance suite"), **rep}))
    return rep


# argument parsing -----------------------------------------------------------

def _state(text):
    try:
        n, l = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected n,l (e.g. 2,0), got {text!r}") from None
    return [n, l]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (validated against the shipped schema)")
    common.add_argument("--format", choices=["csv", "json"], help="output container")
    common.add_argument("--out", help="output directory (overrides $VACPOL_OUT_DIR and the config)")
    common.add_argument("--threads", type=int, help="worker threads for independent sub-tasks")
    model = common.add_argument_group("model and constants")
    model.add_argument("--kind", choices=list(nuclear.KINDS), help="nuclear model kind")
    model.add_argument("--Z", type=float, help="nuclear charge")
    model.add_argument("--width-fm", type=float, help="model width in fm")
    model.add_argument("--width", type=float, help="model width in natural units")
    model.add_argument("--alpha", type=float, help="fine-structure constant")
    model.add_argument("--m-eff", type=float, help="bound-particle mass in electron masses")

    parser = argparse.ArgumentParser(prog="vacpol", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"vacpol {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("uehling", parents=[common], help="Uehling potential and kernel tables")
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--n-r", type=int)
    p.add_argument("--k-min", type=float)
    p.add_argument("--k-max", type=float)
    p.add_argument("--n-k", type=int)

    p = sub.add_parser("spectrum", parents=[common], help="radial Dirac gap spectra")
    p.add_argument("--zalpha", type=float, help="coupling Z alpha (default: Z times alpha)")
    p.add_argument("--kappa", type=int, action="append", help="channel; repeat for several")
    p.add_argument("--n-points", type=int)
    p.add_argument("--r-max", type=float)
    p.add_argument("--scheme", choices=list(dirac.SCHEMES))
    p.add_argument("--n-states", type=int)
    p.add_argument("--no-refine", action="store_true", help="skip the 2N grid and convergence columns")
    p.add_argument("--spinors", action="store_true", help="include radial amplitudes in the JSON")

    p = sub.add_parser("shift", parents=[common], help="first-order level shifts")
    p.add_argument("--preset", choices=["hydrogen-2s2p", "muonic"])
    p.add_argument("--state", type=_state, action="append", help="n,l; repeat for several")
    p.add_argument("--density", choices=["schroedinger", "dirac"])

    p = sub.add_parser("spectral-lab", parents=[common], help="projector calculus studies")
    p.add_argument("--zalpha", type=float)
    p.add_argument("--kappa", type=int)
    p.add_argument("--n-points", type=int)
    p.add_argument("--r-max", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-momenta", type=int)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    p.add_argument("--only", action="append", help="check id (comma-separated or repeated)")
    p.add_argument("--golden", help="golden-value file to check against")
    return parser


def _overrides(args):
    model = {"kind": args.kind, "Z": args.Z, "width_fm": args.width_fm, "width": args.width}
    over = {"constants": {"alpha": args.alpha, "m_eff": args.m_eff}, "format": args.format,
            "threads": args.threads}
    if any(v is not None for v in model.values()):
        over["model"] = model
    cmd = args.command
    if cmd == "uehling":
        over["uehling"] = {"r_min": args.r_min, "r_max": args.r_max, "n_r": args.n_r,
                           "k_min": args.k_min, "k_max": args.k_max, "n_k": args.n_k}
    elif cmd == "spectrum":
        over["spectrum"] = {"zalpha": args.zalpha, "kappas": args.kappa, "n_points": args.n_points,
                            "r_max": args.r_max, "scheme": args.scheme, "n_states": args.n_states,
                            "refine": False if args.no_refine else None,
                            "spinors": True if args.spinors else None}
    elif cmd == "shift":
        over["shift"] = {"states": args.state, "density": args.density}
    elif cmd == "spectral-lab":
        over["spectral_lab"] = {"zalpha": args.zalpha, "kappa": args.kappa, "n_points": args.n_points,
                                "r_max": args.r_max, "tol": args.tol, "seed": args.seed,
                                "n_momenta": args.n_momenta}
    elif cmd == "verify":
        only = [x for item in (args.only or []) for x in item.split(",") if x]
        over["verify"] = {"only": only or None, "golden": args.golden}
    return over


def _load(args):
    """Config file, then preset, then command-line flags; the result is re-validated."""
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig.default()
    if args.command == "shift" and args.preset:
        cfg = cfg.with_preset(args.preset)
    over = _overrides(args)
    model = over.get("model")
    if model:
        current = dict(cfg.data["model"])
        if model.get("width") is not None or model.get("kind") == "point":
            current.pop("width_fm", None)
        if model.get("width_fm") is not None or model.get("kind") == "point":
            current.pop("width", None)
        cfg.data["model"] = current
    merged = _drop_none(cfg.updated(over).data)
    return RunConfig.from_text(json.dumps(merged), "command-line options", locate=False)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    # quadrature warnings are superseded by the explicit error estimates; the
    # library silences them per call, which is not thread-safe across workers
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return _run(args)


def _run(args):
    try:
        cfg = _load(args)
        threads = int(cfg.data.get("threads") or 1)
        writer = _Writer(output_dir(args.out, cfg))
        if args.command == "uehling":
            msg = cmd_uehling(cfg, writer, threads)
        elif args.command == "spectrum":
            msg = cmd_spectrum(cfg, writer, threads)
        elif args.command == "shift":
            msg = cmd_shift(cfg, writer, threads)
        elif args.command == "spectral-lab":
            msg = cmd_spectral_lab(cfg, writer, threads)
        else:
            rep = cmd_verify(cfg, writer, threads)
            for path in writer.commit():
                print(f"wrote {path}")
            if not rep["all_passed"]:
                print(f"verification failed: {', '.join(rep['failed'])}", file=sys.stderr)
                return EXIT_VERIFY
            return EXIT_OK
        for path in writer.commit():
            print(f"wrote {path}")
        print(msg)
        return EXIT_OK
    except NUMERIC_ERRORS as exc:
        print(f"vacpol: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SupercriticalError as exc:
        print(f"vacpol: refused: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, DomainError, UnsupportedOperationError) as exc:
        print(f"vacpol: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
