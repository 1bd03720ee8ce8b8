"""Command-line front end.

Commands write into the directory given by ``--out``: ``roof`` produces the
surface that ``certify`` and ``slice`` read back.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from . import io as qio
from .concurrence import c_roof, verify_plane
from .curve import GridSpec, MinimizerConfig, sweep_grid
from .envelope import lower_envelope
from .exceptions import ConstraintError, DomainError, EnvelopeError
from .sdp.certify import DEFAULT_CUTS, certify_grid, parse_cuts
from .states import classify, z_ppt_boundary, z_sep_boundary

log = logging.getLogger("qutrit_roof")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
FINE_GRID = "317x317"  # about 1e5 nodes on the half facet


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _grid(text):
    try:
        return GridSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _count(text):
    """``N`` or ``NxM``; only the first count is used."""
    try:
        n = int(text.lower().split("x")[0])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or NxM, got {text!r}") from None
    if n < 2:
        raise argparse.ArgumentTypeError("count must be >= 2")
    return n


def _ext(fmt_name):
    return "json" if fmt_name == "json" else "csv"


# commands ---------------------------------------------------------------


def cmd_classify(args):
    spec = args.grid
    config = {"command": "classify", "grid": asdict(spec), "seed": None}
    rbar, zs = spec.full_rbar_values(), spec.z_values()
    rows = [(r, z, classify(float(r), float(z)).value) for r in rbar for z in zs]
    out = Path(args.out)
    qio.write_table(out / f"regions.{_ext(args.format)}", ("rbar", "z", "label"), rows, config, args.format)
    bounds = [(r, z_sep_boundary(float(r)), z_ppt_boundary(float(r))) for r in rbar]
    qio.write_table(out / f"boundaries.{_ext(args.format)}", ("rbar", "z_sep", "z_ppt"), bounds, config, args.format)
    return EXIT_OK


def cmd_roof(args):
    spec = GridSpec.parse(FINE_GRID) if args.fine else args.grid
    cfg = MinimizerConfig(seed=args.seed, tolerance=args.tol)
    config = {"command": "roof", "grid": asdict(spec), "minimizer": asdict(cfg), "seed": args.seed}
    surface = sweep_grid(spec, cfg, jobs=args.jobs)
    env = lower_envelope(surface)
    half = surface.half()
    rbar, zs = surface.rbar[half], surface.z
    e_curve = surface.values[half]
    e_roof = np.array([[env.evaluate((r, z)) for z in zs] for r in rbar])
    c_rf = np.array([[c_roof(r, z) for z in zs] for r in rbar])
    rows = []
    for i, r in enumerate(rbar):
        for j, z in enumerate(zs):
            rows.append((r, z, e_curve[i, j], e_roof[i, j], c_rf[i, j], *surface.xi[half][i, j],
                         bool(surface.converged[half][i, j]), surface.grad_norm[half][i, j]))
    out = Path(args.out)
    qio.write_table(out / qio.SURFACE_FILE, qio.SURFACE_COLUMNS, rows, config, "csv")
    if args.format == "json":
        qio.write_table(out / "surface.json", qio.SURFACE_COLUMNS, rows, config, "json")
    for name, mat in (("e_curve", e_curve), ("e_roof", e_roof), ("c_roof", c_rf)):
        qio.write_matrix(out / f"{name}.txt", mat.T, rbar, zs, config, name)
    plane = verify_plane(surface)
    unconverged = [(r, z) for r, z in surface.unconverged if r >= 0]
    manifest = {
        "nodes": int(e_curve.size),
        "hull_vertices": int(env.vertices.size),
        "hull_triangles": int(len(env.triangles)),
        "unconverged": unconverged,
        "concurrence_plane": plane.as_dict(),
        "files": [qio.SURFACE_FILE, "e_curve.txt", "e_roof.txt", "c_roof.txt"],
    }
    qio.write_json(out / qio.MANIFEST_FILE, manifest, config)
    if unconverged:
        log.error("%d nodes did not converge; see %s", len(unconverged), out / qio.MANIFEST_FILE)
        return EXIT_NUMERIC
    return EXIT_OK


def _load_roof(out):
    path = Path(out) / qio.SURFACE_FILE
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run `qutrit-roof roof --out {out}` first")
    surface, roof_config = qio.read_surface(out)
    return surface, lower_envelope(surface), roof_config


def cmd_certify(args):
    cuts = parse_cuts(args.ppt_cuts)
    spec = args.grid
    surface, env, roof_config = _load_roof(args.out)
    config = {
        "command": "certify", "grid": asdict(spec), "tol": args.tol, "seed": roof_config.get("seed"),
        "ppt_cuts": ["".join(c) for c in cuts], "roof_config_hash": qio.config_hash(roof_config),
    }
    report = certify_grid(env, spec.rbar_values(), spec.z_values(), cuts, tol=args.tol, jobs=args.jobs)
    out = Path(args.out)
    if args.format == "json":
        qio.write_json(out / "certify.json", report, config)
    else:
        cols = ("rbar", "z", "roof", "sdp_bound", "rigorous_bound", "discrepancy", "status", "gap", "iterations")
        qio.write_table(out / "certify.csv", cols, [[n[c] for c in cols] for n in report["nodes"]], config)
        qio.write_json(out / "certify.json", {"summary": report["summary"]}, config)
    s = report["summary"]
    print(f"max_discrepancy={s['max_discrepancy']} frac_below_1e-9={s['frac_below_1e-9']} failures={len(s['failures'])}")
    return EXIT_NUMERIC if s["failures"] else EXIT_OK


def cmd_slice(args):
    if not 0.0 <= args.z <= 1.0:
        raise UsageError(f"--z must lie in [0, 1], got {args.z}")
    surface, env, roof_config = _load_roof(args.out)
    config = {"command": "slice", "z": args.z, "rbar_count": args.grid, "seed": roof_config.get("seed"),
              "roof_config_hash": qio.config_hash(roof_config)}
    rows = []
    for r in np.linspace(0.0, 1.0, args.grid):
        rows.append((r, classify(float(r), args.z).value, env.evaluate((r, args.z)), c_roof(float(r), args.z)))
    name = f"slice_z{qio.fmt(args.z)}.{_ext(args.format)}"
    qio.write_table(Path(args.out) / name, ("rbar", "label", "e_roof", "c_roof"), rows, config, args.format)
    return EXIT_OK


# parser -----------------------------------------------------------------


def build_parser():
    p = _Parser(prog="qutrit-roof", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, grid_default="101x101"):
        sp.add_argument("--out", default=".", help="output directory (default: current)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        if grid_default:
            sp.add_argument("--grid", type=_grid, default=GridSpec.parse(grid_default), help="NxM nodes on [0,1]^2")

    sp = sub.add_parser("classify", help="region map and boundary curves")
    common(sp)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("roof", help="characteristic curve, envelope and concurrence roof")
    common(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-12, help="simplex convergence tolerance")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--fine", action="store_true", help=f"production grid {FINE_GRID} (overrides --grid)")
    sp.set_defaults(func=cmd_roof)

    sp = sub.add_parser("certify", help="SDP lower bounds against an existing roof run")
    common(sp, "21x21")
    sp.add_argument("--tol", type=float, default=1e-9, help="duality gap tolerance")
    sp.add_argument("--ppt-cuts", default=",".join("".join(c) for c in DEFAULT_CUTS),
                    help="comma-separated cuts from A1,B1,A2,B2 (default: A2B2)")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("slice", help="horizontal cross-section of an existing roof run")
    common(sp, None)
    sp.add_argument("--z", type=float, required=True)
    sp.add_argument("--grid", type=_count, default=101, help="number of rbar samples (N or NxM)")
    sp.set_defaults(func=cmd_slice)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        return args.func(args)
    except (UsageError, ConstraintError, DomainError) as exc:
        print(f"qutrit-roof: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EnvelopeError, np.linalg.LinAlgError) as exc:
        print(f"qutrit-roof: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"qutrit-roof: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
