"""Command-line front end.

Subcommands mirror the workflow: build the map offline (build-vom), run a
single pilot length (run) or the full sweep (sweep), sanity-check a
configuration's geometry (validate), and turn a results CSV into plain
plot-data files (plot).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .config import load_config
from .geometry import near_field_bounds, validate_roi
from .harness import (WORKERS_ENV, emit_results, prepare_run, read_results,
                      run_sweep)
from .scene import near_field_check
from .vom import build_vom, load_vom, save_vom


def _cmd_build_vom(args) -> int:
    cfg = load_config(args.config)
    geom = cfg.geometry()
    scene = cfg.scene()
    vom = build_vom(scene, geom, J=cfg.j, K=cfg.k,
                    grid_spacing=cfg.grid_spacing,
                    cluster_radius=cfg.cluster_radius)
    save_vom(vom, args.output)
    print(f"wrote map with {len(vom.library)} virtual objects, "
          f"{len(vom.comm_entries)} grid entries -> {args.output}")
    return 0


def _load_ctx(cfg, vom_path):
    vom = load_vom(vom_path) if vom_path else None
    return prepare_run(cfg, vom=vom)


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    t_p = args.t_p if args.t_p is not None else cfg.t_p_values[0]
    cfg = replace(cfg, t_p_values=(t_p,))
    ctx = _load_ctx(cfg, args.vom)
    table = run_sweep(cfg, ctx=ctx, verbose=not args.quiet)
    csv_path, meta_path = emit_results(table, args.output)
    for row in table.rows:
        print(f"{row.scheme:>9}  T_p={row.t_p:<4d} NMSE={row.nmse_mean:.4e} "
              f"rate={row.rate_mean:.3f} b/s/Hz")
    print(f"wrote {csv_path} and {meta_path}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    ctx = _load_ctx(cfg, args.vom)
    table = run_sweep(cfg, ctx=ctx, verbose=not args.quiet)
    csv_path, meta_path = emit_results(table, args.output)
    print(f"wrote {csv_path} and {meta_path} "
          f"({len(table.rows)} rows, {cfg.trials} trials each)")
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    geom = cfg.geometry()
    scene = cfg.scene()
    lower, upper = near_field_bounds(geom)
    print(f"array: {geom.n} elements, aperture {geom.aperture:.4f} m, "
          f"wavelength {geom.wavelength:.4f} m")
    print(f"radiative near field: ({lower:.4f}, {upper:.4f}) m")

    problems = 0
    ok, violations = validate_roi(geom, [cfg.ue])
    if ok:
        print(f"user location {cfg.ue}: inside the near-field region")
    else:
        problems += len(violations)
        print(f"user location {cfg.ue}: OUTSIDE ({violations[0].kind})")

    grid = scene.roi.grid(cfg.grid_spacing)
    ok, violations = validate_roi(geom, grid)
    if ok:
        print(f"ROI grid ({grid.shape[0]} points): all inside")
    else:
        problems += len(violations)
        points = {tuple(v.point) for v in violations}
        print(f"ROI grid: {len(points)} of {grid.shape[0]} points violate "
              "the near-field bounds, e.g. "
              + ", ".join(str(p) for p in sorted(points)[:3]))

    for msg in near_field_check(scene, geom):
        problems += 1
        print(f"scene: {msg}")
    if problems == 0:
        print("configuration valid")
        return 0
    print(f"{problems} near-field finding(s); the spherical-wave model stays "
          "exact, but map metrics weight such points strongly")
    return 1


def _cmd_plot(args) -> int:
    table = read_results(args.results)
    schemes = table.schemes()
    t_ps = table.t_p_values()
    os.makedirs(args.output, exist_ok=True)
    written = []
    for stem, attr in (("nmse_vs_tp", "nmse_mean"), ("rate_vs_tp", "rate_mean")):
        path = os.path.join(args.output, stem + ".dat")
        lines = ["# t_p " + " ".join(schemes)]
        for t_p in t_ps:
            vals = [repr(getattr(table.row(s, t_p), attr)) for s in schemes]
            lines.append(" ".join([str(t_p)] + vals))
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
        written.append(path)
    print("wrote " + " and ".join(written))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfisac",
        description="Near-field ISAC channel-estimation simulator",
        epilog=f"Set {WORKERS_ENV}=<n> to parallelize sweeps over n processes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-vom", help="build the virtual object map offline")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True, help="map file to write")
    p.set_defaults(func=_cmd_build_vom)

    p = sub.add_parser("run", help="Monte Carlo run at a single pilot length")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True, help="results directory")
    p.add_argument("--t-p", type=int, default=None,
                   help="pilot length (default: first sweep value)")
    p.add_argument("--vom", default=None, help="prebuilt map file")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="full pilot-length sweep")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True, help="results directory")
    p.add_argument("--vom", default=None, help="prebuilt map file")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate", help="near-field check of a configuration")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("plot", help="emit plot-data files from a results CSV")
    p.add_argument("results", help="path to results.csv")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
