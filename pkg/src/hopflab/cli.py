"""Command-line front end.

Subcommands: example, trace, refine, minimize, verify, fourier, plot.
Structured records go to JSON, large numeric tables to CSV, figures to SVG;
every output embeds the run configuration (JSON key ``run_config``, ``#``
comment lines in CSV, an XML comment in SVG).  Identical configuration and
seed produce byte-identical outputs.  Exit codes: 0 success, 1 check
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, calculus, harmonic, minimize as radial, qdiff, verify
from .examples import make_map
from .geometry import DomainSpec, ParameterError
from .svg import SvgCanvas, draw_domain


@dataclasses.dataclass
class RunConfig:
    subcommand: str
    params: dict
    seed: int | None
    version: str = __version__

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, "params": self.params,
                "seed": self.seed, "version": self.version}

    def json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _parse_complex(text: str) -> complex:
    return complex(text.replace("i", "j").replace(" ", ""))


def _parse_domain(text: str) -> DomainSpec:
    kind, _, rest = text.partition(":")
    parts = [float(p) for p in rest.split(",")] if rest else []
    if kind == "disk" and len(parts) == 1:
        return DomainSpec.disk(parts[0])
    if kind == "annulus" and len(parts) == 2:
        return DomainSpec.annulus(parts[0], parts[1])
    if kind == "rectangle" and len(parts) == 4:
        return DomainSpec.rectangle(*parts)
    raise argparse.ArgumentTypeError(f"cannot parse domain {text!r} "
                                     "(use disk:r | annulus:ri,ro | rectangle:x0,x1,y0,y1)")


def _out_path(args, name: str) -> Path:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    p = Path(name)
    return p if p.is_absolute() else out_dir / p


def _write_json(path: Path, payload: dict, config: RunConfig) -> None:
    payload = {"run_config": config.to_dict(), **payload}
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def _write_csv(path: Path, header: list[str], rows, config: RunConfig, extra_comments=()) -> None:
    lines = [f"# run_config: {config.json()}"]
    lines += [f"# {c}" for c in extra_comments]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _read_csv(path: Path) -> tuple[list[str], np.ndarray, dict]:
    meta: dict = {}
    header: list[str] = []
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("run_config:"):
                meta["run_config"] = json.loads(body.split(":", 1)[1])
            elif ":" in body:
                k, v = body.split(":", 1)
                meta[k.strip()] = v.strip()
            continue
        if not header:
            header = line.split(",")
            continue
        if line.strip():
            rows.append([float(v) for v in line.split(",")])
    return header, np.asarray(rows, dtype=float), meta


def _resolve_seed(args) -> int:
    env = os.environ.get("HOPFLAB_SEED")
    if env is not None:
        return int(env)
    return int(getattr(args, "seed", 42) or 42)


# ---------------------------------------------------------------------------
# subcommand handlers


def _map_from_args(args):
    params = {}
    if args.id == "power_log":
        params["p"] = args.p
    elif args.id == "hammering":
        params.update(r=args.r, R=args.R)
    return make_map(args.id, **params)


def cmd_example(args) -> int:
    emap = _map_from_args(args)
    grid = emap.to_grid(args.n, args.n, analytic=True)
    config = RunConfig("example", {"id": args.id, "n": args.n, **emap.params}, None)
    path = _out_path(args, args.out)
    _write_json(path, {"grid": grid.to_dict()}, config)
    print(f"example {args.id}: {args.n}x{args.n} grid -> {path}")
    return 0


def cmd_trace(args) -> int:
    emap = make_map(args.phi, **({"p": args.p} if args.phi == "power_log" else {}))
    phi = qdiff.PhiFunction.from_example(emap)
    seed_pt = _parse_complex(args.seed)
    traj = qdiff.trace_trajectory(phi, seed_pt, kind=args.kind, step=args.step,
                                  max_phi_length=args.max_phi_length)
    config = RunConfig("trace", {"phi": args.phi, "seed": str(args.seed), "kind": args.kind,
                                 "step": args.step, "max_phi_length": args.max_phi_length}, None)
    path = _out_path(args, args.out)
    rows = qdiff.trajectory_csv_rows(traj, phi)
    _write_csv(path, ["t", "x", "y", "cum_phi_length"], rows, config,
               extra_comments=[f"kind: {traj.kind}", f"termination: {traj.termination}"])
    print(f"trace {args.phi} {args.kind}: {traj.points.size} points, "
          f"phi-length {traj.phi_length:.6g}, ends {traj.termination} -> {path}")
    return 0


def cmd_refine(args) -> int:
    grid = calculus.MapGrid.from_json(Path(args.field).read_text())
    target = _parse_domain(args.target) if args.target else None
    report = harmonic.dyadic_refine(grid, target=target, level=args.level)
    config = RunConfig("refine", {"field": str(args.field), "target": args.target,
                                  "level": args.level}, None)
    payload = {
        "sup_dev": report.sup_dev,
        "energy_delta": report.energy_delta,
        "cell_count": report.cell_count,
        "square_size": report.square_size,
        "square_diameter": report.square_diameter,
        "level": report.level,
    }
    path = _out_path(args, args.report)
    _write_json(path, payload, config)
    if args.out:
        _write_json(_out_path(args, args.out), {"grid": report.refined.to_dict()}, config)
    print(f"refine level {args.level}: {report.cell_count} cells, sup_dev {report.sup_dev:.6g}, "
          f"energy_delta {report.energy_delta:.6g} -> {path}")
    return 0


def cmd_minimize(args) -> int:
    profile = radial.minimize_radial(args.r, args.R, args.nodes, sigma=args.sigma)
    res = radial.el_residual(profile)
    lifted = radial.lift_to_map(profile, n_theta=256)
    hopf = calculus.hopf_product(calculus.wirtinger(lifted))
    nodes = lifted.nodes()
    target_phi = -0.25 / nodes**2
    away = np.abs(np.abs(nodes) - 1.0) > 0.1 * (args.R - args.r)
    phi_dev = float(np.max(np.abs(hopf.values[away] - target_phi[away]) / np.abs(target_phi[away])))
    interval = profile.coincidence_interval()

    config = RunConfig("minimize", {"r": args.r, "R": args.R, "nodes": args.nodes,
                                    "sigma": args.sigma}, None)
    csv_path = _out_path(args, args.out)
    _write_csv(csv_path, ["rho", "H", "coincident"],
               [(float(r), float(h), int(c)) for r, h, c in zip(profile.rho, profile.values, profile.coincident)],
               config)
    inactive = ~profile.coincident
    inactive[-1] = False
    report = {
        "energy": radial.radial_energy(profile),
        "coincidence_interval": list(interval) if interval else None,
        "el_residual_max_free": float(np.max(np.abs(res[inactive]))) if inactive.any() else 0.0,
        "el_residual_min_active": float(np.min(res[profile.coincident])) if profile.coincident.any() else 0.0,
        "phi_relative_deviation_away_from_free_boundary": phi_dev,
        "dH_modulus_near_free_boundary": radial.dh_modulus_near_free_boundary(profile),
    }
    _write_json(_out_path(args, args.report), report, config)
    print(f"minimize r={args.r} R={args.R}: energy {report['energy']:.6g}, "
          f"coincidence {report['coincidence_interval']}, phi dev {phi_dev:.3g} -> {csv_path}")
    return 0


def cmd_verify(args) -> int:
    seed = _resolve_seed(args)
    reports = verify.run_suite(args.suite, seed=seed)
    summary = verify.suite_summary(reports)
    config = RunConfig("verify", {"suite": args.suite}, seed)
    path = _out_path(args, args.report)
    _write_json(path, {"checks": [r.to_dict() for r in reports], "summary": summary}, config)
    status = "ok" if not summary["unexpected_failures"] else f"FAIL {summary['unexpected_failures']}"
    print(f"verify suite={args.suite} seed={seed}: {summary['ok']}/{summary['total']} ok ({status}) -> {path}")
    return 0 if not summary["unexpected_failures"] else 1


def cmd_fourier(args) -> int:
    seed = _resolve_seed(args)
    rep = verify.fourier_suite(count=args.count, max_degree=args.degree_max, seed=seed)
    circle = verify.fourier_circle_case()
    config = RunConfig("fourier", {"count": args.count, "degree_max": args.degree_max}, seed)
    path = _out_path(args, args.report)
    _write_json(path, {"checks": [rep.to_dict(), circle.to_dict()]}, config)
    ok = rep.ok and circle.ok
    print(f"fourier: {rep.details['gated']} gated, worst ratio {rep.details['worst_ratio']:.6f}, "
          f"{'ok' if ok else 'FAIL'} -> {path}")
    return 0 if ok else 1


_TRAJ_STYLE = {"vertical": None, "horizontal": "6,4"}


def cmd_plot(args) -> int:
    config = RunConfig("plot", {"traj": [str(t) for t in args.traj], "grid": args.grid}, None)
    domain = None
    curves = []
    for tpath in args.traj:
        header, rows, meta = _read_csv(Path(tpath))
        kind = meta.get("kind", "vertical")
        pts = rows[:, 1] + 1j * rows[:, 2]
        curves.append(("trajectory", kind, pts))
    image_curves = []
    if args.grid:
        grid = calculus.MapGrid.from_json(Path(args.grid).read_text())
        domain = grid.domain
        v = grid.values
        stride1 = max(1, grid.lattice.n1 // 12)
        stride2 = max(1, grid.lattice.n2 // 12)
        for i in range(0, grid.lattice.n1, stride1):
            image_curves.append(np.concatenate([v[i, :], v[i, :1]]) if grid.lattice.kind == "polar" else v[i, :])
        for j in range(0, grid.lattice.n2, stride2):
            image_curves.append(v[:, j])

    xs, ys = [], []
    for _, _, pts in curves:
        xs += [pts.real.min(), pts.real.max()]
        ys += [pts.imag.min(), pts.imag.max()]
    for pts in image_curves:
        xs += [pts.real.min(), pts.real.max()]
        ys += [pts.imag.min(), pts.imag.max()]
    if domain is not None:
        bx = domain.bbox()
        xs += [bx[0], bx[1]]
        ys += [bx[2], bx[3]]
    if not xs:
        print("plot: nothing to draw", file=sys.stderr)
        return 2
    pad = 0.05 * max(max(xs) - min(xs), max(ys) - min(ys), 1e-9)
    canvas = SvgCanvas(min(xs) - pad, max(xs) + pad, min(ys) - pad, max(ys) + pad)
    canvas.comment(f"run_config: {config.json()}")
    if domain is not None:
        draw_domain(canvas, domain)
    for _, kind, pts in curves:
        canvas.polyline(pts, stroke="#0044cc", width=1.2, dash=_TRAJ_STYLE.get(kind))
    for pts in image_curves:
        canvas.polyline(pts, stroke="#cc3300", width=0.8)
    path = _out_path(args, args.out)
    path.write_text(canvas.render())
    print(f"plot: {len(curves)} trajectories, {len(image_curves)} image curves -> {path}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hopflab",
                                     description="stationary-map laboratory: example fields, "
                                                 "trajectory tracing, harmonic refinement, radial "
                                                 "minimization, and inequality verification")
    parser.add_argument("--out-dir", default="./out", help="directory for relative output paths")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap (recorded; computations are single-threaded)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("example", help="emit a sampled example map as JSON")
    p.add_argument("--id", required=True,
                   choices=["butterfly", "hammering", "power_log", "piecewise_linear"])
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--p", type=float, default=4.0, help="exponent for power_log")
    p.add_argument("--r", type=float, default=0.5, help="inner radius for hammering")
    p.add_argument("--R", type=float, default=2.0, help="outer radius for hammering")
    p.add_argument("--out", default="field.json")
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("trace", help="trace a trajectory of an example Hopf product")
    p.add_argument("--phi", required=True,
                   choices=["butterfly", "hammering", "power_log", "piecewise_linear"])
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--seed", required=True, help="seed point, e.g. 0.7+0.1i")
    p.add_argument("--kind", choices=["vertical", "horizontal"], default="vertical")
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--max-phi-length", type=float, default=float("inf"))
    p.add_argument("--out", default="traj.csv")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("refine", help="dyadic harmonic refinement of a grid file")
    p.add_argument("field", help="MapGrid JSON file")
    p.add_argument("--target", default=None, help="target domain, e.g. annulus:1,1.25")
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--report", default="refine.json")
    p.add_argument("--out", default=None, help="optionally write the refined grid JSON")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("minimize", help="radial obstacle-problem minimizer between annuli")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--nodes", type=int, default=2000)
    p.add_argument("--sigma", type=float, default=None, help="outer target radius (default critical)")
    p.add_argument("--out", default="profile.csv")
    p.add_argument("--report", default="min.json")
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("verify", help="run the inequality check suites")
    p.add_argument("--suite", default="all", choices=list(verify.SUITES))
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--report", default="report.json")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fourier", help="random trig-polynomial gap experiment")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--degree-max", type=int, default=32)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--report", default="fourier.json")
    p.set_defaults(func=cmd_fourier)

    p = sub.add_parser("plot", help="SVG figure from trajectory CSVs and/or a grid JSON")
    p.add_argument("--traj", action="append", default=[], help="trajectory CSV (repeatable)")
    p.add_argument("--grid", default=None, help="MapGrid JSON for image curves")
    p.add_argument("--out", default="figure.svg")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ParameterError, ValueError, FileNotFoundError, KeyError) as e:
        print(f"hopflab: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
