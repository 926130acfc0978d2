"""Experiment driver: wavenumber sweeps, GMRES studies, verification, plots.

Subcommands
-----------
sweep          norms / condition numbers of M^{-1} B over a wavenumber list
gmres          iteration counts for plane-wave scattering with eta schedules
verify         operator-identity report as JSON (nonzero exit on failure)
oracle-circle  analytic circle spectrum as CSV
plot           log-log SVGs from a sweep or gmres CSV
dump-geometry  boundary polyline as CSV

Configuration is TOML (see ``default_config``); command-line flags override
file values.  Set HELMBEM_WORKERS to run sweep wavenumbers in parallel
processes; rows are always written in wavenumber order, so output is
deterministic either way (the wall_seconds column excepted).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .assembly import (
    AssemblyOrders,
    RegularizerChoice,
    assemble_planewave_rhs,
    assemble_system,
    compose_B,
    compose_B_impedance,
)
from .geometry import MeshSizeError, build_mesh, make_geometry
from .linalg import extreme_singular_values, fit_loglog_slope, gmres
from .oracle import circle_spectrum, verify_identities
from .svgplot import LogLogPlot

SWEEP_COLUMNS = ["geometry", "k", "n_dof", "eta", "regularizer", "beta",
                 "sigma_max", "sigma_min", "cond", "iters_max", "iters_min",
                 "wall_seconds", "status"]
GMRES_COLUMNS = ["geometry", "k", "alpha", "c", "eta_value", "iters",
                 "converged", "final_rel_residual"]


@dataclass(frozen=True)
class EtaSchedule:
    """eta(k) = c * k^(-alpha); alpha = 0 is the constant choice."""

    c: float = 0.5
    alpha: float = 0.0

    def __call__(self, k: float) -> float:
        return self.c * k ** (-self.alpha)


@dataclass(frozen=True)
class OperatorSpec:
    geometry: str = "circle"
    geometry_params: dict = field(default_factory=dict)
    k_list: tuple = (5.0, 10.0, 20.0, 40.0, 80.0)
    eta: EtaSchedule = EtaSchedule()
    regularizer: RegularizerChoice = RegularizerChoice("sik")
    beta: str | float = 0.0   # 0 = sound-hard; "k" couples beta = k
    ppw: float = 10.0
    sigma_tol: float = 1e-6
    gmres_tol: float = 1e-6
    dof_cap: int = 40000
    orders: AssemblyOrders = AssemblyOrders()

    def __post_init__(self):
        ks = tuple(float(k) for k in self.k_list)
        if any(k <= 0 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("k_list must be strictly increasing and positive")
        object.__setattr__(self, "k_list", ks)
        for k in ks:
            if self.eta(k) == 0:
                raise ValueError(f"eta schedule vanishes at k={k}")

    def beta_value(self, k: float) -> float:
        return float(k) if self.beta == "k" else float(self.beta)


@dataclass
class SweepRecord:
    spec: OperatorSpec
    rows: list = field(default_factory=list)  # dicts keyed by SWEEP_COLUMNS
    slopes: dict = field(default_factory=dict)

    def fit_slopes(self):
        ok = [r for r in self.rows if r["status"] == "ok"]
        if len(ok) < 3:
            self.slopes = {}
            return
        ks = [r["k"] for r in ok]
        for name, values in (
            ("sigma_max", [r["sigma_max"] for r in ok]),
            ("inv_sigma_min", [1.0 / r["sigma_min"] for r in ok]),
            ("cond", [r["cond"] for r in ok]),
        ):
            fit = fit_loglog_slope(ks, values)
            self.slopes[name] = {"slope": fit.slope, "residual": fit.residual}


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(float(x))  # shortest exact representation, round-trips
    return str(x)


def sweep_point(spec: OperatorSpec, k: float) -> dict:
    """Assemble one wavenumber and measure the extreme singular values."""
    row = {c: "" for c in SWEEP_COLUMNS}
    eta = spec.eta(k)
    beta = spec.beta_value(k)
    row.update(geometry=spec.geometry, k=k, eta=eta,
               regularizer=spec.regularizer.variant, beta=beta, status="ok")
    t0 = time.perf_counter()
    try:
        curve = make_geometry(spec.geometry, spec.geometry_params)
        mesh = build_mesh(curve, k, spec.ppw, dof_cap=spec.dof_cap)
        row["n_dof"] = mesh.n_dof
        sysm = assemble_system(
            mesh, k, spec.regularizer,
            need_adjoint=beta != 0, need_slp=beta != 0,
            orders=spec.orders, curve_diameter=curve.diameter(),
        )
        B = compose_B_impedance(sysm, eta, beta) if beta != 0 else compose_B(sysm, eta)
        sv = extreme_singular_values(B, sysm.mass, tol=spec.sigma_tol)
        row.update(sigma_max=sv.sigma_max, sigma_min=sv.sigma_min, cond=sv.cond,
                   iters_max=sv.iterations_max, iters_min=sv.iterations_min)
        if not (sv.converged_max and sv.converged_min):
            row["status"] = "sv_unconverged"
    except MeshSizeError as exc:
        row["status"] = f"dofcap:{exc}"
    row["wall_seconds"] = time.perf_counter() - t0
    return row


def _sweep_point_star(args):
    return sweep_point(*args)


def run_sweep(spec: OperatorSpec, out_csv: str | None = None,
              skip_done: bool = False, workers: int | None = None) -> SweepRecord:
    """Run the wavenumber sweep, append CSV rows in k order, fit slopes."""
    record = SweepRecord(spec=spec)
    done_ks = set()
    existing_rows = []
    if out_csv and skip_done and os.path.exists(out_csv):
        with open(out_csv, newline="") as f:
            for r in csv.DictReader(f):
                done_ks.add(float(r["k"]))
                existing_rows.append(r)

    todo = [k for k in spec.k_list if k not in done_ks]
    if workers is None:
        workers = int(os.environ.get("HELMBEM_WORKERS", "1"))
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point_star, [(spec, k) for k in todo]))
    else:
        rows = [sweep_point(spec, k) for k in todo]

    for r in existing_rows:
        record.rows.append({c: _parse_back(c, r.get(c, "")) for c in SWEEP_COLUMNS})
    record.rows.extend(rows)
    record.rows.sort(key=lambda r: r["k"])
    record.fit_slopes()

    if out_csv:
        new_file = not (skip_done and os.path.exists(out_csv))
        mode = "w" if new_file else "a"
        with open(out_csv, mode, newline="") as f:
            w = csv.writer(f)
            if new_file:
                w.writerow(SWEEP_COLUMNS)
            for r in sorted(rows, key=lambda r: r["k"]):
                w.writerow([_fmt(r[c]) for c in SWEEP_COLUMNS])
    return record


def _parse_back(col: str, raw: str):
    if col in ("geometry", "regularizer", "status"):
        return raw
    if col in ("n_dof", "iters_max", "iters_min"):
        return int(raw) if raw else ""
    try:
        return float(raw)
    except ValueError:
        return raw


def run_gmres_study(spec: OperatorSpec, alphas, incidence_angle: float = math.pi,
                    out_csv: str | None = None) -> list[dict]:
    """Iteration counts of GMRES on M^{-1} B for each (k, eta schedule).

    The operator components are assembled once per wavenumber and rescaled
    for every eta in the schedule list.
    """
    rows = []
    for k in spec.k_list:
        curve = make_geometry(spec.geometry, spec.geometry_params)
        mesh = build_mesh(curve, k, spec.ppw, dof_cap=spec.dof_cap)
        sysm = assemble_system(mesh, k, spec.regularizer, orders=spec.orders,
                               curve_diameter=curve.diameter())
        for alpha in alphas:
            sched = EtaSchedule(c=spec.eta.c, alpha=alpha)
            eta = sched(k)
            B = compose_B(sysm, eta)
            rhs = assemble_planewave_rhs(mesh, k, eta, spec.regularizer,
                                         incidence_angle, orders=spec.orders,
                                         sysm=sysm)
            b = sysm.mass.solve(rhs)
            res = gmres(lambda v: sysm.mass.solve(B @ v), b,
                        rel_tol=spec.gmres_tol)
            rows.append({
                "geometry": spec.geometry, "k": k, "alpha": alpha, "c": spec.eta.c,
                "eta_value": eta, "iters": res.iterations,
                "converged": res.converged,
                "final_rel_residual": res.residuals[-1],
            })
    if out_csv:
        with open(out_csv, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(GMRES_COLUMNS)
            for r in rows:
                w.writerow([_fmt(r[c]) for c in GMRES_COLUMNS])
    return rows


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------

def emit_plot(csv_path: str, out_prefix: str) -> list[str]:
    """Render log-log SVGs from a sweep or gmres CSV; returns written paths."""
    with open(csv_path, newline="") as f:
        reader = csv.DictReader(f)
        rows = list(reader)
        header = reader.fieldnames or []
    if not rows:
        raise ValueError(f"{csv_path}: no data rows")

    written = []
    if "sigma_max" in header:
        ok = [r for r in rows if r.get("status", "ok").startswith("ok")]
        if not ok:
            raise ValueError(f"{csv_path}: no successful rows to plot")
        groups: dict = {}
        for r in ok:
            key = (r["geometry"], r["regularizer"], r["beta"])
            groups.setdefault(key, []).append(r)
        quantities = (
            ("sigma_max", "sigma_max", lambda r: float(r["sigma_max"])),
            ("inv_sigma_min", "1/sigma_min", lambda r: 1.0 / float(r["sigma_min"])),
            ("cond", "cond", lambda r: float(r["cond"])),
        )
        for qname, qlabel, getter in quantities:
            plot = LogLogPlot(title=qlabel, xlabel="k", ylabel=qlabel)
            for key, rs in sorted(groups.items()):
                rs = sorted(rs, key=lambda r: float(r["k"]))
                ks = [float(r["k"]) for r in rs]
                vals = [getter(r) for r in rs]
                ann = ""
                if len(ks) >= 3:
                    fit = fit_loglog_slope(ks, vals)
                    ann = f"slope {fit.slope:.3f}"
                plot.add(" ".join(str(p) for p in key), ks, vals, ann)
            path = f"{out_prefix}_{qname}.svg"
            with open(path, "w") as f:
                f.write(plot.render())
            written.append(path)
    elif "iters" in header:
        plot = LogLogPlot(title="GMRES iterations", xlabel="k", ylabel="iterations")
        groups = {}
        for r in rows:
            groups.setdefault((r["alpha"], r["c"]), []).append(r)
        for (alpha, c), rs in sorted(groups.items()):
            rs = sorted(rs, key=lambda r: float(r["k"]))
            ks = [float(r["k"]) for r in rs]
            its = [max(1, int(r["iters"])) for r in rs]
            plot.add(f"eta={c}*k^-{alpha}", ks, its)
        path = f"{out_prefix}_gmres_iters.svg"
        with open(path, "w") as f:
            f.write(plot.render())
        written.append(path)
    else:
        raise ValueError(f"{csv_path}: unrecognized CSV header {header}")
    return written


# ---------------------------------------------------------------------------
# config and argument handling
# ---------------------------------------------------------------------------

def default_config() -> dict:
    return {
        "sweep": {
            "geometry": "circle",
            "k_list": [5.0, 10.0, 20.0, 40.0, 80.0],
            "eta": 0.5,
            "eta_alpha": 0.0,
            "reg": "sik",
            "s0_a": 4.0,
            "beta": "0",
            "ppw": 10.0,
            "dof_cap": 40000,
            "sigma_tol": 1e-6,
            "gmres_tol": 1e-6,
        },
        "quadrature": {
            "order_separated": 8,
            "order_near": 16,
            "order_singular": 12,
        },
    }


def _load_config(path: str | None) -> dict:
    cfg = default_config()
    if path:
        with open(path, "rb") as f:
            user = tomllib.load(f)
        for section, values in user.items():
            cfg.setdefault(section, {}).update(values)
    return cfg


def _spec_from_args(args, cfg) -> OperatorSpec:
    sw = cfg["sweep"]
    qd = cfg["quadrature"]
    geometry = args.geometry or sw["geometry"]
    if args.k_list:
        k_list = tuple(float(s) for s in args.k_list.split(","))
    elif args.kmin is not None:
        k_list, k = [], float(args.kmin)
        kmax = float(args.kmax if args.kmax is not None else args.kmin)
        factor = float(args.kfactor)
        while k <= kmax * (1 + 1e-12):
            k_list.append(k)
            k *= factor
        k_list = tuple(k_list)
    else:
        k_list = tuple(float(k) for k in sw["k_list"])
    reg_name = args.reg or sw["reg"]
    reg = RegularizerChoice(reg_name, a=float(args.s0_a if args.s0_a is not None
                                              else sw["s0_a"]))
    beta_raw = args.beta if args.beta is not None else sw["beta"]
    beta = "k" if str(beta_raw) == "k" else float(beta_raw)
    eta = EtaSchedule(
        c=float(args.eta if args.eta is not None else sw["eta"]),
        alpha=float(args.eta_alpha if args.eta_alpha is not None else sw["eta_alpha"]),
    )
    return OperatorSpec(
        geometry=geometry,
        k_list=k_list,
        eta=eta,
        regularizer=reg,
        beta=beta,
        ppw=float(args.ppw if args.ppw is not None else sw["ppw"]),
        sigma_tol=float(sw["sigma_tol"]),
        gmres_tol=float(sw["gmres_tol"]),
        dof_cap=int(args.dof_cap if args.dof_cap is not None else sw["dof_cap"]),
        orders=AssemblyOrders(
            separated=int(qd["order_separated"]),
            near=int(qd["order_near"]),
            singular=int(qd["order_singular"]),
        ),
    )


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", default=None, help="TOML config file")
    p.add_argument("--geometry", default=None)
    p.add_argument("--k-list", default=None, help="comma-separated wavenumbers")
    p.add_argument("--kmin", default=None, type=float)
    p.add_argument("--kmax", default=None, type=float)
    p.add_argument("--kfactor", default=2.0, type=float)
    p.add_argument("--eta", default=None, type=float)
    p.add_argument("--eta-alpha", default=None, type=float)
    p.add_argument("--reg", default=None, choices=["sik", "s0", "none"])
    p.add_argument("--s0-a", default=None, type=float)
    p.add_argument("--beta", default=None, help='0 (sound-hard) or "k"')
    p.add_argument("--ppw", default=None, type=float)
    p.add_argument("--dof-cap", default=None, type=int)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="helmbem", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="wavenumber sweep of extreme singular values")
    _add_common(p_sweep)
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.add_argument("--skip-done", action="store_true")

    p_gmres = sub.add_parser("gmres", help="GMRES iteration study with eta schedules")
    _add_common(p_gmres)
    p_gmres.add_argument("--out", required=True)
    p_gmres.add_argument("--alphas", default="0,0.16666666666666666,0.3333333333333333,0.5",
                         help="comma-separated eta exponents")
    p_gmres.add_argument("--angle", default=math.pi, type=float,
                         help="plane-wave incidence angle (radians)")

    p_verify = sub.add_parser("verify", help="operator identity report (JSON)")
    _add_common(p_verify)

    p_orc = sub.add_parser("oracle-circle", help="analytic circle spectrum CSV")
    p_orc.add_argument("--k", required=True, type=float)
    p_orc.add_argument("--radius", default=1.0, type=float)
    p_orc.add_argument("--n-max", default=40, type=int)
    p_orc.add_argument("--out", default=None)

    p_plot = sub.add_parser("plot", help="render SVGs from a CSV")
    p_plot.add_argument("csv")
    p_plot.add_argument("--out-prefix", default=None)

    p_dump = sub.add_parser("dump-geometry", help="polyline CSV: t,x,y,nx,ny")
    p_dump.add_argument("--geometry", required=True)
    p_dump.add_argument("--samples", default=256, type=int, help="per smooth piece")
    p_dump.add_argument("--out", default=None)

    args = parser.parse_args(argv)

    if args.command == "sweep":
        cfg = _load_config(args.config)
        spec = _spec_from_args(args, cfg)
        record = run_sweep(spec, out_csv=args.out, skip_done=args.skip_done)
        for row in record.rows:
            print(", ".join(f"{c}={_fmt(row[c])}" for c in
                            ("k", "n_dof", "sigma_max", "sigma_min", "cond", "status")))
        for name, fit in record.slopes.items():
            print(f"slope[{name}] = {fit['slope']:.4f} (rms residual {fit['residual']:.3f})")
        if record.slopes:
            with open(args.out + ".slopes.json", "w") as f:
                json.dump(record.slopes, f, indent=2, sort_keys=True)
        return 0

    if args.command == "gmres":
        cfg = _load_config(args.config)
        spec = _spec_from_args(args, cfg)
        alphas = [float(s) for s in args.alphas.split(",")]
        rows = run_gmres_study(spec, alphas, incidence_angle=args.angle,
                               out_csv=args.out)
        for r in rows:
            print(f"k={_fmt(r['k'])} alpha={_fmt(r['alpha'])} eta={_fmt(r['eta_value'])} "
                  f"iters={r['iters']} converged={r['converged']}")
        return 0

    if args.command == "verify":
        cfg = _load_config(args.config)
        spec = _spec_from_args(args, cfg)
        ok = True
        for k in spec.k_list:
            curve = make_geometry(spec.geometry, spec.geometry_params)
            mesh = build_mesh(curve, k, spec.ppw, dof_cap=spec.dof_cap)
            report = verify_identities(mesh, k, spec.eta(k), spec.regularizer,
                                       orders=spec.orders)
            print(json.dumps(report, indent=2, sort_keys=True))
            ok = ok and report["all_pass"]
        return 0 if ok else 1

    if args.command == "oracle-circle":
        spec_rows = circle_spectrum(args.k, radius=args.radius, n_max=args.n_max)
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["n", "s_re", "s_im", "d_re", "d_im", "h_re", "h_im"])
        for n, s, d, h in spec_rows.modes:
            w.writerow([n] + [_fmt(v) for v in (s.real, s.imag, d.real, d.imag,
                                                h.real, h.imag)])
        text = buf.getvalue()
        if args.out:
            with open(args.out, "w", newline="") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
        if spec_rows.dropped:
            print(f"# dropped modes (recurrence overflow): {spec_rows.dropped}",
                  file=sys.stderr)
        return 0

    if args.command == "plot":
        prefix = args.out_prefix or os.path.splitext(args.csv)[0]
        for path in emit_plot(args.csv, prefix):
            print(path)
        return 0

    if args.command == "dump-geometry":
        curve = make_geometry(args.geometry)
        ts, pts = curve.sample(args.samples)
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["t", "x", "y", "nx", "ny"])
        for t, p in zip(ts, pts):
            _, nrm = curve.point_and_normal(t)
            w.writerow([_fmt(float(t)), _fmt(p[0]), _fmt(p[1]),
                        _fmt(nrm[0]), _fmt(nrm[1])])
        if args.out:
            with open(args.out, "w", newline="") as f:
                f.write(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
        return 0

    parser.error(f"unknown command {args.command}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
