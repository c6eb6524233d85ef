"""Command-line front end.

Subcommands: ``run``, ``spectra``, ``advise``, ``benchmark``, ``riemann``
and ``plot-data``.  Exit codes: 0 success, 2 configuration error, 3 I/O
error, 4 numerical blowup, 5 infeasible ladder, 6 other numerical
failure (degenerate moments, unsupported Riemann data).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import yaml

from .config import ConfigError, ScenarioConfig, load_config
from .grid import cfl_max_step
from .integrate import BlowupError, IntegratorLadder, SemiDiscreteOperator, efficiency_factor, run_simulation
from .moments import DegenerateMomentsError
from .output import (OutputError, SnapshotWriter, default_threads, read_csv_columns, write_diagnostics)
from .riemann import GasState, UnsupportedWavePattern, gamma_for_dimension, mixture_sample, solve_contact, \
    write_profile_csv
from .scenarios import build_initial, linearization_field
from .spectra import (InfeasibleLadder, JacobianTooLarge, check_ladder, estimate_spectrum, ladder_disks,
                      spectrum_report, suggest_ladder, write_eigenvalue_csv, write_spectrum_json)

log = logging.getLogger("kinmix")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_BLOWUP, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4, 5, 6


def _operator(cfg: ScenarioConfig, threads: int | None = None, **kw) -> SemiDiscreteOperator:
    n = threads or cfg.run.threads or default_threads()
    return SemiDiscreteOperator(cfg.spatial_grid(), cfg.velocity_grid(), cfg.mixture_params(), threads=n, **kw)


def _output_dir(cfg: ScenarioConfig, override: str | None) -> Path:
    out = Path(override or cfg.run.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OutputError(f"cannot create output directory {out}: {err}") from err
    return out


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.paper_scale)
    out = _output_dir(cfg, args.output)
    cfg.dump(out / "config.yaml")
    field = build_initial(cfg)
    op = _operator(cfg, args.threads)
    ladder = cfg.integrator_ladder()
    writer = SnapshotWriter(out, raw=cfg.run.raw_dump)
    t_end = args.t_end if args.t_end is not None else cfg.run.t_end
    log.info("running %s on %s with ladder %s (S = %.3g)", cfg.scenario, field.values.shape, ladder.steps,
             efficiency_factor(ladder))
    res = run_simulation(field, op, ladder, cfg.run.t_begin, t_end, cfg.run.cadence, sinks=[writer])
    write_diagnostics(out / "diagnostics.csv", res.diagnostics)
    print(f"{cfg.scenario}: {res.steps} outer steps, {op.evaluations} evaluations, "
          f"{len(writer.index)} snapshots in {out}")
    return EXIT_OK


def _shrink(cfg: ScenarioConfig, cells, half_count) -> ScenarioConfig:
    grid = cfg.grid
    if cells:
        grid = replace(grid, cells=list(cells))
    if half_count:
        grid = replace(grid, velocity_half_count=half_count, velocity_spacing=None)
    return replace(cfg, grid=grid).validate()


def _spectrum(cfg, args):
    cfg = _shrink(cfg, args.cells, args.half_count)
    base, state = linearization_field(cfg)
    state["shape"] = list(base.values.shape)
    op = _operator(cfg, args.threads)
    spec = estimate_spectrum(op, base.values, state=state, cap=args.cap)
    return cfg, spec


def cmd_spectra(args) -> int:
    cfg = load_config(args.config, args.paper_scale)
    out = _output_dir(cfg, args.output)
    cfg, spec = _spectrum(cfg, args)
    ladder = cfg.integrator_ladder()
    try:
        report = spectrum_report(spec, ladder)
    except ValueError as err:  # disks undefined for this ladder (M <= 1)
        log.warning("ladder check skipped: %s", err)
        report = spectrum_report(spec)
    write_spectrum_json(out / "spectrum.json", report)
    write_eigenvalue_csv(out / "eigenvalues.csv", spec, ladder.steps[0])
    try:
        from .plotting import plot_spectrum
        plot_spectrum(spec.values, [spec.names[k] for k in spec.labels], out / "spectrum.png",
                      ladder_disks(ladder), ladder.steps[0])
    except ValueError:
        pass
    print(json.dumps({k: report[k] for k in report if k in ("clusters", "kernel_size", "check")}, indent=2))
    return EXIT_OK


def cmd_advise(args) -> int:
    cfg = load_config(args.config, args.paper_scale)
    full_ladder = cfg.integrator_ladder()
    full_cfl = cfl_max_step(cfg.velocity_grid(), cfg.spatial_grid())
    cfg_small, spec = _spectrum(cfg, args)
    target = args.outer_step or full_ladder.outer_step
    ladder = suggest_ladder(spec, target, cfl=full_cfl if args.cap_cfl else None, margin=args.margin)
    rep = check_ladder(spec, ladder, args.margin)
    text = yaml.safe_dump({"ladder": {"kind": "telescopic" if ladder.levels else "direct",
                                      "steps": list(ladder.steps), "inner_counts": list(ladder.inner_counts)}},
                          sort_keys=False)
    print(text, end="")
    print(f"# efficiency factor {efficiency_factor(ladder):.4g}, worst margin {rep.worst_margin:.3g}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    """Direct forward Euler versus the configured ladder over the same short horizon."""
    cfg = load_config(args.config, args.paper_scale)
    out = _output_dir(cfg, args.output)
    rows = []
    for eps in args.eps or [cfg.physical.knudsen]:
        c = replace(cfg, physical=replace(cfg.physical, knudsen=eps)).validate()
        field = build_initial(c)
        ladder = c.integrator_ladder()
        horizon = args.outer_steps * ladder.outer_step
        timings = {}
        for name, lad in (("telescopic", ladder), ("direct", IntegratorLadder.direct(ladder.steps[0]))):
            op = _operator(c, args.threads)
            t0 = time.perf_counter()
            run_simulation(field, op, lad, c.run.t_begin, c.run.t_begin + horizon, diagnostics=False)
            timings[name] = (time.perf_counter() - t0, op.evaluations)
        rows.append({
            "epsilon": eps, "horizon": horizon,
            "direct_steps": timings["direct"][1], "telescopic_evaluations": timings["telescopic"][1],
            "direct_seconds": timings["direct"][0], "telescopic_seconds": timings["telescopic"][0],
            "real_factor": timings["direct"][0] / timings["telescopic"][0],
            "theoretical_factor": efficiency_factor(ladder),
        })
    with (out / "benchmark.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})
    for r in rows:
        print(f"eps={r['epsilon']:g}: direct {r['direct_seconds']:.2f}s, telescopic {r['telescopic_seconds']:.2f}s, "
              f"real {r['real_factor']:.2f}x, theoretical {r['theoretical_factor']:.2f}x")
    return EXIT_OK


def _sod_solution(cfg: ScenarioConfig):
    if cfg.scenario != "sod":
        raise ConfigError("the Riemann oracle applies to the sod scenario only")
    gamma = gamma_for_dimension(cfg.velocity_grid().dim)
    (rl, vl, pl), (rr, vr, pr) = cfg.setup["left"], cfg.setup["right"]
    return solve_contact(GasState(rl, vl, pl, gamma), GasState(rr, vr, pr, gamma)), gamma


def cmd_riemann(args) -> int:
    cfg = load_config(args.config, args.paper_scale)
    out = _output_dir(cfg, args.output)
    sol, gamma = _sod_solution(cfg)
    t = args.time if args.time is not None else cfg.run.t_end - cfg.run.t_begin
    x = cfg.spatial_grid().centers(0)
    path = write_profile_csv(out / "riemann.csv", sol, x, t, origin=cfg.setup["split"],
                             seed=cfg.physical.density_floor)
    print(f"P_C = {sol.pressure:.12g}, v_C = {sol.velocity:.12g}, gamma = {gamma:g}; wrote {path}")
    return EXIT_OK


def cmd_plot_data(args) -> int:
    run_dir = Path(args.run_dir)
    cfg = load_config(run_dir / "config.yaml")
    if not (run_dir / "snapshots.csv").exists():
        raise OutputError(f"{run_dir} has no snapshots.csv; run the scenario first")
    with (run_dir / "snapshots.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    last = rows[-1]
    t = float(last["time"])
    table = read_csv_columns(run_dir / last["moments"])
    from . import plotting
    sg = cfg.spatial_grid()
    if sg.dim == 1:
        masses = cfg.physical.masses
        prof = {"x": table["x"], "rho": table["rho"], "v": table["vx"], "T": table["T"], "P": table["P"],
                "rho1": table["rho1"], "rho2": table["rho2"]}
        if cfg.scenario == "sod" and t > cfg.run.t_begin:
            sol, _ = _sod_solution(cfg)
            r1, r2, v, p = mixture_sample(sol, table["x"] - cfg.setup["split"], t - cfg.run.t_begin,
                                          cfg.physical.density_floor)
            prof.update(rho_exact=r1 + r2, v_exact=v, P_exact=p, T_exact=p / (r1 / masses[0] + r2 / masses[1]))
        keys = list(prof)
        with (run_dir / "profile.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys)
            for k in range(len(prof["x"])):
                w.writerow([f"{prof[c][k]:.17g}" for c in keys])
        plotting.plot_profile(prof, run_dir / "profile.png", f"{cfg.scenario}, t = {t:g}")
        print(f"wrote {run_dir / 'profile.csv'} and {run_dir / 'profile.png'}")
    else:
        plotting.plot_fields(table, sg.shape, run_dir / "fields.png", title=f"{cfg.scenario}, t = {t:g}")
        print(f"wrote {run_dir / 'fields.png'} (data: {last['moments']})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kinmix", description="Multispecies BGK with telescopic projective integration")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("config", help="scenario YAML file")
            p.add_argument("--paper-scale", action="store_true", help="use the published grid resolutions")
            p.add_argument("-o", "--output", help="output directory (default: run.output_dir)")
        p.add_argument("--threads", type=int, default=None, help="worker threads (default: KINMIX_THREADS)")

    p = sub.add_parser("run", help="integrate a scenario and write snapshots")
    common(p)
    p.add_argument("--t-end", type=float, default=None)
    p.set_defaults(func=cmd_run)

    for name, func, helptext in (("spectra", cmd_spectra, "estimate the operator spectrum and check the ladder"),
                                 ("advise", cmd_advise, "suggest a ladder from the estimated spectrum")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--cells", type=int, nargs="+", help="override the spatial cell counts")
        p.add_argument("--half-count", type=int, help="override the velocity half node count")
        p.add_argument("--cap", type=int, default=4096, help="maximum dense Jacobian dimension")
        if name == "advise":
            p.add_argument("--outer-step", type=float, default=None)
            p.add_argument("--margin", type=float, default=0.05)
            p.add_argument("--cap-cfl", action="store_true", help="cap the outer step at the kinetic CFL bound")
        p.set_defaults(func=func)

    p = sub.add_parser("benchmark", help="time direct forward Euler against the ladder")
    common(p)
    p.add_argument("--eps", type=float, nargs="+", help="Knudsen numbers to sweep")
    p.add_argument("--outer-steps", type=int, default=10, help="horizon in outer steps")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("riemann", help="write the exact shock-tube profile")
    common(p)
    p.add_argument("--time", type=float, default=None)
    p.set_defaults(func=cmd_riemann)

    p = sub.add_parser("plot-data", help="profile tables and figures from a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_plot_data)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, JacobianTooLarge) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO
    except BlowupError as err:
        print(f"blowup: {err} (t={err.time}, outer step {err.step})", file=sys.stderr)
        return EXIT_BLOWUP
    except InfeasibleLadder as err:
        print(f"infeasible ladder: {err}; blocking eigenvalues: {err.blocking[:8]}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DegenerateMomentsError, UnsupportedWavePattern) as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
