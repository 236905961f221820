"""Command-line entry point: single runs and the stability-table harness."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, build_parser, check_h_over_eps, config_from_namespace
from .diagnostics import detect_annihilation, global_estimate, run_table_harness
from .io import snapshot_path, write_energy_csv, write_field_snapshot
from .mesh import build_uniform_triangulation, mesh_size
from .potential import theoretical_HF
from .scheme import SimulationError, time_loop

log = logging.getLogger("nemflow")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def make_parser() -> argparse.ArgumentParser:
    p = build_parser()
    g = p.add_argument_group("table harness")
    g.add_argument("--table", choices=["beta", "eps"],
                   help="sweep this parameter against the stabilisation multiplier M")
    g.add_argument("--axis1", type=_float_list, default=None,
                   help="values of the swept parameter, e.g. 0,-0.5,-1")
    g.add_argument("--axis2", type=_float_list, default=[0.0, 0.5, 1.0, 1.5, 2.0],
                   help="multipliers M (default 0,0.5,1,1.5,2)")
    g.add_argument("--hf-scale", type=float, default=None,
                   help="hf = M * scale; default is the theoretical constant "
                        "(sqrt(26) in 2D), use 1 for hf = M")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run_single(cfg) -> int:
    mesh = build_uniform_triangulation(cfg.domain, cfg.nx, cfg.ny)
    h = mesh_size(mesh)
    check_h_over_eps(cfg, h)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.json")
    print(f"mesh: {mesh.n_nodes} nodes, {mesh.n_elems} triangles, h = {h:.6g}, h/eps = {h / cfg.eps:.3g}")
    print(f"hf = {cfg.hf_value:g} (theoretical H_F = {theoretical_HF(cfg.dim):.6g}), "
          f"{cfg.n_steps} steps of k = {cfg.k:g}")

    prefix = out / "snapshot"

    def observer(state, rec):
        n = state.step_index
        if cfg.snapshot_every > 0 and n % cfg.snapshot_every == 0:
            write_field_snapshot(state, mesh, snapshot_path(prefix, n))

    try:
        res = time_loop(cfg, mesh=mesh, observer=observer)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_energy_csv(res.records, out / "energy.csv")
    write_field_snapshot(res.state, mesh, snapshot_path(prefix, res.state.step_index))
    summary = detect_annihilation(res.records, res.stable, res.message)
    if not res.stable:
        print(f"UNSTABLE: {res.message}")
        return 1
    f = summary.final
    print(f"t = {f.t:.6g}: E_total = {f.E_total:.6g} (E_kin {f.E_kin:.4g}, "
          f"E_elastic {f.E_elastic:.4g}, E_penalty {f.E_penalty:.4g})")
    print(f"T_A = {summary.T_A:.6g}, max E_kin = {summary.E_kin_max:.6g}, "
          f"global estimate ratio = {global_estimate(res.records):.6f}")
    print(f"wrote {out / 'energy.csv'}")
    return 0


def run_table(cfg, args) -> int:
    axis1 = args.axis1
    if axis1 is None:
        axis1 = [0.0, -0.2, -0.5, -0.8, -1.0] if args.table == "beta" else [0.1, 0.05, 0.01, 0.001]
    out = Path(cfg.out_dir)

    def progress(a, m, s):
        ek = "--" if s.E_kin_max is None else f"{s.E_kin_max:.6g}"
        print(f"{args.table}={a:<8g} M={m:<4g} stable={int(s.stable)} T_A={s.t_a_label():<12} E_kin_max={ek}",
              flush=True)

    run_table_harness(axis1, args.axis2, cfg, axis1_name=args.table, hf_scale=args.hf_scale,
                      csv_path=out / f"table_{args.table}.csv", progress=progress)
    print(f"wrote {out / f'table_{args.table}.csv'}")
    return 0


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_namespace(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    if args.table:
        return run_table(cfg, args)
    return run_single(cfg)


if __name__ == "__main__":
    sys.exit(main())
