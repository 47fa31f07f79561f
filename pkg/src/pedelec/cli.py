"""Command-line interface.

Subcommands:
  run            run a scenario file (or builtin name) and emit artifacts
  certify        recheck a tick-log CSV against freshly computed constants
  schedule-plot  table/plot of the assist gain versus human power
  list-builtins  list the built-in scenarios
  export-builtin print a builtin scenario as an editable TOML config
  serve          start the live session service

Exit status is nonzero iff a run faulted or certificate violations were
found.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from pedelec import __version__
from pedelec._backend import BACKEND
from pedelec.certificates import check_trajectory, compute_constants
from pedelec.config import dump_scenario, load_scenario
from pedelec.harness import emit_outputs, log_from_csv, run_scenario
from pedelec.scenarios import BUILTINS, get_builtin, list_builtins
from pedelec.schedule import ScheduleParams, alpha_gain, f_gain, threshold


def _load_script(source: str):
    if source in BUILTINS:
        return get_builtin(source)
    path = Path(source)
    if not path.exists():
        raise SystemExit(
            f"error: {source!r} is neither a builtin scenario nor a config file"
        )
    return load_scenario(path)


def _cmd_run(args: argparse.Namespace) -> int:
    script = _load_script(args.scenario)
    result = run_scenario(script)
    paths = emit_outputs(result, args.out)
    print(f"scenario {script.name}: {result.summary['ticks']} ticks "
          f"[backend={BACKEND}]")
    for key, path in paths.items():
        print(f"  {key}: {path}")
    if result.summary["faulted"]:
        print(f"  FAULT at t={result.summary['fault_t']}", file=sys.stderr)
    if result.violations:
        print(f"  {len(result.violations)} certificate violation(s)", file=sys.stderr)
    return 2 if (result.summary["faulted"] or result.violations) else 0


def _cmd_certify(args: argparse.Namespace) -> int:
    script = _load_script(args.config)
    if script.certify_band is None:
        raise SystemExit("error: config has no [certify] section")
    band = script.certify_band
    log = log_from_csv(Path(args.log).read_text())
    constants = compute_constants(
        script.controller.schedule,
        band.p_h_min,
        band.p_h_max,
        p_order=args.p,
        grid_n=band.grid_n,
        m_upper=band.m_upper,
    )
    counters: dict = {}
    violations = check_trajectory(log, constants, counters=counters)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.log).stem
    const_path = out / f"{stem}_certificates.json"
    const_path.write_text(json.dumps(constants.to_dict(), indent=2, sort_keys=True))
    viol_path = out / f"{stem}_violations.csv"
    lines = ["t,bound_name,lhs,rhs,margin"]
    for v in violations:
        lines.append(f"{v.t:.12g},{v.bound_name},{v.lhs:.12g},{v.rhs:.12g},{v.margin:.12g}")
    viol_path.write_text("\n".join(lines) + "\n")

    print(f"constants: {const_path}")
    print(f"violations: {viol_path} ({len(violations)} found)")
    print(f"hypothesis-skipped ticks: {counters}")
    return 2 if violations else 0


def _cmd_schedule_plot(args: argparse.Namespace) -> int:
    params = ScheduleParams()
    m_star = args.m_star
    p_max = args.max_power
    n = args.points
    pt = threshold(m_star, params)
    rows = []
    for i in range(n):
        p = p_max * i / (n - 1)
        f = f_gain(p, m_star, params)
        rows.append((p, f, math.sqrt(f), alpha_gain(p, m_star, params),
                     "cooperative" if p <= pt else "competitive"))
    if args.table:
        print("p_human,f,sqrt_f,alpha,branch")
        for p, f, sf, a, branch in rows:
            print(f"{p:.6g},{f:.6g},{sf:.6g},{a:.6g},{branch}")
    if args.out:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        ps = [r[0] for r in rows]
        sf = [r[2] for r in rows]
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(ps, sf, "b-")
        ax.axvline(pt, color="k", ls="--", lw=1.0)
        ax.annotate("cooperate", xy=(pt * 0.4, max(sf) * 0.9), color="tab:blue")
        ax.annotate("compete", xy=(pt * 1.3, max(sf) * 0.9), color="tab:red")
        ax.set_xlabel("human power [W]")
        ax.set_ylabel("equilibrium motor power sqrt(f) [W]")
        ax.set_title(f"assist schedule at m*={m_star}")
        fig.tight_layout()
        fig.savefig(args.out, dpi=110)
        print(f"plot: {args.out}")
    return 0


def _cmd_list_builtins(_: argparse.Namespace) -> int:
    for name, description in list_builtins():
        print(f"{name}\n    {description}")
    return 0


def _cmd_export_builtin(args: argparse.Namespace) -> int:
    script = get_builtin(args.name)
    text = dump_scenario(script)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from pedelec.service import serve

    script = _load_script(args.config) if args.config else get_builtin("fig3_disturbance")
    serve(script, host=args.host, port=args.port, time_scale=args.time_scale)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pedelec",
        description="Power-split assist controller: simulator, certificates, live service",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file or builtin name")
    p.add_argument("scenario", help="path to a scenario TOML or a builtin name")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("certify", help="check a tick-log CSV against the bounds")
    p.add_argument("log", help="tick-log CSV file")
    p.add_argument("config", help="scenario config (or builtin) with a [certify] band")
    p.add_argument("--p", type=int, choices=(1, 2), default=2,
                   help="norm order of the tracking estimate (default 2)")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(fn=_cmd_certify)

    p = sub.add_parser("schedule-plot", help="gain versus human power at fixed m*")
    p.add_argument("--m-star", type=float, required=True, dest="m_star")
    p.add_argument("--max-power", type=float, default=400.0)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--table", action="store_true", help="print a CSV table")
    p.add_argument("--out", help="write a PNG to this path")
    p.set_defaults(fn=_cmd_schedule_plot)

    p = sub.add_parser("list-builtins", help="list built-in scenarios")
    p.set_defaults(fn=_cmd_list_builtins)

    p = sub.add_parser("export-builtin", help="print a builtin as a TOML config")
    p.add_argument("name")
    p.add_argument("--out", help="write to this path instead of stdout")
    p.set_defaults(fn=_cmd_export_builtin)

    p = sub.add_parser("serve", help="start the live session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--config", help="base scenario config or builtin name")
    p.add_argument("--time-scale", type=float, default=1.0,
                   help="wall-clock speedup factor (1 = real time)")
    p.set_defaults(fn=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
