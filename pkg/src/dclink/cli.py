"""Command-line front end: run / verify / sweep / freq.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure.  Output files are written with full double precision
so repeated runs with the same seed are byte-identical.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .analysis import (
    NOT_SETTLED,
    ripple_amplitude,
    settling_window,
    steady_state,
    tracking_metrics,
)
from .design import controller_ratio_analysis, sensitivity_family, shaped_plant, bus_voltage_plant
from .errors import ConditioningError, ConfigError, SimulationDiverged
from .lti import default_grid, freq_response_many
from .netsim import SimResult, build_network, simulate
from .scenario import Scenario, load_scenario
from .verify import FAULTS, run_checks

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

RIPPLE_HZ = 120.0


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _out_root() -> Path:
    return Path(os.environ.get("DCLINK_OUT", "out"))


# ---------------------------------------------------------------------------
# writers

def write_timeseries(path: Path, res: SimResult) -> None:
    m = res.m
    cols = ["t", "Vdc", "iload"]
    cols += [f"iL_{k + 1}" for k in range(m)]
    cols += [f"duty_{k + 1}" for k in range(m)]
    cols += ["e1"]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for n in range(res.t.size):
            row = [_fmt(res.t[n]), _fmt(res.vdc[n]), _fmt(res.iload[n])]
            row += [_fmt(v) for v in res.il[n]]
            row += [_fmt(v) for v in res.duty[n]]
            row.append(_fmt(res.e1[n]))
            fh.write(",".join(row) + "\n")


def _segment_windows(scenario: Scenario):
    # segments past the simulated horizon (duration overrides) are dropped
    starts = [s.t_start for s in scenario.schedule.segments if s.t_start < scenario.duration]
    bounds = starts + [scenario.duration]
    return [settling_window(bounds[i], bounds[i + 1]) for i in range(len(starts))]


def summarize(scenario: Scenario, res: SimResult) -> List[str]:
    """Deterministic key = value lines; everything recomputable from the CSV."""
    lines: List[str] = []
    segs = scenario.schedule.segments
    v_ref_final = segs[-1].v_ref
    lines.append("[run]")
    lines.append(f"mode = {scenario.cfg.mode}")
    lines.append(f"m = {scenario.cfg.m}")
    lines.append(f"duration = {_fmt(scenario.duration)}")
    lines.append(f"ts = {_fmt(scenario.ts)}")
    lines.append(f"v_ref_final = {_fmt(v_ref_final)}")
    lines.append(f"saturation_events = {len(res.saturation_events)}")
    if scenario.cfg.mode == "decentralized":
        refs = segs[-1].i_refs
        lines.append(f"i_refs_final = {', '.join(_fmt(v) for v in refs)}")
    for i, window in enumerate(_segment_windows(scenario)):
        rep = steady_state(res, window)
        lines.append(f"[segment {i}]")
        lines.append(f"window_start = {_fmt(rep.window[0])}")
        lines.append(f"window_end = {_fmt(rep.window[1])}")
        lines.append(f"vdc_mean = {_fmt(rep.vdc_mean)}")
        lines.append(f"vdc_p2p = {_fmt(rep.vdc_p2p)}")
        lines.append(f"iload_mean = {_fmt(rep.iload_mean)}")
        for k in range(res.m):
            lines.append(f"iL_mean_{k + 1} = {_fmt(rep.il_mean[k])}")
            lines.append(f"ratio_{k + 1} = {_fmt(rep.ratios[k])}")
    metrics = tracking_metrics(res, v_ref_final)
    lines.append("[tracking]")
    lines.append(f"overshoot_pct = {_fmt(metrics.overshoot_pct)}")
    settle = metrics.settling_time_2pct
    lines.append(
        "settling_time_2pct = "
        + ("not_reached" if settle == NOT_SETTLED else _fmt(settle))
    )
    lines.append(f"ss_error_pct = {_fmt(metrics.ss_error_pct)}")
    lo, hi = _segment_windows(scenario)[-1]
    mask = (res.t >= lo - 1e-12) & (res.t <= hi + 1e-12)
    if (hi - lo) * RIPPLE_HZ >= 1.0:
        lines.append(f"[ripple {int(RIPPLE_HZ)} Hz]")
        lines.append(
            f"iL_total_amp = {_fmt(ripple_amplitude(res.il[mask].sum(axis=1), res.ts, RIPPLE_HZ))}"
        )
        lines.append(f"vdc_amp = {_fmt(ripple_amplitude(res.vdc[mask], res.ts, RIPPLE_HZ))}")
    return lines


def write_summary(path: Path, scenario: Scenario, res: SimResult) -> None:
    path.write_text("\n".join(summarize(scenario, res)) + "\n")


def _echo_table(table, prefix="") -> List[str]:
    lines = []
    for key, value in table.items():
        if isinstance(value, dict):
            lines += _echo_table(value, prefix=f"{prefix}{key}.")
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            for i, item in enumerate(value):
                lines += _echo_table(item, prefix=f"{prefix}{key}[{i}].")
        else:
            lines.append(f"{prefix}{key} = {value!r}")
    return lines


def write_meta(path: Path, scenario: Scenario) -> None:
    lines = [
        f"dclink_version = {__version__}",
        f"numpy_version = {np.__version__}",
        f"seed = {scenario.seed}",
        f"init = {scenario.init}",
        f"substeps = {scenario.substeps}",
        f"uncertainty = {_fmt(scenario.uncertainty)}",
    ]
    lines += [f"perturbation: {entry}" for entry in scenario.perturbation_log]
    lines.append("[resolved config]")
    lines += _echo_table(scenario.raw)
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands

def _run_scenario(scenario: Scenario, out_dir: Path) -> SimResult:
    engine = build_network(scenario.cfg)
    res = simulate(
        engine,
        scenario.schedule,
        duration=scenario.duration,
        ts=scenario.ts,
        substeps=scenario.substeps,
        init=scenario.init,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    write_timeseries(out_dir / "timeseries.csv", res)
    write_summary(out_dir / "summary.txt", scenario, res)
    write_meta(out_dir / "meta.txt", scenario)
    return res


def _overrides_from_args(args) -> Dict[str, object]:
    overrides: Dict[str, object] = {}
    if args.seed is not None:
        overrides["sim.seed"] = args.seed
    if args.ts is not None:
        overrides["sim.ts"] = args.ts
    if args.duration is not None:
        overrides["sim.duration"] = args.duration
    return overrides


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario, overrides=_overrides_from_args(args))
    out_dir = Path(args.out) if args.out else _out_root() / Path(args.scenario).stem
    _run_scenario(scenario, out_dir)
    print(f"wrote {out_dir}/timeseries.csv, summary.txt, meta.txt")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_checks(args.level, inject_fault=args.inject_fault)
    width = max(len(r.name) for r in results)
    all_ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        all_ok = all_ok and r.passed
        print(f"{status}  {r.name:<{width}}  {r.detail}")
    print("verify:", "all checks passed" if all_ok else "CHECKS FAILED")
    return EXIT_OK if all_ok else EXIT_VERIFY_FAILED


def cmd_sweep(args) -> int:
    values = [v for v in (args.values or "").split(",") if v.strip() != ""]
    if not values:
        raise ConfigError("sweep.values: empty value list")
    try:
        values = [float(v) for v in values]
    except ValueError as exc:
        raise ConfigError(f"sweep.values: expected numbers, got {args.values!r}") from exc
    out_dir = Path(args.out) if args.out else _out_root() / f"sweep_{Path(args.scenario).stem}"
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    base_overrides = _overrides_from_args(args)
    for i, value in enumerate(values):
        overrides = dict(base_overrides)
        overrides[args.param] = value
        scenario = load_scenario(args.scenario, overrides=overrides)
        sub = out_dir / f"value_{i}"
        res = _run_scenario(scenario, sub)
        v_ref_final = scenario.schedule.segments[-1].v_ref
        metrics = tracking_metrics(res, v_ref_final)
        lo, hi = _segment_windows(scenario)[-1]
        rep = steady_state(res, (lo, hi))
        mask = (res.t >= lo - 1e-12) & (res.t <= hi + 1e-12)
        ripple = (
            ripple_amplitude(res.il[mask].sum(axis=1), res.ts, RIPPLE_HZ)
            if (hi - lo) * RIPPLE_HZ >= 1.0
            else float("nan")
        )
        rows.append((value, rep.vdc_mean, metrics.ss_error_pct, metrics.overshoot_pct, ripple))
    with open(out_dir / "sweep.csv", "w", newline="\n") as fh:
        fh.write(f"{args.param},vdc_mean,ss_error_pct,overshoot_pct,iL_total_ripple_120\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    print(f"wrote {out_dir}/sweep.csv ({len(rows)} runs)")
    return EXIT_OK


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Render magnitude/phase panels from bode.csv (written by `dclink freq`).\"\"\"
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
rows = list(csv.DictReader(open(here / "bode.csv")))
omega = [float(r["omega"]) for r in rows]
names = sorted({c[7:] for c in rows[0] if c.startswith("mag_db_")})
fig, (ax_m, ax_p) = plt.subplots(2, 1, sharex=True, figsize=(9, 7))
for name in names:
    ax_m.semilogx(omega, [float(r[f"mag_db_{name}"]) for r in rows], label=name)
    ax_p.semilogx(omega, [float(r[f"phase_deg_{name}"]) for r in rows], label=name)
ax_m.set_ylabel("magnitude [dB]")
ax_p.set_ylabel("phase [deg]")
ax_p.set_xlabel("omega [rad/s]")
ax_m.legend(ncol=3, fontsize=8)
ax_m.grid(True, which="both", alpha=0.3)
ax_p.grid(True, which="both", alpha=0.3)
fig.tight_layout()
fig.savefig(here / "bode.png", dpi=150)
print(f"wrote {here / 'bode.png'}")
"""


def cmd_freq(args) -> int:
    scenario = load_scenario(args.scenario)
    out_dir = Path(args.out) if args.out else _out_root() / f"freq_{Path(args.scenario).stem}"
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = default_grid()
    gc = shaped_plant(scenario.cfg.converters[0].inner)
    gv = bus_voltage_plant(scenario.cfg.bus_c)
    K = scenario.cfg.outer
    fam = sensitivity_family(gv, gc, K)
    systems = {
        "Kv": K.kv,
        "Kr": K.kr,
        "Gc": gc,
        "S1": fam.s1,
        "T1": fam.t1,
        "S2": fam.s2,
        "H": fam.h,
    }
    responses = {name: freq_response_many(g, grid.omegas) for name, g in systems.items()}
    with open(out_dir / "bode.csv", "w", newline="\n") as fh:
        cols = ["omega"]
        for name in systems:
            cols += [f"mag_db_{name}", f"phase_deg_{name}"]
        fh.write(",".join(cols) + "\n")
        for i, w in enumerate(grid.omegas):
            row = [_fmt(w)]
            for name in systems:
                r = responses[name][i]
                mag = np.abs(r)
                mag_db = 20.0 * np.log10(mag) if mag > 0 else -np.inf
                row += [_fmt(mag_db), _fmt(np.degrees(np.angle(r)))]
            fh.write(",".join(row) + "\n")
    ratio = controller_ratio_analysis(K, grid)
    with open(out_dir / "ratio.csv", "w", newline="\n") as fh:
        fh.write("omega,abs_ratio_kr_over_kv,alpha,flatness\n")
        for w, r in zip(grid.omegas, ratio.ratios):
            fh.write(f"{_fmt(w)},{_fmt(r)},{_fmt(ratio.alpha)},{_fmt(ratio.flatness)}\n")
    (out_dir / "plot_bode.py").write_text(_PLOT_SCRIPT)
    print(
        f"wrote {out_dir}/bode.csv, ratio.csv, plot_bode.py "
        f"(alpha={ratio.alpha:.4g}, flatness={ratio.flatness:.4g}, "
        f"signed DC ratio={ratio.dc_ratio_signed:.4g})"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dclink",
        description="Robust control design and simulation for parallel DC-DC converter networks",
    )
    parser.add_argument("--version", action="version", version=f"dclink {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write CSV/summary outputs")
    p_run.add_argument("scenario", help="path to a scenario .cfg (TOML) file")
    p_run.add_argument("--out", help="output directory (default $DCLINK_OUT/<name>)")
    p_run.add_argument("--seed", type=int, help="override sim.seed")
    p_run.add_argument("--ts", type=float, help="override sim.ts")
    p_run.add_argument("--duration", type=float, help="override sim.duration")
    p_run.set_defaults(func=cmd_run)

    p_ver = sub.add_parser("verify", help="run the invariant suites")
    p_ver.add_argument("level", nargs="?", default="quick", choices=["quick", "full"])
    p_ver.add_argument(
        "--inject-fault",
        choices=list(FAULTS),
        help="testing aid: perturb one voltage controller branch",
    )
    p_ver.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser("sweep", help="re-run a scenario over a parameter list")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--param", required=True, help="dotted config key, e.g. network.bus_c")
    p_sweep.add_argument("--values", required=True, help="comma-separated numbers")
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--ts", type=float)
    p_sweep.add_argument("--duration", type=float)
    p_sweep.set_defaults(func=cmd_sweep)

    p_freq = sub.add_parser("freq", help="write Bode/ratio CSVs for the scenario's loop")
    p_freq.add_argument("scenario")
    p_freq.add_argument("--out")
    p_freq.set_defaults(func=cmd_freq)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationDiverged, ConditioningError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
