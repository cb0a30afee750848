"""Command-line surface: one subcommand per laboratory capability.

Reports are JSON on stdout (or --out), with a human-readable summary on
stderr.  Everything outside the ``meta`` block is a pure function of the
resolved run configuration, so identical configs give byte-identical
reports; ``meta.timestamp`` is the only run-varying field.  Exit codes:
0 success / property holds, 1 usage, 2 numerical or search failure,
3 property does not hold, 4 inconclusive.  Non-finite floats are emitted
in Python's JSON spelling (``Infinity``), which ``json.loads`` accepts.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .dynamics import Params, equilibria
from .integrator import EventSpec, IntegratorConfig, integrate, OK, TERMINAL_EVENT
from .manifold import (
    SameClassAtEndpoints,
    SeedConfig,
    checkpoint_report,
    find_r_star,
    near_homoclinic_diagnostics,
    seed_unstable_branch,
)
from .conditions import (
    REFERENCE_RANGES,
    build_geometry,
    check_condition_a,
    check_condition_b,
    sweep_condition_a,
)
from .sequence import (
    AnchorNotFound,
    ConditionAFailed,
    HorizonExhausted,
    ShootConfig,
    TargetWord,
    shoot_word,
)
from .validated import (
    Box,
    CERTIFIED_2A,
    Interval,
    ValidationFailed,
    certify_condition_b_segment,
    enclose_flow,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_PROPERTY_FAILS = 3
EXIT_INCONCLUSIVE = 4


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; remap to the documented 1."""

    def error(self, message):
        _emit_error("usage", message)
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _emit_error(kind: str, message: str) -> None:
    print(json.dumps({"error": {"kind": kind, "message": message}}, sort_keys=True))
    print(f"error: {message}", file=sys.stderr)


def _load_config(path: str) -> dict[str, str]:
    """Flat key = value lines; dotted keys namespace the sections."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _resolve(args, key: str, cast, default):
    """CLI flag beats config file beats default."""
    flag = key.rsplit(".", 1)[-1].replace("-", "_")
    given = getattr(args, flag, None)
    if given is not None:
        return cast(given)
    if args.config_values and key in args.config_values:
        return cast(args.config_values[key])
    return default


def _params_from(args) -> Params:
    return Params(
        _resolve(args, "params.s", float, 10.0),
        _resolve(args, "params.q", float, 1.0),
        _resolve(args, "params.R", float, 12.0),
    )


def _tolerances(args) -> tuple[float, float]:
    tol = _resolve(args, "integrator.tol", float, None)
    if tol is not None:
        return tol, tol * 1e-2
    return 1e-10, 1e-12


def _emit(args, command: str, report: dict, summary_lines: list[str]) -> None:
    resolved_config = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func", "config_values") and v is not None
    }
    doc = {
        "meta": {
            "command": command,
            "config": {k: repr(v) if isinstance(v, float) else v
                       for k, v in resolved_config.items()},
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        },
        "report": report,
    }
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for line in summary_lines:
        print(line, file=sys.stderr)


def _parse_start(text: str, params: Params):
    eq = equilibria(params)
    if text == "p0":
        return eq.p0
    if text == "origin":
        return eq.origin
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"start must be p0, origin, or x,y,z; got {text!r}")
    return np.array(parts)


def cmd_integrate(args) -> int:
    params = _params_from(args)
    rel, abs_ = _tolerances(args)
    horizon = _resolve(args, "integrate.horizon", float, 50.0)
    terminal = _resolve(args, "integrate.terminal_zeros", int, 0)
    direction = "backward" if args.backward else "forward"

    if args.seed == "gamma-plus":
        start = seed_unstable_branch(params, SeedConfig(epsilon=args.epsilon or 1e-8))
    else:
        start = _parse_start(args.start or "p0", params)

    events = [
        EventSpec("X_ZERO", terminal_count=terminal if terminal > 0 else None),
        EventSpec("XPRIME_SIGN_CHANGE"),
    ]
    traj = integrate(
        start,
        params,
        IntegratorConfig(
            t_max=horizon, rel_tol=rel, abs_tol=abs_, direction=direction
        ),
        events,
    )
    if traj.status not in (OK, TERMINAL_EVENT):
        _emit_error("integrator", f"integration ended with status {traj.status}")
        return EXIT_NUMERICAL

    base = args.out or "trajectory"
    csv_path = f"{base}.csv"
    events_path = f"{base}.events.jsonl"
    traj.export_csv(csv_path)
    traj.export_events_jsonl(events_path)
    elapsed = abs(traj.t_end - traj.t0)
    report = {
        "csv": csv_path,
        "events_jsonl": events_path,
        "n_steps": traj.n_steps,
        "n_events": len(traj.events),
        "n_x_zeros": len(traj.event_times("X_ZERO")),
        "span": list(traj.span()),
        "status": traj.status,
    }
    out_backup, args.out = args.out, None
    _emit(args, "integrate", report, [
        f"integrated {elapsed:.6g} time units, {traj.n_steps} steps",
        f"wrote {csv_path} and {events_path}",
    ])
    args.out = out_backup
    return EXIT_OK


def cmd_checkpoints(args) -> int:
    params = _params_from(args)
    rel, abs_ = _tolerances(args)
    report = checkpoint_report(params, rel_tol=rel, abs_tol=abs_)
    lines = []
    for group in report.groups:
        for name, ok, value in group.checks:
            lines.append(
                f"{group.label:<12} {name:<18} {'PASS' if ok else 'FAIL'}  {value:.10g}"
            )
    lines.append(f"monotone rise: {'PASS' if report.monotone_rise else 'FAIL'}")
    lines.append(f"overall: {'PASS' if report.all_pass else 'FAIL'}")
    _emit(args, "checkpoints", report.to_jsonable(), lines)
    return EXIT_OK if report.all_pass else EXIT_PROPERTY_FAILS


def cmd_rstar(args) -> int:
    s = _resolve(args, "params.s", float, 10.0)
    q = _resolve(args, "params.q", float, 1.0)
    lo, hi = (float(v) for v in (args.bracket or "1.01,1000").split(","))
    width_tol = _resolve(args, "rstar.width_tol", float, 1e-4)
    rel, abs_ = _tolerances(args)
    result = find_r_star(s, q, (lo, hi), width_tol=width_tol, rel_tol=rel, abs_tol=abs_)
    report = result.to_jsonable()
    lines = [
        f"bracket [{result.bracket[0]:.8f}, {result.bracket[1]:.8f}] "
        f"width {result.width:.3e} status {result.status}",
    ]
    if args.diagnostics:
        mid = 0.5 * (result.bracket[0] + result.bracket[1])
        diag = near_homoclinic_diagnostics(Params(s, q, mid))
        report["near_homoclinic"] = diag.to_jsonable()
        lines.append(
            f"closest origin approach at midpoint: {diag.closest_origin_approach:.6e}"
        )
    _emit(args, "rstar", report, lines)
    if result.status == "CONVERGED":
        return EXIT_OK
    return EXIT_INCONCLUSIVE


def cmd_cond_a(args) -> int:
    params = _params_from(args)
    horizon = _resolve(args, "cond_a.horizon", float, 60.0)
    report = check_condition_a(params, horizon=horizon)
    lines = [
        "ordering: " + " < ".join(f"{label}={t:.6f}" for label, t in report.ordering),
        f"holds: {report.holds}"
        + (f" ({report.failure_reason})" if report.failure_reason else ""),
    ]
    _emit(args, "cond-a", report.to_jsonable(), lines)
    if report.inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_OK if report.holds else EXIT_PROPERTY_FAILS


def cmd_cond_a_sweep(args) -> int:
    s = _resolve(args, "params.s", float, 10.0)
    q = _resolve(args, "params.q", float, 1.0)
    lo, hi = (float(v) for v in (args.range or "2,60").split(","))
    step = _resolve(args, "sweep.step", float, 0.5)
    grid = list(np.arange(lo, hi + 0.5 * step, step))
    result = sweep_condition_a(s, q, grid)
    report = result.to_jsonable()
    lines = []
    if result.estimated_range is not None:
        lines.append(
            f"holds on approximately [{result.estimated_range[0]:.4f}, "
            f"{result.estimated_range[1]:.4f}]"
        )
        ref = REFERENCE_RANGES.get((s, q))
        if ref:
            lines.append(f"previously reported empirical range: {ref}")
    else:
        lines.append("condition holds nowhere on the grid")
    if args.out_csv:
        result.write_csv(args.out_csv)
        lines.append(f"wrote {args.out_csv}")
    _emit(args, "cond-a-sweep", report, lines)
    return EXIT_OK if result.estimated_range is not None else EXIT_PROPERTY_FAILS


def cmd_cond_b(args) -> int:
    params = _params_from(args)
    n_samples = _resolve(args, "cond_b.samples", int, 4096)
    result = check_condition_b(params, n_samples=n_samples)
    report = result.to_jsonable()
    lines = ["census: " + ", ".join(f"{k}={v}" for k, v in sorted(result.counts.items()))]
    lines.append(f"holds: {result.holds}")
    if args.out_csv:
        result.write_csv(args.out_csv)
        lines.append(f"wrote {args.out_csv}")
    _emit(args, "cond-b", report, lines)
    if any(v.verdict == "VIOLATION" for v in result.samples):
        return EXIT_PROPERTY_FAILS
    return EXIT_OK if result.holds else EXIT_INCONCLUSIVE


def cmd_shoot(args) -> int:
    params = _params_from(args)
    rel, abs_ = _tolerances(args)
    target = TargetWord.parse(args.word)
    config = ShootConfig(rel_tol=rel, abs_tol=abs_)
    result = shoot_word(target, params, config)
    report = result.to_jsonable()
    lines = [
        f"word {''.join(map(str, target.letters))}: witness alpha = {result.witness_alpha!r}",
        f"achieved {''.join(map(str, result.achieved_word))} on "
        f"[{result.alpha_interval[0]:.12f}, {result.alpha_interval[1]:.12f}]",
    ]
    if args.out_csv:
        with open(args.out_csv, "w", encoding="utf-8") as fh:
            fh.write("letter_index,target,anchor_alpha,interval_lo,interval_hi\n")
            for c in result.certificates:
                fh.write(
                    f"{c.letter_index},{c.target_letter},{c.anchor_alpha!r},"
                    f"{c.interval_after[0]!r},{c.interval_after[1]!r}\n"
                )
        lines.append(f"wrote {args.out_csv}")
    _emit(args, "shoot", report, lines)
    return EXIT_OK if result.achieved_word == target.letters else EXIT_NUMERICAL


def cmd_enclose(args) -> int:
    params = _params_from(args)
    step = _resolve(args, "enclose.step", float, 1e-3)
    span = _resolve(args, "enclose.span", float, 1.0)

    if args.xi is not None:
        width = args.xi_width
        iv = Interval(args.xi - 0.5 * width, args.xi + 0.5 * width)
        result = certify_condition_b_segment(iv, params, span, step=step)
        report = result.to_jsonable()
        lines = [
            f"verdict {result.verdict}: {result.reason}",
            f"width growth {result.run.digits_lost_per_unit:.2f} digits per time unit "
            "(cf. the often-quoted ten decimal places per unit)",
        ]
        _emit(args, "enclose", report, lines)
        return EXIT_OK if result.verdict == CERTIFIED_2A else EXIT_INCONCLUSIVE

    start = _parse_start(args.start or "p0", params)
    box = Box.from_point_with_width(start, 0.5 * args.width)
    run = enclose_flow(box, params, span, step=step)
    report = run.to_jsonable()
    if not args.steps:
        report["steps"] = [report["steps"][0], report["steps"][-1]]
    lines = [
        f"{len(run.steps) - 1} certified steps over {span} time units",
        f"final width {run.final_box.width:.3e}; "
        f"{run.digits_lost_per_unit:.2f} digits lost per time unit "
        "(cf. the often-quoted ten decimal places per unit)",
    ]
    _emit(args, "enclose", report, lines)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="lorenz-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--s", type=float, default=None)
        p.add_argument("--q", type=float, default=None)
        p.add_argument("--R", type=float, default=None)
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--out", default=None, help="write the JSON report here")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--tol", type=float, default=None,
                       help="relative tolerance; absolute is 100x tighter")

    p = sub.add_parser("integrate", help="integrate and export trajectory files")
    common(p)
    p.add_argument("--seed", choices=("gamma-plus",), default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--start", default=None, help="p0, origin, or x,y,z")
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--terminal-zeros", type=int, default=None)
    p.add_argument("--backward", action="store_true")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("checkpoints", help="branch checkpoint inequalities")
    common(p)
    p.set_defaults(func=cmd_checkpoints)

    p = sub.add_parser("rstar", help="bracket the crossing-threshold parameter")
    common(p)
    p.add_argument("--bracket", default=None, help="lo,hi (default 1.01,1000)")
    p.add_argument("--width-tol", type=float, default=None)
    p.add_argument("--diagnostics", action="store_true",
                   help="add near-closure diagnostics at the bracket midpoint")
    p.set_defaults(func=cmd_rstar)

    p = sub.add_parser("cond-a", help="check the event-ordering condition")
    common(p)
    p.add_argument("--horizon", type=float, default=None)
    p.set_defaults(func=cmd_cond_a)

    p = sub.add_parser("cond-a-sweep", help="sweep the ordering condition over R")
    common(p)
    p.add_argument("--range", default=None, help="Rlo,Rhi (default 2,60)")
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_cond_a_sweep)

    p = sub.add_parser("cond-b", help="sample the backward dichotomy on the tangency line")
    common(p)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_cond_b)

    p = sub.add_parser("shoot", help="realize a word of 1s and 3s by shooting")
    common(p)
    p.add_argument("word", help="target word, e.g. 1311")
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_shoot)

    p = sub.add_parser("enclose", help="certified interval enclosure of the flow")
    common(p)
    p.add_argument("--start", default=None, help="p0, origin, or x,y,z")
    p.add_argument("--width", type=float, default=1e-12, help="start box width")
    p.add_argument("--span", type=float, default=None)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--steps", action="store_true", help="emit every step box")
    p.add_argument("--xi", type=float, default=None,
                   help="certify a tangency-line segment at this coordinate")
    p.add_argument("--xi-width", type=float, default=1e-10)
    p.set_defaults(func=cmd_enclose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        args.config_values = _load_config(args.config) if args.config else {}
    except (ValueError, OSError) as exc:
        _emit_error("usage", str(exc))
        return EXIT_USAGE

    try:
        return args.func(args)
    except SameClassAtEndpoints as exc:
        _emit_error("search", str(exc))
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        _emit_error("usage", str(exc))
        return EXIT_USAGE
    except ConditionAFailed as exc:
        _emit_error("precondition", str(exc))
        return EXIT_PROPERTY_FAILS
    except (AnchorNotFound, HorizonExhausted) as exc:
        _emit_error("search", str(exc))
        return EXIT_NUMERICAL
    except ValidationFailed as exc:
        _emit_error("validation", str(exc))
        return EXIT_NUMERICAL
    except RuntimeError as exc:
        _emit_error("numerical", str(exc))
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
