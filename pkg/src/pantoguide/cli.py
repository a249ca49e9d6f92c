"""Command-line entry point.

Exit codes: 0 success, 1 domain or data error, 2 usage error (including
malformed cue scripts and config files).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import kinematics as kin
from .actuation import NumericalBlowup, track_trajectory
from .config import ENV_VAR, ConfigError, emit_config, load_config
from .cues import CueScriptError, default_cue_set, load_cue_script, validate_cue_region

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class DomainError(Exception):
    pass


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def cmd_fk(args, cfg) -> int:
    q = kin.JointAngles(math.radians(args.theta1_deg), math.radians(args.theta2_deg))
    try:
        p = kin.forward_kinematics(cfg.pantograph, q)
    except kin.KinematicsError as exc:
        raise DomainError(f"forward kinematics failed: {exc}") from None
    print(f"u_mm {_fmt(p.u)}")
    print(f"v_mm {_fmt(p.v)}")
    return EXIT_OK


def cmd_ik(args, cfg) -> int:
    try:
        q = kin.inverse_kinematics(cfg.pantograph, kin.PlanarPoint(args.u_mm, args.v_mm))
    except kin.KinematicsError as exc:
        msg = str(exc)
        if "out of workspace" not in msg:
            msg = f"out of workspace: {msg}"
        raise DomainError(msg) from None
    print(f"theta1_deg {_fmt(math.degrees(q.theta1))}")
    print(f"theta2_deg {_fmt(math.degrees(q.theta2))}")
    return EXIT_OK


def cmd_force_map(args, cfg) -> int:
    pc = cfg.pantograph
    fmap = kin.force_map(pc, args.resolution, tuple(args.bounds_mm))
    try:
        fmap.to_csv(args.out)
    except OSError as exc:
        raise DomainError(f"cannot write {args.out}: {exc.strerror}") from None
    radius, clearance = cfg.cue.region_radius, cfg.cue.reach_clearance
    c = kin.workspace_center(pc, radius, clearance)
    worst, _ = kin.region_force(pc, c, radius)
    print(f"wrote {fmap.force.size} grid points to {args.out}")
    print(f"workspace_center_mm {_fmt(c.u)} {_fmt(c.v)}")
    print(f"center_force_N {_fmt(kin.isotropic_force(pc, c))}")
    print(f"worst_force_in_{radius:g}mm_region_N {_fmt(worst)}")
    return EXIT_OK


def cmd_simulate(args, cfg) -> int:
    if args.script:
        try:
            cues = load_cue_script(args.script, cfg.cue.spec_kwargs())
        except OSError as exc:
            raise DomainError(f"cannot read {args.script}: {exc.strerror}") from None
        except CueScriptError as exc:
            raise UsageError(f"cue script: {exc}") from None
    else:
        cues = [(0.0, spec) for spec in default_cue_set(**cfg.cue.spec_kwargs())]
    pc = cfg.pantograph
    for i, (_, spec) in enumerate(cues):
        report = validate_cue_region(
            spec, pc, region_radius=cfg.cue.region_radius, clearance=cfg.cue.reach_clearance
        )
        if not report:
            raise DomainError(
                f"cue {i} ({spec.direction.value}) fails validate_cue_region: {report.summary(3)}"
            )
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DomainError(f"cannot create {out}: {exc.strerror}") from None
    center = kin.workspace_center(pc, cfg.cue.region_radius, cfg.cue.reach_clearance)
    summary = {"center_mm": [center.u, center.v], "cues": []}
    for i, (start, spec) in enumerate(cues):
        try:
            res = track_trajectory(spec, pc, cfg.controller, cfg.loop, center=center)
        except (NumericalBlowup, kin.KinematicsError) as exc:
            raise DomainError(f"cue {i} ({spec.direction.value}): simulation failed: {exc}") from None
        name = f"cue{i:02d}_{spec.direction.value}.csv"
        res.to_csv(out / name, t_offset=start)
        entry = {"index": i, "direction": spec.direction.value, "start_time_s": start, "file": name}
        entry.update(res.summary())
        summary["cues"].append(entry)
        print(
            f"{name}: max_error_mm {res.max_error:.4f} rms_error_mm {res.rms_error:.4f} "
            f"saturation {res.saturation_fraction:.3f}"
        )
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_synth(args, cfg) -> int:
    from .synth import StudyRecipe, fileset_digest, synth_study, write_study

    if args.subjects is not None:
        if args.subjects < 1:
            raise UsageError("--subjects must be at least 1")
        recipe = StudyRecipe.with_subjects(args.subjects)
    else:
        recipe = StudyRecipe()
    study = synth_study(recipe, args.seed)
    try:
        write_study(study, args.out)
    except OSError as exc:
        raise DomainError(f"cannot write study to {args.out}: {exc.strerror}") from None
    counts = study.manifest()["counts"]
    classes = [p.responder_class for p in study.profiles]
    print(
        f"subjects {len(classes)} (Fast {classes.count('Fast')}, Slow {classes.count('Slow')}); "
        f"trials Part1 {counts['Part1']}, Part2 {counts['Part2']}, Part3 {counts['Part3']}"
    )
    print(f"sha256 {fileset_digest(args.out)}")
    return EXIT_OK


def cmd_analyze(args, cfg) -> int:
    from .analysis import io as aio
    from .analysis.summary import summarize_study, write_report

    logdir = Path(args.logdir)
    if not logdir.is_dir():
        raise DomainError(f"{logdir}: not a directory")
    trial_files = sorted(logdir.glob("*_trials.csv"))
    choice_files = sorted(logdir.glob("*_choices.csv"))
    if not trial_files and not choice_files:
        raise DomainError(f"{logdir}: no trials found")
    try:
        trials = [r for f in trial_files for r in aio.load_trials(f, expected_rate=cfg.analysis.tracker_rate)]
        choices = [c for f in choice_files for c in aio.load_choices(f)]
        subjects = logdir / "subjects.csv"
        experience = aio.load_subjects(subjects) if subjects.exists() else None
    except aio.SchemaError as exc:
        raise DomainError(str(exc)) from None
    if not trials and not choices:
        raise DomainError(f"{logdir}: no trials found")
    summary = summarize_study(trials, choices, experience, cfg.analysis)
    try:
        write_report(summary, args.out)
    except OSError as exc:
        raise DomainError(f"cannot write report to {args.out}: {exc.strerror}") from None
    head = summary.headline()
    if "overall_percent_correct" in head:
        print(f"overall_percent_correct {head['overall_percent_correct']:.1f}")
    if "delay_mixture_means_s" in head:
        print("delay_mixture_means_s " + " ".join(f"{m:.3f}" for m in head["delay_mixture_means_s"]))
    if "cluster_sizes" in head:
        fast, slow = head["cluster_sizes"]
        print(f"cluster_sizes Fast {fast} Slow {slow}")
    print(f"report {Path(args.out) / 'report.json'}")
    return EXIT_OK


def cmd_default_config(args, cfg) -> int:
    text = emit_config()
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise DomainError(f"cannot write {args.out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _command(sub, name: str, text: str) -> argparse.ArgumentParser:
    return sub.add_parser(name, help=text, description=text[0].upper() + text[1:] + ".")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pantoguide",
        description="Dual-pantograph guidance toolkit: kinematics, cue simulation, "
        "synthetic studies and analysis.",
        epilog=f"Config: --config PATH, else ${ENV_VAR}, else built-in defaults.",
    )
    parser.add_argument("--config", help=f"YAML device config (overrides ${ENV_VAR})")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = _command(sub, "fk", "forward kinematics: joint angles (deg) -> point (mm)")
    p.add_argument("--theta1-deg", type=float, required=True, help="left motor angle, deg CCW from +u")
    p.add_argument("--theta2-deg", type=float, required=True, help="right motor angle, deg CCW from +u")
    p.set_defaults(func=cmd_fk)

    p = _command(sub, "ik", "inverse kinematics: point (mm) -> joint angles (deg)")
    p.add_argument("--u-mm", type=float, required=True, help="end-effector u, mm")
    p.add_argument("--v-mm", type=float, required=True, help="end-effector v, mm")
    p.set_defaults(func=cmd_ik)

    p = _command(sub, "force-map", "isotropic force map (N) over a grid in mm")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--resolution", type=int, default=100, help="grid points per axis (default 100)")
    p.add_argument(
        "--bounds-mm",
        type=float,
        nargs=4,
        default=[-30.0, 30.0, -30.0, 30.0],
        metavar=("UMIN", "UMAX", "VMIN", "VMAX"),
        help="grid bounds in mm (default -30 30 -30 30)",
    )
    p.set_defaults(func=cmd_force_map)

    p = _command(sub, "simulate", "closed-loop cue rendering; errors in mm, currents in A")
    p.add_argument("--script", help="JSON cue script (default: the 8 standard cues)")
    p.add_argument("--out", required=True, help="output directory for CSVs and summary.json")
    p.set_defaults(func=cmd_simulate)

    p = _command(sub, "synth", "generate a synthetic study (times s, positions mm, angles deg)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--subjects", type=int, help="number of subjects, split 13:7 fast:slow (default 20)")
    p.set_defaults(func=cmd_synth)

    p = _command(sub, "analyze", "analyse a log directory (delays in s, peaks in mm and deg)")
    p.add_argument("logdir", help="directory with *_trials.csv, *_choices.csv, subjects.csv")
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(func=cmd_analyze)

    p = _command(sub, "default-config", "print the default YAML config (units in key names)")
    p.add_argument("--out", help="write to this path instead of stdout")
    p.set_defaults(func=cmd_default_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
