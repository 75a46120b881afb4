import time

from argparse import ArgumentParser, Namespace
from datetime import timedelta
from pathlib import Path
from typing import Optional, Sequence
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

from humanize import precisedelta
from msgspec.structs import asdict

from cardioload.domain import (
    CardioLoadError,
    InvalidConfig,
    InvalidProfile,
    NonContiguousWeek,
    WeeklyLoad,
)
from cardioload.ingest import (
    ConfigFile,
    decode_state,
    encode_config,
    encode_profile,
    encode_state,
    read_config,
    read_history,
    read_minutes,
    read_profile,
    read_workouts,
    write_daily,
    write_minutes,
    write_target_rows,
    write_weekly,
    write_workouts,
)
from cardioload.load_engine import compute_days, minute_details, summarize_days
from cardioload.log import DONE_COLOR, ERROR_COLOR, SKIP_COLOR, SPAWN_COLOR, WARN_COLOR, Log
from cardioload.manifest import build_manifest, write_manifest
from cardioload.plot_data import minute_curve, write_cohort, write_day_series, write_minute_curve, write_week_series
from cardioload.report import build_daily_table, build_state_table
from cardioload.synth import (
    REFERENCE_PROFILE,
    SCENARIO_PATTERNS,
    WeekPattern,
    cohort_study,
    reference_day_plan,
    gen_day,
    gen_week_series,
    plan_sessions,
)
from cardioload.target_engine import complete_weeks, fold_history, initial_state, weeks_from_days

EXIT_OK = 0
EXIT_PARSE_ERROR = 2
EXIT_INVALID_INPUT = 3
EXIT_BAD_HISTORY = 4
EXIT_UNKNOWN_SCENARIO = 5

SCENARIOS = (*SCENARIO_PATTERNS, "fig2_day", "cohort")
PLOT_KINDS = ("minute_curve", "day", "weeks")

DEFAULT_COHORT_USERS = 20


class UnknownScenario(CardioLoadError):
    pass


def resolve_timezone(name: str) -> ZoneInfo:
    try:
        return ZoneInfo(name)
    except (ZoneInfoNotFoundError, ValueError):
        raise InvalidConfig(f"unknown timezone '{name}'")


def open_out(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8")


def manifest_path(out: Path) -> Path:
    return out.parent / f"{out.stem}.manifest.json"


def load_history_weeks(path: Optional[Path], config: ConfigFile, log: Log) -> list[WeeklyLoad]:
    if path is None:
        return []
    records = read_history(path)
    if all(isinstance(r, WeeklyLoad) for r in records):
        return list(records)

    weeks, partial = complete_weeks(records, config.target)
    if partial is not None:
        log(f"week {partial.week_start} is still in progress, holding it back", SKIP_COLOR)
    return weeks


def cmd_compute(args: Namespace, log: Log) -> int:
    config = read_config(args.config)
    tz = resolve_timezone(args.timezone)
    profile = read_profile(args.profile)
    samples, report = read_minutes(args.minutes)
    sessions = read_workouts(args.workouts)

    for error in report.errors:
        log(f"{args.minutes.name}:{error.line} rejected ({error.code.value}): {error.message}", WARN_COLOR)
    if not args.workouts:
        log("no workouts file, every minute counts as incidental", WARN_COLOR)

    days = compute_days(samples, profile, sessions, config.load, config.target, tz)

    with open_out(args.out) as f:
        write_daily(days, f)

    inputs = {"profile": args.profile, "minutes": args.minutes}
    if args.workouts:
        inputs["workouts"] = args.workouts
    manifest = build_manifest(
        "compute",
        encode_config(config),
        {"timezone": args.timezone},
        inputs,
        [args.out],
        args.out.parent,
    )
    write_manifest(manifest, manifest_path(args.out))

    log.table(build_daily_table(profile.user_id, days, report))
    return EXIT_OK


def cmd_target(args: Namespace, log: Log) -> int:
    config = read_config(args.config)
    weeks = load_history_weeks(args.history, config, log)

    state = initial_state(config.target)
    if args.state is not None and args.state.exists():
        with open(args.state, "rb") as f:
            state = decode_state(f.read(), config.target)
    else:
        log("no persisted state, starting from the minimum target", SPAWN_COLOR)

    state, rows, skipped = fold_history(state, weeks, config.target)
    for week in skipped:
        log(f"week {week.week_start} is already part of the state, skipping", SKIP_COLOR)

    with open_out(args.out) as f:
        write_target_rows(rows, f)

    outputs = [args.out]
    if args.state is not None:
        args.state.parent.mkdir(parents=True, exist_ok=True)
        with open(args.state, "wb") as f:
            f.write(encode_state(state))

    inputs = {"history": args.history} if args.history else {}
    manifest = build_manifest("target", encode_config(config), {}, inputs, outputs, args.out.parent)
    write_manifest(manifest, manifest_path(args.out))

    log.table(build_state_table(args.out.stem, state, config.target))
    return EXIT_OK


def simulate_weeks(scenario: str, args: Namespace, config: ConfigFile, out_dir: Path) -> list[Path]:
    changes = {"seed": args.seed, "jitter": args.jitter}
    if args.weeks is not None:
        changes["duration_weeks"] = args.weeks
    try:
        pattern = WeekPattern(**{**asdict(SCENARIO_PATTERNS[scenario]), **changes})
    except CardioLoadError as e:
        raise InvalidConfig(f"cannot build the {scenario} scenario: {e}")

    weeks = gen_week_series(pattern)
    state, rows, _ = fold_history(initial_state(config.target), weeks, config.target)

    weekly_csv = out_dir / "weekly.csv"
    targets_csv = out_dir / "targets.csv"
    plot_csv = out_dir / "plot_weeks.csv"
    state_json = out_dir / "state.json"

    with open_out(weekly_csv) as f:
        write_weekly(weeks, f)
    with open_out(targets_csv) as f:
        write_target_rows(rows, f)
    with open_out(plot_csv) as f:
        write_week_series(rows, f)
    with open(state_json, "wb") as f:
        f.write(encode_state(state))

    return [weekly_csv, targets_csv, plot_csv, state_json]


def simulate_day(args: Namespace, config: ConfigFile, out_dir: Path, log: Log) -> list[Path]:
    plan = reference_day_plan(args.seed)

    profile_json = out_dir / "profile.json"
    minutes_csv = out_dir / "minutes.csv"
    workouts_csv = out_dir / "workouts.csv"

    with open(profile_json, "wb") as f:
        f.write(encode_profile(REFERENCE_PROFILE))
    with open_out(minutes_csv) as f:
        write_minutes(gen_day(plan, REFERENCE_PROFILE), f)
    with open_out(workouts_csv) as f:
        write_workouts(plan_sessions(plan), f)

    # Re-read the generated files so the whole ingest path is exercised.
    profile = read_profile(profile_json)
    samples, _ = read_minutes(minutes_csv)
    sessions = read_workouts(workouts_csv)

    details = minute_details(samples, profile, sessions, config.load)
    days = summarize_days(details, config.target)
    weeks = weeks_from_days(days, config.target)
    _, rows, _ = fold_history(initial_state(config.target), weeks, config.target)

    daily_csv = out_dir / "daily.csv"
    plot_csv = out_dir / "plot_day.csv"
    weekly_csv = out_dir / "weekly.csv"
    targets_csv = out_dir / "targets.csv"

    with open_out(daily_csv) as f:
        write_daily(days, f)
    with open_out(plot_csv) as f:
        write_day_series(details, f)
    with open_out(weekly_csv) as f:
        write_weekly(weeks, f)
    with open_out(targets_csv) as f:
        write_target_rows(rows, f)

    for day in days:
        share = day.incidental_load / day.total_load if day.total_load else 0.0
        log(f"{day.date}: total load {day.total_load:.1f}, {share:.0%} incidental")

    return [profile_json, minutes_csv, workouts_csv, daily_csv, plot_csv, weekly_csv, targets_csv]


def simulate_cohort(args: Namespace, config: ConfigFile, out_dir: Path) -> list[Path]:
    cohort_csv = out_dir / "cohort.csv"
    with open_out(cohort_csv) as f:
        write_cohort(cohort_study(args.users, args.seed, config.load, config.target), f)
    return [cohort_csv]


def cmd_simulate(args: Namespace, log: Log) -> int:
    if args.scenario not in SCENARIOS:
        raise UnknownScenario(f"unknown scenario '{args.scenario}', expected one of {', '.join(SCENARIOS)}")

    config = read_config(args.config)
    out_dir: Path = args.out
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.scenario == "fig2_day":
        outputs = simulate_day(args, config, out_dir, log)
    elif args.scenario == "cohort":
        outputs = simulate_cohort(args, config, out_dir)
    else:
        outputs = simulate_weeks(args.scenario, args, config, out_dir)

    parameters = {"scenario": args.scenario, "seed": str(args.seed), "jitter": repr(args.jitter)}
    if args.weeks is not None:
        parameters["weeks"] = str(args.weeks)
    if args.scenario == "cohort":
        parameters["users"] = str(args.users)

    manifest = build_manifest("simulate", encode_config(config), parameters, {}, outputs, out_dir)
    write_manifest(manifest, out_dir / "manifest.json")
    return EXIT_OK


def cmd_plot(args: Namespace, log: Log) -> int:
    config = read_config(args.config)
    inputs: dict[str, Path] = {}

    if args.kind == "minute_curve":
        with open_out(args.out) as f:
            write_minute_curve(minute_curve(config.load), f)

    elif args.kind == "day":
        profile = read_profile(args.profile)
        samples, _ = read_minutes(args.minutes)
        sessions = read_workouts(args.workouts)
        inputs = {"profile": args.profile, "minutes": args.minutes}
        if args.workouts:
            inputs["workouts"] = args.workouts

        with open_out(args.out) as f:
            write_day_series(minute_details(samples, profile, sessions, config.load), f)

    else:
        weeks = load_history_weeks(args.history, config, log)
        _, rows, _ = fold_history(initial_state(config.target), weeks, config.target)
        inputs = {"history": args.history}

        with open_out(args.out) as f:
            write_week_series(rows, f)

    manifest = build_manifest("plot", encode_config(config), {"kind": args.kind}, inputs, [args.out], args.out.parent)
    write_manifest(manifest, manifest_path(args.out))
    return EXIT_OK


def build_parser() -> ArgumentParser:
    shared = ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, default=None, help="JSON config with optional 'load' and 'target' sections")
    shared.add_argument("--timezone", default="UTC", help="IANA timezone used to split minutes into calendar days")
    shared.add_argument("--seed", type=int, default=0, help="Seed for synthetic data")
    shared.add_argument("--out", type=Path, required=True, help="Output file (or directory for simulate)")
    shared.add_argument("--silence", action="store_true", help="Don't show any output, except for errors")

    parser = ArgumentParser(description="Cardio Load and adaptive weekly targets from heart-rate minutes")
    commands = parser.add_subparsers(dest="command", required=True)

    compute = commands.add_parser("compute", parents=[shared], help="Compute daily Cardio Load")
    compute.add_argument("--profile", type=Path, required=True, help="Profile JSON")
    compute.add_argument("--minutes", type=Path, required=True, help="Minute samples CSV")
    compute.add_argument("--workouts", type=Path, default=None, help="Workout sessions CSV")
    compute.set_defaults(handler=cmd_compute)

    target = commands.add_parser("target", parents=[shared], help="Update the weekly target")
    target.add_argument("history", type=Path, nargs="?", default=None, help="Daily summaries or weekly history CSV")
    target.add_argument("--state", type=Path, default=None, help="State JSON, read if present and rewritten")
    target.set_defaults(handler=cmd_target)

    simulate = commands.add_parser("simulate", parents=[shared], help="Generate a synthetic scenario end to end")
    simulate.add_argument("scenario", help=f"One of: {', '.join(SCENARIOS)}")
    simulate.add_argument("--weeks", type=int, default=None, help="Number of weeks for weekly scenarios")
    simulate.add_argument("--jitter", type=float, default=0.0, help="Relative jitter on weekly loads")
    simulate.add_argument("--users", type=int, default=DEFAULT_COHORT_USERS, help="Users in the cohort scenario")
    simulate.set_defaults(handler=cmd_simulate)

    plot = commands.add_parser("plot", parents=[shared], help="Export plot-ready series")
    plot.add_argument("kind", choices=PLOT_KINDS)
    plot.add_argument("--profile", type=Path, default=None)
    plot.add_argument("--minutes", type=Path, default=None)
    plot.add_argument("--workouts", type=Path, default=None)
    plot.add_argument("--history", type=Path, default=None)
    plot.set_defaults(handler=cmd_plot)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "plot" and args.kind == "day" and (args.profile is None or args.minutes is None):
        parser.error("plot day needs --profile and --minutes")
    if args.command == "plot" and args.kind == "weeks" and args.history is None:
        parser.error("plot weeks needs --history")
    log = Log(args.command, silence=args.silence)

    start = time.perf_counter()
    try:
        code = args.handler(args, log)
    except UnknownScenario as e:
        log(str(e), ERROR_COLOR)
        return EXIT_UNKNOWN_SCENARIO
    except (InvalidProfile, InvalidConfig) as e:
        log(str(e), ERROR_COLOR)
        return EXIT_INVALID_INPUT
    except NonContiguousWeek as e:
        log(str(e), ERROR_COLOR)
        return EXIT_BAD_HISTORY
    except (CardioLoadError, OSError) as e:
        log(str(e), ERROR_COLOR)
        return EXIT_PARSE_ERROR

    delta = timedelta(seconds=time.perf_counter() - start)
    log(f"done ({precisedelta(delta, minimum_unit='milliseconds')})", DONE_COLOR)
    return code
