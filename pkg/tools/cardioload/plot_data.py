"""Plot-ready series for the load curve, a single day and a weekly history."""

import csv

from typing import Iterable, Sequence, TextIO

from msgspec import Struct

from cardioload.domain import FEMALE_K, MALE_K, LoadConfig, MinuteLoadDetail
from cardioload.ingest import format_float, format_timestamp
from cardioload.load_engine import gated_load
from cardioload.synth import CohortRow
from cardioload.target_engine import TargetRow

CURVE_STEPS = 200  # 0.5% HRR resolution


class CurvePoint(Struct, frozen=True):
    pct_hrr: float
    load_male: float
    load_female: float


def minute_curve(config: LoadConfig, steps: int = CURVE_STEPS) -> list[CurvePoint]:
    """Load accrued by one moving, worn minute as a function of %HRR."""
    points = []
    for i in range(steps + 1):
        pct = i / steps
        _, male = gated_load(pct, True, MALE_K, config)
        _, female = gated_load(pct, True, FEMALE_K, config)
        points.append(CurvePoint(pct, male, female))
    return points


def write_minute_curve(points: Iterable[CurvePoint], stream: TextIO):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["pct_hrr", "load_male", "load_female"])
    for p in points:
        writer.writerow([format_float(p.pct_hrr), format_float(p.load_male), format_float(p.load_female)])


def write_day_series(details: Sequence[MinuteLoadDetail], stream: TextIO):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["timestamp", "pct_hrr", "load", "in_workout"])
    for d in details:
        pct = "" if d.pct_hrr is None else format_float(d.pct_hrr)
        writer.writerow([format_timestamp(d.timestamp), pct, format_float(d.load_points), int(d.in_workout)])


def write_week_series(rows: Iterable[TargetRow], stream: TextIO):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["week_start", "weekly_cl", "rm", "ewma", "target"])
    for r in rows:
        writer.writerow([r.week_start.isoformat(), format_float(r.weekly_load), format_float(r.rm), format_float(r.ewma), format_float(r.target)])


def write_cohort(rows: Iterable[CohortRow], stream: TextIO):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["workout_minutes_per_day", "users", "mean_weekly_load", "mean_workout_share"])
    for r in rows:
        writer.writerow([r.workout_minutes_per_day, r.users, format_float(r.mean_weekly_load), format_float(r.mean_workout_share)])
