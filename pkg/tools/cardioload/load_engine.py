"""Per-minute Cardio Load, workout attribution and daily aggregation.

A minute accrues the Banister training impulse

    load = scale * p * exp(k * p),   p = (HR - RHR) / (HRmax - RHR)

only when the device is worn, heart rate is present, p reaches the HRR floor
and the wearer is moving. Minutes below the end of the downweight band are
scaled by a constant factor, which produces the two steps of the load curve.
"""

import bisect
import math

from collections import defaultdict
from datetime import date, timezone, tzinfo
from typing import Iterable, Optional, Sequence

from msgspec.structs import replace

from cardioload.domain import (
    MINUTES_PER_DAY,
    DailySummary,
    Gate,
    LoadConfig,
    MinuteLoadDetail,
    MinuteSample,
    MixedDates,
    OverlappingSessions,
    TargetConfig,
    UserProfile,
    WorkoutSession,
)


def percent_hrr(hr: float, profile: UserProfile) -> float:
    pct = (hr - profile.resting_hr) / (profile.max_hr - profile.resting_hr)
    return min(1.0, max(0.0, pct))


def banister_load(pct_hrr: float, k: float, scale: float) -> float:
    assert 0 <= pct_hrr <= 1, f"pct_hrr out of range: {pct_hrr}"
    return scale * pct_hrr * math.exp(k * pct_hrr)


def gated_load(pct_hrr: float, moving: bool, k: float, config: LoadConfig) -> tuple[Gate, float]:
    """Applies the floor, movement and downweight gates to one minute's %HRR."""
    # At zero reserve the impulse is zero whatever the floor.
    if pct_hrr < config.hrr_floor or pct_hrr == 0:
        return Gate.BELOW_FLOOR, 0.0
    if not moving:
        return Gate.NO_MOVEMENT, 0.0

    load = banister_load(pct_hrr, k, config.banister_scale)
    if pct_hrr < config.downweight_band_end:
        return Gate.DOWNWEIGHTED, config.downweight_factor * load
    return Gate.FULL, load


def minute_load(sample: MinuteSample, profile: UserProfile, config: LoadConfig) -> MinuteLoadDetail:
    if not sample.worn:
        return MinuteLoadDetail(sample.timestamp, None, Gate.NOT_WORN, 0.0)
    if sample.hr_bpm is None:
        return MinuteLoadDetail(sample.timestamp, None, Gate.NO_HR, 0.0)

    pct = percent_hrr(sample.hr_bpm, profile)
    gate, load = gated_load(pct, sample.moving, profile.sex_coefficient_k, config)
    return MinuteLoadDetail(sample.timestamp, pct, gate, load)


def check_sessions(sessions: Iterable[WorkoutSession]) -> list[WorkoutSession]:
    """Returns the sessions sorted by start, rejecting any overlap."""
    ordered = sorted(sessions, key=lambda s: (s.start, s.end))
    for prev, session in zip(ordered, ordered[1:]):
        if session.start < prev.end:
            raise OverlappingSessions(f"session {session.start}..{session.end} overlaps {prev.start}..{prev.end}")
    return ordered


def attribute_minutes(details: Sequence[MinuteLoadDetail], sessions: Sequence[WorkoutSession]) -> list[MinuteLoadDetail]:
    ordered = check_sessions(sessions)
    starts = [s.start for s in ordered]

    attributed = []
    for detail in details:
        # Last session starting at or before this minute is the only candidate.
        i = bisect.bisect_right(starts, detail.timestamp) - 1
        in_workout = i >= 0 and ordered[i].contains(detail.timestamp)
        if in_workout != detail.in_workout:
            detail = replace(detail, in_workout=in_workout)
        attributed.append(detail)

    return attributed


def local_date(detail: MinuteLoadDetail, tz: tzinfo) -> date:
    return detail.timestamp.astimezone(tz).date()


def daily_summary(
    details: Sequence[MinuteLoadDetail],
    config: TargetConfig,
    tz: tzinfo = timezone.utc,
    day: Optional[date] = None,
) -> DailySummary:
    dates = {local_date(d, tz) for d in details}
    if day is not None:
        dates.add(day)
    if len(dates) != 1:
        raise MixedDates(f"expected minutes of a single date, got {sorted(dates) or 'none'}")
    (day,) = dates

    workout_load = 0.0
    incidental_load = 0.0
    worn_minutes = 0

    for detail in sorted(details, key=lambda d: d.timestamp):
        if detail.gate is not Gate.NOT_WORN:
            worn_minutes += 1
        if detail.in_workout:
            workout_load += detail.load_points
        else:
            incidental_load += detail.load_points

    return DailySummary(
        date=day,
        total_load=workout_load + incidental_load,
        workout_load=workout_load,
        incidental_load=incidental_load,
        worn_minutes=worn_minutes,
        observed=worn_minutes / MINUTES_PER_DAY >= config.day_coverage_threshold,
    )


def split_days(details: Iterable[MinuteLoadDetail], tz: tzinfo = timezone.utc) -> dict[date, list[MinuteLoadDetail]]:
    days: dict[date, list[MinuteLoadDetail]] = defaultdict(list)
    for detail in details:
        days[local_date(detail, tz)].append(detail)
    return dict(sorted(days.items()))


def minute_details(
    samples: Iterable[MinuteSample],
    profile: UserProfile,
    sessions: Sequence[WorkoutSession],
    load_config: LoadConfig,
) -> list[MinuteLoadDetail]:
    details = [minute_load(sample, profile, load_config) for sample in samples]
    return attribute_minutes(details, sessions)


def summarize_days(details: Iterable[MinuteLoadDetail], config: TargetConfig, tz: tzinfo = timezone.utc) -> list[DailySummary]:
    return [daily_summary(day_details, config, tz, day) for day, day_details in split_days(details, tz).items()]


def compute_days(
    samples: Iterable[MinuteSample],
    profile: UserProfile,
    sessions: Sequence[WorkoutSession],
    load_config: LoadConfig,
    target_config: TargetConfig,
    tz: tzinfo = timezone.utc,
) -> list[DailySummary]:
    details = minute_details(samples, profile, sessions, load_config)
    return summarize_days(details, target_config, tz)
