"""Seeded synthetic minute streams and weekly-load patterns.

Everything here is a pure function of its inputs and seed: the same plan
always yields the same samples, down to the last bit of every heart rate.
"""

from datetime import date, datetime, timedelta, timezone
from enum import Enum
from statistics import fmean
from typing import Optional

import numpy as np

from msgspec import Struct

from cardioload.domain import (
    FEMALE_K,
    MALE_K,
    MINUTES_PER_DAY,
    CardioLoadError,
    LoadConfig,
    MinuteSample,
    SessionSource,
    TargetConfig,
    UserProfile,
    WeeklyLoad,
    WorkoutSession,
)
from cardioload.load_engine import compute_days

# Rest minutes never rise above this fraction of the heart rate reserve, so
# they stay under the default load floor whatever the noise.
REST_HRR_CEILING = 0.25

AMBIENT_BOUT_MINUTES = (1, 5)
AMBIENT_HRR_RANGE = (0.35, 0.55)


class Block(Struct, frozen=True):
    start: int
    duration: int
    pct_hrr: float = 0.0

    @property
    def end(self) -> int:
        return self.start + self.duration


class DayPlan(Struct, frozen=True):
    resting_hr_level: float
    workout_blocks: tuple[Block, ...] = ()
    ambient_activity_rate: float = 0.0
    seed: int = 0
    incidental_blocks: tuple[Block, ...] = ()
    nonwear_blocks: tuple[Block, ...] = ()
    hr_noise_bpm: float = 3.0
    hr_dropout_rate: float = 0.0
    rest_moving_rate: float = 0.2
    day: date = date(2024, 5, 1)

    def __post_init__(self):
        blocks = sorted((*self.workout_blocks, *self.incidental_blocks, *self.nonwear_blocks), key=lambda b: b.start)
        for b in blocks:
            if b.duration < 1 or b.start < 0 or b.end > MINUTES_PER_DAY:
                raise CardioLoadError(f"block {b} does not fit within the day")
            if not (0 <= b.pct_hrr <= 1):
                raise CardioLoadError(f"block {b} targets %HRR outside [0, 1]")
        for prev, b in zip(blocks, blocks[1:]):
            if b.start < prev.end:
                raise CardioLoadError(f"blocks {prev} and {b} overlap")
        if self.ambient_activity_rate < 0 or self.hr_noise_bpm < 0:
            raise CardioLoadError("ambient rate and noise amplitude must be nonnegative")
        if not (0 <= self.hr_dropout_rate <= 1 and 0 <= self.rest_moving_rate <= 1):
            raise CardioLoadError("dropout and rest movement rates must lie in [0, 1]")

    @property
    def midnight(self) -> datetime:
        return datetime(self.day.year, self.day.month, self.day.day, tzinfo=timezone.utc)


class MinuteKind(Enum):
    REST = 0
    WORKOUT = 1
    INCIDENTAL = 2
    NOT_WORN = 3


def gen_day(plan: DayPlan, profile: UserProfile) -> list[MinuteSample]:
    rng = np.random.default_rng(plan.seed)
    n = MINUTES_PER_DAY

    # All draws happen up front and in a fixed order.
    bout_starts = rng.random(n)
    bout_durations = rng.integers(AMBIENT_BOUT_MINUTES[0], AMBIENT_BOUT_MINUTES[1] + 1, n)
    bout_levels = rng.uniform(*AMBIENT_HRR_RANGE, n)
    noise = rng.uniform(-1.0, 1.0, n) * plan.hr_noise_bpm
    rest_moving = rng.random(n) < plan.rest_moving_rate
    dropout = rng.random(n) < plan.hr_dropout_rate

    kind = np.full(n, MinuteKind.REST.value, dtype=np.int8)
    pct = np.zeros(n)

    for blocks, minute_kind in (
        (plan.workout_blocks, MinuteKind.WORKOUT),
        (plan.incidental_blocks, MinuteKind.INCIDENTAL),
        (plan.nonwear_blocks, MinuteKind.NOT_WORN),
    ):
        for b in blocks:
            kind[b.start : b.end] = minute_kind.value
            pct[b.start : b.end] = b.pct_hrr

    # Mean bout length is 3 minutes, so this start rate yields the requested active minutes per hour.
    start_probability = plan.ambient_activity_rate / 60 / fmean(AMBIENT_BOUT_MINUTES)
    minute = 0
    while minute < n:
        if kind[minute] != MinuteKind.REST.value or bout_starts[minute] >= start_probability:
            minute += 1
            continue
        end = minute
        while end < min(n, minute + bout_durations[minute]) and kind[end] == MinuteKind.REST.value:
            kind[end] = MinuteKind.INCIDENTAL.value
            pct[end] = bout_levels[minute]
            end += 1
        minute = end

    rest_ceiling = profile.resting_hr + REST_HRR_CEILING * profile.hr_reserve
    active = (kind == MinuteKind.WORKOUT.value) | (kind == MinuteKind.INCIDENTAL.value)
    hr = np.where(
        active,
        profile.resting_hr + pct * profile.hr_reserve + noise,
        np.minimum(plan.resting_hr_level + noise, rest_ceiling),
    )
    hr = np.maximum(hr, 0.0)

    samples = []
    midnight = plan.midnight
    for i in range(n):
        ts = midnight + timedelta(minutes=i)
        if kind[i] == MinuteKind.NOT_WORN.value:
            samples.append(MinuteSample(timestamp=ts, hr_bpm=None, moving=False, worn=False))
            continue
        samples.append(
            MinuteSample(
                timestamp=ts,
                hr_bpm=None if dropout[i] else float(hr[i]),
                moving=bool(active[i] or rest_moving[i]),
                worn=True,
            )
        )
    return samples


def plan_sessions(plan: DayPlan) -> list[WorkoutSession]:
    midnight = plan.midnight
    return [
        WorkoutSession(
            start=midnight + timedelta(minutes=b.start),
            end=midnight + timedelta(minutes=b.end),
            source=SessionSource.MANUAL,
            label="workout",
        )
        for b in plan.workout_blocks
    ]


class PatternKind(Enum):
    CONSTANT = "constant"
    STEP_DOWN = "step_down"
    STEP_UP = "step_up"
    SPIKE = "spike"


class WeekPattern(Struct, frozen=True):
    kind: PatternKind
    baseline: float
    altered: float
    change_week: int
    duration_weeks: int
    hold_weeks: int = 1
    recovery_weeks: int = 3
    first_week: date = date(2024, 1, 1)
    jitter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.change_week < self.duration_weeks):
            raise CardioLoadError(f"change_week {self.change_week} must lie in [0, {self.duration_weeks})")
        if self.baseline < 0 or self.altered < 0:
            raise CardioLoadError("weekly loads must be nonnegative")
        if self.hold_weeks < 1 or self.recovery_weeks < 0:
            raise CardioLoadError("hold_weeks must be positive and recovery_weeks nonnegative")
        if not (0 <= self.jitter < 1):
            raise CardioLoadError(f"jitter must lie in [0, 1), got {self.jitter}")


def pattern_value(pattern: WeekPattern, week: int) -> float:
    offset = week - pattern.change_week
    if pattern.kind is PatternKind.CONSTANT or offset < 0:
        return pattern.baseline
    if pattern.kind is PatternKind.STEP_UP:
        return pattern.altered
    if offset < pattern.hold_weeks:
        return pattern.altered
    if pattern.kind is PatternKind.SPIKE:
        return pattern.baseline

    ramp = offset - pattern.hold_weeks
    if ramp < pattern.recovery_weeks:
        return pattern.altered + (pattern.baseline - pattern.altered) * (ramp + 1) / (pattern.recovery_weeks + 1)
    return pattern.baseline


def gen_week_series(pattern: WeekPattern) -> list[WeeklyLoad]:
    rng = np.random.default_rng(pattern.seed)
    factors = 1.0 + rng.uniform(-pattern.jitter, pattern.jitter, pattern.duration_weeks)

    series = []
    for week in range(pattern.duration_weeks):
        value = pattern_value(pattern, week)
        if pattern.jitter > 0:
            value = max(0.0, value * float(factors[week]))
        series.append(WeeklyLoad(week_start=pattern.first_week + timedelta(weeks=week), total_load=value, observed_days=7))
    return series


SCENARIO_PATTERNS = {
    "constant": WeekPattern(PatternKind.CONSTANT, baseline=400.0, altered=400.0, change_week=0, duration_weeks=10),
    # Sharp drop in week 6 followed by a gradual return.
    "step_down": WeekPattern(PatternKind.STEP_DOWN, baseline=400.0, altered=100.0, change_week=5, duration_weeks=18, hold_weeks=2, recovery_weeks=3),
    # Sustained increase from week 10.
    "step_up": WeekPattern(PatternKind.STEP_UP, baseline=250.0, altered=400.0, change_week=9, duration_weeks=18),
    # Two-week surge in weeks 7 and 8.
    "spike": WeekPattern(PatternKind.SPIKE, baseline=250.0, altered=450.0, change_week=6, duration_weeks=18, hold_weeks=2),
}


REFERENCE_PROFILE = UserProfile(user_id="synthetic-day", sex_coefficient_k=MALE_K, resting_hr=60.0, max_hr=190.0)


def reference_day_plan(seed: int = 0) -> DayPlan:
    """A day of one evening workout plus short bouts of incidental activity.

    Noise is off so the daily load has a closed form: 30 workout minutes at
    45% HRR and 23 incidental minutes between 35% and 55% HRR, about 37.8
    points with roughly 46% of it incidental.
    """
    return DayPlan(
        resting_hr_level=64.0,
        workout_blocks=(Block(start=18 * 60, duration=30, pct_hrr=0.45),),
        incidental_blocks=(
            Block(start=7 * 60 + 30, duration=4, pct_hrr=0.35),  # slow walk
            Block(start=8 * 60 + 10, duration=10, pct_hrr=0.50),  # commute
            Block(start=12 * 60 + 30, duration=6, pct_hrr=0.50),  # lunch walk
            Block(start=15 * 60, duration=3, pct_hrr=0.55),  # stairs
        ),
        nonwear_blocks=(Block(start=20 * 60 + 30, duration=60),),
        hr_noise_bpm=0.0,
        seed=seed,
    )


COHORT_WORKOUT_MINUTES = (0, 10, 30, 60, 120)


class CohortRow(Struct, frozen=True):
    workout_minutes_per_day: int
    users: int
    mean_weekly_load: float
    mean_workout_share: float


def cohort_profile(user: int, rng: np.random.Generator) -> UserProfile:
    return UserProfile(
        user_id=f"cohort-{user}",
        sex_coefficient_k=MALE_K if user % 2 == 0 else FEMALE_K,
        resting_hr=float(rng.uniform(52, 72)),
        max_hr=float(rng.uniform(175, 200)),
    )


def cohort_study(
    n_users: int,
    seed: int,
    load_config: Optional[LoadConfig] = None,
    target_config: Optional[TargetConfig] = None,
    ambient_activity_rate: float = 2.0,
    first_day: date = date(2024, 1, 1),
) -> list[CohortRow]:
    """Simulates one week for each of `n_users` users spread over workout-duration buckets."""
    load_config = load_config or LoadConfig()
    target_config = target_config or TargetConfig()
    rng = np.random.default_rng(seed)

    loads: dict[int, list[float]] = {m: [] for m in COHORT_WORKOUT_MINUTES}
    shares: dict[int, list[float]] = {m: [] for m in COHORT_WORKOUT_MINUTES}

    for user in range(n_users):
        workout_minutes = COHORT_WORKOUT_MINUTES[user % len(COHORT_WORKOUT_MINUTES)]
        profile = cohort_profile(user, rng)
        total = 0.0
        workout = 0.0

        for d in range(7):
            blocks = ()
            if workout_minutes:
                blocks = (Block(start=18 * 60, duration=workout_minutes, pct_hrr=float(rng.uniform(0.5, 0.7))),)
            plan = DayPlan(
                resting_hr_level=profile.resting_hr + 5,
                workout_blocks=blocks,
                ambient_activity_rate=ambient_activity_rate,
                seed=int(rng.integers(0, 2**32)),
                day=first_day + timedelta(days=d),
            )
            samples = gen_day(plan, profile)
            (summary,) = compute_days(samples, profile, plan_sessions(plan), load_config, target_config)
            total += summary.total_load
            workout += summary.workout_load

        loads[workout_minutes].append(total)
        shares[workout_minutes].append(workout / total if total > 0 else 0.0)

    return [
        CohortRow(workout_minutes_per_day=m, users=len(loads[m]), mean_weekly_load=fmean(loads[m]), mean_workout_share=fmean(shares[m]))
        for m in COHORT_WORKOUT_MINUTES
        if loads[m]
    ]
