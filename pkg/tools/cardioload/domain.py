import math

from datetime import date, datetime, timedelta, timezone
from enum import Enum
from typing import Literal, Optional

from msgspec import Struct


MINUTES_PER_DAY = 1440
ONE_MINUTE = timedelta(minutes=1)
ONE_WEEK = timedelta(days=7)

MALE_K = 1.92
FEMALE_K = 1.67
MAX_K = 4.0

WEEK_DAYS = ("monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday")

WeekDay = Literal["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]


class CardioLoadError(ValueError):
    pass


class InvalidProfile(CardioLoadError):
    pass


class InvalidConfig(CardioLoadError):
    pass


class InvalidSample(CardioLoadError):
    pass


class InvalidSession(CardioLoadError):
    pass


class OverlappingSessions(CardioLoadError):
    pass


class MixedDates(CardioLoadError):
    pass


class DayOutsideWeek(CardioLoadError):
    pass


class NonContiguousWeek(CardioLoadError):
    pass


class InvalidState(CardioLoadError):
    pass


class Gate(Enum):
    NOT_WORN = "not_worn"
    NO_HR = "no_hr"
    BELOW_FLOOR = "below_floor"
    NO_MOVEMENT = "no_movement"
    DOWNWEIGHTED = "downweighted"
    FULL = "full"


ZERO_LOAD_GATES = frozenset({Gate.NOT_WORN, Gate.NO_HR, Gate.BELOW_FLOOR, Gate.NO_MOVEMENT})


class SessionSource(Enum):
    MANUAL = "manual"
    AUTO = "auto"


class Phase(Enum):
    ONBOARDING_MINIMUM = "onboarding_minimum"
    PARTIAL_PERSONALIZED = "partial_personalized"
    FULLY_PERSONALIZED = "fully_personalized"


class StatusValue(Enum):
    BELOW = "below"
    MET = "met"
    OVERREACHED = "overreached"


def is_utc_minute(ts: datetime) -> bool:
    if ts.tzinfo is None or ts.utcoffset() != timedelta(0):
        return False
    return ts.second == 0 and ts.microsecond == 0


def weekday_index(day: WeekDay) -> int:
    return WEEK_DAYS.index(day)


def week_start_of(day: date, week_start_day: WeekDay) -> date:
    offset = (day.weekday() - weekday_index(week_start_day)) % 7
    return day - timedelta(days=offset)


class UserProfile(Struct, frozen=True):
    user_id: str
    sex_coefficient_k: float
    resting_hr: float
    max_hr: float

    def __post_init__(self):
        if not math.isfinite(self.resting_hr) or self.resting_hr <= 0:
            raise InvalidProfile(f"resting_hr must be positive, got {self.resting_hr}")
        if not math.isfinite(self.max_hr) or self.max_hr <= self.resting_hr:
            raise InvalidProfile(f"max_hr ({self.max_hr}) must exceed resting_hr ({self.resting_hr})")
        if not (0 < self.sex_coefficient_k <= MAX_K):
            raise InvalidProfile(f"sex_coefficient_k must lie in (0, {MAX_K}], got {self.sex_coefficient_k}")

    @property
    def hr_reserve(self) -> float:
        return self.max_hr - self.resting_hr


class MinuteSample(Struct, frozen=True):
    timestamp: datetime
    hr_bpm: Optional[float]
    moving: bool
    worn: bool

    def __post_init__(self):
        if not is_utc_minute(self.timestamp):
            raise InvalidSample(f"timestamp {self.timestamp} is not a whole UTC minute")
        if self.hr_bpm is not None and not (math.isfinite(self.hr_bpm) and self.hr_bpm >= 0):
            raise InvalidSample(f"hr_bpm must be a nonnegative number, got {self.hr_bpm}")
        if not self.worn and (self.hr_bpm is not None or self.moving):
            raise InvalidSample("a minute not worn cannot carry heart rate or movement")


class WorkoutSession(Struct, frozen=True):
    start: datetime
    end: datetime
    source: SessionSource
    label: Optional[str] = None

    def __post_init__(self):
        if self.start.tzinfo is None or self.end.tzinfo is None:
            raise InvalidSession("session bounds must be timezone-aware UTC instants")
        if self.end <= self.start:
            raise InvalidSession(f"session end {self.end} must be after start {self.start}")

    def contains(self, ts: datetime) -> bool:
        return self.start <= ts < self.end

    @property
    def minutes(self) -> float:
        return (self.end - self.start) / ONE_MINUTE


class LoadConfig(Struct, frozen=True, forbid_unknown_fields=True):
    hrr_floor: float = 0.30
    downweight_band_end: float = 0.40
    downweight_factor: float = 0.5
    banister_scale: float = 0.64

    def __post_init__(self):
        if not (0 <= self.hrr_floor < self.downweight_band_end <= 1):
            raise InvalidConfig(f"need 0 <= hrr_floor ({self.hrr_floor}) < downweight_band_end ({self.downweight_band_end}) <= 1")
        if not (0 < self.downweight_factor <= 1):
            raise InvalidConfig(f"downweight_factor must lie in (0, 1], got {self.downweight_factor}")
        if not (math.isfinite(self.banister_scale) and self.banister_scale > 0):
            raise InvalidConfig(f"banister_scale must be positive, got {self.banister_scale}")


class TargetConfig(Struct, frozen=True, forbid_unknown_fields=True):
    ewma_alpha: float = 0.4
    rm_window_weeks: int = 4
    # Placeholder floor in load points/week, not derived from population data.
    min_target: float = 50.0
    overreach_ratio: float = 1.5
    week_start_day: WeekDay = "monday"
    day_coverage_threshold: float = 0.5

    def __post_init__(self):
        if not (0 < self.ewma_alpha < 1):
            raise InvalidConfig(f"ewma_alpha must lie in (0, 1), got {self.ewma_alpha}")
        if self.rm_window_weeks < 1:
            raise InvalidConfig(f"rm_window_weeks must be at least 1, got {self.rm_window_weeks}")
        if not (math.isfinite(self.min_target) and self.min_target >= 0):
            raise InvalidConfig(f"min_target must be nonnegative, got {self.min_target}")
        if not (math.isfinite(self.overreach_ratio) and self.overreach_ratio > 1):
            raise InvalidConfig(f"overreach_ratio must exceed 1, got {self.overreach_ratio}")
        if not (0 <= self.day_coverage_threshold <= 1):
            raise InvalidConfig(f"day_coverage_threshold must lie in [0, 1], got {self.day_coverage_threshold}")


class MinuteLoadDetail(Struct, frozen=True):
    timestamp: datetime
    pct_hrr: Optional[float]
    gate: Gate
    load_points: float
    in_workout: bool = False

    def __post_init__(self):
        if self.gate in ZERO_LOAD_GATES:
            if self.load_points != 0:
                raise CardioLoadError(f"gate {self.gate.value} must carry zero load, got {self.load_points}")
        elif not self.load_points > 0:
            raise CardioLoadError(f"gate {self.gate.value} must carry positive load, got {self.load_points}")
        if self.pct_hrr is not None and not (0 <= self.pct_hrr <= 1):
            raise CardioLoadError(f"pct_hrr must lie in [0, 1], got {self.pct_hrr}")


class DailySummary(Struct, frozen=True):
    date: date
    total_load: float
    workout_load: float
    incidental_load: float
    worn_minutes: int
    observed: bool

    def __post_init__(self):
        if min(self.total_load, self.workout_load, self.incidental_load) < 0:
            raise CardioLoadError("daily loads must be nonnegative")
        if self.total_load != self.workout_load + self.incidental_load:
            raise CardioLoadError(f"total_load {self.total_load} != workout_load + incidental_load for {self.date}")
        if not (0 <= self.worn_minutes <= MINUTES_PER_DAY * 2):
            raise CardioLoadError(f"worn_minutes out of range: {self.worn_minutes}")


class WeeklyLoad(Struct, frozen=True):
    week_start: date
    total_load: float
    observed_days: int

    def __post_init__(self):
        if not (math.isfinite(self.total_load) and self.total_load >= 0):
            raise CardioLoadError(f"weekly total_load must be nonnegative, got {self.total_load}")
        if not (0 <= self.observed_days <= 7):
            raise CardioLoadError(f"observed_days must lie in [0, 7], got {self.observed_days}")


class TargetState(Struct, frozen=True):
    ewma: Optional[float]
    recent_weeks: tuple[WeeklyLoad, ...]
    phase: Phase
    current_target: float

    def __post_init__(self):
        if (self.phase is Phase.ONBOARDING_MINIMUM) != (len(self.recent_weeks) == 0):
            raise InvalidState(f"phase {self.phase.value} does not match a window of {len(self.recent_weeks)} weeks")
        if (self.ewma is None) != (len(self.recent_weeks) == 0):
            raise InvalidState("ewma must be present exactly when the window holds weeks")
        if self.ewma is not None and not (math.isfinite(self.ewma) and self.ewma >= 0):
            raise InvalidState(f"ewma must be nonnegative, got {self.ewma}")
        if not (math.isfinite(self.current_target) and self.current_target >= 0):
            raise InvalidState(f"current_target must be nonnegative, got {self.current_target}")
        for prev, week in zip(self.recent_weeks, self.recent_weeks[1:]):
            if week.week_start - prev.week_start != ONE_WEEK:
                raise InvalidState(f"window weeks {prev.week_start} and {week.week_start} are not consecutive")

    def check(self, config: TargetConfig):
        """Checks the invariants that depend on the target configuration."""
        if len(self.recent_weeks) > config.rm_window_weeks:
            raise InvalidState(f"window holds {len(self.recent_weeks)} weeks, more than rm_window_weeks={config.rm_window_weeks}")
        full = len(self.recent_weeks) == config.rm_window_weeks
        if full != (self.phase is Phase.FULLY_PERSONALIZED):
            raise InvalidState(f"phase {self.phase.value} does not match a window of {len(self.recent_weeks)} weeks")
        if self.current_target < config.min_target:
            raise InvalidState(f"current_target {self.current_target} is below min_target {config.min_target}")
        for week in self.recent_weeks:
            if week.week_start.weekday() != weekday_index(config.week_start_day):
                raise InvalidState(f"week {week.week_start} does not start on {config.week_start_day}")
        return self


class TargetStatus(Struct, frozen=True):
    value: StatusValue
    ratio: float


def validate_profile(profile: UserProfile) -> UserProfile:
    """Re-checks every profile invariant and returns the profile unchanged."""
    UserProfile.__post_init__(profile)
    return profile


def utc(year: int, month: int, day: int, hour: int = 0, minute: int = 0) -> datetime:
    return datetime(year, month, day, hour, minute, tzinfo=timezone.utc)
