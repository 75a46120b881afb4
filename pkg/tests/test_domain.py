from datetime import date, datetime, timedelta, timezone

import msgspec
import pytest

from cardioload.domain import (
    DailySummary,
    InvalidConfig,
    InvalidProfile,
    InvalidSample,
    InvalidSession,
    InvalidState,
    LoadConfig,
    MinuteSample,
    Phase,
    SessionSource,
    TargetConfig,
    TargetState,
    UserProfile,
    WeeklyLoad,
    WorkoutSession,
    is_utc_minute,
    utc,
    validate_profile,
    week_start_of,
)


def test_profile_accepted():
    profile = validate_profile(UserProfile("u", 1.92, 60, 190))
    assert profile.hr_reserve == 130


@pytest.mark.parametrize(
    "resting, maximum, k",
    [
        (190, 60, 1.92),
        (60, 60, 1.92),
        (0, 190, 1.92),
        (-5, 190, 1.92),
        (60, float("nan"), 1.92),
        (60, 190, 0),
        (60, 190, 4.5),
    ],
)
def test_profile_rejected(resting, maximum, k):
    with pytest.raises(InvalidProfile):
        UserProfile("u", k, resting, maximum)


def test_profile_errors_are_value_errors():
    with pytest.raises(ValueError):
        UserProfile("u", 1.92, 190, 60)


def test_sample_must_be_whole_utc_minute():
    MinuteSample(utc(2024, 5, 1, 8), 72.0, True, True)
    with pytest.raises(InvalidSample):
        MinuteSample(utc(2024, 5, 1, 8) + timedelta(seconds=30), 72.0, True, True)
    with pytest.raises(InvalidSample):
        MinuteSample(datetime(2024, 5, 1, 8), 72.0, True, True)
    with pytest.raises(InvalidSample):
        MinuteSample(datetime(2024, 5, 1, 8, tzinfo=timezone(timedelta(hours=2))), 72.0, True, True)


def test_unworn_sample_carries_nothing():
    MinuteSample(utc(2024, 5, 1), None, False, False)
    with pytest.raises(InvalidSample):
        MinuteSample(utc(2024, 5, 1), 70.0, False, False)
    with pytest.raises(InvalidSample):
        MinuteSample(utc(2024, 5, 1), None, True, False)


def test_sample_rejects_negative_hr():
    with pytest.raises(InvalidSample):
        MinuteSample(utc(2024, 5, 1), -1.0, False, True)


def test_session_is_half_open():
    session = WorkoutSession(utc(2024, 5, 1, 18), utc(2024, 5, 1, 18, 45), SessionSource.MANUAL, "run")
    assert session.minutes == 45
    assert session.contains(utc(2024, 5, 1, 18))
    assert session.contains(utc(2024, 5, 1, 18, 44))
    assert not session.contains(utc(2024, 5, 1, 18, 45))


def test_session_bounds():
    with pytest.raises(InvalidSession):
        WorkoutSession(utc(2024, 5, 1, 18), utc(2024, 5, 1, 18), SessionSource.AUTO)
    with pytest.raises(InvalidSession):
        WorkoutSession(datetime(2024, 5, 1, 18), datetime(2024, 5, 1, 19), SessionSource.AUTO)


def test_default_configs():
    load = LoadConfig()
    assert (load.hrr_floor, load.downweight_band_end, load.downweight_factor, load.banister_scale) == (0.30, 0.40, 0.5, 0.64)
    target = TargetConfig()
    assert (target.ewma_alpha, target.rm_window_weeks, target.overreach_ratio, target.week_start_day) == (0.4, 4, 1.5, "monday")


@pytest.mark.parametrize(
    "kwargs",
    [
        {"hrr_floor": 0.4, "downweight_band_end": 0.3},
        {"downweight_factor": 0},
        {"downweight_factor": 1.5},
        {"banister_scale": -1},
    ],
)
def test_load_config_rejected(kwargs):
    with pytest.raises(InvalidConfig):
        LoadConfig(**kwargs)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"ewma_alpha": 0},
        {"ewma_alpha": 1},
        {"rm_window_weeks": 0},
        {"min_target": -1},
        {"overreach_ratio": 1.0},
        {"day_coverage_threshold": 1.5},
    ],
)
def test_target_config_rejected(kwargs):
    with pytest.raises(InvalidConfig):
        TargetConfig(**kwargs)


def test_config_decoding_wraps_validation():
    with pytest.raises(msgspec.ValidationError, match="ewma_alpha"):
        msgspec.json.decode(b'{"ewma_alpha": 2}', type=TargetConfig)
    with pytest.raises(msgspec.ValidationError):
        msgspec.json.decode(b'{"week_start_day": "funday"}', type=TargetConfig)


def test_daily_summary_split_must_add_up():
    DailySummary(date(2024, 5, 1), 3.0, 1.0, 2.0, 1440, True)
    with pytest.raises(ValueError):
        DailySummary(date(2024, 5, 1), 4.0, 1.0, 2.0, 1440, True)


def test_weekly_load_bounds():
    with pytest.raises(ValueError):
        WeeklyLoad(date(2024, 1, 1), -1.0, 7)
    with pytest.raises(ValueError):
        WeeklyLoad(date(2024, 1, 1), 1.0, 8)


def test_state_phase_matches_window():
    week = WeeklyLoad(date(2024, 1, 1), 300.0, 7)
    TargetState(None, (), Phase.ONBOARDING_MINIMUM, 50.0)
    TargetState(300.0, (week,), Phase.PARTIAL_PERSONALIZED, 300.0)
    with pytest.raises(InvalidState):
        TargetState(None, (), Phase.PARTIAL_PERSONALIZED, 50.0)
    with pytest.raises(InvalidState):
        TargetState(None, (week,), Phase.PARTIAL_PERSONALIZED, 50.0)


def test_state_window_must_be_consecutive():
    weeks = (WeeklyLoad(date(2024, 1, 1), 1.0, 7), WeeklyLoad(date(2024, 1, 15), 1.0, 7))
    with pytest.raises(InvalidState):
        TargetState(1.0, weeks, Phase.PARTIAL_PERSONALIZED, 50.0)


def test_state_check_against_config():
    config = TargetConfig()
    weeks = tuple(WeeklyLoad(date(2024, 1, 1) + timedelta(weeks=i), 300.0, 7) for i in range(4))
    state = TargetState(300.0, weeks, Phase.FULLY_PERSONALIZED, 300.0)
    assert state.check(config) is state

    with pytest.raises(InvalidState):
        TargetState(300.0, weeks[:3], Phase.FULLY_PERSONALIZED, 300.0).check(config)
    with pytest.raises(InvalidState):
        TargetState(300.0, weeks, Phase.FULLY_PERSONALIZED, 10.0).check(config)
    with pytest.raises(InvalidState):
        state.check(TargetConfig(rm_window_weeks=3))
    with pytest.raises(InvalidState):
        state.check(TargetConfig(week_start_day="sunday"))


def test_week_start_of():
    # 2024-05-01 is a Wednesday.
    assert week_start_of(date(2024, 5, 1), "monday") == date(2024, 4, 29)
    assert week_start_of(date(2024, 5, 1), "sunday") == date(2024, 4, 28)
    assert week_start_of(date(2024, 4, 29), "monday") == date(2024, 4, 29)


def test_is_utc_minute():
    assert is_utc_minute(utc(2024, 5, 1, 8, 1))
    assert not is_utc_minute(datetime(2024, 5, 1, 8, 1))
