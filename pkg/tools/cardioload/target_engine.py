"""Weekly load aggregation and the adaptive weekly target.

The target tracks chronic load as the larger of two estimators over the weekly
history, the rolling mean of the last `rm_window_weeks` weeks and an EWMA, and
never drops below `min_target`.
"""

from datetime import date, timedelta
from typing import Iterable, Optional, Sequence

from msgspec import Struct

from cardioload.domain import (
    ONE_WEEK,
    DailySummary,
    DayOutsideWeek,
    InvalidConfig,
    NonContiguousWeek,
    Phase,
    StatusValue,
    TargetConfig,
    TargetState,
    TargetStatus,
    WeeklyLoad,
    week_start_of,
    weekday_index,
)


def weekly_load(days: Sequence[DailySummary], week_start: date) -> WeeklyLoad:
    week_end = week_start + ONE_WEEK
    total = 0.0
    observed_days = 0

    for day in sorted(days, key=lambda d: d.date):
        if not (week_start <= day.date < week_end):
            raise DayOutsideWeek(f"{day.date} is outside the week starting {week_start}")
        total += day.total_load
        observed_days += day.observed

    return WeeklyLoad(week_start=week_start, total_load=total, observed_days=observed_days)


def weeks_from_days(days: Iterable[DailySummary], config: TargetConfig) -> list[WeeklyLoad]:
    """Buckets daily summaries into calendar weeks; absent days contribute nothing."""
    buckets: dict[date, list[DailySummary]] = {}
    seen: set[date] = set()
    for day in days:
        if day.date in seen:
            raise NonContiguousWeek(f"day {day.date} appears more than once")
        seen.add(day.date)
        buckets.setdefault(week_start_of(day.date, config.week_start_day), []).append(day)

    return [weekly_load(buckets[start], start) for start in sorted(buckets)]


def complete_weeks(days: Sequence[DailySummary], config: TargetConfig) -> tuple[list[WeeklyLoad], Optional[WeeklyLoad]]:
    """Splits daily history into finished weeks and the week still in progress.

    A week is finished once the history reaches its last day. The trailing week
    is returned separately until then, so it never enters a persisted state.
    """
    weeks = weeks_from_days(days, config)
    if not weeks:
        return [], None

    last_day = max(day.date for day in days)
    if weeks[-1].week_start + ONE_WEEK > last_day + timedelta(days=1):
        return weeks[:-1], weeks[-1]
    return weeks, None


def rolling_mean(window: Sequence[WeeklyLoad]) -> Optional[float]:
    if not window:
        return None
    return sum(week.total_load for week in window) / len(window)


def ewma_update(prev: Optional[float], latest: float, alpha: float) -> float:
    assert latest >= 0, f"weekly load must be nonnegative, got {latest}"
    if prev is None:
        return latest
    return alpha * latest + (1.0 - alpha) * prev


def initial_state(config: TargetConfig) -> TargetState:
    return TargetState(ewma=None, recent_weeks=(), phase=Phase.ONBOARDING_MINIMUM, current_target=config.min_target)


def phase_for(window_size: int, config: TargetConfig) -> Phase:
    if window_size == 0:
        return Phase.ONBOARDING_MINIMUM
    if window_size >= config.rm_window_weeks:
        return Phase.FULLY_PERSONALIZED
    return Phase.PARTIAL_PERSONALIZED


def target_of(window: Sequence[WeeklyLoad], ewma: Optional[float], config: TargetConfig) -> float:
    rm = rolling_mean(window)
    candidates = [config.min_target]
    if rm is not None:
        candidates.append(rm)
    if ewma is not None:
        candidates.append(ewma)
    return max(candidates)


def next_week_start(state: TargetState) -> Optional[date]:
    if not state.recent_weeks:
        return None
    return state.recent_weeks[-1].week_start + ONE_WEEK


def compute_target(state: TargetState, new_week: WeeklyLoad, config: TargetConfig) -> TargetState:
    if new_week.week_start.weekday() != weekday_index(config.week_start_day):
        raise NonContiguousWeek(f"week {new_week.week_start} does not start on {config.week_start_day}")

    expected = next_week_start(state)
    if expected is not None and new_week.week_start != expected:
        raise NonContiguousWeek(f"expected the week starting {expected}, got {new_week.week_start}")

    window = (*state.recent_weeks, new_week)[-config.rm_window_weeks :]
    ewma = ewma_update(state.ewma, new_week.total_load, config.ewma_alpha)

    return TargetState(
        ewma=ewma,
        recent_weeks=window,
        phase=phase_for(len(window), config),
        current_target=target_of(window, ewma, config),
    )


def fill_gap_weeks(state: TargetState, gap: int, config: TargetConfig) -> TargetState:
    """Folds `gap` absent weeks into the state as zero-load, unobserved weeks.

    Before any week of data there is nothing to be absent from, so a cold-start
    state stays in onboarding at the minimum target.
    """
    state, _ = fold_gap(state, gap, config)
    return state


def target_status(accrued: float, target: float, config: TargetConfig) -> TargetStatus:
    if not target > 0:
        raise InvalidConfig(f"target must be positive to classify progress, got {target}")

    ratio = accrued / target
    if ratio < 1:
        value = StatusValue.BELOW
    elif ratio <= config.overreach_ratio:
        value = StatusValue.MET
    else:
        value = StatusValue.OVERREACHED
    return TargetStatus(value=value, ratio=ratio)


class TargetRow(Struct, frozen=True):
    week_start: date
    weekly_load: float
    rm: float
    ewma: float
    target: float
    phase: Phase
    status: StatusValue


def status_in_force(accrued: float, target: float, config: TargetConfig) -> StatusValue:
    # A zero floor with an all-zero history leaves nothing to divide by.
    if target == 0:
        return StatusValue.MET if accrued == 0 else StatusValue.OVERREACHED
    return target_status(accrued, target, config).value


def fold_week(state: TargetState, week: WeeklyLoad, config: TargetConfig) -> tuple[TargetState, TargetRow]:
    status = status_in_force(week.total_load, state.current_target, config)
    state = compute_target(state, week, config)

    rm = rolling_mean(state.recent_weeks)
    assert rm is not None and state.ewma is not None
    row = TargetRow(week.week_start, week.total_load, rm, state.ewma, state.current_target, state.phase, status)
    return state, row


def fold_gap(state: TargetState, gap: int, config: TargetConfig) -> tuple[TargetState, list[TargetRow]]:
    assert gap >= 1, f"gap must be at least one week, got {gap}"

    start = next_week_start(state)
    if start is None:
        return state, []

    rows = []
    for i in range(gap):
        state, row = fold_week(state, WeeklyLoad(start + timedelta(weeks=i), 0.0, 0), config)
        rows.append(row)
    return state, rows


def fold_history(
    state: TargetState,
    weeks: Iterable[WeeklyLoad],
    config: TargetConfig,
) -> tuple[TargetState, list[TargetRow], list[WeeklyLoad]]:
    """Folds a weekly history into the state, week by week.

    Missing weeks between two present ones enter as zero-load gap weeks. Weeks
    already folded into the state are returned as skipped. Duplicate or
    misaligned weeks raise NonContiguousWeek.
    """
    ordered = sorted(weeks, key=lambda w: w.week_start)
    for prev, week in zip(ordered, ordered[1:]):
        if week.week_start == prev.week_start:
            raise NonContiguousWeek(f"week {week.week_start} appears more than once")

    rows: list[TargetRow] = []
    skipped: list[WeeklyLoad] = []

    for week in ordered:
        if week.week_start.weekday() != weekday_index(config.week_start_day):
            raise NonContiguousWeek(f"week {week.week_start} does not start on {config.week_start_day}")

        expected = next_week_start(state)
        if expected is not None and week.week_start < expected:
            skipped.append(week)
            continue

        if expected is not None and week.week_start > expected:
            state, gap_rows = fold_gap(state, (week.week_start - expected) // ONE_WEEK, config)
            rows.extend(gap_rows)

        state, row = fold_week(state, week, config)
        rows.append(row)

    return state, rows, skipped
