"""Readers and writers for every file the pipeline consumes or produces.

Minute rows are soft-validated: a malformed row is rejected and reported in
the IngestReport without touching its neighbours. Structural problems (bad
header, timestamps going backwards, broken workout rows) are hard errors.
"""

import csv
import io
import math

from datetime import date, datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Literal, Optional, TextIO, Union

import msgspec

from msgspec import Struct

from cardioload.domain import (
    FEMALE_K,
    MALE_K,
    ONE_MINUTE,
    CardioLoadError,
    DailySummary,
    InvalidConfig,
    InvalidProfile,
    InvalidSample,
    InvalidSession,
    InvalidState,
    LoadConfig,
    MinuteSample,
    SessionSource,
    TargetConfig,
    TargetState,
    UserProfile,
    WeeklyLoad,
    WorkoutSession,
    is_utc_minute,
)
from cardioload.load_engine import check_sessions
from cardioload.target_engine import TargetRow

MINUTE_COLUMNS = ["timestamp", "hr_bpm", "moving", "worn"]
WORKOUT_COLUMNS = ["start", "end", "source", "label"]
DAILY_COLUMNS = ["date", "total_load", "workout_load", "incidental_load", "worn_minutes", "observed"]
WEEKLY_COLUMNS = ["week_start", "total_load", "observed_days"]

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


class IngestError(CardioLoadError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MalformedHeader(IngestError):
    pass


class MalformedRow(IngestError):
    pass


class OutOfOrderTimestamps(IngestError):
    pass


class EndBeforeStart(IngestError):
    pass


class RejectCode(Enum):
    COLUMNS = "bad_columns"
    TIMESTAMP = "bad_timestamp"
    HR = "bad_hr"
    FLAG = "bad_flag"
    WEAR = "inconsistent_wear"


class RowError(Struct, frozen=True):
    line: int
    code: RejectCode
    message: str


class Gap(Struct, frozen=True):
    start: datetime
    end: datetime


class IngestReport(Struct, frozen=True):
    records_accepted: int
    records_rejected: int
    errors: tuple[RowError, ...] = ()
    gaps: tuple[Gap, ...] = ()

    @property
    def total_records(self) -> int:
        return self.records_accepted + self.records_rejected


class RowRejected(Exception):
    def __init__(self, code: RejectCode, message: str):
        super().__init__(message)
        self.code = code


def format_float(value: float) -> str:
    return repr(float(value))


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(TIMESTAMP_FORMAT)


def parse_timestamp(text: str) -> datetime:
    try:
        ts = msgspec.convert(text, datetime)
    except msgspec.ValidationError as e:
        raise ValueError(f"malformed timestamp '{text}': {e}")
    if ts.tzinfo is None or ts.utcoffset() != timedelta(0):
        raise ValueError(f"timestamp '{text}' is not in UTC")
    return ts


def parse_flag(text: str, name: str) -> bool:
    if text not in ("0", "1"):
        raise RowRejected(RejectCode.FLAG, f"{name} must be 0 or 1, got '{text}'")
    return text == "1"


def next_header(reader) -> list[str]:
    header = next(reader, None) or []
    if header and header[0].startswith("\ufeff"):
        header[0] = header[0][1:]
    return header


def read_header(reader, expected: list[str]):
    header = next_header(reader)
    if header != expected:
        raise MalformedHeader(reader.line_num, f"expected header '{','.join(expected)}', got '{','.join(header)}'")


def parse_minute_row(row: list[str]) -> MinuteSample:
    if len(row) != len(MINUTE_COLUMNS):
        raise RowRejected(RejectCode.COLUMNS, f"expected {len(MINUTE_COLUMNS)} columns, got {len(row)}")
    ts_text, hr_text, moving_text, worn_text = (cell.strip() for cell in row)

    try:
        ts = parse_timestamp(ts_text)
    except ValueError as e:
        raise RowRejected(RejectCode.TIMESTAMP, str(e))
    if not is_utc_minute(ts):
        raise RowRejected(RejectCode.TIMESTAMP, f"timestamp '{ts_text}' is not a whole minute")

    hr: Optional[float] = None
    if hr_text:
        try:
            hr = float(hr_text)
        except ValueError:
            raise RowRejected(RejectCode.HR, f"hr_bpm '{hr_text}' is not a number")
        if not math.isfinite(hr) or hr < 0:
            raise RowRejected(RejectCode.HR, f"hr_bpm must be a nonnegative number, got '{hr_text}'")

    moving = parse_flag(moving_text, "moving")
    worn = parse_flag(worn_text, "worn")

    try:
        return MinuteSample(timestamp=ts, hr_bpm=hr, moving=moving, worn=worn)
    except InvalidSample as e:
        raise RowRejected(RejectCode.WEAR, str(e))


def parse_minutes(stream: TextIO) -> tuple[list[MinuteSample], IngestReport]:
    reader = csv.reader(stream)
    read_header(reader, MINUTE_COLUMNS)

    samples: list[MinuteSample] = []
    errors: list[RowError] = []
    gaps: list[Gap] = []
    accepted = 0

    for row in reader:
        if not row:
            continue
        line = reader.line_num

        try:
            sample = parse_minute_row(row)
        except RowRejected as e:
            errors.append(RowError(line, e.code, str(e)))
            continue

        if samples:
            prev = samples[-1].timestamp
            if sample.timestamp <= prev:
                raise OutOfOrderTimestamps(line, f"timestamp {format_timestamp(sample.timestamp)} does not follow {format_timestamp(prev)}")
            if sample.timestamp - prev > ONE_MINUTE:
                gaps.append(Gap(prev + ONE_MINUTE, sample.timestamp))
                missing = prev + ONE_MINUTE
                while missing < sample.timestamp:
                    samples.append(MinuteSample(timestamp=missing, hr_bpm=None, moving=False, worn=False))
                    missing += ONE_MINUTE

        samples.append(sample)
        accepted += 1

    report = IngestReport(records_accepted=accepted, records_rejected=len(errors), errors=tuple(errors), gaps=tuple(gaps))
    return samples, report


def write_minutes(samples: Iterable[MinuteSample], stream: TextIO):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(MINUTE_COLUMNS)
    for s in samples:
        hr = "" if s.hr_bpm is None else format_float(s.hr_bpm)
        writer.writerow([format_timestamp(s.timestamp), hr, int(s.moving), int(s.worn)])


def parse_workouts(stream: TextIO) -> list[WorkoutSession]:
    reader = csv.reader(stream)
    read_header(reader, WORKOUT_COLUMNS)

    sessions = []
    for row in reader:
        if not row:
            continue
        line = reader.line_num

        if len(row) != len(WORKOUT_COLUMNS):
            raise MalformedRow(line, f"expected {len(WORKOUT_COLUMNS)} columns, got {len(row)}")
        start_text, end_text, source_text, label = row

        try:
            start = parse_timestamp(start_text.strip())
            end = parse_timestamp(end_text.strip())
            source = SessionSource(source_text.strip())
        except ValueError as e:
            raise MalformedRow(line, str(e))

        try:
            sessions.append(WorkoutSession(start=start, end=end, source=source, label=label or None))
        except InvalidSession as e:
            raise EndBeforeStart(line, str(e))

    return check_sessions(sessions)


def write_workouts(sessions: Iterable[WorkoutSession], stream: TextIO):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(WORKOUT_COLUMNS)
    for s in sessions:
        writer.writerow([format_timestamp(s.start), format_timestamp(s.end), s.source.value, s.label or ""])


def write_daily(days: Iterable[DailySummary], stream: TextIO):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(DAILY_COLUMNS)
    for d in days:
        writer.writerow(
            [
                d.date.isoformat(),
                format_float(d.total_load),
                format_float(d.workout_load),
                format_float(d.incidental_load),
                d.worn_minutes,
                int(d.observed),
            ]
        )


def parse_daily_row(row: list[str]) -> DailySummary:
    return DailySummary(
        date=date.fromisoformat(row[0]),
        total_load=float(row[1]),
        workout_load=float(row[2]),
        incidental_load=float(row[3]),
        worn_minutes=int(row[4]),
        observed=parse_flag(row[5], "observed"),
    )


def write_weekly(weeks: Iterable[WeeklyLoad], stream: TextIO):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(WEEKLY_COLUMNS)
    for w in weeks:
        writer.writerow([w.week_start.isoformat(), format_float(w.total_load), w.observed_days])


def parse_weekly_row(row: list[str]) -> WeeklyLoad:
    return WeeklyLoad(week_start=date.fromisoformat(row[0]), total_load=float(row[1]), observed_days=int(row[2]))


def parse_history(stream: TextIO) -> Union[list[DailySummary], list[WeeklyLoad]]:
    """Reads a daily summaries file or a weekly history file, told apart by header."""
    reader = csv.reader(stream)
    header = next_header(reader)

    if header == DAILY_COLUMNS:
        parse_row = parse_daily_row
    elif header == WEEKLY_COLUMNS:
        parse_row = parse_weekly_row
    else:
        raise MalformedHeader(reader.line_num, f"expected a daily or weekly header, got '{','.join(header)}'")

    records = []
    for row in reader:
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRow(reader.line_num, f"expected {len(header)} columns, got {len(row)}")
        try:
            records.append(parse_row([cell.strip() for cell in row]))
        except (ValueError, RowRejected) as e:
            raise MalformedRow(reader.line_num, str(e))
    return records


class CustomCoefficient(Struct, frozen=True, forbid_unknown_fields=True):
    k: float


class ProfileFile(Struct, frozen=True, forbid_unknown_fields=True):
    user_id: str
    sex: Union[Literal["male", "female"], CustomCoefficient]
    resting_hr: float
    max_hr: float


def decode_profile(data: bytes) -> UserProfile:
    try:
        raw = msgspec.json.decode(data, type=ProfileFile)
    except (msgspec.ValidationError, msgspec.DecodeError) as e:
        raise InvalidProfile(f"malformed profile: {e}")

    if isinstance(raw.sex, CustomCoefficient):
        k = raw.sex.k
    else:
        k = MALE_K if raw.sex == "male" else FEMALE_K

    return UserProfile(user_id=raw.user_id, sex_coefficient_k=k, resting_hr=raw.resting_hr, max_hr=raw.max_hr)


def encode_profile(profile: UserProfile) -> bytes:
    if profile.sex_coefficient_k == MALE_K:
        sex: Union[str, CustomCoefficient] = "male"
    elif profile.sex_coefficient_k == FEMALE_K:
        sex = "female"
    else:
        sex = CustomCoefficient(k=profile.sex_coefficient_k)
    raw = ProfileFile(user_id=profile.user_id, sex=sex, resting_hr=profile.resting_hr, max_hr=profile.max_hr)
    return msgspec.json.format(msgspec.json.encode(raw), indent=2) + b"\n"


class ConfigFile(Struct, frozen=True, forbid_unknown_fields=True):
    load: LoadConfig = msgspec.field(default_factory=LoadConfig)
    target: TargetConfig = msgspec.field(default_factory=TargetConfig)


def decode_config(data: bytes) -> ConfigFile:
    try:
        return msgspec.json.decode(data, type=ConfigFile)
    except (msgspec.ValidationError, msgspec.DecodeError) as e:
        raise InvalidConfig(f"malformed config: {e}")


def encode_config(config: ConfigFile) -> bytes:
    return msgspec.json.encode(config)


def decode_state(data: bytes, config: TargetConfig) -> TargetState:
    try:
        state = msgspec.json.decode(data, type=TargetState)
    except (msgspec.ValidationError, msgspec.DecodeError) as e:
        raise InvalidState(f"malformed state: {e}")
    return state.check(config)


def encode_state(state: TargetState) -> bytes:
    return msgspec.json.format(msgspec.json.encode(state), indent=2) + b"\n"


def open_text(path: Path) -> io.StringIO:
    """Decodes a whole CSV file, reporting the line of the first invalid byte."""
    with open(path, "rb") as f:
        data = f.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        line = data.count(b"\n", 0, e.start) + 1
        error = MalformedHeader if line == 1 else MalformedRow
        raise error(line, f"invalid UTF-8 byte {data[e.start:e.start + 1]!r}")
    return io.StringIO(text, newline="")


def read_minutes(path: Path) -> tuple[list[MinuteSample], IngestReport]:
    return parse_minutes(open_text(path))


def read_workouts(path: Optional[Path]) -> list[WorkoutSession]:
    if path is None:
        return []
    return parse_workouts(open_text(path))


def read_history(path: Path) -> Union[list[DailySummary], list[WeeklyLoad]]:
    return parse_history(open_text(path))


def read_profile(path: Path) -> UserProfile:
    with open(path, "rb") as f:
        return decode_profile(f.read())


def read_config(path: Optional[Path]) -> ConfigFile:
    if path is None:
        return ConfigFile()
    with open(path, "rb") as f:
        return decode_config(f.read())


TARGET_COLUMNS = ["week_start", "weekly_load", "rm", "ewma", "target", "phase", "status"]


def write_target_rows(rows: Iterable[TargetRow], stream: TextIO):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TARGET_COLUMNS)
    for r in rows:
        writer.writerow(
            [
                r.week_start.isoformat(),
                format_float(r.weekly_load),
                format_float(r.rm),
                format_float(r.ewma),
                format_float(r.target),
                r.phase.value,
                r.status.value,
            ]
        )
