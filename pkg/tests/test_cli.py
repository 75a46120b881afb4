import csv

from datetime import date, timedelta
from pathlib import Path

import pytest

from cardioload.cli import main
from cardioload.domain import Phase, TargetConfig, WeeklyLoad
from cardioload.ingest import decode_state, encode_profile, write_minutes, write_weekly, write_workouts
from cardioload.manifest import read_manifest
from cardioload.synth import REFERENCE_PROFILE, reference_day_plan, gen_day, plan_sessions


def rows_of(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def write_history(path: Path, loads, first: date = date(2024, 1, 1)) -> Path:
    with open(path, "w", newline="") as f:
        write_weekly([WeeklyLoad(first + timedelta(weeks=i), float(x), 7) for i, x in enumerate(loads)], f)
    return path


def read_state(path: Path):
    return decode_state(path.read_bytes(), TargetConfig())


@pytest.fixture
def day_files(tmp_path):
    plan = reference_day_plan()
    profile = tmp_path / "profile.json"
    minutes = tmp_path / "minutes.csv"
    workouts = tmp_path / "workouts.csv"

    profile.write_bytes(encode_profile(REFERENCE_PROFILE))
    with open(minutes, "w", newline="") as f:
        write_minutes(gen_day(plan, REFERENCE_PROFILE), f)
    with open(workouts, "w", newline="") as f:
        write_workouts(plan_sessions(plan), f)
    return profile, minutes, workouts


def test_compute(tmp_path, day_files):
    profile, minutes, workouts = day_files
    out = tmp_path / "out" / "daily.csv"
    argv = ["compute", "--profile", str(profile), "--minutes", str(minutes), "--workouts", str(workouts), "--out", str(out), "--silence"]
    assert main(argv) == 0

    (row,) = rows_of(out)
    assert row["date"] == "2024-05-01"
    assert 33 <= float(row["total_load"]) <= 41
    assert float(row["workout_load"]) > 0
    assert row["observed"] == "1"

    manifest = read_manifest(tmp_path / "out" / "daily.manifest.json")
    assert manifest.command == "compute"
    assert set(manifest.inputs) == {"profile", "minutes", "workouts"}
    assert list(manifest.outputs) == ["daily.csv"]


def test_compute_without_workouts(tmp_path, day_files):
    profile, minutes, _ = day_files
    out = tmp_path / "daily.csv"
    assert main(["compute", "--profile", str(profile), "--minutes", str(minutes), "--out", str(out), "--silence"]) == 0

    (row,) = rows_of(out)
    assert float(row["workout_load"]) == 0
    assert row["incidental_load"] == row["total_load"]


def test_compute_in_local_timezone(tmp_path, day_files):
    profile, minutes, workouts = day_files
    out = tmp_path / "daily.csv"
    argv = ["compute", "--profile", str(profile), "--minutes", str(minutes), "--timezone", "America/New_York", "--out", str(out), "--silence"]
    assert main(argv) == 0
    assert [r["date"] for r in rows_of(out)] == ["2024-04-30", "2024-05-01"]


def test_compute_rejects_bad_profile(tmp_path, day_files):
    _, minutes, _ = day_files
    profile = tmp_path / "bad.json"
    profile.write_bytes(b'{"user_id": "u", "sex": "male", "resting_hr": 190, "max_hr": 60}')
    assert main(["compute", "--profile", str(profile), "--minutes", str(minutes), "--out", str(tmp_path / "d.csv")]) == 3


def test_compute_rejects_bad_config(tmp_path, day_files):
    profile, minutes, _ = day_files
    config = tmp_path / "config.json"
    config.write_bytes(b'{"load": {"banister": 1}}')
    argv = ["compute", "--config", str(config), "--profile", str(profile), "--minutes", str(minutes), "--out", str(tmp_path / "d.csv")]
    assert main(argv) == 3


def test_compute_rejects_unknown_timezone(tmp_path, day_files):
    profile, minutes, _ = day_files
    argv = ["compute", "--profile", str(profile), "--minutes", str(minutes), "--timezone", "Mars/Olympus", "--out", str(tmp_path / "d.csv")]
    assert main(argv) == 3


def test_compute_parse_errors(tmp_path, day_files):
    profile, _, _ = day_files
    minutes = tmp_path / "minutes.csv"
    minutes.write_text("when,hr\n")
    assert main(["compute", "--profile", str(profile), "--minutes", str(minutes), "--out", str(tmp_path / "d.csv")]) == 2
    assert main(["compute", "--profile", str(profile), "--minutes", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "d.csv")]) == 2


def test_target_cold_start(tmp_path):
    state = tmp_path / "state.json"
    out = tmp_path / "targets.csv"
    assert main(["target", "--state", str(state), "--out", str(out), "--silence"]) == 0

    assert rows_of(out) == []
    restored = read_state(state)
    assert restored.current_target == TargetConfig().min_target
    assert restored.phase is Phase.ONBOARDING_MINIMUM


def test_target_constant_weeks(tmp_path):
    history = write_history(tmp_path / "weekly.csv", [400] * 4)
    state = tmp_path / "state.json"
    out = tmp_path / "targets.csv"
    assert main(["target", str(history), "--state", str(state), "--out", str(out), "--silence"]) == 0

    rows = rows_of(out)
    assert [float(r["target"]) for r in rows] == [400.0] * 4
    assert rows[-1]["phase"] == "fully_personalized"
    assert read_state(state).current_target == 400


def test_target_from_daily_history(tmp_path, day_files):
    profile, minutes, workouts = day_files
    daily = tmp_path / "daily.csv"
    argv = ["compute", "--profile", str(profile), "--minutes", str(minutes), "--workouts", str(workouts), "--out", str(daily), "--silence"]
    assert main(argv) == 0
    out = tmp_path / "targets.csv"
    state = tmp_path / "state.json"
    assert main(["target", str(daily), "--state", str(state), "--out", str(out), "--silence"]) == 0

    # A lone Wednesday leaves its week in progress, so nothing is folded yet.
    assert rows_of(out) == []
    assert read_state(state).phase is Phase.ONBOARDING_MINIMUM


DAILY_HEADER = "date,total_load,workout_load,incidental_load,worn_minutes,observed\n"


def write_days(path: Path, loads, first: date = date(2024, 1, 1)) -> Path:
    rows = [f"{first + timedelta(days=i)},{x},0,{x},1440,1\n" for i, x in enumerate(loads)]
    path.write_text(DAILY_HEADER + "".join(rows))
    return path


def test_target_daily_incremental_matches_batch(tmp_path):
    batch_state = tmp_path / "batch.json"
    week = write_days(tmp_path / "week.csv", [100] * 7)
    assert main(["target", str(week), "--state", str(batch_state), "--out", str(tmp_path / "batch.csv"), "--silence"]) == 0

    state = tmp_path / "state.json"
    monday_to_wednesday = write_days(tmp_path / "partial.csv", [100] * 3)
    assert main(["target", str(monday_to_wednesday), "--state", str(state), "--out", str(tmp_path / "first.csv"), "--silence"]) == 0
    assert rows_of(tmp_path / "first.csv") == []
    assert main(["target", str(week), "--state", str(state), "--out", str(tmp_path / "second.csv"), "--silence"]) == 0

    assert state.read_bytes() == batch_state.read_bytes()
    (row,) = rows_of(tmp_path / "second.csv")
    assert float(row["weekly_load"]) == 700
    assert read_state(state).recent_weeks == (WeeklyLoad(date(2024, 1, 1), 700.0, 7),)


def test_target_rejects_repeated_days(tmp_path):
    history = tmp_path / "daily.csv"
    history.write_text(DAILY_HEADER + "2024-01-01,100,0,100,1440,1\n2024-01-01,100,0,100,1440,1\n")
    assert main(["target", str(history), "--out", str(tmp_path / "t.csv")]) == 4


def test_compute_rejects_invalid_utf8(tmp_path, day_files):
    profile, _, _ = day_files
    minutes = tmp_path / "minutes.csv"
    minutes.write_bytes(b"timestamp,hr_bpm,moving,worn\n2024-05-01T08:00:00Z,7\xff,1,1\n")
    assert main(["compute", "--profile", str(profile), "--minutes", str(minutes), "--out", str(tmp_path / "d.csv")]) == 2


def test_target_incremental_matches_batch(tmp_path):
    loads = [320, 0, 410.5, 380, 120, 500, 450, 460, 300, 310]
    history = write_history(tmp_path / "weekly.csv", loads)
    batch_state = tmp_path / "batch.json"
    batch_out = tmp_path / "batch.csv"
    assert main(["target", str(history), "--state", str(batch_state), "--out", str(batch_out), "--silence"]) == 0

    state = tmp_path / "state.json"
    partial = write_history(tmp_path / "partial.csv", loads[:4])
    assert main(["target", str(partial), "--state", str(state), "--out", str(tmp_path / "first.csv"), "--silence"]) == 0
    assert main(["target", str(history), "--state", str(state), "--out", str(tmp_path / "second.csv"), "--silence"]) == 0

    assert state.read_bytes() == batch_state.read_bytes()
    assert rows_of(tmp_path / "first.csv") + rows_of(tmp_path / "second.csv") == rows_of(batch_out)


def test_target_fills_gap_weeks(tmp_path):
    history = tmp_path / "weekly.csv"
    history.write_text("week_start,total_load,observed_days\n2024-01-01,400,7\n2024-01-22,400,7\n")
    out = tmp_path / "targets.csv"
    assert main(["target", str(history), "--out", str(out), "--silence"]) == 0
    assert [r["weekly_load"] for r in rows_of(out)] == ["400.0", "0.0", "0.0", "400.0"]


def test_target_rejects_duplicate_weeks(tmp_path):
    history = tmp_path / "weekly.csv"
    history.write_text("week_start,total_load,observed_days\n2024-01-01,400,7\n2024-01-01,300,7\n")
    assert main(["target", str(history), "--out", str(tmp_path / "t.csv")]) == 4


def test_target_rejects_misaligned_weeks(tmp_path):
    history = write_history(tmp_path / "weekly.csv", [400, 400], first=date(2024, 1, 3))
    assert main(["target", str(history), "--out", str(tmp_path / "t.csv")]) == 4


def test_target_rejects_corrupt_state(tmp_path):
    state = tmp_path / "state.json"
    state.write_text("{}")
    assert main(["target", "--state", str(state), "--out", str(tmp_path / "t.csv")]) == 2


def test_simulate_unknown_scenario(tmp_path):
    assert main(["simulate", "marathon", "--out", str(tmp_path / "sim")]) == 5


def tree(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_simulate_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["simulate", "step_up", "--weeks", "18", "--seed", "42", "--out", str(tmp_path / name), "--silence"]) == 0

    first = tree(tmp_path / "a")
    assert first == tree(tmp_path / "b")
    assert set(first) == {"weekly.csv", "targets.csv", "plot_weeks.csv", "state.json", "manifest.json"}

    manifest = read_manifest(tmp_path / "a" / "manifest.json")
    assert manifest.parameters["seed"] == "42"
    assert set(manifest.outputs) == {"weekly.csv", "targets.csv", "plot_weeks.csv", "state.json"}
    assert str(tmp_path) not in (tmp_path / "a" / "manifest.json").read_text()


def test_simulate_jitter_depends_on_seed(tmp_path):
    for seed in ("1", "2"):
        argv = ["simulate", "constant", "--jitter", "0.1", "--seed", seed, "--out", str(tmp_path / seed), "--silence"]
        assert main(argv) == 0
    assert (tmp_path / "1" / "weekly.csv").read_bytes() != (tmp_path / "2" / "weekly.csv").read_bytes()


def test_simulate_rejects_bad_pattern(tmp_path):
    assert main(["simulate", "spike", "--weeks", "3", "--out", str(tmp_path / "sim")]) == 3


def test_simulate_fig2_day(tmp_path):
    out = tmp_path / "day"
    assert main(["simulate", "fig2_day", "--out", str(out), "--silence"]) == 0

    (row,) = rows_of(out / "daily.csv")
    total = float(row["total_load"])
    assert 33 <= total <= 41
    assert 0.35 <= float(row["incidental_load"]) / total <= 0.55
    assert len(rows_of(out / "plot_day.csv")) == 1440


def test_simulate_cohort(tmp_path):
    out = tmp_path / "cohort"
    assert main(["simulate", "cohort", "--users", "5", "--seed", "3", "--out", str(out), "--silence"]) == 0
    rows = rows_of(out / "cohort.csv")
    assert [int(r["workout_minutes_per_day"]) for r in rows] == [0, 10, 30, 60, 120]


def test_plot_minute_curve(tmp_path):
    out = tmp_path / "curve.csv"
    assert main(["plot", "minute_curve", "--out", str(out), "--silence"]) == 0

    rows = {r["pct_hrr"]: r for r in rows_of(out)}
    assert len(rows) == 201
    assert float(rows["0.29"]["load_male"]) == 0 and float(rows["0.29"]["load_female"]) == 0
    assert float(rows["1.0"]["load_male"]) == pytest.approx(4.3655, abs=1e-3)
    assert (tmp_path / "curve.manifest.json").exists()


def test_plot_weeks_identity(tmp_path):
    assert main(["simulate", "step_down", "--out", str(tmp_path / "sim"), "--silence"]) == 0
    out = tmp_path / "weeks.csv"
    assert main(["plot", "weeks", "--history", str(tmp_path / "sim" / "weekly.csv"), "--out", str(out), "--silence"]) == 0

    rows = rows_of(out)
    assert len(rows) == 18
    min_target = TargetConfig().min_target
    for r in rows:
        assert float(r["target"]) == max(float(r["rm"]), float(r["ewma"]), min_target)
    assert out.read_bytes() == (tmp_path / "sim" / "plot_weeks.csv").read_bytes()


def test_plot_day(tmp_path, day_files):
    profile, minutes, workouts = day_files
    out = tmp_path / "day.csv"
    argv = ["plot", "day", "--profile", str(profile), "--minutes", str(minutes), "--workouts", str(workouts), "--out", str(out), "--silence"]
    assert main(argv) == 0

    rows = rows_of(out)
    assert len(rows) == 1440
    assert sum(r["in_workout"] == "1" for r in rows) == 30
    assert all(r["pct_hrr"] == "" for r in rows[20 * 60 + 30 : 21 * 60 + 30])


def test_plot_day_needs_inputs(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["plot", "day", "--out", str(tmp_path / "day.csv")])
    assert e.value.code == 2
