from datetime import timedelta
from typing import Sequence

from humanize import intcomma, precisedelta
from prettytable import PrettyTable

from cardioload.domain import DailySummary, TargetConfig, TargetState
from cardioload.ingest import IngestReport
from cardioload.target_engine import rolling_mean


def build_daily_table(name: str, days: Sequence[DailySummary], report: IngestReport) -> PrettyTable:
    table = PrettyTable()
    table.field_names = ["Date", "Total", "Workout", "Incidental", "Worn", "Observed"]
    table.align = "l"
    table.title = f"Cardio Load for {name}"

    for i, d in enumerate(days):
        table.add_row(
            [
                d.date.isoformat(),
                f"{d.total_load:,.1f}",
                f"{d.workout_load:,.1f}",
                f"{d.incidental_load:,.1f}",
                precisedelta(timedelta(minutes=d.worn_minutes), minimum_unit="minutes"),
                "yes" if d.observed else "no",
            ],
            divider=i == len(days) - 1,
        )

    table.add_row(["Rows accepted", intcomma(report.records_accepted), "", "", "", ""])
    table.add_row(["Rows rejected", intcomma(report.records_rejected), "", "", "", ""])
    table.add_row(["Gaps", intcomma(len(report.gaps)), "", "", "", ""])
    return table


def build_state_table(name: str, state: TargetState, config: TargetConfig) -> PrettyTable:
    rm = rolling_mean(state.recent_weeks)

    table = PrettyTable()
    table.header = False
    table.align = "l"
    table.title = f"Weekly target for {name}"

    table.add_row(["Phase", state.phase.value])
    table.add_row(["Weeks in window", f"{len(state.recent_weeks)} of {config.rm_window_weeks}"])
    table.add_row(["Rolling mean", "-" if rm is None else f"{rm:,.1f}"])
    table.add_row(["EWMA", "-" if state.ewma is None else f"{state.ewma:,.1f}"])
    table.add_row(["Minimum target", f"{config.min_target:,.1f}"])
    table.add_row(["Current target", f"{state.current_target:,.1f}"])
    return table
