#!/usr/bin/env python3

"""Regenerates every figure data set by running the CLI tasks in dependency order."""

import asyncio
import os
import signal
import sys
import time

from argparse import ArgumentParser
from asyncio.subprocess import PIPE, STDOUT
from datetime import timedelta
from pathlib import Path
from typing import Optional

import graphviz
import humanize
import rich

SPAWN_COLOR = "cyan"
DONE_COLOR = "green"
SKIP_COLOR = "yellow"
ERROR_COLOR = "red"

CURRENT_DIR = Path(os.path.abspath(os.path.dirname(__file__)))
PROJECT_DIR = CURRENT_DIR.parent
FIGURES_DIR = PROJECT_DIR / "figures"
CLI = CURRENT_DIR / "cardio_load.py"

WEEKLY_SCENARIOS = ["constant", "step_down", "step_up", "spike"]
DEFAULT_SEED = 42


class Task:
    def __init__(
        self,
        name: str,
        args: list[str],
        consumes: Optional[list[Path]] = None,
        produces: Optional[list[Path]] = None,
        force: bool = False,
        silence: bool = False,
    ):
        self.name = name
        self.args = args
        self.consumes = set(consumes or [])
        self.produces = set(produces or [])
        self.force = force
        self.silence = silence

        self.after: set[Task] = set()
        self.before: set[Task] = set()
        self.done = False
        self.ok = False

    def __repr__(self):
        return f"Task({self.name})"

    @property
    def id(self) -> str:
        return self.name.replace(" ", "_")

    def log(self, msg: str, color: Optional[str] = None):
        if self.silence and color != ERROR_COLOR:
            return
        prefix = f"[{color}]" if color else ""
        suffix = f"[/{color}]" if color else ""
        rich.print(f"{prefix}\\[{self.name}] {msg}{suffix}", flush=True)

    def is_ready(self) -> bool:
        return all(task.done and task.ok for task in self.after)

    async def _run(self) -> bool:
        missing = [f for f in self.consumes if not f.exists()]
        if missing:
            self.log(f"consumed file '{missing[0]}' does not exist", color=ERROR_COLOR)
            return False

        if not self.force and self.produces and all(f.exists() for f in self.produces):
            self.log("all product files already exist, skipping", color=SKIP_COLOR)
            return True

        self.log("spawning", color=SPAWN_COLOR)
        process = await asyncio.create_subprocess_exec(sys.executable, str(CLI), *self.args, stdout=PIPE, stderr=STDOUT)
        stdout_data, _ = await process.communicate()
        assert process.returncode is not None, "Process return code is None"

        if process.returncode < 0:
            self.log(f"terminated by signal {-process.returncode}", color=ERROR_COLOR)
            return False
        if process.returncode != 0:
            self.log(f"failed with exit code {process.returncode}", color=ERROR_COLOR)
            print(stdout_data.decode().strip())
            return False
        return True

    async def run(self) -> bool:
        start = time.perf_counter()
        try:
            self.ok = await self._run()
        except Exception as e:
            self.log(f"error while executing: {e}", color=ERROR_COLOR)
            self.ok = False
        self.done = True

        missing = [f for f in self.produces if not f.exists()]
        if self.ok and missing:
            self.log(f"some produced files are missing: {', '.join(str(f) for f in missing)}", color=ERROR_COLOR)
            self.ok = False
        if self.ok:
            delta = timedelta(seconds=time.perf_counter() - start)
            self.log(f"done ({humanize.precisedelta(delta, minimum_unit='milliseconds')})", color=DONE_COLOR)
        return self.ok


class Orchestrator:
    def __init__(self, tasks: Optional[list[Task]] = None):
        self.tasks: list[Task] = []
        self.producers: dict[Path, Task] = {}
        for task in tasks or []:
            self.add(task)

    def add(self, task: Task):
        for file in task.produces:
            assert file not in self.producers, f"File {file} is already produced by {self.producers[file].name}"
            self.producers[file] = task
        self.tasks.append(task)

    def link(self):
        for task in self.tasks:
            for file in task.consumes:
                producer = self.producers.get(file)
                if producer is not None:
                    task.after.add(producer)
                    producer.before.add(task)

    def initial_tasks(self) -> list[Task]:
        return [task for task in self.tasks if not task.after]

    def visualize(self, dot_file: Path):
        self.link()
        dot = graphviz.Digraph(comment="Figure tasks", format="pdf")
        dot.attr(kw="graph", rankdir="LR")
        dot.attr(kw="node", style="filled", shape="box")
        for task in self.tasks:
            dot.node(task.id, label=task.name, fillcolor=SPAWN_COLOR)
            for nxt in task.before:
                dot.edge(task.id, nxt.id)
        dot.render(dot_file)

    async def _worker(self, queue: asyncio.Queue):
        while True:
            task = await queue.get()
            try:
                if await task.run():
                    for nxt in sorted(task.before, key=lambda s: s.name):
                        if not nxt.done and nxt.is_ready():
                            await queue.put(nxt)
            finally:
                queue.task_done()

    async def _run(self, max_concurrent: int):
        queue: asyncio.Queue = asyncio.Queue()
        loop = asyncio.get_running_loop()
        workers: list[asyncio.Task] = []

        def handle_sigint():
            for worker in workers:
                worker.cancel()

        if hasattr(signal, "SIGINT"):
            loop.add_signal_handler(signal.SIGINT, handle_sigint)

        for task in self.initial_tasks():
            await queue.put(task)

        workers.extend(asyncio.create_task(self._worker(queue)) for _ in range(max_concurrent))
        await queue.join()
        for worker in workers:
            worker.cancel()
        await asyncio.gather(*workers, return_exceptions=True)

    def run(self, max_concurrent: int = -1) -> bool:
        self.link()
        if max_concurrent <= 0:
            max_concurrent = os.cpu_count() or 8

        start = time.perf_counter()
        asyncio.run(self._run(max_concurrent))
        delta = timedelta(seconds=time.perf_counter() - start)

        failed = [task for task in self.tasks if not task.ok]
        color = ERROR_COLOR if failed else DONE_COLOR
        rich.print(f"[{color}]{len(self.tasks) - len(failed)}/{len(self.tasks)} tasks ok in {humanize.precisedelta(delta, minimum_unit='milliseconds')}[/{color}]")
        return not failed


def figure_tasks(out_dir: Path, seed: int, force: bool = False, silence: bool = False) -> list[Task]:
    tasks = [
        Task(
            "minute curve",
            ["plot", "minute_curve", "--out", str(out_dir / "minute_curve.csv")],
            produces=[out_dir / "minute_curve.csv"],
            force=force,
            silence=silence,
        )
    ]

    day_dir = out_dir / "fig2_day"
    tasks.append(
        Task(
            "simulate fig2_day",
            ["simulate", "fig2_day", "--seed", str(seed), "--out", str(day_dir)],
            produces=[day_dir / "profile.json", day_dir / "minutes.csv", day_dir / "workouts.csv"],
            force=force,
            silence=silence,
        )
    )
    day_inputs = ["--profile", str(day_dir / "profile.json"), "--minutes", str(day_dir / "minutes.csv"), "--workouts", str(day_dir / "workouts.csv")]
    tasks.append(
        Task(
            "compute fig2_day",
            ["compute", *day_inputs, "--out", str(out_dir / "day_loads.csv")],
            consumes=[day_dir / "profile.json", day_dir / "minutes.csv", day_dir / "workouts.csv"],
            produces=[out_dir / "day_loads.csv"],
            force=force,
            silence=silence,
        )
    )
    tasks.append(
        Task(
            "plot fig2_day",
            ["plot", "day", *day_inputs, "--out", str(out_dir / "day_minutes.csv")],
            consumes=[day_dir / "profile.json", day_dir / "minutes.csv", day_dir / "workouts.csv"],
            produces=[out_dir / "day_minutes.csv"],
            force=force,
            silence=silence,
        )
    )

    for scenario in WEEKLY_SCENARIOS:
        scenario_dir = out_dir / scenario
        weekly = scenario_dir / "weekly.csv"
        tasks.append(
            Task(
                f"simulate {scenario}",
                ["simulate", scenario, "--seed", str(seed), "--out", str(scenario_dir)],
                produces=[weekly],
                force=force,
                silence=silence,
            )
        )
        tasks.append(
            Task(
                f"plot {scenario} weeks",
                ["plot", "weeks", "--history", str(weekly), "--out", str(out_dir / f"{scenario}_weeks.csv")],
                consumes=[weekly],
                produces=[out_dir / f"{scenario}_weeks.csv"],
                force=force,
                silence=silence,
            )
        )

    return tasks


def main(argv: Optional[list[str]] = None) -> int:
    parser = ArgumentParser(description="Regenerate the data behind every Cardio Load figure")
    parser.add_argument("--out", type=Path, default=FIGURES_DIR, help="Output directory")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Seed for the synthetic scenarios")
    parser.add_argument("--force", action="store_true", help="Rerun tasks even if their outputs already exist")
    parser.add_argument("--jobs", type=int, default=-1, help="Concurrent tasks (default: CPU count)")
    parser.add_argument("--show-execution-plan", type=Path, default=None, help="Render the task graph to this file")
    parser.add_argument("--silence", action="store_true", help="Don't show any output, except for errors")
    args = parser.parse_args(argv)

    args.out.mkdir(parents=True, exist_ok=True)
    pipeline = Orchestrator(figure_tasks(args.out, args.seed, args.force, args.silence))

    if args.show_execution_plan:
        pipeline.visualize(args.show_execution_plan)

    return 0 if pipeline.run(args.jobs) else 1


if __name__ == "__main__":
    sys.exit(main())
