from typing import Optional

from rich.console import Console
from rich.markup import escape

SPAWN_COLOR = "cyan"
DONE_COLOR = "green"
SKIP_COLOR = "yellow"
ERROR_COLOR = "red"
WARN_COLOR = "magenta"

console = Console(stderr=True, highlight=False)


class Log:
    def __init__(self, name: str, silence: bool = False):
        self.name = name
        self.silence = silence

    def __call__(self, msg: str, color: Optional[str] = None):
        if self.silence and color != ERROR_COLOR:
            return

        prefix = ""
        suffix = ""
        if color:
            prefix = f"[{color}]"
            suffix = f"[/{color}]"

        console.print(f"{prefix}\\[{self.name}] {escape(msg)}{suffix}")

    def table(self, table):
        if not self.silence:
            console.print(str(table), markup=False)
