import io
import math
from typing import List, Sequence, Tuple

from rich import box
from rich.console import Console
from rich.table import Table

from src.models.enums import Method
from src.models.experiment import BenchResult

METHOD_HEADERS = {Method.TRUE: "True", Method.MLE: "MLE", Method.MAP: "MAP", Method.FPD: "FPD"}


def _methods(rows: Sequence[Tuple[str, BenchResult]]) -> List[Method]:
    seen: List[Method] = []
    for _, result in rows:
        for s in result.summaries:
            if s.method not in seen:
                seen.append(s.method)
    return sorted(seen, key=list(Method).index)


def _cell(value: float, se: float, with_se: bool) -> str:
    if math.isnan(value):
        return "-"
    if with_se and not math.isnan(se):
        return f"{value:.2f} ± {se:.2f}"
    return f"{value:.2f}"


def coverage_table(
    title: str, rows: Sequence[Tuple[str, BenchResult]], with_se: bool = False
) -> Table:
    """One row per configuration; average coverage then average mean length per method."""
    methods = _methods(rows)
    table = Table(title=title, box=box.ASCII, show_lines=False)
    table.add_column("Configuration", justify="left")
    for m in methods:
        table.add_column(f"Coverage {METHOD_HEADERS[m]}", justify="right")
    for m in methods:
        table.add_column(f"Length {METHOD_HEADERS[m]}", justify="right")
    for label, result in rows:
        by_method = result.by_method()
        cells = [label]
        for m in methods:
            s = by_method.get(m)
            cells.append(_cell(s.coverage, s.coverage_se, with_se) if s else "-")
        for m in methods:
            s = by_method.get(m)
            cells.append(_cell(s.mean_length, s.length_se, with_se) if s else "-")
        table.add_row(*cells)
    return table


def render_text(table: Table, width: int = 160) -> str:
    """Plain text rendering of a rich table, without colour codes."""
    buffer = io.StringIO()
    Console(file=buffer, width=width, color_system=None, force_terminal=False).print(table)
    return buffer.getvalue()
