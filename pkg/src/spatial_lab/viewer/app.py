"""Browse a verification report: one row per assertion, filterable by outcome"""

from pathlib import Path

from rich.text import Text
from textual.app import App, ComposeResult
from textual.widgets import DataTable, Footer, Header

from ..descriptors import REPORT_HEADER, read_report
from .tag_bar import TagBar


class ReportApp(App):
    """Interactive view of a CSV report"""

    CSS = """
    #report-table {
        height: 1fr;
    }
    """

    BINDINGS = [
        ("q", "quit", "Quit"),
        ("d", "toggle_dark", "Dark Mode"),
        ("left", "filter_left", "Previous"),
        ("right", "filter_right", "Next"),
    ]

    def __init__(self, report_path: Path, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.report_path = Path(report_path)
        self.records = read_report(self.report_path)
        self.current_tag = "all"

    def compose(self) -> ComposeResult:
        yield Header(show_clock=True)
        yield TagBar()
        yield DataTable(id="report-table", zebra_stripes=True)
        yield Footer()

    def on_mount(self) -> None:
        failed = sum(1 for r in self.records if r["pass"] != "true")
        self.title = "Spatial Lab Report"
        self.sub_title = f"{self.report_path.name}: {len(self.records) - failed}/{len(self.records)} passed"
        table = self.query_one(DataTable)
        table.add_columns(*REPORT_HEADER)
        self._load_rows("all")
        bar = self.query_one(TagBar)
        bar.set_counts(len(self.records) - failed, failed)
        bar.focus()

    def visible_records(self, tag: str) -> list[dict[str, str]]:
        if tag == "pass":
            return [r for r in self.records if r["pass"] == "true"]
        if tag == "fail":
            return [r for r in self.records if r["pass"] != "true"]
        return list(self.records)

    def _load_rows(self, tag: str) -> None:
        self.current_tag = tag
        table = self.query_one(DataTable)
        table.clear()
        for record in self.visible_records(tag):
            style = "bold green" if record["pass"] == "true" else "bold red"
            table.add_row(
                Text(record["theorem"], style="cyan"),
                record["assertion"],
                Text(record["residual"], justify="right"),
                Text(record["tolerance"], justify="right"),
                Text(record["pass"], style=style),
            )

    def on_tag_bar_filter_selected(self, message: TagBar.FilterSelected) -> None:
        if message.tag != self.current_tag:
            self._load_rows(message.tag)

    def action_filter_left(self) -> None:
        self.query_one(TagBar).move(-1)

    def action_filter_right(self) -> None:
        self.query_one(TagBar).move(1)
