"""Outcome filter bar for the report viewer: ALL / PASS / FAIL with row counts"""

from rich.text import Text
from textual.message import Message
from textual.reactive import reactive
from textual.widget import Widget


class TagBar(Widget):
    """Row filter over report outcomes with keyboard and mouse support

    Each tab shows how many report rows it selects once counts are known.
    The FAIL tab turns red while any assertion has failed and PASS stays
    green; a tab that selects nothing is dimmed.
    """

    # Receives enter from the keyboard
    can_focus = True

    DEFAULT_CSS = """
    TagBar {
        height: 1;
        margin: 1 0;
    }
    """

    # (label, tag, colour, active background)
    TABS = [
        ("ALL", "all", "cyan", "dark_cyan"),
        ("PASS", "pass", "green", "dark_green"),
        ("FAIL", "fail", "red", "dark_red"),
    ]

    LEAD = 2
    GAP = 6

    active_index: reactive[int] = reactive(0)

    class FilterSelected(Message):
        """Posted when the user picks an outcome tag"""

        def __init__(self, tag: str) -> None:
            self.tag = tag
            super().__init__()

    def __init__(self, *args, **kwargs) -> None:
        super().__init__(*args, **kwargs)
        self.counts: dict[str, int] | None = None

    @property
    def active_tag(self) -> str:
        return self.TABS[self.active_index][1]

    def set_counts(self, passed: int, failed: int) -> None:
        """Attach row counts to the tabs and redraw"""
        self.counts = {"all": passed + failed, "pass": passed, "fail": failed}
        if self.is_attached:
            self.refresh()

    def caption(self, index: int) -> str:
        """Tab text without its frame: the label, then the row count when known"""
        label, tag, _, _ = self.TABS[index]
        return label if self.counts is None else f"{label} {self.counts[tag]}"

    def render(self) -> Text:
        """Draw the tabs; the active one is framed on its outcome colour"""
        text = Text(" " * self.LEAD)
        for idx, (_, tag, colour, background) in enumerate(self.TABS):
            if idx > 0:
                text.append(" " * self.GAP)
            caption = self.caption(idx)
            empty = self.counts is not None and self.counts[tag] == 0
            if idx == self.active_index:
                text.append(f"[ {caption} ]", style=f"bold {colour} on {background}")
            else:
                text.append(f"  {caption}  ", style=f"dim {colour}" if empty else colour)
        return text

    def tab_at(self, x: int) -> int | None:
        """Index of the tab drawn at column x, None between tabs"""
        position = self.LEAD
        for idx in range(len(self.TABS)):
            width = len(self.caption(idx)) + 4
            if position <= x < position + width:
                return idx
            position += width + self.GAP
        return None

    def on_key(self, event) -> None:
        # arrows are bound at app level
        if event.key == "enter":
            self.select_current()
            event.prevent_default()

    def on_click(self, event) -> None:
        idx = self.tab_at(event.x)
        if idx is not None:
            self.active_index = idx
            self.select_current()

    def move(self, step: int) -> None:
        """Cycle to the neighbouring tab and select it"""
        self.active_index = (self.active_index + step) % len(self.TABS)
        self.select_current()

    def select_current(self) -> None:
        self.post_message(self.FilterSelected(self.active_tag))

    def watch_active_index(self, old_value: int, new_value: int) -> None:
        self.refresh()
