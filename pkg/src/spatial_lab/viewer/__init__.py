"""Terminal viewer for CSV verification reports"""

from .app import ReportApp
from .tag_bar import TagBar

__all__ = ["ReportApp", "TagBar"]
