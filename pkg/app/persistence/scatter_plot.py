"""Static (1/h, k) scatter of bound and antibound states as SVG.

Bound states are drawn as squares, antibound states as circles. Markers of
each kind live in an SVG group with a fixed id so files can be parsed back.
"""

from __future__ import annotations

from collections.abc import Iterable
from pathlib import Path
from xml.etree import ElementTree

import matplotlib
from matplotlib.figure import Figure
from pydantic import BaseModel, Field

from app.core.logging import get_logger
from app.domain.models.phase import StateKind
from app.schemas.reports import StateRow

logger = get_logger(__name__)

SVG_NS = "{http://www.w3.org/2000/svg}"
GROUP_IDS = {StateKind.BOUND: "bound-states", StateKind.ANTIBOUND: "antibound-states"}
MARKERS = {StateKind.BOUND: "s", StateKind.ANTIBOUND: "o"}
FIGURE_DPI = 72


class ScatterStyle(BaseModel):
    title: str | None = None
    width_in: float = Field(default=6.0, gt=0)
    height_in: float = Field(default=4.5, gt=0)
    marker_size: float = Field(default=5.0, gt=0)
    bound_color: str = "tab:blue"
    antibound_color: str = "tab:red"


def build_scatter_figure(rows: Iterable[StateRow], style: ScatterStyle | None = None) -> Figure:
    """Figure with one marker per bound/antibound row; Neumann rows are not drawn."""
    style = style or ScatterStyle()
    rows = list(rows)
    fig = Figure(figsize=(style.width_in, style.height_in), dpi=FIGURE_DPI)
    fig.subplots_adjust(left=0.12, right=0.96, bottom=0.12, top=0.9)
    ax = fig.add_subplot(1, 1, 1)
    colors = {StateKind.BOUND: style.bound_color, StateKind.ANTIBOUND: style.antibound_color}
    for kind, gid in GROUP_IDS.items():
        picked = [r for r in rows if r.kind is kind]
        ax.plot(
            [r.inv_h for r in picked],
            [r.k for r in picked],
            linestyle="none",
            marker=MARKERS[kind],
            markersize=style.marker_size,
            markerfacecolor="none",
            markeredgecolor=colors[kind],
            label=f"{kind.value} states",
            gid=gid,
        )
    ax.set_xlabel("1/h")
    ax.set_ylabel("k")
    if style.title:
        ax.set_title(style.title)
    if rows:
        ax.legend(loc="best", frameon=False)
    return fig


def emit_scatter_svg(
    rows: Iterable[StateRow], path: str | Path, style: ScatterStyle | None = None
) -> Path:
    """Write the scatter as a standalone SVG file."""
    rows = list(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig = build_scatter_figure(rows, style)
    with matplotlib.rc_context({"svg.hashsalt": "resonance-lab", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", dpi=FIGURE_DPI, metadata={"Date": None})
    logger.info("scatter_written", path=str(path), n_markers=sum(r.kind in GROUP_IDS for r in rows))
    return path


def svg_marker_positions(path: str | Path, kind: StateKind) -> list[tuple[float, float]]:
    """(x, y) in SVG points of every marker of ``kind`` in a file written by emit_scatter_svg."""
    root = ElementTree.parse(path).getroot()
    for group in root.iter(f"{SVG_NS}g"):
        if group.get("id") == GROUP_IDS[kind]:
            return [
                (float(use.get("x", 0.0)), float(use.get("y", 0.0)))
                for use in group.iter(f"{SVG_NS}use")
            ]
    return []
