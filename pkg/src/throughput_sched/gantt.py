"""SVG Gantt rendering of a trace: one lane per machine, one bar per run interval."""

from __future__ import annotations

import xml.etree.ElementTree as ET

from .engine import Trace

LANE_HEIGHT = 20
LANE_GAP = 4
LEFT_MARGIN = 48
TOP_MARGIN = 16
PX_PER_TICK = 4.0

# kind -> (marker shape, colour)
MARKERS = {
    "push": ("triangle", "#1b7837"),
    "replace": ("diamond", "#c51b7d"),
    "completion_pop": ("circle", "#2166ac"),
    "infeasible_pop": ("cross", "#b2182b"),
}


def _colour(job: int) -> str:
    # golden-angle hue walk keeps neighbouring ids distinct
    return f"hsl({(job * 137.508) % 360:.1f},55%,65%)"


def _fmt(x: float) -> str:
    return f"{x:g}"


def _marker(parent: ET.Element, kind: str, x: float, y: float, job: int | None) -> None:
    shape, colour = MARKERS[kind]
    r = LANE_HEIGHT / 4
    attrs = {"class": f"marker {kind}", "fill": colour, "stroke": colour}
    if shape == "circle":
        el = ET.SubElement(parent, "circle", cx=_fmt(x), cy=_fmt(y), r=_fmt(r), **attrs)
    elif shape == "cross":
        d = f"M{_fmt(x - r)},{_fmt(y - r)}L{_fmt(x + r)},{_fmt(y + r)}M{_fmt(x - r)},{_fmt(y + r)}L{_fmt(x + r)},{_fmt(y - r)}"
        el = ET.SubElement(parent, "path", d=d, **{**attrs, "fill": "none", "stroke-width": "2"})
    else:
        pts = ([(x, y - r), (x + r, y + r), (x - r, y + r)] if shape == "triangle"
               else [(x, y - r), (x + r, y), (x, y + r), (x - r, y)])
        el = ET.SubElement(parent, "polygon", points=" ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts), **attrs)
    ET.SubElement(el, "title").text = f"{kind} job {job}"


def render_svg(trace: Trace, px_per_tick: float = PX_PER_TICK) -> str:
    """Return the SVG document for ``trace`` (times are internal ticks)."""
    m = trace.machines
    ends = [iv.end for iv in trace.run_intervals] + [ev.t for ev in trace.policy_events]
    starts = [iv.start for iv in trace.run_intervals] + [ev.t for ev in trace.policy_events]
    t0 = min(starts, default=0)
    t1 = max(ends, default=t0)
    width = LEFT_MARGIN + (t1 - t0) * px_per_tick + 16
    height = TOP_MARGIN + m * (LANE_HEIGHT + LANE_GAP) + 8

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                     width=_fmt(width), height=_fmt(height),
                     viewBox=f"0 0 {_fmt(width)} {_fmt(height)}")
    svg.set("data-t0", str(t0))
    svg.set("data-px-per-tick", _fmt(px_per_tick))

    def x_of(t: int) -> float:
        return LEFT_MARGIN + (t - t0) * px_per_tick

    def y_of(machine: int) -> float:
        return TOP_MARGIN + machine * (LANE_HEIGHT + LANE_GAP)

    lanes = ET.SubElement(svg, "g", {"class": "lanes"})
    for i in range(m):
        y = y_of(i)
        ET.SubElement(lanes, "line", {"class": "lane", "x1": _fmt(LEFT_MARGIN), "x2": _fmt(width - 8),
                                      "y1": _fmt(y + LANE_HEIGHT), "y2": _fmt(y + LANE_HEIGHT),
                                      "stroke": "#ccc"})
        label = ET.SubElement(lanes, "text", x="4", y=_fmt(y + LANE_HEIGHT * 0.7), **{"font-size": "11"})
        label.text = f"M{i}"

    bars = ET.SubElement(svg, "g", {"class": "intervals"})
    for iv in sorted(trace.run_intervals, key=lambda iv: (iv.machine, iv.start)):
        rect = ET.SubElement(bars, "rect", {
            "class": "run", "x": _fmt(x_of(iv.start)), "y": _fmt(y_of(iv.machine)),
            "width": _fmt((iv.end - iv.start) * px_per_tick), "height": _fmt(LANE_HEIGHT),
            "fill": _colour(iv.job), "stroke": "#333", "stroke-width": "0.5",
            "data-job": str(iv.job), "data-start": str(iv.start), "data-end": str(iv.end),
        })
        ET.SubElement(rect, "title").text = f"job {iv.job} [{iv.start}, {iv.end})"

    marks = ET.SubElement(svg, "g", {"class": "markers"})
    for ev in trace.policy_events:
        if ev.kind in MARKERS and ev.machine is not None and 0 <= ev.machine < m:
            _marker(marks, ev.kind, x_of(ev.t), y_of(ev.machine) + LANE_HEIGHT / 2, ev.job)

    ET.indent(svg)
    return ET.tostring(svg, encoding="unicode") + "\n"
