"""Chart structure identification: element roles, chart model, scales, bindings.

An agent backend, when configured, classifies elements from the serialized
SimVec text; its reply is validated against the same invariants the
deterministic heuristics guarantee, so downstream modules never see an
inconsistent identification regardless of which path produced it.
"""

from __future__ import annotations

import datetime
import logging
import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .simvec import SimVecDocument, SimVecElement

logger = logging.getLogger(__name__)

ROLES = ("data-mark", "axis-line", "axis-tick", "axis-label", "legend-swatch",
         "legend-label", "title", "gridline", "extra-widget", "other")

CHART_TYPES = ("bar", "grouped-bar", "stacked-bar", "line", "area",
               "stacked-area", "overlapped-area", "scatter")

# Legend-to-mark color match tolerance, in HSL units.
COLOR_TOL = (8.0, 8.0, 8.0)

R2_THRESHOLD = 0.999
AGENT_ELEMENT_LIMIT = 3000
AGENT_GEOMETRY_SAMPLE = 200


class IdentificationFailed(ValueError):
    """Neither the agent nor the heuristics produced a valid identification."""


class ScaleInferenceFailed(ValueError):
    """Tick labels do not fit a linear or log model well enough."""


class BindingInconsistent(ValueError):
    """Recovered data values do not map back onto the mark geometry."""


@dataclass(frozen=True)
class ElementRole:
    element_id: str
    role: str
    series_key: str | None = None


@dataclass
class AxisScale:
    """A pixel<->value mapping for one chart axis.

    ``pixel_range`` pairs with ``domain`` positionally: value ``domain[0]``
    sits at pixel ``pixel_range[0]``.  Band scales map categories to evenly
    spaced centers instead of carrying a numeric domain.
    """

    orientation: str  # "x" | "y"
    kind: str  # categorical | temporal | quantitative
    scale: str  # linear | log | band
    pixel_range: tuple[float, float]
    domain: tuple[float, float] | None = None
    categories: list[str] | None = None
    ticks: list[tuple[float, str, float | None]] = field(default_factory=list)

    def pixel_at(self, value) -> float:
        p0, p1 = self.pixel_range
        if self.scale == "band":
            idx = self.categories.index(str(value))
            return p0 + (idx + 0.5) * (p1 - p0) / len(self.categories)
        d0, d1 = self.domain
        if self.scale == "log":
            t = (math.log10(value) - math.log10(d0)) / (math.log10(d1) - math.log10(d0))
        else:
            t = (value - d0) / (d1 - d0)
        return p0 + t * (p1 - p0)

    def value_at(self, pixel: float) -> float:
        if self.scale == "band":
            raise ValueError("band scale has no numeric inverse; use category_at")
        p0, p1 = self.pixel_range
        d0, d1 = self.domain
        t = (pixel - p0) / (p1 - p0)
        if self.scale == "log":
            return 10 ** (math.log10(d0) + t * (math.log10(d1) - math.log10(d0)))
        return d0 + t * (d1 - d0)

    def category_at(self, pixel: float) -> str:
        if self.scale != "band":
            raise ValueError("not a band scale")
        p0, p1 = self.pixel_range
        n = len(self.categories)
        idx = int((pixel - p0) / ((p1 - p0) / n))
        return self.categories[max(0, min(n - 1, idx))]

    @property
    def band_width(self) -> float:
        p0, p1 = self.pixel_range
        return abs(p1 - p0) / len(self.categories)

    def to_dict(self) -> dict:
        return {
            "orientation": self.orientation, "kind": self.kind, "scale": self.scale,
            "pixel_range": list(self.pixel_range),
            "domain": list(self.domain) if self.domain else None,
            "categories": self.categories,
            "ticks": [[p, lab, v] for p, lab, v in self.ticks],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AxisScale":
        return cls(
            orientation=d["orientation"], kind=d["kind"], scale=d["scale"],
            pixel_range=tuple(d["pixel_range"]),
            domain=tuple(d["domain"]) if d.get("domain") else None,
            categories=d.get("categories"),
            ticks=[(t[0], t[1], t[2]) for t in d.get("ticks", [])],
        )


@dataclass
class ChartModel:
    chart_type: str
    x_axis: AxisScale
    y_axis: AxisScale
    arrangement: str  # none | stacked | grouped | overlapped
    stacking_direction: str  # vertical | horizontal | none

    def axis(self, axis_id: str) -> AxisScale:
        return self.x_axis if axis_id == "x" else self.y_axis

    def to_dict(self) -> dict:
        return {"chart_type": self.chart_type, "arrangement": self.arrangement,
                "stacking_direction": self.stacking_direction,
                "x_axis": self.x_axis.to_dict(), "y_axis": self.y_axis.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "ChartModel":
        return cls(chart_type=d["chart_type"], arrangement=d["arrangement"],
                   stacking_direction=d["stacking_direction"],
                   x_axis=AxisScale.from_dict(d["x_axis"]),
                   y_axis=AxisScale.from_dict(d["y_axis"]))


@dataclass
class Identification:
    roles: dict[str, ElementRole]
    chart: ChartModel
    backend: str  # "heuristic" | "agent"
    mark_kinds: dict[str, str] = field(default_factory=dict)  # mark id -> bar|area|line|point

    def data_marks(self) -> list[str]:
        return [eid for eid, r in self.roles.items() if r.role == "data-mark"]

    def role_of(self, element_id: str) -> str:
        return self.roles[element_id].role


@dataclass(frozen=True)
class DataBinding:
    """Data recovered for one mark: per-vertex (x value, own value) tuples.

    For stacked marks ``cum_base`` records the cumulative value underneath
    each tuple, so ``value + cum_base`` maps to the mark's upper pixel.
    """

    mark_id: str
    series_key: str
    tuples: tuple[tuple[object, float], ...]
    cum_base: tuple[float, ...]
    category: str | None = None

    @property
    def magnitude(self) -> float:
        return max(v for _, v in self.tuples)

    def to_dict(self) -> dict:
        return {"mark_id": self.mark_id, "series_key": self.series_key,
                "tuples": [[x, v] for x, v in self.tuples],
                "cum_base": list(self.cum_base), "category": self.category}

    @classmethod
    def from_dict(cls, d: dict) -> "DataBinding":
        return cls(mark_id=d["mark_id"], series_key=d["series_key"],
                   tuples=tuple((x, v) for x, v in d["tuples"]),
                   cum_base=tuple(d["cum_base"]), category=d.get("category"))


# ---------------------------------------------------------------------------
# Axis scale inference
# ---------------------------------------------------------------------------

_ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_YEAR = re.compile(r"^\d{4}$")


def parse_tick_value(label: str) -> tuple[float | None, bool]:
    """Return (numeric value, is_temporal) for a tick label, if parseable."""
    label = label.strip()
    if _ISO_DATE.match(label):
        return float(datetime.date.fromisoformat(label).toordinal()), True
    if _YEAR.match(label):
        return float(label), True
    try:
        return float(label.replace(",", "")), False
    except ValueError:
        return None, False


def _fit_r2(pixels: np.ndarray, values: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit values = a*pixels + b; returns (a, b, R^2)."""
    if len(pixels) == 2:
        if pixels[1] == pixels[0]:
            raise ScaleInferenceFailed("coincident tick pixels")
        a = (values[1] - values[0]) / (pixels[1] - pixels[0])
        return a, values[0] - a * pixels[0], 1.0
    a, b = np.polyfit(pixels, values, 1)
    pred = a * pixels + b
    ss_res = float(np.sum((values - pred) ** 2))
    ss_tot = float(np.sum((values - values.mean()) ** 2))
    if ss_tot == 0:
        raise ScaleInferenceFailed("degenerate tick values")
    return float(a), float(b), 1.0 - ss_res / ss_tot


def infer_axis_scale(ticks: list[tuple[float, str, float | None]], orientation: str,
                     pixel_range: tuple[float, float] | None = None) -> AxisScale:
    """Infer a scale from a tick table.

    Quantitative labels are fitted value-vs-pixel; linear wins when its
    R^2 >= 0.999, otherwise a log model is tried at the same bar.  Labels
    that don't parse as numbers produce a band scale over their centers.
    """
    if not ticks:
        raise ScaleInferenceFailed("no ticks")
    ticks = sorted(ticks, key=lambda t: t[0])
    parsed = [parse_tick_value(t[1]) for t in ticks]
    numeric = [(t[0], p[0]) for t, p in zip(ticks, parsed) if p[0] is not None]
    temporal = any(p[1] for p in parsed)

    if len(numeric) >= 2 and len(numeric) == len(ticks):
        pixels = np.array([p for p, _ in numeric], dtype=float)
        values = np.array([v for _, v in numeric], dtype=float)
        p0, p1 = pixel_range if pixel_range else (pixels[0], pixels[-1])
        a, b, r2_lin = _fit_r2(pixels, values)
        if r2_lin >= R2_THRESHOLD:
            domain = (a * p0 + b, a * p1 + b)
            kind = "temporal" if temporal else "quantitative"
            table = [(p, lab, v) for (p, lab, _), (v, _t) in zip(ticks, parsed)]
            return AxisScale(orientation, kind, "linear", (p0, p1), domain=domain, ticks=table)
        if np.all(values > 0):
            la, lb, r2_log = _fit_r2(pixels, np.log10(values))
            if r2_log >= R2_THRESHOLD:
                domain = (10 ** (la * p0 + lb), 10 ** (la * p1 + lb))
                table = [(p, lab, v) for (p, lab, _), (v, _t) in zip(ticks, parsed)]
                return AxisScale(orientation, "quantitative", "log", (p0, p1),
                                 domain=domain, ticks=table)
        raise ScaleInferenceFailed(
            f"neither linear nor log model reaches R^2 >= {R2_THRESHOLD} for {orientation}-axis ticks")

    # Categorical: a band per label, centers at the tick pixels.
    labels = [t[1] for t in ticks]
    if len(set(labels)) != len(labels):
        raise ScaleInferenceFailed("duplicate category labels")
    centers = [t[0] for t in ticks]
    if pixel_range is None:
        half = (centers[1] - centers[0]) / 2 if len(centers) > 1 else 10.0
        pixel_range = (centers[0] - half, centers[-1] + half)
    scale = AxisScale(orientation, "categorical", "band", pixel_range,
                      categories=labels, ticks=[(p, lab, None) for p, lab, _ in ticks])
    expected = [scale.pixel_at(c) for c in labels]
    for got, want in zip(centers, expected):
        if abs(got - want) > 2.0:
            raise ScaleInferenceFailed("category centers are not evenly spaced")
    return scale


# ---------------------------------------------------------------------------
# Heuristic identification
# ---------------------------------------------------------------------------

def _bbox(el: SimVecElement) -> tuple[float, float, float, float]:
    return el.bbox()


def _is_long_thin(el: SimVecElement, vb) -> str | None:
    """Classify a polyline as a horizontal/vertical ruled line candidate."""
    if el.kind != "polyline":
        return None
    x0, y0, x1, y1 = _bbox(el)
    w, h = x1 - x0, y1 - y0
    if h <= 2.5 and w >= 0.6 * vb[2]:
        return "horizontal"
    if w <= 2.5 and h >= 0.6 * vb[3]:
        return "vertical"
    return None


def _seg_point_dist(px: float, py: float, a, b) -> float:
    vx, vy = b[0] - a[0], b[1] - a[1]
    wx, wy = px - a[0], py - a[1]
    seg = vx * vx + vy * vy
    t = 0.0 if seg == 0 else max(0.0, min(1.0, (wx * vx + wy * vy) / seg))
    return math.hypot(px - (a[0] + t * vx), py - (a[1] + t * vy))


def hue_distance(h1: float, h2: float) -> float:
    d = abs(h1 - h2) % 360.0
    return min(d, 360.0 - d)


def colors_match(c1, c2, tol=COLOR_TOL) -> bool:
    if c1 is None or c2 is None:
        return False
    return (hue_distance(c1[0], c2[0]) <= tol[0]
            and abs(c1[1] - c2[1]) <= tol[1] and abs(c1[2] - c2[2]) <= tol[2])


def _mark_paint(el: SimVecElement):
    if el.kind == "polyline":
        return el.stroke.color if el.stroke else None
    return el.fill


def heuristic_identify(doc: SimVecDocument) -> Identification:
    """Deterministic rule-based role and chart-model inference."""
    if not doc.elements:
        raise IdentificationFailed("empty document")
    vb = doc.viewbox
    roles: dict[str, ElementRole] = {}
    assigned: set[str] = set()

    def assign(el: SimVecElement, role: str, series: str | None = None) -> None:
        roles[el.id] = ElementRole(el.id, role, series)
        assigned.add(el.id)

    shapes = [el for el in doc.elements if el.kind != "text"]
    texts = [el for el in doc.elements if el.kind == "text"]

    # Axis lines: long thin rules near a viewbox edge; the bottom-most
    # horizontal and left-most vertical candidates win, the rest are grid.
    horiz, vert = [], []
    for el in shapes:
        direction = _is_long_thin(el, vb)
        if direction == "horizontal":
            horiz.append(el)
        elif direction == "vertical":
            vert.append(el)
    x_axis_el = None
    y_axis_el = None
    bottom_band = vb[1] + 0.65 * vb[3]
    left_band = vb[0] + 0.35 * vb[2]
    bottom_candidates = [el for el in horiz if _bbox(el)[1] >= bottom_band]
    if bottom_candidates:
        x_axis_el = max(bottom_candidates, key=lambda e: _bbox(e)[1])
        assign(x_axis_el, "axis-line")
    left_candidates = [el for el in vert if _bbox(el)[0] <= left_band]
    if left_candidates:
        y_axis_el = min(left_candidates, key=lambda e: _bbox(e)[0])
        assign(y_axis_el, "axis-line")
    for el in horiz + vert:
        if el.id not in assigned:
            assign(el, "gridline")
    if x_axis_el is None or y_axis_el is None:
        raise IdentificationFailed("no axes recoverable")

    ax_bb = _bbox(x_axis_el)
    ay_bb = _bbox(y_axis_el)
    plot = (ay_bb[0], ay_bb[1], ax_bb[2], ax_bb[1])  # x0, y0, x1, y1

    # Ticks: short strokes hugging an axis line, perpendicular to it.
    ticks_x: list[SimVecElement] = []
    ticks_y: list[SimVecElement] = []
    for el in shapes:
        if el.id in assigned or el.kind != "polyline" or len(el.points) != 2:
            continue
        (p1x, p1y), (p2x, p2y) = el.points
        length = math.hypot(p2x - p1x, p2y - p1y)
        if length > 12.0:
            continue
        mid = ((p1x + p2x) / 2, (p1y + p2y) / 2)
        if abs(p2x - p1x) <= 1.0 and _seg_point_dist(*mid, x_axis_el.points[0], x_axis_el.points[-1]) <= 6.0:
            ticks_x.append(el)
            assign(el, "axis-tick")
        elif abs(p2y - p1y) <= 1.0 and _seg_point_dist(*mid, y_axis_el.points[0], y_axis_el.points[-1]) <= 6.0:
            ticks_y.append(el)
            assign(el, "axis-tick")

    # Legend swatches: small squares outside the plot with adjacent text.
    legend_pairs: list[tuple[SimVecElement, SimVecElement]] = []
    for el in shapes:
        if el.id in assigned or el.kind != "polygon" or not (4 <= len(el.points) <= 5):
            continue
        x0, y0, x1, y1 = _bbox(el)
        w, h = x1 - x0, y1 - y0
        if w <= 0 or h <= 0 or w * h > 0.03 * vb[2] * vb[3]:
            continue
        if not (0.4 <= w / h <= 2.5):
            continue
        if x0 < plot[2] and x1 > plot[0] and y0 < plot[3] and y1 > plot[1]:
            continue  # inside the plot: not legend furniture
        cy = (y0 + y1) / 2
        best = None
        for t in texts:
            if t.id in assigned:
                continue
            tx, ty = t.points[0]
            if 0.0 <= tx - x1 <= 30.0 and abs(ty - cy) <= 8.0:
                d = tx - x1
                if best is None or d < best[0]:
                    best = (d, t)
        if best is not None:
            legend_pairs.append((el, best[1]))
            assign(el, "legend-swatch", best[1].text)
            assign(best[1], "legend-label", best[1].text)

    # Axis labels: text near a tick; nearest axis-parallel distance wins.
    tick_entries = [(t, "x") for t in ticks_x] + [(t, "y") for t in ticks_y]
    label_for_tick: dict[str, SimVecElement] = {}
    for t in texts:
        if t.id in assigned:
            continue
        tx, ty = t.points[0]
        best = None
        for tick, axis in tick_entries:
            d = _seg_point_dist(tx, ty, tick.points[0], tick.points[-1])
            if d > 15.0:
                continue
            parallel = abs(tx - (tick.points[0][0] + tick.points[-1][0]) / 2) if axis == "x" \
                else abs(ty - (tick.points[0][1] + tick.points[-1][1]) / 2)
            key = (parallel, doc.elements.index(tick))
            if best is None or key < best[0]:
                best = (key, tick, axis)
        if best is not None:
            assign(t, "axis-label")
            label_for_tick[best[1].id] = t

    # Titles: rotated text, or the largest face near the top of the chart.
    rest_text = [t for t in texts if t.id not in assigned]
    for t in rest_text:
        if abs(t.rotation) > 45.0:
            assign(t, "title")
    rest_text = [t for t in texts if t.id not in assigned]
    top_text = [t for t in rest_text if t.points[0][1] <= vb[1] + 0.2 * vb[3]]
    if top_text:
        assign(max(top_text, key=lambda t: (t.font_size or 0.0)), "title")
    for t in texts:
        if t.id not in assigned:
            assign(t, "other")

    # Everything left inside the plot is a data mark.
    mark_kinds: dict[str, str] = {}
    for el in shapes:
        if el.id in assigned:
            continue
        x0, y0, x1, y1 = _bbox(el)
        inside = x0 < plot[2] + 1 and x1 > plot[0] - 1 and y0 < plot[3] + 1 and y1 > plot[1] - 1
        if not inside:
            assign(el, "other")
            continue
        if el.kind == "circle-point":
            mark_kinds[el.id] = "point"
        elif el.kind == "polygon":
            mark_kinds[el.id] = "bar" if _is_axis_aligned_rect(el) else "area"
        elif el.kind == "polyline" and len(el.points) >= 3:
            mark_kinds[el.id] = "line"
        else:
            assign(el, "other")
            continue
        assign(el, "data-mark")

    if not mark_kinds:
        raise IdentificationFailed("no data marks found")

    # Series keys from legend color matching.
    legend_colors = [( _mark_paint(sw), lab.text) for sw, lab in legend_pairs]
    series_count = 0
    color_series: list[tuple[tuple, str]] = []
    for eid in list(mark_kinds):
        el = doc.element(eid)
        paint = _mark_paint(el)
        key = None
        for c, name in legend_colors:
            if colors_match(paint, c):
                key = name
                break
        if key is None:
            for c, name in color_series:
                if colors_match(paint, c):
                    key = name
                    break
        if key is None:
            series_count += 1
            key = f"series-{series_count}"
            color_series.append((paint, key))
        roles[eid] = ElementRole(eid, "data-mark", key)

    chart = _infer_chart_model(doc, roles, mark_kinds, ticks_x, ticks_y,
                               label_for_tick, ax_bb, ay_bb)
    ident = Identification(roles=roles, chart=chart, backend="heuristic", mark_kinds=mark_kinds)
    validate_identification(doc, ident)
    return ident


def _is_axis_aligned_rect(el: SimVecElement) -> bool:
    if len(el.points) != 4:
        return False
    xs = sorted({round(p[0], 1) for p in el.points})
    ys = sorted({round(p[1], 1) for p in el.points})
    return len(xs) == 2 and len(ys) == 2


def _tick_table(ticks, label_for_tick, axis: str):
    table = []
    for t in ticks:
        label_el = label_for_tick.get(t.id)
        if label_el is None:
            continue
        pivot = (t.points[0][0] + t.points[-1][0]) / 2 if axis == "x" \
            else (t.points[0][1] + t.points[-1][1]) / 2
        table.append((pivot, label_el.text, None))
    return sorted(table, key=lambda e: e[0])


def _infer_chart_model(doc, roles, mark_kinds, ticks_x, ticks_y, label_for_tick,
                       ax_bb, ay_bb) -> ChartModel:
    x_table = _tick_table(ticks_x, label_for_tick, "x")
    y_table = _tick_table(ticks_y, label_for_tick, "y")
    if not x_table or not y_table:
        raise IdentificationFailed("axis ticks have no readable labels")
    # Pixel ranges follow the axis lines; the y range runs bottom-to-top so
    # that domain[0] sits at the baseline.
    x_axis = infer_axis_scale(x_table, "x", pixel_range=(ay_bb[0], ax_bb[2]))
    y_axis = infer_axis_scale(y_table, "y", pixel_range=(ax_bb[1], ay_bb[1]))

    kinds = set(mark_kinds.values())
    baseline = ax_bb[1]
    marks = [doc.element(eid) for eid in mark_kinds]

    if kinds == {"point"}:
        return ChartModel("scatter", x_axis, y_axis, "none", "none")
    if kinds == {"line"}:
        return ChartModel("line", x_axis, y_axis, "none", "none")

    if "bar" in kinds:
        groups: dict[int, list[SimVecElement]] = {}
        for el in marks:
            x0, _, x1, _ = el.bbox()
            cx = (x0 + x1) / 2
            idx = min(range(len(x_axis.categories or [""])),
                      key=lambda i: abs(cx - x_axis.pixel_at(x_axis.categories[i]))) \
                if x_axis.scale == "band" else 0
            groups.setdefault(idx, []).append(el)
        multi = any(len(g) > 1 for g in groups.values())
        if not multi:
            return ChartModel("bar", x_axis, y_axis, "none", "none")
        if all(_tiles_vertically(sorted(g, key=lambda e: -e.bbox()[3])) for g in groups.values()):
            return ChartModel("stacked-bar", x_axis, y_axis, "stacked", "vertical")
        if all(abs(el.bbox()[3] - baseline) <= 1.5 for el in marks):
            return ChartModel("grouped-bar", x_axis, y_axis, "grouped", "horizontal")
        raise IdentificationFailed("bars neither stack nor share the baseline")

    # Areas: stacked when each layer's lower boundary rides the one below.
    layers = sorted(marks, key=lambda e: -e.bbox()[3])
    if len(layers) == 1:
        return ChartModel("area", x_axis, y_axis, "none", "none")
    if _areas_tile(layers):
        return ChartModel("stacked-area", x_axis, y_axis, "stacked", "vertical")
    if all(abs(el.bbox()[3] - baseline) <= 1.5 for el in layers):
        return ChartModel("overlapped-area", x_axis, y_axis, "overlapped", "none")
    raise IdentificationFailed("areas neither stack nor share the baseline")


def _tiles_vertically(sorted_marks) -> bool:
    for lower, upper in zip(sorted_marks, sorted_marks[1:]):
        if abs(upper.bbox()[3] - lower.bbox()[1]) > 1.5:
            return False
    return True


def split_area_boundary(el: SimVecElement) -> tuple[list, list]:
    """Split a closed area outline into upper and lower boundaries.

    Vertices are expected to sweep left-to-right along the top and then
    right-to-left along the bottom, the common output of area generators.
    """
    pts = list(el.points)
    split = 0
    for i in range(1, len(pts)):
        if pts[i][0] > pts[i - 1][0] + 1e-6:
            split = i
        else:
            break
    upper = pts[: split + 1]
    lower = list(reversed(pts[split + 1:]))
    return upper, lower


def _areas_tile(layers) -> bool:
    for below, above in zip(layers, layers[1:]):
        upper_below, _ = split_area_boundary(below)
        _, lower_above = split_area_boundary(above)
        if len(upper_below) != len(lower_above):
            return False
        for (x1, y1), (x2, y2) in zip(upper_below, lower_above):
            if abs(x1 - x2) > 1.0 or abs(y1 - y2) > 1.5:
                return False
    return True


def validate_identification(doc: SimVecDocument, ident: Identification) -> None:
    """Check the structural invariants every identification must satisfy."""
    for el in doc.elements:
        if el.id not in ident.roles:
            raise IdentificationFailed(f"element {el.id} has no role")
        if ident.roles[el.id].role not in ROLES:
            raise IdentificationFailed(f"unknown role {ident.roles[el.id].role!r}")
    chart = ident.chart
    if chart.chart_type not in CHART_TYPES:
        raise IdentificationFailed(f"unknown chart type {chart.chart_type!r}")
    if chart.arrangement == "stacked" and chart.chart_type not in ("stacked-bar", "stacked-area"):
        raise IdentificationFailed("stacked arrangement requires a stacked chart type")
    quantitative = sum(1 for ax in (chart.x_axis, chart.y_axis) if ax.kind == "quantitative")
    if chart.chart_type == "scatter" and quantitative != 2:
        raise IdentificationFailed("scatter requires two quantitative axes")
    if chart.chart_type.endswith("bar") and quantitative != 1:
        raise IdentificationFailed("bar charts require exactly one quantitative axis")
    if not ident.data_marks():
        raise IdentificationFailed("no data marks")
    # Legend color consistency: matching colors must share the series key.
    swatches = [(doc.element(eid), r.series_key) for eid, r in ident.roles.items()
                if r.role == "legend-swatch"]
    for eid in ident.data_marks():
        paint = _mark_paint(doc.element(eid))
        for sw, key in swatches:
            if colors_match(paint, sw.fill) and ident.roles[eid].series_key != key:
                raise IdentificationFailed(
                    f"mark {eid} color matches legend {key!r} but carries "
                    f"{ident.roles[eid].series_key!r}")


# ---------------------------------------------------------------------------
# Binding recovery
# ---------------------------------------------------------------------------

def recover_bindings(doc: SimVecDocument, ident: Identification) -> list[DataBinding]:
    """Invert the axis scales to recover the data behind every mark."""
    chart = ident.chart
    x_axis, y_axis = chart.x_axis, chart.y_axis
    bindings: list[DataBinding] = []
    for eid in ident.data_marks():
        el = doc.element(eid)
        kind = ident.mark_kinds.get(eid, "bar")
        series = ident.roles[eid].series_key or "series-1"
        if kind == "bar":
            x0, y0, x1, y1 = el.bbox()
            cx = (x0 + x1) / 2
            category = x_axis.category_at(cx) if x_axis.scale == "band" else None
            x_val = category if category is not None else x_axis.value_at(cx)
            top_v = y_axis.value_at(y0)
            bot_v = y_axis.value_at(y1)
            bindings.append(DataBinding(eid, series, ((x_val, top_v - bot_v),),
                                        (bot_v,), category=category))
        elif kind == "point":
            cx, cy = el.points[0]
            bindings.append(DataBinding(eid, series,
                                        ((x_axis.value_at(cx), y_axis.value_at(cy)),), (0.0,)))
        elif kind == "line":
            tuples = tuple((x_axis.value_at(px), y_axis.value_at(py)) for px, py in el.points)
            bindings.append(DataBinding(eid, series, tuples, (0.0,) * len(tuples)))
        else:  # area
            upper, lower = split_area_boundary(el)
            if len(upper) != len(lower):
                raise BindingInconsistent(f"area {eid} boundaries do not pair up")
            tuples = []
            bases = []
            for (ux, uy), (lx, ly) in zip(upper, lower):
                if abs(ux - lx) > 1.0:
                    raise BindingInconsistent(f"area {eid} columns misaligned at x={ux:.1f}")
                base_v = y_axis.value_at(ly)
                tuples.append((x_axis.value_at(ux), y_axis.value_at(uy) - base_v))
                bases.append(base_v)
            bindings.append(DataBinding(eid, series, tuple(tuples), tuple(bases)))
    _validate_bindings(doc, ident, bindings)
    return bindings


def _validate_bindings(doc, ident, bindings, tol: float = 1.0) -> None:
    chart = ident.chart
    for b in bindings:
        el = doc.element(b.mark_id)
        kind = ident.mark_kinds.get(b.mark_id, "bar")
        if kind == "bar":
            x0, y0, _, y1 = el.bbox()
            top = chart.y_axis.pixel_at(b.cum_base[0] + b.tuples[0][1])
            bottom = chart.y_axis.pixel_at(b.cum_base[0])
            if abs(top - y0) > tol or abs(bottom - y1) > tol:
                raise BindingInconsistent(f"bar {b.mark_id} fails round-trip")
        elif kind == "point":
            px = chart.x_axis.pixel_at(b.tuples[0][0])
            py = chart.y_axis.pixel_at(b.tuples[0][1])
            if math.hypot(px - el.points[0][0], py - el.points[0][1]) > tol:
                raise BindingInconsistent(f"point {b.mark_id} fails round-trip")
        elif kind == "line":
            for (xv, yv), (px, py) in zip(b.tuples, el.points):
                if abs(chart.x_axis.pixel_at(xv) - px) > tol or abs(chart.y_axis.pixel_at(yv) - py) > tol:
                    raise BindingInconsistent(f"line {b.mark_id} fails round-trip")
        else:
            upper, _ = split_area_boundary(el)
            for (xv, v), base, (px, py) in zip(b.tuples, b.cum_base, upper):
                if abs(chart.x_axis.pixel_at(xv) - px) > tol \
                        or abs(chart.y_axis.pixel_at(base + v) - py) > tol:
                    raise BindingInconsistent(f"area {b.mark_id} fails round-trip")


# ---------------------------------------------------------------------------
# Agent-backed identification
# ---------------------------------------------------------------------------

def build_agent_payload(doc: SimVecDocument, limit: int = AGENT_ELEMENT_LIMIT,
                        sample: int = AGENT_GEOMETRY_SAMPLE) -> str:
    """SimVec text for the agent; big documents send text plus a geometry sample."""
    from .simvec import serialize_element

    if len(doc.elements) <= limit:
        lines = [f"{el.id} | {serialize_element(el)}" for el in doc.elements]
        return "\n".join(lines)
    texts = [el for el in doc.elements if el.kind == "text"]
    geometry = [el for el in doc.elements if el.kind != "text"]
    step = max(1, len(geometry) // sample)
    sampled = geometry[::step][:sample]
    lines = [f"{el.id} | {serialize_element(el)}" for el in texts + sampled]
    lines.append(f"# sampled {len(sampled)} of {len(geometry)} geometry elements")
    return "\n".join(lines)


def identify(doc: SimVecDocument, raster: bytes | None = None, agent=None) -> Identification:
    """Classify roles and chart structure, preferring a configured agent.

    Agent failures are silent (logged) and fall back to the heuristics;
    only a failure of both paths raises IdentificationFailed.
    """
    if not doc.elements:
        raise IdentificationFailed("empty document")
    if agent is not None:
        try:
            ident = _identify_via_agent(doc, raster, agent)
            validate_identification(doc, ident)
            return ident
        except Exception as exc:  # noqa: BLE001 - any agent failure falls back
            logger.info("agent identification unavailable (%s); using heuristics", exc)
    return heuristic_identify(doc)


def _identify_via_agent(doc: SimVecDocument, raster, agent) -> Identification:
    from .agent import identification_request, parse_identification_reply

    request = identification_request(build_agent_payload(doc), raster)
    reply = agent.complete(request)
    roles_raw, chart_raw = parse_identification_reply(reply)
    heur = heuristic_identify(doc)  # supplies axis scales from tick geometry
    roles = {}
    mark_kinds = dict(heur.mark_kinds)
    for el in doc.elements:
        entry = roles_raw.get(el.id)
        if entry is None:
            raise IdentificationFailed(f"agent reply misses element {el.id}")
        roles[el.id] = ElementRole(el.id, entry["role"], entry.get("series"))
    chart = replace(heur.chart, chart_type=chart_raw["chart_type"],
                    arrangement=chart_raw["arrangement"],
                    stacking_direction=chart_raw["stacking_direction"])
    return Identification(roles=roles, chart=chart, backend="agent", mark_kinds=mark_kinds)
