"""Synthetic SVG chart corpus generator.

Builds the test fixtures entirely from declared data so every fixture ships
with generation-time ground truth (`*.truth.json`): element roles, the
chart model, per-mark vertex tables and data bindings.  The generator is
deliberately independent of the package under test — it only uses the
standard library and writes plain strings.

Fixtures imitate real charting-toolkit output (nested transform groups,
per-element inline styles, aria labels, embedded titles and metadata) at
three verbosity levels, so that parsing and compression are measured
against realistic markup rather than hand-minified SVG.
"""

from __future__ import annotations

import json
import math
import random
from pathlib import Path

VB = (0, 0, 460, 320)
PLOT = (60.0, 40.0, 420.0, 280.0)  # x0, y0, x1, y1
BASELINE = PLOT[3]

PALETTE = {
    0: "hsl(207,54%,49%)",
    1: "hsl(28,87%,55%)",
    2: "hsl(122,39%,45%)",
    3: "hsl(340,65%,52%)",
}

_METADATA = """  <metadata>
    <rdf:RDF xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#"
             xmlns:dc="http://purl.org/dc/elements/1.1/"
             xmlns:cc="http://creativecommons.org/ns#">
      <cc:Work rdf:about="">
        <dc:format>image/svg+xml</dc:format>
        <dc:type rdf:resource="http://purl.org/dc/dcmitype/StillImage"/>
        <dc:creator><cc:Agent><dc:title>chart exporter 4.17.0</dc:title></cc:Agent></dc:creator>
        <dc:description>Statistical chart exported as resolution-independent vector graphics.</dc:description>
      </cc:Work>
    </rdf:RDF>
  </metadata>"""


def px_x(v: float, d0: float, d1: float) -> float:
    return PLOT[0] + (v - d0) * (PLOT[2] - PLOT[0]) / (d1 - d0)


def px_y(v: float, d0: float, d1: float) -> float:
    return PLOT[3] + (v - d0) * (PLOT[1] - PLOT[3]) / (d1 - d0)


def band_geometry(n: int) -> tuple[float, list[float]]:
    width = (PLOT[2] - PLOT[0]) / n
    centers = [PLOT[0] + (i + 0.5) * width for i in range(n)]
    return width, centers


class SvgBuilder:
    """Accumulates chart markup plus the parallel ground-truth record.

    ``verbosity``: 1 = tidy generated markup, 2 = toolkit-style output with
    inline styles and aria attributes, 3 = maximal export verbosity
    (metadata, per-mark <title>, data-* attributes).
    """

    def __init__(self, verbosity: int = 1):
        self.verbosity = verbosity
        self.prec = {1: 2, 2: 4, 3: 6}[verbosity]
        self.lines: list[str] = []
        self.indent = 1
        self.truth_roles: dict[str, dict] = {}
        self.truth_marks: dict[str, dict] = {}

    def fmt(self, v: float) -> str:
        return f"{v:.{self.prec}f}"

    def add(self, line: str) -> None:
        self.lines.append("  " * self.indent + line)

    def comment(self, text: str) -> None:
        if self.verbosity >= 2:
            self.add(f"<!-- {text} -->")

    def role(self, elem_id: str, role: str, series: str | None = None, axis: str | None = None) -> None:
        entry: dict = {"role": role}
        if series:
            entry["series"] = series
        if axis:
            entry["axis"] = axis
        self.truth_roles[elem_id] = entry

    def furniture(self, x_axis: dict, y_axis: dict, title: str, y_title: str) -> None:
        f = self.fmt
        self.comment("reference layer: gridlines, axes, ticks, labels")
        self.add('<g class="grid-layer" role="presentation">')
        self.indent += 1
        for py, label, _v in y_axis["ticks"]:
            if abs(py - BASELINE) < 0.5:
                continue
            gid = f"grid-y-{label}"
            self.add(f'<line id="{gid}" class="grid gridline-horizontal" x1="{f(PLOT[0])}" '
                     f'y1="{f(py)}" x2="{f(PLOT[2])}" y2="{f(py)}"/>')
            self.role(gid, "gridline")
        self.indent -= 1
        self.add("</g>")
        self.add(f'<line id="axis-x" class="axis axis-line domain" x1="{f(PLOT[0])}" y1="{f(PLOT[3])}" '
                 f'x2="{f(PLOT[2])}" y2="{f(PLOT[3])}"/>')
        self.role("axis-x", "axis-line", axis="x")
        self.add(f'<line id="axis-y" class="axis axis-line domain" x1="{f(PLOT[0])}" y1="{f(PLOT[1])}" '
                 f'x2="{f(PLOT[0])}" y2="{f(PLOT[3])}"/>')
        self.role("axis-y", "axis-line", axis="y")
        self.add('<g class="axis-x-ticks" aria-hidden="true">')
        self.indent += 1
        for i, (px, label, _v) in enumerate(x_axis["ticks"]):
            tid, lid = f"tick-x-{i}", f"label-x-{i}"
            self.add(f'<g class="tick" transform="translate({f(px)},{f(PLOT[3])})">')
            self.indent += 1
            self.add(f'<line id="{tid}" class="tick tick-mark" x1="0" y1="0" x2="0" y2="6"/>')
            self.add(f'<text id="{lid}" class="tick-label tick-label-x" x="0" y="18" '
                     f'text-anchor="middle">{label}</text>')
            self.indent -= 1
            self.add("</g>")
            self.role(tid, "axis-tick", axis="x")
            self.role(lid, "axis-label", axis="x")
        self.indent -= 1
        self.add("</g>")
        self.add('<g class="axis-y-ticks" aria-hidden="true">')
        self.indent += 1
        for i, (py, label, _v) in enumerate(y_axis["ticks"]):
            tid, lid = f"tick-y-{i}", f"label-y-{i}"
            self.add(f'<g class="tick" transform="translate({f(PLOT[0])},{f(py)})">')
            self.indent += 1
            self.add(f'<line id="{tid}" class="tick tick-mark" x1="-6" y1="0" x2="0" y2="0"/>')
            self.add(f'<text id="{lid}" class="tick-label tick-label-y" x="-10" y="4" '
                     f'text-anchor="end">{label}</text>')
            self.indent -= 1
            self.add("</g>")
            self.role(tid, "axis-tick", axis="y")
            self.role(lid, "axis-label", axis="y")
        self.indent -= 1
        self.add("</g>")
        self.add(f'<text id="chart-title" class="title" x="{f((PLOT[0] + PLOT[2]) / 2)}" y="22" '
                 f'text-anchor="middle" font-size="16">{title}</text>')
        self.role("chart-title", "title")
        self.add(f'<text id="axis-title-y" class="axis-title" transform="rotate(-90 16 160)" '
                 f'x="16" y="160" text-anchor="middle">{y_title}</text>')
        self.role("axis-title-y", "title")

    def legend(self, series: list[str]) -> None:
        if len(series) < 2:
            return
        self.comment("legend")
        self.add('<g class="legend" role="list" aria-label="series legend">')
        self.indent += 1
        x = PLOT[2] - 100.0 * len(series)
        for i, key in enumerate(series):
            sid, lid = f"legend-swatch-{i}", f"legend-label-{i}"
            sx = x + 100.0 * i
            self.add(f'<rect id="{sid}" class="legend-swatch" x="{self.fmt(sx)}" y="10" '
                     f'width="12" height="12" fill="{PALETTE[i]}"/>')
            self.add(f'<text id="{lid}" class="legend-label" x="{self.fmt(sx + 16)}" y="20">{key}</text>')
            self.role(sid, "legend-swatch", series=key)
            self.role(lid, "legend-label", series=key)
        self.indent -= 1
        self.add("</g>")

    def mark_attrs(self, series: str, detail: str, data: dict | None = None) -> str:
        if self.verbosity < 2:
            return ""
        safe = series.replace(" ", "-")
        out = (f' role="graphics-symbol" aria-roledescription="mark" data-series="{safe}"'
               f' aria-label="{detail}"')
        if self.verbosity >= 3 and data:
            out += "".join(f' data-{k}="{v}"' for k, v in data.items())
        return out

    def _mark_open(self, tag: str, attrs: str, detail: str) -> None:
        if self.verbosity >= 3:
            self.add(f"<{tag} {attrs}>")
            self.indent += 1
            self.add(f"<title>{detail}</title>")
            self.indent -= 1
            self.add(f"</{tag}>")
        else:
            self.add(f"<{tag} {attrs}/>")

    def rect_mark(self, mark_id: str, series: str, x: float, y: float, w: float, h: float,
                  color: str, detail: str, x_value, value: float, cum_base: float) -> None:
        f = self.fmt
        if self.verbosity >= 2:
            style = f'style="fill: {color}; stroke: none; fill-opacity: 1"'
        else:
            style = f'fill="{color}"'
        attrs = (f'id="{mark_id}" class="mark mark-bar series-{series.replace(" ", "-")}" '
                 f'x="{f(x)}" y="{f(y)}" width="{f(w)}" height="{f(h)}" {style}'
                 f'{self.mark_attrs(series, detail, {"category": x_value, "value": value})}')
        self._mark_open("rect", attrs, detail)
        self.role(mark_id, "data-mark", series=series)
        self.truth_marks[mark_id] = {
            "series": series, "kind": "bar",
            "vertices": [[x, y], [x + w, y], [x + w, y + h], [x, y + h]],
            "x_values": [x_value], "values": [value], "cum_base": [cum_base],
        }

    def path_mark(self, mark_id: str, series: str, d: str, fill: str, stroke: str | None,
                  detail: str, kind: str, vertices, x_values, values, cum_base, opacity: float = 1.0) -> None:
        paint = f"fill: {fill};" if fill != "none" else "fill: none;"
        if stroke:
            paint += f" stroke: {stroke}; stroke-width: 2;"
        if opacity != 1.0:
            paint += f" opacity: {opacity};"
        attr = f'style="{paint}"' if self.verbosity >= 2 or opacity != 1.0 or stroke else f'fill="{fill}"'
        attrs = (f'id="{mark_id}" class="mark mark-{kind} series-{series.replace(" ", "-")}" '
                 f'd="{d}" {attr}{self.mark_attrs(series, detail, {"count": len(x_values)})}')
        self._mark_open("path", attrs, detail)
        self.role(mark_id, "data-mark", series=series)
        self.truth_marks[mark_id] = {
            "series": series, "kind": kind, "vertices": [[x, y] for x, y in vertices],
            "x_values": list(x_values), "values": list(values), "cum_base": list(cum_base),
            "opacity": opacity,
        }

    def circle_mark(self, mark_id: str, series: str, cx: float, cy: float, r: float,
                    color: str, detail: str, x_value, value) -> None:
        f = self.fmt
        if self.verbosity >= 2:
            style = f'style="fill: {color}; stroke: none; opacity: 1"'
        else:
            style = f'fill="{color}"'
        attrs = (f'id="{mark_id}" class="mark mark-point series-{series.replace(" ", "-")}" '
                 f'cx="{f(cx)}" cy="{f(cy)}" r="{f(r)}" {style}'
                 f'{self.mark_attrs(series, detail, {"x": x_value, "y": value})}')
        self._mark_open("circle", attrs, detail)
        self.role(mark_id, "data-mark", series=series)
        self.truth_marks[mark_id] = {
            "series": series, "kind": "point", "vertices": [[cx, cy]],
            "x_values": [x_value], "values": [value], "cum_base": [0.0],
        }

    def document(self, description: str = "") -> str:
        head = []
        if self.verbosity >= 2:
            head.append('<?xml version="1.0" encoding="UTF-8" standalone="no"?>')
            head.append("<!-- Exported vector chart. Do not edit by hand; coordinates are in user units. -->")
        head.append('<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" '
                    'viewBox="0 0 460 320" width="460" height="320" role="img" '
                    'aria-roledescription="chart" preserveAspectRatio="xMidYMid meet">')
        if self.verbosity >= 3:
            head.append(_METADATA)
        if description:
            head.append(f"  <desc>{description}</desc>")
        if self.verbosity >= 2:
            head.append("  <defs>")
            head.append('    <clipPath id="plot-clip">')
            head.append(f'      <rect x="{PLOT[0]:.0f}" y="{PLOT[1]:.0f}" '
                        f'width="{PLOT[2] - PLOT[0]:.0f}" height="{PLOT[3] - PLOT[1]:.0f}"/>')
            head.append("    </clipPath>")
            head.append("  </defs>")
        style_rules = [
            ".axis { stroke: #222222; stroke-width: 1; fill: none; }",
            ".tick { stroke: #222222; stroke-width: 1; }",
            ".grid { stroke: #dddddd; stroke-width: 1; }",
            ".tick-label { font-size: 11px; fill: #333333; font-family: sans-serif; }",
            ".legend-label { font-size: 11px; fill: #333333; font-family: sans-serif; }",
            ".title { font-size: 16px; fill: #111111; font-family: sans-serif; }",
            ".axis-title { font-size: 12px; fill: #333333; font-family: sans-serif; }",
            "text { font-family: sans-serif; }",
        ]
        if self.verbosity >= 2:
            style_rules += [
                ".mark { shape-rendering: auto; }",
                ".mark-bar { stroke-linejoin: miter; }",
                ".mark-area { stroke-linejoin: round; }",
                ".mark-line { stroke-linecap: round; fill: none; }",
                ".mark-point { stroke: none; }",
                ".gridline-horizontal { stroke-dasharray: none; }",
                ".tick-mark { stroke-linecap: butt; }",
                ".tick-label-x { dominant-baseline: hanging; }",
                ".tick-label-y { dominant-baseline: middle; }",
                ".legend-swatch { stroke: none; }",
                ".grid-layer { pointer-events: none; }",
                ".domain { vector-effect: non-scaling-stroke; }",
                ".plot-area { isolation: isolate; }",
            ]
        head.append("  <style>")
        head.extend("    " + r for r in style_rules)
        head.append("  </style>")
        return "\n".join(head + self.lines + ["</svg>"]) + "\n"


def nice_ticks(d0: float, d1: float, step: float) -> list[float]:
    vals = []
    v = math.ceil(d0 / step) * step
    while v <= d1 + 1e-9:
        vals.append(round(v, 10))
        v += step
    return vals


def _axis_truth_y(domain: tuple[float, float], step: float) -> dict:
    ticks = [[px_y(v, *domain), f"{v:g}", v] for v in nice_ticks(*domain, step)]
    return {"orientation": "y", "kind": "quantitative", "scale": "linear",
            "pixel_range": [PLOT[3], PLOT[1]], "domain": list(domain), "ticks": ticks}


def _axis_truth_x_linear(domain: tuple[float, float], step: float, kind: str = "quantitative") -> dict:
    ticks = [[px_x(v, *domain), f"{v:g}", v] for v in nice_ticks(*domain, step)]
    return {"orientation": "x", "kind": kind, "scale": "linear",
            "pixel_range": [PLOT[0], PLOT[2]], "domain": list(domain), "ticks": ticks}


def _axis_truth_x_band(categories: list[str]) -> dict:
    _w, centers = band_geometry(len(categories))
    ticks = [[c, cat, None] for c, cat in zip(centers, categories)]
    return {"orientation": "x", "kind": "categorical", "scale": "band",
            "pixel_range": [PLOT[0], PLOT[2]], "categories": categories, "ticks": ticks}


def _finish(b: SvgBuilder, name: str, chart: dict, out_dir: Path, description: str = "") -> dict:
    svg = b.document(description)
    truth = {
        "name": name,
        "chart": chart,
        "baseline": BASELINE,
        "viewbox": list(VB),
        "roles": b.truth_roles,
        "marks": b.truth_marks,
        "raw_chars": len(svg),
    }
    (out_dir / f"{name}.svg").write_text(svg, encoding="utf-8")
    (out_dir / f"{name}.truth.json").write_text(json.dumps(truth, indent=1), encoding="utf-8")
    return truth


# ---------------------------------------------------------------------------
# Fixture definitions
# ---------------------------------------------------------------------------

def gen_bar_simple(out_dir: Path) -> dict:
    cats = ["A", "B", "C", "D", "E"]
    values = [25.0, 40.0, 15.0, 30.0, 22.0]
    domain = (0.0, 50.0)
    b = SvgBuilder(verbosity=2)
    x_axis = _axis_truth_x_band(cats)
    y_axis = _axis_truth_y(domain, 10.0)
    b.furniture(x_axis, y_axis, "Widget output by site", "units")
    bw, centers = band_geometry(len(cats))
    b.add('<g class="plot-area" clip-path="url(#plot-clip)">')
    b.indent += 1
    for i, (cat, v) in enumerate(zip(cats, values)):
        w = 0.8 * bw
        x = centers[i] - w / 2
        top = px_y(v, *domain)
        b.rect_mark(f"mark-{cat}", "series-1", x, top, w, BASELINE - top, PALETTE[0],
                    f"site {cat}: {v:g} units", cat, v, 0.0)
    b.indent -= 1
    b.add("</g>")
    chart = {"chart_type": "bar", "arrangement": "none", "stacking_direction": "none",
             "x_axis": x_axis, "y_axis": y_axis}
    return _finish(b, "bar_simple_5", chart, out_dir, "Bar chart of widget output across five sites.")


def gen_grouped_bar(out_dir: Path) -> dict:
    cats = ["Q1", "Q2", "Q3", "Q4"]
    series = {"revenue": [38.0, 44.0, 30.0, 50.0], "profit": [12.0, 18.0, 9.0, 21.0]}
    domain = (0.0, 60.0)
    b = SvgBuilder(verbosity=3)
    x_axis = _axis_truth_x_band(cats)
    y_axis = _axis_truth_y(domain, 10.0)
    b.furniture(x_axis, y_axis, "Quarterly results", "millions")
    b.legend(list(series))
    bw, centers = band_geometry(len(cats))
    n = len(series)
    sub = 0.8 * bw / n
    b.add('<g class="plot-area" clip-path="url(#plot-clip)">')
    b.indent += 1
    for j, (key, vals) in enumerate(series.items()):
        b.comment(f"series {key}")
        b.add(f'<g class="series-group series-group-{key}" transform="translate(0,0)">')
        b.indent += 1
        for i, (cat, v) in enumerate(zip(cats, vals)):
            x = centers[i] - 0.4 * bw + j * sub
            top = px_y(v, *domain)
            b.rect_mark(f"mark-{key}-{cat}", key, x, top, sub, BASELINE - top, PALETTE[j],
                        f"{key} in quarter {cat}: {v:g} million units of account", cat, v, 0.0)
        b.indent -= 1
        b.add("</g>")
    b.indent -= 1
    b.add("</g>")
    chart = {"chart_type": "grouped-bar", "arrangement": "grouped", "stacking_direction": "horizontal",
             "x_axis": x_axis, "y_axis": y_axis}
    return _finish(b, "groupedbar_2x4", chart, out_dir,
                   "Grouped bar chart comparing revenue and profit for four quarters.")


def gen_stacked_bar(out_dir: Path) -> dict:
    cats = ["Q1", "Q2", "Q3", "Q4"]
    series = {"alpha": [20.0, 25.0, 18.0, 22.0], "beta": [15.0, 10.0, 20.0, 12.0],
              "gamma": [10.0, 15.0, 8.0, 14.0]}
    domain = (0.0, 60.0)
    b = SvgBuilder(verbosity=2)
    x_axis = _axis_truth_x_band(cats)
    y_axis = _axis_truth_y(domain, 10.0)
    b.furniture(x_axis, y_axis, "Stacked output", "units")
    b.legend(list(series))
    bw, centers = band_geometry(len(cats))
    cum = [0.0] * len(cats)
    b.add('<g class="plot-area" clip-path="url(#plot-clip)">')
    b.indent += 1
    for j, (key, vals) in enumerate(series.items()):
        for i, (cat, v) in enumerate(zip(cats, vals)):
            w = 0.8 * bw
            x = centers[i] - w / 2
            y_bottom = px_y(cum[i], *domain)
            y_top = px_y(cum[i] + v, *domain)
            b.rect_mark(f"mark-{key}-{cat}", key, x, y_top, w, y_bottom - y_top, PALETTE[j],
                        f"{key} {cat}: {v:g} units", cat, v, cum[i])
            cum[i] += v
    b.indent -= 1
    b.add("</g>")
    chart = {"chart_type": "stacked-bar", "arrangement": "stacked", "stacking_direction": "vertical",
             "x_axis": x_axis, "y_axis": y_axis}
    return _finish(b, "bar_stacked_3x4", chart, out_dir,
                   "Stacked bar chart of three components over four quarters.")


EMISSION_YEARS = list(range(1972, 1984))
EMISSION_SERIES = {
    "industry": [30.0, 32.0, 35.0, 38.0, 40.0, 42.0, 41.0, 39.0, 37.0, 35.0, 33.0, 31.0],
    "energy": [45.0, 47.0, 50.0, 52.0, 55.0, 58.0, 57.0, 55.0, 52.0, 50.0, 48.0, 46.0],
    "international shipping": [44.0, 45.5, 47.0, 48.2, 49.5, 50.3, 49.8, 48.9, 47.6, 46.4, 45.2, 44.1],
}


def _poly_d(b: SvgBuilder, pts: list[tuple[float, float]], close: bool) -> str:
    f = b.fmt
    d = "M" + " L".join(f"{f(x)},{f(y)}" for x, y in pts)
    return d + " Z" if close else d


def gen_line_emissions(out_dir: Path) -> dict:
    domain_x = (1972.0, 1983.0)
    domain_y = (0.0, 70.0)
    b = SvgBuilder(verbosity=3)
    x_axis = _axis_truth_x_linear(domain_x, 1.0, kind="temporal")
    y_axis = _axis_truth_y(domain_y, 10.0)
    b.furniture(x_axis, y_axis, "Sulfur dioxide emissions by sector", "units")
    b.legend(list(EMISSION_SERIES))
    b.comment("data series drawn inside a translated plot group")
    b.add('<g class="plot-area" clip-path="url(#plot-clip)" transform="translate(0,0)">')
    b.indent += 1
    for j, (key, vals) in enumerate(EMISSION_SERIES.items()):
        pts = [(px_x(year, *domain_x), px_y(v, *domain_y))
               for year, v in zip(EMISSION_YEARS, vals)]
        b.path_mark(f"mark-{key.replace(' ', '-')}", key, _poly_d(b, pts, close=False),
                    "none", PALETTE[j], f"{key} emission trend across years 1972 to 1983", "line",
                    pts, EMISSION_YEARS, vals, [0.0] * len(vals))
    b.indent -= 1
    b.add("</g>")
    chart = {"chart_type": "line", "arrangement": "none", "stacking_direction": "none",
             "x_axis": x_axis, "y_axis": y_axis}
    return _finish(b, "line_emissions_3series", chart, out_dir,
                   "Multi-line chart of sulfur dioxide emissions per sector.")


def gen_area_simple(out_dir: Path) -> dict:
    years = list(range(2010, 2020))
    vals = [12.0, 15.0, 19.0, 24.0, 28.0, 31.0, 29.0, 26.0, 21.0, 16.0]
    domain_x = (2010.0, 2019.0)
    domain_y = (0.0, 40.0)
    b = SvgBuilder(verbosity=2)
    x_axis = _axis_truth_x_linear(domain_x, 1.0, kind="temporal")
    y_axis = _axis_truth_y(domain_y, 10.0)
    b.furniture(x_axis, y_axis, "Adoption over time", "percent")
    upper = [(px_x(y, *domain_x), px_y(v, *domain_y)) for y, v in zip(years, vals)]
    lower = [(px_x(y, *domain_x), BASELINE) for y in reversed(years)]
    b.path_mark("mark-adoption", "series-1", _poly_d(b, upper + lower, close=True),
                PALETTE[0], None, "adoption share area", "area",
                upper + lower, years, vals, [0.0] * len(vals))
    chart = {"chart_type": "area", "arrangement": "none", "stacking_direction": "none",
             "x_axis": x_axis, "y_axis": y_axis}
    return _finish(b, "area_simple", chart, out_dir, "Single-series area chart of adoption.")


def gen_area_overlapped(out_dir: Path) -> dict:
    years = list(range(2000, 2010))
    series = {"north": [20.0, 24.0, 28.0, 34.0, 38.0, 42.0, 40.0, 37.0, 33.0, 28.0],
              "south": [30.0, 31.0, 33.0, 30.0, 28.0, 25.0, 27.0, 30.0, 32.0, 34.0]}
    domain_x = (2000.0, 2009.0)
    domain_y = (0.0, 50.0)
    b = SvgBuilder(verbosity=2)
    x_axis = _axis_truth_x_linear(domain_x, 1.0, kind="temporal")
    y_axis = _axis_truth_y(domain_y, 10.0)
    b.furniture(x_axis, y_axis, "Regional totals", "units")
    b.legend(list(series))
    for j, (key, vals) in enumerate(series.items()):
        upper = [(px_x(y, *domain_x), px_y(v, *domain_y)) for y, v in zip(years, vals)]
        lower = [(px_x(y, *domain_x), BASELINE) for y in reversed(years)]
        b.path_mark(f"mark-{key}", key, _poly_d(b, upper + lower, close=True),
                    PALETTE[j], None, f"{key} region total", "area",
                    upper + lower, years, vals, [0.0] * len(vals), opacity=0.6)
    chart = {"chart_type": "overlapped-area", "arrangement": "overlapped", "stacking_direction": "none",
             "x_axis": x_axis, "y_axis": y_axis}
    return _finish(b, "area_overlapped_2series", chart, out_dir,
                   "Two overlapped translucent area series.")


def gen_stacked_area(out_dir: Path) -> dict:
    domain_x = (1972.0, 1983.0)
    domain_y = (0.0, 160.0)
    b = SvgBuilder(verbosity=2)
    x_axis = _axis_truth_x_linear(domain_x, 1.0, kind="temporal")
    y_axis = _axis_truth_y(domain_y, 40.0)
    b.furniture(x_axis, y_axis, "Total emissions by sector", "units")
    b.legend(list(EMISSION_SERIES))
    n = len(EMISSION_YEARS)
    cum = [0.0] * n
    for j, (key, vals) in enumerate(EMISSION_SERIES.items()):
        lower_vals = cum[:]
        upper_vals = [c + v for c, v in zip(cum, vals)]
        upper = [(px_x(y, *domain_x), px_y(uv, *domain_y))
                 for y, uv in zip(EMISSION_YEARS, upper_vals)]
        lower = [(px_x(y, *domain_x), px_y(lv, *domain_y))
                 for y, lv in zip(reversed(EMISSION_YEARS), reversed(lower_vals))]
        b.path_mark(f"mark-{key.replace(' ', '-')}", key, _poly_d(b, upper + lower, close=True),
                    PALETTE[j], None, f"{key} stacked layer", "area",
                    upper + lower, EMISSION_YEARS, vals, lower_vals)
        cum = upper_vals
    chart = {"chart_type": "stacked-area", "arrangement": "stacked", "stacking_direction": "vertical",
             "x_axis": x_axis, "y_axis": y_axis}
    return _finish(b, "stacked_area_3series", chart, out_dir,
                   "Stacked area chart of emissions by sector.")


def gen_scatter(out_dir: Path) -> dict:
    rng = random.Random(20240611)
    domain_x = (10.0, 100.0)
    domain_y = (0.0, 60.0)
    b = SvgBuilder(verbosity=3)
    x_axis = _axis_truth_x_linear(domain_x, 10.0)
    y_axis = _axis_truth_y(domain_y, 10.0)
    b.furniture(x_axis, y_axis, "Samples by cohort", "score")
    b.legend(["cohort-a", "cohort-b"])
    b.add('<g class="plot-area" clip-path="url(#plot-clip)">')
    b.indent += 1
    for j, key in enumerate(["cohort-a", "cohort-b"]):
        for i in range(15):
            xv = round(rng.uniform(12.0, 98.0), 2)
            yv = round(rng.uniform(4.0, 56.0), 2)
            b.circle_mark(f"mark-{key}-{i}", key, px_x(xv, *domain_x), px_y(yv, *domain_y),
                          4.0, PALETTE[j], f"{key} observation {i}: measurement {xv} scored {yv}",
                          xv, yv)
    b.indent -= 1
    b.add("</g>")
    chart = {"chart_type": "scatter", "arrangement": "none", "stacking_direction": "none",
             "x_axis": x_axis, "y_axis": y_axis}
    return _finish(b, "scatter_2series", chart, out_dir, "Scatter plot with two cohorts.")


def gen_large_scatter(n_points: int = 5000) -> str:
    """A big flat scatter document used to exercise the adaptive-parsing path."""
    rng = random.Random(7)
    lines = ['<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 460 320">',
             '  <line id="axis-x" x1="60" y1="280" x2="420" y2="280" stroke="black"/>',
             '  <line id="axis-y" x1="60" y1="40" x2="60" y2="280" stroke="black"/>']
    for i, v in enumerate([0, 20, 40, 60]):
        py = px_y(v, 0, 60)
        lines.append(f'  <line id="tick-y-{i}" x1="54" y1="{py:.1f}" x2="60" y2="{py:.1f}" stroke="black"/>')
        lines.append(f'  <text id="label-y-{i}" x="50" y="{py + 4:.1f}" text-anchor="end" font-size="11">{v}</text>')
    for i, v in enumerate([20, 40, 60, 80, 100]):
        px = px_x(v, 10, 100)
        lines.append(f'  <line id="tick-x-{i}" x1="{px:.1f}" y1="280" x2="{px:.1f}" y2="286" stroke="black"/>')
        lines.append(f'  <text id="label-x-{i}" x="{px:.1f}" y="298" text-anchor="middle" font-size="11">{v}</text>')
    budget = n_points - (len(lines) - 1) - 1
    for i in range(budget):
        cx = px_x(rng.uniform(12, 98), 10, 100)
        cy = px_y(rng.uniform(2, 58), 0, 60)
        lines.append(f'  <circle id="pt-{i}" cx="{cx:.2f}" cy="{cy:.2f}" r="2.5" fill="hsl(207,54%,49%)"/>')
    lines.append("</svg>")
    return "\n".join(lines)


GENERATORS = [gen_bar_simple, gen_grouped_bar, gen_stacked_bar, gen_line_emissions,
              gen_area_simple, gen_area_overlapped, gen_stacked_area, gen_scatter]


def generate_all(out_dir: Path) -> list[dict]:
    out_dir.mkdir(parents=True, exist_ok=True)
    truths = [g(out_dir) for g in GENERATORS]
    manifest = {
        "fixtures": [{"name": t["name"], "chart_type": t["chart"]["chart_type"],
                      "marks": len(t["marks"]), "raw_chars": t["raw_chars"]} for t in truths]
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1), encoding="utf-8")
    return truths


if __name__ == "__main__":
    root = Path(__file__).resolve().parent / "fixtures"
    for t in generate_all(root):
        print(f'{t["name"]}: {len(t["marks"])} marks, {t["raw_chars"]} chars')
