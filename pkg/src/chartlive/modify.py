"""Modification engine: six modification categories as constraint edits.

Every operation returns a SceneDelta.  Emphatic and annotative changes
never move control points; reductive, navigational, organizational and
representational changes edit the graph and re-solve, letting the
constraints carry the remaining marks to their new equilibrium.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from importlib import resources

from .constraints import (
    Appearance,
    add_area_mark,
    add_axis_seat,
    add_bar_mark,
    add_line_mark,
    add_stack_collisions,
    clear_stack_bases,
    nice_step,
    recompute_stack_bases,
    remove_mark,
    set_axis_domain,
    solve,
    StackInfo,
)
from .identify import DataBinding, parse_tick_value
from .scene import Scene, SceneDelta, axis_update_entry, delta_from_solution

CATEGORIES = ("emphatic", "reductive", "annotative", "navigational",
              "organizational", "representational")

UNFOCUSED_OPACITY = 0.25
FOCUS_STROKE_WIDTH = 2.0
BAR_FILL_RATIO = 0.8
FIT_HEADROOM = 1.05
MULTI_AREA_OPACITY = 0.65


class UnsupportedForChartType(ValueError):
    def __init__(self, message: str, alternatives: list[str] | None = None):
        super().__init__(message)
        self.alternatives = alternatives or []


class TargetUnresolved(ValueError):
    pass


class IncompleteParams(ValueError):
    pass


class UnsupportedConversion(ValueError):
    pass


class LogOfNonPositive(ValueError):
    pass


class NoVisibleMarks(ValueError):
    pass


@dataclass(frozen=True)
class Modification:
    category: str
    variant: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"category": self.category, "variant": self.variant, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "Modification":
        return cls(d["category"], d["variant"], dict(d.get("params", {})))


@dataclass(frozen=True)
class TargetSelector:
    kind: str  # visual-mark | reference-component | extra-widget
    selection: object = "all"  # "all" | "brushed" | "unbrushed" | ids | {"series"|"region": ...}

    def to_dict(self) -> dict:
        return {"kind": self.kind, "selection": self.selection}

    @classmethod
    def from_dict(cls, d: dict) -> "TargetSelector":
        sel = d.get("selection", "all")
        if isinstance(sel, list):
            sel = list(sel)
        return cls(d["kind"], sel)


_REQUIRED_PARAMS = {
    ("annotative", "reference-line"): ("value",),
    ("annotative", "text-label"): ("text",),
    ("navigational", "rescale"): ("axis",),
    ("navigational", "pan"): ("axis",),
    ("reductive", "filter"): ("condition",),
    ("representational", "mark-type"): ("target_type",),
    ("representational", "axis"): ("scale",),
    ("representational", "channel"): ("channel",),
}


def load_capabilities() -> dict:
    with resources.files("chartlive.data").joinpath("capabilities.json").open() as fh:
        return json.load(fh)


_CAPS = load_capabilities()


def legal_variants(chart_type: str, category: str) -> list[str]:
    return list(_CAPS["legal"].get(chart_type, {}).get(category, []))


def is_legal(chart_type: str, category: str, variant: str) -> bool:
    return variant in legal_variants(chart_type, category)


def validate_params(mod: Modification) -> None:
    missing = [k for k in _REQUIRED_PARAMS.get((mod.category, mod.variant), ())
               if mod.params.get(k) is None]
    if missing:
        raise IncompleteParams(
            f"{mod.category}/{mod.variant} needs parameter(s): {', '.join(missing)}")


def check_capability(chart_type: str, mod: Modification) -> None:
    if mod.category not in CATEGORIES:
        raise UnsupportedForChartType(f"unknown modification category {mod.category!r}")
    allowed = legal_variants(chart_type, mod.category)
    if mod.variant not in allowed:
        supported = {cat: legal_variants(chart_type, cat) for cat in CATEGORIES}
        alternatives = [f"{cat}: {', '.join(v)}" for cat, v in supported.items() if v]
        raise UnsupportedForChartType(
            f"{mod.variant} ({mod.category}) is not supported in a {chart_type} chart",
            alternatives=alternatives)


# ---------------------------------------------------------------------------
# Target resolution
# ---------------------------------------------------------------------------

def resolve_target_marks(scene: Scene, selector: TargetSelector, event=None) -> list[str]:
    if selector.kind != "visual-mark":
        raise TargetUnresolved(f"expected a visual-mark selector, got {selector.kind}")
    sel = selector.selection
    all_marks = scene.mark_ids()
    if isinstance(sel, str):
        if sel == "all":
            marks = list(all_marks)
        elif sel in ("brushed", "selected"):
            marks = [m for m in scene.selection if m in scene.graph.marks]
        elif sel in ("unbrushed", "unselected"):
            chosen = set(scene.selection)
            marks = [m for m in all_marks if m not in chosen]
        elif sel == "event-target":
            marks = [event.target] if event is not None and event.target in scene.graph.marks else []
        elif sel in scene.graph.marks:
            marks = [sel]
        else:
            raise TargetUnresolved(f"unknown mark selection {sel!r}")
    elif isinstance(sel, list):
        missing = [m for m in sel if m not in scene.graph.marks]
        if missing:
            raise TargetUnresolved(f"unknown mark ids: {missing}")
        marks = list(sel)
    elif isinstance(sel, dict):
        if "series" in sel:
            marks = [m for m in all_marks
                     if scene.graph.marks[m].binding.series_key == sel["series"]]
        elif "region" in sel:
            x0, y0, x1, y1 = sel["region"]
            marks = [m for m in all_marks if _bbox_intersects(scene.mark_bbox(m), x0, y0, x1, y1)]
        else:
            raise TargetUnresolved(f"unsupported selection {sel!r}")
    else:
        raise TargetUnresolved(f"unsupported selection {sel!r}")
    if not marks:
        raise TargetUnresolved("selection resolves to no marks")
    return marks


def _bbox_intersects(bb, x0, y0, x1, y1) -> bool:
    return bb[0] <= x1 and bb[2] >= x0 and bb[1] <= y1 and bb[3] >= y0


def _positions(scene: Scene) -> dict[str, tuple[float, float]]:
    return {pid: (p.x, p.y) for pid, p in scene.graph.points.items()}


# ---------------------------------------------------------------------------
# apply_modification
# ---------------------------------------------------------------------------

def apply_modification(scene: Scene, mod: Modification, target: TargetSelector,
                       event=None) -> SceneDelta:
    """Validate, dispatch, and stamp the executed step onto the delta."""
    check_capability(scene.chart_type, mod)
    validate_params(mod)
    if mod.category == "emphatic":
        delta = _apply_emphatic(scene, mod, target, event)
    elif mod.category == "reductive":
        delta = _apply_reductive(scene, mod, target)
    elif mod.category == "annotative":
        delta = _apply_annotative(scene, mod, target, event)
    elif mod.category == "navigational":
        delta = _apply_navigational(scene, mod, event)
    elif mod.category == "organizational":
        delta = restack(scene, mod.variant, mod.params)
    else:
        delta = reencode(scene, mod.variant, mod.params)
    delta.steps = [{"category": mod.category, "variant": mod.variant}]
    return delta


def _narrow_to_event(scene: Scene, target: TargetSelector, event) -> TargetSelector:
    if (target.selection == "all" and event is not None
            and getattr(event, "target", None) in scene.graph.marks):
        return TargetSelector("visual-mark", [event.target])
    return target


def _apply_emphatic(scene: Scene, mod: Modification, target: TargetSelector, event) -> SceneDelta:
    target = _narrow_to_event(scene, target, event)
    focused = set(resolve_target_marks(scene, target, event))
    delta = SceneDelta()
    if mod.variant == "opacity":
        for mark_id in scene.mark_ids():
            base = scene.graph.marks[mark_id].appearance.opacity
            opacity = base if mark_id in focused else UNFOCUSED_OPACITY
            delta.restyled[mark_id] = {"opacity": opacity}
    else:  # stroke emphasis outlines the focused marks
        for mark_id in sorted(focused):
            delta.restyled[mark_id] = {"stroke": [[0.0, 0.0, 0.0], FOCUS_STROKE_WIDTH]}
    for mark_id, style in delta.restyled.items():
        scene.restyles.setdefault(mark_id, {}).update(style)
    return delta


_FILTER_RE = re.compile(
    r"^\s*(series|category|value|magnitude)\s*(==|!=|>=|<=|>|<)\s*"
    r"(\"[^\"]*\"|'[^']*'|[-+0-9.eE]+)\s*$")


def parse_filter_condition(condition: str):
    """Compile the minimal predicate grammar into a binding -> bool callable."""
    clauses = []
    for part in re.split(r"\s+and\s+", condition.strip()):
        m = _FILTER_RE.match(part)
        if m is None:
            raise IncompleteParams(f"unparseable filter condition {part!r}")
        field_name, op, literal = m.groups()
        value = literal[1:-1] if literal[0] in "\"'" else float(literal)
        clauses.append((field_name, op, value))

    def fieldval(binding: DataBinding, name: str):
        if name == "series":
            return binding.series_key
        if name == "category":
            return binding.category
        return binding.magnitude

    ops = {"==": lambda a, b: a == b, "!=": lambda a, b: a != b,
           ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
           "<": lambda a, b: a < b, "<=": lambda a, b: a <= b}

    def predicate(binding: DataBinding) -> bool:
        return all(ops[op](fieldval(binding, name), value) for name, op, value in clauses)

    return predicate


def remove_marks(scene: Scene, mark_ids: list[str]) -> SceneDelta:
    before = _positions(scene)
    for mark_id in mark_ids:
        remove_mark(scene.graph, mark_id)
        scene.restyles.pop(mark_id, None)
    scene.selection = [m for m in scene.selection if m in scene.graph.marks]
    scene.annotations = [a for a in scene.annotations if a.get("mark") not in set(mark_ids)]
    if scene.graph.marks:
        delta = delta_from_solution(before, solve(scene.graph))
    else:
        delta = SceneDelta()
    delta.removed = list(mark_ids)
    return delta


def _apply_reductive(scene: Scene, mod: Modification, target: TargetSelector) -> SceneDelta:
    scope = resolve_target_marks(scene, target)
    if mod.variant == "filter":
        keep = parse_filter_condition(mod.params["condition"])
        doomed = [m for m in scope if not keep(scene.graph.marks[m].binding)]
    else:
        doomed = list(scope)
    if not doomed:
        return SceneDelta()
    return remove_marks(scene, doomed)


def _tooltip_annotation(scene: Scene, mark_id: str, pixel_hint=None) -> dict:
    node = scene.graph.marks[mark_id]
    binding = node.binding
    if pixel_hint is not None and len(binding.tuples) > 1:
        px = pixel_hint[0]
        idx = min(range(len(binding.tuples)),
                  key=lambda i: abs(scene.graph.x_axis.pixel_at(binding.tuples[i][0]) - px))
    else:
        idx = max(range(len(binding.tuples)), key=lambda i: binding.tuples[i][1])
    xv, own = binding.tuples[idx]
    value = round(own, 2)
    x_label = binding.category if binding.category is not None else f"{xv:g}"
    pts = [scene.graph.points[p] for p in node.point_ids()]
    if "upper" in node.structure:
        anchor_pt = scene.graph.points[node.structure["upper"][idx]]
    elif "vertices" in node.structure and len(node.structure["vertices"]) > idx:
        anchor_pt = scene.graph.points[node.structure["vertices"][idx]]
    else:
        anchor_pt = min(pts, key=lambda p: p.y)
    return {
        "kind": "tooltip", "mark": mark_id, "anchor": [anchor_pt.x, anchor_pt.y],
        "content": f"{binding.series_key} — {x_label}: {value:g}",
        "fields": {"series": binding.series_key, "x": x_label, "value": value},
        "transient": True,
    }


def _apply_annotative(scene: Scene, mod: Modification, target: TargetSelector, event) -> SceneDelta:
    delta = SceneDelta()
    if mod.variant == "tooltip":
        target = _narrow_to_event(scene, target, event)
        hint = getattr(event, "position", None) if event is not None else mod.params.get("pixel")
        for mark_id in resolve_target_marks(scene, target, event):
            delta.added_annotations.append(_tooltip_annotation(scene, mark_id, hint))
    elif mod.variant == "reference-line":
        value = float(mod.params["value"])
        axis = scene.graph.y_axis
        pixel = axis.pixel_at(value)
        x_lo, x_hi = sorted(scene.graph.x_axis.pixel_range)
        ann = {"kind": "reference-line", "axis": "y", "value": value, "pixel": pixel,
               "span": [x_lo, x_hi], "label": f"{value:g}"}
        delta.added_annotations.append(ann)
        scene.annotations.append(ann)
    else:  # text-label
        target = _narrow_to_event(scene, target, event)
        text = str(mod.params["text"])
        for mark_id in resolve_target_marks(scene, target, event):
            pts = [scene.graph.points[p] for p in scene.graph.marks[mark_id].point_ids()]
            top = min(pts, key=lambda p: p.y)
            cx = sum(p.x for p in pts) / len(pts)
            ann = {"kind": "text-label", "mark": mark_id, "anchor": [cx, top.y - 6.0],
                   "text": text}
            delta.added_annotations.append(ann)
            scene.annotations.append(ann)
    return delta


def _apply_navigational(scene: Scene, mod: Modification, event) -> SceneDelta:
    axis_id = mod.params.get("axis", "y")
    axis = scene.graph.axis(axis_id)
    if mod.variant == "rescale":
        domain = mod.params.get("domain")
        factor = mod.params.get("factor")
        if domain is None and factor is None and event is not None:
            factor = getattr(event, "payload", {}).get("factor")
        if domain is None and factor is not None:
            if axis.domain is None:
                raise UnsupportedForChartType(f"{axis_id}-axis is categorical; it cannot be zoomed")
            d0, d1 = axis.domain
            center = (d0 + d1) / 2
            half = (d1 - d0) / 2 * float(factor)
            domain = (center - half, center + half)
        if domain is None:
            return fit_axes(scene)
        return _set_domain_and_solve(scene, axis_id, tuple(domain))
    # pan
    offset = mod.params.get("offset")
    if offset is None and event is not None:
        offset = getattr(event, "payload", {}).get("offset")
    if offset is None:
        raise IncompleteParams("pan needs an offset")
    if axis.domain is None:
        raise UnsupportedForChartType(f"{axis_id}-axis is categorical; it cannot be panned")
    d0, d1 = axis.domain
    return _set_domain_and_solve(scene, axis_id, (d0 + float(offset), d1 + float(offset)))


def _set_domain_and_solve(scene: Scene, axis_id: str, domain: tuple[float, float]) -> SceneDelta:
    before = _positions(scene)
    set_axis_domain(scene.graph, axis_id, domain)
    delta = delta_from_solution(before, solve(scene.graph))
    delta.axis_updates[axis_id] = axis_update_entry(scene.graph.axis(axis_id))
    return delta


# ---------------------------------------------------------------------------
# Organizational re-arrangement
# ---------------------------------------------------------------------------

def restack(scene: Scene, arrangement: str, params: dict | None = None) -> SceneDelta:
    params = params or {}
    g = scene.graph
    if arrangement == "overlap":
        if scene.arrangement == "overlapped":
            return SceneDelta()
        return _stacked_to_overlapped(scene)
    if arrangement == "stack":
        if scene.arrangement == "stacked":
            return SceneDelta()
        if scene.chart_type == "overlapped-area" or (scene.chart_type in ("bar", "area")
                                                     and scene.arrangement == "overlapped"):
            return _overlapped_to_stacked(scene)
        if scene.chart_type == "grouped-bar":
            return _grouped_to_stacked(scene)
        raise UnsupportedForChartType(f"cannot stack a {scene.chart_type} chart")
    if arrangement == "group":
        if scene.chart_type == "stacked-bar":
            return _stacked_to_grouped(scene)
        if scene.chart_type in ("bar", "grouped-bar"):
            bands: dict[str, int] = {}
            for node in g.marks.values():
                bands[node.band_category or ""] = bands.get(node.band_category or "", 0) + 1
            if all(v == 1 for v in bands.values()) or scene.chart_type == "grouped-bar":
                return SceneDelta()  # already one mark per slot
        raise UnsupportedForChartType(f"cannot group a {scene.chart_type} chart")
    if arrangement == "sort":
        return _sort(scene, params.get("key", "magnitude"), params.get("order", "descending"))
    raise UnsupportedForChartType(f"unknown arrangement {arrangement!r}")


def _drop_group_collisions(g, group: str) -> None:
    for cid in [c.id for c in g.constraints.values()
                if c.kind == "collision" and c.rank and c.rank[0] == group]:
        del g.constraints[cid]


def _drop_axis_seat(g, node) -> None:
    pids = set(node.point_ids())
    doomed = []
    for c in g.constraints.values():
        if not any(p in pids for p in c.points):
            continue
        if c.kind == "support":
            doomed.append(c.id)
        elif (c.kind == "gravity" and c.component == "y" and c.axis == "y"
              and c.value == g.baseline_value
              and all(g.points[p].role_in_mark.startswith("lower") for p in c.points)):
            doomed.append(c.id)
    for cid in doomed:
        del g.constraints[cid]


def _stacked_to_overlapped(scene: Scene) -> SceneDelta:
    g = scene.graph
    before = _positions(scene)
    for group in list(g.stacks):
        info = g.stacks[group]
        if info.direction != "vertical":
            continue
        _drop_group_collisions(g, group)
        for mid in info.marks:
            node = g.marks[mid]
            if node.stack_level > 0:
                add_axis_seat(g, node)
            node.stack_group, node.stack_level = None, 0
        clear_stack_bases(g, info.marks)
        del g.stacks[group]
    scene.arrangement = "overlapped"
    scene.stacking_direction = "none"
    if scene.chart_type == "stacked-area":
        scene.chart_type = "overlapped-area"
    elif scene.chart_type == "stacked-bar":
        scene.chart_type = "bar"
    return delta_from_solution(before, solve(g))


def _overlapped_to_stacked(scene: Scene) -> SceneDelta:
    g = scene.graph
    before = _positions(scene)
    area_like = any(n.kind == "area" for n in g.marks.values())
    if area_like:
        ordered = [g.marks[m] for m in g.marks]  # paint order bottom-up
        group = "stack"
        for level, node in enumerate(ordered):
            node.stack_group, node.stack_level = group, level
            if level > 0:
                _drop_axis_seat(g, node)
        g.stacks[group] = StackInfo("vertical", [n.id for n in ordered])
        for below, above in zip(ordered, ordered[1:]):
            add_stack_collisions(g, below, above, "vertical")
        recompute_stack_bases(g, group)
        scene.chart_type = "stacked-area"
    else:
        _bars_to_vertical_stacks(scene)
        scene.chart_type = "stacked-bar"
    scene.arrangement = "stacked"
    scene.stacking_direction = "vertical"
    return delta_from_solution(before, solve(g))


def _band_groups(g) -> dict[str, list]:
    bands: dict[str, list] = {}
    for node in g.marks.values():
        bands.setdefault(node.band_category or "", []).append(node)
    return bands


def _set_bar_width(g, node, width: float) -> None:
    pids = set(node.point_ids())
    for c in g.constraints.values():
        if c.kind == "fixed" and all(p in pids for p in c.points) and c.value_span is None:
            c.dx = width


def _set_bar_x_anchor(g, node, value, pixel_offset: float) -> None:
    corners = node.structure["corners"]
    pids = {corners["bl"], corners["tl"]}
    for c in list(g.constraints.values()):
        if c.kind == "gravity" and c.component == "x" and set(c.points) & set(node.point_ids()):
            del g.constraints[c.id]
    g.add_constraint(kind="gravity", points=(corners["bl"], corners["tl"]),
                     axis="x", value=value, component="x", pixel_offset=pixel_offset)


def _bars_to_vertical_stacks(scene: Scene) -> None:
    g = scene.graph
    band_width = g.x_axis.band_width if g.x_axis.scale == "band" else None
    for group in list(g.stacks):
        _drop_group_collisions(g, group)
        del g.stacks[group]
    for cat, nodes in sorted(_band_groups(g).items()):
        nodes.sort(key=lambda n: n.stack_level)
        group = f"band:{cat}"
        width = BAR_FILL_RATIO * band_width if band_width else _bar_width(g, nodes[0])
        for level, node in enumerate(nodes):
            node.stack_group, node.stack_level = group, level
            _set_bar_width(g, node, width)
            if band_width:
                _set_bar_x_anchor(g, node, cat, -width / 2)
            has_seat = any(c.kind == "support" for c in g.mark_constraints(node.id))
            if level == 0 and not has_seat:
                add_axis_seat(g, node)
            elif level > 0 and has_seat:
                _drop_axis_seat_bar(g, node)
        g.stacks[group] = StackInfo("vertical", [n.id for n in nodes])
        for below, above in zip(nodes, nodes[1:]):
            add_stack_collisions(g, below, above, "vertical")
        recompute_stack_bases(g, group)


def _drop_axis_seat_bar(g, node) -> None:
    pids = set(node.point_ids())
    for cid in [c.id for c in g.constraints.values()
                if c.kind == "support" and any(p in pids for p in c.points)]:
        del g.constraints[cid]


def _bar_width(g, node) -> float:
    c = node.structure["corners"]
    return abs(g.points[c["br"]].x - g.points[c["bl"]].x)


def _grouped_to_stacked(scene: Scene) -> SceneDelta:
    g = scene.graph
    before = _positions(scene)
    _bars_to_vertical_stacks(scene)
    scene.chart_type = "stacked-bar"
    scene.arrangement = "stacked"
    scene.stacking_direction = "vertical"
    return delta_from_solution(before, solve(g))


def _stacked_to_grouped(scene: Scene) -> SceneDelta:
    g = scene.graph
    if g.x_axis.scale != "band":
        raise UnsupportedForChartType("grouping needs a categorical x-axis")
    before = _positions(scene)
    band_width = g.x_axis.band_width
    for group in list(g.stacks):
        _drop_group_collisions(g, group)
        del g.stacks[group]
    for cat, nodes in sorted(_band_groups(g).items()):
        nodes.sort(key=lambda n: n.stack_level)
        group = f"band:{cat}"
        n = len(nodes)
        sub = BAR_FILL_RATIO * band_width / n
        for slot, node in enumerate(nodes):
            node.stack_group, node.stack_level = group, slot
            _set_bar_width(g, node, sub)
            _set_bar_x_anchor(g, node, cat, -BAR_FILL_RATIO * band_width / 2 + slot * sub)
            if not any(c.kind == "support" for c in g.mark_constraints(node.id)):
                add_axis_seat(g, node)
        clear_stack_bases(g, [n.id for n in nodes])
        g.stacks[group] = StackInfo("horizontal", [n.id for n in nodes])
        for left, right in zip(nodes, nodes[1:]):
            add_stack_collisions(g, left, right, "horizontal")
    scene.chart_type = "grouped-bar"
    scene.arrangement = "grouped"
    scene.stacking_direction = "horizontal"
    return delta_from_solution(before, solve(g))


def _sort(scene: Scene, key: str, order: str) -> SceneDelta:
    g = scene.graph
    if key not in ("magnitude", "label"):
        raise IncompleteParams(f"sort key must be magnitude or label, got {key!r}")
    reverse = order == "descending"
    if scene.arrangement == "stacked":
        return _sort_stack_layers(scene, key, reverse)
    if g.x_axis.scale != "band":
        raise UnsupportedForChartType("sorting needs a categorical x-axis")
    before = _positions(scene)
    bands = _band_groups(g)
    if any(len(nodes) != 1 for nodes in bands.values()):
        raise UnsupportedForChartType("sorting expects one mark per category")
    nodes = [nodes[0] for nodes in bands.values()]
    if key == "magnitude":
        nodes.sort(key=lambda n: n.binding.magnitude, reverse=reverse)
    else:
        nodes.sort(key=lambda n: n.band_category or "", reverse=reverse)
    g.x_axis.categories = [n.band_category for n in nodes]
    g.x_axis.ticks = [(g.x_axis.pixel_at(c), c, None) for c in g.x_axis.categories]
    width = BAR_FILL_RATIO * g.x_axis.band_width
    for node in nodes:
        _set_bar_x_anchor(g, node, node.band_category, -width / 2)
    delta = delta_from_solution(before, solve(g))
    delta.axis_updates["x"] = axis_update_entry(g.x_axis)
    return delta


def _sort_stack_layers(scene: Scene, key: str, reverse: bool) -> SceneDelta:
    g = scene.graph
    before = _positions(scene)
    totals: dict[str, float] = {}
    for node in g.marks.values():
        series = node.binding.series_key
        totals[series] = totals.get(series, 0.0) + sum(v for _, v in node.binding.tuples)
    series_order = sorted(totals, key=(lambda s: totals[s]) if key == "magnitude" else str,
                          reverse=reverse)
    rank = {s: i for i, s in enumerate(series_order)}
    for group in list(g.stacks):
        info = g.stacks[group]
        if info.direction != "vertical":
            continue
        _drop_group_collisions(g, group)
        nodes = sorted((g.marks[m] for m in info.marks),
                       key=lambda n: rank[n.binding.series_key])
        old_bottom = g.marks[info.marks[0]]
        new_bottom = nodes[0]
        if old_bottom.id != new_bottom.id:
            _drop_axis_seat(g, old_bottom) if old_bottom.kind == "area" \
                else _drop_axis_seat_bar(g, old_bottom)
            add_axis_seat(g, new_bottom)
        for level, node in enumerate(nodes):
            node.stack_level = level
        info.marks = [n.id for n in nodes]
        for below, above in zip(nodes, nodes[1:]):
            add_stack_collisions(g, below, above, "vertical")
        recompute_stack_bases(g, group)
    return delta_from_solution(before, solve(g))


# ---------------------------------------------------------------------------
# Representational re-encoding
# ---------------------------------------------------------------------------

def reencode(scene: Scene, variant: str, params: dict | None = None) -> SceneDelta:
    params = params or {}
    if variant == "axis":
        return _change_axis_scale(scene, params.get("axis", "y"), params["scale"])
    if variant == "channel":
        return _change_channel(scene, params)
    if variant == "mark-type":
        return _change_mark_type(scene, params["target_type"])
    raise UnsupportedConversion(f"unknown representational variant {variant!r}")


def _change_axis_scale(scene: Scene, axis_id: str, scale: str) -> SceneDelta:
    g = scene.graph
    axis = g.axis(axis_id)
    if scale not in ("linear", "log"):
        raise UnsupportedConversion(f"unsupported axis scale {scale!r}")
    if axis.domain is None:
        raise UnsupportedConversion(f"{axis_id}-axis is categorical")
    if scale == "log" and (axis.domain[0] <= 0 or axis.domain[1] <= 0):
        raise LogOfNonPositive(f"log axis needs a positive domain, got {axis.domain}")
    before = _positions(scene)
    axis.scale = scale
    return _regen_and_solve(scene, axis_id, before)


def _regen_and_solve(scene: Scene, axis_id: str, before) -> SceneDelta:
    from .constraints import regenerate_ticks

    g = scene.graph
    regenerate_ticks(g.axis(axis_id))
    delta = delta_from_solution(before, solve(g))
    delta.axis_updates[axis_id] = axis_update_entry(g.axis(axis_id))
    return delta


def _change_channel(scene: Scene, params: dict) -> SceneDelta:
    if params.get("channel") != "color":
        raise UnsupportedConversion("only the color channel can be re-encoded")
    mapping = params.get("mapping")
    if not isinstance(mapping, dict):
        raise IncompleteParams("channel change needs a mapping of series to color")
    delta = SceneDelta()
    for mark_id, node in scene.graph.marks.items():
        color = mapping.get(node.binding.series_key)
        if color is None:
            continue
        hsl = tuple(float(c) for c in color)
        if node.appearance.fill is not None:
            node.appearance = replace(node.appearance, fill=hsl)
            delta.restyled[mark_id] = {"fill": list(hsl)}
        else:
            stroke_w = node.appearance.stroke[1] if node.appearance.stroke else 2.0
            node.appearance = replace(node.appearance, stroke=(hsl, stroke_w))
            delta.restyled[mark_id] = {"stroke": [list(hsl), stroke_w]}
    return delta


@dataclass
class _MarkData:
    id: str
    series: str
    kind: str
    tuples: tuple
    cum_base: tuple
    appearance: Appearance


def _snapshot_marks(scene: Scene) -> list[_MarkData]:
    out = []
    for node in scene.graph.marks.values():
        out.append(_MarkData(node.id, node.binding.series_key, node.kind,
                             node.binding.tuples, node.binding.cum_base, node.appearance))
    return out


def _clear_marks(scene: Scene) -> None:
    g = scene.graph
    g.stacks.clear()
    for mid in list(g.marks):
        node = g.marks.pop(mid)
        pids = set(node.point_ids())
        for cid in [c.id for c in g.constraints.values() if any(p in pids for p in c.points)]:
            del g.constraints[cid]
        for pid in pids:
            del g.points[pid]
    scene.restyles.clear()
    scene.selection = []


def _added_mark_entries(scene: Scene, mark_ids: list[str]) -> list[dict]:
    out = []
    for mid in mark_ids:
        node = scene.graph.marks[mid]
        out.append({
            "id": mid, "kind": node.kind, "series": node.binding.series_key,
            "appearance": node.appearance.to_dict(),
            "structure": node.structure,
            "points": {pid: [scene.graph.points[pid].x, scene.graph.points[pid].y]
                       for pid in node.point_ids()},
        })
    return out


def _line_paint(app: Appearance) -> tuple:
    if app.stroke is not None:
        return app.stroke[0]
    return app.fill or (0.0, 0.0, 0.0)


def _change_mark_type(scene: Scene, target_type: str) -> SceneDelta:
    allowed = _CAPS["mark_type_conversions"].get(scene.chart_type, [])
    if target_type not in allowed:
        raise UnsupportedConversion(
            f"cannot convert a {scene.chart_type} chart to {target_type} "
            f"(supported: {', '.join(allowed) or 'none'})")
    before = _positions(scene)
    old = _snapshot_marks(scene)
    removed = [m.id for m in old]
    if target_type == "line":
        new_ids = _to_lines(scene, old)
    elif target_type == "area":
        new_ids = _to_areas(scene, old)
    else:
        new_ids = _to_bars(scene, old)
    solution = solve(scene.graph)
    delta = delta_from_solution(before, solution)
    delta.removed = removed
    delta.added_marks = _added_mark_entries(scene, new_ids)
    return delta


def _to_lines(scene: Scene, old: list[_MarkData]) -> list[str]:
    g = scene.graph
    new_specs = []
    if old[0].kind == "bar":
        numeric: dict[str, float] = {}
        if g.x_axis.scale == "band":
            for cat in g.x_axis.categories:
                v, _ = parse_tick_value(cat)
                if v is None:
                    raise UnsupportedConversion(
                        f"category {cat!r} is not numeric; a line needs a numeric x-axis")
                numeric[cat] = v
            _convert_band_axis_to_linear(scene, numeric)
        per_series: dict[str, list[_MarkData]] = {}
        for m in old:
            per_series.setdefault(m.series, []).append(m)
        for series, marks in per_series.items():
            tuples = []
            for m in marks:
                xv = m.tuples[0][0]
                if isinstance(xv, str):
                    xv = numeric[xv]
                tuples.append((xv, m.tuples[0][1]))
            tuples.sort(key=lambda t: t[0])
            app = Appearance(fill=None, opacity=1.0, stroke=(_line_paint(marks[0].appearance), 2.0))
            new_specs.append((f"line:{series}", series, tuple(tuples), app))
    else:  # areas -> keep the upper boundary
        for m in old:
            tuples = tuple((xv, base + own) for (xv, own), base in zip(m.tuples, m.cum_base))
            app = Appearance(fill=None, opacity=1.0, stroke=(_line_paint(m.appearance), 2.0))
            new_specs.append((m.id, m.series, tuples, app))
    _clear_marks(scene)
    ids = []
    for mark_id, series, tuples, app in new_specs:
        binding = DataBinding(mark_id, series, tuples, (0.0,) * len(tuples))
        add_line_mark(scene.graph, mark_id, binding, app)
        ids.append(mark_id)
    scene.chart_type = "line"
    scene.arrangement = "none"
    scene.stacking_direction = "none"
    return ids


def _convert_band_axis_to_linear(scene: Scene, numeric: dict) -> None:
    from .constraints import regenerate_ticks

    axis = scene.graph.x_axis
    values = [numeric[c] for c in axis.categories]
    axis.scale = "linear"
    axis.kind = "temporal" if all(1000 <= v <= 3000 for v in values) else "quantitative"
    axis.domain = (min(values), max(values))
    axis.categories = None
    regenerate_ticks(axis)


def _to_areas(scene: Scene, old: list[_MarkData]) -> list[str]:
    if old[0].kind != "line":
        raise UnsupportedConversion("only line charts convert to areas")
    multi = len(old) > 1
    specs = []
    for m in old:
        app = Appearance(fill=_line_paint(m.appearance),
                         opacity=MULTI_AREA_OPACITY if multi else 1.0, stroke=None)
        specs.append((m.id, m.series, m.tuples, app))
    _clear_marks(scene)
    ids = []
    for mark_id, series, tuples, app in specs:
        binding = DataBinding(mark_id, series, tuples, (0.0,) * len(tuples))
        node = add_area_mark(scene.graph, mark_id, binding, app)
        add_axis_seat(scene.graph, node)
        ids.append(mark_id)
    scene.chart_type = "overlapped-area" if multi else "area"
    scene.arrangement = "overlapped" if multi else "none"
    scene.stacking_direction = "none"
    return ids


def _to_bars(scene: Scene, old: list[_MarkData]) -> list[str]:
    g = scene.graph
    if old[0].kind not in ("line", "area"):
        raise UnsupportedConversion("only line and area charts convert to bars")
    series_order = []
    for m in old:
        if m.series not in series_order:
            series_order.append(m.series)
    n_series = len(series_order)
    stacked_source = scene.arrangement == "stacked"
    xs = sorted({xv for m in old for xv, _ in m.tuples})
    px = [g.x_axis.pixel_at(x) for x in xs]
    min_gap = min(b - a for a, b in zip(px, px[1:])) if len(px) > 1 else 40.0
    total = BAR_FILL_RATIO * min_gap
    sub = total if stacked_source else total / n_series
    specs = []
    for m in old:
        j = series_order.index(m.series)
        for i, ((xv, own), base) in enumerate(zip(m.tuples, m.cum_base)):
            offset = -total / 2 if stacked_source else -total / 2 + j * sub
            specs.append({
                "id": f"{m.id}:bar{i}", "series": m.series, "x": xv, "own": own,
                "base": base if stacked_source else 0.0, "offset": offset, "slot": j,
                "appearance": Appearance(fill=_line_paint(m.appearance) if m.kind == "line"
                                         else m.appearance.fill, opacity=1.0, stroke=None),
            })
    _clear_marks(scene)
    ids = []
    by_x: dict[object, list] = {}
    for s in specs:
        binding = DataBinding(s["id"], s["series"], ((s["x"], s["own"]),), (s["base"],))
        left = g.x_axis.pixel_at(s["x"]) + s["offset"]
        node = add_bar_mark(g, s["id"], binding, s["appearance"], left, sub,
                            x_anchor=(s["x"], s["offset"]))
        by_x.setdefault(s["x"], []).append((s["slot"], node))
        ids.append(s["id"])
    direction = "vertical" if stacked_source else "horizontal"
    for xv in sorted(by_x):
        nodes = [n for _, n in sorted(by_x[xv], key=lambda t: t[0])]
        if stacked_source:
            nodes.sort(key=lambda n: n.binding.cum_base[0])
        group = f"xgroup:{xv}"
        for level, node in enumerate(nodes):
            node.stack_group, node.stack_level = group, level
            if direction == "horizontal" or level == 0:
                add_axis_seat(g, node)
        if len(nodes) > 1:
            g.stacks[group] = StackInfo(direction, [n.id for n in nodes])
            for below, above in zip(nodes, nodes[1:]):
                add_stack_collisions(g, below, above, direction)
    if stacked_source and n_series > 1:
        scene.chart_type = "stacked-bar"
        scene.arrangement = "stacked"
        scene.stacking_direction = "vertical"
    elif n_series > 1:
        scene.chart_type = "grouped-bar"
        scene.arrangement = "grouped"
        scene.stacking_direction = "horizontal"
    else:
        scene.chart_type = "bar"
        scene.arrangement = "none"
        scene.stacking_direction = "none"
    return ids


# ---------------------------------------------------------------------------
# Axis fitting
# ---------------------------------------------------------------------------

def fit_axes(scene: Scene) -> SceneDelta:
    """Rescale the quantitative y domain so the tallest mark fills the plot."""
    g = scene.graph
    if not g.marks:
        raise NoVisibleMarks("no visible data marks")
    peak = 0.0
    for node in g.marks.values():
        for (_, own), base in zip(node.binding.tuples, node.binding.cum_base):
            peak = max(peak, base + own)
    if peak <= 0:
        raise NoVisibleMarks("marks have no positive extent")
    target = peak * FIT_HEADROOM
    step = nice_step(target)
    top = math.ceil(target / step - 1e-9) * step
    return _set_domain_and_solve(scene, "y", (0.0, top))
