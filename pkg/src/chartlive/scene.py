"""The live scene (constraint graph plus chart furniture) and scene deltas.

A SceneDelta is the only thing the modification engine hands to callers:
a serializable, replayable diff that a renderer applies without knowing
anything about constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .constraints import ConstraintGraph, Solution
from .identify import DataBinding, Identification
from .simvec import SimVecDocument, element_from_dict, element_to_dict

SCENE_SCHEMA = "chartlive/scene@1"
DELTA_SCHEMA = "chartlive/delta@1"


@dataclass
class Widget:
    id: str
    kind: str  # only "button" for now
    label: str

    def to_dict(self) -> dict:
        return {"id": self.id, "kind": self.kind, "label": self.label}


@dataclass
class Scene:
    graph: ConstraintGraph
    chart_type: str
    arrangement: str
    stacking_direction: str
    viewbox: tuple[float, float, float, float]
    reference_elements: list[dict] = field(default_factory=list)  # element dict + role
    widgets: list[Widget] = field(default_factory=list)
    annotations: list[dict] = field(default_factory=list)
    restyles: dict[str, dict] = field(default_factory=dict)
    selection: list[str] = field(default_factory=list)
    _widget_counter: int = 0

    @classmethod
    def from_identification(cls, doc: SimVecDocument, ident: Identification,
                            graph: ConstraintGraph) -> "Scene":
        reference = []
        for el in doc.elements:
            role = ident.roles[el.id].role
            if role == "data-mark":
                continue
            entry = element_to_dict(el)
            entry["role"] = role
            reference.append(entry)
        return cls(graph=graph, chart_type=ident.chart.chart_type,
                   arrangement=ident.chart.arrangement,
                   stacking_direction=ident.chart.stacking_direction,
                   viewbox=doc.viewbox, reference_elements=reference)

    def mark_ids(self) -> list[str]:
        return list(self.graph.marks)

    def bindings(self) -> list[DataBinding]:
        return [m.binding for m in self.graph.marks.values()]

    def widget(self, widget_id: str) -> Widget | None:
        for w in self.widgets:
            if w.id == widget_id:
                return w
        return None

    def create_widget(self, kind: str, label: str) -> Widget:
        self._widget_counter += 1
        w = Widget(id=f"w{self._widget_counter}", kind=kind, label=label)
        self.widgets.append(w)
        return w

    def mark_bbox(self, mark_id: str) -> tuple[float, float, float, float]:
        pts = [self.graph.points[p] for p in self.graph.marks[mark_id].point_ids()]
        r = 0.0
        if self.graph.marks[mark_id].kind == "point":
            r = 4.0
        xs = [p.x for p in pts]
        ys = [p.y for p in pts]
        return (min(xs) - r, min(ys) - r, max(xs) + r, max(ys) + r)

    def to_dict(self) -> dict:
        return {
            "schema": SCENE_SCHEMA,
            "chart_type": self.chart_type,
            "arrangement": self.arrangement,
            "stacking_direction": self.stacking_direction,
            "viewbox": list(self.viewbox),
            "graph": self.graph.to_dict(),
            "reference_elements": self.reference_elements,
            "widgets": [w.to_dict() for w in self.widgets],
            "annotations": self.annotations,
            "restyles": self.restyles,
            "selection": list(self.selection),
            "widget_counter": self._widget_counter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        if d.get("schema") != SCENE_SCHEMA:
            raise ValueError(f"unknown scene schema {d.get('schema')!r}")
        scene = cls(graph=ConstraintGraph.from_dict(d["graph"]),
                    chart_type=d["chart_type"], arrangement=d["arrangement"],
                    stacking_direction=d["stacking_direction"],
                    viewbox=tuple(d["viewbox"]),
                    reference_elements=d.get("reference_elements", []),
                    widgets=[Widget(**w) for w in d.get("widgets", [])],
                    annotations=d.get("annotations", []),
                    restyles=d.get("restyles", {}),
                    selection=list(d.get("selection", [])))
        scene._widget_counter = d.get("widget_counter", len(scene.widgets))
        return scene

    def reference_element(self, element_id: str):
        for entry in self.reference_elements:
            if entry["id"] == element_id:
                return element_from_dict(entry)
        return None


@dataclass
class SceneDelta:
    """Renderable diff produced by executing modifications on a scene."""

    moved: dict[str, tuple[float, float]] = field(default_factory=dict)
    restyled: dict[str, dict] = field(default_factory=dict)
    removed: list[str] = field(default_factory=list)
    added_annotations: list[dict] = field(default_factory=list)
    added_widgets: list[dict] = field(default_factory=list)
    added_marks: list[dict] = field(default_factory=list)
    axis_updates: dict[str, dict] = field(default_factory=dict)
    animation_frames: list[dict[str, tuple[float, float]]] = field(default_factory=list)
    clipped: list[str] = field(default_factory=list)
    steps: list[dict] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.moved or self.restyled or self.removed or self.added_annotations
                    or self.added_widgets or self.added_marks or self.axis_updates)

    def merge(self, other: "SceneDelta") -> None:
        """Fold a later delta into this one (later values win)."""
        self.moved.update(other.moved)
        for mark, style in other.restyled.items():
            self.restyled.setdefault(mark, {}).update(style)
        for mark in other.removed:
            if mark not in self.removed:
                self.removed.append(mark)
            self.moved.pop(mark, None)
            self.restyled.pop(mark, None)
        self.moved = {pid: p for pid, p in self.moved.items()
                      if pid.split("/")[0] not in set(self.removed)}
        self.added_annotations.extend(other.added_annotations)
        self.added_widgets.extend(other.added_widgets)
        self.added_marks.extend(other.added_marks)
        self.axis_updates.update(other.axis_updates)
        self.animation_frames.extend(other.animation_frames)
        self.clipped = other.clipped if other.clipped or other.moved else self.clipped
        self.steps.extend(other.steps)

    def to_dict(self) -> dict:
        return {
            "schema": DELTA_SCHEMA,
            "moved": {pid: [x, y] for pid, (x, y) in self.moved.items()},
            "restyled": self.restyled,
            "removed": list(self.removed),
            "added_annotations": self.added_annotations,
            "added_widgets": self.added_widgets,
            "added_marks": self.added_marks,
            "axis_updates": self.axis_updates,
            "animation_frames": [{pid: [x, y] for pid, (x, y) in f.items()}
                                 for f in self.animation_frames],
            "clipped": list(self.clipped),
            "steps": self.steps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneDelta":
        return cls(
            moved={pid: (p[0], p[1]) for pid, p in d.get("moved", {}).items()},
            restyled=d.get("restyled", {}),
            removed=list(d.get("removed", [])),
            added_annotations=d.get("added_annotations", []),
            added_widgets=d.get("added_widgets", []),
            added_marks=d.get("added_marks", []),
            axis_updates=d.get("axis_updates", {}),
            animation_frames=[{pid: (p[0], p[1]) for pid, p in f.items()}
                              for f in d.get("animation_frames", [])],
            clipped=list(d.get("clipped", [])),
            steps=list(d.get("steps", [])),
        )


def delta_from_solution(before: dict[str, tuple[float, float]], solution: Solution,
                        tol: float = 1e-9) -> SceneDelta:
    """Delta capturing the points a solve actually moved."""
    moved = {}
    for pid, (x, y) in solution.positions.items():
        old = before.get(pid)
        if old is None or abs(old[0] - x) > tol or abs(old[1] - y) > tol:
            moved[pid] = (x, y)
    frames = solution.frames if moved else []
    return SceneDelta(moved=moved, animation_frames=frames, clipped=solution.clipped)


def axis_update_entry(axis) -> dict:
    return {
        "domain": list(axis.domain) if axis.domain else None,
        "scale": axis.scale,
        "kind": axis.kind,
        "categories": axis.categories,
        "ticks": [[p, lab, v] for p, lab, v in axis.ticks],
    }
