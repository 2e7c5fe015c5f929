"""Constraint-based scene model: control points, constraints, and the solver.

Marks are represented purely by control points.  Four constraint kinds tie
them together:

* ``fixed`` preserves a (dx, dy) offset between two points.  Offsets that
  encode a data extent carry a value annotation and are re-resolved
  through the axis map whenever the axis domain changes.
* ``support`` keeps points on the upper side of an axis line (hard).
* ``collision`` stops stacked marks from interpenetrating (hard).
* ``gravity`` pulls a point toward the pixel of its data value (soft,
  stiffness k), which is what makes marks track axis rescales and fall
  into gaps when a mark below them disappears.

The solver runs iterative relaxation: soft gravity displacements followed
by exact projection of the hard constraints, in a fixed deterministic
order, until the largest per-point displacement of an iteration drops
under epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .identify import AxisScale, ChartModel, DataBinding, Identification
from .simvec import SimVecDocument, Stroke

EPSILON = 0.01
MAX_ITERATIONS = 1000
STIFFNESS = 0.5
FRAME_EVERY = 4


class UnconstrainedMark(ValueError):
    """A data mark ended up with no linkage to any axis."""


class UnknownMark(KeyError):
    pass


class DegenerateDomain(ValueError):
    pass


@dataclass
class ControlPoint:
    id: str
    mark_id: str
    x: float
    y: float
    role_in_mark: str  # "corner-tl" | "upper-3" | "lower-3" | "vertex-2"

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass
class Constraint:
    id: str
    kind: str  # fixed | support | collision | gravity
    points: tuple[str, ...]
    # fixed: offset p2 - p1; value_span=(axis, v_lo, v_hi) re-derives the
    # data-bound component from the axis map at solve time.
    dx: float = 0.0
    dy: float = 0.0
    value_span: tuple[str, float, float] | None = None
    # support: horizontal line of `axis` at data `value`; points stay above.
    # gravity: target pixel = axis.pixel_at(value) + pixel_offset along `component`.
    axis: str | None = None
    value: object | None = None
    component: str | None = None  # gravity: "x" | "y"
    pixel_offset: float = 0.0
    stiffness: float = STIFFNESS
    # collision: direction + resolution rank (stack order, bottom-up).
    direction: str | None = None
    rank: tuple = ()

    def to_dict(self) -> dict:
        d = {"id": self.id, "kind": self.kind, "points": list(self.points)}
        if self.kind == "fixed":
            d.update(dx=self.dx, dy=self.dy,
                     value_span=list(self.value_span) if self.value_span else None)
        elif self.kind == "support":
            d.update(axis=self.axis, value=self.value)
        elif self.kind == "gravity":
            d.update(axis=self.axis, value=self.value, component=self.component,
                     pixel_offset=self.pixel_offset, stiffness=self.stiffness)
        elif self.kind == "collision":
            d.update(direction=self.direction, rank=list(self.rank))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Constraint":
        c = cls(id=d["id"], kind=d["kind"], points=tuple(d["points"]))
        if c.kind == "fixed":
            c.dx, c.dy = d["dx"], d["dy"]
            c.value_span = tuple(d["value_span"]) if d.get("value_span") else None
        elif c.kind == "support":
            c.axis, c.value = d["axis"], d["value"]
        elif c.kind == "gravity":
            c.axis, c.value = d.get("axis"), d.get("value")
            c.component = d["component"]
            c.pixel_offset = d.get("pixel_offset", 0.0)
            c.stiffness = d.get("stiffness", STIFFNESS)
        elif c.kind == "collision":
            c.direction = d["direction"]
            c.rank = tuple(d.get("rank", ()))
        return c


@dataclass
class Appearance:
    fill: tuple[float, float, float] | None
    opacity: float
    stroke: tuple[tuple[float, float, float], float] | None

    def to_dict(self) -> dict:
        return {"fill": list(self.fill) if self.fill else None, "opacity": self.opacity,
                "stroke": [list(self.stroke[0]), self.stroke[1]] if self.stroke else None}

    @classmethod
    def from_dict(cls, d: dict) -> "Appearance":
        return cls(fill=tuple(d["fill"]) if d.get("fill") else None,
                   opacity=d.get("opacity", 1.0),
                   stroke=(tuple(d["stroke"][0]), d["stroke"][1]) if d.get("stroke") else None)


@dataclass
class MarkNode:
    id: str
    kind: str  # bar | area | line | point
    appearance: Appearance
    structure: dict  # bar: corners{tl,tr,br,bl}; area: upper/lower lists; else vertices
    binding: DataBinding
    stack_group: str | None = None
    stack_level: int = 0
    band_category: str | None = None

    def point_ids(self) -> list[str]:
        s = self.structure
        if "corners" in s:
            return [s["corners"][k] for k in ("tl", "tr", "br", "bl")]
        if "upper" in s:
            return list(s["upper"]) + list(s["lower"])
        return list(s["vertices"])

    def to_dict(self) -> dict:
        return {"id": self.id, "kind": self.kind, "appearance": self.appearance.to_dict(),
                "structure": self.structure, "binding": self.binding.to_dict(),
                "stack_group": self.stack_group, "stack_level": self.stack_level,
                "band_category": self.band_category}

    @classmethod
    def from_dict(cls, d: dict) -> "MarkNode":
        return cls(id=d["id"], kind=d["kind"], appearance=Appearance.from_dict(d["appearance"]),
                   structure=d["structure"], binding=DataBinding.from_dict(d["binding"]),
                   stack_group=d.get("stack_group"), stack_level=d.get("stack_level", 0),
                   band_category=d.get("band_category"))


@dataclass
class StackInfo:
    direction: str  # vertical | horizontal
    marks: list[str]  # bottom-to-top (vertical) or left-to-right (horizontal)

    def to_dict(self) -> dict:
        return {"direction": self.direction, "marks": list(self.marks)}


@dataclass
class SolverConfig:
    epsilon: float = EPSILON
    max_iterations: int = MAX_ITERATIONS
    stiffness: float = STIFFNESS
    frame_every: int = FRAME_EVERY


@dataclass
class Solution:
    positions: dict[str, tuple[float, float]]
    iterations: int
    converged: bool
    non_convergent: bool
    residual: float
    constraint_residuals: dict[str, float]
    frames: list[dict[str, tuple[float, float]]]
    clipped: list[str]


class ConstraintGraph:
    """The live scene model: points plus constraints plus mutable axes."""

    def __init__(self, x_axis: AxisScale, y_axis: AxisScale, baseline_value: float = 0.0,
                 config: SolverConfig | None = None):
        self.points: dict[str, ControlPoint] = {}
        self.constraints: dict[str, Constraint] = {}
        self.marks: dict[str, MarkNode] = {}
        self.stacks: dict[str, StackInfo] = {}
        self.x_axis = x_axis
        self.y_axis = y_axis
        self.baseline_value = baseline_value
        self.config = config or SolverConfig()
        self._counter = 0

    # -- construction helpers -------------------------------------------------

    def axis(self, axis_id: str) -> AxisScale:
        return self.x_axis if axis_id == "x" else self.y_axis

    def add_point(self, mark_id: str, role: str, x: float, y: float) -> str:
        pid = f"{mark_id}/{role}"
        self.points[pid] = ControlPoint(pid, mark_id, x, y, role)
        return pid

    def add_constraint(self, **kwargs) -> Constraint:
        self._counter += 1
        c = Constraint(id=f"c{self._counter}", **kwargs)
        self.constraints[c.id] = c
        return c

    def constraints_of_kind(self, kind: str) -> list[Constraint]:
        return [c for c in self.constraints.values() if c.kind == kind]

    def mark_constraints(self, mark_id: str) -> list[Constraint]:
        pids = set(self.marks[mark_id].point_ids())
        return [c for c in self.constraints.values() if any(p in pids for p in c.points)]

    def baseline_pixel(self) -> float:
        return self.y_axis.pixel_at(self.baseline_value)

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": "chartlive/graph@1",
            "points": [{"id": p.id, "mark": p.mark_id, "x": p.x, "y": p.y,
                        "role": p.role_in_mark} for p in self.points.values()],
            "constraints": [c.to_dict() for c in self.constraints.values()],
            "marks": [m.to_dict() for m in self.marks.values()],
            "stacks": {k: v.to_dict() for k, v in self.stacks.items()},
            "x_axis": self.x_axis.to_dict(),
            "y_axis": self.y_axis.to_dict(),
            "baseline_value": self.baseline_value,
            "counter": self._counter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConstraintGraph":
        g = cls(AxisScale.from_dict(d["x_axis"]), AxisScale.from_dict(d["y_axis"]),
                baseline_value=d.get("baseline_value", 0.0))
        for p in d["points"]:
            g.points[p["id"]] = ControlPoint(p["id"], p["mark"], p["x"], p["y"], p["role"])
        for c in d["constraints"]:
            cons = Constraint.from_dict(c)
            g.constraints[cons.id] = cons
        for m in d["marks"]:
            node = MarkNode.from_dict(m)
            g.marks[node.id] = node
        g.stacks = {k: StackInfo(v["direction"], list(v["marks"]))
                    for k, v in d.get("stacks", {}).items()}
        g._counter = d.get("counter", len(g.constraints))
        return g


# ---------------------------------------------------------------------------
# Graph construction
# ---------------------------------------------------------------------------

def _appearance_of(el) -> Appearance:
    stroke = (el.stroke.color, el.stroke.width) if el.stroke else None
    return Appearance(fill=el.fill, opacity=el.opacity, stroke=stroke)


def build_graph(doc: SimVecDocument, ident: Identification,
                bindings: list[DataBinding]) -> ConstraintGraph:
    """Construct the constraint graph for every identified data mark."""
    chart = ident.chart
    g = ConstraintGraph(x_axis=AxisScale.from_dict(chart.x_axis.to_dict()),
                        y_axis=AxisScale.from_dict(chart.y_axis.to_dict()))
    by_mark = {b.mark_id: b for b in bindings}

    for mark_id in ident.data_marks():
        el = doc.element(mark_id)
        kind = ident.mark_kinds[mark_id]
        binding = by_mark[mark_id]
        node = MarkNode(id=mark_id, kind=kind, appearance=_appearance_of(el),
                        structure={}, binding=binding, band_category=binding.category)
        g.marks[mark_id] = node
        if kind == "bar":
            _build_bar(g, el, node)
        elif kind == "area":
            _build_area(g, el, node)
        else:
            _build_vertices(g, el, node)

    _assign_stacks(g, chart)
    _wire_stacks(g)
    _apply_base_supports(g)

    for mark_id, node in g.marks.items():
        linked = any(c.kind in ("support", "gravity") for c in g.mark_constraints(mark_id))
        if not linked:
            raise UnconstrainedMark(f"mark {mark_id} has no axis linkage")
    return g


def _build_bar(g: ConstraintGraph, el, node: MarkNode) -> None:
    x0, y0, x1, y1 = el.bbox()
    corners = {
        "tl": g.add_point(node.id, "corner-tl", x0, y0),
        "tr": g.add_point(node.id, "corner-tr", x1, y0),
        "br": g.add_point(node.id, "corner-br", x1, y1),
        "bl": g.add_point(node.id, "corner-bl", x0, y1),
    }
    node.structure = {"corners": corners}
    w = x1 - x0
    own = node.binding.tuples[0][1]
    # Four fixed edge constraints; the vertical edges encode the bar's value.
    g.add_constraint(kind="fixed", points=(corners["bl"], corners["br"]), dx=w, dy=0.0)
    g.add_constraint(kind="fixed", points=(corners["tl"], corners["tr"]), dx=w, dy=0.0)
    g.add_constraint(kind="fixed", points=(corners["bl"], corners["tl"]),
                     dx=0.0, dy=y0 - y1, value_span=("y", 0.0, own))
    g.add_constraint(kind="fixed", points=(corners["br"], corners["tr"]),
                     dx=0.0, dy=y0 - y1, value_span=("y", 0.0, own))
    g.add_constraint(kind="gravity", points=(corners["tl"], corners["tr"]),
                     axis="y", value=own, component="y")


def _build_area(g: ConstraintGraph, el, node: MarkNode) -> None:
    from .identify import split_area_boundary

    upper_pts, lower_pts = split_area_boundary(el)
    upper_ids, lower_ids = [], []
    for i, ((ux, uy), (lx, ly)) in enumerate(zip(upper_pts, lower_pts)):
        uid = g.add_point(node.id, f"upper-{i}", ux, uy)
        lid = g.add_point(node.id, f"lower-{i}", lx, ly)
        upper_ids.append(uid)
        lower_ids.append(lid)
        own = node.binding.tuples[i][1]
        xv = node.binding.tuples[i][0]
        # Each x-column is a rigid pair whose height encodes the own value.
        g.add_constraint(kind="fixed", points=(lid, uid), dx=0.0, dy=uy - ly,
                         value_span=("y", 0.0, own))
        g.add_constraint(kind="gravity", points=(uid,), axis="y", value=own, component="y")
        g.add_constraint(kind="gravity", points=(uid,), axis="x", value=xv, component="x")
    node.structure = {"upper": upper_ids, "lower": lower_ids}


def _build_vertices(g: ConstraintGraph, el, node: MarkNode) -> None:
    ids = []
    for i, ((px, py), (xv, yv)) in enumerate(zip(el.points, node.binding.tuples)):
        pid = g.add_point(node.id, f"vertex-{i}", px, py)
        ids.append(pid)
        g.add_constraint(kind="gravity", points=(pid,), axis="x", value=xv, component="x")
        g.add_constraint(kind="gravity", points=(pid,), axis="y", value=yv, component="y")
    node.structure = {"vertices": ids}


def _assign_stacks(g: ConstraintGraph, chart: ChartModel) -> None:
    if chart.arrangement == "stacked":
        if chart.chart_type == "stacked-bar":
            bands: dict[str, list[MarkNode]] = {}
            for node in g.marks.values():
                bands.setdefault(node.band_category or "", []).append(node)
            for cat, nodes in bands.items():
                nodes.sort(key=lambda n: n.binding.cum_base[0])
                group = f"band:{cat}"
                for level, n in enumerate(nodes):
                    n.stack_group, n.stack_level = group, level
                g.stacks[group] = StackInfo("vertical", [n.id for n in nodes])
        else:  # stacked-area
            nodes = sorted(g.marks.values(), key=lambda n: sum(n.binding.cum_base))
            for level, n in enumerate(nodes):
                n.stack_group, n.stack_level = "stack", level
            g.stacks["stack"] = StackInfo("vertical", [n.id for n in nodes])
    elif chart.arrangement == "grouped":
        bands: dict[str, list[MarkNode]] = {}
        for node in g.marks.values():
            bands.setdefault(node.band_category or "", []).append(node)
        for cat, nodes in bands.items():
            nodes.sort(key=lambda n: _mark_min_x(g, n))
            group = f"band:{cat}"
            for level, n in enumerate(nodes):
                n.stack_group, n.stack_level = group, level
            g.stacks[group] = StackInfo("horizontal", [n.id for n in nodes])


def _mark_min_x(g: ConstraintGraph, node: MarkNode) -> float:
    return min(g.points[p].x for p in node.point_ids())


def _wire_stacks(g: ConstraintGraph) -> None:
    for group, info in sorted(g.stacks.items()):
        ordered = [g.marks[m] for m in info.marks]
        for below, above in zip(ordered, ordered[1:]):
            _add_collisions(g, below, above, info.direction)


def _add_collisions(g: ConstraintGraph, below: MarkNode, above: MarkNode, direction: str) -> None:
    rank = (below.stack_group or "", below.stack_level)
    if direction == "horizontal":
        g.add_constraint(kind="collision", direction="horizontal",
                         points=(above.structure["corners"]["bl"],
                                 below.structure["corners"]["br"]),
                         rank=rank)
        return
    if below.kind == "bar":
        g.add_constraint(kind="collision", direction="vertical",
                         points=(above.structure["corners"]["bl"],
                                 below.structure["corners"]["tl"]),
                         rank=rank)
    else:  # per-column contacts between area layers, matched by x
        below_upper = below.structure["upper"]
        above_lower = above.structure["lower"]
        for al in above_lower:
            ax = g.points[al].x
            match = min(below_upper, key=lambda bu: abs(g.points[bu].x - ax))
            if abs(g.points[match].x - ax) <= 1.0:
                g.add_constraint(kind="collision", direction="vertical",
                                 points=(al, match), rank=rank)


def _apply_base_supports(g: ConstraintGraph) -> None:
    """Bottom-of-stack marks (and unstacked bars/areas) rest on the x-axis."""
    for node in sorted(g.marks.values(), key=lambda n: n.id):
        if node.kind in ("line", "point"):
            continue
        if node.stack_group is not None and node.stack_level > 0:
            continue
        _add_axis_seat(g, node)


def _add_axis_seat(g: ConstraintGraph, node: MarkNode) -> None:
    base = g.baseline_value
    if node.kind == "bar":
        c = node.structure["corners"]
        g.add_constraint(kind="support", points=(c["bl"], c["br"]), axis="x", value=base)
    elif node.kind == "area":
        for lid in node.structure["lower"]:
            g.add_constraint(kind="support", points=(lid,), axis="x", value=base)
            g.add_constraint(kind="gravity", points=(lid,), axis="y", value=base, component="y")


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------

def _resolve_fixed_offsets(g: ConstraintGraph) -> dict[str, tuple[float, float]]:
    """Current (dx, dy) for every fixed constraint, data spans re-resolved."""
    offsets = {}
    for c in g.constraints_of_kind("fixed"):
        dx, dy = c.dx, c.dy
        if c.value_span is not None:
            axis_id, v_lo, v_hi = c.value_span
            axis = g.axis(axis_id)
            span = axis.pixel_at(v_hi) - axis.pixel_at(v_lo)
            if axis_id == "y":
                dy = span
            else:
                dx = span
        offsets[c.id] = (dx, dy)
    return offsets


def _rigid_components(g: ConstraintGraph, offsets) -> list[dict]:
    """Connected components of the fixed-constraint graph with point offsets."""
    adj: dict[str, list[tuple[str, float, float]]] = {pid: [] for pid in g.points}
    for c in g.constraints_of_kind("fixed"):
        p1, p2 = c.points
        dx, dy = offsets[c.id]
        adj[p1].append((p2, dx, dy))
        adj[p2].append((p1, -dx, -dy))
    seen: set[str] = set()
    components = []
    for pid in g.points:  # insertion order keeps this deterministic
        if pid in seen:
            continue
        offs = {pid: (0.0, 0.0)}
        queue = [pid]
        seen.add(pid)
        while queue:
            cur = queue.pop()
            ox, oy = offs[cur]
            for nxt, dx, dy in adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    offs[nxt] = (ox + dx, oy + dy)
                    queue.append(nxt)
        components.append({"members": sorted(offs), "offsets": offs})
    return components


def solve(g: ConstraintGraph) -> Solution:
    """Relax the graph to equilibrium and update point positions in place."""
    cfg = g.config
    pos: dict[str, list[float]] = {pid: [p.x, p.y] for pid, p in g.points.items()}

    offsets = _resolve_fixed_offsets(g)
    components = _rigid_components(g, offsets)
    comp_of: dict[str, int] = {}
    for idx, comp in enumerate(components):
        for pid in comp["members"]:
            comp_of[pid] = idx

    gravity = sorted(g.constraints_of_kind("gravity"), key=lambda c: c.id)
    supports = sorted(g.constraints_of_kind("support"), key=lambda c: c.id)
    collisions = sorted(g.constraints_of_kind("collision"), key=lambda c: (c.rank, c.id))

    def resolve_gravity_target(c: Constraint) -> float:
        if c.axis is None:
            return float(c.value) + c.pixel_offset
        return g.axis(c.axis).pixel_at(c.value) + c.pixel_offset

    def project_fixed() -> None:
        for comp in components:
            members = comp["members"]
            if len(members) == 1:
                continue
            offs = comp["offsets"]
            tx = ty = 0.0
            for pid in members:
                ox, oy = offs[pid]
                tx += pos[pid][0] - ox
                ty += pos[pid][1] - oy
            tx /= len(members)
            ty /= len(members)
            for pid in members:
                ox, oy = offs[pid]
                pos[pid][0] = tx + ox
                pos[pid][1] = ty + oy

    def shift_component(pid: str, dx: float, dy: float) -> None:
        for member in components[comp_of[pid]]["members"]:
            pos[member][0] += dx
            pos[member][1] += dy

    frames: list[dict[str, tuple[float, float]]] = []
    residual = 0.0
    iterations = 0
    converged = False
    for iteration in range(cfg.max_iterations):
        iterations = iteration + 1
        start = {pid: (xy[0], xy[1]) for pid, xy in pos.items()}

        for c in gravity:
            target = resolve_gravity_target(c)
            idx = 0 if c.component == "x" else 1
            for pid in c.points:
                pos[pid][idx] += c.stiffness * (target - pos[pid][idx])

        project_fixed()

        for c in supports:
            line = g.axis("y").pixel_at(c.value)
            violation = max(pos[pid][1] - line for pid in c.points)
            if violation > 0.0:
                shift_component(c.points[0], 0.0, -violation)

        for c in collisions:
            pa, pb = c.points
            if c.direction == "vertical":
                violation = pos[pa][1] - pos[pb][1]
                if violation > 0.0:
                    shift_component(pa, 0.0, -violation)
            else:
                violation = pos[pb][0] - pos[pa][0]
                if violation > 0.0:
                    shift_component(pa, violation, 0.0)

        residual = 0.0
        for pid, (sx, sy) in start.items():
            d = max(abs(pos[pid][0] - sx), abs(pos[pid][1] - sy))
            if d > residual:
                residual = d
        if iteration % cfg.frame_every == 0:
            frames.append({pid: (xy[0], xy[1]) for pid, xy in pos.items()})
        if residual < cfg.epsilon:
            converged = True
            break

    final = {pid: (xy[0], xy[1]) for pid, xy in pos.items()}
    frames.append(final)
    for pid, (x, y) in final.items():
        g.points[pid].x = x
        g.points[pid].y = y

    return Solution(
        positions=final,
        iterations=iterations,
        converged=converged,
        non_convergent=not converged and residual > 10 * cfg.epsilon,
        residual=residual,
        constraint_residuals=_constraint_residuals(g, final, offsets),
        frames=frames,
        clipped=_clipped_points(g, final),
    )


def _constraint_residuals(g: ConstraintGraph, pos, offsets) -> dict[str, float]:
    worst = {"fixed": 0.0, "support": 0.0, "collision": 0.0}
    for c in g.constraints.values():
        if c.kind == "fixed":
            p1, p2 = c.points
            dx, dy = offsets[c.id]
            r = max(abs(pos[p2][0] - pos[p1][0] - dx), abs(pos[p2][1] - pos[p1][1] - dy))
            worst["fixed"] = max(worst["fixed"], r)
        elif c.kind == "support":
            line = g.axis("y").pixel_at(c.value)
            r = max(0.0, max(pos[p][1] - line for p in c.points))
            worst["support"] = max(worst["support"], r)
        elif c.kind == "collision":
            pa, pb = c.points
            r = pos[pa][1] - pos[pb][1] if c.direction == "vertical" else pos[pb][0] - pos[pa][0]
            worst["collision"] = max(worst["collision"], max(0.0, r))
    return worst


def _clipped_points(g: ConstraintGraph, pos) -> list[str]:
    x_lo, x_hi = sorted(g.x_axis.pixel_range)
    y_lo, y_hi = sorted(g.y_axis.pixel_range)
    out = []
    for pid, (x, y) in pos.items():
        if not (x_lo - EPSILON <= x <= x_hi + EPSILON and y_lo - EPSILON <= y <= y_hi + EPSILON):
            out.append(pid)
    return out


# ---------------------------------------------------------------------------
# Mutations
# ---------------------------------------------------------------------------

def remove_mark(g: ConstraintGraph, mark_id: str) -> None:
    """Delete a mark and rewire its stack neighbours.

    A removed middle layer leaves a fresh collision joining its neighbours;
    a removed bottom layer passes its axis seat (support plus axis-ward
    gravity) to the layer above.
    """
    node = g.marks.get(mark_id)
    if node is None:
        raise UnknownMark(mark_id)
    pids = set(node.point_ids())
    for cid in [c.id for c in g.constraints.values() if any(p in pids for p in c.points)]:
        del g.constraints[cid]
    for pid in pids:
        del g.points[pid]
    del g.marks[mark_id]

    group = node.stack_group
    if group and group in g.stacks:
        info = g.stacks[group]
        idx = info.marks.index(mark_id)
        info.marks.remove(mark_id)
        if not info.marks:
            del g.stacks[group]
        else:
            below = g.marks[info.marks[idx - 1]] if idx > 0 else None
            above = g.marks[info.marks[idx]] if idx < len(info.marks) else None
            for level, mid in enumerate(info.marks):
                g.marks[mid].stack_level = level
            if below is not None and above is not None:
                _add_collisions(g, below, above, info.direction)
            elif below is None and above is not None and info.direction == "vertical":
                _add_axis_seat(g, above)
            if info.direction == "vertical":
                recompute_stack_bases(g, group)


def recompute_stack_bases(g: ConstraintGraph, group: str) -> None:
    """Refresh binding cum_base fields after stack membership/order changes."""
    from dataclasses import replace as _replace

    info = g.stacks.get(group)
    if info is None:
        return
    running: dict[int, float] = {}
    for mid in info.marks:
        node = g.marks[mid]
        new_bases = []
        for i, (_, own) in enumerate(node.binding.tuples):
            base = running.get(i, 0.0)
            new_bases.append(base)
            running[i] = base + own
        node.binding = _replace(node.binding, cum_base=tuple(new_bases))


def clear_stack_bases(g: ConstraintGraph, mark_ids) -> None:
    from dataclasses import replace as _replace

    for mid in mark_ids:
        node = g.marks[mid]
        node.binding = _replace(node.binding, cum_base=(0.0,) * len(node.binding.tuples))


# ---------------------------------------------------------------------------
# Mark creation from data (used by re-encoding)
# ---------------------------------------------------------------------------

def add_bar_mark(g: ConstraintGraph, mark_id: str, binding: DataBinding,
                 appearance: Appearance, left: float, width: float,
                 x_anchor: tuple[object, float] | None = None,
                 stack_group: str | None = None, stack_level: int = 0,
                 band_category: str | None = None) -> MarkNode:
    """Create a bar from its binding; geometry comes from the axis maps."""
    own = binding.tuples[0][1]
    base = binding.cum_base[0]
    top = g.y_axis.pixel_at(base + own)
    bottom = g.y_axis.pixel_at(base)
    node = MarkNode(id=mark_id, kind="bar", appearance=appearance, structure={},
                    binding=binding, stack_group=stack_group, stack_level=stack_level,
                    band_category=band_category)
    g.marks[mark_id] = node
    corners = {
        "tl": g.add_point(mark_id, "corner-tl", left, top),
        "tr": g.add_point(mark_id, "corner-tr", left + width, top),
        "br": g.add_point(mark_id, "corner-br", left + width, bottom),
        "bl": g.add_point(mark_id, "corner-bl", left, bottom),
    }
    node.structure = {"corners": corners}
    g.add_constraint(kind="fixed", points=(corners["bl"], corners["br"]), dx=width, dy=0.0)
    g.add_constraint(kind="fixed", points=(corners["tl"], corners["tr"]), dx=width, dy=0.0)
    g.add_constraint(kind="fixed", points=(corners["bl"], corners["tl"]),
                     dx=0.0, dy=top - bottom, value_span=("y", 0.0, own))
    g.add_constraint(kind="fixed", points=(corners["br"], corners["tr"]),
                     dx=0.0, dy=top - bottom, value_span=("y", 0.0, own))
    g.add_constraint(kind="gravity", points=(corners["tl"], corners["tr"]),
                     axis="y", value=own, component="y")
    if x_anchor is not None:
        g.add_constraint(kind="gravity", points=(corners["bl"], corners["tl"]),
                         axis="x", value=x_anchor[0], component="x",
                         pixel_offset=x_anchor[1])
    return node


def add_area_mark(g: ConstraintGraph, mark_id: str, binding: DataBinding,
                  appearance: Appearance, stack_group: str | None = None,
                  stack_level: int = 0) -> MarkNode:
    node = MarkNode(id=mark_id, kind="area", appearance=appearance, structure={},
                    binding=binding, stack_group=stack_group, stack_level=stack_level)
    g.marks[mark_id] = node
    upper_ids, lower_ids = [], []
    for i, ((xv, own), base) in enumerate(zip(binding.tuples, binding.cum_base)):
        px = g.x_axis.pixel_at(xv)
        uy = g.y_axis.pixel_at(base + own)
        ly = g.y_axis.pixel_at(base)
        uid = g.add_point(mark_id, f"upper-{i}", px, uy)
        lid = g.add_point(mark_id, f"lower-{i}", px, ly)
        upper_ids.append(uid)
        lower_ids.append(lid)
        g.add_constraint(kind="fixed", points=(lid, uid), dx=0.0, dy=uy - ly,
                         value_span=("y", 0.0, own))
        g.add_constraint(kind="gravity", points=(uid,), axis="y", value=own, component="y")
        g.add_constraint(kind="gravity", points=(uid,), axis="x", value=xv, component="x")
    node.structure = {"upper": upper_ids, "lower": lower_ids}
    return node


def add_line_mark(g: ConstraintGraph, mark_id: str, binding: DataBinding,
                  appearance: Appearance, kind: str = "line") -> MarkNode:
    node = MarkNode(id=mark_id, kind=kind, appearance=appearance, structure={},
                    binding=binding)
    g.marks[mark_id] = node
    ids = []
    for i, (xv, yv) in enumerate(binding.tuples):
        pid = g.add_point(mark_id, f"vertex-{i}",
                          g.x_axis.pixel_at(xv), g.y_axis.pixel_at(yv))
        ids.append(pid)
        g.add_constraint(kind="gravity", points=(pid,), axis="x", value=xv, component="x")
        g.add_constraint(kind="gravity", points=(pid,), axis="y", value=yv, component="y")
    node.structure = {"vertices": ids}
    return node


def add_axis_seat(g: ConstraintGraph, node: MarkNode) -> None:
    _add_axis_seat(g, node)


def add_stack_collisions(g: ConstraintGraph, below: MarkNode, above: MarkNode,
                         direction: str) -> None:
    _add_collisions(g, below, above, direction)


def nice_step(span: float, max_ticks: int = 8) -> float:
    """Smallest 1/2/5*10^n step that covers the span with at most max_ticks."""
    if span <= 0:
        raise DegenerateDomain(f"span {span} is not positive")
    exp = math.floor(math.log10(span / max_ticks)) if span > 0 else 0
    candidates = []
    for e in range(exp - 1, exp + 3):
        for m in (1.0, 2.0, 5.0):
            candidates.append(m * 10 ** e)
    for step in sorted(candidates):
        if span / step <= max_ticks - 1:
            return step
    return candidates[-1]


def nice_ticks(d0: float, d1: float) -> list[float]:
    """4-8 ticks at 1/2/5-multiple steps covering [d0, d1]."""
    step = nice_step(d1 - d0)
    ticks = []
    v = math.ceil(d0 / step - 1e-9) * step
    while v <= d1 + 1e-9:
        ticks.append(round(v, 12))
        v += step
    if len(ticks) < 2:
        ticks = [d0, d1]
    return ticks


def log_ticks(d0: float, d1: float) -> list[float]:
    lo = math.ceil(math.log10(d0) - 1e-9)
    hi = math.floor(math.log10(d1) + 1e-9)
    decades = [10.0 ** e for e in range(lo, hi + 1)]
    if len(decades) >= 4:
        return decades
    ticks = sorted({m * 10.0 ** e for e in range(lo - 1, hi + 1) for m in (1.0, 2.0, 5.0)})
    return [t for t in ticks if d0 - 1e-9 <= t <= d1 + 1e-9]


def _format_tick(v: float) -> str:
    return f"{v:g}"


def regenerate_ticks(axis: AxisScale) -> None:
    d0, d1 = axis.domain
    lo, hi = min(d0, d1), max(d0, d1)
    values = log_ticks(lo, hi) if axis.scale == "log" else nice_ticks(lo, hi)
    axis.ticks = [(axis.pixel_at(v), _format_tick(v), v) for v in values]


def set_axis_domain(g: ConstraintGraph, axis_id: str, new_domain: tuple[float, float]) -> None:
    """Swap a quantitative axis domain; constraints re-resolve on next solve."""
    axis = g.axis(axis_id)
    if axis.scale == "band" or axis.kind == "categorical":
        raise DegenerateDomain(f"{axis_id}-axis is categorical; its domain cannot be rescaled")
    d0, d1 = float(new_domain[0]), float(new_domain[1])
    if d0 == d1:
        raise DegenerateDomain("domain endpoints coincide")
    if axis.scale == "log" and (d0 <= 0 or d1 <= 0):
        raise DegenerateDomain("log axis domain must stay positive")
    axis.domain = (d0, d1)
    regenerate_ticks(axis)


def translate_graph(g: ConstraintGraph, dx: float, dy: float) -> None:
    """Shift the whole scene: axis pixel ranges and every control point."""
    for axis, delta in ((g.x_axis, dx), (g.y_axis, dy)):
        axis.pixel_range = (axis.pixel_range[0] + delta, axis.pixel_range[1] + delta)
        axis.ticks = [(p + delta, lab, v) for p, lab, v in axis.ticks]
    for p in g.points.values():
        p.x += dx
        p.y += dy
