"""SVG chart parsing into the SimVec abstraction.

SimVec is a compact, style-resolved view of an SVG chart: every shape is
reduced to absolute-coordinate geometry (polygons, polylines, circle
points, text anchors) with final fill/stroke/opacity values.  Class names,
nested transforms and the rest of the SVG plumbing are resolved away so
downstream stages only ever see flat geometry.
"""

from __future__ import annotations

import colorsys
import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace

# Chordal tolerance for flattening curved path segments, in px.
CURVE_TOLERANCE = 0.25

# Geometry may exceed the viewbox by this fraction before parsing fails.
VIEWBOX_MARGIN = 0.05

_SHAPE_TAGS = {"rect", "path", "line", "polyline", "polygon", "circle", "ellipse", "text"}
_CONTAINER_TAGS = {"svg", "g", "a"}
_SKIP_TAGS = {"defs", "style", "title", "desc", "metadata", "clipPath", "marker",
              "symbol", "linearGradient", "radialGradient", "pattern", "filter", "mask"}

# Properties that cascade from group to child.
_INHERITED = ("fill", "stroke", "stroke-width", "font-size", "font-family", "text-anchor")


class MalformedSvg(ValueError):
    """Input is not a parseable SVG chart (bad XML, no viewbox, geometry far outside it)."""


@dataclass(frozen=True)
class ParseWarning:
    """A non-fatal parsing problem, tied to the element that caused it."""

    code: str
    locator: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.code} at {self.locator}: {self.detail}".rstrip(": ")


@dataclass(frozen=True)
class Stroke:
    color: tuple[float, float, float]  # (h, s, l)
    width: float


@dataclass(frozen=True)
class SimVecElement:
    """One style-resolved chart element in absolute coordinates.

    ``points`` holds the polygon/polyline vertices, the circle centre, or
    the text anchor.  Polygons are implicitly closed (first vertex is not
    repeated).  ``rotation`` is only meaningful for text and records any
    residual rotation from the flattened transform, in degrees.
    """

    id: str
    kind: str  # polygon | polyline | circle-point | text
    points: tuple[tuple[float, float], ...]
    fill: tuple[float, float, float] | None = None
    opacity: float = 1.0
    stroke: Stroke | None = None
    radius: float | None = None
    text: str | None = None
    font_size: float | None = None
    rotation: float = 0.0

    def bbox(self) -> tuple[float, float, float, float]:
        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        r = self.radius or 0.0
        return (min(xs) - r, min(ys) - r, max(xs) + r, max(ys) + r)


@dataclass(frozen=True)
class SimVecDocument:
    elements: tuple[SimVecElement, ...]
    viewbox: tuple[float, float, float, float]  # min-x, min-y, width, height
    source_char_count: int
    warnings: tuple[ParseWarning, ...] = field(default=())

    def element(self, element_id: str) -> SimVecElement:
        for el in self.elements:
            if el.id == element_id:
                return el
        raise KeyError(element_id)


# ---------------------------------------------------------------------------
# Colors
# ---------------------------------------------------------------------------

_BASIC_COLORS = {
    "black": (0, 0, 0), "white": (255, 255, 255), "red": (255, 0, 0),
    "green": (0, 128, 0), "blue": (0, 0, 255), "yellow": (255, 255, 0),
    "orange": (255, 165, 0), "purple": (128, 0, 128), "gray": (128, 128, 128),
    "grey": (128, 128, 128), "lightgray": (211, 211, 211), "lightgrey": (211, 211, 211),
    "darkgray": (169, 169, 169), "silver": (192, 192, 192), "steelblue": (70, 130, 180),
    "teal": (0, 128, 128), "navy": (0, 0, 128), "brown": (165, 42, 42),
    "pink": (255, 192, 203), "gold": (255, 215, 0), "crimson": (220, 20, 60),
}


def _named_rgb(name: str) -> tuple[float, float, float] | None:
    rgb = _BASIC_COLORS.get(name)
    if rgb is not None:
        return rgb
    try:  # full CSS table without shipping our own copy of it
        from matplotlib.colors import CSS4_COLORS, to_rgb
    except ImportError:  # pragma: no cover - matplotlib is an optional color table
        return None
    if name in CSS4_COLORS:
        r, g, b = to_rgb(CSS4_COLORS[name])
        return (r * 255.0, g * 255.0, b * 255.0)
    return None


def parse_color(value: str) -> tuple[float, float, float] | None:
    """Parse a CSS color into (h, s, l); returns None for 'none'/'transparent'."""
    value = value.strip().lower()
    if value in ("none", "transparent", ""):
        return None
    m = re.match(r"hsla?\(\s*([-\d.]+)\s*,\s*([-\d.]+)%\s*,\s*([-\d.]+)%", value)
    if m:
        h = float(m.group(1)) % 360.0
        return (h, float(m.group(2)), float(m.group(3)))
    m = re.match(r"rgba?\(\s*([-\d.]+%?)\s*,\s*([-\d.]+%?)\s*,\s*([-\d.]+%?)", value)
    if m:
        chan = []
        for g in m.groups():
            chan.append(float(g[:-1]) * 2.55 if g.endswith("%") else float(g))
        return _rgb_to_hsl(*chan)
    if value.startswith("#"):
        hexpart = value[1:]
        if len(hexpart) == 3:
            hexpart = "".join(c * 2 for c in hexpart)
        if len(hexpart) >= 6:
            r, g, b = (int(hexpart[i:i + 2], 16) for i in (0, 2, 4))
            return _rgb_to_hsl(r, g, b)
        raise ValueError(f"bad hex color {value!r}")
    rgb = _named_rgb(value)
    if rgb is not None:
        return _rgb_to_hsl(*rgb)
    raise ValueError(f"unrecognized color {value!r}")


def _rgb_to_hsl(r: float, g: float, b: float) -> tuple[float, float, float]:
    h, l, s = colorsys.rgb_to_hls(r / 255.0, g / 255.0, b / 255.0)
    return ((h * 360.0) % 360.0, s * 100.0, l * 100.0)


def hsl_to_hex(hsl: tuple[float, float, float]) -> str:
    h, s, l = hsl
    r, g, b = colorsys.hls_to_rgb(h / 360.0, l / 100.0, s / 100.0)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

# Affine matrix as (a, b, c, d, e, f): x' = a*x + c*y + e; y' = b*x + d*y + f.
IDENTITY = (1.0, 0.0, 0.0, 1.0, 0.0, 0.0)


def _mat_mul(m1, m2):
    a1, b1, c1, d1, e1, f1 = m1
    a2, b2, c2, d2, e2, f2 = m2
    return (
        a1 * a2 + c1 * b2, b1 * a2 + d1 * b2,
        a1 * c2 + c1 * d2, b1 * c2 + d1 * d2,
        a1 * e2 + c1 * f2 + e1, b1 * e2 + d1 * f2 + f1,
    )


def _mat_apply(m, x: float, y: float) -> tuple[float, float]:
    a, b, c, d, e, f = m
    return (a * x + c * y + e, b * x + d * y + f)


def parse_transform(text: str | None):
    """Compose an SVG transform attribute into a single affine matrix."""
    matrix = IDENTITY
    if not text:
        return matrix
    for op, args_text in re.findall(r"(\w+)\s*\(([^)]*)\)", text):
        args = [float(v) for v in re.findall(r"[-+0-9.eE]+", args_text)]
        if op == "translate":
            tx = args[0]
            ty = args[1] if len(args) > 1 else 0.0
            m = (1.0, 0.0, 0.0, 1.0, tx, ty)
        elif op == "scale":
            sx = args[0]
            sy = args[1] if len(args) > 1 else sx
            m = (sx, 0.0, 0.0, sy, 0.0, 0.0)
        elif op == "rotate":
            ang = math.radians(args[0])
            ca, sa = math.cos(ang), math.sin(ang)
            m = (ca, sa, -sa, ca, 0.0, 0.0)
            if len(args) == 3:
                cx, cy = args[1], args[2]
                m = _mat_mul(_mat_mul((1, 0, 0, 1, cx, cy), m), (1, 0, 0, 1, -cx, -cy))
        elif op == "matrix" and len(args) == 6:
            m = tuple(args)
        elif op in ("skewX", "skewY"):
            t = math.tan(math.radians(args[0]))
            m = (1.0, 0.0, t, 1.0, 0.0, 0.0) if op == "skewX" else (1.0, t, 0.0, 1.0, 0.0, 0.0)
        else:
            raise MalformedSvg(f"unsupported transform {op!r}")
        matrix = _mat_mul(matrix, m)
    return matrix


def _mat_rotation_deg(m) -> float:
    return math.degrees(math.atan2(m[1], m[0]))


def _mat_mean_scale(m) -> float:
    a, b, c, d = m[0], m[1], m[2], m[3]
    det = abs(a * d - b * c)
    return math.sqrt(det) if det > 0 else math.hypot(a, b)


# ---------------------------------------------------------------------------
# Embedded stylesheet (type/class/id selectors only)
# ---------------------------------------------------------------------------

def _parse_stylesheet(css_text: str) -> list[tuple[int, str, dict[str, str]]]:
    """Return (specificity, selector, declarations) rules in document order."""
    rules: list[tuple[int, str, dict[str, str]]] = []
    css_text = re.sub(r"/\*.*?\*/", "", css_text, flags=re.S)
    for selector_group, body in re.findall(r"([^{}]+)\{([^{}]*)\}", css_text):
        decls: dict[str, str] = {}
        for decl in body.split(";"):
            if ":" in decl:
                k, v = decl.split(":", 1)
                decls[k.strip().lower()] = v.strip()
        for selector in selector_group.split(","):
            selector = selector.strip()
            if not selector or " " in selector or ">" in selector or ":" in selector:
                continue  # unsupported CSS subset; combinators are ignored
            if selector.startswith("#"):
                spec = 2
            elif selector.startswith("."):
                spec = 1
            else:
                spec = 0
            rules.append((spec, selector, decls))
    return rules


def _match_rules(rules, tag: str, classes: list[str], elem_id: str | None) -> dict[str, str]:
    merged: dict[str, str] = {}
    for spec in (0, 1, 2):  # type, then class, then id; later rules win within a tier
        for rule_spec, selector, decls in rules:
            if rule_spec != spec:
                continue
            if spec == 0 and selector == tag:
                merged.update(decls)
            elif spec == 1 and selector[1:] in classes:
                merged.update(decls)
            elif spec == 2 and elem_id and selector[1:] == elem_id:
                merged.update(decls)
    return merged


_STYLE_PROPS = (
    "fill", "stroke", "stroke-width", "opacity", "fill-opacity", "stroke-opacity",
    "display", "visibility", "font-size", "font-family", "text-anchor",
)


def _resolve_style(node: ET.Element, rules, inherited: dict[str, str]) -> dict[str, str]:
    """Cascade: inherited < class/id/type rule < presentation attribute < inline style."""
    style = {k: v for k, v in inherited.items() if k in _INHERITED}
    tag = _localname(node.tag)
    classes = (node.get("class") or "").split()
    style.update(_match_rules(rules, tag, classes, node.get("id")))
    for prop in _STYLE_PROPS:
        val = node.get(prop)
        if val is not None:
            style[prop] = val
    for decl in (node.get("style") or "").split(";"):
        if ":" in decl:
            k, v = decl.split(":", 1)
            style[k.strip().lower()] = v.strip()
    return style


def _localname(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _parse_length(value: str | None, default: float = 0.0) -> float:
    if value is None:
        return default
    m = re.match(r"\s*([-+0-9.eE]+)", value)
    if not m:
        return default
    return float(m.group(1))


# ---------------------------------------------------------------------------
# Path data
# ---------------------------------------------------------------------------

_PATH_TOKEN = re.compile(r"([MmLlHhVvCcSsQqTtAaZz])|([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)")


def _tokenize_path(d: str):
    for cmd, num in _PATH_TOKEN.findall(d):
        yield (cmd, None) if cmd else (None, float(num))


def _flatten_cubic(p0, p1, p2, p3, tol: float, out: list, depth: int = 0) -> None:
    # Control-net distance from the chord bounds the true curve deviation.
    d1 = _point_line_dist(p1, p0, p3)
    d2 = _point_line_dist(p2, p0, p3)
    if (d1 <= tol and d2 <= tol) or depth >= 18:
        out.append(p3)
        return
    mid = lambda a, b: ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
    p01, p12, p23 = mid(p0, p1), mid(p1, p2), mid(p2, p3)
    p012, p123 = mid(p01, p12), mid(p12, p23)
    pm = mid(p012, p123)
    _flatten_cubic(p0, p01, p012, pm, tol, out, depth + 1)
    _flatten_cubic(pm, p123, p23, p3, tol, out, depth + 1)


def _point_line_dist(p, a, b) -> float:
    vx, vy = b[0] - a[0], b[1] - a[1]
    wx, wy = p[0] - a[0], p[1] - a[1]
    seg_len = math.hypot(vx, vy)
    if seg_len < 1e-12:
        return math.hypot(wx, wy)
    return abs(vx * wy - vy * wx) / seg_len


def _arc_to_points(p0, rx, ry, rot_deg, large, sweep, p1, tol):
    """Convert an elliptical arc to line segments (endpoint to centre form)."""
    if rx == 0 or ry == 0:
        return [p1]
    rot = math.radians(rot_deg)
    cr, sr = math.cos(rot), math.sin(rot)
    dx, dy = (p0[0] - p1[0]) / 2.0, (p0[1] - p1[1]) / 2.0
    x1p = cr * dx + sr * dy
    y1p = -sr * dx + cr * dy
    rx, ry = abs(rx), abs(ry)
    lam = (x1p / rx) ** 2 + (y1p / ry) ** 2
    if lam > 1:
        s = math.sqrt(lam)
        rx, ry = rx * s, ry * s
    num = rx * rx * ry * ry - rx * rx * y1p * y1p - ry * ry * x1p * x1p
    den = rx * rx * y1p * y1p + ry * ry * x1p * x1p
    coef = math.sqrt(max(0.0, num / den)) if den > 0 else 0.0
    if large == sweep:
        coef = -coef
    cxp = coef * rx * y1p / ry
    cyp = -coef * ry * x1p / rx
    cx = cr * cxp - sr * cyp + (p0[0] + p1[0]) / 2.0
    cy = sr * cxp + cr * cyp + (p0[1] + p1[1]) / 2.0

    def angle(ux, uy, vx, vy):
        dot = ux * vx + uy * vy
        d = math.hypot(ux, uy) * math.hypot(vx, vy)
        a = math.acos(max(-1.0, min(1.0, dot / d)))
        if ux * vy - uy * vx < 0:
            a = -a
        return a

    theta1 = angle(1, 0, (x1p - cxp) / rx, (y1p - cyp) / ry)
    dtheta = angle((x1p - cxp) / rx, (y1p - cyp) / ry, (-x1p - cxp) / rx, (-y1p - cyp) / ry)
    if not sweep and dtheta > 0:
        dtheta -= 2 * math.pi
    elif sweep and dtheta < 0:
        dtheta += 2 * math.pi
    # Segment count from sagitta bound: s = r(1 - cos(step/2)) <= tol.
    rmax = max(rx, ry)
    step = 2 * math.acos(max(-1.0, min(1.0, 1 - tol / max(rmax, 1e-9))))
    n = max(2, int(math.ceil(abs(dtheta) / max(step, 1e-3))))
    pts = []
    for i in range(1, n + 1):
        t = theta1 + dtheta * i / n
        ex = cx + rx * math.cos(t) * cr - ry * math.sin(t) * sr
        ey = cy + rx * math.cos(t) * sr + ry * math.sin(t) * cr
        pts.append((ex, ey))
    pts[-1] = p1
    return pts


def parse_path_data(d: str, tol: float = CURVE_TOLERANCE) -> list[tuple[list[tuple[float, float]], bool]]:
    """Parse path data into (points, closed) subpaths with curves flattened."""
    tokens = list(_tokenize_path(d))
    pos = 0

    def next_nums(n: int) -> list[float]:
        nonlocal pos
        vals = []
        while len(vals) < n and pos < len(tokens):
            cmd, num = tokens[pos]
            if cmd is not None:
                break
            vals.append(num)
            pos += 1
        if len(vals) < n:
            raise MalformedSvg(f"path data truncated in {d[:40]!r}")
        return vals

    subpaths: list[tuple[list[tuple[float, float]], bool]] = []
    current: list[tuple[float, float]] = []
    cx = cy = 0.0
    sx = sy = 0.0
    last_cmd = ""
    last_ctrl: tuple[float, float] | None = None

    while pos < len(tokens):
        cmd_tok, _ = tokens[pos]
        if cmd_tok is not None:
            cmd = cmd_tok
            pos += 1
        else:
            # Implicit command repetition; M repeats as L.
            cmd = {"M": "L", "m": "l"}.get(last_cmd, last_cmd)
            if not cmd:
                raise MalformedSvg("path data does not start with a command")
        rel = cmd.islower()
        op = cmd.upper()
        if op == "M":
            x, y = next_nums(2)
            if rel:
                x, y = cx + x, cy + y
            if current:
                subpaths.append((current, False))
            current = [(x, y)]
            cx, cy, sx, sy = x, y, x, y
            last_ctrl = None
        elif op == "L":
            x, y = next_nums(2)
            if rel:
                x, y = cx + x, cy + y
            current.append((x, y))
            cx, cy = x, y
            last_ctrl = None
        elif op == "H":
            (x,) = next_nums(1)
            if rel:
                x = cx + x
            current.append((x, cy))
            cx = x
            last_ctrl = None
        elif op == "V":
            (y,) = next_nums(1)
            if rel:
                y = cy + y
            current.append((cx, y))
            cy = y
            last_ctrl = None
        elif op in ("C", "S"):
            if op == "C":
                x1, y1, x2, y2, x, y = next_nums(6)
            else:
                x2, y2, x, y = next_nums(4)
                if last_cmd.upper() in ("C", "S") and last_ctrl is not None:
                    x1, y1 = 2 * cx - last_ctrl[0], 2 * cy - last_ctrl[1]
                else:
                    x1, y1 = cx, cy
                if rel:
                    x1, y1 = x1 - cx, y1 - cy
            if rel:
                x1, y1, x2, y2, x, y = x1 + cx, y1 + cy, x2 + cx, y2 + cy, x + cx, y + cy
            out: list[tuple[float, float]] = []
            _flatten_cubic((cx, cy), (x1, y1), (x2, y2), (x, y), tol, out)
            current.extend(out)
            last_ctrl = (x2, y2)
            cx, cy = x, y
        elif op in ("Q", "T"):
            if op == "Q":
                x1, y1, x, y = next_nums(4)
            else:
                x, y = next_nums(2)
                if last_cmd.upper() in ("Q", "T") and last_ctrl is not None:
                    x1, y1 = 2 * cx - last_ctrl[0], 2 * cy - last_ctrl[1]
                else:
                    x1, y1 = cx, cy
                if rel:
                    x1, y1 = x1 - cx, y1 - cy
            if rel:
                x1, y1, x, y = x1 + cx, y1 + cy, x + cx, y + cy
            # Promote quadratic to cubic.
            c1 = (cx + 2.0 / 3.0 * (x1 - cx), cy + 2.0 / 3.0 * (y1 - cy))
            c2 = (x + 2.0 / 3.0 * (x1 - x), y + 2.0 / 3.0 * (y1 - y))
            out = []
            _flatten_cubic((cx, cy), c1, c2, (x, y), tol, out)
            current.extend(out)
            last_ctrl = (x1, y1)
            cx, cy = x, y
        elif op == "A":
            rx_, ry_, rot, large, sweep, x, y = next_nums(7)
            if rel:
                x, y = cx + x, cy + y
            current.extend(_arc_to_points((cx, cy), rx_, ry_, rot, bool(large), bool(sweep), (x, y), tol))
            cx, cy = x, y
            last_ctrl = None
        elif op == "Z":
            if current:
                subpaths.append((current, True))
            current = []
            cx, cy = sx, sy
            last_ctrl = None
        else:  # pragma: no cover - tokenizer only emits known commands
            raise MalformedSvg(f"unknown path command {cmd!r}")
        last_cmd = cmd
    if current:
        subpaths.append((current, False))
    return subpaths


# ---------------------------------------------------------------------------
# Element conversion
# ---------------------------------------------------------------------------

def _dedupe(points: list[tuple[float, float]], closed: bool) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    for p in points:
        if out and abs(p[0] - out[-1][0]) < 1e-9 and abs(p[1] - out[-1][1]) < 1e-9:
            continue
        out.append(p)
    if closed and len(out) > 1 and abs(out[0][0] - out[-1][0]) < 1e-9 and abs(out[0][1] - out[-1][1]) < 1e-9:
        out.pop()
    return out


class _Parser:
    def __init__(self, svg_text: str):
        self.svg_text = svg_text
        self.warnings: list[ParseWarning] = []
        self.elements: list[SimVecElement] = []
        self.rules: list = []
        self.counter = 0

    def warn(self, code: str, locator: str, detail: str = "") -> None:
        self.warnings.append(ParseWarning(code, locator, detail))

    def run(self) -> SimVecDocument:
        try:
            root = ET.fromstring(self.svg_text)
        except ET.ParseError as exc:
            raise MalformedSvg(f"not parseable XML: {exc}") from exc
        if _localname(root.tag) != "svg":
            raise MalformedSvg("root element is not <svg>")
        viewbox = self._viewbox(root)
        for style_node in root.iter():
            if _localname(style_node.tag) == "style":
                self.rules.extend(_parse_stylesheet(style_node.text or ""))
        self._walk(root, IDENTITY, {}, 1.0)
        doc = SimVecDocument(
            elements=tuple(self.elements),
            viewbox=viewbox,
            source_char_count=len(self.svg_text),
            warnings=tuple(self.warnings),
        )
        self._check_bounds(doc)
        return doc

    def _viewbox(self, root: ET.Element) -> tuple[float, float, float, float]:
        vb = root.get("viewBox")
        if vb:
            parts = [float(v) for v in re.split(r"[\s,]+", vb.strip()) if v]
            if len(parts) == 4 and parts[2] > 0 and parts[3] > 0:
                return tuple(parts)  # type: ignore[return-value]
            raise MalformedSvg(f"bad viewBox {vb!r}")
        w = _parse_length(root.get("width"), 0.0)
        h = _parse_length(root.get("height"), 0.0)
        if w > 0 and h > 0:
            return (0.0, 0.0, w, h)
        raise MalformedSvg("no viewbox derivable (missing viewBox and width/height)")

    def _check_bounds(self, doc: SimVecDocument) -> None:
        mx, my, w, h = doc.viewbox
        pad_x, pad_y = w * VIEWBOX_MARGIN, h * VIEWBOX_MARGIN
        lo_x, hi_x = mx - pad_x, mx + w + pad_x
        lo_y, hi_y = my - pad_y, my + h + pad_y
        for el in doc.elements:
            for (x, y) in el.points:
                if not (lo_x <= x <= hi_x and lo_y <= y <= hi_y):
                    raise MalformedSvg(
                        f"element {el.id} at ({x:.1f},{y:.1f}) lies outside the viewbox + 5% margin"
                    )

    def _next_id(self, node: ET.Element) -> str:
        explicit = node.get("id")
        if explicit:
            return explicit
        self.counter += 1
        return f"e{self.counter}"

    def _walk(self, node: ET.Element, matrix, inherited: dict[str, str], opacity: float) -> None:
        for child in node:
            tag = _localname(child.tag)
            if tag in _SKIP_TAGS:
                continue
            style = _resolve_style(child, self.rules, inherited)
            if style.get("display", "").strip() == "none" or style.get("visibility") == "hidden":
                continue
            own_opacity = opacity * _parse_length(style.get("opacity"), 1.0)
            child_matrix = _mat_mul(matrix, parse_transform(child.get("transform")))
            if tag in _CONTAINER_TAGS:
                self._walk(child, child_matrix, style, own_opacity)
            elif tag in _SHAPE_TAGS:
                self._emit(child, tag, child_matrix, style, own_opacity)
            elif tag in ("image", "use", "foreignObject", "animate", "animateTransform", "switch"):
                self.warn("UnsupportedFeature", self._locator(child), f"<{tag}> skipped")
            # Unknown tags are silently ignored, matching renderer behavior.

    def _locator(self, node: ET.Element) -> str:
        return node.get("id") or f"<{_localname(node.tag)}>"

    def _paint(self, style: dict[str, str], prop: str, default: str, locator: str):
        raw = style.get(prop, default).strip()
        if raw.startswith("url("):
            self.warn("UnsupportedFeature", locator, f"{prop} paint server resolved to gray")
            return (0.0, 0.0, 50.0)
        try:
            return parse_color(raw)
        except ValueError as exc:
            self.warn("UnsupportedFeature", locator, str(exc))
            return None

    def _emit(self, node: ET.Element, tag: str, matrix, style: dict[str, str], opacity: float) -> None:
        locator = self._locator(node)
        elem_id = self._next_id(node)
        if tag == "text":
            self._emit_text(node, elem_id, matrix, style, opacity)
            return

        fill = self._paint(style, "fill", "black", locator)
        stroke_color = self._paint(style, "stroke", "none", locator)
        stroke = None
        if stroke_color is not None:
            width = _parse_length(style.get("stroke-width"), 1.0) * _mat_mean_scale(matrix)
            stroke = Stroke(stroke_color, width)
        fill_opacity = _parse_length(style.get("fill-opacity"), 1.0)
        stroke_opacity = _parse_length(style.get("stroke-opacity"), 1.0)
        final_opacity = max(0.0, min(1.0, opacity * (fill_opacity if fill is not None else stroke_opacity)))
        if final_opacity == 0.0 or (fill is None and stroke is None):
            return  # invisible

        emitted = 0

        def put(kind: str, pts: list[tuple[float, float]], radius: float | None = None) -> None:
            nonlocal emitted
            pts = [_mat_apply(matrix, x, y) for (x, y) in pts]
            if not pts:
                return
            self.elements.append(SimVecElement(
                id=elem_id if emitted == 0 else f"{elem_id}.{emitted}",
                kind=kind,
                points=tuple(pts),
                fill=fill if kind in ("polygon", "circle-point") else None,
                opacity=final_opacity,
                stroke=stroke,
                radius=radius,
            ))
            emitted += 1

        if tag == "rect":
            x = _parse_length(node.get("x"))
            y = _parse_length(node.get("y"))
            w = _parse_length(node.get("width"))
            h = _parse_length(node.get("height"))
            if w <= 0 or h <= 0:
                return
            rx = _parse_length(node.get("rx"))
            ry = _parse_length(node.get("ry"), rx)
            if rx > 0 or ry > 0:
                put("polygon", _rounded_rect_points(x, y, w, h, min(rx, w / 2), min(ry or rx, h / 2)))
            else:
                put("polygon", [(x, y), (x + w, y), (x + w, y + h), (x, y + h)])
        elif tag == "line":
            p = [(_parse_length(node.get("x1")), _parse_length(node.get("y1"))),
                 (_parse_length(node.get("x2")), _parse_length(node.get("y2")))]
            if stroke is not None:
                put("polyline", p)
        elif tag in ("polyline", "polygon"):
            nums = [float(v) for v in re.findall(r"[-+0-9.eE]+", node.get("points", ""))]
            pts = list(zip(nums[0::2], nums[1::2]))
            pts = _dedupe(pts, closed=(tag == "polygon"))
            if len(pts) >= 2:
                put("polygon" if tag == "polygon" else "polyline", pts)
        elif tag == "circle" or tag == "ellipse":
            cx = _parse_length(node.get("cx"))
            cy = _parse_length(node.get("cy"))
            if tag == "circle":
                r = _parse_length(node.get("r"))
                rx_, ry_ = r, r
            else:
                rx_ = _parse_length(node.get("rx"))
                ry_ = _parse_length(node.get("ry"))
            if rx_ <= 0 or ry_ <= 0:
                return
            if abs(rx_ - ry_) <= 0.01 * max(rx_, ry_):
                put("circle-point", [(cx, cy)], radius=rx_ * _mat_mean_scale(matrix))
            else:
                n = max(8, int(math.ceil(math.pi / math.acos(max(-1.0, 1 - CURVE_TOLERANCE / max(rx_, ry_))))))
                pts = [(cx + rx_ * math.cos(2 * math.pi * i / n), cy + ry_ * math.sin(2 * math.pi * i / n))
                       for i in range(n)]
                put("polygon", pts)
        elif tag == "path":
            d = node.get("d", "")
            if not d.strip():
                return
            for pts, closed in parse_path_data(d):
                pts = _dedupe(pts, closed)
                if len(pts) < 2:
                    continue
                if closed:
                    put("polygon", pts)
                else:
                    put("polyline", pts)

    def _emit_text(self, node: ET.Element, elem_id: str, matrix, style: dict[str, str], opacity: float) -> None:
        content = "".join(node.itertext()).strip()
        if not content or opacity <= 0.0:
            return
        x = _parse_length(node.get("x"))
        y = _parse_length(node.get("y"))
        fill = self._paint(style, "fill", "black", self._locator(node)) or (0.0, 0.0, 0.0)
        size = _parse_length(style.get("font-size"), 12.0) * _mat_mean_scale(matrix)
        self.elements.append(SimVecElement(
            id=elem_id,
            kind="text",
            points=(_mat_apply(matrix, x, y),),
            fill=fill,
            opacity=max(0.0, min(1.0, opacity)),
            text=content,
            font_size=size,
            rotation=round(_mat_rotation_deg(matrix), 3),
        ))


def _rounded_rect_points(x, y, w, h, rx, ry):
    pts: list[tuple[float, float]] = []
    corners = [  # centre, start angle (radians), sweeping a quarter turn each
        ((x + w - rx, y + ry), -math.pi / 2),
        ((x + w - rx, y + h - ry), 0.0),
        ((x + rx, y + h - ry), math.pi / 2),
        ((x + rx, y + ry), math.pi),
    ]
    n = 6
    for (cx_, cy_), start in corners:
        for i in range(n + 1):
            a = start + (math.pi / 2) * i / n
            pts.append((cx_ + rx * math.cos(a), cy_ + ry * math.sin(a)))
    return _dedupe(pts, closed=True)


def parse_svg(svg_text: str) -> SimVecDocument:
    """Parse SVG chart markup into a SimVec document.

    Transforms are flattened into absolute coordinates, styles are resolved
    to final values and invisible elements are dropped.  Non-fatal issues
    (unsupported features, odd paints) are reported on ``doc.warnings``.

    Raises MalformedSvg when the input is not XML, has no derivable
    viewbox, or its geometry falls outside the viewbox by more than 5%.
    """
    return _Parser(svg_text).run()


# ---------------------------------------------------------------------------
# Compact serialization
# ---------------------------------------------------------------------------

def _fmt_color(hsl: tuple[float, float, float] | None) -> str:
    if hsl is None:
        return "none"
    return "({:d},{:d},{:d})".format(round(hsl[0]) % 360, round(hsl[1]), round(hsl[2]))


def _fmt_points(points) -> str:
    return ",".join("({:.1f},{:.1f})".format(x, y) for x, y in points)


def serialize_element(el: SimVecElement) -> str:
    parts: list[str]
    if el.kind in ("polygon", "polyline"):
        color = el.fill if el.kind == "polygon" else (el.stroke.color if el.stroke else None)
        parts = [f"{el.kind}: points[{_fmt_points(el.points)}]", f"color: {_fmt_color(color)}"]
        if el.kind == "polygon" and el.stroke is not None:
            parts.append(f"stroke: {_fmt_color(el.stroke.color)}x{el.stroke.width:.1f}")
        if el.kind == "polyline" and el.stroke is not None:
            parts[-1] = f"color: {_fmt_color(el.stroke.color)}x{el.stroke.width:.1f}"
    elif el.kind == "circle-point":
        parts = [
            "circle-point: center({:.1f},{:.1f})".format(*el.points[0]),
            "r: {:.1f}".format(el.radius or 0.0),
            f"color: {_fmt_color(el.fill)}",
        ]
    elif el.kind == "text":
        parts = [
            "text: anchor({:.1f},{:.1f})".format(*el.points[0]),
            "size: {:.1f}".format(el.font_size or 12.0),
        ]
        if abs(el.rotation) > 0.01:
            parts.append("rot: {:.1f}".format(el.rotation))
        if el.fill is not None and _fmt_color(el.fill) != "(0,0,0)":
            parts.append(f"color: {_fmt_color(el.fill)}")
        parts.append('content: "{}"'.format((el.text or "").replace('"', "'")))
    else:  # pragma: no cover - kinds are fixed
        raise ValueError(f"unknown kind {el.kind}")
    if el.opacity < 0.995:
        parts.append("opacity: {:.2f}".format(el.opacity))
    return ", ".join(parts)


def serialize_simvec(doc: SimVecDocument) -> str:
    """Emit the document in the compact one-line-per-element notation."""
    return "\n".join(serialize_element(el) for el in doc.elements)


_LINE_RE = re.compile(r"^(polygon|polyline|circle-point|text): (.*)$")
_COLOR_RE = re.compile(r"\((-?[\d.]+),(-?[\d.]+),(-?[\d.]+)\)")


def _read_color(tok: str) -> tuple[float, float, float] | None:
    if tok == "none":
        return None
    m = _COLOR_RE.match(tok)
    if not m:
        raise ValueError(f"bad color token {tok!r}")
    return (float(m.group(1)), float(m.group(2)), float(m.group(3)))


def deserialize_simvec(text: str, viewbox: tuple[float, float, float, float] | None = None,
                       source_char_count: int = 0) -> SimVecDocument:
    """Parse the compact notation back into a document.

    Element ids are regenerated positionally; the viewbox defaults to the
    bounding box of the geometry when not supplied.
    """
    elements: list[SimVecElement] = []
    for i, line in enumerate(text.splitlines()):
        line = line.strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if not m:
            raise ValueError(f"unparseable SimVec line: {line!r}")
        kind, rest = m.group(1), m.group(2)
        fields: dict[str, str] = {}
        head, *tail = re.split(r",\s(?=[a-z_]+: )", rest)
        fields["_head"] = head
        for part in tail:
            k, v = part.split(": ", 1)
            fields[k] = v
        opacity = float(fields.get("opacity", "1"))
        if kind in ("polygon", "polyline"):
            pts = [(float(a), float(b)) for a, b in re.findall(r"\(([-\d.]+),([-\d.]+)\)", fields["_head"])]
            color_field = fields.get("color", "none")
            stroke = None
            if "x" in color_field and kind == "polyline":
                col_tok, w = color_field.rsplit("x", 1)
                stroke = Stroke(_read_color(col_tok), float(w))
                fill = None
            else:
                fill = _read_color(color_field) if kind == "polygon" else None
                if kind == "polyline" and fields.get("color", "none") != "none":
                    stroke = Stroke(_read_color(color_field), 1.0)
            if kind == "polygon" and "stroke" in fields:
                col_tok, w = fields["stroke"].rsplit("x", 1)
                stroke = Stroke(_read_color(col_tok), float(w))
            elements.append(SimVecElement(
                id=f"e{i + 1}", kind=kind, points=tuple(pts), fill=fill,
                opacity=opacity, stroke=stroke,
            ))
        elif kind == "circle-point":
            cx, cy = map(float, re.match(r"center\(([-\d.]+),([-\d.]+)\)", fields["_head"]).groups())
            elements.append(SimVecElement(
                id=f"e{i + 1}", kind=kind, points=((cx, cy),),
                fill=_read_color(fields.get("color", "none")), opacity=opacity,
                radius=float(fields.get("r", "0")),
            ))
        else:
            ax, ay = map(float, re.match(r"anchor\(([-\d.]+),([-\d.]+)\)", fields["_head"]).groups())
            elements.append(SimVecElement(
                id=f"e{i + 1}", kind="text", points=((ax, ay),),
                fill=_read_color(fields.get("color", "(0,0,0)")), opacity=opacity,
                text=fields.get("content", '""').strip('"'),
                font_size=float(fields.get("size", "12")),
                rotation=float(fields.get("rot", "0")),
            ))
    if viewbox is None:
        if elements:
            xs = [x for el in elements for x, _ in el.points]
            ys = [y for el in elements for _, y in el.points]
            viewbox = (min(xs), min(ys), max(xs) - min(xs) or 1.0, max(ys) - min(ys) or 1.0)
        else:
            viewbox = (0.0, 0.0, 1.0, 1.0)
    return SimVecDocument(tuple(elements), viewbox, source_char_count)


def element_to_dict(el: SimVecElement) -> dict:
    return {
        "id": el.id, "kind": el.kind, "points": [[x, y] for x, y in el.points],
        "fill": list(el.fill) if el.fill else None, "opacity": el.opacity,
        "stroke": {"color": list(el.stroke.color), "width": el.stroke.width} if el.stroke else None,
        "radius": el.radius, "text": el.text, "font_size": el.font_size,
        "rotation": el.rotation,
    }


def element_from_dict(d: dict) -> SimVecElement:
    stroke = Stroke(tuple(d["stroke"]["color"]), d["stroke"]["width"]) if d.get("stroke") else None
    return SimVecElement(
        id=d["id"], kind=d["kind"], points=tuple((p[0], p[1]) for p in d["points"]),
        fill=tuple(d["fill"]) if d.get("fill") else None, opacity=d.get("opacity", 1.0),
        stroke=stroke, radius=d.get("radius"), text=d.get("text"),
        font_size=d.get("font_size"), rotation=d.get("rotation", 0.0),
    )


def translate_document(doc: SimVecDocument, dx: float, dy: float) -> SimVecDocument:
    """Return a copy of the document with all geometry shifted by (dx, dy)."""
    moved = tuple(
        replace(el, points=tuple((x + dx, y + dy) for x, y in el.points))
        for el in doc.elements
    )
    mx, my, w, h = doc.viewbox
    return replace(doc, elements=moved, viewbox=(mx + dx, my + dy, w, h))
