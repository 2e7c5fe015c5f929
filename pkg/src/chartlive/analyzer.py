"""Natural-language command analysis: translate, correct, guide.

Translation prefers the agent backend when one is configured and always
falls back to a deterministic pattern grammar built on the
action + target + modification shape of authoring commands.  Drafts are
then run through four correction checks; whatever reaches the engine has
been accepted by them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .identify import ChartModel
from .modify import (
    CATEGORIES,
    Modification,
    TargetSelector,
    is_legal,
    legal_variants,
    load_capabilities,
    validate_params,
    IncompleteParams,
)

ACTION_KINDS = ("hover", "click", "double-click", "context-click", "zoom",
                "brush-drag", "drag-drop", "keyboard")

MAX_REGENERATIONS = 3


class TranslationFailed(ValueError):
    pass


@dataclass(frozen=True)
class Action:
    kind: str
    target: TargetSelector
    key: str | None = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "target": self.target.to_dict()}
        if self.key is not None:
            d["key"] = self.key
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Action":
        return cls(kind=d["kind"], target=TargetSelector.from_dict(d["target"]),
                   key=d.get("key"))


@dataclass
class DraftSpec:
    actions: list[Action]
    modifications: list[tuple[Modification, TargetSelector]]
    created_widgets: list[dict] = field(default_factory=list)  # {"kind","label"}
    provenance: dict = field(default_factory=dict)  # {"backend", "utterance"}

    def to_dict(self) -> dict:
        return {
            "actions": [a.to_dict() for a in self.actions],
            "modifications": [{"category": m.category, "variant": m.variant,
                               "params": dict(m.params), "target": t.to_dict()}
                              for m, t in self.modifications],
            "widgets": list(self.created_widgets),
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DraftSpec":
        return cls(
            actions=[Action.from_dict(a) for a in d.get("actions", [])],
            modifications=[(Modification(m["category"], m["variant"], dict(m.get("params", {}))),
                            TargetSelector.from_dict(m["target"]))
                           for m in d.get("modifications", [])],
            created_widgets=list(d.get("widgets", [])),
            provenance=dict(d.get("provenance", {})),
        )


@dataclass
class ValidationResult:
    verdict: str  # accepted | regenerate | guidance-needed
    checks: list[dict]  # four entries: {"name", "passed", "detail"}
    feedback: str | None = None
    gaps: list[str] = field(default_factory=list)
    suggested_additions: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "checks": self.checks, "feedback": self.feedback,
                "gaps": self.gaps, "suggested_additions": self.suggested_additions}


@dataclass
class Guidance:
    kind: str  # defaults | out-of-range
    message: str
    defaults: dict | None = None
    alternatives: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": self.message, "defaults": self.defaults,
                "alternatives": self.alternatives}


# ---------------------------------------------------------------------------
# Grammar: lexicons
# ---------------------------------------------------------------------------

_ACTION_PATTERNS = [
    ("double-click", re.compile(r"\bdouble[\s-]?click\w*")),
    ("context-click", re.compile(r"\b(?:right[\s-]?click\w*|context[\s-]?click\w*|long[\s-]?press\w*)")),
    ("keyboard", re.compile(r"\bpress(?:ing|es)?\s+(?:the\s+)?[\"'`]?([a-z0-9]+)[\"'`]?(?:\s+key)?")),
    ("hover", re.compile(r"\b(?:hover\w*|mouse[\s-]?over\w*)")),
    ("brush-drag", re.compile(r"\b(?:brush(?:ing|es)?\b|select(?:ing|s)?\b|select\b|lasso\w*)")),
    # "zoom" is only an action inside a when/while clause about the user.
    ("zoom", re.compile(r"\b(?:scroll\w*|wheel\b|pinch\w*|"
                        r"(?<=when )zoom\w*|(?<=when i )zoom\w*|(?<=when you )zoom\w*|"
                        r"(?<=when users )zoom\w*|(?<=while )zoom\w*)")),
    ("click", re.compile(r"\b(?:click\w*|tap\w*)")),
    ("drag-drop", re.compile(r"\b(?:drag\w*|drop\w*)")),
]

_SCALE_DIRECTION = {"in": 0.5, "into": 0.5, "out": 2.0}

_TARGET_PATTERN = re.compile(
    r"\b(bars?|areas?|lines?|points?|dots?|marks?|series|segments?|elements?|"
    r"others|rest|selection|chart|plot|view|axis|axes|legend|buttons?|widgets?)\b")
_GENERIC_WORDS = {"chart", "plot", "view"}
_SCOPE_NOUNS = {"others": "unbrushed", "rest": "unbrushed", "selection": "brushed"}

_AXIS_ID = re.compile(r"\b([xy])[\s-]?axis\b")
_SCOPE_WORDS = {"selected": "brushed", "brushed": "brushed", "unselected": "unbrushed",
                "other": "unbrushed", "others": "unbrushed", "remaining": "brushed",
                "all": "all"}
_QUOTED = re.compile(r"[\"']([^\"']+)[\"']")
_CONDITION = re.compile(r"\b(series|value|category)\s*(==|!=|>=|<=|>|<)\s*"
                        r"(\"[^\"]*\"|'[^']*'|-?[\d.]+)")
_REFLINE_VALUE = re.compile(r"\b(?:at|of)\s+(-?[\d.]+)")
_INTO_ARRANGEMENT = re.compile(r"\b(?:in)?to\s+(?:\w+\s+)?\w*?(stack|group|overlap)\w*")

_ARTICLES = {"a", "an", "the", "extra", "new", "this", "that"}


@dataclass
class _Match:
    start: int
    data: dict


def _scan(text: str, consumed: list[tuple[int, int]], pattern: re.Pattern):
    for m in pattern.finditer(text):
        if any(s < m.end() and m.start() < e for s, e in consumed):
            continue
        consumed.append(m.span())
        yield m


def _find_targets(text: str) -> list[_Match]:
    out = []
    for m in _TARGET_PATTERN.finditer(text):
        word = m.group(1)
        if word in ("axis", "axes"):
            axis_m = _AXIS_ID.search(text)
            entry = {"kind": "reference-component",
                     "selection": axis_m.group(1) if axis_m else "x"}
        elif word == "legend":
            entry = {"kind": "reference-component", "selection": "legend"}
        elif word.startswith("button") or word.startswith("widget"):
            entry = {"kind": "extra-widget", "selection": _widget_label(text, m.start())}
        elif word in _SCOPE_NOUNS:
            entry = {"kind": "visual-mark", "selection": _SCOPE_NOUNS[word]}
        else:
            scope = "all"
            prefix = text[max(0, m.start() - 24):m.start()]
            words_before = re.findall(r"[a-z']+", prefix)
            for w in reversed(words_before[-2:]):
                if w in _SCOPE_WORDS:
                    scope = _SCOPE_WORDS[w]
                    break
            entry = {"kind": "visual-mark", "selection": scope,
                     "generic": word in _GENERIC_WORDS}
        out.append(_Match(m.start(), entry))
    return out


def _widget_label(text: str, button_pos: int) -> str:
    words = re.findall(r"[a-z0-9']+", text[:button_pos])
    if words and words[-1] not in _ARTICLES:
        return words[-1].title()
    return ""


def _nearest_target(targets: list[_Match], pos: int, after_first: bool = True) -> dict | None:
    following = [t for t in targets if t.start >= pos]
    if following and (after_first or not targets):
        best = min(following, key=lambda t: t.start - pos)
        if best.start - pos <= 60:
            return best.data
    preceding = [t for t in targets if t.start < pos]
    if preceding:
        return min(preceding, key=lambda t: pos - t.start).data
    if following:
        return following[0].data
    return None


def _find_actions(text: str, consumed: list[tuple[int, int]], targets: list[_Match]) -> list[Action]:
    raw: list[tuple[int, str, str | None]] = []
    for kind, pattern in _ACTION_PATTERNS:
        for m in _scan(text, consumed, pattern):
            key = m.group(1) if kind == "keyboard" and m.groups() else None
            raw.append((m.start(), kind, key))
    raw.sort()
    actions: list[Action] = []
    seen_kinds = set()
    widget_targets = [t.data for t in targets if t.data["kind"] == "extra-widget"]
    for pos, kind, key in raw:
        if kind in seen_kinds:
            continue
        seen_kinds.add(kind)
        tgt = _nearest_target(targets, pos)
        # "a button that, when clicked, ..." binds the click to the button,
        # not to a generic mention of the chart later in the sentence.
        if (tgt is not None and tgt.get("generic") and widget_targets
                and kind in ("click", "double-click", "context-click", "hover")):
            tgt = widget_targets[0]
        if tgt is None or (kind in ("brush-drag", "drag-drop") and tgt["kind"] != "visual-mark"):
            tgt = {"kind": "visual-mark", "selection": "all"}
        if kind == "keyboard" and tgt["kind"] == "visual-mark" and tgt["selection"] == "all":
            tgt = {"kind": "visual-mark", "selection": "brushed"}
        actions.append(Action(kind=kind, target=TargetSelector(tgt["kind"], tgt["selection"]),
                              key=key))
    return actions


def _axis_near(text: str, pos: int, default: str) -> str:
    best = None
    for m in _AXIS_ID.finditer(text):
        d = abs(m.start() - pos)
        if best is None or d < best[0]:
            best = (d, m.group(1))
    return best[1] if best else default


_COMPARE = re.compile(r"\bcompar\w+")


def _find_modifications(text: str, consumed: list[tuple[int, int]],
                        targets: list[_Match]) -> list[tuple[int, Modification, dict | None]]:
    found: list[tuple[int, Modification, dict | None]] = []

    def add(pos: int, category: str, variant: str, params: dict | None = None) -> None:
        found.append((pos, Modification(category, variant, params or {}),
                      _nearest_target(targets, pos)))

    for m in _scan(text, consumed, _COMPARE):
        found.extend([
            (m.start(), Modification("emphatic", "opacity"),
             {"kind": "visual-mark", "selection": "brushed"}),
            (m.start() + 1, Modification("reductive", "remove"),
             {"kind": "visual-mark", "selection": "unbrushed"}),
            (m.start() + 2, Modification("organizational", "overlap"),
             {"kind": "visual-mark", "selection": "brushed"}),
            (m.start() + 3, Modification("navigational", "rescale", {"axis": "y"}),
             {"kind": "reference-component", "selection": "y"}),
        ])

    for m in _scan(text, consumed, re.compile(r"\b(?:highlight\w*|emphasi[sz]e\w*)")):
        add(m.start(), "emphatic", "opacity")
    for m in _scan(text, consumed, re.compile(r"\b(?:dim\b|fade\w*)")):
        # dimming X means focusing everything except X
        tgt = _nearest_target(targets, m.start())
        if tgt is not None and tgt["kind"] == "visual-mark" and tgt["selection"] in ("brushed", "unbrushed"):
            flipped = "brushed" if tgt["selection"] == "unbrushed" else "unbrushed"
            tgt = dict(tgt, selection=flipped)
        found.append((m.start(), Modification("emphatic", "opacity"), tgt))
    for m in _scan(text, consumed, re.compile(r"\b(?:outline\w*|stroke\b|border\w*)")):
        add(m.start(), "emphatic", "stroke")

    for m in _scan(text, consumed, re.compile(r"\b(?:keep only|only show|filter\w*)")):
        cond = _CONDITION.search(text)
        params = {"condition": f"{cond.group(1)} {cond.group(2)} {cond.group(3)}"} if cond else {}
        add(m.start(), "reductive", "filter", params)
    for m in _scan(text, consumed, re.compile(r"\b(?:remove\w*|hide\w*|delete\w*|eliminat\w*)")):
        add(m.start(), "reductive", "remove")

    for m in _scan(text, consumed, re.compile(r"\btooltips?\b")):
        add(m.start(), "annotative", "tooltip")
    for m in _scan(text, consumed, re.compile(r"\b(?:reference[\s-]?lines?|threshold(?:\s+line)?|line at)\b")):
        vm = _REFLINE_VALUE.search(text, m.start())
        add(m.start(), "annotative", "reference-line",
            {"value": float(vm.group(1))} if vm else {})
    for m in _scan(text, consumed, re.compile(r"\b(?:text[\s-]?labels?|labels?\b|annotat\w*|note\b)")):
        qm = _QUOTED.search(text)
        add(m.start(), "annotative", "text-label", {"text": qm.group(1)} if qm else {})

    for m in _scan(text, consumed, re.compile(r"\blog(?:arithmic)?\s+scale\b")):
        add(m.start(), "representational", "axis",
            {"scale": "log", "axis": _axis_near(text, m.start(), "y")})
    for m in _scan(text, consumed, re.compile(r"\blinear\s+scale\b")):
        add(m.start(), "representational", "axis",
            {"scale": "linear", "axis": _axis_near(text, m.start(), "y")})
    mark_type = re.compile(
        r"\b(?:change|convert|switch|turn)(?:s|ing|ed)?\b[^.;]*?"
        r"(?:in)?to\s+(?:an?\s+)?(bar|line|area)\b")
    for m in _scan(text, consumed, mark_type):
        add(m.start(), "representational", "mark-type", {"target_type": m.group(1)})
    for m in _scan(text, consumed, re.compile(r"\b(?:recolor\w*|change (?:the )?colors?)\b")):
        add(m.start(), "representational", "channel", {"channel": "color"})

    into_matches = list(_INTO_ARRANGEMENT.finditer(text))
    preferred_arrangement = into_matches[-1].group(1) if into_matches else None
    org_patterns = [("sort", re.compile(r"\b(?:sort\w*|re?order\w*|rank\w*)")),
                    ("stack", re.compile(r"\bstack\w*")),
                    ("group", re.compile(r"\bgroup\w*")),
                    ("overlap", re.compile(r"\b(?:overlap\w*|unstack\w*|side by side)"))]
    org_found: list[tuple[int, str]] = []
    for variant, pattern in org_patterns:
        for m in _scan(text, consumed, pattern):
            org_found.append((m.start(), variant))
    if org_found:
        variants = {v for _, v in org_found}
        if preferred_arrangement and preferred_arrangement in variants and len(variants) > 1:
            org_found = [(p, v) for p, v in org_found if v == preferred_arrangement]
        pos, variant = sorted(org_found)[0]
        if variant == "sort":
            key = "label" if re.search(r"\b(?:name|label|alphabetical\w*)\b", text) else "magnitude"
            order = "ascending" if re.search(r"\b(?:ascend\w*|increas\w*|smallest)\b", text) \
                else "descending"
            add(pos, "organizational", "sort", {"key": key, "order": order})
        else:
            add(pos, "organizational", variant)

    for m in _scan(text, consumed, re.compile(r"\bzoom\w*(?:\s+(in|out|into))?")):
        direction = m.group(1)
        params = {"axis": _axis_near(text, m.start(), "x")}
        if direction in _SCALE_DIRECTION:
            params["factor"] = _SCALE_DIRECTION[direction]
        add(m.start(), "navigational", "rescale", params)
    for m in _scan(text, consumed, re.compile(r"\bre-?scal\w+")):
        add(m.start(), "navigational", "rescale", {"axis": _axis_near(text, m.start(), "y")})
    for m in _scan(text, consumed, re.compile(r"\bpan\w*\b|\bshift (?:the )?view\b")):
        add(m.start(), "navigational", "pan", {"axis": _axis_near(text, m.start(), "x")})

    found.sort(key=lambda t: t[0])
    deduped: list[tuple[int, Modification, dict | None]] = []
    seen: set[tuple[str, str]] = set()
    for pos, mod, tgt in found:
        if (mod.category, mod.variant) in seen:
            continue
        seen.add((mod.category, mod.variant))
        deduped.append((pos, mod, tgt))
    return deduped


def grammar_parse(utterance: str) -> DraftSpec | None:
    """Deterministic action + target + modification pattern matcher.

    Returns None when nothing in the lexicon matches (never raises).
    """
    text = utterance.lower()
    targets = _find_targets(text)
    consumed: list[tuple[int, int]] = []
    actions = _find_actions(text, consumed, targets)
    raw_mods = _find_modifications(text, consumed, targets)
    if not actions and not raw_mods:
        return None

    default_target = None
    for a in actions:
        if a.target.kind == "visual-mark":
            default_target = a.target
            break
    if default_target is None:
        default_target = TargetSelector("visual-mark", "all")

    modifications: list[tuple[Modification, TargetSelector]] = []
    for _pos, mod, tgt in raw_mods:
        if tgt is None:
            selector = default_target
        elif mod.category == "navigational" and tgt["kind"] != "reference-component":
            selector = TargetSelector("reference-component", mod.params.get("axis", "y"))
        elif mod.category in ("organizational", "representational") and tgt["kind"] != "visual-mark":
            selector = TargetSelector("visual-mark", "all")
        else:
            selector = TargetSelector(tgt["kind"], tgt["selection"])
        modifications.append((mod, selector))

    widgets = []
    for a in actions:
        if a.target.kind == "extra-widget":
            label = a.target.selection if isinstance(a.target.selection, str) else ""
            if not label:
                label = _derive_widget_label(modifications)
            widgets.append({"kind": "button", "label": label})
    draft = DraftSpec(actions=actions, modifications=modifications,
                      created_widgets=widgets,
                      provenance={"backend": "grammar", "utterance": utterance})
    if widgets:  # selectors must agree with the derived label
        fixed_actions = []
        for a in draft.actions:
            if a.target.kind == "extra-widget":
                fixed_actions.append(replace(a, target=TargetSelector("extra-widget",
                                                                      widgets[0]["label"])))
            else:
                fixed_actions.append(a)
        draft.actions = fixed_actions
    return draft


def _derive_widget_label(modifications) -> str:
    if not modifications:
        return "Apply"
    mod = modifications[0][0]
    if mod.variant == "mark-type":
        return f"Change to {mod.params.get('target_type', 'bar')} chart"
    if mod.category == "organizational":
        return mod.variant.title()
    if mod.variant == "axis":
        return f"{mod.params.get('scale', 'log').title()} scale"
    return mod.variant.title()


def split_intents(utterance: str) -> list[str]:
    """Split a compound utterance into independent interaction clauses.

    Only splits on an "and" whose two sides each parse to a complete
    action + modification pair, so multi-action specifications like
    "selecting ... and clicking ..." stay intact.
    """
    parts = re.split(r"\s+and\s+", utterance)
    if len(parts) == 2:
        drafts = [grammar_parse(p) for p in parts]
        if all(d is not None and d.actions and d.modifications for d in drafts):
            return parts
    return [utterance]


# ---------------------------------------------------------------------------
# Translation
# ---------------------------------------------------------------------------

def translate(utterance: str, capabilities: dict | None = None,
              chart_model: ChartModel | None = None, agent=None,
              feedback: str | None = None) -> DraftSpec:
    """Turn an utterance into an unvalidated draft spec."""
    if not utterance.strip():
        raise TranslationFailed("empty utterance")
    if agent is not None:
        try:
            from .agent import parse_translation_reply, translation_request

            caps = capabilities or load_capabilities()
            summary = chart_model.chart_type if chart_model else "bar"
            reply = agent.complete(translation_request(utterance, caps, summary, feedback))
            data = parse_translation_reply(reply)
            draft = DraftSpec.from_dict(data)
            draft.provenance = {"backend": "agent", "utterance": utterance}
            return draft
        except Exception:  # noqa: BLE001 - fall back to the grammar
            pass
    draft = grammar_parse(utterance)
    if draft is None:
        raise TranslationFailed(f"no interpretation found for {utterance!r}")
    return draft


# ---------------------------------------------------------------------------
# Correction
# ---------------------------------------------------------------------------

_ACTION_TARGET_KINDS = {
    "hover": {"visual-mark", "reference-component", "extra-widget"},
    "click": {"visual-mark", "reference-component", "extra-widget"},
    "double-click": {"visual-mark", "reference-component", "extra-widget"},
    "context-click": {"visual-mark", "reference-component", "extra-widget"},
    "zoom": {"reference-component", "visual-mark"},
    "brush-drag": {"visual-mark"},
    "drag-drop": {"visual-mark"},
    "keyboard": {"visual-mark", "reference-component", "extra-widget"},
}

_MOD_TARGET_KINDS = {
    "emphatic": {"visual-mark"},
    "reductive": {"visual-mark"},
    "annotative": {"visual-mark"},
    "navigational": {"reference-component", "visual-mark"},
    "organizational": {"visual-mark"},
    "representational": {"visual-mark"},
}


def _check_structure(draft: DraftSpec) -> tuple[list[str], list[str]]:
    """Returns (structural problems -> regenerate, gaps -> guidance)."""
    problems: list[str] = []
    gaps: list[str] = []
    if not draft.actions:
        gaps.append("no user action is specified")
    if not draft.modifications:
        gaps.append("no modification is specified")
    caps = load_capabilities()
    for a in draft.actions:
        if a.kind not in ACTION_KINDS:
            problems.append(f"unknown action kind {a.kind!r}")
            continue
        if a.kind == "keyboard" and not a.key:
            gaps.append("keyboard action needs a key")
        if a.target.kind not in _ACTION_TARGET_KINDS[a.kind]:
            problems.append(f"{a.kind} cannot target a {a.target.kind}")
        if a.target.kind == "extra-widget":
            labels = [w["label"] for w in draft.created_widgets]
            if not labels or (isinstance(a.target.selection, str)
                              and a.target.selection not in labels
                              and not a.target.selection.startswith("w")):
                problems.append("widget-targeting action has no created widget")
    for mod, target in draft.modifications:
        if mod.category not in CATEGORIES:
            problems.append(f"unknown modification category {mod.category!r}")
            continue
        if mod.variant not in caps["categories"][mod.category]:
            problems.append(f"unknown variant {mod.variant!r} for {mod.category}")
            continue
        if target.kind not in _MOD_TARGET_KINDS[mod.category]:
            problems.append(f"{mod.category} modification cannot target a {target.kind}")
        try:
            validate_params(mod)
        except IncompleteParams as exc:
            gaps.append(str(exc))
    return problems, gaps


def _detected_intents(utterance: str) -> set[tuple[str, str]]:
    draft = grammar_parse(utterance)
    if draft is None:
        return set()
    intents = {(m.category, m.variant) for m, _ in draft.modifications}
    if _COMPARE.search(utterance.lower()):
        # the rescale leg of a compare is a space-usage nicety; check 4
        # suggests it rather than coverage demanding it
        intents.discard(("navigational", "rescale"))
    return intents


def correct(draft: DraftSpec, chart_model: ChartModel | None, utterance: str) -> ValidationResult:
    """Run the four correction checks and produce a verdict."""
    checks: list[dict] = []
    problems, gaps = _check_structure(draft)
    checks.append({"name": "action-modification-structure", "passed": not problems,
                   "detail": "; ".join(problems)})

    expected = _detected_intents(utterance)
    present = {(m.category, m.variant) for m, _ in draft.modifications}
    missing = {f"{c}/{v}" for c, v in expected - present}
    checks.append({"name": "requirement-coverage", "passed": not missing,
                   "detail": f"utterance asks for {', '.join(sorted(missing))}" if missing else ""})

    chart_type = chart_model.chart_type if chart_model else None
    illegal = []
    if chart_type is not None:
        for mod, _t in draft.modifications:
            if mod.category in CATEGORIES and not is_legal(chart_type, mod.category, mod.variant):
                illegal.append(f"{mod.variant} ({mod.category}) is not supported in a "
                               f"{chart_type} chart")
    checks.append({"name": "chart-capability", "passed": not illegal,
                   "detail": "; ".join(illegal)})

    suggestions: list[dict] = []
    cats = {(m.category, m.variant) for m, _ in draft.modifications}
    needs_fit = any(c == "reductive" for c, _ in cats) or ("organizational", "overlap") in cats
    has_rescale = any(c == "navigational" for c, _ in cats)
    if needs_fit and not has_rescale:
        suggestions.append({
            "category": "navigational", "variant": "rescale", "params": {"axis": "y"},
            "target": {"kind": "reference-component", "selection": "y"},
            "reason": "rescale the y-axis to optimize space usage",
        })
    checks.append({"name": "additional-modifications", "passed": True,
                   "detail": suggestions[0]["reason"] if suggestions else ""})

    if gaps:
        return ValidationResult("guidance-needed", checks, gaps=gaps,
                                suggested_additions=suggestions)
    if problems or missing or illegal:
        feedback = "; ".join(problems + sorted(missing) + illegal)
        return ValidationResult("regenerate", checks, feedback=feedback,
                                suggested_additions=suggestions)
    return ValidationResult("accepted", checks, suggested_additions=suggestions)


# ---------------------------------------------------------------------------
# Guidance
# ---------------------------------------------------------------------------

_DEFAULT_ACTIONS = {
    "annotative": ("hover", "visual-mark"),
    "emphatic": ("click", "visual-mark"),
    "representational": ("click", "visual-mark"),
    "reductive": ("brush-drag", "visual-mark"),
    "navigational": ("zoom", "reference-component"),
    "organizational": ("click", "visual-mark"),
}


def guide(utterance: str, draft: DraftSpec | None = None,
          chart_model: ChartModel | None = None,
          validation: ValidationResult | None = None) -> Guidance:
    """Fill common defaults for under-specified requests, or explain limits."""
    chart_type = chart_model.chart_type if chart_model else None
    capability_failed = validation is not None and not validation.checks[2]["passed"]
    if (draft is not None and draft.modifications and not draft.actions
            and not capability_failed):
        category = draft.modifications[0][0].category
        kind, target_kind = _DEFAULT_ACTIONS.get(category, ("hover", "visual-mark"))
        target = "visual mark" if target_kind == "visual-mark" else "axis"
        return Guidance(
            kind="defaults",
            message=(f"No action was specified. The most common choice is to {kind} "
                     f"a {target}; confirm to use it."),
            defaults={"action": kind, "target": target_kind},
        )
    if (draft is not None and validation is not None and validation.gaps
            and not capability_failed):
        return Guidance(kind="defaults",
                        message="Some details are missing: " + "; ".join(validation.gaps),
                        defaults=None)
    alternatives: list[str] = []
    if chart_type:
        for cat in CATEGORIES:
            variants = legal_variants(chart_type, cat)
            if variants:
                alternatives.append(f"{cat}: {', '.join(variants)}")
    detail = ""
    if validation is not None:
        failed = [c["detail"] for c in validation.checks if not c["passed"] and c["detail"]]
        detail = " " + "; ".join(failed) if failed else ""
    return Guidance(
        kind="out-of-range",
        message=(f"The request {utterance!r} is outside what this chart supports.{detail} "
                 f"Please try one of the supported modifications."),
        alternatives=alternatives,
    )


# ---------------------------------------------------------------------------
# The translate -> correct -> guide pipeline
# ---------------------------------------------------------------------------

@dataclass
class AnalyzerReply:
    status: str  # "draft" | "guidance"
    drafts: list[DraftSpec] = field(default_factory=list)
    validations: list[ValidationResult] = field(default_factory=list)
    guidance: Guidance | None = None

    def to_dict(self) -> dict:
        return {"status": self.status,
                "drafts": [d.to_dict() for d in self.drafts],
                "validations": [v.to_dict() for v in self.validations],
                "guidance": self.guidance.to_dict() if self.guidance else None}


def analyze_utterance(utterance: str, chart_model: ChartModel | None = None,
                      agent=None) -> AnalyzerReply:
    """Full analysis loop, bounded at MAX_REGENERATIONS regenerations."""
    clauses = split_intents(utterance)
    drafts: list[DraftSpec] = []
    validations: list[ValidationResult] = []
    for clause in clauses:
        feedback = None
        prev_dict = None
        draft = None
        validation = None
        accepted = False
        for _attempt in range(MAX_REGENERATIONS + 1):
            try:
                draft = translate(clause, chart_model=chart_model, agent=agent,
                                  feedback=feedback)
            except TranslationFailed:
                return AnalyzerReply(status="guidance",
                                     guidance=guide(utterance, chart_model=chart_model))
            validation = correct(draft, chart_model, clause)
            if validation.verdict == "accepted":
                accepted = True
                break
            if validation.verdict == "guidance-needed":
                return AnalyzerReply(status="guidance", drafts=[draft],
                                     validations=[validation],
                                     guidance=guide(clause, draft, chart_model, validation))
            current = draft.to_dict()
            if current == prev_dict:
                break  # deterministic backend: regenerating cannot change the draft
            prev_dict = current
            feedback = validation.feedback
        if not accepted:
            return AnalyzerReply(status="guidance", drafts=[draft],
                                 validations=[validation],
                                 guidance=guide(clause, draft, chart_model, validation))
        drafts.append(draft)
        validations.append(validation)
    return AnalyzerReply(status="draft", drafts=drafts, validations=validations)
