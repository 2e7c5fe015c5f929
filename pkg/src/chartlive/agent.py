"""Pluggable agent backend for identification and translation.

Any object with a ``complete(prompt: str) -> str`` method works as a
backend.  Replies must be strict JSON matching the published schemas in
``chartlive/data``; anything else is rejected so that free-text output
can never leak into the pipeline.  Everything in this package also runs
with no backend at all, via the heuristic and grammar paths.
"""

from __future__ import annotations

import base64
import json
import os
import re
from importlib import resources
from typing import Protocol, runtime_checkable

import jsonschema
import requests


class AgentReplyInvalid(ValueError):
    """The agent reply was not valid JSON for the published schema."""


@runtime_checkable
class AgentClient(Protocol):
    def complete(self, prompt: str) -> str: ...


class HttpAgentClient:
    """Minimal JSON-over-HTTP completion client.

    POSTs ``{"model": ..., "prompt": ...}`` and expects ``{"text": ...}``
    back.  Endpoint, key, and model come from the constructor or the
    CHARTLIVE_AGENT_ENDPOINT / CHARTLIVE_AGENT_KEY / CHARTLIVE_AGENT_MODEL
    environment variables.
    """

    def __init__(self, endpoint: str, api_key: str | None = None,
                 model: str = "default", timeout: float = 30.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.model = model
        self.timeout = timeout

    def complete(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        resp = requests.post(self.endpoint, json={"model": self.model, "prompt": prompt},
                             headers=headers, timeout=self.timeout)
        resp.raise_for_status()
        return resp.json()["text"]


def agent_from_env() -> HttpAgentClient | None:
    endpoint = os.environ.get("CHARTLIVE_AGENT_ENDPOINT")
    if not endpoint:
        return None
    return HttpAgentClient(endpoint, api_key=os.environ.get("CHARTLIVE_AGENT_KEY"),
                           model=os.environ.get("CHARTLIVE_AGENT_MODEL", "default"))


def _schema(name: str) -> dict:
    with resources.files("chartlive.data").joinpath(name).open() as fh:
        return json.load(fh)


_IDENTIFY_SCHEMA = _schema("identify_reply.schema.json")
_TRANSLATE_SCHEMA = _schema("translate_reply.schema.json")

_JSON_BLOCK = re.compile(r"\{.*\}", re.S)


def _strict_json(reply: str) -> dict:
    m = _JSON_BLOCK.search(reply)
    if m is None:
        raise AgentReplyInvalid("reply contains no JSON object")
    try:
        return json.loads(m.group(0))
    except json.JSONDecodeError as exc:
        raise AgentReplyInvalid(f"reply is not valid JSON: {exc}") from exc


IDENTIFICATION_PROMPT = """\
You label the elements of a statistical chart given in a compact vector notation,
one element per line as `id | shape: geometry, color: (h,s,l)`.

Assign every element id one role out of: data-mark, axis-line, axis-tick,
axis-label, legend-swatch, legend-label, title, gridline, extra-widget, other.
Give data-marks, legend-swatches and legend-labels a `series` name where one
is evident. Then state chart-level attributes.

Reply with ONLY a JSON object of the form:
{"roles": {"<id>": {"role": "...", "series": null}},
 "chart": {"chart_type": "bar|grouped-bar|stacked-bar|line|area|stacked-area|overlapped-area|scatter",
           "arrangement": "none|stacked|grouped|overlapped",
           "stacking_direction": "vertical|horizontal|none"}}

Chart elements:
"""


def identification_request(simvec_text: str, raster: bytes | None = None) -> str:
    prompt = IDENTIFICATION_PROMPT + simvec_text
    if raster is not None:
        prompt += "\n\nRendered bitmap (base64 PNG):\n" + base64.b64encode(raster).decode()
    return prompt


def parse_identification_reply(reply: str) -> tuple[dict, dict]:
    data = _strict_json(reply)
    try:
        jsonschema.validate(data, _IDENTIFY_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise AgentReplyInvalid(f"identification reply rejected: {exc.message}") from exc
    return data["roles"], data["chart"]


TRANSLATION_PROMPT = """\
You convert a natural-language request into an interaction specification for a
chart. An interaction pairs user actions (hover, click, double-click,
context-click, zoom, brush-drag, drag-drop, keyboard) with ordered
modifications. Modification categories and variants:
{categories}

The chart is: {chart_summary}
Only these modifications are legal for this chart: {legal}

Targets are {{"kind": "visual-mark|reference-component|extra-widget",
"selection": "all"|"brushed"|"unbrushed"|<axis id>|<widget label>}}.

Reply with ONLY a JSON object:
{{"actions": [{{"kind": "...", "key": null, "target": {{...}}}}],
  "modifications": [{{"category": "...", "variant": "...", "params": {{}}, "target": {{...}}}}],
  "widgets": [{{"kind": "button", "label": "..."}}]}}

Request: {utterance}
{feedback}"""


def translation_request(utterance: str, capabilities: dict, chart_summary: str,
                        feedback: str | None = None) -> str:
    chart_type = chart_summary.split()[0] if chart_summary else "bar"
    legal = capabilities["legal"].get(chart_type, {})
    return TRANSLATION_PROMPT.format(
        categories=json.dumps(capabilities["categories"]),
        chart_summary=chart_summary,
        legal=json.dumps(legal),
        utterance=utterance,
        feedback=f"Previous attempt was rejected: {feedback}" if feedback else "",
    )


def parse_translation_reply(reply: str) -> dict:
    data = _strict_json(reply)
    try:
        jsonschema.validate(data, _TRANSLATE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise AgentReplyInvalid(f"translation reply rejected: {exc.message}") from exc
    return data
