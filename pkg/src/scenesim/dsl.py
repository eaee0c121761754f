"""Deterministic grammar for editing commands.

A command is split into clauses at sentence boundaries and at coordinating
connectives (and / additionally / also / then) that introduce a new command
verb; each clause maps to exactly one structured edit config. A remote
language-model backend can replace the grammar; its responses are validated
against the same schema, never coerced.

The attribute lexicon (speed adverbs, sectors, relations, distance phrases)
is documented in docs/command_grammar.md.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass
from typing import Optional

import httpx
import jsonschema

from .assets import CSS_BASIC_COLORS
from .motion import MotionAttributes
from .scene import EditAction, EditConfig, SceneState

SPEED_LEXICON = {"fast": 12.0, "quickly": 12.0, "quick": 12.0,
                 "normal": 8.0, "slow": 4.0, "slowly": 4.0}
DEFAULT_SPEED = 8.0
DEFAULT_DURATION = 4.0
CLOSE_RANGE = (5.0, 20.0)
FAR_RANGE = (40.0, 80.0)

COMMAND_VERBS = ("add", "remove", "delete", "move", "modify", "change",
                 "revise", "create", "make", "rotate", "shift")

_CONNECTIVE_SPLIT = re.compile(
    r"\s*\b(?:and|additionally|also|then)\b[,\s]+(?=(?:%s)\b)"
    % "|".join(COMMAND_VERBS), re.IGNORECASE)
_SENTENCE_SPLIT = re.compile(r"[.!?;]+(?=\s|$)")  # don't break decimals
_LEADING_CONNECTIVE = re.compile(
    r"^(?:and|additionally|also|then|please)\b[,\s]*", re.IGNORECASE)

GENERIC_VEHICLE_WORDS = {"car", "cars", "vehicle", "vehicles"}

ALLOWED_PARAMETER_KEYS = {
    "type", "color", "speed", "action", "duration", "distance_range",
    "sector", "driving_direction", "crazy_mode", "relation", "count",
    "instance_id", "asset_id", "phrase",
    "forward", "left", "up", "yaw_deg", "pitch_deg", "roll_deg",
}

EDIT_CONFIG_SCHEMA = {
    "type": "object",
    "required": ["action", "parameters"],
    "additionalProperties": False,
    "properties": {
        "action": {"enum": ["add", "delete", "view_change", "revise",
                            "abstract_expand"]},
        "target": {"type": ["string", "null"]},
        "round": {"type": "integer"},
        "parameters": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {} for k in sorted(ALLOWED_PARAMETER_KEYS)},
        },
    },
}


class ParseError(Exception):
    def __init__(self, clause: str, rule_hint: str):
        self.clause = clause
        self.rule_hint = rule_hint
        super().__init__(f"cannot parse clause {clause!r}; nearest rule: {rule_hint}")


class AmbiguityError(Exception):
    pass


class ReferenceError(Exception):
    def __init__(self, expr: str, candidates: list[str]):
        self.expr = expr
        self.candidates = candidates
        super().__init__(
            f"unresolved reference {expr!r}; candidates: {candidates or 'none'}")


@dataclass(frozen=True)
class CommandText:
    raw: str
    round: int = 0

    def __post_init__(self):
        if not self.raw.strip():
            raise ValueError("empty command")


@dataclass(frozen=True)
class InterpreterBackend:
    kind: str = "grammar"  # grammar | remote_model
    endpoint: Optional[str] = None
    timeout: float = 10.0

    def __post_init__(self):
        if self.kind == "remote_model" and not self.endpoint:
            raise ValueError("remote_model backend requires an endpoint")


def split_clauses(text: str) -> list[str]:
    clauses = []
    for sentence in _SENTENCE_SPLIT.split(text):
        sentence = sentence.strip()
        if not sentence:
            continue
        for part in _CONNECTIVE_SPLIT.split(sentence):
            part = _LEADING_CONNECTIVE.sub("", part.strip()).strip(" ,")
            if part:
                clauses.append(part)
    return clauses


def parse_command(text: CommandText) -> list[EditConfig]:
    """Grammar parse: one edit config per clause, ordering preserved."""
    configs = []
    for clause in split_clauses(text.raw):
        configs.append(_parse_clause(clause, text.round))
    if not configs:
        raise ParseError(text.raw, "no clauses found")
    return configs


def _parse_clause(clause: str, round_no: int) -> EditConfig:
    low = clause.lower()
    first = low.split()[0]
    if first in ("remove", "delete"):
        return _parse_delete(clause, low, round_no)
    if first == "add":
        return _parse_add(clause, low, round_no)
    if first in ("modify", "revise") or low.startswith("change the"):
        return _parse_revise(clause, low, round_no)
    if first in ("create", "make"):
        return _parse_abstract(clause, low, round_no)
    if _looks_like_view(low):
        return _parse_view(clause, low, round_no)
    hint = difflib.get_close_matches(first, COMMAND_VERBS, n=1)
    rule = f"clause starting with {hint[0]!r}" if hint else \
        "add | remove | delete | view | modify | create"
    raise ParseError(clause, rule)


def _looks_like_view(low: str) -> bool:
    return (low.startswith("the view") or low.startswith("move the view")
            or low.startswith("ego vehicle") or low.startswith("the camera")
            or low.startswith("rotate the view") or low.startswith("shift the view"))


def _parse_delete(clause: str, low: str, round_no: int) -> EditConfig:
    params: dict = {}
    target = None
    if re.search(r"\ball\b", low):
        target = "all"
    else:
        color = _find_color(low)
        if color:
            params["color"] = color
        vtype = _delete_type(low, color)
        if vtype:
            params["type"] = vtype
        m = re.search(r"\bthe\b(.*?)(?:\s+in\s+the\s+scene)?$", low)
        if m:
            target = "the" + m.group(1).rstrip()
        if target is None and not params:
            raise ParseError(clause, "delete <all | the [color] [type]>")
    return EditConfig(EditAction.DELETE, target=target, parameters=params,
                      round=round_no)


def _delete_type(low: str, color: Optional[str]) -> Optional[str]:
    m = re.search(r"\bthe\s+(?:added\s+)?((?:\w+\s?){1,2}?)(?:\s+in\s+the\s+scene)?$", low)
    if not m:
        return None
    words = [w for w in m.group(1).split() if w != color]
    words = [w for w in words if w not in GENERIC_VEHICLE_WORDS]
    return " ".join(words) or None


_NUM = r"(\d+(?:\.\d+)?)"
_RANGE_PATTERNS = [
    re.compile(rf"\bin\s+{_NUM}\s*(?:to|-)\s*{_NUM}\s*(?:m|meters?)\b"),
    re.compile(rf"\bbetween\s+{_NUM}\s+and\s+{_NUM}\s*(?:m|meters?)\b"),
    re.compile(rf"\b{_NUM}\s*(?:to|-)\s*{_NUM}\s*(?:m|meters?)\s+(?:away|ahead)\b"),
]
_RELATION_PATTERN = re.compile(
    r"(?:chasing\s+|driving\s+|parked\s+)?"
    r"(?:(behind)|to\s+the\s+(front|left|right|back)\s+of)\s+"
    r"(the\s+(?:added\s+)?[\w ]+?)(?=\s+(?:driving|moving|that|going|turning|at|with)\b|$)")


def _parse_add(clause: str, low: str, round_no: int) -> EditConfig:
    params: dict = {}
    rest = low

    rel = _RELATION_PATTERN.search(rest)
    if rel:
        kind = "behind" if rel.group(1) else f"{rel.group(2)}_of"
        params["relation"] = {"kind": kind, "ref": rel.group(3).strip()}
        rest = rest[:rel.start()] + " " + rest[rel.end():]

    for pat in _RANGE_PATTERNS:
        m = pat.search(rest)
        if m:
            params["distance_range"] = [float(m.group(1)), float(m.group(2))]
            rest = rest[:m.start()] + " " + rest[m.end():]
            break

    vtype, color = _extract_vehicle(rest)
    if vtype:
        params["type"] = vtype
    if color:
        params["color"] = color

    if re.search(r"\bwrong\s+way\b|\bwrong\s+direction\b|\bcrazy\b", rest):
        params["crazy_mode"] = True

    toward = bool(re.search(r"\btowards?\s+(?:me|us|the\s+ego)\b|\bcoming\s+at\b", rest))
    away = bool(re.search(r"\baway\b", rest))
    if toward and away:
        raise AmbiguityError(f"both toward and away in {clause!r}")
    # "moving ahead" means flowing with the ego lane, i.e. away from the ego
    ahead = bool(re.search(r"\b(?:ahead|forwards?)\b", rest))
    if toward:
        params["driving_direction"] = "toward_ego"
    elif away or ahead:
        params["driving_direction"] = "away_from_ego"

    for word, speed in SPEED_LEXICON.items():
        if re.search(rf"\b{word}\b", rest):
            params["speed"] = speed
            break

    action = _find_action(rest)
    if action:
        params["action"] = action

    sector = _find_sector(rest)
    if sector:
        params["sector"] = sector
    if re.search(r"\bclose\b|\bnear(?:by)?\b", rest) and "distance_range" not in params:
        params["distance_range"] = list(CLOSE_RANGE)
    elif re.search(r"\bfar\b|\bdistant\b", rest) and "distance_range" not in params:
        params["distance_range"] = list(FAR_RANGE)

    m = re.search(rf"\bfor\s+{_NUM}\s*s(?:econds)?\b", rest)
    if m:
        params["duration"] = float(m.group(1))

    return EditConfig(EditAction.ADD, parameters=params, round=round_no)


_VEHICLE_STOP = {"driving", "that", "to", "in", "at", "moving", "parked",
                 "going", "heading", "with", "also", "turning", "chasing",
                 "and", "for", "coming", "toward", "towards", "away", "on",
                 "close", "near", "nearby", "far", "distant", "behind"}


def _extract_vehicle(low: str):
    m = re.search(r"\badd\s+(?:another|one|an|a|the)?\b\s*(.*)", low)
    if not m:
        return None, None
    words = m.group(1).split()
    taken = []
    color = None
    for w in words:
        w = w.strip(",")
        if w in _VEHICLE_STOP:
            break
        if w in CSS_BASIC_COLORS and color is None:
            color = w
            continue
        taken.append(w)
        if len(taken) >= 3:
            break
    vtype = " ".join(taken) if taken else None
    if vtype in ("", None):
        vtype = None
    return vtype, color


def _find_color(low: str) -> Optional[str]:
    for name in CSS_BASIC_COLORS:
        if re.search(rf"\b{name}\b", low):
            return name
    return None


def _find_action(low: str) -> Optional[str]:
    if re.search(r"\bturn(?:ing)?\s+left\b", low):
        return "turn_left"
    if re.search(r"\bturn(?:ing)?\s+right\b", low):
        return "turn_right"
    if re.search(r"\bpark(?:ed|ing)?\b|\bstopp?ed\b|\bstationary\b", low):
        return "park"
    if re.search(r"\bbackwards?\b|\breversing\b|\bbacking\s+up\b", low):
        return "backward"
    if re.search(r"\bstraight(?:forward)?\b|\bahead\b|\bforwards?\b", low):
        return "straightforward"
    return None


def _find_sector(low: str) -> Optional[str]:
    if re.search(r"\bleft\s+front\b|\bfront\s+left\b", low):
        return "left_front"
    if re.search(r"\bright\s+front\b|\bfront\s+right\b", low):
        return "right_front"
    if re.search(r"\b(?:to\s+the\s+|on\s+the\s+)left\b", low):
        return "left"
    if re.search(r"\b(?:to\s+the\s+|on\s+the\s+)right\b", low):
        return "right"
    if re.search(r"\bbehind\b|\bback\b", low):
        return "back"
    if re.search(r"\bfront\b", low):
        return "front"
    return None


_VIEW_MOVE = re.compile(
    rf"{_NUM}\s*(?:m|meters?)\s+"
    r"(ahead|forward|forwards|back|backward|backwards|left|right|above|up|below|down)")
_VIEW_ROT = re.compile(
    rf"{_NUM}\s*(?:degrees?|deg)\s*(?:to\s+the\s+)?(left|right|up|down)?")

_VIEW_AXES = {
    "ahead": ("forward", 1.0), "forward": ("forward", 1.0),
    "forwards": ("forward", 1.0),
    "back": ("forward", -1.0), "backward": ("forward", -1.0),
    "backwards": ("forward", -1.0),
    "left": ("left", 1.0), "right": ("left", -1.0),
    "above": ("up", 1.0), "up": ("up", 1.0),
    "below": ("up", -1.0), "down": ("up", -1.0),
}


def _parse_view(clause: str, low: str, round_no: int) -> EditConfig:
    params: dict = {}
    for m in _VIEW_MOVE.finditer(low):
        axis, sign = _VIEW_AXES[m.group(2)]
        params[axis] = params.get(axis, 0.0) + sign * float(m.group(1))
    for m in _VIEW_ROT.finditer(low):
        direction = m.group(2) or "left"
        deg = float(m.group(1))
        if direction in ("left", "right"):
            params["yaw_deg"] = params.get("yaw_deg", 0.0) + \
                (deg if direction == "left" else -deg)
        else:
            params["pitch_deg"] = params.get("pitch_deg", 0.0) + \
                (deg if direction == "up" else -deg)
    if not params and low.startswith("ego vehicle"):
        # "ego vehicle drives ahead slowly": forward motion scaled by the
        # speed adverb, one second of travel per round
        speed = DEFAULT_SPEED
        for word, val in SPEED_LEXICON.items():
            if re.search(rf"\b{word}\b", low):
                speed = val
                break
        if _find_action(low) in ("straightforward", None):
            params["forward"] = speed
    if not params:
        raise ParseError(clause, "view: <N> meters <direction> | ego vehicle drives ...")
    return EditConfig(EditAction.VIEW_CHANGE, parameters=params, round=round_no)


def _parse_revise(clause: str, low: str, round_no: int) -> EditConfig:
    # prefer an explicit "the added <type>" reference when present
    m = (re.search(r"(the\s+added\s+[\w ]+?)\s+to\s+(.*)$", low)
         or re.search(r"(the\s+[\w ]+?)\s+to\s+(.*)$", low))
    if not m:
        raise ParseError(clause, "modify <reference> to <change>")
    target = m.group(1).strip()
    change = m.group(2)
    params: dict = {}
    action = _find_action(change)
    if action:
        params["action"] = action
    color = _find_color(change)
    if color:
        params["color"] = color
    for word, speed in SPEED_LEXICON.items():
        if re.search(rf"\b{word}\b", change):
            params["speed"] = speed
            break
    if not params:
        raise ParseError(clause, "modify ... to <turn left/right | park | color | speed>")
    return EditConfig(EditAction.REVISE, target=target, parameters=params,
                      round=round_no)


def _parse_abstract(clause: str, low: str, round_no: int) -> EditConfig:
    m = re.search(r"(?:create|make)\s+(?:(?:an|a|it|some)\s+)?(.*)$", low)
    phrase = (m.group(1) if m else "").strip(" .") or low
    return EditConfig(EditAction.ABSTRACT_EXPAND, parameters={"phrase": phrase},
                      round=round_no)


# --- attribute extraction ----------------------------------------------------

def extract_motion_attributes(config: EditConfig) -> MotionAttributes:
    """Add-config parameters -> placement/movement attributes with defaults."""
    if config.action is not EditAction.ADD:
        raise ValueError("motion attributes are defined for add configs only")
    p = config.parameters
    rng = p.get("distance_range")
    return MotionAttributes(
        distance_range=(None if rng is None else (float(rng[0]), float(rng[1]))),
        sector=p.get("sector", "front"),
        driving_direction=p.get("driving_direction"),
        crazy_mode=bool(p.get("crazy_mode", False)),
        speed=float(p.get("speed", DEFAULT_SPEED)),
        action=p.get("action", "straightforward"),
        duration=float(p.get("duration", DEFAULT_DURATION)),
    )


# --- reference resolution ----------------------------------------------------

def resolve_reference(expr: str, state: SceneState) -> str:
    """Resolve "the [added] <type>" against the session history (most recent
    matching addition wins). Reads history only."""
    words = [w for w in re.sub(r"[^\w ]", " ", expr.lower()).split()
             if w not in ("the", "added", "a", "an")]
    want_type = " ".join(w for w in words if w not in GENERIC_VEHICLE_WORDS
                         and w not in CSS_BASIC_COLORS)
    want_color = next((w for w in words if w in CSS_BASIC_COLORS), None)

    candidates = []
    for config in reversed(state.history):
        if config.action is not EditAction.ADD:
            continue
        iid = config.parameters.get("instance_id")
        if not iid:
            continue
        ctype = (config.parameters.get("type") or "").lower()
        ccolor = config.parameters.get("color")
        asset_id = (config.parameters.get("asset_id") or "").lower()
        candidates.append(iid)
        type_hits = (want_type in ctype or ctype in want_type
                     or want_type.replace(" ", "_") in asset_id)
        if want_type and not type_hits:
            continue
        if want_color and ccolor and ccolor != want_color:
            continue
        return iid
    raise ReferenceError(expr, candidates)


# --- remote model backend ----------------------------------------------------

REMOTE_PROMPT = (
    "Decompose the driving-scene editing command into a JSON list of edit "
    "configs, each {action, target, parameters, round}. Allowed actions: "
    "add, delete, view_change, revise, abstract_expand."
)


class RemoteInterpretError(Exception):
    pass


def remote_interpret(text: CommandText, backend: InterpreterBackend,
                     client: Optional[httpx.Client] = None) -> list[EditConfig]:
    """Interpret via an external language-model service.

    Request: {prompt, command, schema}; response must be a JSON list of
    schema-valid edit configs. Invalid documents are rejected, never coerced.
    """
    if backend.kind != "remote_model":
        raise ValueError("remote_interpret requires a remote_model backend")
    own_client = client is None
    client = client or httpx.Client(timeout=backend.timeout)
    try:
        resp = client.post(backend.endpoint, json={
            "prompt": REMOTE_PROMPT,
            "command": text.raw,
            "schema": EDIT_CONFIG_SCHEMA,
        }, timeout=backend.timeout)
        resp.raise_for_status()
        doc = resp.json()
    except httpx.HTTPError as exc:
        raise RemoteInterpretError(f"transport failure: {exc}") from exc
    finally:
        if own_client:
            client.close()

    if not isinstance(doc, list):
        raise RemoteInterpretError("response must be a JSON list of configs")
    configs = []
    for i, item in enumerate(doc):
        try:
            jsonschema.validate(item, EDIT_CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            offending = "/".join(str(p) for p in exc.absolute_path) or "(root)"
            raise RemoteInterpretError(
                f"config {i} violates schema at {offending}: {exc.message}") from exc
        configs.append(EditConfig.from_dict(item))
    return configs


def validate_config_dict(doc: dict) -> None:
    jsonschema.validate(doc, EDIT_CONFIG_SCHEMA)
