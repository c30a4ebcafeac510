"""Feed intake: JSON Lines feed files, normalization, source trust registry.

Feed file layout (UTF-8 JSON Lines)::

    {"source": "wordnet", "source_version": "3.1", "back_pointer": "https://..."}
    {"src": {"name": "Human", "type": "Word"}, "edge": "CanUse",
     "dst": {"name": "Cup", "type": "Word", "media_ref": "media/cup.png"}}

The first line is the header; every following non-empty line is one edge
assertion.  Unknown sources are auto-registered at trust 0.5.
"""

from __future__ import annotations

import datetime
import json
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import FeedError, ValidationError
from .graph import EdgeTypeRegistry

DEFAULT_TRUST = 0.5


@dataclass(frozen=True)
class Descriptor:
    name: str
    node_type: str
    media_ref: Optional[str] = None
    properties: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Assertion:
    src: Descriptor
    dst: Descriptor
    edge_type: str


@dataclass(frozen=True)
class Feed:
    feed_id: str
    source: str
    source_version: str
    timestamp: str  # UTC ISO-8601
    back_pointer: str
    assertions: tuple[Assertion, ...]

    def payload(self) -> dict:
        return {
            "feed_id": self.feed_id,
            "source": self.source,
            "source_version": self.source_version,
            "timestamp": self.timestamp,
            "back_pointer": self.back_pointer,
            "assertions": [
                {
                    "src": _desc_dict(a.src),
                    "edge": a.edge_type,
                    "dst": _desc_dict(a.dst),
                }
                for a in self.assertions
            ],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Feed":
        return cls(
            feed_id=payload["feed_id"],
            source=payload["source"],
            source_version=payload.get("source_version", ""),
            timestamp=payload.get("timestamp", ""),
            back_pointer=payload.get("back_pointer", ""),
            assertions=tuple(
                Assertion(_desc(a["src"]), _desc(a["dst"]), a["edge"])
                for a in payload["assertions"]
            ),
        )


def _desc_dict(d: Descriptor) -> dict:
    out = {"name": d.name, "type": d.node_type}
    if d.media_ref:
        out["media_ref"] = d.media_ref
    if d.properties:
        out["properties"] = dict(d.properties)
    return out


def _desc(raw: dict, line: Optional[int] = None) -> Descriptor:
    if not isinstance(raw, dict):
        raise FeedError("descriptor must be an object", line)
    name = raw.get("name")
    node_type = raw.get("type")
    if not name or not isinstance(name, str):
        raise FeedError("descriptor is missing a nonempty 'name'", line)
    if not node_type or not isinstance(node_type, str):
        raise FeedError("descriptor is missing a nonempty 'type'", line)
    props = raw.get("properties") or {}
    return Descriptor(name, node_type, raw.get("media_ref"),
                      tuple(sorted(props.items())))


def utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def parse_feed_text(text: str, registry: EdgeTypeRegistry,
                    sources: Optional["SourceRegistry"] = None) -> Feed:
    lines = text.splitlines()
    header = None
    assertions: list[Assertion] = []
    header_line = None
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FeedError(f"invalid JSON: {exc.msg}", lineno) from None
        if not isinstance(obj, dict):
            raise FeedError("each line must be a JSON object", lineno)
        if header is None:
            if "source" not in obj:
                raise FeedError("header line must declare 'source'", lineno)
            header = obj
            header_line = lineno
            continue
        if "edge" not in obj or "src" not in obj or "dst" not in obj:
            raise FeedError("assertion needs 'src', 'edge' and 'dst'", lineno)
        if not isinstance(obj["edge"], str) or not obj["edge"]:
            raise FeedError("'edge' must be a nonempty string", lineno)
        assertions.append(Assertion(
            _desc(obj["src"], lineno), _desc(obj["dst"], lineno), obj["edge"]))
    if header is None:
        raise FeedError("feed has no header line")
    if not assertions:
        raise FeedError("assertions nonempty: feed declares no edges",
                        header_line)
    unknown = sorted({a.edge_type for a in assertions
                      if a.edge_type not in registry})
    if unknown:
        raise FeedError("unregistered edge types: " + ", ".join(unknown))
    source = str(header["source"])
    if sources is not None and source not in sources:
        sources.register(source, DEFAULT_TRUST,
                         "auto-registered at feed ingest")
    return Feed(
        feed_id=str(header.get("feed_id") or uuid.uuid4()),
        source=source,
        source_version=str(header.get("source_version", "")),
        timestamp=str(header.get("timestamp") or utcnow()),
        back_pointer=str(header.get("back_pointer", "")),
        assertions=tuple(assertions),
    )


def parse_feed_file(path: str | Path, registry: EdgeTypeRegistry,
                    sources: Optional["SourceRegistry"] = None) -> Feed:
    path = Path(path)
    if not path.exists():
        raise FeedError(f"no such feed file: {path}")
    return parse_feed_text(path.read_text(encoding="utf-8"), registry, sources)


class SourceRegistry:
    """Trust registry persisted as a small ``sources.toml`` file."""

    def __init__(self, path: Optional[Path] = None):
        self.path = Path(path) if path else None
        self.entries: dict[str, dict] = {}
        if self.path and self.path.exists():
            self._load()

    def __contains__(self, source: str) -> bool:
        return source in self.entries

    def trust(self, source: str) -> float:
        entry = self.entries.get(source)
        return entry["trust"] if entry else DEFAULT_TRUST

    def register(self, source: str, trust: float, description: str = "") -> None:
        if not source:
            raise ValidationError("source id must be nonempty")
        if not 0.0 <= trust <= 1.0:
            raise ValidationError(f"trust must be in [0,1], got {trust}")
        previous = self.entries.get(source)
        self.entries[source] = {"trust": float(trust), "description": description}
        self._save(audit=(f"{source}: trust {previous['trust']} -> {trust}"
                          if previous else None))

    def _load(self) -> None:
        import sys
        if sys.version_info >= (3, 11):
            import tomllib
        else:
            import tomli as tomllib
        with open(self.path, "rb") as fh:
            raw = tomllib.load(fh)
        for source, entry in raw.items():
            if not isinstance(entry, dict):
                continue
            self.entries[source] = {
                "trust": float(entry.get("trust", DEFAULT_TRUST)),
                "description": str(entry.get("description", "")),
            }

    def _save(self, audit: Optional[str] = None) -> None:
        if self.path is None:
            return
        audit_lines = []
        if self.path.exists():
            audit_lines = [l for l in self.path.read_text().splitlines()
                           if l.startswith("# audit:")]
        if audit:
            audit_lines.append(f"# audit: {utcnow()} {audit}")
        lines = list(audit_lines)
        for source in sorted(self.entries):
            entry = self.entries[source]
            lines.append(f"[{_toml_key(source)}]")
            lines.append(f"trust = {entry['trust']}")
            lines.append(f'description = "{_toml_escape(entry["description"])}"')
            lines.append("")
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("\n".join(lines), encoding="utf-8")


def _toml_key(key: str) -> str:
    if key.replace("-", "").replace("_", "").isalnum():
        return key
    return '"' + _toml_escape(key) + '"'


def _toml_escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace('"', '\\"')
