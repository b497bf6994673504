"""Manifest data model, canonical serialization and self-certifying identity."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Any

from ._schema import expect_map, get
from .binding import BindingSet
from .canonical import dumps_cbor, dumps_json, loads_cbor, loads_json
from .errors import InvalidManifest, NonCanonical, SchemaViolation, UnsupportedFormat
from .hashing import SHA2_256, hash_bytes

SCHEMA_VERSION = 1
MAX_OBJECT_ID_BYTES = 1024

_MANIFEST_ID_RE = re.compile(r"^sha2-256:[0-9a-f]{64}$")
_TIMESTAMP_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$")


class Format(str, Enum):
    JSON = "JSON"
    CBOR = "CBOR"

    @classmethod
    def coerce(cls, value: "Format | str") -> "Format":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise UnsupportedFormat(f"unknown serialization format {value!r}") from None


class ObjectType(str, Enum):
    DATASET = "dataset"
    CODE = "code"
    PACKAGE = "package"
    CONTAINER = "container"
    MODEL = "model"
    MEDIA = "media"
    OTHER = "other"


class FacsimileRelation(str, Enum):
    SPLIT_OF = "split-of"
    REBINDING = "rebinding"
    SUBSAMPLE = "subsample"
    OVERSAMPLE = "oversample"
    SAME_CONTENT = "same-content"
    OTHER = "other"


class NonCanonicalWarning(UserWarning):
    """Issued by lenient parsing when the input was not in canonical form."""


def is_manifest_id(value: object) -> bool:
    return isinstance(value, str) and bool(_MANIFEST_ID_RE.match(value))


def utc_timestamp(dt: datetime | None = None) -> str:
    """RFC 3339, seconds precision, ``Z`` suffix."""
    dt = dt or datetime.now(timezone.utc)
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    if not isinstance(text, str) or not _TIMESTAMP_RE.match(text):
        raise ValueError(f"not an RFC 3339 UTC timestamp: {text!r}")
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)


@dataclass(frozen=True)
class FacsimileRef:
    manifest_id: str
    relation: FacsimileRelation
    note: str | None = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "relation", FacsimileRelation(self.relation))
        except ValueError:
            pass  # reported by validate_manifest

    def to_value(self) -> dict:
        v = {"manifestId": self.manifest_id, "relation": _enum_text(self.relation)}
        if self.note is not None:
            v["note"] = self.note
        return v


def _enum_text(value) -> str:
    return value.value if isinstance(value, Enum) else value


@dataclass(frozen=True)
class Manifest:
    object_id: str
    object_type: ObjectType
    encoding_information: str
    created_at: str
    bindings: tuple[BindingSet, ...]
    origin_manifest_ids: tuple[str, ...] = ()
    facsimiles: tuple[FacsimileRef, ...] = ()
    master_copy_locator: str | None = None
    copyright: str | None = None
    transformation: str | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        try:
            object.__setattr__(self, "object_type", ObjectType(self.object_type))
        except ValueError:
            pass  # reported by validate_manifest
        for name in ("bindings", "origin_manifest_ids", "facsimiles"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def binding(self, name: str) -> BindingSet:
        for b in self.bindings:
            if b.name == name:
                return b
        raise KeyError(name)

    def evolve(self, **changes) -> "Manifest":
        return replace(self, **changes)

    def to_value(self, binary: bool = False) -> dict:
        v: dict[str, Any] = {
            "schemaVersion": self.schema_version,
            "objectId": self.object_id,
            "objectType": _enum_text(self.object_type),
            "encodingInformation": self.encoding_information,
            "createdAt": self.created_at,
            "originManifestIds": list(self.origin_manifest_ids),
            "facsimiles": [f.to_value() for f in self.facsimiles],
            "bindings": [b.to_value(binary) for b in self.bindings],
        }
        for key, attr in (
            ("masterCopyLocator", self.master_copy_locator),
            ("copyright", self.copyright),
            ("transformation", self.transformation),
        ):
            if attr is not None:
                v[key] = attr
        return v


_REQUIRED = {
    "schemaVersion",
    "objectId",
    "objectType",
    "encodingInformation",
    "createdAt",
    "originManifestIds",
    "facsimiles",
    "bindings",
}
_OPTIONAL = {"masterCopyLocator", "copyright", "transformation"}


def manifest_from_value(value: Any, binary: bool, *, nulls_ok: bool = False) -> Manifest:
    v = expect_map(value, "$", _REQUIRED | _OPTIONAL, _REQUIRED)
    origins = get(v, "originManifestIds", list, "$")
    for i, o in enumerate(origins):
        if not isinstance(o, str):
            raise SchemaViolation(f"$.originManifestIds[{i}]: expected str")
    facsimiles = []
    for i, f in enumerate(get(v, "facsimiles", list, "$")):
        path = f"$.facsimiles[{i}]"
        fv = expect_map(f, path, {"manifestId", "relation", "note"}, {"manifestId", "relation"})
        facsimiles.append(
            FacsimileRef(
                get(fv, "manifestId", str, path),
                get(fv, "relation", str, path),
                get(fv, "note", str, path, optional=True, nulls_ok=nulls_ok),
            )
        )
    raw_bindings = get(v, "bindings", list, "$")
    if not raw_bindings:
        raise SchemaViolation("$.bindings: must contain at least one binding set")
    bindings = tuple(BindingSet.from_value(b, binary, f"$.bindings[{i}]") for i, b in enumerate(raw_bindings))
    object_type = get(v, "objectType", str, "$")
    try:
        object_type = ObjectType(object_type)
    except ValueError:
        raise SchemaViolation(f"$.objectType: unknown object type {object_type!r}") from None
    return Manifest(
        schema_version=get(v, "schemaVersion", int, "$"),
        object_id=get(v, "objectId", str, "$"),
        object_type=object_type,
        encoding_information=get(v, "encodingInformation", str, "$"),
        created_at=get(v, "createdAt", str, "$"),
        origin_manifest_ids=tuple(origins),
        facsimiles=tuple(facsimiles),
        bindings=bindings,
        master_copy_locator=get(v, "masterCopyLocator", str, "$", optional=True, nulls_ok=nulls_ok),
        copyright=get(v, "copyright", str, "$", optional=True, nulls_ok=nulls_ok),
        transformation=get(v, "transformation", str, "$", optional=True, nulls_ok=nulls_ok),
    )


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Issue:
    path: str
    code: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.path}: {self.code}" + (f" ({self.detail})" if self.detail else "")


def validate_manifest(manifest: Manifest, manifest_id: str | None = None) -> list[Issue]:
    """Every violated invariant, with a field path. Empty means valid.

    ``manifest_id`` is the id the manifest is known under (e.g. a storage key);
    when omitted it is computed from the manifest itself.
    """
    issues: list[Issue] = []
    add = lambda path, code, detail="": issues.append(Issue(path, code, detail))  # noqa: E731

    if manifest.schema_version != SCHEMA_VERSION or isinstance(manifest.schema_version, bool):
        add("schemaVersion", "unsupported schema version", repr(manifest.schema_version))
    if not isinstance(manifest.object_id, str) or not manifest.object_id:
        add("objectId", "empty objectId")
    elif len(manifest.object_id.encode("utf-8")) > MAX_OBJECT_ID_BYTES:
        add("objectId", "objectId too long", f"> {MAX_OBJECT_ID_BYTES} bytes")
    if not isinstance(manifest.object_type, ObjectType):
        add("objectType", "unknown object type", repr(manifest.object_type))
    if not isinstance(manifest.encoding_information, str):
        add("encodingInformation", "not a string")
    try:
        parse_timestamp(manifest.created_at)
    except ValueError:
        add("createdAt", "invalid timestamp", repr(manifest.created_at))
    for name in ("master_copy_locator", "copyright", "transformation"):
        value = getattr(manifest, name)
        if value is not None and not isinstance(value, str):
            add(name, "not a string")

    seen_origins = set()
    for i, oid in enumerate(manifest.origin_manifest_ids):
        if not is_manifest_id(oid):
            add(f"originManifestIds[{i}]", "malformed manifest id", repr(oid))
        if oid in seen_origins:
            add(f"originManifestIds[{i}]", "duplicate origin", oid)
        seen_origins.add(oid)

    for i, f in enumerate(manifest.facsimiles):
        if not is_manifest_id(f.manifest_id):
            add(f"facsimiles[{i}].manifestId", "malformed manifest id", repr(f.manifest_id))
        if not isinstance(f.relation, FacsimileRelation):
            add(f"facsimiles[{i}].relation", "unknown relation", repr(f.relation))

    if not manifest.bindings:
        add("bindings", "no binding sets")
    names = set()
    for i, b in enumerate(manifest.bindings):
        if not isinstance(b, BindingSet):
            add(f"bindings[{i}]", "not a binding set")
            continue
        if b.name in names:
            add(f"bindings[{i}].name", "duplicate binding name", b.name)
        names.add(b.name)
        for problem in b.structural_issues():
            add(f"bindings[{i}]", "invalid binding", problem)

    if not issues:
        own = manifest_id or _id_of_value(manifest.to_value(binary=False))
        if own in seen_origins:
            add("originManifestIds", "self-reference", own)
    return issues


def _require_valid(manifest: Manifest) -> None:
    issues = validate_manifest(manifest)
    if issues:
        raise InvalidManifest(issues)


# ---------------------------------------------------------------- serialization


def canonical_serialize(manifest: Manifest, format: Format | str = Format.JSON) -> bytes:
    fmt = Format.coerce(format)
    _require_valid(manifest)
    if fmt is Format.JSON:
        return dumps_json(manifest.to_value(binary=False))
    return dumps_cbor(manifest.to_value(binary=True))


def parse_manifest(data: bytes, format: Format | str = Format.JSON, *, strict: bool = True) -> Manifest:
    """Decode a manifest. Strict mode rejects any non-canonical encoding.

    Lenient mode accepts duplicate/unsorted keys, whitespace, non-shortest CBOR
    and nulls for optional fields, issuing :class:`NonCanonicalWarning`.
    """
    fmt = Format.coerce(format)
    problems: list[str] = []
    if fmt is Format.JSON:
        value = loads_json(data, strict=strict, problems=problems)
    else:
        value = loads_cbor(data, strict=strict, problems=problems)
    if isinstance(value, dict):
        nulls = sorted(k for k in _OPTIONAL | {"note"} if k in value and value[k] is None)
        nulls += [
            f"facsimiles[{i}].note"
            for i, f in enumerate(value.get("facsimiles") or [])
            if isinstance(f, dict) and "note" in f and f["note"] is None
        ]
        if nulls:
            if strict:
                raise NonCanonical(f"null given for optional field(s) {nulls}")
            problems.append("null optional field")
    manifest = manifest_from_value(value, binary=fmt is Format.CBOR, nulls_ok=not strict)
    issues = validate_manifest(manifest)
    if issues:
        raise SchemaViolation("; ".join(map(str, issues)))
    if problems:
        warnings.warn(NonCanonicalWarning(", ".join(dict.fromkeys(problems))), stacklevel=2)
    return manifest


def _id_of_value(value: dict) -> str:
    return f"{SHA2_256}:{hash_bytes(SHA2_256, dumps_json(value)).hex}"


def compute_manifest_id(manifest: Manifest) -> str:
    """``sha2-256:<hex>`` over the canonical JSON form, whatever the storage format."""
    return f"{SHA2_256}:{hash_bytes(SHA2_256, canonical_serialize(manifest, Format.JSON)).hex}"


__all__ = [
    "Format",
    "ObjectType",
    "FacsimileRelation",
    "FacsimileRef",
    "Manifest",
    "Issue",
    "NonCanonicalWarning",
    "canonical_serialize",
    "parse_manifest",
    "compute_manifest_id",
    "validate_manifest",
    "is_manifest_id",
    "utc_timestamp",
    "parse_timestamp",
]
