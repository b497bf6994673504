"""Object-file layouts carrying embedded manifests or detached-manifest stubs.

Text layout (every line LF-terminated, payload follows the ``End`` line)::

    #%VAMP-Version: 1
    #%VAMP-ManifestType: Embedded
    #%VAMP-ManifestSerialization: JSON
    #%VAMP-Manifest: <Base64 of envelope bytes>
    #%VAMP-End

A detached stub replaces the ``Manifest`` line with
``#%VAMP-ManifestLocator: <URI>``.

Binary layout: ``b"VAMP"``, version ``0x01``, type (``0x01`` embedded,
``0x02`` detached), serialization (``0x01`` JSON, ``0x02`` CBOR), a 32-bit
big-endian length, then the envelope (or UTF-8 locator), then the payload.

Bindings always cover the payload region only, never the header.
"""

from __future__ import annotations

import base64
import binascii
import logging
import os
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Protocol
from urllib.parse import urlparse
from urllib.request import url2pathname

from .binding import bind_static, verify_binding
from .crypto import SignedManifest
from .errors import (
    BindingMismatch,
    CorruptHeader,
    DivergentCopies,
    InvalidLocator,
    MalformedEnvelope,
    ManifestNotFound,
    OversizeManifest,
)
from .manifest import Format, compute_manifest_id

log = logging.getLogger(__name__)

MAX_ENVELOPE_BYTES = 16 * 1024 * 1024
VERSION = 1
MAGIC = b"VAMP"
TEXT_PREFIX = b"#%VAMP-"
SIDECAR_SUFFIX = ".man"

_TYPE_BYTES = {"Embedded": 0x01, "Detached": 0x02}
_SER_BYTES = {Format.JSON: 0x01, Format.CBOR: 0x02}
_BIN_HEADER = struct.Struct(">4sBBBI")


class ContainerKind(str, Enum):
    TEXT = "text"
    BINARY = "binary"
    BARE = "bare"


class ManifestType(str, Enum):
    EMBEDDED = "Embedded"
    DETACHED = "Detached"


@dataclass(frozen=True)
class ContainerHeader:
    kind: ContainerKind
    payload_offset: int
    payload_length: int
    manifest_type: ManifestType | None = None
    serialization: Format | None = None
    envelope_bytes: bytes | None = None
    locator: str | None = None

    @property
    def payload_span(self) -> tuple[int, int]:
        return self.payload_offset, self.payload_length

    def payload(self, data: bytes) -> bytes:
        return data[self.payload_offset : self.payload_offset + self.payload_length]

    @property
    def envelope(self) -> SignedManifest | None:
        return None if self.envelope_bytes is None else SignedManifest.from_bytes(self.envelope_bytes)


def _envelope_bytes(envelope: SignedManifest | bytes) -> tuple[bytes, SignedManifest]:
    if isinstance(envelope, SignedManifest):
        return envelope.to_bytes(), envelope
    return bytes(envelope), SignedManifest.from_bytes(bytes(envelope))


def _text_header(lines: list[str]) -> bytes:
    return "".join(f"#%VAMP-{line}\n" for line in lines).encode("utf-8")


def embed_manifest(payload: bytes, envelope: SignedManifest | bytes, container_kind: ContainerKind | str = "text") -> bytes:
    """Wrap ``payload`` with an embedded signed manifest.

    The manifest's bindings must verify against ``payload``.
    """
    kind = ContainerKind(container_kind)
    raw, env = _envelope_bytes(envelope)
    if len(raw) > MAX_ENVELOPE_BYTES:
        raise OversizeManifest(f"envelope is {len(raw)} bytes, limit {MAX_ENVELOPE_BYTES}")
    manifest = env.manifest()
    failed = [r.binding_name for r in (verify_binding(payload, b) for b in manifest.bindings) if not r.passed]
    if failed:
        raise BindingMismatch(f"payload does not match binding set(s) {failed}")
    if kind is ContainerKind.TEXT:
        header = _text_header(
            [
                f"Version: {VERSION}",
                "ManifestType: Embedded",
                f"ManifestSerialization: {env.serialization.value}",
                f"Manifest: {base64.b64encode(raw).decode('ascii')}",
                "End",
            ]
        )
        return header + payload
    if kind is ContainerKind.BINARY:
        head = _BIN_HEADER.pack(MAGIC, VERSION, _TYPE_BYTES["Embedded"], _SER_BYTES[env.serialization], len(raw))
        return head + raw + payload
    raise ValueError("cannot embed into a bare container")


def write_detached_stub(
    payload: bytes,
    locator: str,
    serialization: Format | str = Format.JSON,
    container_kind: ContainerKind | str = "text",
) -> bytes:
    kind = ContainerKind(container_kind)
    ser = Format.coerce(serialization)
    if not locator or not isinstance(locator, str):
        raise InvalidLocator("locator must be a non-empty string")
    if any(c in locator for c in "\r\n"):
        raise InvalidLocator("locator must not contain line breaks")
    if kind is ContainerKind.TEXT:
        header = _text_header(
            [
                f"Version: {VERSION}",
                "ManifestType: Detached",
                f"ManifestSerialization: {ser.value}",
                f"ManifestLocator: {locator}",
                "End",
            ]
        )
        return header + payload
    if kind is ContainerKind.BINARY:
        raw = locator.encode("utf-8")
        return _BIN_HEADER.pack(MAGIC, VERSION, _TYPE_BYTES["Detached"], _SER_BYTES[ser], len(raw)) + raw + payload
    raise ValueError("cannot write a stub as a bare container")


def _decode_envelope_field(raw: bytes) -> bytes:
    try:
        SignedManifest.from_bytes(raw)
    except MalformedEnvelope as exc:
        raise CorruptHeader(f"embedded envelope is unreadable: {exc}") from None
    return raw


def _extract_text(data: bytes) -> ContainerHeader:
    pos = 0
    fields: list[tuple[str, str]] = []
    while True:
        end = data.find(b"\n", pos)
        if end < 0:
            raise CorruptHeader("truncated header: no #%VAMP-End line")
        line = data[pos:end]
        pos = end + 1
        if not line.startswith(TEXT_PREFIX):
            raise CorruptHeader(f"unexpected header line {line[:40]!r}")
        body = line[len(TEXT_PREFIX) :].decode("utf-8", errors="replace")
        if body == "End":
            break
        name, sep, value = body.partition(": ")
        if not sep:
            raise CorruptHeader(f"malformed header line {line[:40]!r}")
        fields.append((name, value))

    names = [n for n, _ in fields]
    values = dict(fields)
    if names[:1] != ["Version"] or values.get("Version") != str(VERSION):
        raise CorruptHeader(f"unknown container version {values.get('Version')!r}")
    mtype = values.get("ManifestType")
    expected = {
        "Embedded": ["Version", "ManifestType", "ManifestSerialization", "Manifest"],
        "Detached": ["Version", "ManifestType", "ManifestSerialization", "ManifestLocator"],
    }.get(mtype)
    if expected is None or names != expected:
        raise CorruptHeader(f"header fields {names} do not match the {mtype!r} layout")
    try:
        ser = Format(values["ManifestSerialization"])
    except ValueError:
        raise CorruptHeader(f"unknown serialization {values['ManifestSerialization']!r}") from None
    common = dict(
        kind=ContainerKind.TEXT,
        payload_offset=pos,
        payload_length=len(data) - pos,
        manifest_type=ManifestType(mtype),
        serialization=ser,
    )
    if mtype == "Detached":
        if not values["ManifestLocator"]:
            raise CorruptHeader("empty manifest locator")
        return ContainerHeader(locator=values["ManifestLocator"], **common)
    text = values["Manifest"]
    try:
        raw = base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError):
        raise CorruptHeader("manifest field is not valid Base64") from None
    if base64.b64encode(raw).decode("ascii") != text:
        raise CorruptHeader("manifest field is not canonical Base64")
    return ContainerHeader(envelope_bytes=_decode_envelope_field(raw), **common)


def _extract_binary(data: bytes) -> ContainerHeader:
    if len(data) < _BIN_HEADER.size:
        raise CorruptHeader("truncated binary header")
    _, version, type_byte, ser_byte, length = _BIN_HEADER.unpack_from(data)
    if version != VERSION:
        raise CorruptHeader(f"unknown container version {version}")
    types = {v: k for k, v in _TYPE_BYTES.items()}
    sers = {v: k for k, v in _SER_BYTES.items()}
    if type_byte not in types or ser_byte not in sers:
        raise CorruptHeader("unknown manifest type or serialization byte")
    start = _BIN_HEADER.size
    end = start + length
    if end > len(data):
        raise CorruptHeader("truncated manifest field")
    if length > MAX_ENVELOPE_BYTES:
        raise CorruptHeader("manifest field exceeds the size limit")
    field = data[start:end]
    common = dict(
        kind=ContainerKind.BINARY,
        payload_offset=end,
        payload_length=len(data) - end,
        manifest_type=ManifestType(types[type_byte]),
        serialization=sers[ser_byte],
    )
    if types[type_byte] == "Detached":
        try:
            locator = field.decode("utf-8")
        except UnicodeDecodeError:
            raise CorruptHeader("locator is not UTF-8") from None
        if not locator:
            raise CorruptHeader("empty manifest locator")
        return ContainerHeader(locator=locator, **common)
    return ContainerHeader(envelope_bytes=_decode_envelope_field(field), **common)


def extract(data: bytes) -> ContainerHeader:
    """Classify ``data`` as a text, binary or bare container and locate its payload."""
    if data.startswith(TEXT_PREFIX):
        return _extract_text(data)
    if data.startswith(MAGIC):
        return _extract_binary(data)
    return ContainerHeader(ContainerKind.BARE, 0, len(data))


def detached_manifest_path(object_path: str | os.PathLike) -> str | Path:
    """``data/training.csv`` -> ``data/training.csv.man``."""
    if isinstance(object_path, Path):
        return object_path.with_name(object_path.name + SIDECAR_SUFFIX)
    return os.fspath(object_path) + SIDECAR_SUFFIX


# ---------------------------------------------------------------- resolution


class ManifestSource(str, Enum):
    EMBEDDED = "embedded"
    DETACHED_LOCAL = "detached-local"
    DETACHED_CLOUD = "detached-cloud"


class CloudLookup(Protocol):
    def fetch_envelope(self, manifest_id: str) -> bytes | None: ...

    def fetch_locator(self, locator: str) -> bytes | None: ...

    def find_by_content(self, digest: str) -> list[bytes]: ...


@dataclass(frozen=True)
class Resolution:
    envelope_bytes: bytes
    source: ManifestSource
    header: ContainerHeader

    @property
    def envelope(self) -> SignedManifest:
        return SignedManifest.from_bytes(self.envelope_bytes)


def envelope_manifest_id(envelope_bytes: bytes) -> str:
    return compute_manifest_id(SignedManifest.from_bytes(envelope_bytes).manifest())


def _check_cloud_copy(local: bytes, registry: CloudLookup | None) -> None:
    if registry is None:
        return
    cloud = registry.fetch_envelope(envelope_manifest_id(local))
    if cloud is not None and cloud != local:
        raise DivergentCopies("local and cloud copies of the manifest differ")


def _read_local_locator(locator: str, base: Path) -> bytes | None:
    parsed = urlparse(locator)
    if parsed.scheme == "file":
        path = Path(url2pathname(parsed.path))
    elif parsed.scheme == "":
        path = base / locator
    else:
        return None
    return path.read_bytes() if path.is_file() else None


def resolve_manifest(object_path: str | os.PathLike, registry: CloudLookup | None = None) -> Resolution:
    """Find an object's signed manifest: embedded, then ``.man`` sidecar, then registry."""
    object_path = Path(object_path)
    data = object_path.read_bytes()
    header = extract(data)
    sidecar = detached_manifest_path(object_path)

    if header.manifest_type is ManifestType.EMBEDDED:
        if sidecar.exists():
            log.warning("ignoring sidecar %s: %s has an embedded manifest", sidecar, object_path)
        _check_cloud_copy(header.envelope_bytes, registry)
        return Resolution(header.envelope_bytes, ManifestSource.EMBEDDED, header)

    if sidecar.exists():
        local = sidecar.read_bytes()
        _check_cloud_copy(local, registry)
        return Resolution(local, ManifestSource.DETACHED_LOCAL, header)

    if header.locator is not None:
        local = _read_local_locator(header.locator, object_path.parent)
        if local is not None:
            _check_cloud_copy(local, registry)
            return Resolution(local, ManifestSource.DETACHED_LOCAL, header)
        if registry is not None:
            cloud = registry.fetch_locator(header.locator)
            if cloud is not None:
                return Resolution(cloud, ManifestSource.DETACHED_CLOUD, header)
    elif registry is not None:
        digest = bind_static(header.payload(data)).body.digest
        found = registry.find_by_content(str(digest))
        if found:
            return Resolution(found[-1], ManifestSource.DETACHED_CLOUD, header)
    raise ManifestNotFound(f"no manifest found for {object_path}")
