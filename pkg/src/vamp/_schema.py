"""Small helpers for type-checking decoded manifest values."""

from __future__ import annotations

import base64
import binascii
from typing import Any

from .errors import SchemaViolation
from .hashing import Digest

_MISSING = object()


def expect_map(value: Any, path: str, keys: set[str], required: set[str]) -> dict:
    if not isinstance(value, dict):
        raise SchemaViolation(f"{path}: expected an object")
    unknown = set(value) - keys
    if unknown:
        raise SchemaViolation(f"{path}: unknown field(s) {sorted(unknown)}")
    missing = required - set(value)
    if missing:
        raise SchemaViolation(f"{path}: missing required field(s) {sorted(missing)}")
    return value


def get(obj: dict, key: str, kind, path: str, *, optional: bool = False, nulls_ok: bool = False):
    value = obj.get(key, _MISSING)
    if value is _MISSING or (value is None and nulls_ok):
        if optional:
            return None
        raise SchemaViolation(f"{path}.{key}: required")
    if kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        name = getattr(kind, "__name__", str(kind))
        raise SchemaViolation(f"{path}.{key}: expected {name}, got {type(value).__name__}")
    return value


def digest_from_value(value: Any, algorithm: str, binary: bool, path: str) -> Digest:
    try:
        if binary:
            if not isinstance(value, bytes):
                raise SchemaViolation(f"{path}: expected byte string digest")
            return Digest(algorithm, value)
        if not isinstance(value, str):
            raise SchemaViolation(f"{path}: expected 'alg:hex' digest string")
        return Digest.parse(value)
    except ValueError as exc:
        raise SchemaViolation(f"{path}: {exc}") from None


def digest_to_value(digest: Digest, binary: bool):
    return digest.value if binary else str(digest)


def bytes_to_value(data: bytes, binary: bool):
    return data if binary else base64.b64encode(data).decode("ascii")


def bytes_from_value(value: Any, binary: bool, path: str) -> bytes:
    if binary:
        if not isinstance(value, bytes):
            raise SchemaViolation(f"{path}: expected byte string")
        return value
    if not isinstance(value, str):
        raise SchemaViolation(f"{path}: expected Base64 string")
    try:
        raw = base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError):
        raise SchemaViolation(f"{path}: invalid Base64") from None
    if base64.b64encode(raw).decode("ascii") != value:
        raise SchemaViolation(f"{path}: non-canonical Base64")
    return raw
