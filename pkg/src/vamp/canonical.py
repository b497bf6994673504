"""Canonical JSON and deterministic CBOR codecs.

Both codecs work on the same small value model: ``dict`` with ``str`` keys,
``list``/``tuple``, ``str``, ``int``, ``bool`` and ``None``. CBOR additionally
carries ``bytes`` natively; JSON callers must Base64 or hex-encode them first.
Floats are rejected by both encoders.

Decoders take a ``strict`` flag. In strict mode any deviation from the
canonical byte form raises :class:`NonCanonical`; in lenient mode the value is
returned and the deviations are appended to the optional ``problems`` list.
"""

from __future__ import annotations

import json
import struct
from typing import Any

from .errors import MalformedInput, NonCanonical

__all__ = ["dumps_json", "loads_json", "dumps_cbor", "loads_cbor"]


# ---------------------------------------------------------------- JSON


def _check_json_value(value: Any, path: str = "$") -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            if not isinstance(k, str):
                raise TypeError(f"{path}: non-string key {k!r}")
            _check_json_value(v, f"{path}.{k}")
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _check_json_value(v, f"{path}[{i}]")
    elif isinstance(value, float):
        raise TypeError(f"{path}: floats are not allowed in canonical JSON")
    elif isinstance(value, bytes):
        raise TypeError(f"{path}: bytes must be encoded before JSON serialization")
    elif value is not None and not isinstance(value, (str, int, bool)):
        raise TypeError(f"{path}: unsupported type {type(value).__name__}")


def dumps_json(value: Any) -> bytes:
    """UTF-8, keys sorted by code point, no whitespace, minimal escaping."""
    _check_json_value(value)
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    ).encode("utf-8")


def _reject_float(token: str):
    raise MalformedInput(f"non-integer number {token!r}")


def loads_json(data: bytes, *, strict: bool = True, problems: list[str] | None = None) -> Any:
    found: list[str] = []

    def pairs_hook(pairs):
        keys = [k for k, _ in pairs]
        if len(set(keys)) != len(keys):
            found.append("duplicate key")
        if keys != sorted(keys):
            found.append("unsorted keys")
        return dict(pairs)

    try:
        text = data.decode("utf-8")
        value = json.loads(
            text,
            object_pairs_hook=pairs_hook,
            parse_float=_reject_float,
            parse_constant=_reject_float,
        )
    except UnicodeDecodeError as exc:
        raise MalformedInput(f"invalid UTF-8: {exc}") from None
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON: {exc}") from None

    if not found and dumps_json(value) != data:
        found.append("non-canonical byte form")
    if found:
        if strict:
            raise NonCanonical(", ".join(dict.fromkeys(found)))
        if problems is not None:
            problems.extend(dict.fromkeys(found))
    return value


# ---------------------------------------------------------------- CBOR

_MAJOR_UINT, _MAJOR_NINT, _MAJOR_BYTES, _MAJOR_TEXT = 0, 1, 2, 3
_MAJOR_ARRAY, _MAJOR_MAP, _MAJOR_SIMPLE = 4, 5, 7


def _head(major: int, arg: int) -> bytes:
    if arg < 24:
        return bytes([(major << 5) | arg])
    if arg < 0x100:
        return bytes([(major << 5) | 24, arg])
    if arg < 0x10000:
        return bytes([(major << 5) | 25]) + struct.pack(">H", arg)
    if arg < 0x100000000:
        return bytes([(major << 5) | 26]) + struct.pack(">I", arg)
    if arg < 0x10000000000000000:
        return bytes([(major << 5) | 27]) + struct.pack(">Q", arg)
    raise ValueError("integer out of CBOR range")


def _encode(value: Any, out: bytearray) -> None:
    if value is False:
        out.append(0xF4)
    elif value is True:
        out.append(0xF5)
    elif value is None:
        out.append(0xF6)
    elif isinstance(value, int):
        if value >= 0:
            out += _head(_MAJOR_UINT, value)
        else:
            out += _head(_MAJOR_NINT, -1 - value)
    elif isinstance(value, (bytes, bytearray)):
        out += _head(_MAJOR_BYTES, len(value))
        out += value
    elif isinstance(value, str):
        raw = value.encode("utf-8")
        out += _head(_MAJOR_TEXT, len(raw))
        out += raw
    elif isinstance(value, (list, tuple)):
        out += _head(_MAJOR_ARRAY, len(value))
        for item in value:
            _encode(item, out)
    elif isinstance(value, dict):
        items = []
        for k, v in value.items():
            kb = bytearray()
            _encode(k, kb)
            items.append((bytes(kb), v))
        items.sort(key=lambda kv: kv[0])
        out += _head(_MAJOR_MAP, len(items))
        for kb, v in items:
            out += kb
            _encode(v, out)
    else:
        raise TypeError(f"unsupported type for CBOR: {type(value).__name__}")


def dumps_cbor(value: Any) -> bytes:
    """Deterministic core encoding: definite lengths, shortest heads, sorted keys."""
    out = bytearray()
    _encode(value, out)
    return bytes(out)


class _CborReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.problems: list[str] = []

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedInput("truncated CBOR")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def _argument(self, info: int) -> int | None:
        if info < 24:
            return info
        if info == 31:
            return None
        if info > 27:
            raise MalformedInput(f"reserved additional info {info}")
        size = 1 << (info - 24)
        arg = int.from_bytes(self._take(size), "big")
        minimum = {1: 24, 2: 0x100, 4: 0x10000, 8: 0x100000000}[size]
        if arg < minimum:
            self.problems.append("non-shortest integer encoding")
        return arg

    def _indefinite_string(self, major: int) -> bytes:
        self.problems.append("indefinite-length item")
        parts = []
        while True:
            if self.data[self.pos : self.pos + 1] == b"\xff":
                self.pos += 1
                return b"".join(parts)
            ib = self._take(1)[0]
            if ib >> 5 != major:
                raise MalformedInput("bad chunk in indefinite string")
            n = self._argument(ib & 0x1F)
            if n is None:
                raise MalformedInput("nested indefinite string")
            parts.append(self._take(n))

    def read(self) -> Any:
        ib = self._take(1)[0]
        major, info = ib >> 5, ib & 0x1F
        if major == _MAJOR_SIMPLE:
            if info == 20:
                return False
            if info == 21:
                return True
            if info == 22:
                return None
            raise MalformedInput(f"unsupported simple/float value 0x{ib:02x}")
        if major == 6:
            raise MalformedInput("CBOR tags are not supported")
        arg = self._argument(info)
        if major == _MAJOR_UINT:
            if arg is None:
                raise MalformedInput("indefinite integer")
            return arg
        if major == _MAJOR_NINT:
            if arg is None:
                raise MalformedInput("indefinite integer")
            return -1 - arg
        if major in (_MAJOR_BYTES, _MAJOR_TEXT):
            raw = self._indefinite_string(major) if arg is None else self._take(arg)
            if major == _MAJOR_BYTES:
                return raw
            try:
                return raw.decode("utf-8")
            except UnicodeDecodeError:
                raise MalformedInput("invalid UTF-8 in text string") from None
        if major == _MAJOR_ARRAY:
            if arg is None:
                self.problems.append("indefinite-length item")
                items = []
                while self.data[self.pos : self.pos + 1] != b"\xff":
                    items.append(self.read())
                self.pos += 1
                return items
            return [self.read() for _ in range(arg)]
        # map
        result: dict = {}
        prev_key: bytes | None = None
        count = 0
        while True:
            if arg is None:
                if self.data[self.pos : self.pos + 1] == b"\xff":
                    self.pos += 1
                    break
                if count == 0:
                    self.problems.append("indefinite-length item")
            elif count == arg:
                break
            start = self.pos
            key = self.read()
            key_bytes = self.data[start : self.pos]
            if not isinstance(key, str):
                raise MalformedInput("map keys must be text strings")
            if prev_key is not None:
                if key_bytes == prev_key or key in result:
                    self.problems.append("duplicate key")
                elif key_bytes < prev_key:
                    self.problems.append("unsorted keys")
            prev_key = key_bytes
            result[key] = self.read()
            count += 1
        return result


def loads_cbor(data: bytes, *, strict: bool = True, problems: list[str] | None = None) -> Any:
    reader = _CborReader(bytes(data))
    value = reader.read()
    if reader.pos != len(reader.data):
        raise MalformedInput("trailing bytes after CBOR item")
    found = list(dict.fromkeys(reader.problems))
    if found:
        if strict:
            raise NonCanonical(", ".join(found))
        if problems is not None:
            problems.extend(found)
    return value
