"""SHA-2 digests and their ``alg:hex`` text form."""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass
from typing import BinaryIO, Union

SHA2_256 = "sha2-256"
SHA2_512 = "sha2-512"

_HASHLIB_NAMES = {SHA2_256: "sha256", SHA2_512: "sha512"}
DIGEST_SIZES = {SHA2_256: 32, SHA2_512: 64}
HASH_ALGORITHMS = tuple(_HASHLIB_NAMES)

READ_SIZE = 1 << 16

Source = Union[bytes, bytearray, memoryview, BinaryIO]


def new_hasher(algorithm: str):
    try:
        return hashlib.new(_HASHLIB_NAMES[algorithm])
    except KeyError:
        raise ValueError(f"unsupported hash algorithm {algorithm!r}") from None


def as_stream(source: Source) -> BinaryIO:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return io.BytesIO(bytes(source))
    return source


@dataclass(frozen=True)
class Digest:
    algorithm: str
    value: bytes

    def __post_init__(self):
        if self.algorithm not in DIGEST_SIZES:
            raise ValueError(f"unsupported hash algorithm {self.algorithm!r}")
        if len(self.value) != DIGEST_SIZES[self.algorithm]:
            raise ValueError(
                f"{self.algorithm} digest must be {DIGEST_SIZES[self.algorithm]} bytes, "
                f"got {len(self.value)}"
            )

    @property
    def hex(self) -> str:
        return self.value.hex()

    def __str__(self) -> str:
        return f"{self.algorithm}:{self.value.hex()}"

    @classmethod
    def parse(cls, text: str) -> "Digest":
        """Parse ``alg:hex``; upper-case hex is rejected."""
        alg, sep, hexpart = text.partition(":")
        if not sep or hexpart != hexpart.lower():
            raise ValueError(f"malformed digest text {text!r}")
        try:
            value = bytes.fromhex(hexpart)
        except ValueError:
            raise ValueError(f"malformed digest text {text!r}") from None
        return cls(alg, value)


def hash_bytes(algorithm: str, data: bytes) -> Digest:
    h = new_hasher(algorithm)
    h.update(data)
    return Digest(algorithm, h.digest())


def hash_stream(algorithm: str, source: Source) -> Digest:
    """Digest of every byte readable from ``source`` (bytes or a binary stream)."""
    h = new_hasher(algorithm)
    stream = as_stream(source)
    while True:
        block = stream.read(READ_SIZE)
        if not block:
            break
        h.update(block)
    return Digest(algorithm, h.digest())
