"""Content bindings between manifests and payload bytes.

Four kinds are supported:

* ``static``: one digest over the whole payload.
* ``fixed-chunk``: one digest per consecutive ``chunk_size`` bytes.
* ``box``: digests over labelled, contiguous byte ranges. Minibatch bindings
  are box bindings where each box covers ``B`` consecutive records.
* ``record-merkle``: a Merkle root over individual records, so a batch of any
  size can be checked against one root with a logarithmic proof.

A record is a maximal delimiter-terminated run of bytes, delimiter included.
The final record may lack its delimiter. No newline normalization happens.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, BinaryIO, Iterator, Sequence, Union

from . import merkle
from ._schema import (
    bytes_from_value,
    bytes_to_value,
    digest_from_value,
    digest_to_value,
    expect_map,
    get,
)
from .errors import MalformedProof, RangeOutOfBounds, SchemaViolation
from .hashing import (
    DIGEST_SIZES,
    HASH_ALGORITHMS,
    READ_SIZE,
    SHA2_256,
    Digest,
    Source,
    as_stream,
    hash_bytes,
    hash_stream,
    new_hasher,
)

DEFAULT_CHUNK_SIZE = 1 << 20
DEFAULT_DELIMITER = b"\n"


class BindingKind(str, Enum):
    STATIC = "static"
    FIXED_CHUNK = "fixed-chunk"
    BOX = "box"
    RECORD_MERKLE = "record-merkle"


@dataclass(frozen=True)
class StaticBody:
    digest: Digest


@dataclass(frozen=True)
class ChunkBody:
    chunk_size: int
    total_length: int
    digests: tuple[Digest, ...]

    def __post_init__(self):
        object.__setattr__(self, "digests", tuple(self.digests))


@dataclass(frozen=True)
class Box:
    offset: int
    length: int
    digest: Digest


@dataclass(frozen=True)
class BoxBody:
    boxes: tuple[Box, ...]

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))


@dataclass(frozen=True)
class RecordMerkleBody:
    record_delimiter: bytes
    leaf_count: int
    root: Digest


Body = Union[StaticBody, ChunkBody, BoxBody, RecordMerkleBody]

_BODY_TYPES = {
    BindingKind.STATIC: StaticBody,
    BindingKind.FIXED_CHUNK: ChunkBody,
    BindingKind.BOX: BoxBody,
    BindingKind.RECORD_MERKLE: RecordMerkleBody,
}


@dataclass(frozen=True)
class BindingSet:
    name: str
    kind: BindingKind
    hash_algorithm: str
    body: Body

    def __post_init__(self):
        object.__setattr__(self, "kind", BindingKind(self.kind))

    def structural_issues(self) -> list[str]:
        """Invariant violations that can be detected without the payload."""
        issues = []
        alg = self.hash_algorithm
        if alg not in HASH_ALGORITHMS:
            return [f"unsupported hash algorithm {alg!r}"]
        if not self.name:
            issues.append("empty binding name")
        if not isinstance(self.body, _BODY_TYPES[self.kind]):
            return issues + [f"body does not match kind {self.kind.value}"]
        body = self.body
        digests: list[Digest] = []
        if isinstance(body, StaticBody):
            digests = [body.digest]
        elif isinstance(body, ChunkBody):
            digests = list(body.digests)
            if body.chunk_size <= 0:
                issues.append("chunkSize must be positive")
            elif body.total_length < 0:
                issues.append("totalLength must be non-negative")
            elif len(body.digests) != math.ceil(body.total_length / body.chunk_size):
                issues.append("digest count does not match totalLength / chunkSize")
        elif isinstance(body, BoxBody):
            expected = 0
            for i, box in enumerate(body.boxes):
                digests.append(box.digest)
                if box.length <= 0:
                    issues.append(f"box {i}: length must be positive")
                if box.offset != expected:
                    issues.append(f"box {i}: not contiguous (offset {box.offset}, expected {expected})")
                expected = box.offset + box.length
        else:
            digests = [body.root]
            if not body.record_delimiter:
                issues.append("recordDelimiter must be non-empty")
            if body.leaf_count < 0:
                issues.append("leafCount must be non-negative")
            elif body.leaf_count == 0 and body.root.value != merkle.empty_root(alg):
                issues.append("root of an empty record set must be H(empty)")
        if any(d.algorithm != alg for d in digests):
            issues.append("digest algorithm differs from hashAlgorithm")
        return issues

    # --- value model used by manifest serialization

    def to_value(self, binary: bool) -> dict:
        body = self.body
        if isinstance(body, StaticBody):
            bv: dict[str, Any] = {"digest": digest_to_value(body.digest, binary)}
        elif isinstance(body, ChunkBody):
            bv = {
                "chunkSize": body.chunk_size,
                "totalLength": body.total_length,
                "digests": [digest_to_value(d, binary) for d in body.digests],
            }
        elif isinstance(body, BoxBody):
            bv = {
                "boxes": [
                    {"offset": b.offset, "length": b.length, "digest": digest_to_value(b.digest, binary)}
                    for b in body.boxes
                ]
            }
        else:
            bv = {
                "recordDelimiter": bytes_to_value(body.record_delimiter, binary),
                "leafCount": body.leaf_count,
                "root": digest_to_value(body.root, binary),
            }
        return {
            "name": self.name,
            "kind": self.kind.value,
            "hashAlgorithm": self.hash_algorithm,
            "body": bv,
        }

    @classmethod
    def from_value(cls, value: Any, binary: bool, path: str = "binding") -> "BindingSet":
        v = expect_map(value, path, {"name", "kind", "hashAlgorithm", "body"}, {"name", "kind", "hashAlgorithm", "body"})
        name = get(v, "name", str, path)
        kind_text = get(v, "kind", str, path)
        alg = get(v, "hashAlgorithm", str, path)
        try:
            kind = BindingKind(kind_text)
        except ValueError:
            raise SchemaViolation(f"{path}.kind: unknown binding kind {kind_text!r}") from None
        if alg not in DIGEST_SIZES:
            raise SchemaViolation(f"{path}.hashAlgorithm: unsupported {alg!r}")
        bpath = f"{path}.body"
        raw = v["body"]
        if kind is BindingKind.STATIC:
            b = expect_map(raw, bpath, {"digest"}, {"digest"})
            body: Body = StaticBody(digest_from_value(b["digest"], alg, binary, f"{bpath}.digest"))
        elif kind is BindingKind.FIXED_CHUNK:
            keys = {"chunkSize", "totalLength", "digests"}
            b = expect_map(raw, bpath, keys, keys)
            digests = get(b, "digests", list, bpath)
            body = ChunkBody(
                get(b, "chunkSize", int, bpath),
                get(b, "totalLength", int, bpath),
                tuple(digest_from_value(d, alg, binary, f"{bpath}.digests[{i}]") for i, d in enumerate(digests)),
            )
        elif kind is BindingKind.BOX:
            b = expect_map(raw, bpath, {"boxes"}, {"boxes"})
            boxes = []
            for i, item in enumerate(get(b, "boxes", list, bpath)):
                ipath = f"{bpath}.boxes[{i}]"
                bx = expect_map(item, ipath, {"offset", "length", "digest"}, {"offset", "length", "digest"})
                boxes.append(
                    Box(
                        get(bx, "offset", int, ipath),
                        get(bx, "length", int, ipath),
                        digest_from_value(bx["digest"], alg, binary, f"{ipath}.digest"),
                    )
                )
            body = BoxBody(tuple(boxes))
        else:
            keys = {"recordDelimiter", "leafCount", "root"}
            b = expect_map(raw, bpath, keys, keys)
            body = RecordMerkleBody(
                bytes_from_value(b["recordDelimiter"], binary, f"{bpath}.recordDelimiter"),
                get(b, "leafCount", int, bpath),
                digest_from_value(b["root"], alg, binary, f"{bpath}.root"),
            )
        return cls(name, kind, alg, body)


# ---------------------------------------------------------------- records


def iter_records(source: Source, delimiter: bytes = DEFAULT_DELIMITER) -> Iterator[bytes]:
    """Yield delimiter-terminated records (delimiter included), streaming."""
    if not delimiter:
        raise ValueError("record delimiter must be non-empty")
    stream = as_stream(source)
    buf = b""
    while True:
        block = stream.read(READ_SIZE)
        if not block:
            break
        buf += block
        start = 0
        while True:
            idx = buf.find(delimiter, start)
            if idx < 0:
                break
            end = idx + len(delimiter)
            yield buf[start:end]
            start = end
        buf = buf[start:]
    if buf:
        yield buf


def split_records(data: bytes, delimiter: bytes = DEFAULT_DELIMITER) -> list[bytes]:
    return list(iter_records(data, delimiter))


# ---------------------------------------------------------------- binding


def bind_static(source: Source, hash_algorithm: str = SHA2_256, name: str = "static") -> BindingSet:
    return BindingSet(name, BindingKind.STATIC, hash_algorithm, StaticBody(hash_stream(hash_algorithm, source)))


def _read_chunks(stream: BinaryIO, size: int) -> Iterator[bytes]:
    while True:
        chunk = stream.read(size)
        while chunk and len(chunk) < size:
            more = stream.read(size - len(chunk))
            if not more:
                break
            chunk += more
        if not chunk:
            return
        yield chunk


def _hash_chunks(chunks: Iterator[bytes], algorithm: str, workers: int) -> Iterator[tuple[int, Digest]]:
    """Yield (length, digest) per chunk; hashing fans out over ``workers`` threads."""
    if workers <= 1:
        for c in chunks:
            yield len(c), hash_bytes(algorithm, c)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        batch: list[bytes] = []
        for c in chunks:
            batch.append(c)
            if len(batch) == workers * 2:
                yield from zip(map(len, batch), pool.map(lambda b: hash_bytes(algorithm, b), batch))
                batch = []
        if batch:
            yield from zip(map(len, batch), pool.map(lambda b: hash_bytes(algorithm, b), batch))


def bind_fixed_chunks(
    source: Source,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    hash_algorithm: str = SHA2_256,
    name: str | None = None,
    workers: int = 1,
) -> BindingSet:
    if chunk_size <= 0:
        raise ValueError("chunk_size must be positive")
    total = 0
    digests = []
    for length, digest in _hash_chunks(_read_chunks(as_stream(source), chunk_size), hash_algorithm, workers):
        total += length
        digests.append(digest)
    return BindingSet(
        name or f"chunk:{chunk_size}",
        BindingKind.FIXED_CHUNK,
        hash_algorithm,
        ChunkBody(chunk_size, total, tuple(digests)),
    )


def _boxes_from_groups(groups: Iterator[bytes], algorithm: str) -> tuple[Box, ...]:
    boxes = []
    offset = 0
    for group in groups:
        boxes.append(Box(offset, len(group), hash_bytes(algorithm, group)))
        offset += len(group)
    return tuple(boxes)


def _batched(records: Iterator[bytes], batch_size: int) -> Iterator[bytes]:
    batch: list[bytes] = []
    for r in records:
        batch.append(r)
        if len(batch) == batch_size:
            yield b"".join(batch)
            batch = []
    if batch:
        yield b"".join(batch)


def bind_minibatches(
    source: Source,
    batch_size: int,
    record_delimiter: bytes = DEFAULT_DELIMITER,
    hash_algorithm: str = SHA2_256,
    name: str | None = None,
) -> BindingSet:
    """One box per ``batch_size`` consecutive records; the last box may be short."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    groups = _batched(iter_records(source, record_delimiter), batch_size)
    return BindingSet(
        name or f"minibatch:{batch_size}",
        BindingKind.BOX,
        hash_algorithm,
        BoxBody(_boxes_from_groups(groups, hash_algorithm)),
    )


def bind_fixed_records(
    source: Source,
    record_length: int,
    batch_size: int,
    hash_algorithm: str = SHA2_256,
    name: str | None = None,
) -> BindingSet:
    """Minibatch boxes for binary datasets made of ``record_length``-byte records."""
    if record_length <= 0 or batch_size < 1:
        raise ValueError("record_length and batch_size must be positive")
    groups = _read_chunks(as_stream(source), record_length * batch_size)
    return BindingSet(
        name or f"minibatch:{batch_size}",
        BindingKind.BOX,
        hash_algorithm,
        BoxBody(_boxes_from_groups(groups, hash_algorithm)),
    )


def bind_record_merkle(
    source: Source,
    record_delimiter: bytes = DEFAULT_DELIMITER,
    hash_algorithm: str = SHA2_256,
    name: str = "record-merkle",
) -> BindingSet:
    acc = merkle.RootAccumulator(hash_algorithm)
    for record in iter_records(source, record_delimiter):
        acc.add(record)
    body = RecordMerkleBody(record_delimiter, acc.count, Digest(hash_algorithm, acc.root()))
    return BindingSet(name, BindingKind.RECORD_MERKLE, hash_algorithm, body)


# ---------------------------------------------------------------- verification


@dataclass(frozen=True)
class VerificationReport:
    binding_name: str
    kind: BindingKind
    passed: bool
    failing_units: tuple[int, ...] = ()
    problems: tuple[str, ...] = ()
    unit_count: int = 0

    def as_dict(self) -> dict:
        return {
            "binding": self.binding_name,
            "kind": self.kind.value,
            "passed": self.passed,
            "failingUnits": list(self.failing_units),
            "problems": list(self.problems),
            "unitCount": self.unit_count,
        }


def _remaining_length(stream: BinaryIO) -> int:
    n = 0
    while True:
        block = stream.read(READ_SIZE)
        if not block:
            return n
        n += len(block)


def verify_binding(source: Source, binding: BindingSet) -> VerificationReport:
    """Check a payload against one binding set, localizing failures to units."""
    structure = binding.structural_issues()
    if structure:
        return VerificationReport(
            binding.name, binding.kind, False, problems=tuple(f"InvalidStructure: {s}" for s in structure)
        )
    stream = as_stream(source)
    alg = binding.hash_algorithm
    body = binding.body
    failing: list[int] = []
    problems: list[str] = []
    units = 0

    if isinstance(body, StaticBody):
        if hash_stream(alg, stream) != body.digest:
            problems.append("DigestMismatch")
    elif isinstance(body, ChunkBody):
        units = len(body.digests)
        seen = 0
        for i, chunk in enumerate(_read_chunks(stream, body.chunk_size)):
            seen += len(chunk)
            if i < units and hash_bytes(alg, chunk) != body.digests[i]:
                failing.append(i)
        if seen != body.total_length:
            problems.append(f"LengthMismatch: expected {body.total_length} bytes, got {seen}")
            # chunks never reached are missing, hence failing
            reached = math.ceil(seen / body.chunk_size)
            failing.extend(range(reached, units))
    elif isinstance(body, BoxBody):
        units = len(body.boxes)
        expected_total = sum(b.length for b in body.boxes)
        seen = 0
        for i, box in enumerate(body.boxes):
            h = new_hasher(alg)
            want = box.length
            while want:
                block = stream.read(min(want, READ_SIZE))
                if not block:
                    break
                h.update(block)
                want -= len(block)
            seen += box.length - want
            if want or h.digest() != box.digest.value:
                failing.append(i)
        seen += _remaining_length(stream)
        if seen != expected_total:
            problems.append(f"LengthMismatch: expected {expected_total} bytes, got {seen}")
    else:
        acc = merkle.RootAccumulator(alg)
        for record in iter_records(stream, body.record_delimiter):
            acc.add(record)
        if acc.count != body.leaf_count:
            problems.append(f"LeafCountMismatch: expected {body.leaf_count} records, got {acc.count}")
        if acc.root() != body.root.value:
            problems.append("RootMismatch")

    if failing and not problems:
        problems.append("DigestMismatch")
    passed = not failing and not problems
    return VerificationReport(binding.name, binding.kind, passed, tuple(sorted(set(failing))), tuple(problems), units)


# ---------------------------------------------------------------- record ranges


def _merkle_body(binding: BindingSet) -> RecordMerkleBody:
    if not isinstance(binding.body, RecordMerkleBody):
        raise TypeError("range proofs need a record-merkle binding")
    return binding.body


def prove_minibatch_range(source: Source, binding: BindingSet, start: int, stop: int) -> tuple[list[bytes], list[Digest]]:
    """Return the records in ``[start, stop)`` and the sibling digests proving them."""
    body = _merkle_body(binding)
    if not 0 <= start < stop <= body.leaf_count:
        raise RangeOutOfBounds(f"range [{start}, {stop}) outside 0..{body.leaf_count}")
    alg = binding.hash_algorithm
    tree = merkle.MerkleTree(algorithm=alg)
    records = []
    for i, record in enumerate(iter_records(source, body.record_delimiter)):
        tree.append(merkle.leaf_hash(record, alg))
        if start <= i < stop:
            records.append(record)
    if len(tree) != body.leaf_count:
        raise RangeOutOfBounds("payload record count differs from the binding's leafCount")
    return records, [Digest(alg, d) for d in tree.range_proof(start, stop)]


def verify_minibatch_range(
    binding: BindingSet,
    start: int,
    stop: int,
    record_bytes: Union[bytes, Sequence[bytes]],
    proof: Sequence[Union[Digest, bytes]],
) -> bool:
    """True iff the records plus proof digests reproduce the binding's root.

    ``record_bytes`` is either the list of records or their concatenation.
    """
    body = _merkle_body(binding)
    if not 0 <= start < stop <= body.leaf_count:
        raise RangeOutOfBounds(f"range [{start}, {stop}) outside 0..{body.leaf_count}")
    alg = binding.hash_algorithm
    siblings = []
    for p in proof:
        raw = p.value if isinstance(p, Digest) else p
        if not isinstance(raw, (bytes, bytearray)) or len(raw) != DIGEST_SIZES[alg]:
            raise MalformedProof("proof digest has the wrong size or type")
        if isinstance(p, Digest) and p.algorithm != alg:
            raise MalformedProof("proof digest algorithm differs from the binding's")
        siblings.append(bytes(raw))
    if isinstance(record_bytes, (bytes, bytearray)):
        records = split_records(bytes(record_bytes), body.record_delimiter)
    else:
        records = list(record_bytes)
    if len(records) != stop - start:
        return False
    leaves = [merkle.leaf_hash(r, alg) for r in records]
    return merkle.root_from_range(body.leaf_count, start, stop, leaves, siblings, alg) == body.root.value
