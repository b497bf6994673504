"""Append-only Merkle transparency log with signed tree heads and receipts.

A single writer appends entries; each append returns a :class:`Receipt` that
can be checked offline with nothing but the log's public key. Consistency
proofs show that a later tree head extends an earlier one.

On disk a log directory holds ``entries.log`` (each entry prefixed with its
32-bit big-endian length), ``log.json`` (entry mode) and ``checkpoint.json``
(the latest checkpointed signed tree head).
"""

from __future__ import annotations

import base64
import json
import os
import struct
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from . import merkle
from ._schema import expect_map, get
from .canonical import dumps_json, loads_json
from .crypto import PrivateKey, PublicKey, sha256
from .errors import CorruptLog, LogSealed, MalformedInput, OutOfRange
from .hashing import SHA2_256, Digest
from .manifest import utc_timestamp


class EntryMode(str, Enum):
    DIGEST = "digest"
    ENVELOPE = "envelope"


def _d(raw: bytes) -> Digest:
    return Digest(SHA2_256, raw)


@dataclass(frozen=True)
class SignedTreeHead:
    tree_size: int
    root_hash: Digest
    timestamp: str
    signature: bytes = b""

    def signed_bytes(self) -> bytes:
        return dumps_json({"treeSize": self.tree_size, "rootHash": str(self.root_hash), "timestamp": self.timestamp})

    def verify(self, public_key: PublicKey) -> bool:
        return public_key.verify(sha256(self.signed_bytes()), self.signature)

    def to_value(self) -> dict:
        return {
            "treeSize": self.tree_size,
            "rootHash": str(self.root_hash),
            "timestamp": self.timestamp,
            "signature": base64.b64encode(self.signature).decode("ascii"),
        }

    @classmethod
    def from_value(cls, value) -> "SignedTreeHead":
        keys = {"treeSize", "rootHash", "timestamp", "signature"}
        v = expect_map(value, "treeHead", keys, keys)
        try:
            return cls(
                get(v, "treeSize", int, "treeHead"),
                Digest.parse(get(v, "rootHash", str, "treeHead")),
                get(v, "timestamp", str, "treeHead"),
                base64.b64decode(get(v, "signature", str, "treeHead"), validate=True),
            )
        except ValueError as exc:
            raise MalformedInput(f"treeHead: {exc}") from None


@dataclass(frozen=True)
class Receipt:
    sequence: int
    leaf_hash: Digest
    audit_path: tuple[Digest, ...]
    signed_tree_head: SignedTreeHead

    def __post_init__(self):
        object.__setattr__(self, "audit_path", tuple(self.audit_path))

    def to_value(self) -> dict:
        return {
            "sequence": self.sequence,
            "leafHash": str(self.leaf_hash),
            "auditPath": [str(d) for d in self.audit_path],
            "signedTreeHead": self.signed_tree_head.to_value(),
        }

    def to_bytes(self) -> bytes:
        return dumps_json(self.to_value())

    @classmethod
    def from_value(cls, value) -> "Receipt":
        keys = {"sequence", "leafHash", "auditPath", "signedTreeHead"}
        v = expect_map(value, "receipt", keys, keys)
        try:
            return cls(
                get(v, "sequence", int, "receipt"),
                Digest.parse(get(v, "leafHash", str, "receipt")),
                tuple(Digest.parse(p) for p in get(v, "auditPath", list, "receipt")),
                SignedTreeHead.from_value(v["signedTreeHead"]),
            )
        except (ValueError, TypeError) as exc:
            raise MalformedInput(f"receipt: {exc}") from None

    @classmethod
    def from_bytes(cls, data: bytes) -> "Receipt":
        return cls.from_value(loads_json(data, strict=False))


def entry_leaf_hash(entry: bytes) -> Digest:
    return _d(merkle.leaf_hash(entry))


def verify_receipt(receipt: Receipt, log_public_key: PublicKey) -> bool:
    """Offline check: audit path reproduces the signed root, and the head is signed."""
    sth = receipt.signed_tree_head
    if any(d.algorithm != SHA2_256 for d in (receipt.leaf_hash, sth.root_hash, *receipt.audit_path)):
        return False
    ok_path = merkle.verify_inclusion(
        receipt.leaf_hash.value,
        receipt.sequence,
        sth.tree_size,
        [d.value for d in receipt.audit_path],
        sth.root_hash.value,
    )
    return ok_path and sth.verify(log_public_key)


def verify_consistency(
    old_head: SignedTreeHead,
    new_head: SignedTreeHead,
    proof: Sequence[Digest],
    log_public_key: PublicKey | None = None,
) -> bool:
    """True iff ``new_head`` extends ``old_head``; also checks both signatures when a key is given."""
    if log_public_key is not None and not (old_head.verify(log_public_key) and new_head.verify(log_public_key)):
        return False
    return merkle.verify_consistency(
        old_head.tree_size,
        new_head.tree_size,
        old_head.root_hash.value,
        new_head.root_hash.value,
        [d.value for d in proof],
    )


class TransparencyLog:
    """Single-writer Merkle log. Pass ``directory`` for persistence."""

    ENTRIES = "entries.log"
    META = "log.json"
    CHECKPOINT = "checkpoint.json"

    def __init__(
        self,
        key: PrivateKey,
        directory: str | os.PathLike | None = None,
        mode: EntryMode | str = EntryMode.DIGEST,
        checkpoint_interval: int = 16,
    ):
        self._key = key
        self.public_key = key.public_key
        self.mode = EntryMode(mode)
        self.checkpoint_interval = checkpoint_interval
        self._tree = merkle.MerkleTree()
        self._entries: list[bytes] = []
        self._heads: dict[int, SignedTreeHead] = {}
        self._lock = threading.Lock()
        self._sealed = False
        self.directory = Path(directory) if directory is not None else None
        if self.directory is not None:
            self._load()

    # -- persistence

    def _load(self) -> None:
        d = self.directory
        d.mkdir(parents=True, exist_ok=True)
        meta_path = d / self.META
        if meta_path.exists():
            meta = json.loads(meta_path.read_bytes())
            self.mode = EntryMode(meta["mode"])
            self._sealed = bool(meta.get("sealed", False))
        else:
            self._write_meta()
        path = d / self.ENTRIES
        if path.exists():
            data = path.read_bytes()
            pos = 0
            while pos < len(data):
                if pos + 4 > len(data):
                    raise CorruptLog("truncated length prefix in entries.log")
                (n,) = struct.unpack(">I", data[pos : pos + 4])
                if pos + 4 + n > len(data):
                    raise CorruptLog("truncated entry in entries.log")
                entry = data[pos + 4 : pos + 4 + n]
                self._entries.append(entry)
                self._tree.append(merkle.leaf_hash(entry))
                pos += 4 + n
        cp = d / self.CHECKPOINT
        if cp.exists():
            sth = SignedTreeHead.from_value(json.loads(cp.read_bytes()))
            if not sth.verify(self.public_key):
                raise CorruptLog("checkpoint is not signed by this log's key")
            if sth.tree_size > len(self._tree) or self._tree.root(sth.tree_size) != sth.root_hash.value:
                raise CorruptLog("entries.log does not extend the checkpointed tree head")
            self._heads[sth.tree_size] = sth

    def _write_meta(self) -> None:
        (self.directory / self.META).write_bytes(dumps_json({"mode": self.mode.value, "sealed": self._sealed}))

    def _checkpoint(self, sth: SignedTreeHead) -> None:
        tmp = self.directory / (self.CHECKPOINT + ".tmp")
        tmp.write_bytes(dumps_json(sth.to_value()))
        os.replace(tmp, self.directory / self.CHECKPOINT)

    # -- state

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def size(self) -> int:
        return len(self._entries)

    @property
    def sealed(self) -> bool:
        return self._sealed

    def entry(self, sequence: int) -> bytes:
        return self._entries[sequence]

    def root(self, tree_size: int | None = None) -> Digest:
        return _d(self._tree.root(self.size if tree_size is None else tree_size))

    def _sign_head(self, tree_size: int) -> SignedTreeHead:
        sth = SignedTreeHead(tree_size, _d(self._tree.root(tree_size)), utc_timestamp())
        return SignedTreeHead(sth.tree_size, sth.root_hash, sth.timestamp, self._key.sign(sha256(sth.signed_bytes())))

    def head(self, tree_size: int | None = None) -> SignedTreeHead:
        size = self.size if tree_size is None else tree_size
        if not 0 <= size <= self.size:
            raise OutOfRange(f"tree size {size} exceeds current size {self.size}")
        if size not in self._heads:
            self._heads[size] = self._sign_head(size)
        return self._heads[size]

    # -- writes

    def append(self, entry: bytes) -> Receipt:
        with self._lock:
            if self._sealed:
                raise LogSealed("log is sealed")
            entry = bytes(entry)
            if self.directory is not None:
                with open(self.directory / self.ENTRIES, "ab") as fh:
                    fh.write(struct.pack(">I", len(entry)) + entry)
                    fh.flush()
                    os.fsync(fh.fileno())
            seq = len(self._entries)
            self._entries.append(entry)
            self._tree.append(merkle.leaf_hash(entry))
            sth = self.head()
            if self.directory is not None and (seq + 1) % self.checkpoint_interval == 0:
                self._checkpoint(sth)
            return self._receipt(seq, sth)

    def append_manifest(self, envelope_bytes: bytes, manifest_id: str) -> Receipt:
        """Log either the full envelope or only the manifest id, per the log's mode."""
        if self.mode is EntryMode.ENVELOPE:
            return self.append(envelope_bytes)
        return self.append(manifest_id.encode("ascii"))

    def checkpoint(self) -> SignedTreeHead:
        sth = self.head()
        if self.directory is not None:
            self._checkpoint(sth)
        return sth

    def seal(self) -> None:
        with self._lock:
            self._sealed = True
            if self.directory is not None:
                self._write_meta()
                self._checkpoint(self.head())

    # -- proofs

    def _receipt(self, seq: int, sth: SignedTreeHead) -> Receipt:
        path = self._tree.inclusion_path(seq, sth.tree_size)
        return Receipt(seq, _d(self._tree.leaves[seq]), tuple(_d(p) for p in path), sth)

    def prove_inclusion(self, sequence: int, tree_size: int | None = None) -> Receipt:
        size = self.size if tree_size is None else tree_size
        if not 0 <= sequence < size <= self.size:
            raise OutOfRange(f"sequence {sequence} not in tree of size {size} (current {self.size})")
        return self._receipt(sequence, self.head(size))

    def prove_consistency(self, old_size: int, new_size: int) -> list[Digest]:
        if not 0 < old_size <= new_size <= self.size:
            raise OutOfRange(f"cannot prove {old_size} -> {new_size} at size {self.size}")
        return [_d(p) for p in self._tree.consistency_proof(old_size, new_size)]
