"""Manifest registry: HTTP publish/fetch endpoints in front of the transparency log.

Layout of a data directory::

    manifests/<manifestId>.env    raw envelope bytes
    manifests/<manifestId>.json   record (objectId, sequence, receipt, ...)
    log/                          transparency log (see :mod:`vamp.ledger`)

Envelopes travel Base64-wrapped inside JSON bodies.
"""

from __future__ import annotations

import base64
import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable
from urllib.parse import quote, urlparse

import httpx
from fastapi import FastAPI, Request
from fastapi.responses import Response

from .binding import BindingKind
from .canonical import dumps_json, loads_json
from .crypto import (
    Certificate,
    PrivateKey,
    PublicKey,
    SignedManifest,
    generate_keypair,
    load_trust_store,
    read_private_key,
    verify_signed_manifest,
    write_private_key,
    write_public_key,
)
from .errors import (
    MalformedEnvelope,
    MalformedInput,
    MalformedPayload,
    OutOfRange,
    VampError,
    VerificationError,
)
from .hashing import SHA2_256, Digest
from .ledger import Receipt, SignedTreeHead, TransparencyLog
from .manifest import compute_manifest_id, is_manifest_id, utc_timestamp

log = logging.getLogger(__name__)

DEFAULT_ADDR = "127.0.0.1:8750"
ENV_ADDR = "VAMP_REGISTRY_ADDR"
ENV_DATA_DIR = "VAMP_DATA_DIR"
ENV_TRUST_DIR = "VAMP_TRUST_DIR"
ENV_LOG_KEY = "VAMP_LOG_KEY"


@dataclass(frozen=True)
class RegistryRecord:
    manifest_id: str
    envelope_bytes: bytes
    object_id: str
    receipt: Receipt
    published_at: str
    content_digests: tuple[str, ...] = ()

    @property
    def sequence(self) -> int:
        return self.receipt.sequence

    def summary(self) -> dict:
        return {
            "manifestId": self.manifest_id,
            "objectId": self.object_id,
            "sequence": self.sequence,
            "publishedAt": self.published_at,
        }

    def to_value(self) -> dict:
        return {
            **self.summary(),
            "contentDigests": list(self.content_digests),
            "envelope": base64.b64encode(self.envelope_bytes).decode("ascii"),
            "receipt": self.receipt.to_value(),
        }

    def _stored_value(self) -> dict:
        value = self.to_value()
        del value["envelope"]
        return value

    @classmethod
    def from_value(cls, value: dict, envelope_bytes: bytes | None = None) -> "RegistryRecord":
        try:
            if envelope_bytes is None:
                envelope_bytes = base64.b64decode(value["envelope"], validate=True)
            return cls(
                manifest_id=value["manifestId"],
                envelope_bytes=envelope_bytes,
                object_id=value["objectId"],
                receipt=Receipt.from_value(value["receipt"]),
                published_at=value["publishedAt"],
                content_digests=tuple(value.get("contentDigests", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"registry record: {exc!r}") from None


class PublishError(VampError):
    """Publish rejected; ``status`` is the HTTP status code."""

    def __init__(self, status: int, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.status, self.code, self.detail = status, code, detail


def load_or_create_log_key(path: str | os.PathLike) -> PrivateKey:
    """Read the log signing key, creating it (and ``<path>.pub``) on first use."""
    path = Path(path)
    if path.exists():
        return read_private_key(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    key, pub = generate_keypair()
    write_private_key(path, key)
    write_public_key(path.with_name(path.name + ".pub"), pub)
    return key


def _digests(manifest) -> tuple[str, ...]:
    """SHA-256 static digests, used for content lookup."""
    return tuple(
        str(b.body.digest) for b in manifest.bindings if b.kind is BindingKind.STATIC and b.hash_algorithm == SHA2_256
    )


class Registry:
    """Persistent manifest store anchored in a transparency log."""

    def __init__(self, data_dir: str | os.PathLike, trust_store: Iterable[Certificate], log_key: PrivateKey):
        self.data_dir = Path(data_dir)
        self.manifest_dir = self.data_dir / "manifests"
        self.manifest_dir.mkdir(parents=True, exist_ok=True)
        self.trust_store = frozenset(trust_store)
        self.log = TransparencyLog(log_key, self.data_dir / "log")
        self._lock = threading.Lock()
        self._records: dict[str, RegistryRecord] = {}
        for p in self.manifest_dir.glob("*.json"):
            env = p.with_suffix(".env")
            if not env.exists():
                log.warning("record %s has no envelope; skipping", p.name)
                continue
            rec = RegistryRecord.from_value(loads_json(p.read_bytes(), strict=False), env.read_bytes())
            self._records[rec.manifest_id] = rec
        self._recover()

    def _recover(self) -> None:
        """Finish publishes interrupted between the log append and the record write."""
        orphans = {p.stem: p for p in self.manifest_dir.glob("*.env") if p.stem not in self._records}
        if not orphans:
            return
        wanted = {}
        for mid, p in orphans.items():
            data = p.read_bytes()
            wanted[mid.encode()] = wanted[data] = (mid, data)
        for seq in range(self.log.size):
            hit = wanted.get(self.log.entry(seq))
            if hit is not None and hit[0] in orphans:
                mid, data = hit
                manifest, _ = verify_signed_manifest(data, self.trust_store)
                receipt = self.log.prove_inclusion(seq)
                self._store(RegistryRecord(
                    mid, data, manifest.object_id, receipt, receipt.signed_tree_head.timestamp, _digests(manifest)
                ))
                del orphans[mid]
                log.warning("recovered record %s at sequence %d", mid, seq)
        for mid, p in orphans.items():
            # never anchored, so never published
            p.unlink()
            log.warning("discarded unanchored envelope %s", mid)

    def _store(self, rec: RegistryRecord) -> None:
        tmp = self.manifest_dir / f"{rec.manifest_id}.json.tmp"
        tmp.write_bytes(dumps_json(rec._stored_value()))
        os.replace(tmp, self.manifest_dir / f"{rec.manifest_id}.json")
        self._records[rec.manifest_id] = rec

    @property
    def log_public_key(self) -> PublicKey:
        return self.log.public_key

    def __len__(self) -> int:
        return len(self._records)

    def publish(self, envelope_bytes: bytes) -> tuple[RegistryRecord, bool]:
        """Verify and store an envelope; returns ``(record, created)``."""
        try:
            manifest, _ = verify_signed_manifest(envelope_bytes, self.trust_store)
        except (MalformedEnvelope, MalformedPayload) as exc:
            raise PublishError(400, "MalformedEnvelope", str(exc)) from None
        except VerificationError as exc:
            raise PublishError(401, "UntrustedSigner", f"{type(exc).__name__}: {exc}") from None
        mid = compute_manifest_id(manifest)
        digests = _digests(manifest)
        with self._lock:
            existing = self._records.get(mid)
            if existing is not None:
                if existing.envelope_bytes != envelope_bytes:
                    raise PublishError(409, "ConflictingBytes", f"{mid} already stored with different bytes")
                return existing, False
            (self.manifest_dir / f"{mid}.env").write_bytes(envelope_bytes)
            receipt = self.log.append_manifest(envelope_bytes, mid)
            rec = RegistryRecord(mid, envelope_bytes, manifest.object_id, receipt, utc_timestamp(), digests)
            self._store(rec)
            return rec, True

    def fetch(self, manifest_id: str) -> RegistryRecord | None:
        return self._records.get(manifest_id)

    def _sorted(self, recs) -> list[RegistryRecord]:
        return sorted(recs, key=lambda r: r.sequence)

    def find_by_object(self, object_id: str) -> list[RegistryRecord]:
        return self._sorted(r for r in list(self._records.values()) if r.object_id == object_id)

    def find_by_content(self, digest: str) -> list[RegistryRecord]:
        return self._sorted(r for r in list(self._records.values()) if digest in r.content_digests)


# ---------------------------------------------------------------- HTTP


def _json(value, status: int = 200) -> Response:
    return Response(dumps_json(value), status_code=status, media_type="application/json")


def _error(status: int, code: str, detail: str) -> Response:
    return _json({"error": code, "detail": detail}, status)


def create_app(registry: Registry) -> FastAPI:
    app = FastAPI(title="vamp registry")
    app.state.registry = registry

    @app.post("/v1/manifests")
    async def publish(request: Request):
        try:
            body = loads_json(await request.body(), strict=False)
            envelope = base64.b64decode(body["envelope"], validate=True)
        except (MalformedInput, KeyError, TypeError, ValueError) as exc:
            return _error(400, "MalformedEnvelope", f"request body must be {{\"envelope\": base64}}: {exc}")
        try:
            rec, created = registry.publish(envelope)
        except PublishError as exc:
            return _error(exc.status, exc.code, exc.detail)
        return _json(rec.to_value(), 201 if created else 200)

    @app.get("/v1/manifests/{manifest_id}")
    def fetch(manifest_id: str):
        rec = registry.fetch(manifest_id)
        if rec is None:
            return _error(404, "NotFound", f"no manifest {manifest_id}")
        return _json(rec.to_value())

    @app.get("/v1/objects/{object_id}/manifests")
    def by_object(object_id: str):
        return _json([r.summary() for r in registry.find_by_object(object_id)])

    @app.get("/v1/content/{digest}")
    def by_content(digest: str):
        return _json([r.summary() for r in registry.find_by_content(digest)])

    @app.get("/v1/log/head")
    def head():
        return _json(registry.log.head().to_value())

    @app.get("/v1/log/key")
    def key():
        return _json(registry.log_public_key.to_value())

    @app.get("/v1/log/proof")
    def proof(seq: int, size: int | None = None):
        try:
            return _json(registry.log.prove_inclusion(seq, size).to_value())
        except OutOfRange as exc:
            return _error(416, "OutOfRange", str(exc))

    @app.get("/v1/log/consistency")
    def consistency(old: int, new: int | None = None):
        new = registry.log.size if new is None else new
        try:
            proof = registry.log.prove_consistency(old, new)
        except OutOfRange as exc:
            return _error(416, "OutOfRange", str(exc))
        return _json(
            {
                "oldHead": registry.log.head(old).to_value(),
                "newHead": registry.log.head(new).to_value(),
                "proof": [str(d) for d in proof],
            }
        )

    return app


def app_from_env() -> FastAPI:
    """Build the app from ``VAMP_DATA_DIR``, ``VAMP_TRUST_DIR`` and ``VAMP_LOG_KEY``."""
    data_dir = Path(os.environ.get(ENV_DATA_DIR, "vamp-data"))
    trust_dir = os.environ.get(ENV_TRUST_DIR, "trust")
    key_path = os.environ.get(ENV_LOG_KEY) or str(Path(trust_dir).parent / "log.key")
    return create_app(Registry(data_dir, load_trust_store(trust_dir), load_or_create_log_key(key_path)))


def split_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    return host or "127.0.0.1", int(port)


# ---------------------------------------------------------------- client


class RegistryHTTPError(VampError):
    def __init__(self, status: int, body: dict | None):
        body = body or {}
        super().__init__(f"registry returned {status}: {body.get('error', '')} {body.get('detail', '')}".strip())
        self.status = status
        self.code = body.get("error")


class RegistryClient:
    """HTTP client for the registry; also serves as a :class:`~vamp.container.CloudLookup`."""

    def __init__(self, base_url: str, *, transport: httpx.BaseTransport | None = None, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self._http = httpx.Client(base_url=self.base_url, transport=transport, timeout=timeout)

    def close(self) -> None:
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _get(self, url: str, **params):
        r = self._http.get(url, params={k: v for k, v in params.items() if v is not None})
        return self._decode(r)

    @staticmethod
    def _decode(r: httpx.Response):
        body = loads_json(r.content, strict=False) if r.content else None
        if r.status_code >= 400:
            raise RegistryHTTPError(r.status_code, body if isinstance(body, dict) else None)
        return body

    def locator(self, manifest_id: str) -> str:
        return f"{self.base_url}/v1/manifests/{manifest_id}"

    def publish(self, envelope_bytes: bytes) -> RegistryRecord:
        body = dumps_json({"envelope": base64.b64encode(envelope_bytes).decode("ascii")})
        r = self._http.post("/v1/manifests", content=body, headers={"content-type": "application/json"})
        return RegistryRecord.from_value(self._decode(r))

    def fetch(self, manifest_id: str) -> RegistryRecord | None:
        try:
            rec = RegistryRecord.from_value(self._get(f"/v1/manifests/{quote(manifest_id, safe=':')}"))
        except RegistryHTTPError as exc:
            if exc.status == 404:
                return None
            raise
        return rec

    def find_by_object(self, object_id: str) -> list[dict]:
        return self._get(f"/v1/objects/{quote(object_id, safe='')}/manifests")

    def head(self) -> SignedTreeHead:
        return SignedTreeHead.from_value(self._get("/v1/log/head"))

    def log_key(self) -> PublicKey:
        return PublicKey.from_value(self._get("/v1/log/key"))

    def proof(self, seq: int, size: int | None = None) -> Receipt:
        return Receipt.from_value(self._get("/v1/log/proof", seq=seq, size=size))

    def consistency(self, old: int, new: int | None = None) -> tuple[SignedTreeHead, SignedTreeHead, list[Digest]]:
        v = self._get("/v1/log/consistency", old=old, new=new)
        return (
            SignedTreeHead.from_value(v["oldHead"]),
            SignedTreeHead.from_value(v["newHead"]),
            [Digest.parse(d) for d in v["proof"]],
        )

    # CloudLookup

    def fetch_envelope(self, manifest_id: str) -> bytes | None:
        rec = self.fetch(manifest_id)
        if rec is None:
            return None
        if compute_manifest_id(SignedManifest.from_bytes(rec.envelope_bytes).manifest()) != manifest_id:
            raise MalformedEnvelope(f"registry returned an envelope that does not hash to {manifest_id}")
        return rec.envelope_bytes

    def fetch_locator(self, locator: str) -> bytes | None:
        tail = urlparse(locator).path.rsplit("/", 1)[-1]
        if locator.startswith(self.base_url + "/") and is_manifest_id(tail):
            return self.fetch_envelope(tail)
        if urlparse(locator).scheme not in ("http", "https"):
            return None
        r = httpx.get(locator, timeout=30.0)
        if r.status_code == 404:
            return None
        return RegistryRecord.from_value(self._decode(r)).envelope_bytes

    def find_by_content(self, digest: str) -> list[bytes]:
        found = []
        for summary in self._get(f"/v1/content/{quote(digest, safe=':')}"):
            env = self.fetch_envelope(summary["manifestId"])
            if env is not None:
                found.append(env)
        return found

