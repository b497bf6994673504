"""Keys, a minimal certificate chain model, and the signed-manifest envelope.

Certificates are canonical-JSON records rather than X.509 DER. A chain is
ordered leaf first and is at most three certificates long (publisher,
intermediate, root). The root must be present, byte for byte, in the trust
store.

Signatures always cover ``SHA-256(payload)`` so large payloads can be hashed
in a streaming fashion before signing.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec, ed25519
from cryptography.hazmat.primitives.asymmetric.utils import Prehashed

from ._schema import expect_map, get
from .canonical import dumps_cbor, dumps_json, loads_cbor, loads_json
from .errors import (
    BadSignature,
    ChainTooLong,
    Expired,
    ExpiredIssuer,
    InvalidIssuerKey,
    KeyMismatch,
    MalformedEnvelope,
    MalformedInput,
    MalformedPayload,
    UntrustedRoot,
    VampError,
)
from .hashing import Digest, hash_stream  # noqa: F401  (re-exported)
from .manifest import Format, Manifest, canonical_serialize, parse_manifest, parse_timestamp, utc_timestamp

MAX_CHAIN_LENGTH = 3


class SignatureAlgorithm(str, Enum):
    ED25519 = "ed25519"
    ECDSA_P256 = "ecdsa-p256"


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(text: str, what: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError, TypeError):
        raise MalformedInput(f"invalid Base64 in {what}") from None


# ---------------------------------------------------------------- keys


@dataclass(frozen=True)
class PublicKey:
    algorithm: SignatureAlgorithm
    raw: bytes

    def __post_init__(self):
        object.__setattr__(self, "algorithm", SignatureAlgorithm(self.algorithm))

    def _load(self):
        if self.algorithm is SignatureAlgorithm.ED25519:
            return ed25519.Ed25519PublicKey.from_public_bytes(self.raw)
        return ec.EllipticCurvePublicKey.from_encoded_point(ec.SECP256R1(), self.raw)

    def verify(self, digest: bytes, signature: bytes) -> bool:
        """Check ``signature`` over a 32-byte SHA-256 ``digest``."""
        try:
            key = self._load()
            if self.algorithm is SignatureAlgorithm.ED25519:
                key.verify(signature, digest)
            else:
                key.verify(signature, digest, ec.ECDSA(Prehashed(hashes.SHA256())))
            return True
        except (InvalidSignature, ValueError):
            return False

    def to_value(self) -> dict:
        return {"algorithm": self.algorithm.value, "publicKey": _b64(self.raw)}

    @classmethod
    def from_value(cls, value) -> "PublicKey":
        v = expect_map(value, "publicKey", {"algorithm", "publicKey"}, {"algorithm", "publicKey"})
        return cls(SignatureAlgorithm(v["algorithm"]), _unb64(v["publicKey"], "public key"))


@dataclass(frozen=True, repr=False)
class PrivateKey:
    algorithm: SignatureAlgorithm
    raw: bytes = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "algorithm", SignatureAlgorithm(self.algorithm))

    def __repr__(self) -> str:
        return f"PrivateKey({self.algorithm.value}, public={self.public_key.raw.hex()[:16]}...)"

    def _load(self):
        if self.algorithm is SignatureAlgorithm.ED25519:
            return ed25519.Ed25519PrivateKey.from_private_bytes(self.raw)
        return ec.derive_private_key(int.from_bytes(self.raw, "big"), ec.SECP256R1())

    @property
    def public_key(self) -> PublicKey:
        pub = self._load().public_key()
        if self.algorithm is SignatureAlgorithm.ED25519:
            raw = pub.public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
        else:
            raw = pub.public_bytes(serialization.Encoding.X962, serialization.PublicFormat.CompressedPoint)
        return PublicKey(self.algorithm, raw)

    def sign(self, digest: bytes) -> bytes:
        key = self._load()
        if self.algorithm is SignatureAlgorithm.ED25519:
            return key.sign(digest)
        return key.sign(digest, ec.ECDSA(Prehashed(hashes.SHA256())))

    def to_value(self) -> dict:
        return {"algorithm": self.algorithm.value, "privateKey": _b64(self.raw)}

    @classmethod
    def from_value(cls, value) -> "PrivateKey":
        v = expect_map(value, "privateKey", {"algorithm", "privateKey"}, {"algorithm", "privateKey"})
        return cls(SignatureAlgorithm(v["algorithm"]), _unb64(v["privateKey"], "private key"))


def generate_keypair(algorithm: SignatureAlgorithm | str = SignatureAlgorithm.ED25519) -> tuple[PrivateKey, PublicKey]:
    algorithm = SignatureAlgorithm(algorithm)
    if algorithm is SignatureAlgorithm.ED25519:
        raw = ed25519.Ed25519PrivateKey.generate().private_bytes(
            serialization.Encoding.Raw, serialization.PrivateFormat.Raw, serialization.NoEncryption()
        )
    else:
        raw = ec.generate_private_key(ec.SECP256R1()).private_numbers().private_value.to_bytes(32, "big")
    private = PrivateKey(algorithm, raw)
    return private, private.public_key


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


# ---------------------------------------------------------------- certificates


@dataclass(frozen=True)
class Certificate:
    subject: str
    issuer: str
    public_key: PublicKey
    not_before: str
    not_after: str
    self_signed: bool
    signature_algorithm: SignatureAlgorithm
    signature: bytes = b""

    def unsigned_value(self) -> dict:
        return {
            "subject": self.subject,
            "issuer": self.issuer,
            "publicKey": _b64(self.public_key.raw),
            "keyAlgorithm": self.public_key.algorithm.value,
            "notBefore": self.not_before,
            "notAfter": self.not_after,
            "selfSigned": self.self_signed,
            "signatureAlgorithm": SignatureAlgorithm(self.signature_algorithm).value,
        }

    def tbs_bytes(self) -> bytes:
        """Canonical bytes the issuer signs."""
        return dumps_json(self.unsigned_value())

    def to_value(self) -> dict:
        return {**self.unsigned_value(), "signature": _b64(self.signature)}

    def to_bytes(self) -> bytes:
        return dumps_json(self.to_value())

    @classmethod
    def from_value(cls, value) -> "Certificate":
        keys = {
            "subject",
            "issuer",
            "publicKey",
            "keyAlgorithm",
            "notBefore",
            "notAfter",
            "selfSigned",
            "signatureAlgorithm",
            "signature",
        }
        v = expect_map(value, "certificate", keys, keys)
        try:
            return cls(
                subject=get(v, "subject", str, "certificate"),
                issuer=get(v, "issuer", str, "certificate"),
                public_key=PublicKey(v["keyAlgorithm"], _unb64(v["publicKey"], "certificate key")),
                not_before=get(v, "notBefore", str, "certificate"),
                not_after=get(v, "notAfter", str, "certificate"),
                self_signed=get(v, "selfSigned", bool, "certificate"),
                signature_algorithm=SignatureAlgorithm(v["signatureAlgorithm"]),
                signature=_unb64(v["signature"], "certificate signature"),
            )
        except ValueError as exc:
            raise MalformedInput(f"certificate: {exc}") from None

    @classmethod
    def from_bytes(cls, data: bytes) -> "Certificate":
        return cls.from_value(loads_json(data))

    def valid_at(self, when: datetime) -> bool:
        return parse_timestamp(self.not_before) <= when <= parse_timestamp(self.not_after)


def _now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def issue_certificate(
    subject: str,
    subject_public_key: PublicKey,
    issuer_private_key: PrivateKey,
    issuer_cert: Certificate | None = None,
    *,
    not_before: datetime | None = None,
    not_after: datetime | None = None,
    days: int = 365,
    at_time: datetime | None = None,
) -> Certificate:
    """Issue a certificate; ``issuer_cert=None`` means self-signed."""
    at_time = at_time or _now()
    not_before = not_before or at_time
    not_after = not_after or not_before + timedelta(days=days)
    if not_before >= not_after:
        raise ValueError("notBefore must precede notAfter")
    if issuer_cert is None:
        if issuer_private_key.public_key != subject_public_key:
            raise InvalidIssuerKey("self-signed certificate must be signed by the subject's own key")
        issuer = subject
    else:
        if issuer_private_key.public_key != issuer_cert.public_key:
            raise InvalidIssuerKey("issuer private key does not match the issuer certificate")
        if not issuer_cert.valid_at(at_time):
            raise ExpiredIssuer(f"issuer certificate {issuer_cert.subject!r} not valid at {utc_timestamp(at_time)}")
        issuer = issuer_cert.subject
    cert = Certificate(
        subject=subject,
        issuer=issuer,
        public_key=subject_public_key,
        not_before=utc_timestamp(not_before),
        not_after=utc_timestamp(not_after),
        self_signed=issuer_cert is None,
        signature_algorithm=issuer_private_key.algorithm,
    )
    sig = issuer_private_key.sign(sha256(cert.tbs_bytes()))
    return replace(cert, signature=sig)


def _signed_by(cert: Certificate, issuer_key: PublicKey) -> bool:
    return cert.signature_algorithm == issuer_key.algorithm and issuer_key.verify(
        sha256(cert.tbs_bytes()), cert.signature
    )


def verify_chain(
    chain: Sequence[Certificate],
    trust_store: Iterable[Certificate],
    at_time: datetime | None = None,
) -> str:
    """Validate a leaf-first chain against trusted roots; return the leaf subject."""
    chain = list(chain)
    if not chain:
        raise ValueError("certificate chain is empty")
    if len(chain) > MAX_CHAIN_LENGTH:
        raise ChainTooLong(f"chain of {len(chain)} certificates exceeds {MAX_CHAIN_LENGTH}")
    at_time = at_time or _now()
    for cert, issuer in zip(chain, chain[1:]):
        if cert.issuer != issuer.subject or not _signed_by(cert, issuer.public_key):
            raise BadSignature(f"certificate {cert.subject!r} is not signed by {issuer.subject!r}")
    root = chain[-1]
    if not (root.self_signed and root.issuer == root.subject and _signed_by(root, root.public_key)):
        raise UntrustedRoot(f"chain ends at {root.subject!r}, which is not a self-signed root")
    trusted = {c.to_bytes() for c in trust_store}
    if root.to_bytes() not in trusted:
        raise UntrustedRoot(f"root {root.subject!r} is not in the trust store")
    for cert in chain:
        if not cert.valid_at(at_time):
            raise Expired(f"certificate {cert.subject!r} not valid at {utc_timestamp(at_time)}")
    return chain[0].subject


# ---------------------------------------------------------------- envelope


@dataclass(frozen=True)
class SignedManifest:
    """Signed manifest envelope.

    JSON envelopes are a JWS-like object ``{protected, payload, signature}``;
    CBOR envelopes are a COSE_Sign1-like array
    ``[protected-bstr, unprotected-map, payload, signature]``. Only the
    structure is mirrored, not the wire standards.
    """

    serialization: Format
    payload: bytes
    signature_algorithm: SignatureAlgorithm
    signature: bytes
    cert_chain: tuple[Certificate, ...]
    ledger_receipt: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "serialization", Format.coerce(self.serialization))
        object.__setattr__(self, "signature_algorithm", SignatureAlgorithm(self.signature_algorithm))
        object.__setattr__(self, "cert_chain", tuple(self.cert_chain))

    def _protected(self, binary: bool) -> dict:
        return {
            "alg": self.signature_algorithm.value,
            "ser": self.serialization.value,
            "x5chain": [c.to_bytes() if binary else c.to_value() for c in self.cert_chain],
        }

    def to_bytes(self) -> bytes:
        unprotected = {} if self.ledger_receipt is None else {"receipt": self.ledger_receipt}
        if self.serialization is Format.JSON:
            value = {"protected": self._protected(False), "payload": _b64(self.payload), "signature": _b64(self.signature)}
            if unprotected:
                value["unprotected"] = unprotected
            return dumps_json(value)
        return dumps_cbor([dumps_cbor(self._protected(True)), unprotected, self.payload, self.signature])

    @classmethod
    def from_bytes(cls, data: bytes) -> "SignedManifest":
        try:
            if data[:1] == b"{":
                return cls._from_json(data)
            if data[:1] == b"\x84":
                return cls._from_cbor(data)
        except VampError as exc:
            raise MalformedEnvelope(f"malformed envelope: {exc}") from None
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedEnvelope(f"malformed envelope: {exc!r}") from None
        raise MalformedEnvelope("unrecognized envelope encoding")

    @classmethod
    def _from_json(cls, data: bytes) -> "SignedManifest":
        v = expect_map(loads_json(data), "envelope", {"protected", "payload", "signature", "unprotected"}, {"protected", "payload", "signature"})
        prot = expect_map(v["protected"], "protected", {"alg", "ser", "x5chain"}, {"alg", "ser", "x5chain"})
        if prot["ser"] != Format.JSON.value:
            raise MalformedInput("JSON envelope must carry a JSON payload")
        unprot = v.get("unprotected", {})
        return cls(
            serialization=Format.JSON,
            payload=_unb64(v["payload"], "payload"),
            signature_algorithm=prot["alg"],
            signature=_unb64(v["signature"], "signature"),
            cert_chain=tuple(Certificate.from_value(c) for c in prot["x5chain"]),
            ledger_receipt=unprot.get("receipt"),
        )

    @classmethod
    def _from_cbor(cls, data: bytes) -> "SignedManifest":
        arr = loads_cbor(data)
        if not (isinstance(arr, list) and len(arr) == 4 and isinstance(arr[0], bytes)):
            raise MalformedInput("CBOR envelope must be a 4-element array")
        prot = expect_map(loads_cbor(arr[0]), "protected", {"alg", "ser", "x5chain"}, {"alg", "ser", "x5chain"})
        if prot["ser"] != Format.CBOR.value:
            raise MalformedInput("CBOR envelope must carry a CBOR payload")
        unprot = expect_map(arr[1], "unprotected", {"receipt"}, set())
        if not isinstance(arr[2], bytes) or not isinstance(arr[3], bytes):
            raise MalformedInput("payload and signature must be byte strings")
        return cls(
            serialization=Format.CBOR,
            payload=arr[2],
            signature_algorithm=prot["alg"],
            signature=arr[3],
            cert_chain=tuple(Certificate.from_bytes(c) for c in prot["x5chain"]),
            ledger_receipt=unprot.get("receipt"),
        )

    def manifest(self) -> Manifest:
        """Strictly parse the payload without checking the signature."""
        return parse_manifest(self.payload, self.serialization)


def sign_manifest(
    manifest: Manifest,
    format: Format | str,
    private_key: PrivateKey,
    cert_chain: Sequence[Certificate],
) -> SignedManifest:
    cert_chain = tuple(cert_chain)
    if not cert_chain or cert_chain[0].public_key != private_key.public_key:
        raise KeyMismatch("private key does not match the chain's leaf certificate")
    fmt = Format.coerce(format)
    payload = canonical_serialize(manifest, fmt)
    return SignedManifest(
        serialization=fmt,
        payload=payload,
        signature_algorithm=private_key.algorithm,
        signature=private_key.sign(sha256(payload)),
        cert_chain=cert_chain,
    )


def verify_signed_manifest(
    envelope: SignedManifest | bytes,
    trust_store: Iterable[Certificate],
    at_time: datetime | None = None,
) -> tuple[Manifest, str]:
    """Chain, then signature over SHA-256(payload), then strict payload parse."""
    if isinstance(envelope, (bytes, bytearray)):
        envelope = SignedManifest.from_bytes(bytes(envelope))
    subject = verify_chain(envelope.cert_chain, trust_store, at_time)
    leaf_key = envelope.cert_chain[0].public_key
    if envelope.signature_algorithm != leaf_key.algorithm or not leaf_key.verify(
        sha256(envelope.payload), envelope.signature
    ):
        raise BadSignature("manifest signature does not verify under the leaf certificate")
    try:
        manifest = parse_manifest(envelope.payload, envelope.serialization)
    except MalformedInput as exc:
        raise MalformedPayload(str(exc)) from None
    return manifest, subject


# ---------------------------------------------------------------- files


def write_private_key(path: str | os.PathLike, key: PrivateKey, *, force: bool = False) -> None:
    """Write a private key readable only by its owner."""
    path = Path(path)
    flags = os.O_WRONLY | os.O_CREAT | (os.O_TRUNC if force else os.O_EXCL)
    fd = os.open(path, flags, 0o600)
    with os.fdopen(fd, "wb") as fh:
        fh.write(dumps_json(key.to_value()))
    os.chmod(path, 0o600)


def read_private_key(path: str | os.PathLike) -> PrivateKey:
    return PrivateKey.from_value(json.loads(Path(path).read_bytes()))


def write_public_key(path: str | os.PathLike, key: PublicKey) -> None:
    Path(path).write_bytes(dumps_json(key.to_value()))


def read_public_key(path: str | os.PathLike) -> PublicKey:
    return PublicKey.from_value(json.loads(Path(path).read_bytes()))


def read_certificate(path: str | os.PathLike) -> Certificate:
    return Certificate.from_bytes(Path(path).read_bytes())


def write_certificate(path: str | os.PathLike, cert: Certificate) -> None:
    Path(path).write_bytes(cert.to_bytes())


def load_trust_store(directory: str | os.PathLike) -> frozenset[Certificate]:
    """Every ``*.cert`` / ``*.json`` root certificate in ``directory``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"trust directory {directory} does not exist")
    roots = set()
    for p in sorted(directory.iterdir()):
        if p.suffix in (".cert", ".json") and p.is_file():
            roots.add(read_certificate(p))
    return frozenset(roots)
