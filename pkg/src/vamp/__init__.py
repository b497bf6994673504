"""Verifiable manifests for ML objects: content binding, signing, provenance and a transparency log."""

from .binding import (
    BindingKind,
    BindingSet,
    VerificationReport,
    bind_fixed_chunks,
    bind_fixed_records,
    bind_minibatches,
    bind_record_merkle,
    bind_static,
    prove_minibatch_range,
    verify_binding,
    verify_minibatch_range,
)
from .container import (
    ContainerHeader,
    ContainerKind,
    ManifestSource,
    detached_manifest_path,
    embed_manifest,
    extract,
    resolve_manifest,
    write_detached_stub,
)
from .crypto import (
    Certificate,
    PrivateKey,
    PublicKey,
    SignatureAlgorithm,
    SignedManifest,
    generate_keypair,
    issue_certificate,
    load_trust_store,
    sign_manifest,
    verify_chain,
    verify_signed_manifest,
)
from .hashing import Digest, hash_bytes, hash_stream
from .ledger import Receipt, SignedTreeHead, TransparencyLog, verify_consistency, verify_receipt
from .manifest import (
    FacsimileRef,
    FacsimileRelation,
    Format,
    Manifest,
    ObjectType,
    canonical_serialize,
    compute_manifest_id,
    parse_manifest,
    validate_manifest,
)
from .provenance import ClosureReport, NodeStatus, ProvenanceGraph

__version__ = "0.1.0"
