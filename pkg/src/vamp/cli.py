"""``vamp`` command-line tool.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O or
network failure.
"""

from __future__ import annotations

import json
import logging
import shutil
import sys
from datetime import datetime
from pathlib import Path
from urllib.parse import urlparse
from urllib.request import url2pathname

import click
import httpx

from . import binding as bnd
from .canonical import dumps_json
from .container import (
    detached_manifest_path,
    embed_manifest,
    extract,
    resolve_manifest,
    write_detached_stub,
)
from .crypto import (
    SignatureAlgorithm,
    SignedManifest,
    generate_keypair,
    issue_certificate,
    load_trust_store,
    read_certificate,
    read_private_key,
    read_public_key,
    sign_manifest,
    verify_signed_manifest,
    write_certificate,
    write_private_key,
    write_public_key,
)
from .errors import (
    ExpiredIssuer,
    InvalidIssuerKey,
    InvalidLocator,
    InvalidManifest,
    KeyMismatch,
    ManifestNotFound,
    OversizeManifest,
    UnsupportedFormat,
    VampError,
)
from .hashing import HASH_ALGORITHMS, SHA2_256
from .ledger import Receipt, entry_leaf_hash, verify_receipt
from .manifest import (
    FacsimileRef,
    Format,
    Manifest,
    ObjectType,
    canonical_serialize,
    compute_manifest_id,
    parse_manifest,
    parse_timestamp,
    utc_timestamp,
)
from .provenance import ProvenanceGraph
from .registry import (
    DEFAULT_ADDR,
    ENV_ADDR,
    ENV_DATA_DIR,
    ENV_LOG_KEY,
    ENV_TRUST_DIR,
    RegistryClient,
    RegistryHTTPError,
)

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

ENV_REGISTRY_URL = "VAMP_REGISTRY_URL"
ENV_GRAPH_DIR = "VAMP_GRAPH_DIR"

_USAGE_ERRORS = (
    KeyMismatch,
    InvalidManifest,
    InvalidLocator,
    OversizeManifest,
    UnsupportedFormat,
    ExpiredIssuer,
    InvalidIssuerKey,
    FileExistsError,
)


class CliError(click.ClickException):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, _USAGE_ERRORS):
        return EXIT_USAGE
    if isinstance(exc, RegistryHTTPError):
        return EXIT_IO if exc.status >= 500 else EXIT_VERIFY
    if isinstance(exc, VampError):
        return EXIT_VERIFY
    if isinstance(exc, (OSError, httpx.HTTPError)):
        return EXIT_IO
    if isinstance(exc, ValueError):
        return EXIT_USAGE
    raise exc


class VampGroup(click.Group):
    """Maps library exceptions onto the documented exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (click.ClickException, click.exceptions.Exit, click.Abort):
            raise
        except (VampError, OSError, httpx.HTTPError, ValueError) as exc:
            raise CliError(f"{type(exc).__name__}: {exc}", _exit_code(exc)) from exc


def _emit(obj: dict, output: str, human: list[str]) -> None:
    if output == "json":
        click.echo(dumps_json(obj).decode("utf-8"))
    else:
        for line in human:
            click.echo(line)


def _trust(trust_dir: str):
    if not Path(trust_dir).is_dir():
        raise click.UsageError(f"trust directory {trust_dir!r} does not exist")
    return load_trust_store(trust_dir)


def _client(registry: str | None) -> RegistryClient | None:
    return RegistryClient(registry) if registry else None


def _at(value: str | None) -> datetime | None:
    return parse_timestamp(value) if value else None


def _payload(path: str | Path) -> bytes:
    data = Path(path).read_bytes()
    return extract(data).payload(data)


def _read_envelope(path: str | Path) -> bytes:
    return Path(path).read_bytes()


trust_option = click.option(
    "--trust-dir", envvar=ENV_TRUST_DIR, default="trust", show_default=True, help="Directory of trusted root certificates."
)
registry_option = click.option("--registry", envvar=ENV_REGISTRY_URL, default=None, help="Registry base URL.")
output_option = click.option("--output", type=click.Choice(["human", "json"]), default="human", show_default=True)
store_option = click.option(
    "--store", envvar=ENV_GRAPH_DIR, default=".vamp-graph", show_default=True, help="Provenance graph store directory."
)


@click.group(cls=VampGroup, context_settings={"help_option_names": ["-h", "--help"]})
@click.option("-v", "--verbose", is_flag=True, help="Log warnings and progress to stderr.")
def main(verbose: bool):
    """Sign, bind, publish and verify manifests for ML objects."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


# ---------------------------------------------------------------- keys


@main.command()
@click.option("--subject", required=True)
@click.option("--out", required=True, help="Output prefix: writes PREFIX.key, PREFIX.pub, PREFIX.cert.")
@click.option("--self-signed", is_flag=True)
@click.option("--issuer-key", type=click.Path(exists=True, dir_okay=False))
@click.option("--issuer-cert", type=click.Path(exists=True, dir_okay=False))
@click.option("--algorithm", type=click.Choice([a.value for a in SignatureAlgorithm]), default="ed25519", show_default=True)
@click.option("--days", type=int, default=365, show_default=True)
@click.option("--force", is_flag=True, help="Overwrite existing files.")
@click.option("--add-to-trust", is_flag=True, help="Copy a self-signed certificate into the trust directory.")
@trust_option
def keygen(subject, out, self_signed, issuer_key, issuer_cert, algorithm, days, force, add_to_trust, trust_dir):
    """Generate a keypair and certificate."""
    if self_signed == bool(issuer_key or issuer_cert):
        raise click.UsageError("give either --self-signed or both --issuer-key and --issuer-cert")
    if not self_signed and not (issuer_key and issuer_cert):
        raise click.UsageError("--issuer-key and --issuer-cert must be given together")
    paths = {ext: Path(f"{out}.{ext}") for ext in ("key", "pub", "cert")}
    existing = [str(p) for p in paths.values() if p.exists()]
    if existing and not force:
        raise CliError(f"refusing to overwrite {', '.join(existing)} (use --force)", EXIT_USAGE)
    key, pub = generate_keypair(algorithm)
    if self_signed:
        cert = issue_certificate(subject, pub, key, days=days)
    else:
        cert = issue_certificate(subject, pub, read_private_key(issuer_key), read_certificate(issuer_cert), days=days)
    paths["key"].parent.mkdir(parents=True, exist_ok=True)
    write_private_key(paths["key"], key, force=force)
    write_public_key(paths["pub"], pub)
    write_certificate(paths["cert"], cert)
    if add_to_trust:
        if not self_signed:
            raise click.UsageError("--add-to-trust only applies to self-signed roots")
        Path(trust_dir).mkdir(parents=True, exist_ok=True)
        shutil.copyfile(paths["cert"], Path(trust_dir) / paths["cert"].name)
    click.echo(f"wrote {paths['key']}, {paths['pub']}, {paths['cert']} for {subject!r}")


# ---------------------------------------------------------------- manifests


def _parse_bind(spec: str, hash_alg: str, delimiter: bytes, payload: bytes) -> bnd.BindingSet:
    kind, _, arg = spec.partition(":")
    try:
        if kind == "static" and not arg:
            return bnd.bind_static(payload, hash_alg)
        if kind == "chunk":
            return bnd.bind_fixed_chunks(payload, int(arg) if arg else bnd.DEFAULT_CHUNK_SIZE, hash_alg)
        if kind == "minibatch" and arg:
            return bnd.bind_minibatches(payload, int(arg), delimiter, hash_alg)
        if kind == "record-merkle" and not arg:
            return bnd.bind_record_merkle(payload, delimiter, hash_alg)
    except ValueError as exc:
        raise click.BadParameter(f"{spec}: {exc}", param_hint="--bind") from None
    raise click.BadParameter(f"unknown binding {spec!r}", param_hint="--bind")


def _parse_facsimile(spec: str) -> FacsimileRef:
    mid, sep, rel = spec.rpartition(":")
    if not sep:
        raise click.BadParameter(f"expected MANIFEST_ID:RELATION, got {spec!r}", param_hint="--facsimile")
    try:
        return FacsimileRef(mid, rel)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--facsimile") from None


@main.command()
@click.option("--object", "object_path", required=True, type=click.Path(dir_okay=False))
@click.option("--object-id", required=True)
@click.option("--type", "object_type", required=True, type=click.Choice([t.value for t in ObjectType]))
@click.option("--bind", "binds", multiple=True, help="static | chunk[:N] | minibatch:B | record-merkle (repeatable).")
@click.option("--origin", "origins", multiple=True, help="Origin manifest id (repeatable, ordered).")
@click.option("--facsimile", "facsimiles", multiple=True, help="MANIFEST_ID:RELATION (repeatable).")
@click.option("--encoding", default=None, help="Encoding information; defaults to the file extension.")
@click.option("--transformation", default=None)
@click.option("--copyright", "copyright_", default=None)
@click.option("--locator", default=None, help="Master copy locator URI.")
@click.option("--created-at", default=None, help="RFC 3339 UTC timestamp; defaults to now.")
@click.option("--hash", "hash_alg", type=click.Choice(HASH_ALGORITHMS), default=SHA2_256, show_default=True)
@click.option("--delimiter", default="\\n", show_default=True, help="Record delimiter (Python escapes allowed).")
@click.option("--out", default=None, help="Output path; defaults to OBJECT.manifest.json.")
def create(object_path, object_id, object_type, binds, origins, facsimiles, encoding, transformation,
           copyright_, locator, created_at, hash_alg, delimiter, out):
    """Create an unsigned manifest with content bindings for OBJECT."""
    payload = _payload(object_path)
    delim = delimiter.encode("latin-1").decode("unicode_escape").encode("latin-1")
    if not delim:
        raise click.BadParameter("delimiter must not be empty", param_hint="--delimiter")
    if encoding is None:
        encoding = Path(object_path).suffix.lstrip(".").upper() or "binary"
    manifest = Manifest(
        object_id=object_id,
        object_type=ObjectType(object_type),
        encoding_information=encoding,
        created_at=created_at or utc_timestamp(),
        bindings=tuple(_parse_bind(b, hash_alg, delim, payload) for b in (binds or ("static",))),
        origin_manifest_ids=tuple(origins),
        facsimiles=tuple(_parse_facsimile(f) for f in facsimiles),
        master_copy_locator=locator,
        copyright=copyright_,
        transformation=transformation,
    )
    data = canonical_serialize(manifest, Format.JSON)
    out = Path(out or f"{object_path}.manifest.json")
    out.write_bytes(data)
    click.echo(f"{compute_manifest_id(manifest)} -> {out}")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--key", "key_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cert", "certs", required=True, multiple=True, type=click.Path(exists=True, dir_okay=False),
              help="Certificate chain, leaf first (repeatable).")
@click.option("--format", "fmt", type=click.Choice(["json", "cbor"]), default="json", show_default=True)
@click.option("--object", "object_path", default=None, help="Write the envelope as OBJECT.man.")
@click.option("--out", default=None, help="Envelope path (default: MANIFEST.env, or the OBJECT sidecar).")
def sign(manifest_path, key_path, certs, fmt, object_path, out):
    """Sign an unsigned manifest, producing an envelope."""
    data = Path(manifest_path).read_bytes()
    fmt_in = Format.CBOR if data[:1] not in (b"{", b" ", b"\n") else Format.JSON
    manifest = parse_manifest(data, fmt_in, strict=False)
    envelope = sign_manifest(manifest, fmt.upper(), read_private_key(key_path), [read_certificate(c) for c in certs])
    if out is None:
        out = detached_manifest_path(object_path) if object_path else f"{manifest_path}.env"
    Path(out).write_bytes(envelope.to_bytes())
    click.echo(f"{compute_manifest_id(manifest)} -> {out}")


@main.command()
@click.option("--object", "object_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--envelope", "envelope_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", type=click.Choice(["text", "binary"]), default="text", show_default=True)
@click.option("--out", required=True)
def embed(object_path, envelope_path, kind, out):
    """Write OBJECT's payload with the envelope embedded in a container header."""
    data = embed_manifest(_payload(object_path), _read_envelope(envelope_path), kind)
    Path(out).write_bytes(data)
    click.echo(f"embedded manifest -> {out}")


@main.command()
@click.option("--object", "object_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--locator", required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "cbor"]), default="json", show_default=True)
@click.option("--kind", type=click.Choice(["text", "binary"]), default="text", show_default=True)
@click.option("--out", required=True)
def stub(object_path, locator, fmt, kind, out):
    """Wrap OBJECT's payload with a detached-manifest locator header."""
    Path(out).write_bytes(write_detached_stub(_payload(object_path), locator, fmt.upper(), kind))
    click.echo(f"detached stub -> {out}")


@main.command("extract")
@click.option("--object", "object_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--envelope-out", default=None)
@click.option("--payload-out", default=None)
@output_option
def extract_cmd(object_path, envelope_out, payload_out, output):
    """Show a container header and optionally split out envelope and payload."""
    data = Path(object_path).read_bytes()
    header = extract(data)
    offset, length = header.payload_span
    info = {
        "kind": header.kind.value,
        "manifestType": header.manifest_type.value if header.manifest_type else None,
        "serialization": header.serialization.value if header.serialization else None,
        "locator": header.locator,
        "payloadOffset": offset,
        "payloadLength": length,
        "manifestId": None,
    }
    if header.envelope_bytes is not None:
        info["manifestId"] = compute_manifest_id(SignedManifest.from_bytes(header.envelope_bytes).manifest())
        if envelope_out:
            Path(envelope_out).write_bytes(header.envelope_bytes)
    if payload_out:
        Path(payload_out).write_bytes(header.payload(data))
    _emit(info, output, [f"{k}: {v}" for k, v in info.items() if v is not None])


# ---------------------------------------------------------------- registry


@main.command()
@click.option("--envelope", "envelope_path", required=True, type=click.Path(exists=True, dir_okay=False))
@registry_option
@output_option
def publish(envelope_path, registry, output):
    """Publish an envelope; the receipt is stored as ENVELOPE.rcpt."""
    if not registry:
        raise click.UsageError(f"no registry: pass --registry or set {ENV_REGISTRY_URL}")
    with RegistryClient(registry) as client:
        record = client.publish(_read_envelope(envelope_path))
        locator = client.locator(record.manifest_id)
    rcpt = Path(f"{envelope_path}.rcpt")
    rcpt.write_bytes(record.receipt.to_bytes())
    info = {"manifestId": record.manifest_id, "locator": locator, "receiptPath": str(rcpt), "receipt": record.receipt.to_value()}
    _emit(
        info,
        output,
        [
            f"published {record.manifest_id} at sequence {record.sequence}",
            f"locator: {locator}",
            f"receipt: {rcpt}",
            record.receipt.to_bytes().decode("utf-8"),
        ],
    )


@main.command("verify-receipt")
@click.argument("receipt_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--log-key", required=True, type=click.Path(exists=True, dir_okay=False), help="Log public key file.")
@click.option("--envelope", "envelope_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Also check that the receipt's leaf is this envelope (or its manifest id).")
def verify_receipt_cmd(receipt_path, log_key, envelope_path):
    """Check a receipt offline against the log public key."""
    receipt = Receipt.from_bytes(Path(receipt_path).read_bytes())
    ok = verify_receipt(receipt, read_public_key(log_key))
    if ok and envelope_path:
        env = _read_envelope(envelope_path)
        mid = compute_manifest_id(SignedManifest.from_bytes(env).manifest())
        ok = receipt.leaf_hash in (entry_leaf_hash(env), entry_leaf_hash(mid.encode("ascii")))
    click.echo(f"receipt sequence {receipt.sequence} tree size {receipt.signed_tree_head.tree_size}: {'valid' if ok else 'INVALID'}")
    if not ok:
        sys.exit(EXIT_VERIFY)


@main.command()
@click.option("--addr", envvar=ENV_ADDR, default=DEFAULT_ADDR, show_default=True)
@click.option("--data-dir", envvar=ENV_DATA_DIR, default="vamp-data", show_default=True)
@click.option("--trust-dir", envvar=ENV_TRUST_DIR, default="trust", show_default=True)
@click.option("--log-key", envvar=ENV_LOG_KEY, default=None, help="Log signing key (created if missing).")
def serve(addr, data_dir, trust_dir, log_key):
    """Run the registry service."""
    import uvicorn

    from .registry import Registry, create_app, load_or_create_log_key, split_addr

    key = load_or_create_log_key(log_key or Path(trust_dir).parent / "log.key")
    app = create_app(Registry(data_dir, _trust(trust_dir), key))
    host, port = split_addr(addr)
    uvicorn.run(app, host=host, port=port, log_level="warning")


# ---------------------------------------------------------------- verification


def _locator_content(manifest: Manifest, base: Path) -> bytes | None:
    loc = manifest.master_copy_locator
    if not loc:
        return None
    parsed = urlparse(loc)
    if parsed.scheme == "file":
        path = Path(url2pathname(parsed.path))
    elif parsed.scheme == "":
        path = base / loc
    else:
        return None
    return _payload(path) if path.is_file() else None


def _build_closure_graph(trust, at, root_env, root_payload, ancestors, store, client):
    graph = ProvenanceGraph(trust, at_time=at)
    content: dict[str, bytes] = {graph.add_manifest(root_env): root_payload}
    loose = []
    for path in ancestors:
        try:
            res = resolve_manifest(path, client)
        except ManifestNotFound:
            # altered content no longer matches a published hash; match by name below
            loose.append(Path(path))
            continue
        content[graph.add_manifest(res.envelope_bytes)] = _payload(path)
    store_dir = Path(store) if store else None
    progress = True
    while progress:
        progress = False
        for mid in sorted(graph.unresolved()):
            env = None
            if store_dir is not None and (store_dir / f"{mid}.env").is_file():
                env = (store_dir / f"{mid}.env").read_bytes()
            elif client is not None:
                env = client.fetch_envelope(mid)
            if env is not None:
                graph.add_manifest(env)
                progress = True
    for path in loose:
        for mid in graph.ids:
            m = graph.node(mid).manifest
            names = {m.object_id, Path(urlparse(m.master_copy_locator or "").path).name}
            if mid not in content and names & {path.name, path.stem, str(path)}:
                content[mid] = _payload(path)
                break
        else:
            click.echo(f"warning: no closure node matches {path}", err=True)
    return graph, content


@main.command()
@click.option("--object", "object_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Envelope file; skips resolution.")
@click.option("--closure", is_flag=True, help="Also verify every provenance ancestor.")
@click.option("--set", "binding_set", default=None, help="Check only this binding set.")
@click.option("--with", "ancestors", multiple=True, type=click.Path(exists=True, dir_okay=False),
              help="Ancestor object file supplying content for --closure (repeatable).")
@click.option("--permissive", is_flag=True, help="Ancestors without content are signature-only instead of failing.")
@click.option("--require-facsimiles", is_flag=True, help="Closure also verifies facsimile partners.")
@click.option("--at", "at_time", default=None, help="Verification time (RFC 3339 UTC); default now.")
@click.option("--store", envvar=ENV_GRAPH_DIR, default=None, help="Graph store consulted for ancestor envelopes.")
@trust_option
@registry_option
@output_option
def verify(object_path, manifest_path, closure, binding_set, ancestors, permissive, require_facsimiles,
           at_time, store, trust_dir, registry, output):
    """Verify OBJECT's manifest signature and content bindings."""
    trust = _trust(trust_dir)
    at = _at(at_time)
    client = _client(registry)
    data = Path(object_path).read_bytes()
    payload = extract(data).payload(data)
    if manifest_path:
        env, source = _read_envelope(manifest_path), "explicit"
    else:
        res = resolve_manifest(object_path, client)
        env, source = res.envelope_bytes, res.source.value
    manifest, signer = verify_signed_manifest(env, trust, at)
    mid = compute_manifest_id(manifest)
    sets = manifest.bindings
    if binding_set is not None:
        sets = tuple(b for b in sets if b.name == binding_set)
        if not sets:
            raise CliError(f"manifest has no binding set named {binding_set!r}", EXIT_VERIFY)
    reports = [bnd.verify_binding(payload, b) for b in sets]
    passed = all(r.passed for r in reports)
    result = {
        "object": str(object_path),
        "manifestId": mid,
        "objectId": manifest.object_id,
        "source": source,
        "signer": signer,
        "bindings": [r.as_dict() for r in reports],
        "closure": None,
    }
    human = [f"object {object_path}", f"manifest {mid} ({source}, signed by {signer!r})"]
    for r in reports:
        line = f"  binding {r.binding_name}: {'ok' if r.passed else 'FAILED'}"
        if r.failing_units:
            line += f" failing units {list(r.failing_units)}"
        if r.problems:
            line += f" ({'; '.join(r.problems)})"
        human.append(line)
    if closure:
        graph, content = _build_closure_graph(trust, at, env, payload, ancestors, store, client)
        base = Path(object_path).parent

        def resolver(node_id):
            if node_id in content:
                return content[node_id]
            return _locator_content(graph.node(node_id).manifest, base)

        report = graph.verify_closure(
            mid, resolver, binding=binding_set, strict=not permissive, include_facsimiles=require_facsimiles, at_time=at
        )
        passed = passed and report.passed
        result["closure"] = report.as_dict()
        human.append(f"closure over {len(report.nodes)} manifests: {'ok' if report.passed else 'FAILED'}")
        for n in report.nodes:
            line = f"  {n.status.value:<14} {n.manifest_id} {n.object_id or ''}".rstrip()
            if n.detail:
                line += f" ({'; '.join(n.detail)})"
            human.append(line)
    result["passed"] = passed
    result["result"] = "verified" if passed else "FAILED"
    human.append(result["result"])
    _emit(result, output, human)
    if not passed:
        sys.exit(EXIT_VERIFY)


# ---------------------------------------------------------------- provenance


@main.group()
def graph():
    """Manage the local provenance graph store."""


def _envelope_from_file(path: str, client) -> bytes:
    data = Path(path).read_bytes()
    try:
        SignedManifest.from_bytes(data)
        return data
    except VampError:
        return resolve_manifest(path, client).envelope_bytes


@graph.command("add")
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@store_option
@trust_option
@registry_option
def graph_add(paths, store, trust_dir, registry):
    """Add envelopes (or objects carrying manifests) to the graph store."""
    g = ProvenanceGraph(_trust(trust_dir), store_dir=store)
    client = _client(registry)
    for p in paths:
        click.echo(f"{g.add_manifest(_envelope_from_file(p, client))} <- {p}")


@main.command()
@click.option("--id", "manifest_id", required=True)
@click.option("--direction", type=click.Choice(["ancestors", "descendants"]), default="ancestors", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["text", "dot", "json"]), default="text", show_default=True)
@store_option
@trust_option
def trace(manifest_id, direction, fmt, store, trust_dir):
    """Trace lineage from a manifest through the graph store."""
    if not Path(store).is_dir():
        raise click.UsageError(f"graph store {store!r} does not exist")
    g = ProvenanceGraph(_trust(trust_dir), store_dir=store)
    order = g.trace(manifest_id, direction)
    if fmt == "dot":
        click.echo(g.export_graph("dot", only=order).decode("utf-8"), nl=False)
    elif fmt == "json":
        click.echo(json.dumps({"start": manifest_id, "direction": direction, "order": order}, sort_keys=True))
    else:
        for mid in order:
            obj = g.node(mid).manifest.object_id if mid in g else "(unresolved)"
            click.echo(f"{mid} {obj}")


if __name__ == "__main__":  # pragma: no cover
    main()
