import base64
import struct
from pathlib import Path

import pytest

from conftest import make_manifest
from vamp import container
from vamp.binding import verify_binding
from vamp.container import (
    ContainerKind,
    ManifestSource,
    ManifestType,
    detached_manifest_path,
    embed_manifest,
    extract,
    resolve_manifest,
    write_detached_stub,
)
from vamp.crypto import sign_manifest
from vamp.errors import (
    BindingMismatch,
    CorruptHeader,
    DivergentCopies,
    InvalidLocator,
    ManifestNotFound,
    OversizeManifest,
)
from vamp.manifest import Format, compute_manifest_id

PAYLOAD = b"a,b\n1,2\n3,4\n"


def envelope(pki, fmt="JSON", payload=PAYLOAD, object_id="d1"):
    return sign_manifest(make_manifest(object_id, payload), fmt, pki.key, pki.chain)


class FakeRegistry:
    def __init__(self, envelopes=(), locators=None):
        self.by_id = {compute_manifest_id(container.SignedManifest.from_bytes(e).manifest()): e for e in envelopes}
        self.locators = locators or {}
        self.calls = []

    def fetch_envelope(self, manifest_id):
        self.calls.append(("id", manifest_id))
        return self.by_id.get(manifest_id)

    def fetch_locator(self, locator):
        self.calls.append(("locator", locator))
        return self.locators.get(locator)

    def find_by_content(self, digest):
        self.calls.append(("content", digest))
        return list(self.by_id.values())


# ---------------------------------------------------------------- golden


def test_text_golden(corpus):
    env = (corpus / "reference.env.json").read_bytes()
    payload = (corpus / "payload.csv").read_bytes()
    golden = (corpus / "container_text_json.golden").read_bytes()
    assert embed_manifest(payload, env, "text") == golden
    h = extract(golden)
    assert h.kind is ContainerKind.TEXT and h.envelope_bytes == env and h.payload(golden) == payload


def test_text_golden_layout(corpus):
    lines = (corpus / "container_text_json.golden").read_bytes().split(b"\n")
    assert lines[:3] == [b"#%VAMP-Version: 1", b"#%VAMP-ManifestType: Embedded", b"#%VAMP-ManifestSerialization: JSON"]
    assert lines[3].startswith(b"#%VAMP-Manifest: ")
    assert lines[4] == b"#%VAMP-End"


def test_binary_golden(corpus):
    env = (corpus / "reference.env.cbor").read_bytes()
    payload = (corpus / "payload.csv").read_bytes()
    golden = (corpus / "container_binary_cbor.golden").read_bytes()
    assert embed_manifest(payload, env, "binary") == golden
    assert golden[:7] == b"VAMP\x01\x01\x02"
    assert struct.unpack(">I", golden[7:11])[0] == len(env)
    h = extract(golden)
    assert h.serialization is Format.CBOR and h.payload(golden) == payload


def test_stub_golden(corpus):
    mid = (corpus / "reference_manifest.id").read_text()
    locator = f"https://registry.example/v1/manifests/{mid}"
    golden = (corpus / "stub_text.golden").read_bytes()
    assert write_detached_stub(b"abc", locator) == golden
    h = extract(golden)
    assert h.manifest_type is ManifestType.DETACHED and h.locator == locator and h.envelope_bytes is None


# ---------------------------------------------------------------- round trips


@pytest.mark.parametrize("kind", ["text", "binary"])
@pytest.mark.parametrize("fmt", ["JSON", "CBOR"])
@pytest.mark.parametrize("payload", [b"", b"x", PAYLOAD, bytes(range(256)) * 3, b"#%VAMP-End\nVAMP\x01"])
def test_embed_round_trip(pki, kind, fmt, payload):
    env = envelope(pki, fmt, payload)
    data = embed_manifest(payload, env, kind)
    h = extract(data)
    assert h.kind is ContainerKind(kind)
    assert h.manifest_type is ManifestType.EMBEDDED
    assert h.serialization is Format(fmt)
    assert h.envelope == env
    assert h.payload(data) == payload
    assert h.payload_offset + h.payload_length == len(data)


@pytest.mark.parametrize("kind", ["text", "binary"])
@pytest.mark.parametrize("fmt", ["JSON", "CBOR"])
def test_stub_round_trip(kind, fmt):
    loc = "https://registry.example/v1/manifests/sha2-256:" + "0" * 64
    data = write_detached_stub(PAYLOAD, loc, fmt, kind)
    h = extract(data)
    assert (h.kind, h.manifest_type, h.serialization, h.locator) == (
        ContainerKind(kind),
        ManifestType.DETACHED,
        Format(fmt),
        loc,
    )
    assert h.payload(data) == PAYLOAD


def test_bindings_cover_payload_not_header(pki):
    env = envelope(pki)
    data = embed_manifest(PAYLOAD, env)
    h = extract(data)
    m = env.manifest()
    assert all(verify_binding(h.payload(data), b).passed for b in m.bindings)
    assert not all(verify_binding(data, b).passed for b in m.bindings)


def test_embed_rejects_mismatched_payload(pki):
    with pytest.raises(BindingMismatch):
        embed_manifest(b"other", envelope(pki))


def test_oversize_manifest(pki, monkeypatch):
    env = envelope(pki).to_bytes()
    monkeypatch.setattr(container, "MAX_ENVELOPE_BYTES", len(env) - 1)
    with pytest.raises(OversizeManifest):
        embed_manifest(PAYLOAD, env)
    monkeypatch.setattr(container, "MAX_ENVELOPE_BYTES", len(env))
    embed_manifest(PAYLOAD, env)


@pytest.mark.parametrize("locator", ["", "a\nb", "x\r"])
def test_invalid_locator(locator):
    with pytest.raises(InvalidLocator):
        write_detached_stub(PAYLOAD, locator)


# ---------------------------------------------------------------- bare and corrupt


@pytest.mark.parametrize("data", [b"", b"plain text\n", b"#%VAMX-", b"VAM", b"\x00VAMP"])
def test_bare_files(data):
    h = extract(data)
    assert h.kind is ContainerKind.BARE and h.payload(data) == data and h.manifest_type is None


def _text(*lines):
    return "".join(f"#%VAMP-{x}\n" for x in lines).encode() + b"payload"


@pytest.mark.parametrize(
    "data",
    [
        _text("Version: 2", "ManifestType: Embedded", "ManifestSerialization: JSON", "Manifest: e30=", "End"),
        _text("Version: 1", "ManifestType: Embedded", "ManifestSerialization: JSON", "Manifest: e30", "End"),
        _text("Version: 1", "ManifestType: Embedded", "ManifestSerialization: JSON", "Manifest: !!!!", "End"),
        _text("Version: 1", "ManifestType: Embedded", "ManifestSerialization: JSON", "Manifest: e30=", "End"),
        _text("Version: 1", "ManifestType: Embedded", "ManifestSerialization: YAML", "Manifest: e30=", "End"),
        _text("Version: 1", "ManifestType: Remote", "ManifestSerialization: JSON", "Manifest: e30=", "End"),
        _text("Version: 1", "ManifestType: Detached", "ManifestSerialization: JSON", "ManifestLocator: ", "End"),
        _text("ManifestType: Embedded", "Version: 1", "ManifestSerialization: JSON", "Manifest: e30=", "End"),
        b"#%VAMP-Version: 1\n#%VAMP-ManifestType: Embedded\n",
        b"#%VAMP-Version: 1\nnot a header\n#%VAMP-End\n",
        b"VAMP\x02\x01\x01\x00\x00\x00\x00",
        b"VAMP\x01\x03\x01\x00\x00\x00\x00",
        b"VAMP\x01\x01\x07\x00\x00\x00\x00",
        b"VAMP\x01\x01\x01\x00\x00\x00\xff{}",
        b"VAMP\x01\x01",
        b"VAMP\x01\x02\x01\x00\x00\x00\x02\xff\xfe",
    ],
)
def test_corrupt_headers(data):
    with pytest.raises(CorruptHeader):
        extract(data)


def test_truncated_base64_from_real_container(pki):
    data = embed_manifest(PAYLOAD, envelope(pki))
    head, _, rest = data.partition(b"#%VAMP-Manifest: ")
    field, _, tail = rest.partition(b"\n")
    with pytest.raises(CorruptHeader):
        extract(head + b"#%VAMP-Manifest: " + field[:-3] + b"\n" + tail)


def test_valid_base64_of_garbage_is_corrupt():
    junk = base64.b64encode(b"not an envelope").decode()
    data = _text("Version: 1", "ManifestType: Embedded", "ManifestSerialization: JSON", f"Manifest: {junk}", "End")
    with pytest.raises(CorruptHeader):
        extract(data)


# ---------------------------------------------------------------- naming and resolution


def test_sidecar_naming():
    assert detached_manifest_path("data/training.csv") == "data/training.csv.man"
    assert detached_manifest_path(Path("data/training.csv")) == Path("data/training.csv.man")
    assert detached_manifest_path("model") == "model.man"


def test_resolve_embedded(tmp_path, pki):
    env = envelope(pki)
    obj = tmp_path / "d.csv"
    obj.write_bytes(embed_manifest(PAYLOAD, env))
    r = resolve_manifest(obj)
    assert r.source is ManifestSource.EMBEDDED and r.envelope == env


def test_embedded_wins_over_sidecar(tmp_path, pki, caplog):
    env = envelope(pki)
    other = envelope(pki, object_id="other")
    obj = tmp_path / "d.csv"
    obj.write_bytes(embed_manifest(PAYLOAD, env))
    Path(detached_manifest_path(obj)).write_bytes(other.to_bytes())
    r = resolve_manifest(obj)
    assert r.source is ManifestSource.EMBEDDED and r.envelope == env
    assert "ignoring sidecar" in caplog.text


def test_resolve_sidecar(tmp_path, pki):
    env = envelope(pki)
    obj = tmp_path / "training.csv"
    obj.write_bytes(PAYLOAD)
    (tmp_path / "training.csv.man").write_bytes(env.to_bytes())
    r = resolve_manifest(obj)
    assert r.source is ManifestSource.DETACHED_LOCAL and r.envelope_bytes == env.to_bytes()
    assert r.header.kind is ContainerKind.BARE


def test_resolve_stub_with_relative_locator(tmp_path, pki):
    env = envelope(pki)
    (tmp_path / "manifests").mkdir()
    (tmp_path / "manifests" / "d.env").write_bytes(env.to_bytes())
    obj = tmp_path / "d.csv"
    obj.write_bytes(write_detached_stub(PAYLOAD, "manifests/d.env"))
    assert resolve_manifest(obj).source is ManifestSource.DETACHED_LOCAL


def test_resolve_stub_with_file_uri(tmp_path, pki):
    env = envelope(pki)
    (tmp_path / "m.env").write_bytes(env.to_bytes())
    obj = tmp_path / "d.csv"
    obj.write_bytes(write_detached_stub(PAYLOAD, (tmp_path / "m.env").as_uri()))
    assert resolve_manifest(obj).envelope == env


def test_resolve_stub_via_registry(tmp_path, pki):
    env = envelope(pki).to_bytes()
    loc = "https://registry.example/v1/manifests/x"
    obj = tmp_path / "d.csv"
    obj.write_bytes(write_detached_stub(PAYLOAD, loc))
    reg = FakeRegistry(locators={loc: env})
    r = resolve_manifest(obj, reg)
    assert r.source is ManifestSource.DETACHED_CLOUD and r.envelope_bytes == env
    with pytest.raises(ManifestNotFound):
        resolve_manifest(obj)


def test_resolve_bare_via_content_lookup(tmp_path, pki):
    env = envelope(pki).to_bytes()
    obj = tmp_path / "d.csv"
    obj.write_bytes(PAYLOAD)
    reg = FakeRegistry([env])
    r = resolve_manifest(obj, reg)
    assert r.source is ManifestSource.DETACHED_CLOUD
    assert reg.calls[0][0] == "content" and reg.calls[0][1].startswith("sha2-256:")


def test_bare_without_anything_is_not_found(tmp_path):
    obj = tmp_path / "d.csv"
    obj.write_bytes(PAYLOAD)
    with pytest.raises(ManifestNotFound):
        resolve_manifest(obj)
    with pytest.raises(ManifestNotFound):
        resolve_manifest(obj, FakeRegistry())


def test_divergent_copies(tmp_path, pki):
    json_env = envelope(pki, "JSON").to_bytes()
    cbor_env = envelope(pki, "CBOR").to_bytes()  # same manifest id, different bytes
    obj = tmp_path / "d.csv"
    obj.write_bytes(PAYLOAD)
    Path(detached_manifest_path(obj)).write_bytes(json_env)
    assert resolve_manifest(obj, FakeRegistry([json_env])).source is ManifestSource.DETACHED_LOCAL
    with pytest.raises(DivergentCopies):
        resolve_manifest(obj, FakeRegistry([cbor_env]))
    emb = tmp_path / "e.csv"
    emb.write_bytes(embed_manifest(PAYLOAD, json_env))
    with pytest.raises(DivergentCopies):
        resolve_manifest(emb, FakeRegistry([cbor_env]))
