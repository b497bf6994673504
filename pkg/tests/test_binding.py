import hashlib
import io
import random

import pytest

import oracles
from vamp.binding import (
    BindingKind,
    BindingSet,
    ChunkBody,
    RecordMerkleBody,
    bind_fixed_chunks,
    bind_fixed_records,
    bind_minibatches,
    bind_record_merkle,
    bind_static,
    prove_minibatch_range,
    split_records,
    verify_binding,
    verify_minibatch_range,
)
from vamp.errors import MalformedProof, RangeOutOfBounds
from vamp.hashing import SHA2_256, SHA2_512, Digest


def sha(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


# ---------------------------------------------------------------- static


def test_static_vector():
    b = bind_static(b"abc")
    assert b.body.digest.hex == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    assert b.name == "static" and b.kind is BindingKind.STATIC
    assert verify_binding(b"abc", b).passed
    r = verify_binding(b"abd", b)
    assert not r.passed and r.problems == ("DigestMismatch",)


def test_static_sha512_from_stream():
    b = bind_static(io.BytesIO(b"abc"), SHA2_512)
    assert b.body.digest.value == hashlib.sha512(b"abc").digest()


# ---------------------------------------------------------------- chunks


def test_chunk_example():
    data = bytes(range(10))
    b = bind_fixed_chunks(data, 4)
    assert b.name == "chunk:4"
    assert b.body.total_length == 10
    assert [d.value for d in b.body.digests] == [sha(data[0:4]), sha(data[4:8]), sha(data[8:10])]


def test_chunk_default_name_and_empty():
    b = bind_fixed_chunks(b"", 8)
    assert b.body.digests == () and b.body.total_length == 0
    assert verify_binding(b"", b).passed
    assert not verify_binding(b"x", b).passed


def test_chunk_exact_multiple():
    b = bind_fixed_chunks(b"x" * 16, 4)
    assert len(b.body.digests) == 4


def test_chunk_exhaustive_single_byte_tamper():
    data = random.Random(1).randbytes(4096)
    size = 256
    b = bind_fixed_chunks(data, size)
    for pos in range(len(data)):
        bad = bytearray(data)
        bad[pos] ^= 0xFF
        r = verify_binding(bytes(bad), b)
        assert r.failing_units == (pos // size,)


def test_chunk_truncation_is_length_mismatch():
    data = b"x" * 40
    b = bind_fixed_chunks(data, 8)
    r = verify_binding(data[:20], b)
    assert not r.passed
    assert any(p.startswith("LengthMismatch") for p in r.problems)
    assert r.failing_units == (2, 3, 4)


def test_chunk_extension_is_length_mismatch():
    b = bind_fixed_chunks(b"x" * 8, 8)
    r = verify_binding(b"x" * 9, b)
    assert not r.passed and any(p.startswith("LengthMismatch") for p in r.problems)


def test_chunk_workers_do_not_change_result():
    data = random.Random(2).randbytes(50_000)
    serial = bind_fixed_chunks(data, 1000)
    for w in (2, 3, 8):
        assert bind_fixed_chunks(data, 1000, workers=w) == serial


def test_chunk_size_consistency_across_sizes():
    # a chunk of size 2k equals the concatenation of two chunks of size k
    data = random.Random(3).randbytes(3000)
    small = bind_fixed_chunks(data, 100)
    big = bind_fixed_chunks(data, 200)
    for i, d in enumerate(big.body.digests):
        assert d.value == sha(data[i * 200 : (i + 1) * 200])
    assert small.body.total_length == big.body.total_length


def test_invalid_chunk_size():
    with pytest.raises(ValueError):
        bind_fixed_chunks(b"x", 0)


def test_structurally_invalid_binding_fails_verification():
    bad = BindingSet("chunk:4", BindingKind.FIXED_CHUNK, SHA2_256, ChunkBody(4, 100, ()))
    r = verify_binding(b"x" * 100, bad)
    assert not r.passed and r.problems[0].startswith("InvalidStructure")


# ---------------------------------------------------------------- boxes


def test_minibatch_example():
    data = b"r0\nr1\nr2\nr3\nr4\n"
    b = bind_minibatches(data, 2)
    assert b.name == "minibatch:2" and b.kind is BindingKind.BOX
    boxes = b.body.boxes
    assert [(x.offset, x.length) for x in boxes] == [(0, 6), (6, 6), (12, 3)]
    assert boxes[0].digest.value == sha(b"r0\nr1\n")
    assert boxes[2].digest.value == sha(b"r4\n")


def test_minibatch_localizes_record_edit():
    recs = [f"row-{i}\n".encode() for i in range(100)]
    data = b"".join(recs)
    b = bind_minibatches(data, 8)
    for i in range(100):
        bad = b"".join(r if j != i else r.replace(b"row", b"ROW") for j, r in enumerate(recs))
        assert verify_binding(bad, b).failing_units == (i // 8,)


def test_minibatch_trailing_record_without_delimiter():
    b = bind_minibatches(b"a\nb", 1)
    assert [x.length for x in b.body.boxes] == [2, 1]


def test_minibatch_multibyte_delimiter():
    b = bind_minibatches(b"a\r\nb\r\nc\r\n", 2, b"\r\n")
    assert [x.length for x in b.body.boxes] == [6, 3]


def test_fixed_records():
    data = bytes(range(20))
    b = bind_fixed_records(data, 3, 2)
    assert [(x.offset, x.length) for x in b.body.boxes] == [(0, 6), (6, 6), (12, 6), (18, 2)]


def test_box_truncation():
    data = b"a\nb\nc\nd\n"
    b = bind_minibatches(data, 2)
    r = verify_binding(data[:5], b)
    assert not r.passed
    assert r.failing_units == (1,)
    assert any(p.startswith("LengthMismatch") for p in r.problems)


def test_box_trailing_garbage():
    b = bind_minibatches(b"a\n", 1)
    r = verify_binding(b"a\nzzz", b)
    assert not r.passed and r.failing_units == ()


# ---------------------------------------------------------------- record merkle


@pytest.mark.parametrize("n", [0, 1, 2, 3, 4, 5, 7, 8, 9, 31, 32, 33])
def test_record_merkle_root_matches_oracles(n):
    recs = [f"{i},{i * i}\n".encode() for i in range(n)]
    b = bind_record_merkle(b"".join(recs))
    assert b.body.leaf_count == n
    assert b.body.root.value == oracles.Oracle(recs).root(n) == oracles.levelwise_root(recs)


def test_record_merkle_single_record():
    b = bind_record_merkle(b"only\n")
    assert b.body.root.value == sha(b"\x00only\n")


def test_record_merkle_empty_root():
    assert bind_record_merkle(b"").body.root.value == sha(b"")


def test_record_merkle_verify_and_tamper():
    data = b"a\nb\nc\n"
    b = bind_record_merkle(data)
    assert verify_binding(data, b).passed
    assert verify_binding(b"a\nB\nc\n", b).problems == ("RootMismatch",)
    r = verify_binding(b"a\nb\n", b)
    assert r.problems[0].startswith("LeafCountMismatch")


def test_split_records_matches_oracle():
    rng = random.Random(4)
    for _ in range(200):
        data = bytes(rng.choice(b"ab\n;") for _ in range(rng.randint(0, 30)))
        for delim in (b"\n", b";", b"\n;"):
            assert split_records(data, delim) == oracles.records(data, delim)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13, 32])
def test_range_proofs_exhaustive(n):
    recs = [f"rec{i}\n".encode() for i in range(n)]
    data = b"".join(recs)
    b = bind_record_merkle(data)
    oracle = oracles.Oracle(recs)
    for start in range(n):
        for stop in range(start + 1, n + 1):
            got, proof = prove_minibatch_range(data, b, start, stop)
            assert got == recs[start:stop]
            assert [d.value for d in proof] == oracle.range_siblings(start, stop, n)
            assert verify_minibatch_range(b, start, stop, got, proof)
            assert verify_minibatch_range(b, start, stop, b"".join(got), proof)


def test_range_proof_detects_tampered_record():
    recs = [f"rec{i}\n".encode() for i in range(10)]
    b = bind_record_merkle(b"".join(recs))
    got, proof = prove_minibatch_range(b"".join(recs), b, 3, 6)
    got[1] = b"evil\n"
    assert not verify_minibatch_range(b, 3, 6, got, proof)
    assert not verify_minibatch_range(b, 3, 6, got[:2], proof)


def test_range_out_of_bounds():
    b = bind_record_merkle(b"a\nb\n")
    for start, stop in [(0, 3), (2, 2), (-1, 1), (1, 0)]:
        with pytest.raises(RangeOutOfBounds):
            prove_minibatch_range(b"a\nb\n", b, start, stop)
        with pytest.raises(RangeOutOfBounds):
            verify_minibatch_range(b, start, stop, [], [])


def test_malformed_proofs():
    recs = [b"a\n", b"b\n", b"c\n", b"d\n"]
    b = bind_record_merkle(b"".join(recs))
    _, proof = prove_minibatch_range(b"".join(recs), b, 0, 1)
    with pytest.raises(MalformedProof):
        verify_minibatch_range(b, 0, 1, recs[:1], proof[:-1])
    with pytest.raises(MalformedProof):
        verify_minibatch_range(b, 0, 1, recs[:1], proof + proof[:1])
    with pytest.raises(MalformedProof):
        verify_minibatch_range(b, 0, 1, recs[:1], [b"short"] * len(proof))
    with pytest.raises(MalformedProof):
        verify_minibatch_range(b, 0, 1, recs[:1], [Digest(SHA2_512, bytes(64))] * len(proof))


def test_range_proof_needs_merkle_binding():
    with pytest.raises(TypeError):
        prove_minibatch_range(b"a\n", bind_static(b"a\n"), 0, 1)


def test_record_merkle_body_fields():
    b = bind_record_merkle(b"x;y;", b";")
    assert isinstance(b.body, RecordMerkleBody)
    assert b.body.record_delimiter == b";" and b.body.leaf_count == 2


def test_report_as_dict():
    r = verify_binding(b"abd", bind_minibatches(b"abc", 1))
    assert r.as_dict() == {
        "binding": "minibatch:1",
        "kind": "box",
        "passed": False,
        "failingUnits": [0],
        "problems": ["DigestMismatch"],
        "unitCount": 1,
    }
