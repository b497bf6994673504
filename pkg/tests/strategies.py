"""Randomized manifest generation shared by property tests and acceptance."""

import random
import string

from vamp.binding import BindingKind, BindingSet, Box, BoxBody, ChunkBody, RecordMerkleBody, StaticBody
from vamp.hashing import DIGEST_SIZES, HASH_ALGORITHMS, Digest, hash_bytes
from vamp.manifest import FacsimileRef, FacsimileRelation, Manifest, ObjectType

_TEXT = string.ascii_letters + string.digits + " -_./:é漢🙂\"\\\n"


def _text(rng: random.Random, lo=1, hi=24) -> str:
    return "".join(rng.choice(_TEXT) for _ in range(rng.randint(lo, hi)))


def _digest(rng: random.Random, alg: str) -> Digest:
    return Digest(alg, rng.randbytes(DIGEST_SIZES[alg]))


def _manifest_id(rng: random.Random) -> str:
    return "sha2-256:" + rng.randbytes(32).hex()


def random_binding(rng: random.Random, name: str) -> BindingSet:
    alg = rng.choice(HASH_ALGORITHMS)
    kind = rng.choice(list(BindingKind))
    if kind is BindingKind.STATIC:
        body = StaticBody(_digest(rng, alg))
    elif kind is BindingKind.FIXED_CHUNK:
        size = rng.randint(1, 4096)
        total = rng.randint(0, size * 5)
        body = ChunkBody(size, total, tuple(_digest(rng, alg) for _ in range(-(-total // size))))
    elif kind is BindingKind.BOX:
        boxes, offset = [], 0
        for _ in range(rng.randint(0, 5)):
            n = rng.randint(1, 1000)
            boxes.append(Box(offset, n, _digest(rng, alg)))
            offset += n
        body = BoxBody(tuple(boxes))
    else:
        count = rng.randint(0, 10**6) if rng.random() < 0.9 else 0
        root = _digest(rng, alg) if count else hash_bytes(alg, b"")
        body = RecordMerkleBody(rng.choice([b"\n", b"\r\n", b"\x00", b";"]), count, root)
    return BindingSet(name, kind, alg, body)


def random_manifest(rng: random.Random) -> Manifest:
    names = rng.sample(["static", "chunk:4096", "minibatch:64", "record-merkle", "labels", "alt"], rng.randint(1, 4))
    opt = lambda v: v if rng.random() < 0.5 else None  # noqa: E731
    return Manifest(
        object_id=_text(rng),
        object_type=rng.choice(list(ObjectType)),
        encoding_information=_text(rng, 1, 8),
        created_at=f"{rng.randint(1970, 2099):04d}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}T"
        f"{rng.randint(0, 23):02d}:{rng.randint(0, 59):02d}:{rng.randint(0, 59):02d}Z",
        bindings=tuple(random_binding(rng, n) for n in names),
        origin_manifest_ids=tuple(dict.fromkeys(_manifest_id(rng) for _ in range(rng.randint(0, 3)))),
        facsimiles=tuple(
            FacsimileRef(_manifest_id(rng), rng.choice(list(FacsimileRelation)), opt(_text(rng)))
            for _ in range(rng.randint(0, 2))
        ),
        master_copy_locator=opt("https://data.example/" + _text(rng, 1, 10).replace("\n", "")),
        copyright=opt(_text(rng)),
        transformation=opt(rng.choice(["finetune", "gzip-decode", "train", "split"])),
    )
