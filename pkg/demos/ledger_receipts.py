"""An append-only log of manifest ids: receipts, growth proofs, and a caught fork."""

# %%
import tempfile
from pathlib import Path

from vamp.binding import bind_static
from vamp.crypto import generate_keypair, read_public_key, write_public_key
from vamp.ledger import Receipt, TransparencyLog, verify_consistency, verify_receipt
from vamp.manifest import Manifest, ObjectType, compute_manifest_id

work = Path(tempfile.mkdtemp(prefix="vamp-ledger-"))
key, _ = generate_keypair()
log = TransparencyLog(key, directory=work / "log")
write_public_key(work / "log.pub", log.public_key)

ids = []
for i in range(10):
    payload = f"shard {i}\n".encode()
    m = Manifest(
        object_id=f"shard-{i}",
        object_type=ObjectType.DATASET,
        encoding_information="text",
        created_at="2024-01-01T00:00:00Z",
        bindings=(bind_static(payload),),
    )
    ids.append(compute_manifest_id(m))
    log.append(ids[-1].encode())
head = log.head()
print(f"log holds {head.tree_size} entries, root {head.root_hash}")

# %%
# A receipt is a signed tree head plus an audit path; it is checked with the public key alone.
raw = log.prove_inclusion(3).to_bytes()
receipt = Receipt.from_bytes(raw)
print(f"receipt for entry 3: {len(receipt.audit_path)} path hashes, {len(raw)} bytes")
print("verifies offline:", verify_receipt(receipt, read_public_key(work / "log.pub")))

# %%
# After more appends, the old head is provably a prefix of the new one.
old = log.head()
for i in range(10, 25):
    log.append(f"later-{i}".encode())
new = log.head()
proof = log.prove_consistency(old.tree_size, new.tree_size)
print(f"\n{old.tree_size} -> {new.tree_size} consistent:", verify_consistency(old, new, proof, log.public_key))

# %%
# A log that rewrote entry 5 cannot prove it extends the head we already saw.
fork = TransparencyLog(key)
for i, mid in enumerate(ids):
    fork.append(b"rewritten" if i == 5 else mid.encode())
for i in range(10, 25):
    fork.append(f"later-{i}".encode())
forged = fork.prove_consistency(old.tree_size, new.tree_size)
print("forked log consistent with the old head:", verify_consistency(old, fork.head(), forged, log.public_key))

# %%
# The log persists; reopening it restores the same root.
again = TransparencyLog(key, directory=work / "log")
print("\nreopened root matches:", again.root() == log.root())
