"""Bind a dataset three ways, corrupt one byte, and see which units notice."""

# %%
import random

from vamp.binding import bind_fixed_chunks, bind_minibatches, bind_static, verify_binding
from vamp.manifest import Manifest, ObjectType, compute_manifest_id

rng = random.Random(7)
rows = [f"{i},{rng.random():.5f},{rng.choice(['cat', 'dog', 'owl'])}\n".encode() for i in range(20_000)]
data = b"".join(rows)
print(f"dataset: {len(rows)} records, {len(data)} bytes")

# %%
# One manifest can carry several binding sets over the same bytes.
bindings = (bind_static(data), bind_fixed_chunks(data, 4096), bind_minibatches(data, 256))
manifest = Manifest(
    object_id="animals.csv",
    object_type=ObjectType.DATASET,
    encoding_information="CSV",
    created_at="2024-01-01T00:00:00Z",
    bindings=bindings,
)
print("manifest id:", compute_manifest_id(manifest))
for b in bindings:
    print(f"  {b.name:<14} {verify_binding(data, b).unit_count} units, passes={verify_binding(data, b).passed}")

# %%
# Flip one byte somewhere in the middle.
pos = len(data) // 2 + 123
tampered = bytearray(data)
tampered[pos] ^= 0x01
tampered = bytes(tampered)
print(f"\nflipped byte at offset {pos}")

for b in bindings:
    report = verify_binding(tampered, b)
    print(f"  {b.name:<14} passed={report.passed} failing units={list(report.failing_units)}")

# %%
# The static digest only says "something changed"; chunks and boxes say where.
k = verify_binding(tampered, bindings[2]).failing_units[0]
box = bindings[2].body.boxes[k]
print(f"\nchunk {pos // 4096} covers bytes [{pos // 4096 * 4096}, {(pos // 4096 + 1) * 4096})")
print(f"box covers bytes [{box.offset}, {box.offset + box.length}), records {k * 256}..{k * 256 + 255}")

# %%
# Truncation is caught as a length problem as well as missing units.
report = verify_binding(data[: len(data) - 5000], bindings[1])
print("\ntruncated by 5000 bytes:", report.problems, "failing units", list(report.failing_units))
