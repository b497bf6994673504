"""A training pipeline end to end through the command line and a live registry.

Publishes a training set, a validation split and the training code, then a
model that names all three as origins. Closure verification passes until one
row of the training set is changed.
"""

# %%
import json
import random
import socket
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import httpx

work = Path(tempfile.mkdtemp(prefix="vamp-pipeline-"))
print("working in", work)


def vamp(*args, check=True):
    r = subprocess.run([sys.executable, "-m", "vamp", *map(str, args)], cwd=work, capture_output=True, text=True)
    print(f"$ vamp {' '.join(map(str, args))}  -> exit {r.returncode}")
    if check and r.returncode != 0:
        sys.exit(r.stdout + r.stderr)
    return r


# %%
# A self-signed root goes into the trust store; the publisher key is issued by it.
vamp("keygen", "--subject", "Example Root", "--self-signed", "--out", "root", "--add-to-trust")
vamp("keygen", "--subject", "Data Team", "--issuer-key", "root.key", "--issuer-cert", "root.cert", "--out", "team")

rng = random.Random(3)
(work / "train.csv").write_text("".join(f"{i},{rng.random():.4f},{i % 2}\n" for i in range(2000)))
(work / "val.csv").write_text("".join(f"{i},{rng.random():.4f},{i % 2}\n" for i in range(400)))
(work / "train.py").write_text("import csv\nprint('fit')\n")
(work / "model.bin").write_bytes(rng.randbytes(64_000))

# %%
with socket.socket() as s:
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
url = f"http://127.0.0.1:{port}"
server = subprocess.Popen(
    [sys.executable, "-m", "vamp", "serve", "--addr", f"127.0.0.1:{port}", "--data-dir", "registry",
     "--log-key", "log.key"],
    cwd=work,
)
for _ in range(100):
    try:
        httpx.get(f"{url}/v1/log/head")
        break
    except httpx.TransportError:
        time.sleep(0.1)
print("registry at", url)


def publish(name, object_id, kind, *extra):
    vamp("create", "--object", name, "--object-id", object_id, "--type", kind, *extra)
    vamp("sign", "--manifest", f"{name}.manifest.json", "--key", "team.key", "--cert", "team.cert",
         "--cert", "root.cert", "--object", name)
    out = vamp("publish", "--envelope", f"{name}.man", "--registry", url, "--output", "json").stdout
    mid = json.loads(out)["manifestId"]
    print("   ", object_id, mid)
    return mid


try:
    # %%
    train = publish("train.csv", "train", "dataset", "--bind", "static", "--bind", "minibatch:128")
    val = publish("val.csv", "val", "dataset", "--bind", "static", "--facsimile", f"{train}:split-of")
    code = publish("train.py", "train.py", "code")
    model = publish("model.bin", "model", "model", "--bind", "chunk:4096", "--origin", train, "--origin", val,
                    "--origin", code, "--transformation", "fit")

    # %%
    # Receipts verify offline against the log's public key.
    vamp("verify-receipt", "model.bin.man.rcpt", "--log-key", "log.key.pub", "--envelope", "model.bin.man")

    # %%
    withs = ["--with", "train.csv", "--with", "val.csv", "--with", "train.py"]
    print(vamp("verify", "--object", "model.bin", "--closure", "--registry", url, *withs).stdout)

    # %%
    # Change one label in the training set and verify again.
    rows = (work / "train.csv").read_text().splitlines(keepends=True)
    rows[1000] = rows[1000][:-2] + ("0" if rows[1000][-2] == "1" else "1") + "\n"
    (work / "train.csv").write_text("".join(rows))
    print(vamp("verify", "--object", "model.bin", "--closure", "--registry", url, *withs, check=False).stdout)

    # %%
    # Record the lineage in a local graph store and walk it backwards from the model.
    vamp("graph", "add", "model.bin.man", "val.csv.man", "train.csv.man", "train.py.man")
    print(vamp("trace", "--id", model).stdout)
    print(vamp("trace", "--id", train, "--direction", "descendants").stdout)
finally:
    server.terminate()
    server.wait(10)
