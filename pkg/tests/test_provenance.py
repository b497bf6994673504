import io
import random

import pytest

from conftest import later, make_manifest, make_pki
from vamp.crypto import sign_manifest
from vamp.errors import CycleDetected, DuplicateId, UnknownId, VerificationError
from vamp.manifest import FacsimileRef, compute_manifest_id
from vamp.provenance import ClosureReport, Direction, LineageDag, NodeStatus, ProvenanceGraph

GRAPH4 = ["train.csv", "val.csv", "train.py", "model.onnx"]


def sign(pki, m, fmt="JSON"):
    return sign_manifest(m, fmt, pki.key, pki.chain)


class Lab:
    """A small graph builder: object contents plus manifests that bind them."""

    def __init__(self, pki):
        self.pki = pki
        self.graph = ProvenanceGraph(pki.trust)
        self.content = {}

    def add(self, name, payload, origins=(), object_type="dataset", facsimiles=()):
        m = make_manifest(
            name, payload, object_type, origin_manifest_ids=tuple(origins), facsimiles=tuple(facsimiles)
        )
        mid = self.graph.add_manifest(sign(self.pki, m))
        self.content[mid] = payload
        return mid

    def resolver(self, mid):
        return self.content.get(mid)


@pytest.fixture
def lab(pki):
    return Lab(pki)


def load_graph4(pki_trust, folder, store=None):
    g = ProvenanceGraph(pki_trust, store)
    ids = {}
    for name in GRAPH4:
        ids[name] = g.add_manifest((folder / f"{name}.man").read_bytes())
    return g, ids


# ---------------------------------------------------------------- id-level dag


def test_dag_cycle_detection():
    dag = LineageDag()
    dag.add("b", ["a"])
    dag.add("c", ["b"])
    with pytest.raises(CycleDetected):
        dag.add("a", ["c"])
    with pytest.raises(CycleDetected):
        dag.add("x", ["x"])
    assert "a" not in dag and "x" not in dag


def test_dag_duplicate_id():
    dag = LineageDag()
    dag.add("b", ["a"])
    dag.add("b", ["a"])  # idempotent
    with pytest.raises(DuplicateId):
        dag.add("b", ["z"])


def test_dag_trace_tie_break_is_lexicographic():
    dag = LineageDag()
    dag.add("r", ["q", "p", "z"])
    dag.add("q", ["a"])
    dag.add("p", ["a"])
    dag.add("z", [])
    dag.add("a", [])
    assert dag.trace("r") == ["r", "p", "q", "a", "z"]
    assert dag.trace("a", Direction.DESCENDANTS) == ["a", "p", "q", "r"]


def test_dag_trace_is_topological_on_random_graphs():
    rng = random.Random(5)
    for _ in range(50):
        dag = LineageDag()
        names = [f"n{i:02d}" for i in range(rng.randint(1, 25))]
        for i, n in enumerate(names):
            dag.add(n, rng.sample(names[:i], rng.randint(0, min(i, 3))))
        start = names[-1]
        order = dag.trace(start)
        pos = {n: i for i, n in enumerate(order)}
        for n in order:
            for p in dag.parents[n]:
                assert pos[n] < pos[p]
        assert order == dag.trace(start)
        desc = dag.trace(names[0], "descendants")
        dpos = {n: i for i, n in enumerate(desc)}
        for n in desc:
            for c in dag.children.get(n, ()):
                assert dpos[n] < dpos[c]


# ---------------------------------------------------------------- graph


def test_add_is_idempotent_and_verifies(lab, pki):
    mid = lab.add("d", b"x\n")
    env = lab.graph.node(mid).envelope_bytes
    assert lab.graph.add_manifest(env) == mid
    assert len(lab.graph) == 1
    assert lab.graph.node(mid).signer == "DatasetPublisher"


def test_same_manifest_different_bytes_is_duplicate(lab, pki):
    m = make_manifest("d", b"x\n")
    lab.graph.add_manifest(sign(pki, m, "JSON"))
    with pytest.raises(DuplicateId):
        lab.graph.add_manifest(sign(pki, m, "CBOR"))


def test_untrusted_manifest_is_rejected(lab):
    with pytest.raises(VerificationError):
        lab.graph.add_manifest(sign(make_pki(), make_manifest()))
    assert len(lab.graph) == 0


def test_unknown_id(lab):
    with pytest.raises(UnknownId):
        lab.graph.trace("sha2-256:" + "0" * 64)
    with pytest.raises(UnknownId):
        lab.graph.verify_closure("sha2-256:" + "0" * 64, lab.resolver)
    with pytest.raises(UnknownId):
        lab.graph.node("nope")


def test_parents_may_arrive_after_children(lab, pki):
    parent = make_manifest("p", b"p\n")
    pid = compute_manifest_id(parent)
    cid = lab.add("c", b"c\n", [pid])
    assert lab.graph.unresolved() == {pid}
    r = lab.graph.verify_closure(cid, lab.resolver)
    assert not r.passed and r.unresolved == [pid]
    lab.graph.add_manifest(sign(pki, parent))
    lab.content[pid] = b"p\n"
    assert lab.graph.unresolved() == set()
    assert lab.graph.verify_closure(cid, lab.resolver).passed


def test_model_lineage_trace(lab):
    train = lab.add("train.csv", b"1,2\n")
    val = lab.add("val.csv", b"3,4\n")
    code = lab.add("train.py", b"print(1)\n", object_type="code")
    model = lab.add("model", b"\x00\x01", [train, val, code], "model")
    tuned = lab.add("tuned", b"\x00\x02", [model], "model")
    order = lab.graph.trace(tuned)
    assert order[:2] == [tuned, model]
    assert order[2:] == sorted([train, val, code])
    assert lab.graph.trace(train, "descendants") == [train, model, tuned]
    assert lab.graph.trace(tuned, "descendants") == [tuned]


def test_closure_passes_then_localizes_tamper(lab):
    a = lab.add("a", b"a1\na2\na3\n")
    b = lab.add("b", b"b\n", [a])
    c = lab.add("c", b"c\n", [b])
    r = lab.graph.verify_closure(c, lab.resolver)
    assert r.passed and [n.status for n in r.nodes] == [NodeStatus.VERIFIED] * 3
    lab.content[a] = b"a1\nXX\na3\n"
    r = lab.graph.verify_closure(c, lab.resolver)
    assert not r.passed and r.failed == [a]
    assert r.status_of(b) is NodeStatus.VERIFIED
    mini = [x for x in r.nodes[-1].bindings if x.binding_name == "minibatch:2"][0]
    assert mini.failing_units == (0,)


def test_closure_strict_and_permissive(lab):
    a = lab.add("a", b"a\n")
    b = lab.add("b", b"b\n", [a])
    del lab.content[a]
    strict = lab.graph.verify_closure(b, lab.resolver)
    assert not strict.passed and strict.status_of(a) is NodeStatus.UNRESOLVED
    loose = lab.graph.verify_closure(b, lab.resolver, strict=False)
    assert loose.passed and loose.status_of(a) is NodeStatus.SIGNATURE_ONLY


def test_closure_single_binding(lab):
    a = lab.add("a", b"r1\nr2\n")
    r = lab.graph.verify_closure(a, lab.resolver, binding="minibatch:2")
    assert r.passed and [b.binding_name for b in r.nodes[0].bindings] == ["minibatch:2"]
    r = lab.graph.verify_closure(a, lab.resolver, binding="nope")
    assert not r.passed and r.failed == [a]


def test_closure_accepts_streams(lab):
    a = lab.add("a", b"x\ny\nz\n")
    lab.content[a] = io.BytesIO(b"x\ny\nz\n")
    assert lab.graph.verify_closure(a, lab.resolver).passed


def test_closure_at_expired_time(lab):
    a = lab.add("a", b"a\n")
    r = lab.graph.verify_closure(a, lab.resolver, at_time=later(400))
    assert not r.passed and r.failed == [a] and "Expired" in r.nodes[0].detail[0]


def test_facsimiles_do_not_affect_closure_or_trace(lab):
    twin_payload = b"t\n"
    twin = make_manifest("twin", twin_payload)
    twin_id = compute_manifest_id(twin)
    a = lab.add("a", b"a\n", facsimiles=[FacsimileRef(twin_id, "rebinding")])
    r = lab.graph.verify_closure(a, lab.resolver)
    assert r.passed and [n.manifest_id for n in r.nodes] == [a]
    assert lab.graph.trace(a) == [a]
    assert lab.graph.facsimile_edges() == [tuple(sorted((a, twin_id))) + ("rebinding",)]
    assert twin_id in lab.graph.unresolved()
    r = lab.graph.verify_closure(a, lab.resolver, include_facsimiles=True)
    assert not r.passed and r.unresolved == [twin_id]


def test_closure_report_dict(lab):
    a = lab.add("a", b"a\n")
    d = lab.graph.verify_closure(a, lab.resolver).as_dict()
    assert d["root"] == a and d["passed"] is True
    assert d["nodes"][0]["status"] == "verified" and d["nodes"][0]["objectId"] == "a"
    assert isinstance(lab.graph.verify_closure(a, lab.resolver), ClosureReport)


# ---------------------------------------------------------------- graph4 corpus


def test_graph4_exports_match_golden(corpus, fixed_pki, graph4):
    g, _ = load_graph4(fixed_pki.trust, graph4)
    assert g.export_graph("dot") == (corpus / "graph4.dot").read_bytes()
    assert g.export_graph("json") == (corpus / "graph4.json").read_bytes()


def test_graph4_export_independent_of_insertion_order(corpus, fixed_pki, graph4):
    g = ProvenanceGraph(fixed_pki.trust)
    for name in reversed(GRAPH4):
        g.add_manifest((graph4 / f"{name}.man").read_bytes())
    assert g.export_graph("dot") == (corpus / "graph4.dot").read_bytes()


def test_graph4_closure(fixed_pki, graph4):
    g, ids = load_graph4(fixed_pki.trust, graph4)
    by_id = {mid: (graph4 / name).read_bytes() for name, mid in ids.items()}
    r = g.verify_closure(ids["model.onnx"], by_id.get)
    assert r.passed and len(r.nodes) == 4
    assert g.trace(ids["train.csv"], "descendants") == [ids["train.csv"], ids["model.onnx"]]


def test_graph4_dot_shapes(fixed_pki, graph4):
    g, ids = load_graph4(fixed_pki.trust, graph4)
    dot = g.export_graph().decode()
    assert f'"{ids["model.onnx"]}" -> "{ids["train.csv"]}";' in dot
    assert 'dir=none, style=dashed, label="split-of"' in dot


def test_subgraph_export_marks_nothing_missing(fixed_pki, graph4):
    g, ids = load_graph4(fixed_pki.trust, graph4)
    dot = g.export_graph("dot", only=[ids["train.csv"], ids["val.csv"]]).decode()
    assert "->" in dot and "model.onnx" not in dot and "dotted" not in dot


def test_unresolved_nodes_are_dotted(lab):
    ghost = "sha2-256:" + "e" * 64
    lab.add("orphan", b"o\n", [ghost])
    dot = lab.graph.export_graph().decode()
    assert f'"{ghost}" [label="unresolved' in dot and "style=dotted" in dot
    assert lab.graph.export_graph("json").count(ghost.encode()) == 2


def test_empty_graph_export(pki):
    g = ProvenanceGraph(pki.trust)
    assert g.export_graph() == b"digraph provenance {\n}\n"
    assert g.export_graph("json") == b'{"facsimileEdges":[],"nodes":[],"originEdges":[],"unresolved":[]}'
    with pytest.raises(ValueError):
        g.export_graph("svg")


def test_dot_escapes_quotes(lab):
    lab.add('we"ird\\name', b"w\n")
    assert '"we\\"ird\\\\name\\ndataset' in lab.graph.export_graph().decode()


# ---------------------------------------------------------------- persistence


def test_store_round_trip_and_index_rebuild(fixed_pki, graph4, tmp_path):
    store = tmp_path / "store"
    g, ids = load_graph4(fixed_pki.trust, graph4, store)
    assert sorted(p.name for p in store.glob("*.env")) == sorted(f"{m}.env" for m in ids.values())
    assert (store / "index.json").exists()
    (store / "index.json").unlink()
    again = ProvenanceGraph(fixed_pki.trust, store)
    assert again.ids == g.ids
    assert again.export_graph() == g.export_graph()
    assert (store / "index.json").exists()
