"""Provenance DAG over signed manifests and closure verification.

Nodes are keyed by manifest id. Origin back-references form directed edges
``child -> parent``; facsimile relations are symmetric annotations that never
influence ordering or closure results (unless explicitly requested).
"""

from __future__ import annotations

import heapq
import io
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Callable, Iterable, Union

from .binding import VerificationReport, verify_binding
from .canonical import dumps_json
from .crypto import Certificate, SignedManifest, verify_signed_manifest
from .errors import CycleDetected, DuplicateId, UnknownId, VerificationError
from .manifest import Manifest, compute_manifest_id

Content = Union[bytes, BinaryIO, None]
ContentResolver = Callable[[str], Content]


class Direction(str, Enum):
    ANCESTORS = "ancestors"
    DESCENDANTS = "descendants"


class LineageDag:
    """Id-level DAG. Parents may be referenced before they are added."""

    def __init__(self):
        self.parents: dict[str, tuple[str, ...]] = {}
        self.children: dict[str, set[str]] = {}

    def copy(self) -> "LineageDag":
        dag = LineageDag()
        dag.parents = dict(self.parents)
        dag.children = {k: set(v) for k, v in self.children.items()}
        return dag

    def __contains__(self, node: str) -> bool:
        return node in self.parents

    def _reaches(self, start: str, target: str) -> bool:
        stack, seen = [start], set()
        while stack:
            n = stack.pop()
            if n == target:
                return True
            if n in seen:
                continue
            seen.add(n)
            stack.extend(self.parents.get(n, ()))
        return False

    def add(self, node: str, parents: Iterable[str]) -> None:
        parents = tuple(parents)
        if node in self.parents:
            if self.parents[node] != parents:
                raise DuplicateId(f"{node} already present with different origins")
            return
        for p in parents:
            if self._reaches(p, node):
                raise CycleDetected(f"adding {node} -> {p} would create a cycle")
        self.parents[node] = parents
        for p in parents:
            self.children.setdefault(p, set()).add(node)

    def unresolved(self) -> set[str]:
        return {p for ps in self.parents.values() for p in ps if p not in self.parents}

    def _neighbours(self, node: str, direction: Direction) -> Iterable[str]:
        if direction is Direction.ANCESTORS:
            return self.parents.get(node, ())
        return self.children.get(node, ())

    def trace(self, start: str, direction: Direction | str = Direction.ANCESTORS) -> list[str]:
        """Topological order from ``start``; ties broken by lexicographic id."""
        direction = Direction(direction)
        reach, stack = set(), [start]
        while stack:
            n = stack.pop()
            if n not in reach:
                reach.add(n)
                stack.extend(self._neighbours(n, direction))
        indegree = {n: 0 for n in reach}
        for n in reach:
            for m in self._neighbours(n, direction):
                indegree[m] += 1
        ready = [n for n, d in indegree.items() if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            n = heapq.heappop(ready)
            order.append(n)
            for m in self._neighbours(n, direction):
                indegree[m] -= 1
                if indegree[m] == 0:
                    heapq.heappush(ready, m)
        return order


@dataclass(frozen=True)
class Node:
    manifest_id: str
    envelope_bytes: bytes
    manifest: Manifest
    signer: str


class NodeStatus(str, Enum):
    VERIFIED = "verified"
    SIGNATURE_ONLY = "signature-only"
    UNRESOLVED = "unresolved"
    FAILED = "FAILED"


@dataclass
class NodeReport:
    manifest_id: str
    status: NodeStatus
    object_id: str | None = None
    detail: list[str] = field(default_factory=list)
    bindings: list[VerificationReport] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "manifestId": self.manifest_id,
            "objectId": self.object_id,
            "status": self.status.value,
            "detail": list(self.detail),
            "bindings": [b.as_dict() for b in self.bindings],
        }


@dataclass
class ClosureReport:
    root_id: str
    passed: bool
    nodes: list[NodeReport]

    @property
    def failed(self) -> list[str]:
        return [n.manifest_id for n in self.nodes if n.status is NodeStatus.FAILED]

    @property
    def unresolved(self) -> list[str]:
        return [n.manifest_id for n in self.nodes if n.status is NodeStatus.UNRESOLVED]

    def status_of(self, manifest_id: str) -> NodeStatus:
        for n in self.nodes:
            if n.manifest_id == manifest_id:
                return n.status
        raise KeyError(manifest_id)

    def as_dict(self) -> dict:
        return {"root": self.root_id, "passed": self.passed, "nodes": [n.as_dict() for n in self.nodes]}


def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _dot_label(*lines: str) -> str:
    return "\\n".join(_dot_id(line)[1:-1] for line in lines).join('""')


def _rewind(content: Content):
    if isinstance(content, (bytes, bytearray, memoryview)):
        return lambda: bytes(content)
    if content.seekable():
        start = content.tell()

        def again():
            content.seek(start)
            return content

        return again
    data = content.read()
    return lambda: io.BytesIO(data)


class ProvenanceGraph:
    """Signed manifests linked by origin and facsimile references.

    Writes are serialized by a lock; ``trace`` and ``verify_closure`` work on
    a snapshot taken when they start. With ``store_dir`` every accepted
    envelope is persisted as ``<manifestId>.env`` plus a rebuildable
    ``index.json``.
    """

    INDEX = "index.json"

    def __init__(
        self,
        trust_store: Iterable[Certificate],
        store_dir: str | os.PathLike | None = None,
        at_time: datetime | None = None,
    ):
        self.trust_store = frozenset(trust_store)
        self.at_time = at_time
        self._nodes: dict[str, Node] = {}
        self._dag = LineageDag()
        self._facsimiles: set[tuple[str, str, str]] = set()
        self._lock = threading.RLock()
        self.store_dir = Path(store_dir) if store_dir is not None else None
        if self.store_dir is not None:
            self.store_dir.mkdir(parents=True, exist_ok=True)
            for p in sorted(self.store_dir.glob("*.env")):
                self.add_manifest(p.read_bytes(), _persist=False)
            self._write_index()

    # -- writes

    def add_manifest(self, envelope: SignedManifest | bytes, *, _persist: bool = True) -> str:
        raw = envelope.to_bytes() if isinstance(envelope, SignedManifest) else bytes(envelope)
        manifest, signer = verify_signed_manifest(raw, self.trust_store, self.at_time)
        mid = compute_manifest_id(manifest)
        with self._lock:
            existing = self._nodes.get(mid)
            if existing is not None:
                if existing.envelope_bytes != raw:
                    raise DuplicateId(f"{mid} already present with different envelope bytes")
                return mid
            self._dag.add(mid, manifest.origin_manifest_ids)
            self._nodes[mid] = Node(mid, raw, manifest, signer)
            for f in manifest.facsimiles:
                a, b = sorted((mid, f.manifest_id))
                self._facsimiles.add((a, b, f.relation.value))
            if _persist and self.store_dir is not None:
                (self.store_dir / f"{mid}.env").write_bytes(raw)
                self._write_index()
        return mid

    def _write_index(self) -> None:
        index = {
            mid: {"objectId": n.manifest.object_id, "origins": list(n.manifest.origin_manifest_ids)}
            for mid, n in self._nodes.items()
        }
        (self.store_dir / self.INDEX).write_bytes(dumps_json(index))

    # -- reads

    def __contains__(self, manifest_id: str) -> bool:
        return manifest_id in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def node(self, manifest_id: str) -> Node:
        try:
            return self._nodes[manifest_id]
        except KeyError:
            raise UnknownId(manifest_id) from None

    @property
    def ids(self) -> list[str]:
        return sorted(self._nodes)

    def origin_edges(self) -> list[tuple[str, str]]:
        return sorted((c, p) for c, ps in self._dag.parents.items() for p in ps)

    def facsimile_edges(self) -> list[tuple[str, str, str]]:
        return sorted(self._facsimiles)

    def unresolved(self) -> set[str]:
        refs = self._dag.unresolved() | {x for a, b, _ in self._facsimiles for x in (a, b)}
        return {r for r in refs if r not in self._nodes}

    def _snapshot(self):
        with self._lock:
            return dict(self._nodes), self._dag.copy(), set(self._facsimiles)

    def trace(self, manifest_id: str, direction: Direction | str = Direction.ANCESTORS) -> list[str]:
        nodes, dag, _ = self._snapshot()
        if manifest_id not in nodes:
            raise UnknownId(manifest_id)
        return dag.trace(manifest_id, direction)

    def verify_closure(
        self,
        manifest_id: str,
        content_resolver: ContentResolver,
        *,
        binding: str | None = None,
        strict: bool = True,
        include_facsimiles: bool = False,
        at_time: datetime | None = None,
    ) -> ClosureReport:
        """Re-verify signatures and bindings of a node and all its ancestors.

        ``binding`` restricts content checks to one named binding set (default:
        every set must pass). In strict mode, a node whose content cannot be
        resolved is ``unresolved`` and fails the closure; otherwise it is
        reported ``signature-only``.
        """
        nodes, dag, facsimiles = self._snapshot()
        if manifest_id not in nodes:
            raise UnknownId(manifest_id)
        order = dag.trace(manifest_id, Direction.ANCESTORS)
        if include_facsimiles:
            partners = {b if a in order else a for a, b, _ in facsimiles if a in order or b in order}
            order += sorted(partners - set(order))
        at_time = at_time or self.at_time
        reports = [self._verify_node(mid, nodes.get(mid), content_resolver, binding, strict, at_time) for mid in order]
        passed = all(r.status in (NodeStatus.VERIFIED, NodeStatus.SIGNATURE_ONLY) for r in reports)
        return ClosureReport(manifest_id, passed, reports)

    def _verify_node(self, mid, node, resolver, binding, strict, at_time) -> NodeReport:
        if node is None:
            return NodeReport(mid, NodeStatus.UNRESOLVED, detail=["manifest not available"])
        report = NodeReport(mid, NodeStatus.VERIFIED, object_id=node.manifest.object_id)
        try:
            verify_signed_manifest(node.envelope_bytes, self.trust_store, at_time)
        except VerificationError as exc:
            report.status = NodeStatus.FAILED
            report.detail.append(f"{type(exc).__name__}: {exc}")
            return report
        content = resolver(mid)
        if content is None:
            report.status = NodeStatus.UNRESOLVED if strict else NodeStatus.SIGNATURE_ONLY
            report.detail.append("content unavailable")
            return report
        sets = node.manifest.bindings
        if binding is not None:
            sets = tuple(b for b in sets if b.name == binding)
            if not sets:
                report.status = NodeStatus.FAILED
                report.detail.append(f"binding set {binding!r} not present")
                return report
        again = _rewind(content)
        for b in sets:
            result = verify_binding(again(), b)
            report.bindings.append(result)
            if not result.passed:
                report.status = NodeStatus.FAILED
                report.detail.append(f"binding {b.name!r} failed: {', '.join(result.problems)}")
        return report

    # -- export

    def export_graph(self, fmt: str = "dot", only: Iterable[str] | None = None) -> bytes:
        """Render the graph (or the subgraph induced by ``only``) as dot or JSON."""
        nodes, dag, facsimiles = self._snapshot()
        origin = sorted((c, p) for c, ps in dag.parents.items() for p in ps)
        fac = sorted(facsimiles)
        if only is not None:
            keep = set(only)
            nodes = {k: v for k, v in nodes.items() if k in keep}
            origin = [(c, p) for c, p in origin if c in keep and p in keep]
            fac = [(a, b, r) for a, b, r in fac if a in keep and b in keep]
        referenced = {x for e in origin for x in e} | {x for a, b, _ in fac for x in (a, b)}
        missing = sorted(referenced - set(nodes))
        if fmt == "json":
            return dumps_json(
                {
                    "nodes": [
                        {
                            "id": mid,
                            "objectId": n.manifest.object_id,
                            "objectType": n.manifest.object_type.value,
                            "signer": n.signer,
                        }
                        for mid, n in sorted(nodes.items())
                    ],
                    "unresolved": missing,
                    "originEdges": [{"child": c, "parent": p} for c, p in origin],
                    "facsimileEdges": [{"a": a, "b": b, "relation": r} for a, b, r in fac],
                }
            )
        if fmt != "dot":
            raise ValueError(f"unknown export format {fmt!r}")
        lines = ["digraph provenance {"]
        for mid, n in sorted(nodes.items()):
            label = _dot_label(n.manifest.object_id, n.manifest.object_type.value, mid[:21])
            lines.append(f"  {_dot_id(mid)} [label={label}];")
        for mid in missing:
            lines.append(f"  {_dot_id(mid)} [label={_dot_label('unresolved', mid[:21])}, style=dotted];")
        for c, p in origin:
            lines.append(f"  {_dot_id(c)} -> {_dot_id(p)};")
        for a, b, r in fac:
            lines.append(f"  {_dot_id(a)} -> {_dot_id(b)} [dir=none, style=dashed, label={_dot_id(r)}];")
        lines.append("}")
        return ("\n".join(lines) + "\n").encode("utf-8")
