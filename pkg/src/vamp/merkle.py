"""Merkle tree hashing with 0x00/0x01 domain separation.

The tree shape is the history-tree shape: a tree over ``n`` leaves splits at
the largest power of two strictly below ``n``. Building level by level and
promoting an unpaired last node yields the same tree. The root of zero leaves
is the hash of the empty string.

Used both for record-level dataset bindings and for the transparency log.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .errors import MalformedProof
from .hashing import SHA2_256, new_hasher

LEAF_PREFIX = b"\x00"
NODE_PREFIX = b"\x01"


def _h(algorithm: str, *parts: bytes) -> bytes:
    h = new_hasher(algorithm)
    for p in parts:
        h.update(p)
    return h.digest()


def leaf_hash(data: bytes, algorithm: str = SHA2_256) -> bytes:
    return _h(algorithm, LEAF_PREFIX, data)


def node_hash(left: bytes, right: bytes, algorithm: str = SHA2_256) -> bytes:
    return _h(algorithm, NODE_PREFIX, left, right)


def empty_root(algorithm: str = SHA2_256) -> bytes:
    return _h(algorithm)


def split_point(n: int) -> int:
    """Largest power of two strictly less than ``n`` (n >= 2)."""
    return 1 << ((n - 1).bit_length() - 1)


class RootAccumulator:
    """Streaming root computation in O(log n) memory."""

    def __init__(self, algorithm: str = SHA2_256):
        self.algorithm = algorithm
        self.count = 0
        # (height, hash) of perfect subtrees, strictly decreasing heights
        self._stack: list[tuple[int, bytes]] = []

    def add_leaf_hash(self, lh: bytes) -> None:
        height, node = 0, lh
        while self._stack and self._stack[-1][0] == height:
            _, left = self._stack.pop()
            node = node_hash(left, node, self.algorithm)
            height += 1
        self._stack.append((height, node))
        self.count += 1

    def add(self, data: bytes) -> None:
        self.add_leaf_hash(leaf_hash(data, self.algorithm))

    def root(self) -> bytes:
        if not self._stack:
            return empty_root(self.algorithm)
        acc = self._stack[-1][1]
        for _, left in reversed(self._stack[:-1]):
            acc = node_hash(left, acc, self.algorithm)
        return acc


def merkle_root(leaf_hashes: Iterable[bytes], algorithm: str = SHA2_256) -> bytes:
    acc = RootAccumulator(algorithm)
    for lh in leaf_hashes:
        acc.add_leaf_hash(lh)
    return acc.root()


class MerkleTree:
    """Append-only tree over leaf hashes with cached perfect subtrees."""

    def __init__(self, leaf_hashes: Iterable[bytes] = (), algorithm: str = SHA2_256):
        self.algorithm = algorithm
        self.leaves: list[bytes] = list(leaf_hashes)
        self._cache: dict[tuple[int, int], bytes] = {}

    def __len__(self) -> int:
        return len(self.leaves)

    def append(self, lh: bytes) -> None:
        self.leaves.append(lh)

    def subtree(self, lo: int, hi: int) -> bytes:
        n = hi - lo
        if n == 0:
            return empty_root(self.algorithm)
        if n == 1:
            return self.leaves[lo]
        perfect = n & (n - 1) == 0 and lo % n == 0
        if perfect and (lo, n) in self._cache:
            return self._cache[(lo, n)]
        k = split_point(n)
        value = node_hash(self.subtree(lo, lo + k), self.subtree(lo + k, hi), self.algorithm)
        if perfect:
            self._cache[(lo, n)] = value
        return value

    def root(self, size: int | None = None) -> bytes:
        size = len(self.leaves) if size is None else size
        return self.subtree(0, size)

    def inclusion_path(self, index: int, size: int) -> list[bytes]:
        """Audit path for leaf ``index`` in the tree of the first ``size`` leaves, bottom-up."""
        if not 0 <= index < size <= len(self.leaves):
            raise IndexError(f"leaf {index} not in tree of size {size}")
        path: list[bytes] = []
        lo, hi = 0, size
        # descend, collecting siblings top-down, then reverse
        while hi - lo > 1:
            k = split_point(hi - lo)
            if index < lo + k:
                path.append(self.subtree(lo + k, hi))
                hi = lo + k
            else:
                path.append(self.subtree(lo, lo + k))
                lo = lo + k
        path.reverse()
        return path

    def consistency_proof(self, old_size: int, new_size: int) -> list[bytes]:
        if not 0 < old_size <= new_size <= len(self.leaves):
            raise IndexError(f"invalid consistency range {old_size} -> {new_size}")
        proof: list[bytes] = []
        self._subproof(old_size, 0, new_size, True, proof)
        return proof

    def _subproof(self, m: int, lo: int, hi: int, complete: bool, out: list[bytes]) -> None:
        n = hi - lo
        if m == n:
            if not complete:
                out.append(self.subtree(lo, hi))
            return
        k = split_point(n)
        if m <= k:
            self._subproof(m, lo, lo + k, complete, out)
            out.append(self.subtree(lo + k, hi))
        else:
            self._subproof(m - k, lo + k, hi, False, out)
            out.append(self.subtree(lo, lo + k))

    def range_proof(self, start: int, stop: int, size: int | None = None) -> list[bytes]:
        """Sibling digests needed to recompute the root from leaves ``[start, stop)``.

        Digests are ordered left to right as met by a depth-first walk.
        """
        size = len(self.leaves) if size is None else size
        if not 0 <= start < stop <= size <= len(self.leaves):
            raise IndexError(f"range [{start}, {stop}) not in tree of size {size}")
        out: list[bytes] = []

        def walk(lo: int, hi: int) -> None:
            if hi <= start or stop <= lo:
                out.append(self.subtree(lo, hi))
                return
            if start <= lo and hi <= stop:
                return
            k = split_point(hi - lo)
            walk(lo, lo + k)
            walk(lo + k, hi)

        walk(0, size)
        return out


def root_from_inclusion(
    lh: bytes, index: int, size: int, path: Sequence[bytes], algorithm: str = SHA2_256
) -> bytes | None:
    """Fold an audit path; ``None`` when the path cannot belong to such a tree."""
    if not 0 <= index < size:
        return None
    fn, sn, r = index, size - 1, lh
    for p in path:
        if sn == 0:
            return None
        if fn & 1 or fn == sn:
            r = node_hash(p, r, algorithm)
            if not fn & 1:
                while not fn & 1 and fn != 0:
                    fn >>= 1
                    sn >>= 1
        else:
            r = node_hash(r, p, algorithm)
        fn >>= 1
        sn >>= 1
    if sn != 0:
        return None
    return r


def verify_inclusion(
    lh: bytes, index: int, size: int, path: Sequence[bytes], root: bytes, algorithm: str = SHA2_256
) -> bool:
    return root_from_inclusion(lh, index, size, path, algorithm) == root


def verify_consistency(
    old_size: int,
    new_size: int,
    old_root: bytes,
    new_root: bytes,
    proof: Sequence[bytes],
    algorithm: str = SHA2_256,
) -> bool:
    if old_size <= 0 or old_size > new_size:
        return False
    if old_size == new_size:
        return not proof and old_root == new_root
    if not proof:
        return False
    path = list(proof)
    if old_size & (old_size - 1) == 0:
        path.insert(0, old_root)
    fn, sn = old_size - 1, new_size - 1
    while fn & 1:
        fn >>= 1
        sn >>= 1
    fr = sr = path[0]
    for c in path[1:]:
        if sn == 0:
            return False
        if fn & 1 or fn == sn:
            fr = node_hash(c, fr, algorithm)
            sr = node_hash(c, sr, algorithm)
            if not fn & 1:
                while not fn & 1 and fn != 0:
                    fn >>= 1
                    sn >>= 1
        else:
            sr = node_hash(sr, c, algorithm)
        fn >>= 1
        sn >>= 1
    return sn == 0 and fr == old_root and sr == new_root


def root_from_range(
    size: int,
    start: int,
    stop: int,
    range_leaf_hashes: Sequence[bytes],
    proof: Sequence[bytes],
    algorithm: str = SHA2_256,
) -> bytes:
    """Inverse of :meth:`MerkleTree.range_proof`; raises :class:`MalformedProof`."""
    if len(range_leaf_hashes) != stop - start:
        raise MalformedProof("leaf count does not match range")
    siblings = iter(proof)

    def walk(lo: int, hi: int) -> bytes:
        if hi <= start or stop <= lo:
            try:
                return next(siblings)
            except StopIteration:
                raise MalformedProof("proof too short") from None
        if hi - lo == 1:
            return range_leaf_hashes[lo - start]
        k = split_point(hi - lo)
        return node_hash(walk(lo, lo + k), walk(lo + k, hi), algorithm)

    root = walk(0, size)
    if next(siblings, None) is not None:
        raise MalformedProof("proof too long")
    return root
