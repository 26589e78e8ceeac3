"""Binary tries over bit streams: explicit builder and a batched path-length kernel.

A trie over n distinct strings stores each string at its minimal
distinguishing prefix.  Internal nodes may carry a single child (no path
compression), so a leaf's depth equals the number of symbols read before the
string separates from all others.  The external path length (EPL) is the sum
of the leaf depths and satisfies, for n >= 2,

    epl = n + epl(left subtrie) + epl(right subtrie),

because every string consumes one symbol at the root.  The batched kernel
below exploits exactly this identity: it never materialises nodes, it only
tracks which strings still share a group with somebody else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from trielab.markov_source import BitStream, MarkovChain, stream_seeds, uniforms_at


class DepthExceeded(RuntimeError):
    """A group of streams stayed unseparated past the depth cap.

    `indices` are the stream indices still clashing, `depth` the cap that was
    hit, `replicate` the Monte Carlo replicate (None for a direct build).
    """

    def __init__(self, indices, depth: int, replicate: int | None = None):
        self.indices = tuple(int(i) for i in indices)
        self.depth = int(depth)
        self.replicate = replicate
        where = f" in replicate {replicate}" if replicate is not None else ""
        super().__init__(
            f"streams {self.indices}{where} share a prefix of length {self.depth}; "
            "raise max_depth or check the source for duplicate streams"
        )


def default_max_depth(n: int) -> int:
    """Depth cap 128 * ceil(log2(n + 2)); generous against prefix collisions."""
    return 128 * (n + 1).bit_length()


class _Node:
    __slots__ = ("left", "right", "leaf")

    def __init__(self):
        self.left: _Node | None = None
        self.right: _Node | None = None
        self.leaf: int | None = None


@dataclass(frozen=True)
class TrieStats:
    """Internal node count, height, EPL and leaf-depth histogram of one trie."""

    epl: int
    size: int
    height: int
    depth_histogram: np.ndarray  # depth_histogram[d] = #leaves at depth d


class Trie:
    """Explicit trie over `n` streams; kept for inspection and cross-checks."""

    def __init__(self, root: _Node | None, n: int, leaf_depths: np.ndarray):
        self.root = root
        self.n = n
        self.leaf_depths = leaf_depths  # leaf_depths[j] = depth of stream j

    @property
    def epl(self) -> int:
        return int(self.leaf_depths.sum())

    def stats(self) -> TrieStats:
        size = 0
        height = 0
        stack = [self.root] if self.root is not None else []
        while stack:
            node = stack.pop()
            if node.leaf is None:
                size += 1
            if node.left is not None:
                stack.append(node.left)
            if node.right is not None:
                stack.append(node.right)
        if self.n:
            height = int(self.leaf_depths.max())
            hist = np.bincount(self.leaf_depths, minlength=height + 1)
        else:
            hist = np.zeros(0, dtype=np.int64)
        return TrieStats(self.epl, size, height, hist)


def build_trie(streams: list[BitStream], max_depth: int | None = None) -> Trie:
    """Build the trie over `streams`; n <= 1 gives a single leaf at depth 0.

    Iterative (explicit stack), so the depth cap is not limited by the Python
    recursion limit.  Raises DepthExceeded when a group of >= 2 streams still
    agrees at `max_depth`.
    """
    n = len(streams)
    if max_depth is None:
        max_depth = default_max_depth(n)
    leaf_depths = np.zeros(n, dtype=np.int64)
    if n == 0:
        return Trie(None, 0, leaf_depths)
    root = _Node()
    stack: list[tuple[_Node, list[int], int]] = [(root, list(range(n)), 0)]
    while stack:
        node, group, depth = stack.pop()
        if len(group) == 1:
            node.leaf = group[0]
            leaf_depths[group[0]] = depth
            continue
        if depth >= max_depth:
            raise DepthExceeded(group, depth)
        zeros = [j for j in group if streams[j].bit(depth) == 0]
        ones = [j for j in group if streams[j].bit(depth) == 1]
        if zeros:
            node.left = _Node()
            stack.append((node.left, zeros, depth + 1))
        if ones:
            node.right = _Node()
            stack.append((node.right, ones, depth + 1))
    return Trie(root, n, leaf_depths)


def external_path_length(trie: Trie) -> int:
    """Sum of all leaf depths."""
    return trie.epl


def min_external_path_length(n: int) -> int:
    """EPL of the most balanced binary tree with n leaves; a hard lower bound.

    With h = ceil(log2 n), the optimum places 2(n - 2^(h-1)) leaves at depth h
    and the rest at depth h - 1.
    """
    if n <= 1:
        return 0
    h = (n - 1).bit_length()
    deep = 2 * (n - (1 << (h - 1)))
    return h * deep + (h - 1) * (n - deep)


def batch_external_path_lengths(
    chain: MarkovChain,
    sizes: np.ndarray,
    rep_seeds: np.ndarray,
    forced_initial: int | None = None,
    max_depth: int | None = None,
    chunk_elements: int = 4_000_000,
) -> np.ndarray:
    """EPL of one fresh trie per replicate, fully vectorized across replicates.

    Replicate r holds `sizes[r]` streams seeded from `rep_seeds[r]`; stream j
    of that replicate reproduces exactly what BitStream(chain, rep_seeds[r], j)
    would emit, so this kernel and `build_trie` are interchangeable routes to
    the same numbers.  Memory is bounded by processing at most
    `chunk_elements` strings at a time.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    rep_seeds = np.asarray(rep_seeds, dtype=np.uint64)
    if sizes.shape != rep_seeds.shape:
        raise ValueError("sizes and rep_seeds must have matching shapes")
    if (sizes < 0).any():
        raise ValueError("sizes must be >= 0")
    if max_depth is None:
        max_depth = default_max_depth(int(sizes.max(initial=0)))
    total = np.zeros(len(sizes), dtype=np.int64)
    start = 0
    while start < len(sizes):
        stop = start + 1
        load = int(sizes[start])
        while stop < len(sizes) and load + int(sizes[stop]) <= chunk_elements:
            load += int(sizes[stop])
            stop += 1
        _epl_chunk(
            chain,
            sizes[start:stop],
            rep_seeds[start:stop],
            forced_initial,
            max_depth,
            total[start:stop],
            start,
        )
        start = stop
    return total


def _epl_chunk(
    chain: MarkovChain,
    sizes: np.ndarray,
    rep_seeds: np.ndarray,
    forced_initial: int | None,
    max_depth: int,
    out: np.ndarray,
    replicate_offset: int,
) -> None:
    reps = len(sizes)
    m = int(sizes.sum())
    rep = np.repeat(np.arange(reps, dtype=np.int64), sizes)
    offsets = np.concatenate(([0], np.cumsum(sizes[:-1])))
    stream_index = np.arange(m, dtype=np.int64) - np.repeat(offsets, sizes)
    sub = stream_seeds(rep_seeds[rep], stream_index)
    # one root group per replicate; singleton tries finish at depth 0
    key = rep
    group_count = reps
    counts = np.bincount(key, minlength=group_count)
    keep = counts[key] >= 2
    rep, stream_index, sub, key = rep[keep], stream_index[keep], sub[keep], key[keep]
    state: np.ndarray | None = None
    depth = 0
    while rep.size:
        if depth >= max_depth:
            bad = rep[0]
            raise DepthExceeded(
                stream_index[rep == bad], depth, replicate_offset + int(bad)
            )
        # everyone left shares a group, so everyone consumes one symbol here
        out += np.bincount(rep, minlength=reps)
        u = uniforms_at(sub, depth)
        if state is None:
            if forced_initial is not None:
                bit = np.full(rep.size, forced_initial, dtype=np.int64)
            else:
                bit = (u >= chain.mu0).astype(np.int64)
        else:
            prob0 = np.where(state == 0, chain.p00, chain.p10)
            bit = (u >= prob0).astype(np.int64)
        pair = key * 2 + bit
        counts = np.bincount(pair, minlength=2 * group_count)
        keep = counts[pair] >= 2
        alive = np.nonzero(counts >= 2)[0]
        lookup = np.empty(2 * group_count, dtype=np.int64)
        lookup[alive] = np.arange(alive.size)
        pair = pair[keep]
        key = lookup[pair]
        rep = rep[keep]
        stream_index = stream_index[keep]
        sub = sub[keep]
        state = bit[keep].astype(np.int8)
        group_count = alive.size
        depth += 1
