"""Grid graph, neighbourhood structure and case-file I/O.

Nodes are 0-based internally. Case files use 1-based node ids; conversion
happens only in :func:`load_case` and :func:`write_case`.

A case is a directory holding two CSV files::

    edges.csv   from,to,susceptance
    nodes.csv   node,inertia,damping
"""

from __future__ import annotations

import csv
import math
import os
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CaseError

EDGE_HEADER = ("from", "to", "susceptance")
NODE_HEADER = ("node", "inertia", "damping")

GRAPH_KINDS = ("path", "cycle", "star", "random_loopy")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GridGraph:
    """Undirected grid graph with line susceptances and nodal swing parameters.

    ``edges`` holds normalised pairs ``(i, j)`` with ``i < j``; ``susceptance``
    is aligned with it. ``inertia`` and ``damping`` are indexed by node.
    """

    node_count: int
    edges: tuple
    susceptance: np.ndarray
    inertia: np.ndarray
    damping: np.ndarray
    total_susceptance: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = int(self.node_count)
        if n < 1:
            raise CaseError(f"node_count must be positive, got {self.node_count}")
        edges = tuple((min(int(i), int(j)), max(int(i), int(j))) for i, j in self.edges)
        b = _frozen(self.susceptance)
        m = _frozen(self.inertia)
        d = _frozen(self.damping)
        if b.shape != (len(edges),):
            raise CaseError("susceptance must have one entry per edge")
        if m.shape != (n,) or d.shape != (n,):
            raise CaseError("inertia and damping must have one entry per node")
        seen = set()
        for k, (i, j) in enumerate(edges):
            if i == j:
                raise CaseError(f"edge {k}: self-loop at node {i + 1}")
            if i < 0 or j >= n:
                raise CaseError(f"edge {k}: node id out of range ({i + 1}, {j + 1})")
            if (i, j) in seen:
                raise CaseError(f"edge {k}: duplicate edge ({i + 1}, {j + 1})")
            seen.add((i, j))
            if not (math.isfinite(b[k]) and b[k] > 0):
                raise CaseError(f"edge {k}: susceptance must be positive, got {b[k]}")
        for j in range(n):
            if not (math.isfinite(m[j]) and m[j] > 0):
                raise CaseError(f"node {j + 1}: inertia must be positive, got {m[j]}")
            if not (math.isfinite(d[j]) and d[j] > 0):
                raise CaseError(f"node {j + 1}: damping must be positive, got {d[j]}")
        if not _connected(n, edges):
            raise CaseError("graph is not connected")
        totals = np.zeros(n)
        for (i, j), bij in zip(edges, b):
            totals[i] += bij
            totals[j] += bij
        object.__setattr__(self, "node_count", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "susceptance", b)
        object.__setattr__(self, "inertia", m)
        object.__setattr__(self, "damping", d)
        object.__setattr__(self, "total_susceptance", _frozen(totals))

    def __eq__(self, other):
        if not isinstance(other, GridGraph):
            return NotImplemented
        return (
            self.node_count == other.node_count
            and self.edges == other.edges
            and np.array_equal(self.susceptance, other.susceptance)
            and np.array_equal(self.inertia, other.inertia)
            and np.array_equal(self.damping, other.damping)
        )

    __hash__ = None

    @property
    def edge_set(self):
        return frozenset(self.edges)

    def has_edge(self, i, j):
        return (min(i, j), max(i, j)) in self.edge_set

    def weight_matrix(self):
        """Symmetric N x N matrix of susceptances (zero off the edge set)."""
        w = np.zeros((self.node_count, self.node_count))
        for (i, j), bij in zip(self.edges, self.susceptance):
            w[i, j] = w[j, i] = bij
        return w

    def laplacian(self):
        w = self.weight_matrix()
        return np.diag(w.sum(axis=1)) - w

    def recomputed_total_susceptance(self):
        return self.weight_matrix().sum(axis=1)

    def relabel(self, perm):
        """Return the graph with node ``k`` renamed to ``perm[k]``."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        return GridGraph(
            self.node_count,
            tuple((int(perm[i]), int(perm[j])) for i, j in self.edges),
            self.susceptance,
            self.inertia[inv],
            self.damping[inv],
        )


def _connected(n, edges):
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == n


@dataclass(frozen=True)
class NeighborSets:
    """Per-node neighbours and two-hop neighbours (node itself excluded)."""

    neighbors: tuple
    two_hop: tuple

    def strict_two_hop(self, j):
        return self.two_hop[j] - self.neighbors[j]

    def moral(self, j):
        return self.neighbors[j] | self.two_hop[j]

    def strict_two_hop_pairs(self):
        return {
            (i, j)
            for j in range(len(self.neighbors))
            for i in self.strict_two_hop(j)
            if i < j
        }


def neighbor_sets(g: GridGraph) -> NeighborSets:
    adj = [set() for _ in range(g.node_count)]
    for i, j in g.edges:
        adj[i].add(j)
        adj[j].add(i)
    two = []
    for j in range(g.node_count):
        reach = set()
        for k in adj[j]:
            reach |= adj[k]
        reach.discard(j)
        two.append(frozenset(reach))
    return NeighborSets(tuple(frozenset(a) for a in adj), tuple(two))


# -- case files ---------------------------------------------------------------


def _read_rows(path, header):
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CaseError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise CaseError(f"{path.name}: empty file") from None
        if tuple(c.strip() for c in first) != header:
            raise CaseError(f"{path.name}: expected header {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CaseError(f"{path.name} row {lineno}: expected {len(header)} fields")
            rows.append((lineno, [c.strip() for c in row]))
    return rows


def _parse(path, lineno, value, kind):
    try:
        if kind is int:
            return int(value)
        v = float(value)
    except ValueError:
        raise CaseError(f"{Path(path).name} row {lineno}: cannot parse {value!r}") from None
    if not math.isfinite(v):
        raise CaseError(f"{Path(path).name} row {lineno}: non-finite value {value!r}")
    return v


def load_case(edge_file, node_file=None) -> GridGraph:
    """Load and validate a case.

    Accepts either a case directory or explicit ``edges.csv``/``nodes.csv``
    paths. Validation failures name the offending file and row.
    """
    if node_file is None:
        case_dir = Path(edge_file)
        edge_file, node_file = case_dir / "edges.csv", case_dir / "nodes.csv"
    node_rows = _read_rows(node_file, NODE_HEADER)
    nodes = {}
    for lineno, (nid, m, d) in node_rows:
        nid = _parse(node_file, lineno, nid, int)
        m = _parse(node_file, lineno, m, float)
        d = _parse(node_file, lineno, d, float)
        if nid in nodes:
            raise CaseError(f"{Path(node_file).name} row {lineno}: duplicate node {nid}")
        if m <= 0:
            raise CaseError(f"{Path(node_file).name} row {lineno}: inertia must be positive")
        if d <= 0:
            raise CaseError(f"{Path(node_file).name} row {lineno}: damping must be positive")
        nodes[nid] = (m, d)
    n = len(nodes)
    if n == 0 or sorted(nodes) != list(range(1, n + 1)):
        raise CaseError(f"{Path(node_file).name}: node ids must be contiguous 1..N")

    edges, b = [], []
    seen = {}
    for lineno, (a, c, s) in _read_rows(edge_file, EDGE_HEADER):
        i = _parse(edge_file, lineno, a, int)
        j = _parse(edge_file, lineno, c, int)
        s = _parse(edge_file, lineno, s, float)
        name = Path(edge_file).name
        if i == j:
            raise CaseError(f"{name} row {lineno}: self-loop at node {i}")
        if not (1 <= i <= n and 1 <= j <= n):
            raise CaseError(f"{name} row {lineno}: unknown node in ({i}, {j})")
        if s <= 0:
            raise CaseError(f"{name} row {lineno}: susceptance must be positive")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise CaseError(f"{name} row {lineno}: duplicate of edge on row {seen[key]}")
        seen[key] = lineno
        edges.append((i - 1, j - 1))
        b.append(s)

    inertia = [nodes[k][0] for k in range(1, n + 1)]
    damping = [nodes[k][1] for k in range(1, n + 1)]
    try:
        return GridGraph(n, tuple(edges), np.array(b), np.array(inertia), np.array(damping))
    except CaseError as exc:
        raise CaseError(f"{Path(edge_file).name}: {exc}") from None


def write_case(g: GridGraph, out_dir):
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    with open(out_dir / "edges.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EDGE_HEADER)
        for (i, j), b in zip(g.edges, g.susceptance):
            w.writerow((i + 1, j + 1, repr(float(b))))
    with open(out_dir / "nodes.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NODE_HEADER)
        for k in range(g.node_count):
            w.writerow((k + 1, repr(float(g.inertia[k])), repr(float(g.damping[k]))))
    return out_dir


def bundled_case(name):
    """Path of a case directory shipped with the package (e.g. ``"ieee39"``)."""
    path = Path(__file__).parent / "cases" / name
    if not path.is_dir():
        raise CaseError(f"no bundled case named {name!r}")
    return path


# -- synthetic graphs ---------------------------------------------------------


def _check_range(name, r):
    lo, hi = float(r[0]), float(r[1])
    if not (0 < lo <= hi) or not math.isfinite(hi):
        raise ValueError(f"{name} must be a positive interval lo <= hi, got {r}")
    return lo, hi


def generate_graph(kind, n, seed=0, b_range=(1.0, 1.0), m_range=(1.0, 1.0), d_range=(1.0, 1.0)):
    """Build a synthetic grid graph.

    ``path``, ``cycle`` and ``star`` have fixed shapes (node 0 is the star's
    hub); ``random_loopy`` is a random spanning tree plus ``1 + n // 4``
    chords, so it always has at least ``n`` edges and one cycle. Parameters
    are drawn uniformly from the given ranges.
    """
    if kind not in GRAPH_KINDS:
        raise ValueError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")
    n = int(n)
    min_n = {"path": 2, "star": 2, "cycle": 3, "random_loopy": 4}[kind]
    if n < min_n:
        raise ValueError(f"{kind} graph needs n >= {min_n}, got {n}")
    b_range = _check_range("b_range", b_range)
    m_range = _check_range("m_range", m_range)
    d_range = _check_range("d_range", d_range)
    rng = np.random.default_rng(seed)

    if kind == "path":
        edges = [(k, k + 1) for k in range(n - 1)]
    elif kind == "cycle":
        edges = [(k, k + 1) for k in range(n - 1)] + [(0, n - 1)]
    elif kind == "star":
        edges = [(0, k) for k in range(1, n)]
    else:
        order = rng.permutation(n)
        edges = set()
        for k in range(1, n):
            parent = order[rng.integers(0, k)]
            edges.add(tuple(sorted((int(order[k]), int(parent)))))
        candidates = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in edges]
        extra = 1 + n // 4
        picks = rng.choice(len(candidates), size=min(extra, len(candidates)), replace=False)
        edges |= {candidates[p] for p in picks}
        edges = sorted(edges)

    b = rng.uniform(*b_range, size=len(edges))
    m = rng.uniform(*m_range, size=n)
    d = rng.uniform(*d_range, size=n)
    return GridGraph(n, tuple(edges), b, m, d)
