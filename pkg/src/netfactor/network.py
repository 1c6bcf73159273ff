"""Weighted-graph networks whose leaves are the clients.

Edges are undirected; each carries a dimension (the qudit or symbol size of
the channel) and a label used as the axis name of node tensors.
"""
from __future__ import annotations

import json
import warnings
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "Node",
    "Edge",
    "Network",
    "ValidationReport",
    "NetworkError",
    "validate",
    "canonical_instance",
    "INSTANCE_NAMES",
    "bottleneck_edges",
    "disjoint_union",
    "load_network",
    "dump_network",
    "network_from_dict",
    "network_to_dict",
]


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    id: str
    client: bool = False


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    dim: int
    label: str

    def other(self, v: str) -> str:
        if v == self.a:
            return self.b
        if v == self.b:
            return self.a
        raise NetworkError(f"{v} is not an endpoint of edge {self.label}")


@dataclass(frozen=True)
class Network:
    nodes: tuple
    edges: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))

    @property
    def clients(self) -> list[str]:
        return [n.id for n in self.nodes if n.client]

    @property
    def internal(self) -> list[str]:
        return [n.id for n in self.nodes if not n.client]

    def node(self, v: str) -> Node:
        for n in self.nodes:
            if n.id == v:
                return n
        raise NetworkError(f"unknown node {v!r}")

    def is_client(self, v: str) -> bool:
        return self.node(v).client

    def incident(self, v: str) -> list[Edge]:
        return [e for e in self.edges if v in (e.a, e.b)]

    def edge(self, label: str) -> Edge:
        for e in self.edges:
            if e.label == label:
                return e
        raise NetworkError(f"unknown edge {label!r}")

    def edges_between(self, u: str, v: str) -> list[Edge]:
        return [e for e in self.edges if {e.a, e.b} == {u, v}]

    def client_edge(self, c: str) -> Edge:
        inc = self.incident(c)
        if len(inc) != 1:
            raise NetworkError(f"client {c!r} has degree {len(inc)}")
        return inc[0]

    def client_dims(self) -> dict[str, int]:
        return {c: self.client_edge(c).dim for c in self.clients}

    def degree(self, v: str) -> int:
        return len(self.incident(v))

    def components(self, skip: frozenset = frozenset()) -> list[set]:
        """Connected components, ignoring edges whose labels are in `skip`."""
        adj: dict = {n.id: [] for n in self.nodes}
        for e in self.edges:
            if e.label in skip or e.a not in adj or e.b not in adj:
                continue
            adj[e.a].append(e.b)
            adj[e.b].append(e.a)
        seen: set = set()
        comps = []
        for n in self.nodes:
            if n.id in seen:
                continue
            comp = {n.id}
            queue = deque([n.id])
            while queue:
                u = queue.popleft()
                for w in adj[u]:
                    if w not in comp:
                        comp.add(w)
                        queue.append(w)
            seen |= comp
            comps.append(comp)
        return comps


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok and not self.warnings:
            return "ok"
        lines = [f"violation: {v}" for v in self.violations]
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines)


def validate(network: Network) -> ValidationReport:
    """Check the structural invariants; problems come back as data."""
    rep = ValidationReport()
    ids = [n.id for n in network.nodes]
    if len(set(ids)) != len(ids):
        rep.violations.append("duplicate node ids")
    known = set(ids)
    labels = [e.label for e in network.edges]
    if len(set(labels)) != len(labels):
        dup = sorted({l for l in labels if labels.count(l) > 1})
        rep.violations.append(f"duplicate edge labels {dup}")
    for e in network.edges:
        if e.a not in known or e.b not in known:
            rep.violations.append(f"edge {e.label} has an unknown endpoint")
        if e.a == e.b:
            rep.violations.append(f"edge {e.label} is a self-loop")
        if not isinstance(e.dim, int) or e.dim < 2:
            rep.violations.append(f"edge {e.label} has dimension {e.dim} < 2")
    for n in network.nodes:
        deg = sum(1 for e in network.edges if n.id in (e.a, e.b))
        if n.client and deg != 1:
            rep.violations.append(f"client not a leaf: {n.id} has degree {deg}")
        if not n.client and deg == 1:
            rep.violations.append(f"leaf {n.id} is not flagged as a client")
    if not any(n.client for n in network.nodes):
        rep.violations.append("network has no client")
    if not rep.violations and len(network.components()) > 1:
        rep.warnings.append("network is disconnected")
    return rep


INSTANCE_NAMES = ("single-edge", "butterfly", "square", "ternary-square", "star")


def _build(name, internal, clients, edges) -> Network:
    nodes = [Node(v, False) for v in internal] + [Node(c, True) for c in clients]
    return Network(nodes, [Edge(a, b, d, f"{a}-{b}") for a, b, d in edges], name)


def canonical_instance(which: str, **params) -> Network:
    """Build one of the named topologies.

    ``single-edge`` takes ``d`` and an optional ``client_dim`` (an int, or a
    pair for unequal clients); with it each client hangs off its own relay
    node, so tasks with client alphabets other than ``d`` can be pushed
    through the dim-``d`` edge.
    """
    if which == "single-edge":
        d = int(params.get("d", 2))
        _check(d >= 2, "d must be >= 2")
        k = params.get("client_dim")
        if k is None:
            return _build(f"single-edge({d})", [], ["u", "v"], [("u", "v", d)])
        ku, kv = (int(k), int(k)) if isinstance(k, int) or not hasattr(k, "__len__") else map(int, k)
        _check(ku >= 2 and kv >= 2, "client_dim must be >= 2")
        tag = f"{ku}" if ku == kv else f"{ku},{kv}"
        return _build(f"single-edge({d};{tag})", ["U", "V"], ["u", "v"],
                      [("u", "U", ku), ("U", "V", d), ("V", "v", kv)])
    if which == "butterfly":
        pairs = [("S1", "A1"), ("S2", "A2"), ("A1", "B"), ("A2", "B"), ("B", "C"),
                 ("C", "D1"), ("C", "D2"), ("A1", "D2"), ("A2", "D1"), ("D1", "T1"), ("D2", "T2")]
        return _build("butterfly", ["A1", "A2", "B", "C", "D1", "D2"],
                      ["S1", "S2", "T1", "T2"], [(a, b, 2) for a, b in pairs])
    if which == "square":
        di = int(params.get("d_internal", params.get("d", 2)))
        dc = int(params.get("d_client", 2))
        _check(di >= 2 and dc >= 2, "square dims must be >= 2")
        ring = [("A", "B"), ("B", "C"), ("C", "D"), ("D", "A")]
        legs = [(v, v.lower()) for v in "ABCD"]
        return _build(f"square({di},{dc})", list("ABCD"), list("abcd"),
                      [(a, b, di) for a, b in ring] + [(a, b, dc) for a, b in legs])
    if which == "ternary-square":
        inner = [("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")]
        legs = [(v, v.lower()) for v in "ABCD"]
        return _build("ternary-square", list("ABCD"), list("abcd"),
                      [(a, b, 3) for a, b in inner] + [(a, b, 2) for a, b in legs])
    if which == "star":
        n = int(params.get("n", 3))
        d = int(params.get("d", 2))
        _check(n >= 2 and d >= 2, "star needs n >= 2 and d >= 2")
        leaves = [f"c{i}" for i in range(n)]
        return _build(f"star({n},{d})", ["O"], leaves, [("O", c, d) for c in leaves])
    raise NetworkError(f"unknown instance {which!r}; choose from {INSTANCE_NAMES}")


def _check(cond: bool, msg: str):
    if not cond:
        raise NetworkError(msg)


def bottleneck_edges(network: Network, sources, sinks, ignore=()) -> list[str]:
    """Edges whose removal leaves no source connected to any sink.

    Edges listed in `ignore` are removed up front, e.g. the side links of the
    butterfly, so only paths through the center are considered.
    """
    base = frozenset(ignore)
    out = []
    for e in network.edges:
        if e.label in base:
            continue
        comps = network.components(base | {e.label})
        where = {v: i for i, c in enumerate(comps) for v in c}
        if not {where[s] for s in sources} & {where[t] for t in sinks}:
            out.append(e.label)
    return out


def disjoint_union(first: Network, second: Network, prefixes=("L.", "R.")) -> Network:
    """Side-by-side copy of two networks; ids and labels get `prefixes` when they would collide."""
    pa, pb = prefixes
    ids_a = {n.id for n in first.nodes} | {e.label for e in first.edges}
    ids_b = {n.id for n in second.nodes} | {e.label for e in second.edges}
    if not ids_a & ids_b:
        pa = pb = ""

    def copy(net, p):
        return ([Node(p + n.id, n.client) for n in net.nodes],
                [Edge(p + e.a, p + e.b, e.dim, p + e.label) for e in net.edges])

    na, ea = copy(first, pa)
    nb, eb = copy(second, pb)
    return Network(na + nb, ea + eb, f"{first.name}+{second.name}")


def network_to_dict(network: Network) -> dict:
    return {
        "nodes": [{"id": n.id, "client": n.client} for n in network.nodes],
        "edges": [{"a": e.a, "b": e.b, "dim": e.dim, "label": e.label} for e in network.edges],
    }


def network_from_dict(doc: dict) -> Network:
    try:
        nodes = [Node(str(n["id"]), bool(n.get("client", False))) for n in doc["nodes"]]
        edges = [Edge(str(e["a"]), str(e["b"]), int(e["dim"]), str(e.get("label") or f"{e['a']}-{e['b']}"))
                 for e in doc["edges"]]
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed network document: {exc}") from exc
    return Network(nodes, edges, doc.get("name", ""))


def load_network(path, check: bool = True) -> Network:
    net = network_from_dict(json.loads(Path(path).read_text()))
    if check:
        rep = validate(net)
        if not rep.ok:
            raise NetworkError("; ".join(rep.violations))
        for w in rep.warnings:
            warnings.warn(w)
    return net


def dump_network(network: Network, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(network), indent=2) + "\n")
