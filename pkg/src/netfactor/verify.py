"""Checking node-tensor assignments against tasks.

An assignment gives every non-client node a tensor with one axis per incident
edge. Contracting all of them along internal edges leaves one free axis per
client; the assignment realizes a task when that tensor is an admissible
multiple of the task tensor.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .network import Network
from .tasks import DistributionTask, TaskError, entries_to_list, tensor_from_entries
from .tensor import (DenseTensor, Domain, TensorError, contract, fit_scale, kronecker_delta,
                     plan_shared)

__all__ = [
    "NodeAssignment",
    "VerifyReport",
    "AssignmentError",
    "DEFAULT_TOL",
    "check_assignment",
    "realized_tensor",
    "verify_assignment",
    "lift_classical_assignment",
    "bundled_assignment",
    "BUNDLED_NAMES",
    "copy_tensor",
    "xor_tensor",
    "zero_assignment",
    "assignment_to_dict",
    "assignment_from_dict",
    "load_assignment",
    "dump_assignment",
]

DEFAULT_TOL = 1e-8


class AssignmentError(ValueError):
    """The assignment does not fit the network or the task."""


@dataclass(frozen=True)
class NodeAssignment:
    tensors: dict
    domain: Domain = Domain.COMPLEX

    def __post_init__(self):
        domain = Domain.parse(self.domain)
        object.__setattr__(self, "domain", domain)
        tensors = {}
        for v, t in dict(self.tensors).items():
            if domain is Domain.NONNEG and t.domain is not Domain.NONNEG:
                t = t.as_domain(Domain.NONNEG)
            tensors[v] = t
        object.__setattr__(self, "tensors", tensors)

    def __getitem__(self, v):
        return self.tensors[v]

    def negativity(self) -> list[str]:
        """Nodes holding entries outside the non-negative reals."""
        bad = []
        for v, t in self.tensors.items():
            d = t.data
            if np.any(np.abs(np.imag(d)) > 0) or np.any(np.real(d) < 0):
                bad.append(v)
        return bad


@dataclass
class VerifyReport:
    matched: bool
    scale: complex
    residual: float
    domain_violations: list = field(default_factory=list)

    def summary(self) -> str:
        lines = [f"matched: {'yes' if self.matched else 'no'}",
                 f"scale: {self.scale.real:.12g}{self.scale.imag:+.12g}j",
                 f"residual: {self.residual:.6e}"]
        if self.domain_violations:
            lines.append("domain violations: " + ", ".join(self.domain_violations))
        return "\n".join(lines)


def check_assignment(network: Network, assignment: NodeAssignment) -> None:
    internal = set(network.internal)
    given = set(assignment.tensors)
    if given - internal:
        raise AssignmentError(f"tensors given for non-internal nodes {sorted(given - internal)}")
    if internal - given:
        raise AssignmentError(f"missing tensors for nodes {sorted(internal - given)}")
    for v in network.internal:
        t = assignment.tensors[v]
        want = {e.label: e.dim for e in network.incident(v)}
        if set(t.labels) != set(want):
            raise AssignmentError(f"node {v}: axes {sorted(t.labels)} but incident edges {sorted(want)}")
        for l, d in t.dims.items():
            if want[l] != d:
                raise AssignmentError(f"node {v}: axis {l} has dim {d}, edge has dim {want[l]}")


def realized_tensor(network: Network, assignment: NodeAssignment, order=None) -> DenseTensor:
    """Contract the assignment; the result has one axis per client, labeled by client id."""
    check_assignment(network, assignment)
    order = list(order) if order is not None else network.clients
    if sorted(order) != sorted(network.clients):
        raise AssignmentError(f"client order {order} does not match network clients {network.clients}")
    parts = []
    for v in network.internal:
        rename = {}
        for e in network.incident(v):
            w = e.other(v)
            if network.is_client(w):
                rename[e.label] = w
        parts.append(assignment.tensors[v].relabel(rename))
    for e in network.edges:
        if network.is_client(e.a) and network.is_client(e.b):
            parts.append(kronecker_delta((e.a, e.b), e.dim))
    return contract(plan_shared(parts, free=order))


def verify_assignment(network: Network, task: DistributionTask, assignment: NodeAssignment,
                      tol: float = DEFAULT_TOL) -> VerifyReport:
    """Contract the assignment and compare with the task up to scale in the task's domain."""
    if sorted(task.client_ids) != sorted(network.clients):
        raise AssignmentError(f"task clients {task.client_ids} differ from network clients {network.clients}")
    cdims = network.client_dims()
    for c, d in task.clients:
        if cdims[c] != d:
            raise AssignmentError(f"client {c}: task dim {d}, network edge dim {cdims[c]}")
    # a complex-typed assignment may still be classical if its entries happen to be
    violations = assignment.negativity() if task.domain is Domain.NONNEG else []
    realized = realized_tensor(network, assignment, task.client_ids)
    m = fit_scale(realized, task.tensor, task.domain, tol)
    return VerifyReport(m.matched and not violations, m.scale, m.residual, violations)


def lift_classical_assignment(assignment: NodeAssignment) -> NodeAssignment:
    """Re-read a non-negative assignment as a complex one, entry for entry."""
    if assignment.domain is not Domain.NONNEG:
        raise AssignmentError("only non-negative assignments are lifted")
    return NodeAssignment({v: t.as_domain(Domain.COMPLEX) for v, t in assignment.tensors.items()},
                          Domain.COMPLEX)


def copy_tensor(labels, dim: int = 2, domain=Domain.NONNEG) -> DenseTensor:
    """1 iff every incident index is equal."""
    return kronecker_delta(labels, dim, domain)


def xor_tensor(labels, dim: int = 2, domain=Domain.NONNEG) -> DenseTensor:
    """1 iff the incident indices sum to 0 mod `dim`."""
    n = len(labels)
    idx = np.indices((dim,) * n).sum(axis=0)
    return DenseTensor(tuple(labels), (idx % dim == 0).astype(float), domain)


def _node_labels(network: Network, v: str, order) -> tuple:
    """Labels of v's edges, listed by the neighbor names in `order`."""
    out = []
    for w in order:
        es = network.edges_between(v, w)
        if len(es) != 1:
            raise AssignmentError(f"expected one edge between {v} and {w}")
        out.append(es[0].label)
    return tuple(out)


def _support_tensor(labels, dims, support: dict, domain) -> DenseTensor:
    data = np.zeros(dims, dtype=complex)
    for idx, amp in support.items():
        data[idx] = amp
    return DenseTensor(labels, data, domain)


BUNDLED_NAMES = ("butterfly-xor", "star-ghz", "ternary-square-cross")


def bundled_assignment(name: str, *, n: int = 3, d: int = 2, x: int = 0) -> NodeAssignment:
    """Hard-coded assignments for the canonical instances.

    ``star-ghz`` uses `n` and `d`; ``ternary-square-cross`` uses the
    measurement outcome bit `x` of the last node.
    """
    from .network import canonical_instance

    if name == "butterfly-xor":
        net = canonical_instance("butterfly")
        tensors = {}
        for v in ("A1", "A2", "C"):
            tensors[v] = copy_tensor([e.label for e in net.incident(v)])
        for v in ("B", "D1", "D2"):
            tensors[v] = xor_tensor([e.label for e in net.incident(v)])
        return NodeAssignment(tensors, Domain.NONNEG)
    if name == "star-ghz":
        net = canonical_instance("star", n=n, d=d)
        return NodeAssignment({"O": copy_tensor([e.label for e in net.incident("O")], d)}, Domain.NONNEG)
    if name == "ternary-square-cross":
        net = canonical_instance("ternary-square")
        sign = (-1) ** int(x)
        # axis order per node: client leg, then the two internal neighbors
        a = _support_tensor(_node_labels(net, "A", "aBC"), (2, 3, 3),
                            {(0, 0, 2): 1, (0, 2, 0): 1, (1, 1, 2): 1, (1, 2, 1): 1}, Domain.COMPLEX)
        b = _support_tensor(_node_labels(net, "B", "bAD"), (2, 3, 3),
                            {(0, 0, 0): 1, (0, 1, 1): 1, (1, 2, 2): 1}, Domain.COMPLEX)
        c = _support_tensor(_node_labels(net, "C", "cAD"), (2, 3, 3),
                            {(1, 0, 0): 1, (1, 1, 1): 1, (0, 2, 2): 1}, Domain.COMPLEX)
        dd = _support_tensor(_node_labels(net, "D", "dBC"), (2, 3, 3),
                             {(0, 0, 2): 1, (1, 1, 2): 1, (0, 2, 0): sign, (1, 2, 1): sign}, Domain.COMPLEX)
        return NodeAssignment({"A": a, "B": b, "C": c, "D": dd}, Domain.COMPLEX)
    raise AssignmentError(f"unknown bundled assignment {name!r}; choose from {BUNDLED_NAMES}")


def zero_assignment(network: Network, domain=Domain.NONNEG) -> NodeAssignment:
    tensors = {}
    for v in network.internal:
        inc = network.incident(v)
        tensors[v] = DenseTensor.zeros([e.label for e in inc], [e.dim for e in inc], domain)
    return NodeAssignment(tensors, domain)


def assignment_to_dict(assignment: NodeAssignment) -> dict:
    return {
        "domain": assignment.domain.value,
        "nodes": {
            v: {"axes": list(t.labels), "dims": list(t.shape), "entries": entries_to_list(t)}
            for v, t in assignment.tensors.items()
        },
    }


def assignment_from_dict(doc: dict, network: Network | None = None) -> NodeAssignment:
    """Parse an assignment document; axis dims default to the network's edge dims."""
    try:
        domain = Domain.parse(doc.get("domain", "complex"))
        tensors = {}
        for v, node_doc in doc["nodes"].items():
            axes = [str(a) for a in node_doc["axes"]]
            if "dims" in node_doc:
                dims = [int(d) for d in node_doc["dims"]]
            elif network is not None:
                dims = [network.edge(a).dim for a in axes]
            else:
                raise AssignmentError(f"node {v}: dims missing and no network given")
            tensors[str(v)] = tensor_from_entries(axes, dims, node_doc.get("entries", []), domain)
    except (KeyError, TypeError, TensorError, TaskError) as exc:
        raise AssignmentError(f"malformed assignment document: {exc}") from exc
    return NodeAssignment(tensors, domain)


def load_assignment(path, network: Network | None = None) -> NodeAssignment:
    return assignment_from_dict(json.loads(Path(path).read_text()), network)


def dump_assignment(assignment: NodeAssignment, path) -> None:
    Path(path).write_text(json.dumps(assignment_to_dict(assignment), indent=2) + "\n")
