"""State-vector simulation of SLOCC protocols on a network.

States are kept unnormalized; branch probabilities are tracked as ratios of
squared norms, so only fidelity reports normalize. Sending a subsystem over
an edge is modeled as teleportation: the edge's EPR pair is consumed and the
subsystem changes hands, with no gate-level simulation.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .network import Network, canonical_instance
from .tasks import DistributionTask
from .tensor import DenseTensor
from .verify import NodeAssignment, check_assignment, realized_tensor

__all__ = [
    "PureState",
    "ProtocolError",
    "LiftError",
    "Prepare",
    "Isometry",
    "Measure",
    "Send",
    "PhaseFix",
    "ProtocolStart",
    "Branch",
    "LiftResult",
    "MAX_AMPLITUDES",
    "build_network_state",
    "project_assignment",
    "run_protocol",
    "fidelity",
    "ternary_cross_protocol",
    "ternary_target_pairs",
    "basis_measurement_demo",
    "lifted_success_probability",
    "protocol_to_dict",
    "protocol_from_dict",
    "load_protocol",
    "dump_protocol",
]

MAX_AMPLITUDES = 1 << 24
UNITARY_TOL = 1e-10
COMPLETENESS_TOL = 1e-10


class ProtocolError(ValueError):
    pass


class LiftError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PureState:
    """Amplitudes over labeled subsystems, shaped one axis per subsystem."""

    labels: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != len(labels):
            raise ProtocolError(f"{len(labels)} labels for a {amps.ndim}-axis amplitude array")
        if len(set(labels)) != len(labels):
            raise ProtocolError(f"duplicate subsystem labels in {labels}")
        amps.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def scalar(cls, value: complex = 1.0) -> "PureState":
        return cls((), np.array(value, dtype=complex))

    @property
    def dims(self) -> tuple:
        return self.amplitudes.shape

    @property
    def subsystems(self) -> list:
        return list(zip(self.labels, self.dims))

    @property
    def flat(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat))

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm() - 1.0) <= 1e-12

    def normalized(self) -> "PureState":
        n = self.norm()
        if n == 0:
            raise ProtocolError("cannot normalize the zero state")
        return PureState(self.labels, self.amplitudes / n)

    def transpose(self, labels: Sequence) -> "PureState":
        labels = tuple(labels)
        if sorted(labels) != sorted(self.labels):
            raise ProtocolError(f"cannot reorder {self.labels} as {labels}")
        perm = [self.labels.index(l) for l in labels]
        return PureState(labels, np.transpose(self.amplitudes, perm))

    def relabel(self, mapping: dict) -> "PureState":
        return PureState(tuple(mapping.get(l, l) for l in self.labels), self.amplitudes)

    def tensor(self, other: "PureState") -> "PureState":
        size = self.amplitudes.size * other.amplitudes.size
        if size > MAX_AMPLITUDES:
            raise ProtocolError(f"state would hold {size} amplitudes (limit {MAX_AMPLITUDES})")
        return PureState(self.labels + other.labels, np.multiply.outer(self.amplitudes, other.amplitudes))

    def support(self, order: Sequence | None = None, tol: float = 1e-12) -> list:
        """Basis strings with |amplitude| above `tol` times the largest one."""
        st = self.transpose(order) if order is not None else self
        a = np.abs(st.amplitudes)
        if a.size == 0 or a.max() == 0:
            return []
        return sorted(tuple(int(i) for i in idx) for idx in zip(*np.nonzero(a > tol * a.max())))

    def apply(self, inputs: Sequence, outputs: Sequence, matrix) -> "PureState":
        """Apply a (prod out) x (prod in) matrix; outputs take the place of the first input."""
        inputs = list(inputs)
        out_labels = [l for l, _ in outputs]
        out_dims = [int(d) for _, d in outputs]
        missing = [l for l in inputs if l not in self.labels]
        if missing:
            raise ProtocolError(f"no subsystems {missing} in state")
        rest = [l for l in self.labels if l not in inputs]
        clash = set(out_labels) & set(rest)
        if clash or len(set(out_labels)) != len(out_labels):
            raise ProtocolError(f"output labels {out_labels} clash with the state")
        in_dims = [self.dims[self.labels.index(l)] for l in inputs]
        M = np.asarray(matrix, dtype=complex)
        want = (int(np.prod(out_dims)), int(np.prod(in_dims)))
        if M.shape != want:
            raise ProtocolError(f"matrix shape {M.shape}, expected {want} for {inputs} -> {out_labels}")
        rest_dims = [self.dims[self.labels.index(l)] for l in rest]
        if want[0] * int(np.prod(rest_dims)) > MAX_AMPLITUDES:
            raise ProtocolError("state would exceed the amplitude limit")
        pos = min((self.labels.index(l) for l in inputs), default=len(self.labels))
        moved = self.transpose(inputs + rest).amplitudes.reshape(want[1], -1)
        new = (M @ moved).reshape(out_dims + rest_dims)
        labels = out_labels + rest
        order = rest[:pos] + out_labels + rest[pos:]
        return PureState(labels, new).transpose(order)

    def project(self, labels: Sequence, bra: DenseTensor | np.ndarray) -> "PureState":
        """Apply the unnormalized bra ``sum V_i <i|`` on `labels`, without conjugating V."""
        data = np.asarray(bra.data if isinstance(bra, DenseTensor) else bra, dtype=complex)
        return self.apply(labels, [], data.reshape(1, -1))


def _epr(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def _sub(v: str, label: str) -> str:
    return f"{v}|{label}"


def build_network_state(network: Network) -> PureState:
    """Product of one unnormalized EPR pair per edge, subsystems labeled ``node|edge``."""
    st = PureState.scalar()
    for e in network.edges:
        st = st.tensor(PureState((_sub(e.a, e.label), _sub(e.b, e.label)), _epr(e.dim)))
    return st


def project_assignment(network: Network, assignment: NodeAssignment, lazy: bool = True) -> PureState:
    """Project every internal node onto its bra; the result lives on the clients.

    With ``lazy`` each edge's pair is created only when first needed, which
    keeps the state small; ``lazy=False`` builds the whole network state first.
    Both give the same vector.
    """
    check_assignment(network, assignment)
    if lazy:
        st = PureState.scalar()
        placed: set = set()

        def place(edges):
            nonlocal st
            for e in edges:
                if e.label not in placed:
                    placed.add(e.label)
                    st = st.tensor(PureState((_sub(e.a, e.label), _sub(e.b, e.label)), _epr(e.dim)))

        for v in network.internal:
            t = assignment.tensors[v]
            place([network.edge(l) for l in t.labels])
            st = st.project([_sub(v, l) for l in t.labels], t)
        place(network.edges)
    else:
        st = build_network_state(network)
        for v in network.internal:
            t = assignment.tensors[v]
            st = st.project([_sub(v, l) for l in t.labels], t)
    rename = {_sub(c, network.client_edge(c).label): c for c in network.clients}
    return st.relabel(rename).transpose(network.clients)


def fidelity(state: PureState, target) -> float:
    """|<t|psi>|^2 / (|t|^2 |psi|^2), matching axes by label."""
    if isinstance(target, DistributionTask):
        target = target.tensor
    if sorted(state.labels) != sorted(target.labels):
        raise ProtocolError(f"state holds {sorted(state.labels)}, target is over {sorted(target.labels)}")
    psi = state.transpose(target.labels).flat
    t = np.asarray(target.data, dtype=complex).reshape(-1)
    den = np.linalg.norm(t) ** 2 * np.linalg.norm(psi) ** 2
    if den == 0:
        raise ProtocolError("fidelity with a zero vector")
    return float(abs(np.vdot(t, psi)) ** 2 / den)


# --- protocol steps ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Prepare:
    node: str
    subsystems: tuple  # ((label, dim), ...)
    amplitudes: np.ndarray
    when: dict | None = None


@dataclass(frozen=True, eq=False)
class Isometry:
    """Linear map on subsystems held by `node`; `matrix` is (prod out) x (prod in)."""

    node: str
    inputs: tuple
    outputs: tuple  # ((label, dim), ...)
    matrix: np.ndarray
    unitary: bool = True
    when: dict | None = None


@dataclass(frozen=True, eq=False)
class Measure:
    """Operator family ``((outcome, matrix), ...)`` recorded under `key`.

    ``normalization="global"`` divides every operator by the square root of
    the largest eigenvalue of ``sum M^dag M``; ``"none"`` takes the family as
    given and rejects it if that eigenvalue exceeds 1.
    """

    node: str
    key: str
    inputs: tuple
    operators: tuple
    outputs: tuple | None = None
    normalization: str = "global"
    when: dict | None = None


@dataclass(frozen=True, eq=False)
class Send:
    subsystem: str
    source: str
    target: str
    rename: str | None = None
    when: dict | None = None


@dataclass(frozen=True, eq=False)
class PhaseFix:
    subsystem: str
    diagonal: np.ndarray
    when: dict | None = None


@dataclass
class ProtocolStart:
    """A custom starting state, with the node holding each subsystem."""

    state: PureState
    owners: dict


@dataclass
class Branch:
    outcomes: dict
    state: PureState
    probability: float
    owners: dict = field(default_factory=dict)
    used_edges: frozenset = frozenset()
    normalizations: dict = field(default_factory=dict)

    def record(self) -> str:
        if not self.outcomes:
            return "-"
        return ",".join(f"{k}={v}" for k, v in self.outcomes.items())


def _matches(when, outcomes) -> bool:
    return not when or all(outcomes.get(k) == v for k, v in when.items())


def _require_owned(branch: Branch, node: str, labels, network: Network):
    try:
        network.node(node)
    except ValueError as exc:
        raise ProtocolError(str(exc)) from exc
    for l in labels:
        if l not in branch.owners:
            raise ProtocolError(f"no subsystem {l!r}")
        if branch.owners[l] != node:
            raise ProtocolError(f"{node} does not hold {l!r} (held by {branch.owners[l]})")


def _family(step: Measure, in_dim: int):
    ops = [(o, np.asarray(M, dtype=complex)) for o, M in step.operators]
    if not ops:
        raise ProtocolError(f"measurement {step.key!r} has no operators")
    S = sum(M.conj().T @ M for _, M in ops)
    if S.shape != (in_dim, in_dim):
        raise ProtocolError(f"measurement {step.key!r}: operators act on dim {S.shape[0]}, inputs have {in_dim}")
    lam = float(np.linalg.eigvalsh(S)[-1])
    if lam <= 0:
        raise ProtocolError(f"measurement {step.key!r} is the zero family")
    if step.normalization == "global":
        factor = float(1.0 / np.sqrt(lam))
    elif step.normalization == "none":
        if lam > 1 + COMPLETENESS_TOL:
            raise ProtocolError(f"measurement {step.key!r} exceeds completeness (largest eigenvalue {lam:.6g})")
        factor = 1.0
    else:
        raise ProtocolError(f"unknown normalization {step.normalization!r}")
    return [(o, factor * M) for o, M in ops], factor


def _step_apply(step, branch: Branch, network: Network, touched: set) -> list:
    st = branch.state
    if isinstance(step, Prepare):
        _require_owned(branch, step.node, [], network)
        labels = [l for l, _ in step.subsystems]
        dims = [int(d) for _, d in step.subsystems]
        amps = np.asarray(step.amplitudes, dtype=complex).reshape(dims)
        if any(l in branch.owners for l in labels):
            raise ProtocolError(f"prepare reuses labels {labels}")
        new = st.tensor(PureState(labels, amps))
        owners = dict(branch.owners, **{l: step.node for l in labels})
        return [replace(branch, state=new, owners=owners)]
    if isinstance(step, Isometry):
        _require_owned(branch, step.node, step.inputs, network)
        M = np.asarray(step.matrix, dtype=complex)
        if step.unitary:
            err = np.abs(M.conj().T @ M - np.eye(M.shape[1])).max()
            if err > UNITARY_TOL:
                raise ProtocolError(f"isometry at {step.node} is not isometric (error {err:.3e})")
        elif np.linalg.norm(M, 2) > 1 + COMPLETENESS_TOL:
            raise ProtocolError(f"filter at {step.node} has norm above 1")
        touched.update(step.inputs)
        new = st.apply(step.inputs, step.outputs, M)
        owners = {l: n for l, n in branch.owners.items() if l not in step.inputs}
        owners.update({l: step.node for l, _ in step.outputs})
        before = st.norm() ** 2
        p = branch.probability * (new.norm() ** 2 / before if before else 0.0)
        if step.unitary:
            p = branch.probability
        return [replace(branch, state=new, owners=owners, probability=p)]
    if isinstance(step, Measure):
        _require_owned(branch, step.node, step.inputs, network)
        in_dims = [st.dims[st.labels.index(l)] for l in step.inputs]
        outputs = step.outputs if step.outputs is not None else tuple(zip(step.inputs, in_dims))
        ops, factor = _family(step, int(np.prod(in_dims)))
        touched.update(step.inputs)
        before = st.norm() ** 2
        owners = {l: n for l, n in branch.owners.items() if l not in step.inputs}
        owners.update({l: step.node for l, _ in outputs})
        out = []
        for outcome, M in ops:
            new = st.apply(step.inputs, outputs, M)
            mass = new.norm() ** 2
            if before == 0 or mass <= 1e-28 * before:
                continue
            out.append(Branch(dict(branch.outcomes, **{step.key: outcome}), new,
                              branch.probability * mass / before, owners, branch.used_edges,
                              dict(branch.normalizations, **{step.key: factor})))
        return out
    if isinstance(step, Send):
        _require_owned(branch, step.source, [step.subsystem], network)
        dim = st.dims[st.labels.index(step.subsystem)]
        free = [e for e in network.edges_between(step.source, step.target) if e.label not in branch.used_edges]
        if not free:
            raise ProtocolError(f"no unused edge between {step.source} and {step.target}")
        usable = [e for e in free if e.dim >= dim]
        if not usable:
            raise ProtocolError(f"edge {free[0].label} (dim {free[0].dim}) too small for a dim-{dim} subsystem")
        e = usable[0]
        pair = (_sub(e.a, e.label), _sub(e.b, e.label))
        if pair[0] in st.labels:
            # consume the network's own EPR pair for this edge
            if pair[0] in touched or pair[1] in touched:
                raise ProtocolError(f"edge {e.label} pair was already operated on")
            st = st.project(pair, _epr(e.dim) / e.dim)
        owners = {l: n for l, n in branch.owners.items() if l not in pair}
        label = step.rename or step.subsystem
        if label != step.subsystem:
            if label in owners:
                raise ProtocolError(f"rename target {label!r} already exists")
            st = st.relabel({step.subsystem: label})
            owners.pop(step.subsystem)
        owners[label] = step.target
        return [replace(branch, state=st, owners=owners, used_edges=branch.used_edges | {e.label})]
    if isinstance(step, PhaseFix):
        if step.subsystem not in st.labels:
            raise ProtocolError(f"no subsystem {step.subsystem!r}")
        diag = np.asarray(step.diagonal, dtype=complex)
        if np.abs(np.abs(diag) - 1).max() > UNITARY_TOL:
            raise ProtocolError("phase fix must have unit-modulus entries")
        touched.add(step.subsystem)
        new = st.apply([step.subsystem], [(step.subsystem, diag.size)], np.diag(diag))
        return [replace(branch, state=new)]
    raise ProtocolError(f"unknown step {step!r}")


def run_protocol(network: Network, steps: Sequence, policy="all", initial="empty",
                 upto: int | None = None) -> list[Branch]:
    """Execute `steps` on every branch; measurements split branches by Born weight.

    `policy` is ``"all"`` or a dict ``{key: outcome or list of outcomes}``
    keeping only the selected branches. `initial` is ``"empty"``, ``"network"``
    (one EPR pair per edge, held by its endpoints) or a `ProtocolStart`.
    `upto` stops after that many steps.
    """
    if isinstance(initial, ProtocolStart):
        start = Branch({}, initial.state, 1.0, dict(initial.owners))
    elif initial == "network":
        st = build_network_state(network)
        start = Branch({}, st, 1.0, {l: l.split("|", 1)[0] for l in st.labels})
    elif initial == "empty":
        start = Branch({}, PureState.scalar(), 1.0, {})
    else:
        raise ProtocolError(f"unknown initial state {initial!r}")
    select = None
    if policy != "all":
        if not isinstance(policy, dict):
            raise ProtocolError(f"unknown branch policy {policy!r}")
        select = {k: (v if isinstance(v, (list, tuple, set)) else [v]) for k, v in policy.items()}
    branches = [start]
    touched_by = {id(start): set()}
    for step in list(steps)[:upto]:
        nxt = []
        for b in branches:
            touched = touched_by[id(b)]
            if not _matches(step.when, b.outcomes):
                nxt.append(b)
                continue
            for child in _step_apply(step, b, network, touched):
                touched_by[id(child)] = set(touched)
                nxt.append(child)
        if select:
            nxt = [b for b in nxt if all(k not in b.outcomes or b.outcomes[k] in v for k, v in select.items())]
        branches = nxt
    return branches


# --- the ternary-square protocol ---------------------------------------------

def _basis_map(pairs: dict, in_dim: int, out_dims: Sequence[int]) -> np.ndarray:
    M = np.zeros((int(np.prod(out_dims)), in_dim), dtype=complex)
    for i, outs in pairs.items():
        M[np.ravel_multi_index(outs, out_dims), i] = 1
    return M


def ternary_cross_protocol() -> list:
    """Scripted protocol on the ternary square: crossing EPR pairs on (a,d) and (b,c)."""
    a_state = np.zeros((2, 3, 3), dtype=complex)
    for idx in [(0, 0, 2), (0, 2, 0), (1, 1, 2), (1, 2, 1)]:
        a_state[idx] = 1
    B = _basis_map({0: (0, 0), 1: (1, 0), 2: (2, 1)}, 3, (3, 2))
    C = _basis_map({0: (0, 1), 1: (1, 1), 2: (2, 0)}, 3, (3, 2))

    def m(x):
        M = np.zeros((2, 9), dtype=complex)
        s = (-1) ** x
        M[0, 0 * 3 + 2] = 1
        M[1, 1 * 3 + 2] = 1
        M[0, 2 * 3 + 0] = s
        M[1, 2 * 3 + 1] = s
        return M

    return [
        Prepare("A", (("A_a", 2), ("A_B", 3), ("A_C", 3)), a_state),
        Send("A_a", "A", "a", rename="a"),
        Send("A_B", "A", "B"),
        Send("A_C", "A", "C"),
        Isometry("B", ("A_B",), (("B", 3), ("B_b", 2)), B),
        Isometry("C", ("A_C",), (("C", 3), ("C_c", 2)), C),
        Send("B_b", "B", "b", rename="b"),
        Send("C_c", "C", "c", rename="c"),
        Send("B", "B", "D", rename="D_B"),
        Send("C", "C", "D", rename="D_C"),
        Measure("D", "x", ("D_B", "D_C"), ((0, m(0)), (1, m(1))), outputs=(("D", 2),)),
        PhaseFix("b", np.array([1, -1]), when={"x": 1}),
        Send("D", "D", "d", rename="d"),
    ]


TERNARY_INTERMEDIATE_STEPS = 10  # through both sends into D
TERNARY_INTERMEDIATE_ORDER = ("a", "b", "c", "D_B", "D_C")


def ternary_target_pairs() -> tuple:
    return (("a", "d"), ("b", "c"))


def basis_measurement_demo() -> list:
    """Measure u's half of the single-edge(2) pair in the computational basis."""
    P0 = np.diag([1.0, 0.0])
    P1 = np.diag([0.0, 1.0])
    return [Measure("u", "m", ("u|u-v",), ((0, P0), (1, P1)), normalization="none")]


BUILTIN_PROTOCOLS = {
    "ternary-cross": ("ternary-square", ternary_cross_protocol, "empty"),
    "basis-measure": ("single-edge", basis_measurement_demo, "network"),
}


def builtin_protocol(name: str):
    """``(network, steps, initial)`` for a named protocol."""
    if name not in BUILTIN_PROTOCOLS:
        raise ProtocolError(f"unknown protocol {name!r}; choose from {sorted(BUILTIN_PROTOCOLS)}")
    inst, make, initial = BUILTIN_PROTOCOLS[name]
    net = canonical_instance(inst, d=2) if inst == "single-edge" else canonical_instance(inst)
    return net, make(), initial


# --- deterministic classical protocols lifted to quantum ----------------------

@dataclass
class LiftResult:
    classical: float
    quantum: float
    orientation: dict
    branches: list

    @property
    def gap(self) -> float:
        return abs(self.classical - self.quantum)


def _node_table(t: DenseTensor, ins: list, outs: list):
    """Map input index tuples to output tuples (None = reject); LiftError if not deterministic."""
    data = np.asarray(t.transpose(ins + outs).data)
    in_dims = data.shape[:len(ins)]
    out_dims = data.shape[len(ins):]
    M = data.reshape(int(np.prod(in_dims)), int(np.prod(out_dims)))
    table = {}
    for r in range(M.shape[0]):
        hits = np.flatnonzero(M[r])
        if len(hits) > 1:
            raise LiftError("node output is not a function of its inputs")
        key = np.unravel_index(r, in_dims) if ins else ()
        table[tuple(int(k) for k in key)] = (tuple(int(k) for k in np.unravel_index(hits[0], out_dims))
                                             if len(hits) else None)
    return table, in_dims, out_dims


def _topo(network: Network, orientation: dict):
    indeg = {n.id: 0 for n in network.nodes}
    for e in network.edges:
        indeg[orientation[e.label][1]] += 1
    order, ready = [], [n.id for n in network.nodes if indeg[n.id] == 0]
    while ready:
        v = ready.pop(0)
        order.append(v)
        for e in network.incident(v):
            tail, head = orientation[e.label]
            if tail == v:
                indeg[head] -= 1
                if indeg[head] == 0:
                    ready.append(head)
        ready.sort(key=[n.id for n in network.nodes].index)
    return order if len(order) == len(network.nodes) else None


def _split(network: Network, v: str, orientation: dict):
    ins = [e.label for e in network.incident(v) if orientation[e.label][1] == v]
    outs = [e.label for e in network.incident(v) if orientation[e.label][0] == v]
    return ins, outs


def _deterministic_under(network, assignment, orientation) -> bool:
    if _topo(network, orientation) is None:
        return False
    try:
        for v in network.internal:
            _node_table(assignment.tensors[v], *_split(network, v, orientation))
    except LiftError:
        return False
    return True


def _infer_orientation(network: Network, assignment, sources) -> dict:
    fixed, free = {}, []
    for e in network.edges:
        ends = [x for x in (e.a, e.b) if network.is_client(x)]
        if len(ends) == 2:
            src = [x for x in ends if x in sources]
            if len(src) != 1:
                raise LiftError(f"client edge {e.label} needs exactly one source end")
            fixed[e.label] = (src[0], e.other(src[0]))
        elif ends:
            c = ends[0]
            fixed[e.label] = (c, e.other(c)) if c in sources else (e.other(c), c)
        else:
            free.append(e)
    for bits in itertools.product((0, 1), repeat=len(free)):
        o = dict(fixed)
        for e, b in zip(free, bits):
            o[e.label] = (e.a, e.b) if b == 0 else (e.b, e.a)
        if _deterministic_under(network, assignment, o):
            return o
    raise LiftError("no edge orientation makes every node deterministic")


def lifted_success_probability(network: Network, assignment: NodeAssignment, input_distribution,
                               sources: Sequence[str], orientation: dict | None = None) -> LiftResult:
    """Success probability of a deterministic classical protocol, computed twice.

    Classically: contract the 0/1 node tables and weigh accepted inputs by the
    input distribution. Quantumly: sources hold ``sum sqrt(pi(s)) |s>|s>``, each
    node measures accept/reject on its inputs, keeps them and writes its
    outputs by a copy-compute isometry, and wires travel over their edges. The
    accepted branch's Born probability is the quantum value.
    """
    check_assignment(network, assignment)
    for v, t in assignment.tensors.items():
        d = np.asarray(t.data)
        if np.any((d != 0) & (d != 1)):
            raise LiftError(f"node {v} has entries other than 0 and 1")
    sources = list(sources)
    if not set(sources) <= set(network.clients) or len(set(sources)) != len(sources):
        raise LiftError(f"sources {sources} must be distinct clients")
    sinks = [c for c in network.clients if c not in sources]
    pi = np.asarray(input_distribution, dtype=float)
    sdims = tuple(network.client_edge(s).dim for s in sources)
    if pi.shape != sdims:
        raise LiftError(f"input distribution shape {pi.shape}, sources need {sdims}")
    if np.any(pi < 0) or pi.sum() <= 0:
        raise LiftError("input distribution must be non-negative and nonzero")
    pi = pi / pi.sum()
    if orientation is None:
        orientation = _infer_orientation(network, assignment, sources)
    elif not _deterministic_under(network, assignment, orientation):
        raise LiftError("assignment is not deterministic under the given orientation")

    T = np.asarray(realized_tensor(network, assignment, sources + sinks).data).real
    accepted = T.reshape(pi.shape + (-1,)).sum(axis=-1) if sinks else T
    classical = float(np.sum(pi * accepted))

    # quantum path: reference copies plus one wire per source edge
    refs = [f"ref:{s}" for s in sources]
    wires = [f"w:{network.client_edge(s).label}" for s in sources]
    amps = np.zeros(sdims + sdims, dtype=complex)
    for s in np.ndindex(*sdims):
        amps[s + s] = np.sqrt(pi[s])
    owners = {r: s for r, s in zip(refs, sources)}
    owners.update({w: s for w, s in zip(wires, sources)})
    start = ProtocolStart(PureState(refs + wires, amps), owners)

    steps: list = []
    for s in sources:
        e = network.client_edge(s)
        steps.append(Send(f"w:{e.label}", s, e.other(s)))
    for v in _topo(network, orientation):
        if network.is_client(v):
            continue
        ins, outs = _split(network, v, orientation)
        table, in_dims, out_dims = _node_table(assignment.tensors[v], ins, outs)
        n_in, n_out = int(np.prod(in_dims)), int(np.prod(out_dims))
        P = np.zeros((n_in, n_in))
        V = np.zeros((n_in * n_out, n_in))
        for r, key in enumerate(np.ndindex(*in_dims)):
            out = table[tuple(key)]
            if out is not None:
                P[r, r] = 1
            col = np.ravel_multi_index(out, out_dims) if out is not None and outs else 0
            V[r * n_out + col, r] = 1
        in_labels = tuple(f"w:{l}" for l in ins)
        if ins:
            steps.append(Measure(v, f"accept:{v}", in_labels, ((1, P), (0, np.eye(n_in) - P)),
                                 normalization="none"))
            outputs = tuple((f"g:{v}:{l}", network.edge(l).dim) for l in ins)
        else:
            # a node with no inputs only emits; reject means it never fires
            steps.append(Prepare(v, ((f"g:{v}", 1),), np.ones(1)))
            in_labels, outputs = (f"g:{v}",), ()
            if table[()] is None:
                steps.append(Isometry(v, in_labels, ((f"g:{v}:off", 1),), np.zeros((1, 1)), unitary=False))
                in_labels, outputs = (f"g:{v}:off",), ()
        outputs += tuple((f"w:{l}", network.edge(l).dim) for l in outs)
        steps.append(Isometry(v, in_labels, outputs, V))
        for l in outs:
            steps.append(Send(f"w:{l}", v, orientation[l][1]))
    accept = {f"accept:{v}": 1 for v in network.internal}
    branches = run_protocol(network, steps, policy=accept, initial=start)
    quantum = float(sum(b.probability for b in branches))
    return LiftResult(classical, quantum, orientation, branches)


# --- protocol documents --------------------------------------------------------

def _mat_to_doc(M) -> dict:
    M = np.asarray(M, dtype=complex)
    doc = {"shape": list(M.shape), "re": M.real.reshape(-1).tolist()}
    if np.any(M.imag):
        doc["im"] = M.imag.reshape(-1).tolist()
    return doc


def _mat_from_doc(doc) -> np.ndarray:
    shape = tuple(doc["shape"])
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    return (re + 1j * im).reshape(shape)


def _subs(pairs) -> list:
    return [{"label": l, "dim": int(d)} for l, d in pairs]


def protocol_to_dict(steps: Sequence, initial: str = "empty") -> dict:
    out = []
    for s in steps:
        if isinstance(s, Prepare):
            d = {"type": "prepare", "node": s.node, "subsystems": _subs(s.subsystems),
                 "amplitudes": _mat_to_doc(np.asarray(s.amplitudes).reshape(-1))}
        elif isinstance(s, Isometry):
            d = {"type": "isometry", "node": s.node, "inputs": list(s.inputs), "outputs": _subs(s.outputs),
                 "matrix": _mat_to_doc(s.matrix), "unitary": s.unitary}
        elif isinstance(s, Measure):
            d = {"type": "measure", "node": s.node, "key": s.key, "inputs": list(s.inputs),
                 "operators": [{"outcome": o, "matrix": _mat_to_doc(M)} for o, M in s.operators],
                 "normalization": s.normalization}
            if s.outputs is not None:
                d["outputs"] = _subs(s.outputs)
        elif isinstance(s, Send):
            d = {"type": "send", "subsystem": s.subsystem, "from": s.source, "to": s.target}
            if s.rename:
                d["rename"] = s.rename
        elif isinstance(s, PhaseFix):
            d = {"type": "phase", "subsystem": s.subsystem, "diagonal": _mat_to_doc(s.diagonal)}
        else:
            raise ProtocolError(f"unknown step {s!r}")
        if s.when:
            d["when"] = dict(s.when)
        out.append(d)
    return {"initial": initial, "steps": out}


def protocol_from_dict(doc: dict) -> tuple[list, str]:
    """Parse a protocol document; returns ``(steps, initial)``."""
    steps = []
    try:
        for d in doc["steps"]:
            kind = d["type"]
            when = d.get("when")
            pairs = lambda key: tuple((str(x["label"]), int(x["dim"])) for x in d[key])  # noqa: E731
            if kind == "prepare":
                steps.append(Prepare(d["node"], pairs("subsystems"), _mat_from_doc(d["amplitudes"]), when))
            elif kind == "isometry":
                steps.append(Isometry(d["node"], tuple(d["inputs"]), pairs("outputs"), _mat_from_doc(d["matrix"]),
                                      bool(d.get("unitary", True)), when))
            elif kind == "measure":
                ops = tuple((o["outcome"], _mat_from_doc(o["matrix"])) for o in d["operators"])
                outs = pairs("outputs") if "outputs" in d else None
                steps.append(Measure(d["node"], str(d["key"]), tuple(d["inputs"]), ops, outs,
                                     d.get("normalization", "global"), when))
            elif kind == "send":
                steps.append(Send(d["subsystem"], d["from"], d["to"], d.get("rename"), when))
            elif kind == "phase":
                steps.append(PhaseFix(d["subsystem"], _mat_from_doc(d["diagonal"]), when))
            else:
                raise ProtocolError(f"unknown step type {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ProtocolError):
            raise
        raise ProtocolError(f"malformed protocol document: {exc}") from exc
    return steps, doc.get("initial", "empty")


def load_protocol(path) -> tuple[list, str]:
    return protocol_from_dict(json.loads(Path(path).read_text()))


def dump_protocol(steps: Sequence, path, initial: str = "empty") -> None:
    Path(path).write_text(json.dumps(protocol_to_dict(steps, initial), indent=2) + "\n")
