import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from netfactor.network import Edge, Network, Node
from netfactor.slocc import _split
from netfactor.tensor import DenseTensor, Domain
from netfactor.verify import NodeAssignment

settings.register_profile("netfactor", derandomize=True, deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("netfactor")


def random_tree_network(rng, n_internal=None, max_dim=3, max_clients=4):
    """A random tree: internal nodes joined as a tree, clients hung on as leaves."""
    n_internal = n_internal or int(rng.integers(1, 4))
    internal = [f"N{i}" for i in range(n_internal)]
    edges = []
    for i in range(1, n_internal):
        j = int(rng.integers(0, i))
        edges.append((internal[j], internal[i]))
    deg = {v: 0 for v in internal}
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    clients = []
    k = 0
    for v in internal:
        # every internal node needs degree >= 2
        need = max(0, 2 - deg[v])
        extra = need + int(rng.integers(0, 2))
        for _ in range(extra):
            if len(clients) >= max_clients and need == 0:
                break
            c = f"c{k}"
            k += 1
            clients.append(c)
            edges.append((v, c))
            need = max(0, need - 1)
    nodes = [Node(v) for v in internal] + [Node(c, True) for c in clients]
    es = [Edge(a, b, int(rng.integers(2, max_dim + 1)), f"{a}-{b}") for a, b in edges]
    return Network(nodes, es, "random-tree")


def random_assignment(rng, network, domain=Domain.COMPLEX):
    tensors = {}
    for v in network.internal:
        inc = network.incident(v)
        shape = [e.dim for e in inc]
        if domain is Domain.NONNEG:
            data = rng.random(shape)
        else:
            data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        tensors[v] = DenseTensor([e.label for e in inc], data, domain)
    return NodeAssignment(tensors, domain)


def random_deterministic_protocol(rng):
    """A random DAG protocol on a random tree: topological order from a random permutation."""
    net = random_tree_network(rng, max_dim=3)
    clients = net.clients
    n_src = int(rng.integers(1, len(clients)))
    sources = list(rng.permutation(clients)[:n_src])
    internal = list(rng.permutation(net.internal))
    sinks = [c for c in clients if c not in sources]
    order = {v: i for i, v in enumerate(sources + internal + sinks)}
    orientation = {}
    for e in net.edges:
        orientation[e.label] = (e.a, e.b) if order[e.a] < order[e.b] else (e.b, e.a)
    tensors = {}
    for v in net.internal:
        ins, outs = _split(net, v, orientation)
        dims = {e.label: e.dim for e in net.incident(v)}
        data = np.zeros([dims[l] for l in ins + outs])
        for key in itertools.product(*[range(dims[l]) for l in ins]):
            if rng.random() < 0.3:
                continue  # reject this input
            out = tuple(int(rng.integers(0, dims[l])) for l in outs)
            data[key + out] = 1
        tensors[v] = DenseTensor(tuple(ins + outs), data, Domain.NONNEG)
    A = NodeAssignment(tensors, Domain.NONNEG)
    shape = tuple(net.client_edge(s).dim for s in sources)
    pi = rng.random(shape)
    return net, A, pi / pi.sum(), sources, orientation


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
