"""Distribution tasks: client-indexed target tensors.

Tasks are stored unnormalized. Whether a task is achieved is always judged
up to a positive scale (classical) or a nonzero complex scale (quantum).
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .tensor import DenseTensor, Domain, TensorError

__all__ = [
    "DistributionTask",
    "TaskError",
    "cross_pairs_task",
    "subset_state_task",
    "typewriter_task",
    "typewriter_matrix",
    "task_from_matrix",
    "product_task",
    "entries_to_list",
    "tensor_from_entries",
    "task_to_dict",
    "task_from_dict",
    "load_task",
    "dump_task",
]


class TaskError(ValueError):
    pass


@dataclass(frozen=True)
class DistributionTask:
    clients: tuple
    tensor: DenseTensor

    def __post_init__(self):
        clients = tuple((str(c), int(d)) for c, d in self.clients)
        object.__setattr__(self, "clients", clients)
        ids = [c for c, _ in clients]
        if len(set(ids)) != len(ids):
            raise TaskError(f"duplicate client ids {ids}")
        if self.tensor.labels != tuple(ids):
            raise TaskError(f"tensor axes {self.tensor.labels} do not follow client order {ids}")
        if self.tensor.shape != tuple(d for _, d in clients):
            raise TaskError(f"tensor shape {self.tensor.shape} disagrees with client dims")
        if self.tensor.is_zero():
            raise TaskError("task tensor is identically zero")

    @property
    def domain(self) -> Domain:
        return self.tensor.domain

    @property
    def client_ids(self) -> list[str]:
        return [c for c, _ in self.clients]

    @property
    def dims(self) -> dict[str, int]:
        return dict(self.clients)

    def with_domain(self, domain) -> "DistributionTask":
        return DistributionTask(self.clients, self.tensor.as_domain(domain))


def cross_pairs_task(pairs: Sequence[tuple[str, str]], dims: int | Sequence[int] = 2,
                     domain=Domain.NONNEG) -> DistributionTask:
    """Product of Kronecker deltas, one per client pair.

    Client order is the pair order flattened: ``[(a, c), (b, d)]`` gives axes
    ``a, c, b, d``.
    """
    pairs = [tuple(p) for p in pairs]
    if isinstance(dims, int):
        dims = [dims] * len(pairs)
    if len(dims) != len(pairs):
        raise TaskError("one dimension per pair is required")
    flat = [c for p in pairs for c in p]
    if any(len(p) != 2 for p in pairs) or len(set(flat)) != len(flat):
        raise TaskError(f"pairs {pairs} must be disjoint client pairs")
    shape = [d for d in dims for _ in range(2)]
    data = np.zeros(shape)
    for idx in itertools.product(*[range(d) for d in dims]):
        data[tuple(i for i in idx for _ in range(2))] = 1.0
    clients = list(zip(flat, shape))
    return DistributionTask(clients, DenseTensor(flat, data, domain))


def subset_state_task(kind: str, n: int | None = None, d: int = 2, support: Iterable | None = None,
                      clients: Sequence[str] | None = None, domain=Domain.NONNEG) -> DistributionTask:
    """0/1 tensor over a support set: ``ghz``, ``w`` or ``custom``.

    For ``custom`` the support is a collection of index strings or tuples and
    ``d`` may be a per-client sequence of dims.
    """
    kind = kind.lower()
    if kind == "ghz":
        if n is None or n < 2:
            raise TaskError("GHZ needs n >= 2")
        dims = [d] * n
        strings = [(i,) * n for i in range(d)]
    elif kind == "w":
        if n is None or n < 2:
            raise TaskError("W needs n >= 2")
        dims = [2] * n
        strings = [tuple(int(k == j) for k in range(n)) for j in range(n)]
    elif kind == "custom":
        strings = [tuple(int(ch) for ch in s) if isinstance(s, str) else tuple(s) for s in (support or [])]
        if not strings:
            raise TaskError("empty support")
        width = {len(s) for s in strings}
        if len(width) != 1:
            raise TaskError("support strings have different lengths")
        n = width.pop()
        dims = list(d) if not isinstance(d, int) else [max(d, 1 + max(s[k] for s in strings)) for k in range(n)]
    else:
        raise TaskError(f"unknown subset state {kind!r}")
    ids = list(clients) if clients else [f"c{i}" for i in range(n)]
    if len(ids) != n:
        raise TaskError("wrong number of client ids")
    data = np.zeros(dims)
    for s in strings:
        data[s] = 1.0
    return DistributionTask(list(zip(ids, dims)), DenseTensor(ids, data, domain))


def typewriter_matrix() -> np.ndarray:
    """Four-letter noisy typewriter table, without the 1/2 prefactor."""
    return np.array([[1, 1, 0, 0],
                     [0, 1, 1, 0],
                     [0, 0, 1, 1],
                     [1, 0, 0, 1]], dtype=float)


def task_from_matrix(m, domain=Domain.NONNEG, clients: Sequence[str] = ("u", "v")) -> DistributionTask:
    if isinstance(m, DenseTensor):
        if len(m.labels) != 2:
            raise TaskError(f"matrix task needs exactly 2 axes, got {len(m.labels)}")
        m = m.data
    m = np.asarray(m)
    if m.ndim != 2:
        raise TaskError(f"matrix task needs exactly 2 axes, got {m.ndim}")
    ids = list(clients)
    try:
        tensor = DenseTensor(ids, m, domain)
    except TensorError as exc:
        raise TaskError(str(exc)) from exc
    return DistributionTask(list(zip(ids, m.shape)), tensor)


def typewriter_task(domain=Domain.NONNEG) -> DistributionTask:
    return task_from_matrix(typewriter_matrix(), domain)


def product_task(first: DistributionTask, second: DistributionTask) -> DistributionTask:
    """Tensor product of two tasks on disjoint client sets."""
    if set(first.client_ids) & set(second.client_ids):
        raise TaskError("product of tasks needs disjoint clients")
    a, b = first.tensor, second.tensor
    data = np.multiply.outer(a.data, b.data)
    domain = Domain.NONNEG if a.domain is b.domain is Domain.NONNEG else Domain.COMPLEX
    return DistributionTask(first.clients + second.clients,
                            DenseTensor(a.labels + b.labels, data, domain))


def entries_to_list(tensor: DenseTensor) -> list[dict]:
    out = []
    for idx, v in tensor.entries():
        item = {"index": list(idx), "re": float(v.real)}
        if tensor.domain is Domain.COMPLEX:
            item["im"] = float(v.imag)
        out.append(item)
    return out


def tensor_from_entries(labels: Sequence, dims: Sequence[int], entries: Iterable[dict], domain) -> DenseTensor:
    data = np.zeros(tuple(int(d) for d in dims), dtype=complex)
    for e in entries:
        idx = tuple(int(i) for i in e["index"])
        if len(idx) != len(dims) or any(not 0 <= i < d for i, d in zip(idx, dims)):
            raise TaskError(f"entry index {list(idx)} out of range for dims {list(dims)}")
        data[idx] += complex(float(e.get("re", 0.0)), float(e.get("im", 0.0)))
    return DenseTensor(tuple(labels), data, domain)


def task_to_dict(task: DistributionTask) -> dict:
    return {
        "clients": [{"id": c, "dim": d} for c, d in task.clients],
        "domain": task.domain.value,
        "entries": entries_to_list(task.tensor),
    }


def task_from_dict(doc: dict) -> DistributionTask:
    try:
        clients = [(str(c["id"]), int(c["dim"])) for c in doc["clients"]]
        domain = Domain.parse(doc.get("domain", "complex"))
        tensor = tensor_from_entries([c for c, _ in clients], [d for _, d in clients], doc["entries"], domain)
    except (KeyError, TypeError, TensorError) as exc:
        raise TaskError(f"malformed task document: {exc}") from exc
    return DistributionTask(clients, tensor)


def load_task(path) -> DistributionTask:
    return task_from_dict(json.loads(Path(path).read_text()))


def dump_task(task: DistributionTask, path) -> None:
    Path(path).write_text(json.dumps(task_to_dict(task), indent=2) + "\n")
