"""Dense labeled tensors over the complex field or the non-negative reals.

Every tensor carries an ordered tuple of axis labels and a scalar domain.
Contraction follows a plan that names which labels are summed (bonds) and
in which order the surviving labels come out (free).
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Domain",
    "DenseTensor",
    "ContractionPlan",
    "ScaleMatch",
    "TensorError",
    "contract",
    "plan_shared",
    "frobenius_distance",
    "fit_scale",
    "match_up_to_scale",
    "kronecker_delta",
]

# entries in [-NEG_SLACK, 0) are treated as rounding noise of a non-negative value
NEG_SLACK = 1e-15


class TensorError(ValueError):
    """Structural problem with a tensor or a contraction plan."""


class Domain(enum.Enum):
    COMPLEX = "complex"
    NONNEG = "nonneg"

    @classmethod
    def parse(cls, value: "Domain | str") -> "Domain":
        if isinstance(value, Domain):
            return value
        aliases = {"complex": cls.COMPLEX, "c": cls.COMPLEX,
                   "nonneg": cls.NONNEG, "r+": cls.NONNEG, "nonnegative": cls.NONNEG}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown scalar domain {value!r}") from None

    def contains(self, other: "Domain") -> bool:
        """True if every tensor of `other` is also a tensor of this domain."""
        return self is Domain.COMPLEX or other is Domain.NONNEG


@dataclass(frozen=True, eq=False)
class DenseTensor:
    labels: tuple
    data: np.ndarray
    domain: Domain = Domain.COMPLEX

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise TensorError(f"duplicate axis labels {labels}")
        data = np.asarray(self.data)
        if data.ndim != len(labels):
            raise TensorError(f"{len(labels)} labels for a {data.ndim}-axis array")
        if any(d < 1 for d in data.shape):
            raise TensorError(f"axis dims must be positive, got {data.shape}")
        domain = Domain.parse(self.domain)
        if domain is Domain.NONNEG:
            if np.iscomplexobj(data):
                if np.any(data.imag != 0):
                    raise TensorError("non-negative tensor with imaginary entries")
                data = data.real
            data = np.array(data, dtype=float)
            if np.any(data < -NEG_SLACK) or not np.all(np.isfinite(data)):
                raise TensorError("non-negative tensor with negative or non-finite entries")
            data[data < 0] = 0.0
        else:
            data = np.array(data, dtype=complex)
        data.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "domain", domain)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dims(self) -> dict:
        return dict(zip(self.labels, self.data.shape))

    def __repr__(self):
        axes = ", ".join(f"{l}:{d}" for l, d in zip(self.labels, self.shape))
        return f"DenseTensor([{axes}], domain={self.domain.value})"

    def transpose(self, labels: Sequence) -> "DenseTensor":
        labels = tuple(labels)
        if sorted(map(str, labels)) != sorted(map(str, self.labels)) or len(labels) != len(self.labels):
            raise TensorError(f"cannot reorder {self.labels} as {labels}")
        perm = [self.labels.index(l) for l in labels]
        return DenseTensor(labels, self.data.transpose(perm), self.domain)

    def canonical(self) -> "DenseTensor":
        """Same tensor with axes sorted by label."""
        return self.transpose(sorted(self.labels, key=str))

    def relabel(self, mapping: dict) -> "DenseTensor":
        return DenseTensor(tuple(mapping.get(l, l) for l in self.labels), self.data, self.domain)

    def as_domain(self, domain: Domain | str) -> "DenseTensor":
        return DenseTensor(self.labels, self.data, Domain.parse(domain))

    def norm(self) -> float:
        return float(np.linalg.norm(self.data.ravel()))

    def is_zero(self) -> bool:
        return not np.any(self.data)

    def entries(self) -> Iterable[tuple[tuple, complex]]:
        """Non-zero entries as (index tuple, value)."""
        for idx in zip(*np.nonzero(self.data)):
            yield tuple(int(i) for i in idx), complex(self.data[idx])

    @classmethod
    def zeros(cls, labels: Sequence, dims: Sequence[int], domain=Domain.COMPLEX) -> "DenseTensor":
        return cls(tuple(labels), np.zeros(tuple(dims)), domain)


def kronecker_delta(labels: Sequence, dim: int, domain=Domain.NONNEG) -> DenseTensor:
    """Generalized delta: 1 where all indices agree."""
    n = len(labels)
    data = np.zeros((dim,) * n)
    for i in range(dim):
        data[(i,) * n] = 1.0
    return DenseTensor(tuple(labels), data, domain)


@dataclass(frozen=True)
class ContractionPlan:
    """Tensors, the label pairs to sum over, and the output label order.

    A bond ``(x, y)`` sums axis ``x`` of one tensor against axis ``y`` of
    another; ``(x, x)`` bonds the two tensors that share label ``x``.
    """

    tensors: tuple
    bonds: tuple
    free: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "tensors", tuple(self.tensors))
        object.__setattr__(self, "bonds", tuple(tuple(b) for b in self.bonds))
        object.__setattr__(self, "free", tuple(self.free))


def plan_shared(tensors: Sequence[DenseTensor], free: Sequence | None = None) -> ContractionPlan:
    """Plan that bonds every label carried by exactly two tensors.

    Without `free`, the remaining labels come out in order of first appearance.
    """
    counts: dict = {}
    order = []
    for t in tensors:
        for l in t.labels:
            if l not in counts:
                order.append(l)
            counts[l] = counts.get(l, 0) + 1
    bad = [l for l, c in counts.items() if c > 2]
    if bad:
        raise TensorError(f"labels {bad} appear in more than two tensors")
    bonds = tuple((l, l) for l in order if counts[l] == 2)
    if free is None:
        free = tuple(l for l in order if counts[l] == 1)
    return ContractionPlan(tuple(tensors), bonds, tuple(free))


def _resolve(plan: ContractionPlan):
    """Map every (tensor, axis) to an integer index id; return ids, dims and output ids."""
    if not plan.tensors:
        raise TensorError("empty tensor list")
    owners: dict = {}
    for ti, t in enumerate(plan.tensors):
        for ax, l in enumerate(t.labels):
            owners.setdefault(l, []).append((ti, ax))

    ids = [[None] * len(t.labels) for t in plan.tensors]
    dims: dict[int, int] = {}
    next_id = itertools.count()
    used = set()

    def take(label, exclude=None):
        slots = [s for s in owners.get(label, []) if s not in used and s != exclude]
        if not slots:
            raise TensorError(f"bond label {label!r} not available")
        return slots[0]

    for x, y in plan.bonds:
        if x == y:
            slots = [s for s in owners.get(x, []) if s not in used]
            if len(slots) != 2:
                raise TensorError(f"shared bond label {x!r} must appear in exactly two tensors")
            s1, s2 = slots
        else:
            if len(owners.get(x, [])) != 1 or len(owners.get(y, [])) != 1:
                raise TensorError(f"bond ({x!r}, {y!r}) labels must each appear in exactly one tensor")
            s1, s2 = take(x), take(y)
        d1 = plan.tensors[s1[0]].shape[s1[1]]
        d2 = plan.tensors[s2[0]].shape[s2[1]]
        if d1 != d2:
            raise TensorError(f"dimension mismatch on bond ({x!r}, {y!r}): {d1} vs {d2}")
        k = next(next_id)
        dims[k] = d1
        for s in (s1, s2):
            used.add(s)
            ids[s[0]][s[1]] = k

    if len(set(plan.free)) != len(plan.free):
        raise TensorError(f"duplicate free label in {plan.free}")
    out = []
    for l in plan.free:
        slots = [s for s in owners.get(l, []) if s not in used]
        if len(slots) != 1:
            raise TensorError(f"free label {l!r} must appear in exactly one unbonded axis")
        s = slots[0]
        used.add(s)
        k = next(next_id)
        dims[k] = plan.tensors[s[0]].shape[s[1]]
        ids[s[0]][s[1]] = k
        out.append(k)
    leftover = [plan.tensors[ti].labels[ax] for ti, row in enumerate(ids) for ax, v in enumerate(row) if v is None]
    if leftover:
        raise TensorError(f"labels {leftover} are neither bonded nor free")
    return ids, dims, out


def _einsum(*operands_and_ids):
    """np.einsum over integer sublists, remapped into its 52-symbol range."""
    *pairs, out = operands_and_ids
    remap: dict = {}
    args = []
    for k in range(0, len(pairs), 2):
        args.append(pairs[k])
        args.append([remap.setdefault(i, len(remap)) for i in pairs[k + 1]])
    args.append([remap.setdefault(i, len(remap)) for i in out])
    return np.einsum(*args, optimize=False)


def _pair_cost(a: list, b: list, out: set, dims: dict) -> int:
    keep = [k for k in dict.fromkeys(a + b) if k in out or (k in a) != (k in b)]
    return int(np.prod([dims[k] for k in keep], dtype=np.int64))


def contract(plan: ContractionPlan, schedule: Sequence[tuple[int, int]] | None = None) -> DenseTensor:
    """Contract all tensors of `plan`, returning a tensor over ``plan.free``.

    Pairs are merged greedily, smallest intermediate first, unless an explicit
    `schedule` of pair positions into the shrinking working list is given.
    """
    ids, dims, out = _resolve(plan)
    domain = Domain.NONNEG if all(t.domain is Domain.NONNEG for t in plan.tensors) else Domain.COMPLEX
    work = [(t.data, list(row)) for t, row in zip(plan.tensors, ids)]
    outset = set(out)

    def merge(i, j):
        (da, ia), (db, ib) = work[i], work[j]
        # keep an index if it is an output or still needed by a third tensor
        rest = [row for k, (_, row) in enumerate(work) if k not in (i, j)]
        needed = outset.union(*map(set, rest)) if rest else outset
        keep = [k for k in dict.fromkeys(ia + ib) if k in needed]
        res = _einsum(da, ia, db, ib, keep)
        work[:] = [w for k, w in enumerate(work) if k not in (i, j)] + [(res, keep)]

    steps = list(schedule) if schedule is not None else None
    while len(work) > 1:
        if steps:
            i, j = steps.pop(0)
        else:
            best = None
            for i0, j0 in itertools.combinations(range(len(work)), 2):
                shared = set(work[i0][1]) & set(work[j0][1])
                cost = _pair_cost(work[i0][1], work[j0][1], outset, dims)
                key = (not shared, cost, i0, j0)
                if best is None or key < best:
                    best = key
            i, j = best[2], best[3]
        merge(i, j)

    data, row = work[0]
    data = _einsum(data, row, out)
    if domain is Domain.NONNEG:
        data = data.real
    return DenseTensor(plan.free, data, domain)


def _aligned(a: DenseTensor, b: DenseTensor) -> tuple[np.ndarray, np.ndarray]:
    if set(a.labels) != set(b.labels) or len(a.labels) != len(b.labels):
        raise TensorError(f"label mismatch {a.labels} vs {b.labels}")
    bt = b.transpose(a.labels)
    if a.shape != bt.shape:
        raise TensorError(f"shape mismatch {a.dims} vs {b.dims}")
    return a.data, bt.data


def frobenius_distance(a: DenseTensor, b: DenseTensor) -> float:
    x, y = _aligned(a, b)
    return float(np.linalg.norm((x - y).ravel()))


@dataclass(frozen=True)
class ScaleMatch:
    """Best scalar ``s`` with ``candidate ~ s * target``.

    `residual` is ``|candidate - s*target| / |candidate|`` (1.0 for a zero
    candidate), which does not change when the candidate is rescaled.
    """

    scale: complex
    residual: float
    admissible: bool
    matched: bool


def fit_scale(candidate: DenseTensor, target: DenseTensor, domain: Domain | str, tol: float) -> ScaleMatch:
    domain = Domain.parse(domain)
    c, t = _aligned(candidate, target)
    c = c.ravel().astype(complex)
    t = t.ravel().astype(complex)
    tt = float(np.vdot(t, t).real)
    if tt == 0.0:
        raise TensorError("target tensor is identically zero")
    s = np.vdot(t, c) / tt
    if domain is Domain.NONNEG:
        s = complex(s.real, 0.0)
        admissible = s.real > 0
        if not admissible:
            s = 0j
    else:
        admissible = s != 0
    cn = float(np.linalg.norm(c))
    if cn == 0.0:
        return ScaleMatch(0j, 1.0, False, False)
    residual = float(np.linalg.norm(c - s * t)) / cn
    return ScaleMatch(complex(s), residual, bool(admissible), bool(admissible and residual <= tol))


def match_up_to_scale(candidate: DenseTensor, target: DenseTensor, domain: Domain | str,
                      tol: float) -> ScaleMatch | None:
    """The scale report if `candidate` equals an admissible multiple of `target`, else None."""
    m = fit_scale(candidate, target, domain, tol)
    return m if m.matched else None
