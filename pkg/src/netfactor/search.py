"""Numerical search for node-tensor factorizations.

`als_search` runs multi-start alternating least squares over the internal
nodes of a network: with every other node fixed, the realized task tensor is
linear in one node's tensor, so each update is an ordinary (complex domain)
or non-negativity-constrained (non-negative domain) least-squares solve.

A search that finds nothing is evidence, not proof, that no factorization
exists.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .network import Network, canonical_instance
from .tasks import DistributionTask, cross_pairs_task
from .tensor import DenseTensor, Domain
from .verify import AssignmentError, NodeAssignment

__all__ = [
    "SearchConfig",
    "SearchResult",
    "ConditionReport",
    "NO_HIT_BANNER",
    "als_search",
    "square_cross_reduced_search",
    "square_family_assignment",
    "square_reduced_objective",
    "square_necessary_conditions",
    "restart_rng",
    "format_restart_table",
]

NO_HIT_BANNER = "no factorization found (evidence, not proof)"
NNLS_KKT_TOL = 1e-10
# a restart stops once its residual is this far below success_tol
HIT_MARGIN = 1e-4


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 100
    max_sweeps: int = 2000
    seed: int = 0
    conv_tol: float = 1e-10
    success_tol: float = 1e-6
    init_scale: float = 1.0
    threads: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if not (self.conv_tol > 0 and self.success_tol > 0 and self.init_scale > 0):
            raise ValueError("tolerances and init_scale must be strictly positive")

    def with_(self, **kw) -> "SearchConfig":
        return replace(self, **kw)


@dataclass
class SearchResult:
    best_assignment: NodeAssignment | None
    best_residual: float
    residual_per_restart: list
    sweeps_used: list
    hit: bool
    best_restart: int = -1
    aborted: list = field(default_factory=list)
    method: str = "als"

    def verdict(self) -> str:
        if self.hit:
            return f"factorization found (restart {self.best_restart}, residual {self.best_residual:.3e})"
        return NO_HIT_BANNER


def restart_rng(seed: int, restart: int) -> np.random.Generator:
    """Independent stream per (seed, restart), so serial and threaded runs agree."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), int(restart)]))


def format_restart_table(result: SearchResult) -> str:
    """Tab-separated ``restart, residual, sweeps`` rows under a header line."""
    rows = ["restart\tresidual\tsweeps"]
    for i, (r, s) in enumerate(zip(result.residual_per_restart, result.sweeps_used)):
        rows.append(f"{i}\t{r:.12e}\t{s}")
    return "\n".join(rows) + "\n"


# configurations enumerated per problem; beyond this the tables get too large
MAX_CONFIGS = 1 << 22


class _AlsProblem:
    """Index tables for one (network, task) pair.

    Every joint assignment of edge indices is a configuration; client edges
    carry the client's index. For each node the table holds the flat position
    of its entry under each configuration, so contractions and design
    matrices become one gather-multiply-accumulate pass.
    """

    def __init__(self, network: Network, task: DistributionTask, domain: Domain):
        if sorted(task.client_ids) != sorted(network.clients):
            raise AssignmentError(f"task clients {task.client_ids} differ from network clients {network.clients}")
        cdims = network.client_dims()
        for c, d in task.clients:
            if cdims[c] != d:
                raise AssignmentError(f"client {c}: task dim {d}, network edge dim {cdims[c]}")
        self.network = network
        self.domain = domain
        self.nodes = network.internal
        self.dtype = float if domain is Domain.NONNEG else complex
        self.target = np.asarray(task.tensor.data, dtype=self.dtype).ravel()
        self.tnorm = float(np.linalg.norm(self.target))
        self.labels = {v: [e.label for e in network.incident(v)] for v in self.nodes}
        self.shapes = {v: tuple(e.dim for e in network.incident(v)) for v in self.nodes}
        self.sizes = [int(np.prod(self.shapes[v])) for v in self.nodes]

        edges = list(network.edges)
        dims = [e.dim for e in edges]
        q = int(np.prod(dims, dtype=np.int64))
        if q > MAX_CONFIGS:
            raise AssignmentError(f"network has {q} edge configurations; limit is {MAX_CONFIGS}")
        grid = np.indices(dims).reshape(len(dims), -1)
        pos = {e.label: k for k, e in enumerate(edges)}
        cvar = {c: pos[network.client_edge(c).label] for c in network.clients}
        self.tidx = np.ravel_multi_index([grid[cvar[c]] for c in task.client_ids],
                                         [d for _, d in task.clients]).astype(np.intp)
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)]).astype(np.intp)
        local = []
        for v in self.nodes:
            local.append(np.ravel_multi_index([grid[pos[l]] for l in self.labels[v]], self.shapes[v]))
        self.local = [np.asarray(l, dtype=np.intp) for l in local]
        if self.nodes:
            self.gidx = np.ascontiguousarray(
                np.stack([l + off for l, off in zip(self.local, self.offsets[:-1])]), dtype=np.intp)
        else:
            self.gidx = np.zeros((0, q), dtype=np.intp)
        self.design_idx = [np.ascontiguousarray(self.tidx * n + l, dtype=np.intp)
                           for n, l in zip(self.sizes, self.local)]

    def flat(self, X) -> np.ndarray:
        if not self.nodes:
            return np.zeros(0, dtype=self.dtype)
        return np.concatenate([np.asarray(X[v], dtype=self.dtype).ravel() for v in self.nodes])

    def design(self, k: int, xflat) -> np.ndarray:
        """Matrix mapping node k's flattened tensor to the flattened realized task."""
        n = self.sizes[k]
        out = kernels.accumulate(self.gidx, xflat, k, self.design_idx[k], self.target.size * n)
        return out.reshape(self.target.size, n)

    def realized(self, xflat) -> np.ndarray:
        return kernels.accumulate(self.gidx, xflat, -1, self.tidx, self.target.size)

    def residual(self, X) -> float:
        return float(np.linalg.norm(self.realized(self.flat(X)) - self.target)) / self.tnorm

    def assignment(self, X) -> NodeAssignment:
        return NodeAssignment({v: DenseTensor(self.labels[v], X[v], self.domain) for v in self.nodes},
                              self.domain)


def _solve_node(M, t, domain):
    if domain is Domain.NONNEG:
        G = M.T @ M
        h = M.T @ t
        x, _ = kernels.nnls_gram(G, h, NNLS_KKT_TOL)
        return x
    return np.linalg.lstsq(M, t, rcond=None)[0]


def _balance_flat(xflat, offs):
    """Rescale node blocks to a common norm; positive factors leave the product unchanged."""
    k = len(offs) - 1
    if k < 2:
        return
    norms = np.sqrt([np.vdot(xflat[offs[j]:offs[j + 1]], xflat[offs[j]:offs[j + 1]]).real for j in range(k)])
    if norms.min() == 0.0 or not np.all(np.isfinite(norms)):
        return
    g = float(np.exp(np.mean(np.log(norms))))
    for j in range(k):
        xflat[offs[j]:offs[j + 1]] *= g / norms[j]


def _init(problem: _AlsProblem, rng, scale):
    X = {}
    for v in problem.nodes:
        shape = problem.shapes[v]
        if problem.domain is Domain.NONNEG:
            X[v] = rng.uniform(0.0, scale, size=shape)
        else:
            X[v] = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (scale / np.sqrt(2))
    return X


def _als_restart(problem: _AlsProblem, config: SearchConfig, k: int, trace: list | None = None):
    rng = restart_rng(config.seed, k)
    X = _init(problem, rng, config.init_scale)
    xflat = problem.flat(X)
    offs = problem.offsets
    res = float(np.linalg.norm(problem.realized(xflat) - problem.target)) / problem.tnorm
    if trace is not None:
        trace.append(res)
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        prev = res
        for j in range(len(problem.nodes)):
            M = problem.design(j, xflat)
            x = _solve_node(M, problem.target, problem.domain)
            if not np.all(np.isfinite(x)):
                return X, float("inf"), sweeps, True
            new = float(np.linalg.norm(M @ x - problem.target)) / problem.tnorm
            # a least-squares step cannot increase the residual; reject rounding regressions
            if new <= res:
                xflat[offs[j]:offs[j + 1]] = x
                res = new
            if trace is not None:
                trace.append(res)
        _balance_flat(xflat, offs)
        res = float(np.linalg.norm(problem.realized(xflat) - problem.target)) / problem.tnorm
        if not np.isfinite(res):
            return X, float("inf"), sweeps, True
        if res <= config.success_tol * HIT_MARGIN or prev - res <= config.conv_tol * prev:
            break
    X = {v: xflat[offs[j]:offs[j + 1]].reshape(problem.shapes[v]).copy() for j, v in enumerate(problem.nodes)}
    return X, res, sweeps, False


def als_search(network: Network, task: DistributionTask, domain: Domain | str,
               config: SearchConfig = SearchConfig()) -> SearchResult:
    """Multi-start ALS for an assignment whose contraction equals the task.

    The residual is ``|realized - task| / |task|``; a restart hits when it
    ends at or below ``config.success_tol``.
    """
    domain = Domain.parse(domain)
    if domain is Domain.NONNEG and task.domain is not Domain.NONNEG:
        raise AssignmentError("a non-negative search needs a non-negative task")
    problem = _AlsProblem(network, task, domain)
    if not problem.nodes:
        X: dict = {}
        r = problem.residual(X)
        return SearchResult(problem.assignment(X), r, [r], [0], r <= config.success_tol, 0)

    def run(k):
        return _als_restart(problem, config, k)

    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            outcomes = list(pool.map(run, range(config.restarts)))
    else:
        outcomes = [run(k) for k in range(config.restarts)]
    residuals = [o[1] for o in outcomes]
    sweeps = [o[2] for o in outcomes]
    aborted = [k for k, o in enumerate(outcomes) if o[3]]
    best = min(range(len(residuals)), key=lambda k: (residuals[k], k))
    best_assignment = problem.assignment(outcomes[best][0]) if np.isfinite(residuals[best]) else None
    return SearchResult(best_assignment, residuals[best], residuals, sweeps,
                        residuals[best] <= config.success_tol, best, aborted)


# --- reduced square-network search ----------------------------------------

_I2 = np.eye(2, dtype=complex)
_Z2 = np.diag([1.0, -1.0]).astype(complex)
SQUARE_TASK_NORM = 2.0  # four unit entries


def square_reduced_objective(z) -> float:
    """Sum over client strings of |Tr(A B C D) - target|^2 in the reduced family."""
    return float(kernels.square_objective(np.asarray(z, dtype=complex))[0])


def _family_matrices(z):
    z = np.asarray(z, dtype=complex)
    A = [_I2, np.array([[1.0, z[8]], [z[9], z[10]]])]
    B = [_I2, _Z2]
    C = [z[0:4].reshape(2, 2), z[4:8].reshape(2, 2)]
    D = [_I2, z[11:15].reshape(2, 2)]
    return A, B, C, D


# axis order per corner: client leg, incoming ring edge, outgoing ring edge
SQUARE_CORNER_AXES = {
    "A": ("A-a", "D-A", "A-B"),
    "B": ("B-b", "A-B", "B-C"),
    "C": ("C-c", "B-C", "C-D"),
    "D": ("D-d", "C-D", "D-A"),
}


def square_family_assignment(z) -> NodeAssignment:
    """Corner tensors on square(2,2) for a 15-parameter point of the reduced family."""
    A, B, C, D = _family_matrices(z)
    mats = {"A": A, "B": B, "C": C, "D": D}
    return NodeAssignment({v: DenseTensor(SQUARE_CORNER_AXES[v], np.stack(mats[v]), Domain.COMPLEX)
                           for v in "ABCD"}, Domain.COMPLEX)


def square_cross_task(domain=Domain.COMPLEX) -> DistributionTask:
    return cross_pairs_task([("a", "c"), ("b", "d")], 2, domain)


def square_cross_reduced_search(config: SearchConfig = SearchConfig()) -> SearchResult:
    """Gradient descent with restarts over the 15-parameter family.

    Residual per restart is ``sqrt(objective) / |target|``, comparable with
    the ALS residual on the same task.
    """
    f_stop = (config.success_tol * SQUARE_TASK_NORM) ** 2 * 1e-4

    def run(k):
        rng = restart_rng(config.seed, k)
        z0 = (rng.standard_normal(15) + 1j * rng.standard_normal(15)) * (config.init_scale / np.sqrt(2))
        z, f, it = kernels.square_descent(z0, config.max_sweeps, config.conv_tol, f_stop)
        if not np.isfinite(f) or not np.all(np.isfinite(z)):
            return z, float("inf"), it, True
        return z, float(np.sqrt(f)) / SQUARE_TASK_NORM, it, False

    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            outcomes = list(pool.map(run, range(config.restarts)))
    else:
        outcomes = [run(k) for k in range(config.restarts)]
    residuals = [o[1] for o in outcomes]
    best = min(range(len(residuals)), key=lambda k: (residuals[k], k))
    assignment = square_family_assignment(outcomes[best][0]) if np.isfinite(residuals[best]) else None
    return SearchResult(assignment, residuals[best], residuals, [o[2] for o in outcomes],
                        residuals[best] <= config.success_tol, best,
                        [k for k, o in enumerate(outcomes) if o[3]], method="square-reduced")


@dataclass
class ConditionReport:
    ranks: dict          # corner -> (rank for client 0, rank for client 1)
    spans: dict          # "XY" -> rank of the four vectorized products
    failures: list

    @property
    def passes(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        if self.passes:
            return "all necessary conditions hold"
        return "certified non-solution: " + "; ".join(self.failures)


def _corner_matrices(assignment: NodeAssignment, v: str):
    t = assignment.tensors[v]
    axes = SQUARE_CORNER_AXES[v]
    if set(t.labels) != set(axes) or t.transpose(axes).shape != (2, 2, 2):
        raise AssignmentError(f"corner {v} is not shaped for square(2,2)")
    data = t.transpose(axes).data
    return [data[0], data[1]]


def square_necessary_conditions(assignment: NodeAssignment, rank_tol: float = 1e-9) -> ConditionReport:
    """Rank-2 corners and spanning products of neighboring corners.

    A candidate failing either condition cannot realize the crossed pairs on
    the square; no contraction is needed to rule it out.
    """
    if set(assignment.tensors) != set("ABCD"):
        raise AssignmentError("assignment is not for square(2,2)")
    mats = {v: _corner_matrices(assignment, v) for v in "ABCD"}
    failures = []
    ranks = {}
    for v in "ABCD":
        rs = []
        for i, m in enumerate(mats[v]):
            s = np.linalg.svd(m, compute_uv=False)
            r = int(np.sum(s > rank_tol * max(s[0], 1e-300))) if s[0] > 0 else 0
            rs.append(r)
            if r != 2:
                failures.append(f"rank 2: {v}^{i} has rank {r}")
        ranks[v] = tuple(rs)
    spans = {}
    for x, y in ("AB", "BC", "CD", "DA"):
        P = np.array([(mats[x][i] @ mats[y][j]).ravel() for i in range(2) for j in range(2)])
        s = np.linalg.svd(P, compute_uv=False)
        r = int(np.sum(s > rank_tol * max(s[0], 1e-300))) if s[0] > 0 else 0
        spans[x + y] = r
        if r != 4:
            failures.append(f"span: products {x}{y} span dimension {r} < 4")
    return ConditionReport(ranks, spans, failures)
