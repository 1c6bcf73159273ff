"""Rank over the complex field versus non-negative rank.

Ordinary rank bounds how far a matrix task can be compressed quantumly; the
non-negative rank bounds it classically. Lower bounds come from the ordinary
rank and from fooling sets, upper bounds from explicit non-negative
factorizations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .network import canonical_instance
from .search import SearchConfig, als_search
from .tasks import task_from_matrix, typewriter_matrix
from .tensor import DenseTensor, Domain, fit_scale

__all__ = [
    "RankReport",
    "ForcedCombination",
    "FoolingSet",
    "NNRankBounds",
    "RankError",
    "DEFAULT_RANK_TOL",
    "MAX_FOOLING_ENTRIES",
    "numerical_rank",
    "forced_row_combination",
    "fooling_set_lower_bound",
    "is_fooling_set",
    "nonneg_rank_bounds",
    "complex_compression_pair",
]

DEFAULT_RANK_TOL = 1e-9
MAX_FOOLING_ENTRIES = 64


class RankError(ValueError):
    pass


@dataclass
class RankReport:
    rank: int
    singular_values: list
    tol_used: float


def _matrix(m) -> np.ndarray:
    if isinstance(m, DenseTensor):
        m = m.data
    m = np.asarray(m)
    if m.ndim != 2 or m.size == 0:
        raise RankError(f"expected a non-empty matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise RankError("matrix has non-finite entries")
    return m


def numerical_rank(m, tol: float = DEFAULT_RANK_TOL) -> RankReport:
    """Count singular values above ``tol`` times the largest one."""
    m = _matrix(m)
    s = np.linalg.svd(m, compute_uv=False)
    smax = float(s[0]) if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
    return RankReport(rank, [float(v) for v in s], tol)


@dataclass
class ForcedCombination:
    """``row4 = lam*row1 + mu*row2 + nu*row3``, or ``dependent`` if rows 1-3 are not free."""

    dependent: bool
    lam: float = float("nan")
    mu: float = float("nan")
    nu: float = float("nan")
    residual: float = float("nan")

    @property
    def coefficients(self) -> tuple:
        return (self.lam, self.mu, self.nu)

    @property
    def has_negative(self) -> bool:
        return not self.dependent and min(self.coefficients) < 0


def forced_row_combination(m, tol: float = 1e-10) -> ForcedCombination:
    """Express the fourth row through the first three.

    When rows 1-3 are independent the coefficients are unique, and any rank-3
    factorization ``C F`` with independent F rows forces the same relation on
    the rows of C. A negative coefficient is the first sign that no
    non-negative C exists; it is not a proof of it.
    """
    m = _matrix(m)
    if m.shape[0] != 4:
        raise RankError(f"need exactly 4 rows, got {m.shape[0]}")
    head = m[:3]
    if numerical_rank(head, tol).rank < 3:
        return ForcedCombination(True)
    coef, *_ = np.linalg.lstsq(head.T, m[3], rcond=None)
    residual = float(np.linalg.norm(coef @ head - m[3]))
    if residual > tol * max(1.0, float(np.abs(m).max())):
        raise RankError(f"row 4 is not in the span of rows 1-3 (residual {residual:.3e})")
    lam, mu, nu = (float(np.real_if_close(c)) for c in coef)
    return ForcedCombination(False, lam, mu, nu, residual)


@dataclass
class FoolingSet:
    size: int
    witness: list


def is_fooling_set(m, positions) -> bool:
    """Independent check: positive entries whose cross entries never are both positive."""
    m = np.asarray(m)
    for k, (i, j) in enumerate(positions):
        if not m[i, j] > 0:
            return False
        for i2, j2 in positions[k + 1:]:
            if (i, j) == (i2, j2) or (m[i, j2] > 0 and m[i2, j] > 0):
                return False
    return True


def fooling_set_lower_bound(m, max_size: int | None = None) -> FoolingSet:
    """Largest fooling set by exhaustive branch and bound over positive entries.

    Ties go to the lexicographically first set of positions in row-major
    order. `max_size` stops the search once a set of that size is found.
    """
    m = _matrix(m)
    if np.iscomplexobj(m):
        if np.any(m.imag != 0):
            raise RankError("fooling sets need a real non-negative matrix")
        m = m.real
    if np.any(m < 0):
        raise RankError("matrix has negative entries")
    pos = [(int(i), int(j)) for i, j in zip(*np.nonzero(m > 0))]
    if len(pos) > MAX_FOOLING_ENTRIES:
        raise RankError(f"{len(pos)} positive entries; exhaustive search is capped at {MAX_FOOLING_ENTRIES}")
    compat = []
    for p, (i, j) in enumerate(pos):
        mask = 0
        for q, (k, l) in enumerate(pos):
            if q != p and not (m[i, l] > 0 and m[k, j] > 0):
                mask |= 1 << q
        compat.append(mask)
    clique = kernels.max_fooling_clique(compat, len(pos))
    witness = [pos[i] for i in clique]
    if max_size is not None:
        witness = witness[:max_size]
    return FoolingSet(len(witness), witness)


@dataclass
class NNRankBounds:
    lower: int
    lower_witness: dict
    upper: int
    upper_witness: tuple
    inconclusive_gap: bool
    attempts: dict = field(default_factory=dict)

    def summary(self) -> str:
        lines = [f"non-negative rank bounds: [{self.lower}, {self.upper}]",
                 f"lower witness: {self.lower_witness['kind']}"]
        if self.lower_witness["kind"] == "fooling set":
            lines[-1] += " " + " ".join(f"({i},{j})" for i, j in self.lower_witness["positions"])
        for r, res in sorted(self.attempts.items()):
            lines.append(f"non-negative search at r={r}: best residual {res:.6e}")
        if self.inconclusive_gap:
            lines.append("gap inconclusive: failed searches are not proofs")
        elif self.lower == self.upper:
            lines.append(f"non-negative rank = {self.lower}")
        return "\n".join(lines)


def _trivial_factors(m: np.ndarray):
    rows, cols = m.shape
    if rows <= cols:
        return np.eye(rows), m.copy()
    return m.copy(), np.eye(cols)


def nonneg_rank_bounds(m, config: SearchConfig | None = None, rank_tol: float = DEFAULT_RANK_TOL) -> NNRankBounds:
    """Bracket the non-negative rank.

    lower = max(rank, largest fooling set). upper = first inner dimension,
    counting up from lower, at which a non-negative ALS search fits ``m`` to
    ``config.success_tol``, else the trivial ``min(rows, cols)``.
    """
    m = _matrix(m)
    if np.iscomplexobj(m):
        if np.any(m.imag != 0):
            raise RankError("non-negative rank needs a real matrix")
        m = m.real
    if np.any(m < 0):
        raise RankError("matrix has negative entries")
    if not np.any(m):
        raise RankError("zero matrix")
    config = config or SearchConfig(restarts=50)
    rank = numerical_rank(m, rank_tol).rank
    fool = fooling_set_lower_bound(m)
    if fool.size > rank:
        lower, lw = fool.size, {"kind": "fooling set", "positions": fool.witness}
    else:
        lower, lw = rank, {"kind": "rank", "rank": rank}
    rows, cols = m.shape
    trivial = min(rows, cols)
    task = task_from_matrix(m, Domain.NONNEG)
    attempts = {}
    failed_inside = False
    for r in range(lower, trivial):
        net = canonical_instance("single-edge", d=max(r, 2), client_dim=(rows, cols))
        if r < 2:
            # dimension-1 channel: a product of two non-negative vectors
            res = _rank_one_fit(m)
            attempts[r] = res[0]
            if res[0] <= config.success_tol:
                return NNRankBounds(lower, lw, 1, (res[1], res[2]), False, attempts)
            failed_inside = True
            continue
        result = als_search(net, task, Domain.NONNEG, config)
        attempts[r] = result.best_residual
        if result.hit:
            C = np.asarray(result.best_assignment["U"].data)
            F = np.asarray(result.best_assignment["V"].data)
            return NNRankBounds(lower, lw, r, (C, F), failed_inside, attempts)
        failed_inside = True
    C, F = _trivial_factors(m)
    return NNRankBounds(lower, lw, trivial, (C, F), failed_inside and lower < trivial, attempts)


def _rank_one_fit(m: np.ndarray):
    """Best non-negative outer product via the leading singular pair (Perron vectors)."""
    u, s, vt = np.linalg.svd(m)
    a = np.abs(u[:, 0]) * np.sqrt(s[0])
    b = np.abs(vt[0]) * np.sqrt(s[0])
    approx = np.outer(a, b)
    fit = fit_scale(DenseTensor(("r", "c"), approx, Domain.NONNEG), DenseTensor(("r", "c"), m, Domain.NONNEG),
                    Domain.NONNEG, 1.0)
    return fit.residual, a[:, None], b[None, :]


def complex_compression_pair() -> tuple[np.ndarray, np.ndarray]:
    """Rank-3 factors C (4x3) and F (3x4) of the unnormalized typewriter matrix."""
    C = np.array([[1, 1, 0],
                  [0, 1, 1],
                  [0, 0, 1],
                  [1, 0, 0]], dtype=float)
    F = np.array([[1, 0, 0, 1],
                  [0, 1, 0, -1],
                  [0, 0, 1, 1]], dtype=float)
    assert np.array_equal(C @ F, typewriter_matrix())
    return C, F
