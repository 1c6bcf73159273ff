import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from netfactor.tasks import typewriter_matrix
from netfactor.tensor import (ContractionPlan, DenseTensor, Domain, TensorError, contract, fit_scale,
                              frobenius_distance, kronecker_delta, match_up_to_scale, plan_shared)

from oracles import direct_frobenius, nested_loop_contract


def T(labels, data, domain=Domain.COMPLEX):
    return DenseTensor(tuple(labels), np.asarray(data), domain)


def test_domain_parse_aliases():
    assert Domain.parse("nonneg") is Domain.NONNEG
    assert Domain.parse("complex") is Domain.COMPLEX
    with pytest.raises(ValueError):
        Domain.parse("reals")


def test_nonneg_rejects_negative_entries():
    with pytest.raises(TensorError):
        T("ab", [[1, -1], [0, 0]], Domain.NONNEG)


def test_duplicate_labels_rejected():
    with pytest.raises(TensorError):
        T("aa", np.eye(2))


def test_delta_times_delta_is_delta():
    out = contract(plan_shared([kronecker_delta("ab", 2), kronecker_delta("bc", 2)]))
    assert out.labels == ("a", "c")
    assert np.array_equal(out.data, np.eye(2))
    assert out.domain is Domain.NONNEG


def test_trace_of_four_identities_is_two():
    ring = [T("ab", np.eye(2)), T("bc", np.eye(2)), T("cd", np.eye(2)), T("da", np.eye(2))]
    out = contract(plan_shared(ring))
    assert out.labels == ()
    assert out.data == pytest.approx(2)


def test_explicit_bond_pairs_of_different_labels():
    a = T("xi", np.arange(6).reshape(2, 3))
    b = T("jy", np.arange(12).reshape(3, 4))
    out = contract(ContractionPlan([a, b], [("i", "j")], ("x", "y")))
    assert np.allclose(out.data, a.data @ b.data)


def test_contract_errors():
    with pytest.raises(TensorError):
        contract(ContractionPlan([], [], ()))
    with pytest.raises(TensorError):
        contract(plan_shared([T("ab", np.ones((2, 2))), T("bc", np.ones((3, 2)))]))
    with pytest.raises(TensorError):
        contract(ContractionPlan([T("ab", np.ones((2, 2)))], [], ("a", "a")))


def test_random_trees_match_nested_loops(rng):
    for _ in range(20):
        n = int(rng.integers(2, 5))
        tensors = []
        bond = itertools.count()
        free = []
        labels = [[] for _ in range(n)]
        for i in range(1, n):
            j = int(rng.integers(0, i))
            l = f"b{next(bond)}"
            labels[i].append(l)
            labels[j].append(l)
        for i in range(n):
            if rng.random() < 0.7 or not labels[i]:
                l = f"f{i}"
                labels[i].append(l)
                free.append(l)
        dims = {}
        for ls in labels:
            for l in ls:
                dims.setdefault(l, int(rng.integers(2, 5)))
        for ls in labels:
            shape = [dims[l] for l in ls]
            tensors.append((ls, rng.standard_normal(shape) + 1j * rng.standard_normal(shape)))
        out = contract(plan_shared([T(ls, a) for ls, a in tensors], free))
        assert np.abs(out.data - nested_loop_contract(tensors, free)).max() < 1e-12


def test_schedules_agree(rng):
    a = T("ab", rng.standard_normal((2, 3)))
    b = T("bc", rng.standard_normal((3, 4)))
    c = T("cd", rng.standard_normal((4, 2)))
    plan = plan_shared([a, b, c], ("a", "d"))
    ref = contract(plan).data
    for sched in ([(0, 1), (0, 1)], [(1, 2), (0, 1)], [(0, 2), (0, 1)]):
        assert np.abs(contract(plan, sched).data - ref).max() < 1e-10


def test_frobenius_examples(rng):
    t = T("ab", rng.standard_normal((3, 3)))
    assert frobenius_distance(t, t) == 0
    zero = DenseTensor.zeros("ab", (2, 2))
    assert frobenius_distance(kronecker_delta("ab", 2), zero) == pytest.approx(np.sqrt(2))
    for _ in range(10):
        x = rng.standard_normal((2, 3, 2)) + 1j * rng.standard_normal((2, 3, 2))
        y = rng.standard_normal((2, 3, 2)) + 1j * rng.standard_normal((2, 3, 2))
        got = frobenius_distance(T("abc", x), T("abc", y))
        assert abs(got - direct_frobenius(x, y)) < 1e-14


def test_frobenius_aligns_labels(rng):
    x = rng.standard_normal((2, 3))
    assert frobenius_distance(T("ab", x), T("ba", x.T)) == 0
    with pytest.raises(TensorError):
        frobenius_distance(T("ab", x), T("ac", x))


def test_match_examples():
    tw = typewriter_matrix()
    m = match_up_to_scale(T("uv", 2 * tw, Domain.NONNEG), T("uv", tw, Domain.NONNEG), Domain.NONNEG, 1e-12)
    assert m.scale == pytest.approx(2) and m.residual == pytest.approx(0, abs=1e-15)
    neg = T("uv", -tw)
    assert match_up_to_scale(neg, T("uv", tw), Domain.NONNEG, 1e-12) is None
    assert not fit_scale(neg, T("uv", tw), Domain.NONNEG, 1e-12).admissible
    m = match_up_to_scale(T("uv", (1 + 1j) * tw), T("uv", tw), Domain.COMPLEX, 1e-12)
    assert m.scale == pytest.approx(1 + 1j) and m.residual < 1e-15


def test_match_zero_target_raises():
    with pytest.raises(TensorError):
        fit_scale(T("a", [1, 0]), T("a", [0, 0]), Domain.COMPLEX, 1e-9)


def test_zero_candidate_never_matches():
    m = fit_scale(T("a", [0, 0]), T("a", [1, 0]), Domain.COMPLEX, 1e-9)
    assert not m.matched and m.residual == 1.0


arrays = st.lists(st.floats(-3, 3, allow_nan=False), min_size=6, max_size=6).map(
    lambda v: np.array(v).reshape(2, 3))


@given(arrays)
def test_match_self_is_identity(x):
    if not np.any(x):
        return
    m = fit_scale(T("ab", x), T("ab", x), Domain.COMPLEX, 1e-12)
    assert m.scale == pytest.approx(1) and m.residual < 1e-14


@given(arrays, arrays, arrays)
def test_triangle_inequality(x, y, z):
    a, b, c = T("ab", x), T("ab", y), T("ab", z)
    assert frobenius_distance(a, c) <= frobenius_distance(a, b) + frobenius_distance(b, c) + 1e-12


@given(st.lists(st.floats(0, 2, allow_nan=False), min_size=12, max_size=12))
def test_nonneg_closure(v):
    a = T("ab", np.array(v[:6]).reshape(2, 3), Domain.NONNEG)
    b = T("bc", np.array(v[6:]).reshape(3, 2), Domain.NONNEG)
    out = contract(plan_shared([a, b]))
    assert out.domain is Domain.NONNEG and np.all(out.data >= 0)


@given(st.permutations([0, 1, 2]))
def test_order_independence(perm):
    rng = np.random.default_rng(5)
    ts = [T("ab", rng.standard_normal((2, 3))), T("bc", rng.standard_normal((3, 2))),
          T("cd", rng.standard_normal((2, 2)))]
    ref = contract(plan_shared(ts, ("a", "d"))).data
    got = contract(plan_shared([ts[i] for i in perm], ("a", "d"))).data
    assert np.abs(got - ref).max() < 1e-10
