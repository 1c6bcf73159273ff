import numpy as np
import pytest

from netfactor.network import canonical_instance
from netfactor.search import (NO_HIT_BANNER, SQUARE_CORNER_AXES, SearchConfig, _AlsProblem,
                              _als_restart, als_search, format_restart_table, square_cross_reduced_search,
                              square_cross_task, square_family_assignment, square_necessary_conditions,
                              square_reduced_objective)
from netfactor.tasks import cross_pairs_task, subset_state_task, typewriter_task
from netfactor.tensor import DenseTensor, Domain
from netfactor.verify import AssignmentError, NodeAssignment, realized_tensor, verify_assignment

from oracles import det4

TYPEWRITER_NET = canonical_instance("single-edge", d=3, client_dim=4)


@pytest.mark.parametrize("kw", [dict(restarts=0), dict(max_sweeps=0), dict(success_tol=0), dict(conv_tol=-1)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SearchConfig(**kw)


def test_typewriter_complex_hits_and_verifies():
    res = als_search(TYPEWRITER_NET, typewriter_task(Domain.COMPLEX), Domain.COMPLEX, SearchConfig(restarts=5))
    assert res.hit and res.best_residual < 1e-6
    rep = verify_assignment(TYPEWRITER_NET, typewriter_task(Domain.COMPLEX), res.best_assignment, 1e-6)
    assert rep.matched


def test_typewriter_nonneg_stays_away():
    res = als_search(TYPEWRITER_NET, typewriter_task(), Domain.NONNEG, SearchConfig(restarts=10))
    assert not res.hit and res.best_residual > 1e-3
    assert res.verdict() == NO_HIT_BANNER
    assert not res.best_assignment.negativity()


def test_nonneg_search_needs_nonneg_task():
    with pytest.raises(AssignmentError):
        als_search(TYPEWRITER_NET, typewriter_task(Domain.COMPLEX), Domain.NONNEG, SearchConfig(restarts=1))


def test_star_ghz_nonneg_hits():
    net = canonical_instance("star", n=3, d=2)
    res = als_search(net, subset_state_task("ghz", 3, 2), Domain.NONNEG, SearchConfig(restarts=20))
    assert res.hit


def test_seed_determinism_and_threads():
    task = typewriter_task()
    a = als_search(TYPEWRITER_NET, task, Domain.NONNEG, SearchConfig(restarts=6, seed=7))
    b = als_search(TYPEWRITER_NET, task, Domain.NONNEG, SearchConfig(restarts=6, seed=7))
    c = als_search(TYPEWRITER_NET, task, Domain.NONNEG, SearchConfig(restarts=6, seed=7, threads=3))
    assert a.residual_per_restart == b.residual_per_restart == c.residual_per_restart
    assert format_restart_table(a) == format_restart_table(c)
    d = als_search(TYPEWRITER_NET, task, Domain.NONNEG, SearchConfig(restarts=6, seed=8))
    assert d.residual_per_restart != a.residual_per_restart


@pytest.mark.parametrize("domain", [Domain.NONNEG, Domain.COMPLEX])
def test_residual_monotone_per_restart(domain):
    task = typewriter_task(domain)
    problem = _AlsProblem(TYPEWRITER_NET, task, domain)
    for k in range(5):
        trace = []
        _als_restart(problem, SearchConfig(max_sweeps=200), k, trace)
        diffs = np.diff(trace)
        assert np.all(diffs <= 1e-12 * max(trace))


def test_table_format():
    res = als_search(TYPEWRITER_NET, typewriter_task(), Domain.NONNEG, SearchConfig(restarts=2))
    lines = format_restart_table(res).splitlines()
    assert lines[0] == "restart\tresidual\tsweeps" and len(lines) == 3


def test_reduced_objective_equals_contraction(rng):
    net = canonical_instance("square", d_internal=2, d_client=2)
    task = square_cross_task()
    for _ in range(5):
        z = rng.standard_normal(15) + 1j * rng.standard_normal(15)
        real = realized_tensor(net, square_family_assignment(z), task.client_ids).data
        f = np.linalg.norm((real - task.tensor.data).ravel()) ** 2
        assert square_reduced_objective(z) == pytest.approx(f, rel=1e-10)


def test_reduced_search_small_run_fails():
    res = square_cross_reduced_search(SearchConfig(restarts=4, max_sweeps=300))
    assert not res.hit and res.method == "square-reduced"
    assert res.best_residual > 1e-3
    assert res.best_residual == min(res.residual_per_restart)


def _square_assignment(mats):
    return NodeAssignment({v: DenseTensor(SQUARE_CORNER_AXES[v], np.stack(mats[v]), Domain.COMPLEX)
                           for v in "ABCD"}, Domain.COMPLEX)


def test_conditions_reject_rank_one_corner(rng):
    mats = {v: [rng.standard_normal((2, 2)) for _ in range(2)] for v in "ABCD"}
    assert square_necessary_conditions(_square_assignment(mats)).passes
    for v in "ABCD":
        for i in range(2):
            bad = {w: list(m) for w, m in mats.items()}
            bad[v][i] = np.outer(rng.standard_normal(2), rng.standard_normal(2))
            rep = square_necessary_conditions(_square_assignment(bad))
            assert not rep.passes
            assert any(f.startswith(f"rank 2: {v}^{i}") for f in rep.failures)


def test_span_condition_against_determinant(rng):
    for _ in range(20):
        mats = {v: [rng.standard_normal((2, 2)) for _ in range(2)] for v in "ABCD"}
        if rng.random() < 0.5:
            # B^1 proportional to B^0 makes the AB products dependent
            mats["B"][1] = 2.0 * mats["B"][0]
        rep = square_necessary_conditions(_square_assignment(mats))
        P = np.array([(mats["A"][i] @ mats["B"][j]).ravel() for i in range(2) for j in range(2)])
        full = abs(det4(P)) > 1e-9
        assert (rep.spans["AB"] == 4) == full


def test_butterfly_cross_task_shape():
    t = cross_pairs_task([("S1", "T1"), ("S2", "T2")])
    assert t.client_ids == ["S1", "T1", "S2", "T2"]


@pytest.mark.slow
def test_butterfly_nonneg_search_finds_coding():
    net = canonical_instance("butterfly")
    res = als_search(net, cross_pairs_task([("S1", "T1"), ("S2", "T2")]), Domain.NONNEG,
                     SearchConfig(restarts=200, seed=0))
    assert res.hit
