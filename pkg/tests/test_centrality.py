import numpy as np
import pytest

from forumstrata.centrality import (
    betweenness_exact,
    eigenvector,
    post_degree,
    thread_degree,
)
from forumstrata.errors import DataError, InfeasibleError
from forumstrata.graph import SelectionRule, ingest, project

from util import (
    bipartite_adjacency,
    brute_force_post_counts,
    brute_force_thread_counts,
    dense_principal_eigenvector,
    enumerate_betweenness,
    make_record,
    random_population,
    random_records,
)


# -- post / thread degree -------------------------------------------------------


def test_post_degree_single_post():
    pop, _ = random_population(0, n_posts=1, n_members=1, n_threads=1)
    cv = post_degree(pop)
    assert cv.as_dict() == {"m000": 1.0}


def test_post_degree_matches_bruteforce():
    pop, records = random_population(42, n_posts=500, n_members=40, n_threads=25)
    cv = post_degree(pop)
    expected = brute_force_post_counts(records)
    assert cv.as_dict() == {m: float(c) for m, c in expected.items()}


def test_thread_degree_all_posts_one_thread():
    records = [make_record(f"p{i}", member_id="m1", thread_id="t1") for i in range(5)]
    pop = project(ingest(records), SelectionRule())
    assert thread_degree(pop).as_dict() == {"m1": 1.0}


def test_thread_degree_three_distinct_threads():
    records = [
        make_record(f"p{i}", member_id="m1", thread_id=f"t{i}") for i in range(3)
    ]
    pop = project(ingest(records), SelectionRule())
    assert thread_degree(pop).as_dict() == {"m1": 3.0}


def test_thread_degree_matches_bruteforce():
    pop, records = random_population(43, n_posts=400, n_members=35, n_threads=20)
    cv = thread_degree(pop)
    expected = brute_force_thread_counts(records)
    assert cv.as_dict() == {m: float(c) for m, c in expected.items()}


def test_thread_degree_bounded_by_post_degree():
    pop, _ = random_population(44, n_posts=300)
    pd = post_degree(pop).values
    td = thread_degree(pop).values
    assert (td <= pd).all()


def test_degree_equality_iff_single_post_per_thread():
    records = [
        make_record("p1", member_id="m1", thread_id="t1"),
        make_record("p2", member_id="m1", thread_id="t2"),
        make_record("p3", member_id="m2", thread_id="t1"),
        make_record("p4", member_id="m2", thread_id="t1"),
    ]
    pop = project(ingest(records), SelectionRule())
    pd = post_degree(pop).as_dict()
    td = thread_degree(pop).as_dict()
    assert td["m1"] == pd["m1"]          # one post per thread
    assert td["m2"] < pd["m2"]           # two posts in one thread


def test_post_degree_sums_to_population_posts():
    pop, _ = random_population(45, n_posts=350)
    assert post_degree(pop).values.sum() == pop.n_posts


def test_empty_population_rejected():
    pop, _ = random_population(46, n_posts=10)
    with pytest.raises(DataError):
        post_degree(_empty_like(pop))


def _empty_like(pop):
    import dataclasses

    return dataclasses.replace(pop, posts=())


# -- eigenvector -----------------------------------------------------------------


def test_eigenvector_star_members_equal():
    records = [
        make_record(f"p{i}", member_id=f"m{i}", thread_id="t1") for i in range(6)
    ]
    pop = project(ingest(records), SelectionRule())
    cv = eigenvector(pop, tol=1e-12, max_iter=500)
    assert np.allclose(cv.values, cv.values[0])
    assert cv.values[0] > 0


def test_eigenvector_matches_dense_solver_on_toy_graph():
    # 6 members x 6 threads, connected
    rng = np.random.default_rng(7)
    records = []
    n = 0
    for m in range(6):
        for t in sorted(rng.choice(6, size=3, replace=False).tolist() + [m % 6]):
            records.append(
                make_record(f"p{n}", member_id=f"m{m}", thread_id=f"t{t}")
            )
            n += 1
    pop = project(ingest(records), SelectionRule())
    cv = eigenvector(pop, tol=1e-13, max_iter=5000)
    dense, lam = dense_principal_eigenvector(pop)
    ours = np.concatenate(
        [cv.values, _thread_components(pop, cv)]
    )
    cosine = 1.0 - abs(float(ours @ dense) / np.linalg.norm(ours))
    assert cosine < 1e-6
    assert abs(cv.meta["lambda_max_estimate"] - lam) < 1e-6


def _thread_components(pop, cv):
    # reconstruct the thread half from one multiplication: x_t ~ A^T x_m / lam
    lam = cv.meta["lambda_max_estimate"]
    return np.asarray(pop.A.T @ cv.values) / lam


def test_eigenvector_identical_thread_sets_identical_values():
    records = [
        make_record("p1", member_id="m1", thread_id="t1"),
        make_record("p2", member_id="m1", thread_id="t2"),
        make_record("p3", member_id="m2", thread_id="t1"),
        make_record("p4", member_id="m2", thread_id="t2"),
        make_record("p5", member_id="m3", thread_id="t2"),
    ]
    pop = project(ingest(records), SelectionRule())
    cv = eigenvector(pop)
    d = cv.as_dict()
    assert abs(d["m1"] - d["m2"]) < 1e-12


def test_eigenvector_unit_norm_over_full_bipartite_vector():
    pop, _ = random_population(47, n_posts=200, connected=True)
    cv = eigenvector(pop, tol=1e-12, max_iter=2000)
    full = np.concatenate([cv.values, _thread_components(pop, cv)])
    assert abs(np.linalg.norm(full) - 1.0) < 1e-6


def test_eigenvector_member_order_invariance():
    records = random_records(seed=48, n_posts=150)
    pop_a = project(ingest(records), SelectionRule())
    pop_b = project(ingest(list(reversed(records))), SelectionRule())
    cv_a = eigenvector(pop_a, tol=1e-12, max_iter=3000).as_dict()
    cv_b = eigenvector(pop_b, tol=1e-12, max_iter=3000).as_dict()
    for m in cv_a:
        assert abs(cv_a[m] - cv_b[m]) < 1e-8


def test_eigenvector_nonconvergence_flagged():
    pop, _ = random_population(49, n_posts=300, connected=True)
    cv = eigenvector(pop, tol=1e-15, max_iter=2)
    assert cv.meta["converged"] is False
    assert cv.meta["iterations"] == 2
    assert cv.meta["residual"] > 0


def test_metrics_do_not_mutate_population():
    pop, _ = random_population(50, n_posts=200)
    before = pop.W.toarray().copy()
    post_degree(pop)
    thread_degree(pop)
    eigenvector(pop)
    betweenness_exact(pop)
    assert (pop.W.toarray() == before).all()


# -- betweenness -----------------------------------------------------------------


def test_betweenness_member_bridge_counts_ordered_pairs():
    # thread -- member -- thread path: the middle member carries both
    # ordered pairs of the two thread endpoints
    records = [
        make_record("p1", member_id="b", thread_id="ta"),
        make_record("p2", member_id="b", thread_id="tc"),
    ]
    pop = project(ingest(records), SelectionRule())
    cv = betweenness_exact(pop)
    assert cv.as_dict() == {"b": 2.0}


def test_betweenness_member_endpoints_zero():
    # member -- thread -- member path: endpoints score 0
    records = [
        make_record("p1", member_id="a", thread_id="t1"),
        make_record("p2", member_id="c", thread_id="t1"),
    ]
    pop = project(ingest(records), SelectionRule())
    cv = betweenness_exact(pop)
    assert cv.as_dict() == {"a": 0.0, "c": 0.0}


def test_betweenness_complete_bipartite_symmetric():
    records = []
    n = 0
    for m in range(2):
        for t in range(2):
            records.append(
                make_record(f"p{n}", member_id=f"m{m}", thread_id=f"t{t}")
            )
            n += 1
    pop = project(ingest(records), SelectionRule())
    values = betweenness_exact(pop).values
    assert np.allclose(values, values[0])


def test_betweenness_leaf_is_zero():
    pop, _ = random_population(51, n_posts=120, n_members=25, n_threads=12)
    cv = betweenness_exact(pop)
    td = thread_degree(pop)
    pd = post_degree(pop)
    for i, m in enumerate(pop.member_ids):
        if td.values[i] == 1:
            assert cv.values[i] == 0.0


def test_betweenness_matches_enumeration_oracle():
    for seed in (60, 61, 62):
        pop, _ = random_population(
            seed, n_posts=70, n_members=22, n_threads=18
        )
        n = pop.n_members + pop.n_threads
        assert n <= 50
        adj = bipartite_adjacency(pop)
        expected = enumerate_betweenness(adj, n)
        cv = betweenness_exact(pop)
        assert np.allclose(cv.values, expected[: pop.n_members], atol=1e-9)


def test_betweenness_refuses_large_graphs():
    pop, _ = random_population(52, n_posts=100)
    with pytest.raises(InfeasibleError, match="node_limit"):
        betweenness_exact(pop, node_limit=10)
