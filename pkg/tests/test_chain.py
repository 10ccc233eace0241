"""Chained-estimate bookkeeping: schedules, loss factors, cover graphs."""

import math

import numpy as np
import pytest

from resolventlab.chain import (
    BallCoverGraph,
    chain_constants,
    chain_find,
    gamma_aggregate,
    kappa_schedule,
    q_factors,
)


def test_kappa_schedule_three_ball_example():
    kappa = kappa_schedule(3, 1.0, 1.0, 1.0)
    assert kappa.shape == (2,)
    assert kappa[0] == pytest.approx(0.5, abs=0.0)
    assert kappa[1] == pytest.approx(1.0, abs=0.0)


def test_kappa_schedule_two_balls():
    kappa = kappa_schedule(2, 0.3, 0.07, 0.41)
    assert kappa.shape == (1,)
    assert kappa[0] == pytest.approx(0.07 / 0.41, rel=1e-15)


@pytest.mark.parametrize("L", [2, 3, 5, 8])
@pytest.mark.parametrize("c1,c2,beta", [(1.0, 1.0, 1.0), (0.3, 0.07, 0.41), (2.0, 0.5, 0.05)])
def test_selection_inequalities_hold_with_equality(L, c1, c2, beta):
    kappa = kappa_schedule(L, c1, c2, beta)
    # last ball: c2/kappa_L >= beta, with equality under this schedule
    assert c2 / kappa[-1] == pytest.approx(beta, rel=1e-12)
    # interior balls trade their gain against all downstream losses
    for i in range(L - 2):
        lhs = c2 / kappa[i]
        rhs = beta + np.sum(c1 / kappa[i + 1:])
        assert lhs == pytest.approx(rhs, rel=1e-12)
    assert np.all(np.diff(kappa) > 0.0)
    assert np.all(kappa > 0.0)


@pytest.mark.parametrize("L", [2, 3, 4, 6, 9])
def test_total_loss_closed_form(L):
    # with equality throughout, the thresholds T_ell = c2/kappa_ell satisfy
    # T_ell = (1 + c1/c2) T_{ell+1} + beta c1/c2, a geometric recursion whose
    # total loss sums to beta((1 + c1/c2)^{L-1} - 1)
    for c1, c2, beta in ((1.0, 1.0, 1.0), (0.3, 0.07, 0.41)):
        kappa = kappa_schedule(L, c1, c2, beta)
        total = float(np.sum(c1 / kappa))
        expect = beta * ((1.0 + c1 / c2) ** (L - 1) - 1.0)
        assert total == pytest.approx(expect, rel=1e-12)


def test_kappa_schedule_validation():
    with pytest.raises(ValueError):
        kappa_schedule(1, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        kappa_schedule(3, -1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        kappa_schedule(3, 1.0, 0.0, 1.0)


@pytest.mark.parametrize("L", list(range(2, 11)))
@pytest.mark.parametrize("h", [1e-1, 1e-2])
def test_q2_gain_bound(L, h):
    c1, c2, beta = 0.3, 0.07, 0.41
    kappa = kappa_schedule(L, c1, c2, beta)
    qf = q_factors(kappa, c1, c2, h)
    bound = math.log(L) - 2.0 * beta * h ** (-4.0 / 3.0)
    assert qf.log_q2 <= bound
    # on the equality schedule the bound saturates up to log(L-1) vs log L
    exact = math.log(L - 1) - 2.0 * beta * h ** (-4.0 / 3.0)
    assert qf.log_q2 == pytest.approx(exact, rel=1e-9)
    assert qf.chain_length == L


def test_q_factor_scaling_in_h():
    # halving h scales every exponent by 2^(4/3)
    c1, c2, beta = 1.0, 1.0, 1.0
    kappa = kappa_schedule(4, c1, c2, beta)
    qa = q_factors(kappa, c1, c2, 0.02)
    qb = q_factors(kappa, c1, c2, 0.01)
    scale = 2.0 ** (4.0 / 3.0)
    assert qb.log_q3 == pytest.approx(scale * qa.log_q3, rel=1e-12)
    ga = qa.log_q2 - math.log(3)
    gb = qb.log_q2 - math.log(3)
    assert gb == pytest.approx(scale * ga, rel=1e-9)


def test_q1_dominated_by_full_suffix():
    # Q1's largest term carries the whole chain's loss, which is exactly Q3
    c1, c2, beta = 0.3, 0.07, 0.41
    kappa = kappa_schedule(5, c1, c2, beta)
    qf = q_factors(kappa, c1, c2, 0.05)
    assert qf.log_q1 >= qf.log_q3
    assert qf.log_q1 == pytest.approx(qf.log_q3, abs=1.0)  # within log(L-1)


def test_chain_constants_positive_and_ordered():
    cc = chain_constants(3.5, 0.2)
    assert cc.c1 > 0.0 and cc.c2 > 0.0
    # the loss constant dominates the gain constant for any inputs: the
    # annulus of c1 starts closer to the centre than that of c2
    assert cc.c1 > cc.c2
    lam, rho = 3.5, 0.2
    assert cc.c1 == pytest.approx(math.exp(-lam * rho / 2) - math.exp(-3 * lam * rho), rel=1e-15)
    assert cc.c2 == pytest.approx(math.exp(-3 * lam * rho) - math.exp(-4 * lam * rho), rel=1e-15)
    with pytest.raises(ValueError):
        chain_constants(0.0, 0.2)
    with pytest.raises(ValueError):
        chain_constants(3.5, -1.0)


def test_graph_validation_and_connectivity():
    g = BallCoverGraph(4, ((1, 2), (2, 3), (3, 4)), rho=0.2, lambda_carleman=3.0)
    assert g.is_connected
    gd = BallCoverGraph(4, ((1, 2), (3, 4)), rho=0.2, lambda_carleman=3.0)
    assert not gd.is_connected
    with pytest.raises(ValueError):
        BallCoverGraph(3, ((1, 1),), rho=0.2, lambda_carleman=3.0)
    with pytest.raises(ValueError):
        BallCoverGraph(3, ((1, 4),), rho=0.2, lambda_carleman=3.0)
    with pytest.raises(ValueError):
        BallCoverGraph(3, ((1, 2), (2, 1)), rho=0.2, lambda_carleman=3.0)
    with pytest.raises(ValueError):
        BallCoverGraph(0, (), rho=0.2, lambda_carleman=3.0)


def test_chain_find_shortest_and_errors():
    g = BallCoverGraph(6, ((1, 2), (2, 3), (3, 4), (2, 5), (5, 6), (1, 6)),
                       rho=0.2, lambda_carleman=3.0)
    assert chain_find(g, 1) == [1]
    assert chain_find(g, 6) == [1, 6]
    assert chain_find(g, 4) == [1, 2, 3, 4]
    with pytest.raises(ValueError):
        chain_find(g, 7)
    gd = BallCoverGraph(5, ((1, 2), (3, 4), (4, 5)), rho=0.2, lambda_carleman=3.0)
    with pytest.raises(ValueError, match="not reachable"):
        chain_find(gd, 4)


def test_chain_find_is_shortest_on_random_graph():
    rng = np.random.default_rng(20260814)
    n = 50
    # random connected graph: a spanning tree plus extra edges
    edges = set()
    for i in range(2, n + 1):
        j = int(rng.integers(1, i))
        edges.add((j, i))
    for _ in range(60):
        i, j = sorted(int(v) for v in rng.integers(1, n + 1, size=2))
        if i != j:
            edges.add((i, j))
    g = BallCoverGraph(n, tuple(sorted(edges)), rho=0.1, lambda_carleman=2.0)
    assert g.is_connected
    # BFS distances computed independently
    adj = g.neighbours()
    dist = {1: 0}
    frontier = [1]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    for t in range(1, n + 1):
        chain = chain_find(g, t)
        assert chain[0] == 1 and chain[-1] == t
        assert len(chain) == dist[t] + 1
        for a, b in zip(chain, chain[1:]):
            key = (min(a, b), max(a, b))
            assert key in edges


def test_gamma_aggregate_values_and_padding():
    cc = chain_constants(3.5, 0.2)
    g = BallCoverGraph(6, ((1, 2), (2, 3), (3, 4), (2, 5), (5, 6)),
                       rho=0.2, lambda_carleman=3.5)
    gamma, per = gamma_aggregate(g, cc.c1, cc.c2, 1.0)
    assert per[1] == 0.0
    # chain lengths: 2 -> L=2, 3/5 -> L=3, 4/6 -> L=4
    for t, L in ((2, 2), (3, 3), (5, 3), (4, 4), (6, 4)):
        expect = 1.0 * ((1.0 + cc.c1 / cc.c2) ** (L - 1) - 1.0)
        assert per[t] == pytest.approx(expect, rel=1e-12)
    assert gamma == pytest.approx(1.01 * max(per.values()), rel=1e-15)


def test_gamma_monotone_under_edge_addition():
    # adding an edge can only shorten chains, hence lower every gamma_i
    rng = np.random.default_rng(7)
    n = 20
    edges = set()
    for i in range(2, n + 1):
        edges.add((int(rng.integers(1, i)), i))
    g1 = BallCoverGraph(n, tuple(sorted(edges)), rho=0.1, lambda_carleman=2.0)
    extra = set(edges)
    while len(extra) < len(edges) + 8:
        i, j = sorted(int(v) for v in rng.integers(1, n + 1, size=2))
        if i != j:
            extra.add((i, j))
    g2 = BallCoverGraph(n, tuple(sorted(extra)), rho=0.1, lambda_carleman=2.0)
    cc = chain_constants(2.0, 0.1)
    gamma1, per1 = gamma_aggregate(g1, cc.c1, cc.c2, 0.3)
    gamma2, per2 = gamma_aggregate(g2, cc.c1, cc.c2, 0.3)
    for t in per1:
        assert per2[t] <= per1[t] + 1e-12
    assert gamma2 <= gamma1 + 1e-12


def test_star_cover_symmetry():
    # every leaf of a star sits at chain length 2 from the anchor
    n = 9
    g = BallCoverGraph(n, tuple((1, i) for i in range(2, n + 1)),
                       rho=0.3, lambda_carleman=1.0)
    cc = chain_constants(1.0, 0.3)
    gamma, per = gamma_aggregate(g, cc.c1, cc.c2, 0.5)
    leaf_values = {per[t] for t in range(2, n + 1)}
    assert len(leaf_values) == 1
    expect = 0.5 * (cc.c1 / cc.c2)
    assert per[2] == pytest.approx(expect, rel=1e-12)
