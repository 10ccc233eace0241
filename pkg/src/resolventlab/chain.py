"""Chained local estimates on a ball cover of a compact piece.

A global bound over a compact region is assembled from local Carleman-type
estimates on a finite cover by metric balls.  Each ball carries the same
local constants ``c1 < c2`` (derived from the cover radius ``rho`` and the
spectral parameter ``lambda_carleman``); information propagates from an
anchor ball along edges of the intersection graph, and the loss factors
``Q1, Q2, Q3`` multiply together along each chain.  Choosing the free
exponents ``kappa_ell`` by a backward equality recursion makes the chain
lossless up to a single ``exp(-2 beta h^{-4/3})`` gain per chain.

Everything here is exact arithmetic on small arrays; ``h`` enters only
through the factor ``h^{-4/3}`` in the exponents, handled in log space so
that extreme values of ``h`` cannot overflow.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "BallCoverGraph",
    "ChainConstants",
    "chain_constants",
    "chain_find",
    "kappa_schedule",
    "q_factors",
    "gamma_aggregate",
]


@dataclass(frozen=True)
class BallCoverGraph:
    """Intersection graph of a finite ball cover.

    Balls are numbered ``1..n_balls``; ``edges`` lists unordered pairs of
    balls whose doubles intersect.  Ball 1 is the anchor (the ball where
    the a-priori estimate lives); chains are built outward from it.
    """

    n_balls: int
    edges: tuple[tuple[int, int], ...]
    rho: float
    lambda_carleman: float
    is_connected: bool = field(init=False)

    def __post_init__(self):
        if self.n_balls < 1:
            raise ValueError("cover needs at least one ball")
        if self.rho <= 0.0:
            raise ValueError("cover radius rho must be positive")
        if self.lambda_carleman <= 0.0:
            raise ValueError("lambda_carleman must be positive")
        seen = set()
        for e in self.edges:
            if len(e) != 2:
                raise ValueError(f"edge {e!r} is not a pair")
            i, j = e
            if not (1 <= i <= self.n_balls and 1 <= j <= self.n_balls):
                raise ValueError(f"edge {e!r} references a ball outside 1..{self.n_balls}")
            if i == j:
                raise ValueError(f"self-loop on ball {i}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        object.__setattr__(self, "is_connected", len(self._bfs_order()) == self.n_balls)

    def neighbours(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {i: [] for i in range(1, self.n_balls + 1)}
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        for lst in adj.values():
            lst.sort()
        return adj

    def _bfs_order(self) -> list[int]:
        adj = self.neighbours()
        seen = {1}
        order = [1]
        queue = deque([1])
        while queue:
            cur = queue.popleft()
            for nxt in adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    order.append(nxt)
                    queue.append(nxt)
        return order


@dataclass(frozen=True)
class ChainConstants:
    """Local constants shared by every ball of a cover."""

    c1: float
    c2: float
    rho: float
    lambda_carleman: float


def chain_constants(lambda_carleman: float, rho: float) -> ChainConstants:
    """Local gain/loss constants for one ball of radius ``rho``.

    ``c1`` measures the worst-case loss across the annulus between radius
    ``rho/2`` and ``3 rho`` of a ball, ``c2`` the guaranteed gain between
    ``3 rho`` and ``4 rho``; both are differences of exponentials in
    ``lambda_carleman * rho`` and are positive for any positive inputs.
    """
    lam = float(lambda_carleman)
    rho = float(rho)
    if lam <= 0.0 or rho <= 0.0:
        raise ValueError("lambda_carleman and rho must be positive")
    c1 = math.exp(-lam * rho / 2.0) - math.exp(-3.0 * lam * rho)
    c2 = math.exp(-3.0 * lam * rho) - math.exp(-4.0 * lam * rho)
    if not (c1 > 0.0 and c2 > 0.0):
        raise ValueError("degenerate chain constants; reduce lambda_carleman * rho")
    return ChainConstants(c1=c1, c2=c2, rho=rho, lambda_carleman=lam)


def chain_find(graph: BallCoverGraph, target: int) -> list[int]:
    """Shortest chain of overlapping balls from the anchor to ``target``.

    Breadth-first search from ball 1; returns the list of ball indices
    starting at 1 and ending at ``target``.  Raises if ``target`` cannot
    be reached, naming the stranded component.
    """
    if not (1 <= target <= graph.n_balls):
        raise ValueError(f"target ball {target} outside 1..{graph.n_balls}")
    adj = graph.neighbours()
    parent: dict[int, int] = {1: 0}
    queue = deque([1])
    while queue:
        cur = queue.popleft()
        if cur == target:
            chain = [cur]
            while parent[chain[-1]] != 0:
                chain.append(parent[chain[-1]])
            return chain[::-1]
        for nxt in adj[cur]:
            if nxt not in parent:
                parent[nxt] = cur
                queue.append(nxt)
    # Collect the component containing the target for the error message.
    comp = {target}
    queue = deque([target])
    while queue:
        cur = queue.popleft()
        for nxt in adj[cur]:
            if nxt not in comp:
                comp.add(nxt)
                queue.append(nxt)
    raise ValueError(
        f"ball {target} is not reachable from the anchor; stranded component "
        f"{sorted(comp)} has no edge into the rest of the cover"
    )


def kappa_schedule(L: int, c1: float, c2: float, beta: float) -> np.ndarray:
    """Exponent schedule ``kappa_2..kappa_L`` for a chain of ``L`` balls.

    The free exponents must satisfy, for ``ell = 2..L-1``,

        c2 / kappa_ell  >=  beta + sum_{nu=ell+1}^{L} c1 / kappa_nu

    together with ``c2 / kappa_L >= beta``.  Taking every inequality with
    equality maximises each ``kappa_ell`` (hence minimises the loss
    factors), and turns the constraint into a backward recursion on the
    thresholds ``T_ell = c2 / kappa_ell``:

        T_L = beta,      T_ell = beta + (c1 / c2) * sum_{nu>ell} T_nu ...

    computed below in its stable cumulative form.  Returns the array
    ``[kappa_2, ..., kappa_L]`` (length ``L - 1``), increasing in ``ell``.
    """
    if L < 2:
        raise ValueError("a chain needs at least two balls")
    if min(c1, c2, beta) <= 0.0:
        raise ValueError("c1, c2, beta must be positive")
    T = np.empty(L - 1)  # T[i] = c2 / kappa_{i+2}
    T[-1] = beta
    tail = beta  # sum over nu > ell of c1 / kappa_nu, built backwards
    for i in range(L - 3, -1, -1):
        T[i] = beta + (c1 / c2) * tail
        tail += T[i]
    return c2 / T


@dataclass(frozen=True)
class QFactors:
    """Log-domain loss/gain factors of one chain at a given ``h``."""

    log_q1: float
    log_q2: float
    log_q3: float
    chain_length: int


def q_factors(schedule: np.ndarray, c1: float, c2: float, h: float) -> QFactors:
    """Loss factors ``Q1, Q2, Q3`` of a chain, in log space.

    With ``g = 2 h^{-4/3}`` and the exponent schedule ``kappa_2..kappa_L``:

        Q1 = sum_{ell=2}^{L} exp( g * sum_{nu=ell}^{L} c1 / kappa_nu )
        Q2 = exp(-g c2 / kappa_L)                                (L = 2)
           = that + sum_{ell=2}^{L-1} exp(-g c2 / kappa_ell
                      + g * sum_{nu=ell+1}^{L} c1 / kappa_nu)    (L > 2)
        Q3 = exp( g * sum_{nu=2}^{L} c1 / kappa_nu )

    On the equality schedule every exponent inside ``Q2`` collapses to
    ``-g * beta``, so ``log Q2 = log(L-1) - g beta <= log L - g beta``;
    this is asserted because the chaining argument relies on it.
    """
    kappa = np.asarray(schedule, dtype=float)
    L = kappa.size + 1
    if L < 2:
        raise ValueError("schedule must cover balls 2..L")
    if h <= 0.0:
        raise ValueError("h must be positive")
    g = 2.0 * h ** (-4.0 / 3.0)
    loss = c1 / kappa  # c1 / kappa_ell for ell = 2..L
    gain = c2 / kappa
    # suffix[i] = sum_{nu = i+2}^{L} c1 / kappa_nu  (suffix including ell itself)
    suffix = np.cumsum(loss[::-1])[::-1]
    log_q1 = float(logsumexp(g * suffix))
    log_q3 = float(g * suffix[0])
    # Q2: ell = L term uses the plain gain; ell = 2..L-1 terms trade the
    # gain at ell against the downstream losses.
    exps = [-g * gain[-1]]
    for i in range(L - 2):  # ell = i + 2 in 2..L-1
        down = suffix[i + 1]
        exps.append(-g * gain[i] + g * down)
    log_q2 = float(logsumexp(np.array(exps)))
    bound = math.log(L) - g * _beta_of(schedule, c1, c2)
    if log_q2 > bound + 1e-9 * max(1.0, abs(bound)):
        raise AssertionError(
            f"chain gain violated: log Q2 = {log_q2} exceeds log L - 2 beta h^(-4/3) = {bound}"
        )
    return QFactors(log_q1=log_q1, log_q2=log_q2, log_q3=log_q3, chain_length=L)


def _beta_of(schedule: np.ndarray, c1: float, c2: float) -> float:
    """Recover ``beta`` from an equality schedule (its last threshold)."""
    kappa = np.asarray(schedule, dtype=float)
    return float(c2 / kappa[-1])


def gamma_aggregate(
    graph: BallCoverGraph,
    c1: float,
    c2: float,
    beta: float,
    targets: Sequence[int] | None = None,
) -> tuple[float, dict[int, float]]:
    """Aggregate chain loss over a cover.

    For each target ball the chain from the anchor contributes a total
    loss exponent ``gamma_i = sum_{nu=2}^{L_i} c1 / kappa_nu`` under that
    chain's equality schedule.  The cover-wide exponent is the worst one
    padded by 1 percent, so a single global factor ``exp(gamma h^{-4/3})``
    dominates every chain simultaneously.

    Returns ``(gamma, per_target)`` where ``per_target`` maps each target
    to its ``gamma_i`` (0 for the anchor itself).
    """
    if min(c1, c2, beta) <= 0.0:
        raise ValueError("c1, c2, beta must be positive")
    if targets is None:
        targets = range(1, graph.n_balls + 1)
    per: dict[int, float] = {}
    for t in targets:
        chain = chain_find(graph, int(t))
        L = len(chain)
        if L == 1:
            per[int(t)] = 0.0
            continue
        kappa = kappa_schedule(L, c1, c2, beta)
        per[int(t)] = float(np.sum(c1 / kappa))
    gamma = 1.01 * max(per.values()) if per else 0.0
    return gamma, per
