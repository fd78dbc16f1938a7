"""Exact worst-case perturbations for linear classifiers.

The unconstrained problem ``min_{|delta| <= eps} y w.(x + delta)`` is solved by
the dual-norm corner. The constrained problem adds the half-space
``s g.(x + delta) >= 0`` with ``s = sign(g.x)``; over an L-infinity box this is
a fractional knapsack: start at the unconstrained corner and, if the half-space
is violated, buy back constraint slack from the cheapest coordinates first,
where the price of coordinate ``i`` is ``w_i / g_i`` objective units per unit of
slack.

A perturbation counts as flipping the constrained problem only if the optimum
is strictly negative. On the boundary ``s g.(x+delta) = 0`` the base classifier
itself would change sign (for ``s = +1``) or ``f`` would sit exactly at zero
(for ``s = -1``), so neither counts.
"""
from __future__ import annotations

import dataclasses
import itertools

import numpy as np

from .model import LinearClassifier, PerturbationBudget
from .numerics import NormKind, dual_norm, sign

_FEAS_TOL = 1e-9
ORACLE_MAX_DIM = 12


class UnsupportedBudget(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class AttackResult:
    delta: np.ndarray
    achieved_score: float
    flipped: bool
    constraint_active: bool = False


def _weights(clf) -> np.ndarray:
    return clf.w if isinstance(clf, LinearClassifier) else np.asarray(clf, dtype=float)


def _check_dims(w, x):
    if w.shape != x.shape:
        raise ValueError(f"dimension mismatch: w has {w.size} entries, x has {x.size}")


def _strictly_negative(value, scale):
    # roundoff guard for the f == g case, where the optimum is exactly 0
    return value < -1e-12 * (1.0 + scale)


def attack_unconstrained(w, x, y: int, budget: PerturbationBudget) -> AttackResult:
    """Minimiser of ``y * w.(x + delta)`` over the budget ball."""
    w = _weights(w)
    x = np.asarray(x, dtype=float)
    _check_dims(w, x)
    if y not in (1, -1):
        raise ValueError("label must be -1 or +1")
    eps = budget.eps
    if budget.kind is NormKind.LINF:
        delta = -y * eps * np.sign(w)
    else:
        nrm = np.linalg.norm(w)
        delta = -y * eps * w / nrm if nrm > 0 else np.zeros_like(w)
    score = float(w @ x) - y * eps * dual_norm(w, budget.kind)
    return AttackResult(delta, score, bool(sign(score) != y))


def attack_constrained(w, g, x, budget: PerturbationBudget) -> AttackResult:
    """Minimiser of ``s w.(x + delta)`` over the eps-box with ``s g.(x + delta) >= 0``."""
    if budget.kind is not NormKind.LINF:
        raise UnsupportedBudget("the constrained attack supports L-infinity budgets only")
    w, gw = _weights(w), _weights(g)
    x = np.asarray(x, dtype=float)
    _check_dims(w, x)
    _check_dims(gw, x)
    eps = budget.eps
    s = sign(float(gw @ x))
    if s * float(gw @ x) < 0:
        raise AssertionError("base point infeasible for its own sign")

    delta = -eps * np.sign(s * w)
    violation = -s * float(gw @ (x + delta))
    active = violation > 0
    if active:
        target = eps * np.sign(s * gw)
        capacity = s * gw * (target - delta)
        movable = (gw != 0) & (capacity > 0)
        idx = np.flatnonzero(movable)
        rate = w[idx] / gw[idx]
        for i in idx[np.argsort(rate, kind="stable")]:
            if violation <= 0:
                break
            if capacity[i] <= violation:
                delta[i] = target[i]
                violation -= capacity[i]
            else:
                delta[i] += np.sign(target[i] - delta[i]) * violation / abs(gw[i])
                violation = 0.0
        if violation > _FEAS_TOL * (1.0 + eps * np.abs(gw).sum()):
            raise AssertionError("repair capacity exhausted although delta = 0 is feasible")
    score = float(w @ (x + delta))
    scale = abs(float(w @ x)) + eps * np.abs(w).sum()
    return AttackResult(delta, score, bool(_strictly_negative(s * score, scale)), bool(active))


@dataclasses.dataclass(frozen=True)
class _RepairTable:
    base_shift: float  # eps * sum_i g_i sign(w_i): slack lost at the corner
    cum_capacity: np.ndarray
    cum_cost: np.ndarray
    rate: np.ndarray


def _repair_table(w: np.ndarray, g: np.ndarray, eps: float) -> _RepairTable:
    # capacity and price of each coordinate are the same for s = +1 and s = -1
    capacity = eps * (np.abs(g) + g * np.sign(w))
    keep = (g != 0) & (capacity > 0)
    rate = w[keep] / g[keep]
    order = np.argsort(rate, kind="stable")
    cap = capacity[keep][order]
    rate = rate[order]
    return _RepairTable(
        base_shift=eps * float(g @ np.sign(w)),
        cum_capacity=np.concatenate([[0.0], np.cumsum(cap)]),
        cum_cost=np.concatenate([[0.0], np.cumsum(cap * rate)]),
        rate=rate,
    )


def constrained_scores(w, g, X, eps: float):
    """Vectorised constrained optimum for every row of ``X``.

    Returns ``(s, opt)`` where ``s = sign(g.x)`` and ``opt`` is the minimum of
    ``s w.(x + delta)`` under the L-infinity budget and sign-preservation
    constraint. Agrees with :func:`attack_constrained` row by row.
    """
    w, g = _weights(w), _weights(g)
    X = np.asarray(X, dtype=float)
    gx = X @ g
    s = sign(gx).astype(float)
    table = _repair_table(w, g, eps)
    corner = s * (X @ w) - eps * np.abs(w).sum()
    violation = np.maximum(0.0, -(s * gx - table.base_shift))
    cc = table.cum_capacity
    j = np.clip(np.searchsorted(cc, violation, side="left"), 1, max(len(cc) - 1, 1))
    if table.rate.size:
        cost = table.cum_cost[j - 1] + table.rate[j - 1] * (violation - cc[j - 1])
        cost = np.where(violation > 0, cost, 0.0)
    else:
        cost = np.zeros_like(violation)
    return s, corner + cost


def constrained_flips(w, g, X, eps: float) -> np.ndarray:
    w_arr = _weights(w)
    X = np.asarray(X, dtype=float)
    s, opt = constrained_scores(w_arr, g, X, eps)
    scale = np.abs(X @ w_arr) + eps * np.abs(w_arr).sum()
    return _strictly_negative(opt, scale)


def attack_oracle(w, x, budget: PerturbationBudget, y: int | None = None, g=None) -> AttackResult:
    """Brute-force optimum by enumerating box corners and constraint edge points.

    Without ``g`` this minimises ``y w.(x + delta)``; with ``g`` it minimises
    ``s w.(x + delta)`` subject to ``s g.(x + delta) >= 0``.
    """
    if budget.kind is not NormKind.LINF:
        raise UnsupportedBudget("the oracle enumerates L-infinity boxes only")
    w = _weights(w)
    x = np.asarray(x, dtype=float)
    _check_dims(w, x)
    d = w.size
    if d > ORACLE_MAX_DIM:
        raise ValueError(f"oracle refuses d={d} > {ORACLE_MAX_DIM}")
    eps = budget.eps
    corners = eps * np.array(list(itertools.product((-1.0, 1.0), repeat=d)))

    if g is None:
        if y not in (1, -1):
            raise ValueError("label must be -1 or +1")
        obj = y * ((x + corners) @ w)
        best = corners[np.argmin(obj)]
        score = float(w @ (x + best))
        return AttackResult(best, score, bool(sign(score) != y))

    gw = _weights(g)
    _check_dims(gw, x)
    s = sign(float(gw @ x))
    cands = [corners]
    if d > 1:
        sub = eps * np.array(list(itertools.product((-1.0, 1.0), repeat=d - 1)))
    else:
        sub = np.zeros((1, 0))
    for j in range(d):
        if gw[j] == 0:
            continue
        others = np.delete(np.arange(d), j)
        edge = np.zeros((sub.shape[0], d))
        edge[:, others] = sub
        edge[:, j] = -(gw @ x + sub @ gw[others]) / gw[j]
        cands.append(edge[np.abs(edge[:, j]) <= eps * (1 + 1e-12)])
    cands = np.concatenate(cands)
    slack = s * ((x + cands) @ gw)
    cands = cands[slack >= -_FEAS_TOL * (1.0 + np.abs(gw).sum() * (eps + np.abs(x).max()))]
    obj = s * ((x + cands) @ w)
    k = int(np.argmin(obj))
    best = cands[k]
    score = float(w @ (x + best))
    scale = abs(float(w @ x)) + eps * np.abs(w).sum()
    active = bool(s * float(gw @ (x - eps * np.sign(s * w))) < 0)
    return AttackResult(best, score, bool(_strictly_negative(s * score, scale)), active)
