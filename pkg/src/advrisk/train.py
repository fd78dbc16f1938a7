"""Full-batch gradient descent for linear classifiers.

Objective (logistic loss ``l``, margins ``m_i = y_i w.x_i``)::

    J(w) = mean l(m_i) + lam * mean[ l(m_i - eps ||w||_*) - l(m_i) ]

The inner maximisation is exact for linear models, so no attack loop is
needed. ``||w||_1`` is differentiated with the subgradient ``sign(w_i)`` and 0
at ``w_i = 0``; ``||w||_2`` with ``w / ||w||`` and 0 at the origin.

Plain subgradient descent is not a descent method near the kink, so the
returned classifier is the iterate with the lowest objective (earliest on
ties). The full objective history and, on request, every iterate are kept.
"""
from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

from .model import Dataset, GaussianMixture, LinearClassifier, PerturbationBudget, chunk_rng
from .numerics import NormKind, logistic_grad, logistic_loss, normal_cdf, sign


class TrainingDiverged(RuntimeError):
    def __init__(self, iteration: int):
        super().__init__(f"objective became non-finite at iteration {iteration}")
        self.iteration = iteration


@dataclasses.dataclass(frozen=True)
class GaussianInit:
    scale: float
    seed: int = 0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("init scale must be positive")


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    lam: float = 0.0
    budget: PerturbationBudget = PerturbationBudget(NormKind.LINF, 0.0)
    lr: float = 0.05
    iters: int = 2000
    init: Optional[GaussianInit] = None  # None means zeros
    record_trace: bool = False

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")


@dataclasses.dataclass(frozen=True)
class TrainResult:
    w_final: LinearClassifier
    objective_history: np.ndarray
    trace: Optional[np.ndarray] = None
    best_iter: int = 0

    @property
    def w_last(self) -> np.ndarray:
        if self.trace is None:
            raise ValueError("trace was not recorded")
        return self.trace[-1]


def initial_weights(d: int, init: Optional[GaussianInit]) -> np.ndarray:
    if init is None:
        return np.zeros(d)
    return init.scale * chunk_rng(init.seed, "init", 0).standard_normal(d)


def _dual_and_subgrad(w: np.ndarray, kind: NormKind):
    if kind is NormKind.LINF:
        return float(np.abs(w).sum()), np.sign(w)
    nrm = float(np.linalg.norm(w))
    return nrm, (w / nrm if nrm > 0 else np.zeros_like(w))


def objective(yx: np.ndarray, w: np.ndarray, lam: float, budget: PerturbationBudget) -> float:
    return objective_and_gradient(yx, w, lam, budget)[0]


def gradient(yx: np.ndarray, w: np.ndarray, lam: float, budget: PerturbationBudget) -> np.ndarray:
    return objective_and_gradient(yx, w, lam, budget)[1]


def objective_and_gradient(yx: np.ndarray, w: np.ndarray, lam: float, budget: PerturbationBudget):
    n = yx.shape[0]
    m = yx @ w
    dual, sub = _dual_and_subgrad(w, budget.kind)
    z = m - budget.eps * dual
    base = logistic_loss(m)
    adv = logistic_loss(z) - base
    dm = logistic_grad(m)
    dz = logistic_grad(z)
    j = float(base.mean() + lam * adv.mean())
    # written as base + lam * (adversarial part) so that eps = 0 or lam = 0
    # reproduces the standard gradient bit for bit
    g_adv = ((dz - dm) @ yx) / n - budget.eps * dz.mean() * sub
    g = (dm @ yx) / n + lam * g_adv
    return j, g


def _signed(data: Dataset) -> np.ndarray:
    if data.n == 0:
        raise ValueError("cannot train on an empty dataset")
    return data.y[:, None] * data.X


def _run(w, iters, lr, fg, record):
    history = np.empty(iters + 1)
    trace = np.empty((iters + 1, w.size)) if record else None
    best_w, best_j, best_t = w.copy(), np.inf, 0
    for t in range(iters + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            j, g = fg(w)
        if not np.isfinite(j):
            raise TrainingDiverged(t)
        history[t] = j
        if trace is not None:
            trace[t] = w
        if j < best_j:
            best_w, best_j, best_t = w.copy(), j, t
        if t < iters:
            w = w - lr * g
    return TrainResult(LinearClassifier(best_w), history, trace, best_t)


def train(data: Dataset, cfg: TrainConfig) -> TrainResult:
    yx = _signed(data)
    w0 = initial_weights(data.d, cfg.init)
    return _run(w0, cfg.iters, cfg.lr,
                lambda w: objective_and_gradient(yx, w, cfg.lam, cfg.budget),
                cfg.record_trace)


def train_standard(data: Dataset, lr: float = 0.05, iters: int = 2000,
                   init: Optional[GaussianInit] = None, record_trace: bool = False) -> TrainResult:
    """Plain logistic-regression GD, kept separate as a reference for ``lam = 0``."""
    yx = _signed(data)
    n = yx.shape[0]

    def fg(w):
        m = yx @ w
        return float(logistic_loss(m).mean()), (logistic_grad(m) @ yx) / n

    return _run(initial_weights(data.d, init), iters, lr, fg, record_trace)


def write_trace_csv(result: TrainResult, path) -> None:
    if result.trace is None:
        raise ValueError("trace was not recorded; set record_trace=True")
    d = result.trace.shape[1]
    lines = [",".join(["iter", "objective"] + [f"w{i}" for i in range(d)])]
    for t, (j, w) in enumerate(zip(result.objective_history, result.trace)):
        lines.append(",".join([str(t), repr(float(j))] + [repr(float(v)) for v in w]))
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def check_gradient(data: Dataset, cfg: TrainConfig, w, h: float = 1e-5) -> float:
    """Max relative error between the analytic gradient and central differences."""
    w = np.asarray(w, dtype=float)
    if cfg.budget.kind is NormKind.LINF and cfg.budget.eps > 0 and np.any(np.abs(w) <= 10 * h):
        raise ValueError("weights too close to the L1 kink for a finite-difference check")
    yx = _signed(data)
    analytic = gradient(yx, w, cfg.lam, cfg.budget)
    worst = 0.0
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        fd = (objective(yx, w + e, cfg.lam, cfg.budget) - objective(yx, w - e, cfg.lam, cfg.budget)) / (2 * h)
        denom = max(abs(fd), abs(analytic[i]), 1e-8)
        worst = max(worst, abs(fd - analytic[i]) / denom)
    return worst


# --------------------------------------------------------------------------
# structured checks on the Gaussian mixture


@dataclasses.dataclass(frozen=True)
class InvarianceReport:
    max_offsupport_drift: float
    heldout_risk: object  # RiskReport
    bayes_risk: float
    radv: object  # RiskReport
    eps: float
    w_final: np.ndarray
    offsupport_l1: float


def verify_lowdim_invariance(model: GaussianMixture, cfg: TrainConfig, data: Dataset,
                             heldout, eps: Optional[float] = None) -> InvarianceReport:
    """Train on low-dimensional data and measure what happens off the support.

    ``heldout`` is a Dataset or an iterable of chunks used for the standard
    risk and for R_adv w.r.t. the Bayes rule at ``eps`` (default
    ``2 ||w*||^2 / sqrt(d - k)``).
    """
    from .risk import Loss, mc_many

    if model.support_mask is None:
        raise ValueError("low-dimensional invariance needs a support mask")
    if cfg.lam != 0:
        raise ValueError("the invariance check is about standard training (lam = 0)")
    cfg = dataclasses.replace(cfg, record_trace=True)
    result = train(data, cfg)
    off = ~model.mask
    drift = float(np.max(np.abs(result.trace[:, off] - result.trace[0, off]), initial=0.0))
    k = int(model.mask.sum())
    if eps is None:
        eps = 2 * float(model.w_star @ model.w_star) / np.sqrt(model.d - k)
    budget = PerturbationBudget(NormKind.LINF, eps)
    w = result.w_final
    std, radv = mc_many([("standard", w, None, budget, Loss.ZERO_ONE),
                         ("radv", w, model.w_star, budget, Loss.ZERO_ONE)], heldout)
    bayes = normal_cdf(-float(np.linalg.norm(model.w_star)) / model.sigma)
    return InvarianceReport(drift, std, bayes, radv, eps, w.w, float(np.abs(w.w[off]).sum()))


@dataclasses.dataclass(frozen=True)
class RestrictedClassReport:
    gap: float
    risk_restricted: float
    risk_bayes: float
    c_grid: np.ndarray
    flip_prob: np.ndarray
    flip_se: np.ndarray
    agree_flip_prob: np.ndarray
    c_star: Optional[float]
    max_shift_error: float
    max_bayes_shift: float
    n: int

    def prob_at(self, c: float) -> float:
        return float(self.flip_prob[int(np.argmin(np.abs(self.c_grid - c)))])


def restricted_class_check(d: int, n: int, seed: int, c_grid=None, target: float = 0.95,
                           chunks=None) -> RestrictedClassReport:
    """Top-half truncation of an all-equal w* and the structured perturbation.

    The perturbation is ``-t * eps`` on the first half and ``+t * eps`` on the
    second half, ``t = sign(w~ . x)``: it leaves ``w* . x`` unchanged and moves
    ``w~ . x`` toward zero by ``eps * sqrt(d/2)``. ``flip_prob`` is the
    fraction of points whose w~ prediction changes; ``agree_flip_prob`` further
    requires that w~ and w* agreed before the perturbation.
    """
    from .model import iter_chunks
    from .risk import cf_standard_risk

    if d % 2:
        raise ValueError("d must be even")
    half = d // 2
    w_star = np.full(d, 1 / np.sqrt(half))
    model = GaussianMixture(w_star, 1.0)
    w_t = np.where(np.arange(d) < half, w_star, 0.0)
    risk_t = cf_standard_risk(w_t, model).value
    risk_b = cf_standard_risk(w_star, model).value
    if c_grid is None:
        c_grid = np.round(np.arange(0.0, 5.0001, 0.05), 10)
    c_grid = np.asarray(c_grid, dtype=float)
    pattern = np.where(np.arange(d) < half, -1.0, 1.0)  # gamma / eps for t = +1

    flips = np.zeros(c_grid.size)
    agree_flips = np.zeros(c_grid.size)
    shift_err = 0.0
    bayes_shift = 0.0
    total = 0
    source = chunks if chunks is not None else iter_chunks(model, n, seed)
    for chunk in source:
        ft = chunk.X @ w_t
        fs = chunk.X @ w_star
        t = sign(ft)
        agree = t == sign(fs)
        for j, c in enumerate(c_grid):
            eps = c / np.sqrt(d)
            gamma_dot_wt = eps * float(pattern @ w_t)
            gamma_dot_ws = eps * float(pattern @ w_star)
            shift_err = max(shift_err, abs(gamma_dot_wt + eps * np.sqrt(half)))
            bayes_shift = max(bayes_shift, abs(gamma_dot_ws))
            flipped = sign(ft + t * gamma_dot_wt) != t
            flips[j] += flipped.sum()
            agree_flips[j] += (flipped & agree).sum()
        total += chunk.n
    p = flips / total
    se = np.sqrt(p * (1 - p) / total)
    hit = np.flatnonzero(p >= target)
    c_star = float(c_grid[hit[0]]) if hit.size else None
    return RestrictedClassReport(risk_t - risk_b, risk_t, risk_b, c_grid, p, se,
                                 agree_flips / total, c_star, shift_err, bayes_shift, total)
