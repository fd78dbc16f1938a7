"""Standard and adversarial risks of linear classifiers.

Closed forms are available for the Gaussian mixture; everything else is a
Monte Carlo mean over a dataset (or a stream of dataset chunks) with an exact
inner maximisation from :mod:`advrisk.attack`.

Naming: ``worst_case`` is E[sup_delta loss(x + delta, y)], ``gadv`` is the
excess form (worst case minus standard, label y), ``hadv`` is the excess form
against the label g(x), and ``radv`` is the base-classifier-relative risk that
only counts flips preserving g's label on points where f already agrees with g.
"""
from __future__ import annotations

import csv
import dataclasses
import enum
import io
import math
from typing import Iterable, Optional, Union

import numpy as np

from .attack import constrained_flips
from .model import Dataset, GaussianMixture, LinearClassifier, PerturbationBudget
from .numerics import NormKind, dual_norm, logistic_loss, normal_cdf, sign


class RiskName(enum.Enum):
    STANDARD_01 = "Standard01"
    STANDARD_LOGISTIC = "StandardLogistic"
    WORST_CASE_01 = "WorstCase01"
    WORST_CASE_LOGISTIC = "WorstCaseLogistic"
    GADV_01 = "GAdv01"
    GADV_LOGISTIC = "GAdvLogistic"
    HADV_01 = "HAdv01"
    HADV_LOGISTIC = "HAdvLogistic"
    RADV_01 = "RAdv01"
    RADV_BOUND = "RAdv01Bound"
    RESTRICTED_FLIP = "RestrictedFlip"


class Loss(enum.Enum):
    ZERO_ONE = "01"
    LOGISTIC = "logistic"


_NAMES = {
    ("standard", Loss.ZERO_ONE): RiskName.STANDARD_01,
    ("standard", Loss.LOGISTIC): RiskName.STANDARD_LOGISTIC,
    ("worst_case", Loss.ZERO_ONE): RiskName.WORST_CASE_01,
    ("worst_case", Loss.LOGISTIC): RiskName.WORST_CASE_LOGISTIC,
    ("gadv", Loss.ZERO_ONE): RiskName.GADV_01,
    ("gadv", Loss.LOGISTIC): RiskName.GADV_LOGISTIC,
    ("hadv", Loss.ZERO_ONE): RiskName.HADV_01,
    ("hadv", Loss.LOGISTIC): RiskName.HADV_LOGISTIC,
    ("radv", Loss.ZERO_ONE): RiskName.RADV_01,
}
RISKS = ("standard", "worst_case", "gadv", "hadv", "radv")


class UnsupportedRisk(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class RiskReport:
    risk_name: RiskName
    value: float
    kind: str = "ClosedForm"  # or "MonteCarlo"
    n: int = 0
    std_err: float = 0.0
    is_bound: bool = False
    eps: Optional[float] = None
    lam: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.std_err < 0:
            raise ValueError("std_err must be nonnegative")

    def with_context(self, **kw) -> "RiskReport":
        return dataclasses.replace(self, **kw)

    def csv_row(self) -> list:
        def fmt(v):
            return "" if v is None else repr(float(v))

        kind = "Bound" if self.is_bound else self.kind
        seed = "" if self.seed is None else str(self.seed)
        return [self.risk_name.value, kind, repr(float(self.value)), repr(float(self.std_err)),
                str(self.n), fmt(self.eps), fmt(self.lam), seed]


CSV_HEADER = ["risk_name", "kind", "value", "std_err", "n", "eps", "lambda", "seed"]


def reports_to_csv(reports: Iterable[RiskReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()


# --------------------------------------------------------------------------
# closed forms for the Gaussian mixture


def _w(clf) -> np.ndarray:
    return clf.w if isinstance(clf, LinearClassifier) else np.asarray(clf, dtype=float)


def _support_norm(w: np.ndarray, model: GaussianMixture) -> float:
    if model.sigma == 0:
        raise ValueError("closed forms need sigma > 0")
    if w.size != model.d:
        raise ValueError(f"dimension mismatch: classifier d={w.size}, model d={model.d}")
    nrm = float(np.linalg.norm(w[model.mask]))
    if nrm == 0:
        raise ValueError("classifier is zero on the model's support")
    return nrm


def cf_standard_risk(w, model: GaussianMixture) -> RiskReport:
    w = _w(w)
    z = -float(w @ model.w_star) / (model.sigma * _support_norm(w, model))
    return RiskReport(RiskName.STANDARD_01, normal_cdf(z))


def cf_worst_case_adv_risk(w, model: GaussianMixture, budget: PerturbationBudget) -> RiskReport:
    w = _w(w)
    num = budget.eps * dual_norm(w, budget.kind) - float(w @ model.w_star)
    val = normal_cdf(num / (model.sigma * _support_norm(w, model)))
    return RiskReport(RiskName.WORST_CASE_01, val, eps=budget.eps)


def cf_excess_adv_risk(w, model: GaussianMixture, budget: PerturbationBudget) -> RiskReport:
    worst = cf_worst_case_adv_risk(w, model, budget).value
    base = cf_standard_risk(w, model).value
    return RiskReport(RiskName.GADV_01, worst - base, eps=budget.eps)


def cf_offsupport_flip(w, model: GaussianMixture, budget: PerturbationBudget) -> RiskReport:
    """P(0 < y w.x < eps ||w_off||_*): flips reachable by moving only where w_star = 0.

    Such perturbations leave ``w_star . x`` untouched, so every counted point
    is an R_adv event w.r.t. the Bayes rule; this is a lower bound on R_adv.
    """
    w = _w(w)
    off = model.w_star == 0
    scale = model.sigma * _support_norm(w, model)
    mean = float(w @ model.w_star)
    reach = budget.eps * dual_norm(w[off], budget.kind) if off.any() else 0.0
    val = normal_cdf((reach - mean) / scale) - normal_cdf(-mean / scale)
    return RiskReport(RiskName.RESTRICTED_FLIP, val, eps=budget.eps)


def cf_new_adv_risk_bound(w, model: GaussianMixture, budget: PerturbationBudget) -> RiskReport:
    """Upper bound on R_adv w.r.t. the Bayes rule sign(w_star . x) (L-infinity)."""
    if budget.kind is not NormKind.LINF:
        raise UnsupportedRisk("the R_adv bound is stated for L-infinity budgets")
    w = _w(w)
    if w.size != model.d:
        raise ValueError(f"dimension mismatch: classifier d={w.size}, model d={model.d}")
    v = w - model.w_star
    if not np.any(v):
        return RiskReport(RiskName.RADV_BOUND, 0.0, is_bound=True, eps=budget.eps)
    num = budget.eps * float(np.abs(v).sum()) - float(v @ model.w_star)
    den = model.sigma * float(np.linalg.norm(v[model.mask]))
    if den == 0:
        val = 1.0 if num > 0 else 0.0
    else:
        val = normal_cdf(num / den)
    return RiskReport(RiskName.RADV_BOUND, val, is_bound=True, eps=budget.eps)


# --------------------------------------------------------------------------
# Monte Carlo


class _Mean:
    """Streaming mean / sample standard error."""

    def __init__(self):
        self.n = 0
        self.total = 0.0
        self.total_sq = 0.0

    def add(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        self.n += values.size
        self.total += float(values.sum())
        self.total_sq += float(np.square(values).sum())

    @property
    def mean(self) -> float:
        return self.total / self.n

    @property
    def std_err(self) -> float:
        if self.n < 2:
            return 0.0
        var = (self.total_sq - self.n * self.mean**2) / (self.n - 1)
        return math.sqrt(max(var, 0.0) / self.n)


def _loss(scores, labels, loss: Loss):
    if loss is Loss.ZERO_ONE:
        return (sign(scores) != labels).astype(float)
    return logistic_loss(labels * scores)


def per_sample(which: str, f, g, X: np.ndarray, y: np.ndarray, budget: PerturbationBudget,
               loss: Loss = Loss.ZERO_ONE) -> np.ndarray:
    """Per-sample contribution whose mean is the requested risk."""
    loss = Loss(loss)
    fw = _w(f)
    if X.shape[1] != fw.size:
        raise ValueError(f"dimension mismatch: classifier d={fw.size}, data d={X.shape[1]}")
    fx = X @ fw
    if which == "standard":
        return _loss(fx, y, loss)
    drop = budget.eps * dual_norm(fw, budget.kind) if budget.eps > 0 else 0.0
    if which in ("worst_case", "gadv"):
        worst = _loss(fx - y * drop, y, loss)
        return worst if which == "worst_case" else worst - _loss(fx, y, loss)
    if g is None:
        raise ValueError(f"risk {which!r} needs a base classifier g")
    gw = _w(g)
    if gw.size != fw.size:
        raise ValueError(f"dimension mismatch: f has d={fw.size}, g has d={gw.size}")
    s = sign(X @ gw)
    if which == "hadv":
        return _loss(fx - s * drop, s, loss) - _loss(fx, s, loss)
    if which == "radv":
        if loss is not Loss.ZERO_ONE:
            raise UnsupportedRisk("R_adv is implemented for the 0/1 loss only")
        if budget.kind is not NormKind.LINF:
            raise UnsupportedRisk("R_adv needs an L-infinity budget (constrained attack)")
        agree = sign(fx) == s
        return (agree & constrained_flips(fw, gw, X, budget.eps)).astype(float)
    raise ValueError(f"unknown risk {which!r}; expected one of {RISKS}")


DataLike = Union[Dataset, Iterable[Dataset]]


def _chunks(data: DataLike):
    return [data] if isinstance(data, Dataset) else data


def mc_risk(which: str, f, g, data: DataLike, budget: PerturbationBudget,
            loss: Loss = Loss.ZERO_ONE) -> RiskReport:
    loss = Loss(loss)
    if (which, loss) not in _NAMES:
        if which == "radv":
            raise UnsupportedRisk("R_adv is implemented for the 0/1 loss only")
        raise ValueError(f"unknown risk {which!r}")
    acc = _Mean()
    seed = None
    for chunk in _chunks(data):
        seed = chunk.seed
        acc.add(per_sample(which, f, g, chunk.X, chunk.y, budget, loss))
    if acc.n == 0:
        raise ValueError("empty dataset")
    return RiskReport(_NAMES[which, loss], acc.mean, "MonteCarlo", acc.n, acc.std_err,
                      eps=budget.eps, seed=seed)


def mc_many(requests, data: DataLike) -> list:
    """Several risks in one pass over ``data``.

    ``requests`` is a list of ``(which, f, g, budget, loss)`` tuples; useful when
    ``data`` is a generator too large to materialise.
    """
    accs = [_Mean() for _ in requests]
    seed = None
    for chunk in _chunks(data):
        seed = chunk.seed
        for acc, (which, f, g, budget, loss) in zip(accs, requests):
            acc.add(per_sample(which, f, g, chunk.X, chunk.y, budget, loss))
    return [RiskReport(_NAMES[r[0], Loss(r[4])], a.mean, "MonteCarlo", a.n, a.std_err,
                       eps=r[3].eps, seed=seed) for a, r in zip(accs, requests)]


# --------------------------------------------------------------------------
# regularisation bounds


@dataclasses.dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: float
    rhs: float
    std_err: float
    k: float = 3.0

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.k * self.std_err

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def describe(self) -> str:
        status = "ok" if self.holds else "FAILED"
        return (f"{self.name}: {self.lhs:.6g} <= {self.rhs:.6g} "
                f"(+{self.k:g}*se={self.k * self.std_err:.3g}) slack={self.slack:.3g} [{status}]")


@dataclasses.dataclass(frozen=True)
class RegBoundReport:
    risk: RiskReport
    risk01: RiskReport
    gadv: RiskReport
    radv_surrogate: RiskReport
    dual: float
    lam: float
    checks: tuple

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)


def check_reg_bounds(f, g, data: DataLike, budget: PerturbationBudget, lam: float) -> RegBoundReport:
    """Dual-norm sandwich for the logistic adversarial objective of a linear f.

    Checks, with 3 standard-error bands,
    ``(eps/2) R01 ||w||_* <= G_adv <= eps ||w||_*`` and
    ``R_adv <= eps ||w||_*`` where the surrogate R_adv is the logistic loss
    increase at the worst label-g score drop. Each side is also reported in the
    lambda-weighted objective form ``R + lam * (.)``.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    fw = _w(f)
    reqs = [("standard", fw, None, budget, Loss.LOGISTIC),
            ("standard", fw, None, budget, Loss.ZERO_ONE),
            ("gadv", fw, None, budget, Loss.LOGISTIC),
            ("hadv", fw, g, budget, Loss.LOGISTIC)]
    risk, risk01, gadv, hadv = mc_many(reqs, data)
    dual = dual_norm(fw, budget.kind)
    upper = budget.eps * dual
    lower = 0.5 * budget.eps * risk01.value * dual
    checks = (
        BoundCheck("G_adv <= eps*||w||_*", gadv.value, upper, gadv.std_err),
        BoundCheck("(eps/2)*R01*||w||_* <= G_adv", lower, gadv.value, gadv.std_err),
        BoundCheck("R_adv(surrogate) <= eps*||w||_*", hadv.value, upper, hadv.std_err),
        BoundCheck("R + lam*G_adv <= R + lam*eps*||w||_*", risk.value + lam * gadv.value,
                   risk.value + lam * upper, lam * gadv.std_err),
        BoundCheck("R + lam*(eps/2)*R01*||w||_* <= R + lam*G_adv", risk.value + lam * lower,
                   risk.value + lam * gadv.value, lam * gadv.std_err),
    )
    return RegBoundReport(risk, risk01, gadv, hadv.with_context(lam=lam), dual, lam, checks)
