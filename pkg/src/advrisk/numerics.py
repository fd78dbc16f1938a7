"""Scalar primitives shared by every other module.

All functions accept scalars or numpy arrays. ``sign`` is the single place
where the tie convention lives: ``sign(a) = +1`` iff ``a > 0``, else ``-1``.
"""
from __future__ import annotations

import enum
import math

import numpy as np
from scipy.special import expit, ndtr

_SQRT_HALF = math.sqrt(0.5)


class NormKind(enum.Enum):
    LINF = "linf"
    L2 = "l2"
    L1 = "l1"

    @property
    def dual(self) -> "NormKind":
        return {NormKind.LINF: NormKind.L1, NormKind.L2: NormKind.L2, NormKind.L1: NormKind.LINF}[self]

    @classmethod
    def parse(cls, value: "str | NormKind") -> "NormKind":
        if isinstance(value, NormKind):
            return value
        try:
            return cls(value.lower())
        except ValueError:
            raise ValueError(f"unknown norm {value!r}; expected one of linf, l2, l1") from None


def _check_finite(z) -> None:
    if not np.all(np.isfinite(z)):
        raise ValueError("normal_cdf requires finite input")


def normal_cdf(z):
    """Standard normal CDF.

    Scalars go through ``math.erfc`` and arrays through ``scipy.special.ndtr``;
    both are erfc-based, so the lower tail keeps full relative precision.
    """
    if np.ndim(z) == 0:
        z = float(z)
        _check_finite(z)
        return 0.5 * math.erfc(-z * _SQRT_HALF)
    z = np.asarray(z, dtype=float)
    _check_finite(z)
    return ndtr(z)


def sign(a):
    """+1 where ``a > 0`` and -1 elsewhere (including exact zeros)."""
    if np.ndim(a) == 0:
        return 1 if a > 0 else -1
    return np.where(np.asarray(a) > 0, 1, -1).astype(np.int8)


def logistic_loss(margin):
    """log(1 + exp(-margin)), overflow-safe."""
    m = np.asarray(margin, dtype=float)
    out = np.maximum(0.0, -m) + np.log1p(np.exp(-np.abs(m)))
    return float(out) if out.ndim == 0 else out


def logistic_grad(margin):
    """Derivative of ``logistic_loss`` w.r.t. the margin, i.e. ``-sigmoid(-margin)``."""
    out = -expit(-np.asarray(margin, dtype=float))
    return float(out) if out.ndim == 0 else out


def _check_labels(label) -> None:
    lab = np.asarray(label)
    if not np.all((lab == 1) | (lab == -1)):
        raise ValueError("labels must be -1 or +1")


def zero_one_loss(score, label):
    _check_labels(label)
    out = (sign(score) != np.asarray(label)).astype(np.int8)
    return int(out) if np.ndim(out) == 0 else out


def norm(v, kind: "NormKind | str") -> float:
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("norm of an empty vector is undefined")
    kind = NormKind.parse(kind)
    if kind is NormKind.LINF:
        return float(np.max(np.abs(v)))
    if kind is NormKind.L1:
        return float(np.sum(np.abs(v)))
    return float(np.linalg.norm(v))


def dual_norm(v, kind: "NormKind | str") -> float:
    """Norm of ``v`` in the dual of ``kind`` (L1 for an L-infinity budget)."""
    return norm(v, NormKind.parse(kind).dual)
