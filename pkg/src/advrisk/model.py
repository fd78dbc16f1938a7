"""Data types and seeded samplers for the two testbeds.

Sampling is chunked: rows ``[c*CHUNK, (c+1)*CHUNK)`` are drawn from a Philox
stream whose key is derived from ``(seed, distribution)`` and whose counter
starts at ``c``. Any chunk can therefore be generated independently of the
others, and a dataset of ``n`` rows is a prefix of any larger one drawn with
the same seed.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .numerics import NormKind, sign

CHUNK = 4096


@dataclasses.dataclass(frozen=True)
class LinearClassifier:
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        if w.size < 1:
            raise ValueError("classifier needs dimension >= 1")
        if not np.all(np.isfinite(w)):
            raise ValueError("classifier weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def d(self) -> int:
        return self.w.size

    def score(self, X):
        return np.asarray(X, dtype=float) @ self.w

    def predict(self, X):
        return sign(self.score(X))


@dataclasses.dataclass(frozen=True)
class PerturbationBudget:
    kind: NormKind
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind.parse(self.kind))
        if self.kind is NormKind.L1:
            raise ValueError("perturbation budgets are linf or l2")
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise ValueError(f"eps must be a finite nonnegative number, got {self.eps}")
        object.__setattr__(self, "eps", float(self.eps))


@dataclasses.dataclass(frozen=True)
class GaussianMixture:
    """x | y ~ N(y * w_star, sigma^2 * D), D = diag(support_mask) or identity."""

    w_star: np.ndarray
    sigma: float
    support_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.array(self.w_star, dtype=float).reshape(-1)
        if w.size < 1 or not np.all(np.isfinite(w)):
            raise ValueError("w_star must be a finite nonempty vector")
        # sigma = 0 is allowed for sampling (points sit exactly at +-w_star);
        # the closed forms in risk.py refuse it
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be finite and nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "w_star", w)
        if self.support_mask is not None:
            mask = np.array(self.support_mask, dtype=bool).reshape(-1)
            if mask.size != w.size:
                raise ValueError("support_mask must match w_star in length")
            if np.any(w[~mask] != 0):
                raise ValueError("w_star must vanish outside the support mask")
            mask.setflags(write=False)
            object.__setattr__(self, "support_mask", mask)

    @property
    def d(self) -> int:
        return self.w_star.size

    @property
    def mask(self) -> np.ndarray:
        if self.support_mask is None:
            return np.ones(self.d, dtype=bool)
        return self.support_mask

    @property
    def name(self) -> str:
        return "mixture" if self.support_mask is None else "mixture-lowdim"


@dataclasses.dataclass(frozen=True)
class SquaresDistribution2D:
    """Uniform on two 2x2 squares centred at (+-2, 0); labels flipped w.p. 0.3."""

    flip: float = 0.3
    center: float = 2.0
    side: float = 2.0
    name: str = "squares"

    @property
    def d(self) -> int:
        return 2

    @property
    def bayes_risk(self) -> float:
        return self.flip

    @property
    def margin(self) -> float:
        return self.center - self.side / 2


@dataclasses.dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    distribution: str = "custom"
    seed: Optional[int] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
        if not np.all((y == 1) | (y == -1)):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(np.int8))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self):
        return self.n


_STREAM_TAGS = {"mixture": 1, "mixture-lowdim": 1, "squares": 2, "init": 3}


def chunk_rng(seed: int, stream: str, chunk: int) -> np.random.Generator:
    """Generator for one chunk of one stream; independent of every other chunk."""
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    key = np.random.SeedSequence([seed, _STREAM_TAGS.get(stream, 0)]).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, 0, chunk]))


def _chunk_bounds(n: int):
    if n < 1:
        raise ValueError("sample count must be >= 1")
    for c in range(math.ceil(n / CHUNK)):
        yield c, min(CHUNK, n - c * CHUNK)


def _mixture_chunk(model: GaussianMixture, seed: int, c: int) -> tuple:
    rng = chunk_rng(seed, model.name, c)
    y = np.where(rng.random(CHUNK) < 0.5, 1, -1).astype(np.int8)
    mask = model.mask
    X = np.zeros((CHUNK, model.d))
    X[:, mask] = model.sigma * rng.standard_normal((CHUNK, int(mask.sum())))
    X += y[:, None] * model.w_star
    return X, y


def _squares_chunk(dist: SquaresDistribution2D, seed: int, c: int) -> tuple:
    rng = chunk_rng(seed, dist.name, c)
    side = np.where(rng.random(CHUNK) < 0.5, 1.0, -1.0)
    half = dist.side / 2
    X = np.empty((CHUNK, 2))
    X[:, 0] = side * dist.center + rng.uniform(-half, half, CHUNK)
    X[:, 1] = rng.uniform(-half, half, CHUNK)
    p_pos = np.where(side > 0, 1 - dist.flip, dist.flip)
    y = np.where(rng.random(CHUNK) < p_pos, 1, -1).astype(np.int8)
    return X, y


def iter_chunks(dist, n: int, seed: int) -> Iterator[Dataset]:
    """Yield ``n`` samples as consecutive Dataset chunks of at most CHUNK rows."""
    make = _squares_chunk if isinstance(dist, SquaresDistribution2D) else _mixture_chunk
    for c, rows in _chunk_bounds(n):
        X, y = make(dist, seed, c)
        yield Dataset(X[:rows], y[:rows], dist.name, seed)


def sample(dist, n: int, seed: int) -> Dataset:
    parts = list(iter_chunks(dist, n, seed))
    X = np.concatenate([p.X for p in parts])
    y = np.concatenate([p.y for p in parts])
    return Dataset(X, y, dist.name, seed)


def sample_mixture(model: GaussianMixture, n: int, seed: int) -> Dataset:
    return sample(model, n, seed)


def sample_squares(n: int, seed: int, dist: SquaresDistribution2D = SquaresDistribution2D()) -> Dataset:
    return sample(dist, n, seed)


def bayes_classifier(model: GaussianMixture) -> LinearClassifier:
    if not np.any(model.w_star != 0):
        raise ValueError("Bayes classifier undefined for a zero mean vector")
    return LinearClassifier(model.w_star.copy())


def squares_bayes_classifier() -> LinearClassifier:
    """sign(x_1); ties at x_1 = 0 have probability zero."""
    return LinearClassifier([1.0, 0.0])


def write_csv(data: Dataset, path) -> None:
    path = Path(path)
    header = [f"x{i}" for i in range(data.d)] + ["y"]
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row, label in zip(data.X, data.y):
                writer.writerow([repr(float(v)) for v in row] + [int(label)])
    except OSError as exc:
        raise OSError(f"cannot write dataset to {path}: {exc}") from exc


def read_csv(path, distribution: str = "csv") -> Dataset:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "y":
            raise ValueError(f"{path}: last column must be 'y'")
        rows = [list(map(float, r)) for r in reader if r]
    arr = np.asarray(rows, dtype=float).reshape(-1, len(header))
    return Dataset(arr[:, :-1], arr[:, -1].astype(int), distribution)
