"""Payoff matrices, mixed strategies and the stateless primitives of a zero-sum game.

The row player minimises ``x^T A y`` and the column player maximises it.  All
entries of ``A`` live in ``[0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SIMPLEX_INPUT_TOL = 1e-6
FULLY_MIXED_TOL = 1e-9


class DimensionError(ValueError):
    """Vector or matrix shapes do not line up."""


@dataclass(frozen=True, eq=False)
class PayoffMatrix:
    """An ``n x m`` game with entries in ``[0, 1]``, at least one of them positive."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionError(f"payoff matrix must be 2-D and non-empty, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("payoff matrix has non-finite entries")
        if a.min() < 0.0 or a.max() > 1.0:
            raise ValueError("payoff entries must lie in [0, 1]")
        if not np.any(a > 0.0):
            raise ValueError("payoff matrix must be non-zero")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __eq__(self, other):
        if not isinstance(other, PayoffMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.shape, self.entries.tobytes()))

    @classmethod
    def from_csv(cls, path: str | Path) -> "PayoffMatrix":
        """Read a plain CSV file, one matrix row per line."""
        rows = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: cannot parse {line!r}") from exc
        if not rows:
            raise ValueError(f"{path}: empty matrix file")
        if len({len(r) for r in rows}) != 1:
            raise ValueError(f"{path}: ragged rows")
        return cls(np.array(rows))

    def to_csv(self, path: str | Path) -> None:
        lines = [",".join(repr(float(e)) for e in row) for row in self.entries]
        Path(path).write_text("\n".join(lines) + "\n")


def simplex_vector(weights, tol: float = SIMPLEX_INPUT_TOL) -> np.ndarray:
    """Validate a probability vector and return a renormalised, read-only copy.

    Raises ``ValueError`` for negative components or a raw sum further than
    ``tol`` from one.
    """
    w = np.array(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise DimensionError("a simplex vector must be a non-empty 1-D array")
    if not np.all(np.isfinite(w)) or w.min() < 0.0:
        raise ValueError("simplex vector components must be finite and non-negative")
    total = w.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"simplex vector sums to {total}, not 1")
    w = w / total
    w.setflags(write=False)
    return w


def uniform(d: int) -> np.ndarray:
    return np.full(d, 1.0 / d)


def unit_vector(d: int, i: int) -> np.ndarray:
    e = np.zeros(d)
    e[i] = 1.0
    return e


@dataclass(frozen=True, eq=False)
class Equilibrium:
    """A minimax pair ``(x*, y*)`` with game value ``v``."""

    row_strategy: np.ndarray
    col_strategy: np.ndarray
    value: float
    row_fully_mixed: bool
    col_fully_mixed: bool

    @classmethod
    def from_strategies(cls, x, y, value, tol: float = FULLY_MIXED_TOL) -> "Equilibrium":
        x = simplex_vector(x)
        y = simplex_vector(y)
        return cls(x, y, float(value), bool(np.all(x > tol)), bool(np.all(y > tol)))


def _matrix(A) -> np.ndarray:
    return A.entries if isinstance(A, PayoffMatrix) else np.asarray(A, dtype=float)


def _check_row(x: np.ndarray, a: np.ndarray) -> None:
    if x.shape[-1] != a.shape[0]:
        raise DimensionError(f"strategy has dimension {x.shape[-1]}, matrix has {a.shape[0]} rows")


def payoff_vector(x, A) -> np.ndarray:
    """The column player's payoff per pure column, ``x^T A``."""
    a = _matrix(A)
    x = np.asarray(x, dtype=float)
    _check_row(x, a)
    return x @ a


def f_value(x, A) -> float:
    """Best payoff the column player can get against ``x``: ``max_j (x^T A)_j``."""
    return float(payoff_vector(x, A).max())


def best_response_column(x, A) -> int:
    """Lowest-index column maximising ``x^T A``."""
    return int(np.argmax(payoff_vector(x, A)))


def relative_entropy(p, q) -> float:
    """KL divergence ``sum p log(p/q)`` in nats; ``inf`` when ``q`` misses support of ``p``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DimensionError(f"shape mismatch {p.shape} vs {q.shape}")
    support = p > 0
    if np.any(q[support] <= 0):
        return math.inf
    ps = p[support]
    return max(float(np.sum(ps * np.log(ps / q[support]))), 0.0)


def euclid_dist_sq(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DimensionError(f"shape mismatch {p.shape} vs {q.shape}")
    d = p - q
    return float(d @ d)
