"""No-regret update rules for the row player.

Every rule works on arrays whose last axis indexes pure strategies, so a batch
of independent games can be advanced in one call.  Multiplicative rules keep
normalised log-weights; the normaliser is never formed explicitly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

ALGORITHMS = ("mwu", "ftrl", "lmwu", "omwu", "adahedge", "random")
SCHEDULES = ("constant", "inverse-sqrt", "custom")
LMWU_SAFE_STEP = 1.0 / 3.0


@dataclass(frozen=True)
class StepSizeSchedule:
    """Step size ``mu_t`` for round ``t`` (1-based).

    ``inverse-sqrt`` is ``sqrt(8 ln(n) / t)`` and ignores ``base``.
    """

    kind: str = "constant"
    base: float = 0.1
    values: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.kind!r}")
        if self.kind == "constant" and self.base < 0:
            raise ValueError("step size must be non-negative")
        if self.kind == "custom":
            if not self.values:
                raise ValueError("custom schedule needs explicit values")
            if min(self.values) < 0:
                raise ValueError("step sizes must be non-negative")

    def at(self, t: int, n: int) -> float:
        if self.kind == "constant":
            return self.base
        if self.kind == "inverse-sqrt":
            return math.sqrt(8.0 * math.log(n) / t)
        if t > len(self.values):
            raise IndexError(f"custom schedule has no value for round {t}")
        return float(self.values[t - 1])

    def is_non_increasing(self, horizon: int, n: int) -> bool:
        if self.kind != "custom":
            return True
        vals = np.asarray(self.values[:horizon])
        return bool(np.all(np.diff(vals) <= 0))


# ---------------------------------------------------------------- primitives


def _log_normalize(log_w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    top = log_w.max(axis=-1, keepdims=True)
    shifted = log_w - top
    w = np.exp(shifted)
    total = w.sum(axis=-1, keepdims=True)
    x = w / total
    return shifted - np.log(total), x


def _safe_log(x) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(x, dtype=float))


def _col(mu):
    mu = np.asarray(mu, dtype=float)
    return mu[..., None] if mu.ndim else mu


def mwu_update(x, loss, mu) -> np.ndarray:
    """Exponential weights: ``x'(i) ~ x(i) exp(-mu loss(i))``."""
    _, nxt = _log_normalize(_safe_log(x) - _col(mu) * np.asarray(loss, dtype=float))
    return nxt


def lmwu_update(x, loss, mu) -> np.ndarray:
    """Linear weights: ``x'(i) ~ x(i) (1 - mu loss(i))``.

    The product must stay positive, so ``mu * max(loss) >= 1`` is rejected.
    """
    loss = np.asarray(loss, dtype=float)
    mu_c = _col(mu)
    if np.any(mu_c * loss >= 1.0):
        raise ValueError("LMWU step too large: mu * loss must stay below 1")
    if np.any(np.asarray(mu) > LMWU_SAFE_STEP):
        warnings.warn("LMWU step size above 1/3; the convergence guarantee needs mu <= 1/3", stacklevel=2)
    _, nxt = _log_normalize(_safe_log(x) + np.log1p(-mu_c * loss))
    return nxt


def omwu_update(x, loss, prev_loss, mu) -> np.ndarray:
    """Optimistic exponential weights: ``x'(i) ~ x(i) exp(-2 mu l_t(i) + mu l_{t-1}(i))``."""
    mu_c = _col(mu)
    step = -2.0 * mu_c * np.asarray(loss, dtype=float) + mu_c * np.asarray(prev_loss, dtype=float)
    _, nxt = _log_normalize(_safe_log(x) + step)
    return nxt


def project_simplex(z) -> np.ndarray:
    """Euclidean projection of each row of ``z`` onto the probability simplex.

    Sort-and-threshold: with ``u`` sorted descending, keep the largest ``rho``
    such that ``u_rho > (sum_{k<=rho} u_k - 1) / rho`` and shift by that amount.
    """
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    u = -np.sort(-z, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    ks = np.arange(1, d + 1)
    cond = u - css / ks > 0
    rho = d - 1 - np.argmax(cond[..., ::-1], axis=-1)
    tau = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1.0)
    return np.maximum(z - tau, 0.0)


def ftrl_closed_form(theta, mu) -> np.ndarray:
    """Interior solution ``x(i) = (n mu theta(i) - mu sum_j theta(j) + 1) / n``.

    Only a valid strategy when every component comes out positive.
    """
    theta = np.asarray(theta, dtype=float)
    n = theta.shape[-1]
    mu_c = _col(mu)
    return (n * mu_c * theta - mu_c * theta.sum(axis=-1, keepdims=True) + 1.0) / n


def omd_ftrl_update(cumulative_loss, mu) -> tuple[np.ndarray, np.ndarray]:
    """FTRL with Euclidean regulariser from the cumulative loss ``sum_i A y_i``.

    Returns the strategy and a flag telling whether the interior closed form
    applied (no component was clipped by the projection).
    """
    theta = -np.asarray(cumulative_loss, dtype=float)
    closed = ftrl_closed_form(theta, mu)
    interior = np.all(closed > 0.0, axis=-1)
    x = project_simplex(_col(mu) * theta)
    return x, interior


def _mix_potential(cum_loss, eta):
    """``-(1/eta) log(mean exp(-eta L))``, ``min L`` when ``eta`` is infinite."""
    low = cum_loss.min(axis=-1)
    finite = np.isfinite(eta)
    safe_eta = np.where(finite, eta, 1.0)
    s = np.exp(-safe_eta[..., None] * (cum_loss - low[..., None])).mean(axis=-1)
    return np.where(finite, low - np.log(s) / safe_eta, low)


def _adahedge_eta(mix_gap, d: int):
    mix_gap = np.asarray(mix_gap, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(mix_gap > 0, math.log(d) / np.where(mix_gap > 0, mix_gap, 1.0), np.inf)


def adahedge_strategy(cum_loss, mix_gap) -> np.ndarray:
    """Hedge weights with learning rate ``ln(d) / mix_gap``; follow-the-leader while the gap is zero."""
    cum_loss = np.asarray(cum_loss, dtype=float)
    d = cum_loss.shape[-1]
    eta = _adahedge_eta(mix_gap, d)
    low = cum_loss.min(axis=-1, keepdims=True)
    finite = np.isfinite(eta)[..., None]
    safe_eta = np.where(finite, eta[..., None], 1.0)
    w = np.where(finite, np.exp(-safe_eta * (cum_loss - low)), (cum_loss == low).astype(float))
    return w / w.sum(axis=-1, keepdims=True)


def adahedge_update(cum_loss, mix_gap, loss) -> tuple[np.ndarray, np.ndarray]:
    """One AdaHedge round; returns the new cumulative loss and mixability-gap total."""
    cum_loss = np.asarray(cum_loss, dtype=float)
    loss = np.asarray(loss, dtype=float)
    d = cum_loss.shape[-1]
    eta = _adahedge_eta(mix_gap, d)
    w = adahedge_strategy(cum_loss, mix_gap)
    hedge_loss = (w * loss).sum(axis=-1)
    new_cum = cum_loss + loss
    mix_loss = _mix_potential(new_cum, eta) - _mix_potential(cum_loss, eta)
    delta = np.maximum(hedge_loss - mix_loss, 0.0)
    return new_cum, np.asarray(mix_gap, dtype=float) + delta


# ------------------------------------------------------------ learner state


@dataclass(frozen=True)
class LearnerConfig:
    algorithm: str = "mwu"
    mu: float = 0.1
    schedule: str = "constant"
    values: Optional[tuple] = None
    init: Optional[tuple] = None  # initial strategy; uniform when None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown row algorithm {self.algorithm!r}")
        if self.mu < 0:
            raise ValueError("mu must be non-negative")
        StepSizeSchedule(self.schedule, self.mu, self.values)

    @property
    def step_sizes(self) -> StepSizeSchedule:
        return StepSizeSchedule(self.schedule, self.mu, self.values)


@dataclass(frozen=True, eq=False)
class LearnerState:
    """Row player's state after ``round`` updates; ``strategy`` is the next play."""

    algorithm: str
    strategy: np.ndarray
    log_weights: Optional[np.ndarray]
    cumulative_loss: Optional[np.ndarray]
    last_loss: Optional[np.ndarray]
    round: int
    schedule: StepSizeSchedule
    mix_gap: Optional[np.ndarray] = None
    interior: Optional[np.ndarray] = None
    seed: int = 0


def init_learner(config: LearnerConfig, d: int, batch_shape: Sequence[int] = (), seed: int = 0) -> LearnerState:
    shape = tuple(batch_shape) + (d,)
    if config.init is not None:
        if len(config.init) != d:
            raise ValueError(f"initial strategy has {len(config.init)} entries, expected {d}")
        x0 = np.broadcast_to(np.asarray(config.init, dtype=float), shape).copy()
        x0 /= x0.sum(axis=-1, keepdims=True)
    else:
        x0 = np.full(shape, 1.0 / d)
    algo = config.algorithm
    log_w = _safe_log(x0) if algo in ("mwu", "lmwu", "omwu") else None
    cum = np.zeros(shape) if algo in ("ftrl", "adahedge") else None
    gap = np.zeros(tuple(batch_shape)) if algo == "adahedge" else None
    interior = np.all(x0 > 0, axis=-1) if algo == "ftrl" else None
    if algo == "ftrl" and config.init is not None:
        raise ValueError("FTRL starts from the projection of the origin; a custom init is not supported")
    if algo == "random":
        x0 = _random_strategy(seed, 0, shape)
    return LearnerState(algo, x0, log_w, cum, None, 0, config.step_sizes, gap, interior, seed)


def _random_strategy(seed: int, t: int, shape) -> np.ndarray:
    rng = np.random.default_rng([seed, t])
    return rng.dirichlet(np.ones(shape[-1]), size=shape[:-1])


def learner_update(state: LearnerState, loss) -> LearnerState:
    """Feed the loss vector ``A y_t`` of the current round and return the next state."""
    loss = np.asarray(loss, dtype=float)
    t = state.round + 1
    d = state.strategy.shape[-1]
    mu = state.schedule.at(t, d)
    algo = state.algorithm
    if algo == "mwu":
        log_w, x = _log_normalize(state.log_weights - mu * loss)
        return replace(state, strategy=x, log_weights=log_w, last_loss=loss, round=t)
    if algo == "lmwu":
        if mu * loss.max() >= 1.0:
            raise ValueError(f"LMWU step {mu} too large for loss {loss.max()}")
        if mu > LMWU_SAFE_STEP:
            warnings.warn("LMWU step size above 1/3; the convergence guarantee needs mu <= 1/3", stacklevel=2)
        log_w, x = _log_normalize(state.log_weights + np.log1p(-mu * loss))
        return replace(state, strategy=x, log_weights=log_w, last_loss=loss, round=t)
    if algo == "omwu":
        prev = loss if state.last_loss is None else state.last_loss
        log_w, x = _log_normalize(state.log_weights - 2.0 * mu * loss + mu * prev)
        return replace(state, strategy=x, log_weights=log_w, last_loss=loss, round=t)
    if algo == "ftrl":
        cum = state.cumulative_loss + loss
        # x_{t+1} uses the step size of the round that produced it
        x, interior = omd_ftrl_update(cum, state.schedule.at(t + 1, d))
        return replace(state, strategy=x, cumulative_loss=cum, last_loss=loss, round=t, interior=interior)
    if algo == "adahedge":
        cum, gap = adahedge_update(state.cumulative_loss, state.mix_gap, loss)
        x = adahedge_strategy(cum, gap)
        return replace(state, strategy=x, cumulative_loss=cum, mix_gap=gap, last_loss=loss, round=t)
    x = _random_strategy(state.seed, t, state.strategy.shape)
    return replace(state, strategy=x, last_loss=loss, round=t)
