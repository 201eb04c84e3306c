"""Policies of the informed column player.

A policy only ever sees the previous round's payoff vector ``x_{t-1}^T A``
plus what it knows about the game (``y*`` and ``v``).  LRCA alternates between
playing ``y*`` (which freezes a stable row learner) and leaning towards the best
response to the row's last strategy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .learners import adahedge_strategy, adahedge_update

log = logging.getLogger(__name__)

POLICIES = ("lrca", "lrca2", "lrca-adahedge", "fixed-minimax", "best-response-last", "mwu-column")
STEP_MODES = ("robust", "optimal-mwu", "log-damped", "relative")
DEFAULT_STEP_MODE = {"lrca": "robust", "lrca-adahedge": "robust", "lrca2": "relative"}


def robust_denominator(n: int) -> float:
    return max(n / 4.0, 2.0)


def step_alpha(f, value, n: int, t: int, step_mode: str = "robust", mu: Optional[float] = None):
    """Mixing weight on the best response for an exploiting round.

    ``robust``: ``(f - v) / max(n/4, 2)``; ``optimal-mwu``: ``(f - v) / (mu f)``;
    ``log-damped``: ``(f - v) / (ln(t) f)``; ``relative``: ``(f - v) / f``.
    Results are clamped to ``[0, 1]``.
    """
    f = np.asarray(f, dtype=float)
    gap = f - np.asarray(value, dtype=float)
    if step_mode == "robust":
        alpha = gap / robust_denominator(n)
    elif step_mode == "optimal-mwu":
        if not mu:
            raise ValueError("optimal-mwu step mode needs the row player's step size")
        alpha = gap / (mu * f)
    elif step_mode == "log-damped":
        if t < 2:
            raise ValueError("log-damped step is defined from round 2 on")
        alpha = gap / (math.log(t) * f)
    elif step_mode == "relative":
        alpha = gap / f
    else:
        raise ValueError(f"unknown step mode {step_mode!r}")
    clipped = np.clip(alpha, 0.0, 1.0)
    if np.any(np.abs(clipped - alpha) > 1e-12):
        log.warning("alpha clamped to [0, 1] at round %d (raw range %.3g..%.3g)", t, np.min(alpha), np.max(alpha))
    return clipped


def _mix_towards_best_response(feedback, y_star, alpha):
    j = np.argmax(feedback, axis=-1)
    y = (1.0 - alpha)[..., None] * y_star
    np.put_along_axis(y, j[..., None], np.take_along_axis(y, j[..., None], -1) + alpha[..., None], -1)
    return y


def _check_feedback(feedback, y_star):
    if feedback.shape[-1] != y_star.shape[-1]:
        raise ValueError(f"feedback has dimension {feedback.shape[-1]}, expected {y_star.shape[-1]}")


def lrca_step(feedback, y_star, value, n: int, t: int, step_mode: str = "robust", mu=None):
    """LRCA play for round ``t``: ``y*`` on odd rounds, a push on even rounds.

    Returns ``(y_t, alpha_t)`` with ``alpha_t`` NaN on stabilising rounds.
    """
    feedback = np.asarray(feedback, dtype=float)
    y_star = np.asarray(y_star, dtype=float)
    _check_feedback(feedback, y_star)
    if t < 1:
        raise ValueError("rounds are numbered from 1")
    if t % 2 == 1:
        return y_star.copy(), np.full(feedback.shape[:-1], np.nan)
    f = feedback.max(axis=-1)
    alpha = step_alpha(f, value, n, t, step_mode, mu)
    return _mix_towards_best_response(feedback, y_star, alpha), alpha


def lrca2_exploits(t: int) -> bool:
    """Rounds ``3k+1`` with ``k >= 1`` exploit; everything else stabilises."""
    return t >= 4 and t % 3 == 1


def lrca2_step(feedback, y_star, value, n: int, t: int, step_mode: str = "relative", mu=None):
    """LRCA with two stabilising rounds before each exploiting round."""
    feedback = np.asarray(feedback, dtype=float)
    y_star = np.asarray(y_star, dtype=float)
    _check_feedback(feedback, y_star)
    if not lrca2_exploits(t):
        return y_star.copy(), np.full(feedback.shape[:-1], np.nan)
    f = feedback.max(axis=-1)
    alpha = step_alpha(f, value, n, t, step_mode, mu)
    return _mix_towards_best_response(feedback, y_star, alpha), alpha


def switch_threshold(n: int, t: int) -> float:
    """Regret budget ``sqrt(n ln n) t^{3/4}`` before the combined policy falls back to AdaHedge."""
    return math.sqrt(n * math.log(n)) * t ** 0.75


# --------------------------------------------------------------- policy state


@dataclass(frozen=True)
class ColumnConfig:
    policy: str = "lrca"
    step_mode: Optional[str] = None
    mu: float = 0.1  # MWUColumn step, and the assumed row step for optimal-mwu
    init: Optional[tuple] = None  # MWUColumn initial strategy

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown column policy {self.policy!r}")
        if self.step_mode is not None and self.step_mode not in STEP_MODES:
            raise ValueError(f"unknown step mode {self.step_mode!r}")
        if self.mu < 0:
            raise ValueError("mu must be non-negative")

    @property
    def resolved_step_mode(self) -> str:
        return self.step_mode or DEFAULT_STEP_MODE.get(self.policy, "robust")


@dataclass(frozen=True, eq=False)
class ColumnPolicyState:
    """Column player's state after ``round`` plays.

    ``payoff_sums`` and ``realized`` are running totals of ``x_t^T A`` and
    ``x_t^T A y_t`` over completed rounds; their difference is the regret
    the combined policy tests against its threshold.
    """

    policy: str
    y_star: np.ndarray
    value: np.ndarray
    n: int
    round: int
    step_mode: str
    mu: float
    log_weights: Optional[np.ndarray] = None
    adahedge_loss: Optional[np.ndarray] = None
    adahedge_gap: Optional[np.ndarray] = None
    switched: Optional[np.ndarray] = None
    payoff_sums: Optional[np.ndarray] = None
    realized: Optional[np.ndarray] = None
    last_play: Optional[np.ndarray] = None

    @property
    def cumulative_regret(self) -> np.ndarray:
        return self.payoff_sums.max(axis=-1) - self.realized


def init_column(config: ColumnConfig, y_star, value, n: int) -> ColumnPolicyState:
    y_star = np.asarray(y_star, dtype=float)
    value = np.asarray(value, dtype=float)
    batch, m = y_star.shape[:-1], y_star.shape[-1]
    log_w = None
    if config.policy == "mwu-column":
        x0 = np.full(y_star.shape, 1.0 / m) if config.init is None else np.broadcast_to(
            np.asarray(config.init, dtype=float) / np.sum(config.init), y_star.shape)
        with np.errstate(divide="ignore"):
            log_w = np.log(x0)
    return ColumnPolicyState(
        policy=config.policy,
        y_star=y_star,
        value=value,
        n=n,
        round=0,
        step_mode=config.resolved_step_mode,
        mu=config.mu,
        log_weights=log_w,
        adahedge_loss=np.zeros(y_star.shape),
        adahedge_gap=np.zeros(batch),
        switched=np.zeros(batch, dtype=bool),
        payoff_sums=np.zeros(y_star.shape),
        realized=np.zeros(batch),
    )


def column_step(state: ColumnPolicyState, feedback):
    """Play round ``state.round + 1`` given ``x_{t-1}^T A``.

    Round 1 feedback comes from the row's initial strategy and is not a
    completed round, so it never enters the regret totals.
    Returns ``(new_state, y_t, alpha_t)``.
    """
    feedback = np.asarray(feedback, dtype=float)
    _check_feedback(feedback, state.y_star)
    t = state.round + 1
    sums, realized = state.payoff_sums, state.realized
    if t > 1:
        sums = sums + feedback
        realized = realized + (feedback * state.last_play).sum(axis=-1)
    state = replace(state, payoff_sums=sums, realized=realized)
    policy = state.policy
    alpha = np.full(feedback.shape[:-1], np.nan)

    if policy == "lrca":
        y, alpha = lrca_step(feedback, state.y_star, state.value, state.n, t, state.step_mode, state.mu)
    elif policy == "lrca2":
        y, alpha = lrca2_step(feedback, state.y_star, state.value, state.n, t, state.step_mode, state.mu)
    elif policy == "lrca-adahedge":
        y, state, alpha = _combined(state, feedback, t)
    elif policy == "fixed-minimax":
        y = state.y_star.copy()
    elif policy == "best-response-last":
        j = np.argmax(feedback, axis=-1)
        y = np.zeros_like(feedback)
        np.put_along_axis(y, j[..., None], 1.0, -1)
    else:
        log_w = state.log_weights
        if t > 1:
            log_w = log_w + state.mu * feedback
            log_w = log_w - log_w.max(axis=-1, keepdims=True)
        y = np.exp(log_w)
        y /= y.sum(axis=-1, keepdims=True)
        state = replace(state, log_weights=log_w)
    return replace(state, round=t, last_play=y), y, alpha


def _combined(state: ColumnPolicyState, feedback, t: int):
    was_switched = state.switched
    # R_t covers rounds 1..t-1, all the information available before playing round t
    over = state.cumulative_regret > switch_threshold(state.n, t)
    switched = was_switched | over
    newly = switched & ~was_switched
    if np.any(newly):
        log.info("combined policy switched to AdaHedge at round %d for %d game(s)", t, int(newly.sum()))

    ah_loss, ah_gap = state.adahedge_loss, state.adahedge_gap
    if np.any(was_switched):
        # AdaHedge minimises loss; the column maximises payoff
        new_loss, new_gap = adahedge_update(ah_loss, ah_gap, 1.0 - feedback)
        ah_loss = np.where(was_switched[..., None], new_loss, ah_loss)
        ah_gap = np.where(was_switched, new_gap, ah_gap)

    y_lrca, alpha = lrca_step(feedback, state.y_star, state.value, state.n, t, state.step_mode, state.mu)
    if np.any(switched):
        y_ah = adahedge_strategy(ah_loss, ah_gap)
        y = np.where(switched[..., None], y_ah, y_lrca)
        alpha = np.where(switched, np.nan, alpha)
    else:
        y = y_lrca
    state = replace(state, switched=switched, adahedge_loss=ah_loss, adahedge_gap=ah_gap)
    return y, state, alpha


def baseline_step(state: ColumnPolicyState, feedback):
    """Alias of :func:`column_step` for the baseline policies."""
    if state.policy not in ("fixed-minimax", "best-response-last", "mwu-column"):
        raise ValueError(f"{state.policy!r} is not a baseline policy")
    return column_step(state, feedback)


def combined_step(state: ColumnPolicyState, feedback):
    if state.policy != "lrca-adahedge":
        raise ValueError("combined_step needs the lrca-adahedge policy")
    return column_step(state, feedback)
