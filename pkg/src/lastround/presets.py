"""Named experiments: a table of run configurations plus the checks applied to them.

Each preset is plain data.  A run describes one batch of games and one pairing
of row learner and column policy; each assertion names a metric from
``METRICS``, a comparison and a threshold.
"""

from __future__ import annotations

import math
import operator
from typing import Callable, Sequence

import numpy as np

from .engine import DYADIC_CHECKPOINTS, Trajectory, fit_rate, metric_at

# ------------------------------------------------------------------ metrics


def min_lyapunov_residual(trajs: Sequence[Trajectory]) -> float:
    vals = np.concatenate([t.lyapunov_residuals for t in trajs])
    vals = vals[~np.isnan(vals)]
    return float(vals.min()) if vals.size else math.nan


def max_final_f_gap(trajs: Sequence[Trajectory]) -> float:
    return max(float(t.f_gaps[-1]) for t in trajs)


def first_hit(traj: Trajectory, eps: float) -> float:
    """First round with ``f(x_t) - v <= eps``; ``inf`` when the run never gets there."""
    hits = np.flatnonzero(traj.f_gaps <= eps)
    return float(hits[0] + 1) if hits.size else math.inf


def max_first_hit(trajs: Sequence[Trajectory], eps: float = 0.01) -> float:
    return max(first_hit(t, eps) for t in trajs)


def min_interior_fraction(trajs: Sequence[Trajectory]) -> float:
    return min(float(t.interior.mean()) for t in trajs)


def max_block_re_increase(trajs: Sequence[Trajectory], block: int = 3, burn_in: int = 10) -> float:
    """Largest step up of ``RE(x*||x_{block*k})`` over ``k > burn_in``."""
    worst = -math.inf
    for t in trajs:
        re = t.re_to_eq[block - 1::block][burn_in:]
        if re.size > 1:
            worst = max(worst, float(np.diff(re).max()))
    return worst


def mean_curve_ir_slope(trajs: Sequence[Trajectory]) -> float:
    """Log-log slope of ``IR_T`` averaged over the games, at dyadic checkpoints."""
    cps = [c for c in DYADIC_CHECKPOINTS if c <= len(trajs[0])]
    mean = np.mean([metric_at(t, "IR_T", cps) for t in trajs], axis=0)
    return fit_rate(cps, mean, "IR_T").slope


def max_regret_minus_ir(trajs: Sequence[Trajectory]) -> float:
    return max(float((t.cumulative_regret_curve() - t.instant_regret_curve()).max()) for t in trajs)


def switched_games(trajs: Sequence[Trajectory]) -> float:
    return float(sum(bool(t.switched.any()) for t in trajs))


def max_regret_over_bound(trajs: Sequence[Trajectory], scale: float = 4.0) -> float:
    """Largest ``R_T / (scale sqrt(n ln n) T^{3/4})`` over dyadic checkpoints and the horizon."""
    worst = 0.0
    for t in trajs:
        n = t.game.n
        cps = np.array(sorted({c for c in DYADIC_CHECKPOINTS if c <= len(t)} | {len(t)}))
        bound = scale * math.sqrt(n * math.log(n)) * cps ** 0.75
        worst = max(worst, float((t.cumulative_regret_curve()[cps - 1] / bound).max()))
    return worst


def _tail_distance(t: Trajectory, tail: int) -> np.ndarray:
    return np.sqrt(t.dist_sq_to_eq[-tail:])


def min_tail_distance(trajs: Sequence[Trajectory], tail: int = 5000) -> float:
    return min(float(_tail_distance(t, tail).min()) for t in trajs)


def max_tail_distance(trajs: Sequence[Trajectory], tail: int = 5000) -> float:
    return max(float(_tail_distance(t, tail).max()) for t in trajs)


def max_stabilizing_drift(trajs: Sequence[Trajectory]) -> float:
    """Largest move of the row strategy over a round in which the column played ``y*``."""
    worst = 0.0
    for t in trajs:
        calm = np.all(t.ys[:-1] == t.equilibrium.col_strategy, axis=1)
        if calm.any():
            worst = max(worst, float(np.abs(t.xs[1:][calm] - t.xs[:-1][calm]).max()))
    return worst


METRICS: dict[str, Callable[..., float]] = {
    f.__name__: f
    for f in (
        min_lyapunov_residual, max_final_f_gap, max_first_hit, min_interior_fraction,
        max_block_re_increase, mean_curve_ir_slope, max_regret_minus_ir, switched_games,
        max_regret_over_bound, min_tail_distance, max_tail_distance, max_stabilizing_drift,
    )
}

OPS = {"<=": operator.le, ">=": operator.ge}


def check(op: str, value: float, threshold: float) -> bool:
    if math.isnan(value):
        return False
    return bool(OPS[op](value, threshold))


# -------------------------------------------------------------------- table


def _complexity_bound(n: int, mu: float, eps: float = 0.01, slack: float = 2.0) -> float:
    return slack * 4.0 * math.log(n) / (mu * eps ** 2)


_RANDOM_5X5 = {"game": "random-uniform", "rows": 5, "cols": 5, "games": 20}
_INTERIOR_4X4 = {"game": "random-interior", "rows": 4, "cols": 4, "games": 20}
_PENNIES = {"game": "matching-pennies", "rows": 2, "cols": 2, "games": 1}
_RESIDUAL_OK = ("min_lyapunov_residual", ">=", -1e-9, {})

PRESETS: dict[str, dict] = {
    "lemma1-check": {
        "description": "LRCA vs MWU: per-pair KL decrease residual stays non-negative",
        "runs": [
            {**_RANDOM_5X5, "seed": 1, "row_algo": "mwu", "mu": mu, "schedule": sched, "col_algo": "lrca",
             "rounds": 10_000, "assert": [_RESIDUAL_OK]}
            for mu, sched in ((0.1, "constant"), (0.5, "constant"), (1.0, "constant"), (0.1, "inverse-sqrt"))
        ],
    },
    "lrca-complexity": {
        "description": "LRCA vs MWU: rounds until f(x_t) - v <= 0.01, against 2 * 4 ln(n) / (mu eps^2)",
        "runs": [
            {**_RANDOM_5X5, "seed": 1, "row_algo": "mwu", "mu": mu, "schedule": "constant", "col_algo": "lrca",
             "rounds": rounds, "assert": [("max_first_hit", "<=", _complexity_bound(5, mu), {"eps": 0.01})]}
            for mu, rounds in ((0.1, 60_000), (0.5, 20_000), (1.0, 10_000))
        ],
    },
    "ftrl-inequality": {
        "description": "LRCA vs Euclidean FTRL on interior games: squared-distance residual",
        "runs": [
            {**_INTERIOR_4X4, "seed": 4, "row_algo": "ftrl", "mu": 0.5, "schedule": "constant",
             "col_algo": "lrca", "rounds": 10_000,
             "assert": [_RESIDUAL_OK, ("min_interior_fraction", ">=", 0.95, {})]},
        ],
    },
    "lmwu-inequality": {
        "description": "LRCA vs linear MWU (mu = 0.3): KL residual",
        "runs": [
            {**_RANDOM_5X5, "seed": 5, "row_algo": "lmwu", "mu": 0.3, "schedule": "constant",
             "col_algo": "lrca", "rounds": 10_000, "assert": [_RESIDUAL_OK]},
        ],
    },
    "lrca2-omwu": {
        "description": "LRCA-2 vs optimistic MWU: KL at block ends never rises, last-round gap",
        "runs": [
            {**base, "seed": 6, "row_algo": "omwu", "mu": 0.1, "schedule": "constant", "col_algo": "lrca2",
             "rounds": 100_000,
             "assert": [("max_block_re_increase", "<=", 1e-9, {"block": 3, "burn_in": 10}),
                        ("max_final_f_gap", "<=", 0.01, {})]}
            for base in (_PENNIES, _RANDOM_5X5)
        ],
    },
    "ir-rates": {
        "description": "LRCA vs MWU: growth rate of the instant regret",
        "runs": [
            {**_RANDOM_5X5, "seed": 7, "row_algo": "mwu", "mu": 0.1, "schedule": sched, "col_algo": "lrca",
             "rounds": 2 ** 16,
             "assert": [("mean_curve_ir_slope", "<=", slope, {}), ("max_regret_minus_ir", "<=", 1e-9, {})]}
            for sched, slope in (("constant", 0.6), ("inverse-sqrt", 0.8))
        ],
    },
    "combined-switch": {
        "description": "LRCA with AdaHedge fallback: no switch against MWU, bounded regret against noise",
        "runs": [
            {**_RANDOM_5X5, "games": 10, "seed": 8, "row_algo": "mwu", "mu": 0.1, "schedule": "inverse-sqrt",
             "col_algo": "lrca-adahedge", "rounds": 100_000, "assert": [("switched_games", "<=", 0, {})]},
            {**_RANDOM_5X5, "games": 10, "seed": 8, "row_algo": "random", "mu": 0.1, "schedule": "constant",
             "col_algo": "lrca-adahedge", "rounds": 100_000,
             "assert": [("max_regret_over_bound", "<=", 1.0, {"scale": 4.0})]},
        ],
    },
    "mwu-divergence": {
        "description": "MWU vs MWU on matching pennies drifts to the boundary; LRCA pins the row at x*",
        "runs": [
            {**_PENNIES, "seed": 9, "row_algo": "mwu", "mu": 0.1, "schedule": "constant",
             "col_algo": "mwu-column", "col_init": (0.6, 0.4), "rounds": 10_000,
             "assert": [("min_tail_distance", ">=", 0.1, {"tail": 5000})]},
            {**_PENNIES, "seed": 9, "row_algo": "mwu", "mu": 0.1, "schedule": "constant",
             "col_algo": "lrca", "row_init": (0.6, 0.4), "rounds": 10_000,
             "assert": [("max_tail_distance", "<=", 0.01, {"tail": 5000})]},
        ],
    },
    "ftrl-stability": {
        "description": "Playing y* on interior games leaves MWU, LMWU and FTRL where they are",
        "runs": [
            {**_INTERIOR_4X4, "seed": 10, "row_algo": algo, "mu": 0.3, "schedule": "constant",
             "col_algo": "lrca", "rounds": 2_000, "assert": [("max_stabilizing_drift", "<=", 1e-10, {})]}
            for algo in ("mwu", "lmwu", "ftrl")
        ],
    },
}
