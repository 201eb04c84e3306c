"""Repeated-game driver, trajectory metrics and rate fits.

The dynamics are the expected (mixed-strategy) dynamics: nothing is sampled,
so a run is a deterministic function of the game and the two configurations.
Several games with the same shape can be advanced together; each round then
costs one vectorised step for the whole batch.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .columns import ColumnConfig, column_step, init_column
from .game import Equilibrium, PayoffMatrix
from .learners import LMWU_SAFE_STEP, LearnerConfig, init_learner, learner_update
from .minimax import detect_fully_mixed, solve_minimax

log = logging.getLogger(__name__)

GAME_KINDS = ("random-uniform", "matching-pennies", "derived-2x2", "from-file", "random-interior")
DERIVED_2X2 = ((0.8, 0.2), (0.3, 0.6))
RESIDUAL_TOL = -1e-9
STABLE_LOSS_TOL = 1e-9
DYADIC_CHECKPOINTS = tuple(2 ** k for k in range(8, 17))
CSV_HEADER = (
    "t", "payoff", "f_gap", "re_to_eq", "dist_sq_to_eq",
    "instant_regret_term", "alpha", "lyapunov_residual",
)


# ------------------------------------------------------------------- games


def derive_seeds(seed: int, count: int) -> list[int]:
    """Per-game seeds: child ``i`` of ``numpy.random.SeedSequence(seed)``."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def generate_game(kind: str, n: int = 2, m: int = 2, seed: int = 0, path: Optional[str] = None,
                  max_tries: int = 100_000) -> PayoffMatrix:
    """Build a payoff matrix; deterministic in ``seed``.

    ``random-interior`` rejection-samples uniform games until the row player
    has a fully-mixed equilibrium strategy.
    """
    if kind == "random-uniform":
        return PayoffMatrix(np.random.default_rng(seed).random((n, m)))
    if kind == "matching-pennies":
        return PayoffMatrix(np.eye(n, m))
    if kind == "derived-2x2":
        return PayoffMatrix(np.array(DERIVED_2X2))
    if kind == "from-file":
        if path is None:
            raise ValueError("from-file games need a path")
        return PayoffMatrix.from_csv(path)
    if kind == "random-interior":
        rng = np.random.default_rng(seed)
        for _ in range(max_tries):
            game = PayoffMatrix(rng.random((n, m)))
            eq = solve_minimax(game).equilibrium
            if detect_fully_mixed(game, eq)[2]:
                return game
        raise RuntimeError(f"no interior-equilibrium {n}x{m} game in {max_tries} draws")
    raise ValueError(f"unknown game kind {kind!r}")


def has_stabilizing_equilibrium(game: PayoffMatrix, eq: Equilibrium, tol: float = STABLE_LOSS_TOL) -> bool:
    """True when ``A y* = v 1`` within ``tol``, so playing ``y*`` gives every row the same loss."""
    return bool(np.max(np.abs(game.entries @ eq.col_strategy - eq.value)) <= tol)


# ------------------------------------------------------------- trajectories


@dataclass(frozen=True)
class RoundRecord:
    t: int
    x: np.ndarray
    y: np.ndarray
    payoff: float
    f_gap: float
    re_to_eq: float
    dist_sq_to_eq: float
    instant_regret_term: float
    alpha: Optional[float] = None
    lyapunov_residual: Optional[float] = None


def _opt(v: float) -> Optional[float]:
    return None if math.isnan(v) else float(v)


def _re_rows(p: np.ndarray, X: np.ndarray) -> np.ndarray:
    """RE(p || X[t]) for every row of ``X``."""
    support = p > 0
    ps = p[support]
    q = X[..., support]
    with np.errstate(divide="ignore"):
        logs = np.log(q)
    return (ps * (np.log(ps) - logs)).sum(axis=-1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Strategies played in rounds ``1..T`` plus everything needed to score them.

    ``step_sizes[t-1]`` is the row step used on round ``t``'s loss and
    ``interior[t-1]`` tells whether ``x_t`` came from the FTRL interior closed form.
    """

    game: PayoffMatrix
    equilibrium: Equilibrium
    learner: LearnerConfig
    column: ColumnConfig
    seed: int
    xs: np.ndarray
    ys: np.ndarray
    alphas: np.ndarray
    step_sizes: np.ndarray
    interior: np.ndarray
    switched: np.ndarray

    def __len__(self) -> int:
        return self.xs.shape[0]

    @property
    def horizon(self) -> int:
        return len(self)

    @cached_property
    def payoff_vectors(self) -> np.ndarray:
        return self.xs @ self.game.entries

    @cached_property
    def payoffs(self) -> np.ndarray:
        return np.einsum("tj,tj->t", self.payoff_vectors, self.ys)

    @cached_property
    def f_values(self) -> np.ndarray:
        return self.payoff_vectors.max(axis=1)

    @cached_property
    def f_gaps(self) -> np.ndarray:
        return self.f_values - self.equilibrium.value

    @cached_property
    def ir_terms(self) -> np.ndarray:
        return self.f_values - self.payoffs

    @cached_property
    def re_to_eq(self) -> np.ndarray:
        return _re_rows(self.equilibrium.row_strategy, self.xs)

    @cached_property
    def dist_sq_to_eq(self) -> np.ndarray:
        d = self.xs - self.equilibrium.row_strategy
        return np.einsum("ti,ti->t", d, d)

    def instant_regret_curve(self) -> np.ndarray:
        """``IR_T`` for every prefix length ``T`` (undivided sums)."""
        return np.cumsum(self.ir_terms)

    def cumulative_regret_curve(self) -> np.ndarray:
        """``R_T`` for every prefix: best fixed column in hindsight minus realised payoff.

        Computed as ``IR_T`` minus a sum of non-negative terms so that
        ``R_T <= IR_T`` also holds in floating point.
        """
        shortfall = np.cumsum(self.f_values[:, None] - self.payoff_vectors, axis=0)
        return self.instant_regret_curve() - shortfall.min(axis=1)

    @cached_property
    def lyapunov_residuals(self) -> np.ndarray:
        """Residual for pair ``k`` stored at index ``2k`` (round ``2k+1``); NaN where not applicable."""
        out = np.full(len(self), np.nan)
        fn = _RESIDUALS.get(self.learner.algorithm)
        if fn is None or self.column.policy != "lrca":
            return out
        for k in range(1, (len(self) - 1) // 2 + 1):
            r = fn(self, k)
            if r is not None:
                out[2 * k] = r
        return out

    def records(self) -> list[RoundRecord]:
        res = self.lyapunov_residuals
        return [
            RoundRecord(
                t=i + 1,
                x=self.xs[i],
                y=self.ys[i],
                payoff=float(self.payoffs[i]),
                f_gap=float(self.f_gaps[i]),
                re_to_eq=float(self.re_to_eq[i]),
                dist_sq_to_eq=float(self.dist_sq_to_eq[i]),
                instant_regret_term=float(self.ir_terms[i]),
                alpha=_opt(self.alphas[i]),
                lyapunov_residual=_opt(res[i]),
            )
            for i in range(len(self))
        ]

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        res = self.lyapunov_residuals
        cols = (self.payoffs, self.f_gaps, self.re_to_eq, self.dist_sq_to_eq, self.ir_terms, self.alphas, res)
        for i in range(len(self)):
            writer.writerow([i + 1] + [_fmt(c[i]) for c in cols])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        Path(path).write_text(self.csv_text())

    def summary(self, checkpoints: Sequence[int] = DYADIC_CHECKPOINTS) -> dict:
        T = len(self)
        res = self.lyapunov_residuals
        applicable = res[~np.isnan(res)]
        out = {
            "config": {"learner": asdict(self.learner), "column": asdict(self.column), "rounds": T, "seed": self.seed},
            "game": self.game.entries.tolist(),
            "equilibrium": {
                "row": self.equilibrium.row_strategy.tolist(),
                "col": self.equilibrium.col_strategy.tolist(),
                "value": self.equilibrium.value,
            },
            "final": {
                "f_gap": float(self.f_gaps[-1]),
                "re_to_eq": float(self.re_to_eq[-1]),
                "dist_sq_to_eq": float(self.dist_sq_to_eq[-1]),
                "instant_regret": instant_regret(self, T),
                "cumulative_regret": cumulative_regret(self, T),
                "mean_payoff": float(self.payoffs.mean()),
                "min_lyapunov_residual": float(applicable.min()) if applicable.size else None,
                "switched": bool(self.switched[-1]),
            },
        }
        usable = [c for c in checkpoints if c <= T]
        if len(usable) >= 5:
            out["rate_fits"] = {
                metric: asdict(rate_fit(self, metric, usable)) for metric in ("IR_T", "f_gap", "re_to_eq")
            }
        return out


def _fmt(v) -> str:
    v = float(v)
    return "" if math.isnan(v) else repr(v)


# ------------------------------------------------------------------ running


def run_batch(games: Sequence[PayoffMatrix], learner: LearnerConfig, column: ColumnConfig, rounds: int,
              seed: int = 0, equilibria: Optional[Sequence[Equilibrium]] = None) -> list[Trajectory]:
    """Play ``rounds`` rounds on every game at once; all games must share a shape."""
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    games = list(games)
    if not games:
        return []
    shapes = {g.shape for g in games}
    if len(shapes) != 1:
        raise ValueError(f"batched games must share a shape, got {sorted(shapes)}")
    n, m = games[0].shape
    if equilibria is None:
        equilibria = [solve_minimax(g).equilibrium for g in games]
    G = len(games)
    A = np.stack([g.entries for g in games])
    y_star = np.stack([e.col_strategy for e in equilibria])
    value = np.array([e.value for e in equilibria])

    ls = init_learner(learner, n, (G,), seed=seed)
    cs = init_column(column, y_star, value, n)
    xs = np.empty((rounds, G, n))
    ys = np.empty((rounds, G, m))
    alphas = np.empty((rounds, G))
    mus = np.empty(rounds)
    interior = np.ones((rounds, G), dtype=bool)
    switched = np.zeros((rounds, G), dtype=bool)

    feedback = np.einsum("gi,gij->gj", ls.strategy, A)
    for i in range(rounds):
        x = ls.strategy
        xs[i] = x
        if ls.interior is not None:
            interior[i] = ls.interior
        cs, y, alpha = column_step(cs, feedback)
        ys[i] = y
        alphas[i] = alpha
        switched[i] = cs.switched
        mus[i] = ls.schedule.at(i + 1, n)
        ls = learner_update(ls, np.einsum("gij,gj->gi", A, y))
        feedback = np.einsum("gi,gij->gj", x, A)

    return [
        Trajectory(games[g], equilibria[g], learner, column, seed,
                   xs[:, g].copy(), ys[:, g].copy(), alphas[:, g].copy(), mus.copy(),
                   interior[:, g].copy(), switched[:, g].copy())
        for g in range(G)
    ]


def run(game: PayoffMatrix, learner: LearnerConfig, column: ColumnConfig, rounds: int, seed: int = 0,
        equilibrium: Optional[Equilibrium] = None) -> Trajectory:
    eqs = None if equilibrium is None else [equilibrium]
    return run_batch([game], learner, column, rounds, seed, eqs)[0]


# ------------------------------------------------------------------ metrics


def _check_prefix(traj: Trajectory, T: int) -> None:
    if not 1 <= T <= len(traj):
        raise ValueError(f"prefix length {T} outside 1..{len(traj)}")


def instant_regret(traj: Trajectory, T: int) -> float:
    _check_prefix(traj, T)
    return float(traj.ir_terms[:T].sum())


def cumulative_regret(traj: Trajectory, T: int) -> float:
    _check_prefix(traj, T)
    shortfall = (traj.f_values[:T, None] - traj.payoff_vectors[:T]).sum(axis=0)
    return float(traj.ir_terms[:T].sum() - shortfall.min())


def _pair_terms(traj: Trajectory, k: int):
    """Indices and shared quantities of the pair ``(x_{2k-1}, x_{2k+1})``; None when out of range."""
    if k < 1 or 2 * k + 1 > len(traj):
        return None
    i1, i2, i3 = 2 * k - 2, 2 * k - 1, 2 * k
    alpha = traj.alphas[i2]
    if math.isnan(alpha):
        return None
    gap = traj.f_values[i1] - traj.equilibrium.value
    return i1, i2, i3, float(alpha), float(gap), float(traj.step_sizes[i2])


def _multiplicative_residual(traj: Trajectory, k: int, max_step: float) -> Optional[float]:
    terms = _pair_terms(traj, k)
    if terms is None:
        return None
    i1, i2, i3, alpha, gap, mu = terms
    if mu > max_step:
        return None
    if not traj.learner.step_sizes.is_non_increasing(2 * k, traj.game.n):
        return None
    # the descent argument needs alpha <= (f - v) / f
    if alpha > gap / traj.f_values[i1] + 1e-15:
        return None
    drop = traj.re_to_eq[i1] - traj.re_to_eq[i3]
    return float(drop - 0.5 * mu * alpha * gap)


def _require(traj: Trajectory, algorithm: str) -> None:
    if traj.learner.algorithm != algorithm or traj.column.policy != "lrca":
        raise ValueError(f"residual needs an LRCA vs {algorithm} trajectory, got "
                         f"{traj.column.policy} vs {traj.learner.algorithm}")


def lyapunov_residual_mwu(traj: Trajectory, k: int) -> Optional[float]:
    """``RE(x*||x_{2k-1}) - RE(x*||x_{2k+1}) - mu_{2k} alpha_{2k} (f(x_{2k-1}) - v) / 2``.

    None (not applicable) when ``mu_{2k} > 1`` or the schedule is increasing.
    """
    _require(traj, "mwu")
    return _multiplicative_residual(traj, k, 1.0)


def lyapunov_residual_lmwu(traj: Trajectory, k: int) -> Optional[float]:
    """Same form as the MWU residual; applicable only while ``mu_{2k} <= 1/3``."""
    _require(traj, "lmwu")
    return _multiplicative_residual(traj, k, LMWU_SAFE_STEP)


def lyapunov_residual_omd(traj: Trajectory, k: int, scaled: bool = False) -> Optional[float]:
    """``||x_{2k-1}-x*||^2 - ||x_{2k+1}-x*||^2 - alpha_{2k} (f(x_{2k-1}) - v)``.

    With ``scaled=True`` the subtracted term carries the extra factor ``mu``.
    None unless the step is a constant ``mu <= 1``, ``A y* = v 1`` holds and
    ``x_{2k-1}``, ``x_{2k}``, ``x_{2k+1}`` all came from the interior closed form.
    """
    _require(traj, "ftrl")
    terms = _pair_terms(traj, k)
    if terms is None:
        return None
    i1, i2, i3, alpha, gap, mu = terms
    if traj.learner.schedule != "constant" or mu > 1.0 or traj.column.resolved_step_mode != "robust":
        return None
    if not _stabilizing(traj):
        return None
    if not (traj.interior[i1] and traj.interior[i2] and traj.interior[i3]):
        return None
    drop = traj.dist_sq_to_eq[i1] - traj.dist_sq_to_eq[i3]
    factor = mu if scaled else 1.0
    return float(drop - factor * alpha * gap)


def _stabilizing(traj: Trajectory) -> bool:
    return has_stabilizing_equilibrium(traj.game, traj.equilibrium)


def _ftrl_residual(traj, k):
    return lyapunov_residual_omd(traj, k)


_RESIDUALS = {
    "mwu": lyapunov_residual_mwu,
    "lmwu": lyapunov_residual_lmwu,
    "ftrl": _ftrl_residual,
}


# -------------------------------------------------------------------- rates


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through ``(log T, log metric)``."""

    metric: str
    slope: float
    intercept: float
    r_squared: float
    checkpoints: tuple = field(default_factory=tuple)


RATE_METRICS = ("IR_T", "f_gap", "re_to_eq")


def fit_rate(checkpoints: Sequence[int], values: Sequence[float], metric: str = "IR_T") -> RateFit:
    """Fit ``log(value) = slope * log(T) + intercept``; non-positive values are dropped."""
    if metric not in RATE_METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    ts = np.asarray(checkpoints, dtype=float)
    vs = np.asarray(values, dtype=float)
    if ts.shape != vs.shape:
        raise ValueError("checkpoints and values differ in length")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("checkpoints must be strictly increasing")
    keep = vs > 0
    if not np.all(keep):
        log.info("rate fit for %s drops %d non-positive point(s) at T=%s",
                 metric, int((~keep).sum()), ts[~keep].astype(int).tolist())
    ts, vs = ts[keep], vs[keep]
    if ts.size < 5:
        raise ValueError(f"need at least 5 positive checkpoints, have {ts.size}")
    lx, ly = np.log(ts), np.log(vs)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(metric, float(slope), float(intercept), r2, tuple(int(t) for t in ts))


def metric_at(traj: Trajectory, metric: str, checkpoints: Iterable[int]) -> np.ndarray:
    """Metric values after ``T`` rounds for each checkpoint.

    Runs are prefix-consistent, so one long trajectory stands in for a sweep of
    shorter runs over the checkpoints.
    """
    idx = np.asarray(list(checkpoints)) - 1
    if metric == "IR_T":
        return traj.instant_regret_curve()[idx]
    if metric == "f_gap":
        return traj.f_gaps[idx]
    if metric == "re_to_eq":
        return traj.re_to_eq[idx]
    raise ValueError(f"unknown metric {metric!r}")


def rate_fit(traj: Trajectory, metric: str = "IR_T", checkpoints: Sequence[int] = DYADIC_CHECKPOINTS) -> RateFit:
    checkpoints = [c for c in checkpoints if c <= len(traj)]
    return fit_rate(checkpoints, metric_at(traj, metric, checkpoints), metric)


def summary_json(trajectories: Sequence[Trajectory]) -> str:
    return json.dumps([t.summary() for t in trajectories], indent=2, sort_keys=True) + "\n"
