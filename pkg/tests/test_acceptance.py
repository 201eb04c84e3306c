"""Acceptance criteria, one test (and one PASS/FAIL line) per criterion.

Long runs are shared through ``functools.cache`` so criteria that look at the
same trajectories do not simulate twice.
"""

import math
import time
from functools import cache

import numpy as np

from lastround import cli
from lastround.columns import ColumnConfig
from lastround.engine import derive_seeds, generate_game, has_stabilizing_equilibrium, lyapunov_residual_omd, run
from lastround.game import PayoffMatrix
from lastround.learners import LearnerConfig, init_learner, learner_update, mwu_update, omwu_update, project_simplex
from lastround.minimax import brute_force_minimax_2x2, solve_minimax
from lastround.presets import (
    max_block_re_increase,
    max_final_f_gap,
    max_first_hit,
    max_regret_minus_ir,
    max_regret_over_bound,
    max_stabilizing_drift,
    max_tail_distance,
    mean_curve_ir_slope,
    min_interior_fraction,
    min_lyapunov_residual,
    min_tail_distance,
    switched_games,
)

TOL = -1e-9


@cache
def preset_runs(name: str):
    """``[(config, trajectories, seconds)]`` for each run of a preset."""
    out = []
    for config, _ in cli.preset_configs(name):
        start = time.perf_counter()
        trajs = cli.simulate(config)
        out.append((config, trajs, time.perf_counter() - start))
    return out


def _label(config) -> str:
    return f"mu={config.mu} {config.schedule}" if config.schedule == "constant" else config.schedule


# ------------------------------------------------------------------------ 1


def test_c01_solver_duality(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_gap, worst_2x2, count = 0.0, 0.0, 0
    for _ in range(200):
        n, m = rng.integers(2, 11, size=2)
        game = PayoffMatrix(rng.random((n, m)))
        rep = solve_minimax(game)
        worst_gap = max(worst_gap, rep.duality_gap)
        if game.shape == (2, 2):
            count += 1
            worst_2x2 = max(worst_2x2, abs(rep.equilibrium.value - brute_force_minimax_2x2(game).value))
    # fixed 2x2 games so the closed-form comparison never depends on the draw
    for seed in range(20):
        game = PayoffMatrix(np.random.default_rng(seed).random((2, 2)))
        count += 1
        worst_2x2 = max(worst_2x2, abs(solve_minimax(game).equilibrium.value - brute_force_minimax_2x2(game).value))
    elapsed = time.perf_counter() - start
    ok = worst_gap <= 1e-7 and worst_2x2 <= 1e-9 and elapsed < 5.0
    criterion("1 solver duality", ok,
              f"max gap {worst_gap:.2e}, max 2x2 value error {worst_2x2:.2e} over {count} 2x2 games, {elapsed:.2f}s")


# ------------------------------------------------------------------------ 2


def test_c02_kl_residual_mwu(criterion):
    runs = preset_runs("lemma1-check")
    parts, ok = [], True
    total = 0.0
    for config, trajs, secs in runs:
        start = time.perf_counter()
        r = min_lyapunov_residual(trajs)
        total += secs + time.perf_counter() - start
        ok &= r >= TOL
        parts.append(f"{_label(config)} min {r:.2e}")
    ok &= total < 30.0
    criterion("2 KL residual, LRCA vs MWU", ok, "; ".join(parts) + f"; {total:.1f}s")


# ------------------------------------------------------------------------ 3


def test_c03a_hitting_time_within_complexity(criterion):
    parts, ok = [], True
    for config, trajs, _ in preset_runs("lrca-complexity"):
        bound = 2 * 4 * math.log(config.rows) / (config.mu * 0.01 ** 2)
        hit = max_first_hit(trajs, 0.01)
        ok &= hit <= bound
        parts.append(f"mu={config.mu}: worst first round with gap<=0.01 is {hit:.0f} (bound {bound:.0f})")
    criterion("3a rounds to f-gap 0.01 within 2*4ln(n)/(mu eps^2)", ok, "; ".join(parts))


def test_c03b_final_gap_at_horizon(criterion):
    parts, ok = [], True
    for config, trajs, _ in preset_runs("lemma1-check"):
        gap = max_final_f_gap(trajs)
        ok &= gap <= 0.01
        parts.append(f"{_label(config)} max f(x_T)-v {gap:.4f}")
    criterion("3b f(x_T)-v <= 0.01 at T=1e4 on every game", ok, "; ".join(parts))


# ------------------------------------------------------------------------ 4


def test_c04_squared_distance_residual_ftrl(criterion):
    (config, trajs, _), = preset_runs("ftrl-inequality")
    r = min_lyapunov_residual(trajs)
    frac = min_interior_fraction(trajs)
    criterion("4 squared-distance residual, LRCA vs FTRL mu=0.5", r >= TOL and frac >= 0.95,
              f"min residual {r:.3e}, min fully-mixed fraction {frac:.3f}")


def test_c04_companion_mu_scaled_residual(criterion):
    """Companion check, not the criterion: subtract ``mu alpha (f - v)`` instead of ``alpha (f - v)``."""
    (config, trajs, _), = preset_runs("ftrl-inequality")
    worst, count = math.inf, 0
    for t in trajs:
        for k in range(1, (len(t) - 1) // 2 + 1):
            r = lyapunov_residual_omd(t, k, scaled=True)
            if r is not None:
                worst, count = min(worst, r), count + 1
    criterion("4-companion mu-scaled residual", worst >= TOL and count > 0,
              f"min {worst:.2e} over {count} applicable pairs")


# ------------------------------------------------------------------------ 5


def test_c05_kl_residual_lmwu(criterion):
    (config, trajs, _), = preset_runs("lmwu-inequality")
    r = min_lyapunov_residual(trajs)
    criterion("5 KL residual, LRCA vs LMWU mu=0.3", r >= TOL, f"min residual {r:.2e}")


# ------------------------------------------------------------------------ 6


def test_c06_lrca2_vs_omwu(criterion):
    parts, ok = [], True
    for config, trajs, _ in preset_runs("lrca2-omwu"):
        rise = max_block_re_increase(trajs, block=3, burn_in=10)
        gap = max_final_f_gap(trajs)
        ok &= rise <= 1e-9 and gap <= 0.01
        parts.append(f"{config.game}: max KL rise {rise:.1e}, max f(x_T)-v {gap:.4f}")
    criterion("6 LRCA-2 vs OMWU", ok, "; ".join(parts))


# ------------------------------------------------------------------------ 7


def test_c07_instant_regret_rates(criterion):
    parts, ok = [], True
    for (config, trajs, _), limit in zip(preset_runs("ir-rates"), (0.6, 0.8)):
        slope = mean_curve_ir_slope(trajs)
        excess = max_regret_minus_ir(trajs)
        ok &= slope <= limit and excess <= 1e-9
        parts.append(f"{config.schedule}: slope {slope:.3f} (<= {limit}), max R_T-IR_T {excess:.1e}")
    criterion("7 IR_T growth rate and R_T <= IR_T", ok, "; ".join(parts))


# ------------------------------------------------------------------------ 8


def test_c08_combined_policy(criterion):
    (cfg_a, trajs_a, _), (cfg_b, trajs_b, _) = preset_runs("combined-switch")
    switched = switched_games(trajs_a)
    ratio = max_regret_over_bound(trajs_b, scale=4.0)
    criterion("8 LRCA+AdaHedge", switched == 0 and ratio <= 1.0,
              f"(a) {switched:.0f}/{len(trajs_a)} games switched vs MWU; "
              f"(b) max R_T / (4 sqrt(n ln n) T^0.75) = {ratio:.3f} vs random row")


# ------------------------------------------------------------------------ 9


def test_c09a_mwu_vs_mwu_tail_distance(criterion):
    (config, trajs, _), _ = preset_runs("mwu-divergence")
    d = min_tail_distance(trajs, 5000)
    criterion("9a MWU vs MWU min tail ||x_t - x*|| >= 0.1", d >= 0.1, f"min over last 5000 rounds {d:.4f}")


def test_c09b_lrca_tail_distance(criterion):
    _, (config, trajs, _) = preset_runs("mwu-divergence")
    d = max_tail_distance(trajs, 5000)
    # and from the uniform start, which is already x*
    uniform = run(generate_game("matching-pennies"), LearnerConfig("mwu", mu=0.1), ColumnConfig("lrca"), 10_000)
    d0 = max_tail_distance([uniform], 5000)
    criterion("9b LRCA max tail ||x_t - x*|| <= 0.01", max(d, d0) <= 0.01,
              f"from (0.6, 0.4): {d:.1e}; from uniform: {d0:.1e}")


def test_c09_companion_orbit_reaches_boundary(criterion):
    """Companion check, not the criterion: the MWU orbit expands until it hugs the simplex boundary."""
    (config, trajs, _), _ = preset_runs("mwu-divergence")
    t = trajs[0]
    first = max_tail_distance([t], 10_000)
    dist = np.sqrt(t.dist_sq_to_eq)
    early, late = dist[:1000].max(), dist[-5000:].max()
    smallest = t.xs[-5000:].min()
    ok = late >= 0.1 and late > early and smallest < 1e-3
    criterion("9-companion MWU orbit expands to the boundary", ok,
              f"max distance first 1000 rounds {early:.3f}, last 5000 {late:.3f} (run max {first:.3f}); "
              f"smallest tail coordinate {smallest:.1e}")


# ----------------------------------------------------------------------- 10


def test_c10_stability(criterion):
    worst, games = 0.0, 0
    for s in derive_seeds(10, 20):
        game = generate_game("random-interior", 4, 4, s)
        eq = solve_minimax(game).equilibrium
        if not has_stabilizing_equilibrium(game, eq):
            continue
        games += 1
        warm = np.random.default_rng(s).random((25, 4)) @ game.entries.T
        for algo in ("mwu", "lmwu", "ftrl"):
            state = init_learner(LearnerConfig(algo, mu=0.3), 4)
            for loss in warm:
                state = learner_update(state, loss)
            after = learner_update(state, game.entries @ eq.col_strategy)
            worst = max(worst, float(np.abs(after.strategy - state.strategy).max()))
    drift = max(max_stabilizing_drift(trajs) for _, trajs, _ in preset_runs("ftrl-stability"))
    criterion("10 stability under y*", games > 0 and worst <= 1e-10 and drift <= 1e-10,
              f"{games} games, max one-step change {worst:.1e}; max drift over y* rounds in LRCA runs {drift:.1e}")


# ----------------------------------------------------------------------- 11


def test_c11_property_suites(criterion):
    rng = np.random.default_rng(11)
    z = rng.normal(scale=2.0, size=(10_000, 6))
    p = project_simplex(z)
    support = p > 1e-12
    tau = np.where(support, z - p, np.nan)
    tau_mean = np.nanmean(tau, axis=1, keepdims=True)
    kkt = (np.abs(p.sum(axis=1) - 1).max() <= 1e-12 and p.min() >= 0
           and np.nanmax(np.abs(tau - tau_mean)) <= 1e-9
           and np.all(np.where(support, True, z <= tau_mean + 1e-9)))

    x = rng.dirichlet(np.ones(5), size=1000)
    loss = rng.random((1000, 5))
    mu = rng.random((1000,))
    omwu_gap = float(np.abs(omwu_update(x, loss, loss, mu) - mwu_update(x, loss, mu)).max())

    state = init_learner(LearnerConfig("mwu", mu=0.3), 5)
    w = np.full(5, 0.2)
    for ell in rng.random((2000, 5)):
        state = learner_update(state, ell)
        w = w * np.exp(-0.3 * ell)
        w /= w.sum()
    log_gap = float(np.abs(state.strategy - w).max())

    game = generate_game("random-uniform", 5, 5, 1)
    a = run(game, LearnerConfig("random"), ColumnConfig("lrca-adahedge"), 3000, seed=2)
    b = run(game, LearnerConfig("random"), ColumnConfig("lrca-adahedge"), 3000, seed=2)
    identical = a.csv_text() == b.csv_text() and np.array_equal(a.xs, b.xs)

    ok = kkt and omwu_gap <= 1e-12 and log_gap <= 1e-12 and identical
    criterion("11 property suites", ok,
              f"KKT on 1e4 vectors {'ok' if kkt else 'broken'}; OMWU-MWU {omwu_gap:.1e}; "
              f"log vs direct MWU {log_gap:.1e}; reruns identical {identical}")
