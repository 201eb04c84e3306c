import numpy as np
import pytest

from lastround.game import Equilibrium, PayoffMatrix
from lastround.minimax import (
    brute_force_minimax_2x2,
    detect_fully_mixed,
    linprog_max,
    solve_minimax,
    verify_equilibrium,
)


def test_linprog_small_problem():
    # max 3x + 2y s.t. x + y <= 4, x + 3y <= 6  ->  x=4, y=0, objective 12
    res = linprog_max([3, 2], [[1, 1], [1, 3]], [4, 6])
    assert np.allclose(res.x, [4, 0])
    assert res.objective == pytest.approx(12)
    # only the first row binds; its dual (3, 0) dominates the costs (3, 2)
    assert np.allclose(res.duals, [3, 0])


def test_linprog_equality_rows():
    # max x + y s.t. x + 2y = 2, x <= 1  ->  x=1, y=0.5
    res = linprog_max([1, 1], [[1, 0]], [1], [[1, 2]], [2])
    assert np.allclose(res.x, [1, 0.5])


def test_identity_game(identity_game):
    rep = solve_minimax(identity_game)
    eq = rep.equilibrium
    assert np.allclose(eq.row_strategy, [0.5, 0.5]) and np.allclose(eq.col_strategy, [0.5, 0.5])
    assert eq.value == pytest.approx(0.5, abs=1e-12)
    assert rep.method == "simplex-lp"


def test_derived_game(derived_game):
    eq = solve_minimax(derived_game).equilibrium
    assert np.allclose(eq.row_strategy, [1 / 3, 2 / 3], atol=1e-12)
    assert np.allclose(eq.col_strategy, [4 / 9, 5 / 9], atol=1e-12)
    assert eq.value == pytest.approx(7 / 15, abs=1e-12)
    assert verify_equilibrium(derived_game, eq, tol=1e-9)
    assert detect_fully_mixed(derived_game, eq) == (True, True, True)


def test_constant_game():
    a = PayoffMatrix(np.full((3, 3), 0.5))
    rep = solve_minimax(a)
    assert rep.duality_gap == 0.0
    assert rep.equilibrium.value == pytest.approx(0.5)
    assert detect_fully_mixed(a, rep.equilibrium) == (True, True, True)
    assert np.allclose(rep.equilibrium.row_strategy, 1 / 3)


def test_duplicate_rows_dominant_column():
    # column 0 pays 1 whatever the row does, so the value is 1 and y* = e_1
    a = PayoffMatrix([[1.0, 0.5], [1.0, 0.5]])
    eq = solve_minimax(a).equilibrium
    assert eq.value == pytest.approx(1.0)
    assert np.allclose(eq.col_strategy, [1.0, 0.0])
    assert not eq.col_fully_mixed
    assert not detect_fully_mixed(a, eq)[1]


def test_verify_equilibrium_examples(identity_game):
    bad = Equilibrium.from_strategies([1, 0], [0.5, 0.5], 0.5)
    assert not verify_equilibrium(identity_game, bad)
    assert verify_equilibrium(identity_game, bad, tol=1.0)


def test_brute_force_examples(identity_game, derived_game):
    eq = brute_force_minimax_2x2(derived_game)
    assert np.allclose(eq.row_strategy, [1 / 3, 2 / 3])
    assert np.allclose(eq.col_strategy, [4 / 9, 5 / 9])
    assert eq.value == pytest.approx(7 / 15)
    eq = brute_force_minimax_2x2(PayoffMatrix([[1, 1], [0, 0]]))
    assert np.allclose(eq.row_strategy, [0, 1]) and eq.value == 0.0
    eq = brute_force_minimax_2x2(identity_game)
    assert np.allclose(eq.row_strategy, [0.5, 0.5]) and eq.value == 0.5


def test_dominated_row_game_solver():
    eq = solve_minimax(PayoffMatrix([[1, 1], [0, 0]])).equilibrium
    assert np.allclose(eq.row_strategy, [0, 1]) and eq.value == 0.0


def test_interior_detection_on_pure_game():
    a = PayoffMatrix([[0.9, 0.2], [0.8, 0.1]])  # row 2 dominates; saddle at (2, 1)
    eq = solve_minimax(a).equilibrium
    assert eq.value == pytest.approx(0.8)
    assert detect_fully_mixed(a, eq) == (False, False, False)


@pytest.mark.parametrize("seed", range(30))
def test_random_2x2_matches_closed_form(seed):
    a = PayoffMatrix(np.random.default_rng(seed).random((2, 2)))
    assert solve_minimax(a).equilibrium.value == pytest.approx(brute_force_minimax_2x2(a).value, abs=1e-9)
