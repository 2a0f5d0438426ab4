import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from stcseg.gradcheck import central_difference, random_instance
from stcseg.grid import BBox, GridError
from stcseg.puzzle import (
    bce_loss,
    boundary_loss,
    box_term,
    dice_loss,
    dice_prime,
    position_penalty,
    puzzle_loss,
    puzzle_loss_grad,
)


def test_boundary_loss_examples():
    assert boundary_loss(np.full((3, 3), 0.3), np.zeros((3, 3))) == 0.0
    m = np.array([[1, 0], [0, 0]])
    assert boundary_loss(np.full((2, 2), 0.5), m) == pytest.approx(math.log(2) / 4)
    # clipping keeps a zero probability finite
    assert np.isfinite(boundary_loss(np.zeros((2, 2)), m))


def test_boundary_gradient_example():
    # only the positive pixel moves: d/dz of -log(sigmoid(z)) / hw at z = 0
    m = np.zeros((4, 4))
    m[1, 2] = 1
    g_bd = puzzle_loss_grad(np.zeros((4, 4)), m, BBox(0, 0, 4, 4)) - puzzle_loss_grad(np.zeros((4, 4)), np.zeros((4, 4)), BBox(0, 0, 4, 4))
    assert g_bd[1, 2] == pytest.approx(-0.5 / 16)
    assert np.count_nonzero(np.abs(g_bd) > 1e-15) == 1


def test_dice_prime_examples():
    g = np.array([0, 1, 1, 0.0])
    assert dice_prime(g, g) == 0.0
    p = np.array([1.0, 1, 0, 0])
    assert dice_loss(p, g) == pytest.approx(0.5)
    assert position_penalty(p, g) == pytest.approx(0.5)
    p = np.array([0.5, 0.5, 0.5, 0.5])
    assert dice_prime(p, g) == pytest.approx(oracles.dice_prime(p.tolist(), g.tolist()))
    with pytest.raises(GridError, match="empty"):
        dice_prime(p, np.zeros(4))


@given(st.lists(st.floats(0, 1), min_size=5, max_size=5), st.lists(st.integers(0, 1), min_size=5, max_size=5).filter(any))
def test_dice_prime_non_negative_and_oracle(p, g):
    p, g = np.array(p), np.array(g, dtype=float)
    v = dice_prime(p, g)
    assert v >= -1e-12
    assert v == pytest.approx(oracles.dice_prime(p.tolist(), g.tolist()), abs=1e-12)
    assert dice_prime(p, g) >= dice_loss(p, g)


def test_saturated_prediction_has_zero_box_term():
    b = BBox(1, 2, 5, 6)
    logits = np.full((8, 8), -40.0)
    logits[2:6, 1:5] = 40.0
    lx, ly = box_term(1 / (1 + np.exp(-logits)), b)
    assert lx == pytest.approx(0, abs=1e-12) and ly == pytest.approx(0, abs=1e-12)
    loss = puzzle_loss(logits, np.zeros((8, 8)), b)
    assert loss.total == pytest.approx(0, abs=1e-12)


def test_outside_mass_is_penalised_only_with_penalty():
    b = BBox(0, 0, 4, 8)
    p = np.zeros((8, 8))
    p[:, :4] = 1
    spill = p.copy()
    spill[3, 6] = 0.6
    plain = box_term(spill, b, penalty=False)
    full = box_term(spill, b)
    assert full[0] > plain[0]
    assert full[1] == pytest.approx(plain[1])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_loss_matches_loop_oracle(seed):
    logits, m, b = random_instance(np.random.default_rng(seed), 6, 7)
    got = puzzle_loss(logits, m, b).total
    want = oracles.puzzle_total(logits.tolist(), m.tolist(), (b.x1, b.y1, b.x2, b.y2))
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_gradient_matches_finite_difference(seed):
    logits, m, b = random_instance(np.random.default_rng(seed), 8, 8)
    num = central_difference(lambda z: puzzle_loss(z, m, b).total, logits, 1e-5)
    ana = puzzle_loss_grad(logits, m, b)
    assert np.max(np.abs(ana - num)) <= 1e-6 * max(1.0, np.max(np.abs(num)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_gradient_is_local_to_positives_and_maximisers(seed):
    logits, m, b = random_instance(np.random.default_rng(seed), 8, 9)
    g = puzzle_loss_grad(logits, m, b)
    allowed = m.astype(bool).copy()
    allowed[logits.argmax(axis=0), np.arange(9)] = True
    allowed[np.arange(8), logits.argmax(axis=1)] = True
    assert np.all(g[~allowed] == 0)


def test_bce_includes_negatives():
    m = np.zeros((2, 2))
    assert boundary_loss(np.full((2, 2), 0.5), m) == 0
    assert bce_loss(np.full((2, 2), 0.5), m) == pytest.approx(math.log(2))


def test_shape_mismatch():
    with pytest.raises(GridError):
        puzzle_loss(np.zeros((4, 4)), np.zeros((4, 5)), BBox(0, 0, 2, 2))
