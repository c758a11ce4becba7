import math

import numpy as np
import pytest

from pepkit.analysis import PiecewiseQuadratic1D, family_builder
from pepkit.methods import (
    StepMatrix,
    custom,
    fgm,
    fgm_thetas,
    gm,
    mfgm,
    ogm,
    ogm_thetas,
    simulate,
)

GOLDEN = (1 + math.sqrt(5)) / 2


def test_gm_unrolled_coefficients():
    H = gm(2, 1.5)
    assert np.allclose(H.h, [[1.5, 0.0], [1.5, 1.5]])
    assert np.allclose(gm(1, 1.5).h, [[1.5]])
    assert H.has_gap_guarantee


def test_gm_zero_step_keeps_iterates_fixed():
    H = gm(3, 0.0)
    traj = simulate(H, lambda x: (0.5 * float(x @ x), x), np.array([2.0]))
    assert np.allclose(traj.xs, 2.0)
    assert not H.has_gap_guarantee


def test_fgm_two_step_coefficients():
    th2 = 0.5 * (1 + math.sqrt(4 * GOLDEN ** 2 + 1))
    H = fgm(2, "secondary")
    assert H.h[0, 0] == pytest.approx(1.0)
    assert H.h[1, 0] == pytest.approx(1.0)
    assert H.h[1, 1] == pytest.approx((GOLDEN - 1) / th2 + 1, abs=1e-14)
    assert H.h[1, 1] == pytest.approx(1.2818, abs=1e-4)


def test_fgm_primary_single_step_is_unit_gradient_step():
    assert np.allclose(fgm(1, "primary").h, [[1.0]])


@pytest.mark.parametrize("maker", [fgm, ogm])
@pytest.mark.parametrize("N", [1, 2, 5, 13, 30])
def test_accelerated_methods_use_latest_gradient(maker, N):
    for seq in ("primary", "secondary"):
        H = maker(N, seq)
        assert H.has_gap_guarantee
        assert np.all(np.diagonal(H.h) > 0)


def test_ogm_single_step_secondary_is_three_halves():
    assert np.allclose(ogm(1, "secondary").h, [[1.5]])
    assert np.allclose(ogm(1, "primary").h, [[1.0]])


def test_ogm_theta_sequence_two_steps():
    th = ogm_thetas(2)
    assert th[0] == 1.0
    assert th[1] == pytest.approx(GOLDEN)                       # interior rule
    assert th[2] == pytest.approx(0.5 * (1 + math.sqrt(8 * GOLDEN ** 2 + 1)))
    assert fgm_thetas(2)[2] == pytest.approx(0.5 * (1 + math.sqrt(4 * GOLDEN ** 2 + 1)))


@pytest.mark.parametrize("thetas", [fgm_thetas, ogm_thetas])
def test_theta_sequences_start_at_one_and_grow(thetas):
    for N in (1, 2, 7, 20):
        th = thetas(N)
        assert th[0] == 1.0
        assert np.all(np.diff(th) >= 0)


def test_mfgm_two_steps_is_two_unit_gradient_steps():
    H = mfgm(2)
    assert np.allclose(H.h, [[1.0, 0.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        mfgm(3)
    with pytest.raises(ValueError):
        mfgm(0)


def test_mfgm_prefix_matches_accelerated_run():
    rng = np.random.default_rng(5)
    Q = rng.normal(size=(4, 4))
    Q = Q @ Q.T / 8 + 0.05 * np.eye(4)

    def f(x):
        return 0.5 * float(x @ Q @ x), Q @ x

    x0 = rng.normal(size=4)
    whole = simulate(mfgm(8), f, x0)
    half = simulate(fgm(4, "primary"), f, x0)
    assert np.allclose(whole.xs[:5], half.xs)


def test_custom_round_trip_and_flags():
    H = gm(2, 1.5)
    back = custom(H.h, label="again")
    assert np.allclose(back.h, H.h)
    flat = custom([[0.5], [0.25, 0.0]])
    assert not flat.has_gap_guarantee
    assert np.allclose(custom([[1.5]]).h, ogm(1, "secondary").h)
    with pytest.raises(ValueError):
        custom(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_step_matrix_json_round_trip():
    H = fgm(3, "primary")
    back = StepMatrix.from_json(H.to_json())
    assert back.N == 3 and back.sequence == "primary" and back.label == H.label
    assert np.allclose(back.h, H.h)


def test_simulate_oscillating_quadratic_closed_form():
    L, R, h, N = 2.0, 1.3, 0.7, 4
    f2 = family_builder("f2", L=L)
    traj = simulate(gm(N, h), f2.value_and_grad, np.array([R]), L=L)
    assert traj.criterion("obj") == pytest.approx(0.5 * L * R * R * (1 - h) ** (2 * N),
                                                  rel=1e-13)
    assert math.sqrt(traj.criterion("grad")) == pytest.approx(
        L * R * abs(1 - h) ** N, rel=1e-13)


def test_simulate_flat_piece_trajectory_closed_form():
    L, R, h, N = 1.0, 1.0, 1.2, 5
    f1 = family_builder("f1", L=L, R=R, N=N, h=h)
    traj = simulate(gm(N, h), f1.value_and_grad, np.array([R]), L=L)
    denom = 2 * N * h + 1
    assert traj.criterion("obj") == pytest.approx(0.5 * L * R * R / denom, rel=1e-13)
    expected = R * (1 - np.arange(N + 1) * h / denom)
    assert np.allclose(traj.xs[:, 0], expected)
    assert np.all(traj.xs[:, 0] >= f1.tau - 1e-15)   # never reaches the steep core


def test_trajectory_criteria_kinds():
    fn = PiecewiseQuadratic1D(0.0, 1.0, math.inf)
    traj = simulate(gm(2, 1.0), fn.value_and_grad, np.array([3.0]))
    assert traj.criterion("obj") == pytest.approx(0.0)
    assert traj.criterion("dist") == pytest.approx(0.0)
    assert traj.criterion("mingrad") == pytest.approx(0.0)
    with pytest.raises(ValueError):
        traj.criterion("nope")


def test_lower_triangularity_enforced():
    with pytest.raises(ValueError):
        StepMatrix(N=2, h=np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        gm(0, 1.0)
