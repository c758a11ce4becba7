import numpy as np
import pytest

from pepkit import analysis
from pepkit.interpolation import FunctionClass, check_interpolable
from pepkit.methods import fgm, gm, simulate
from pepkit.pep import PepSolution, PerformanceCriterion, assemble, solve
from pepkit.reconstruction import factorize, rebuild

SMOOTH = FunctionClass(0.0, 1.0)
OBJ = PerformanceCriterion("obj")


def test_factorize_single_step_gram():
    G = np.array([[1.0, -0.5, 1.0], [-0.5, 0.25, -0.5], [1.0, -0.5, 1.0]])
    P, r = factorize(G)
    assert r == 1
    assert np.allclose(P, [[1.0, -0.5, 1.0]])
    assert np.allclose(P.T @ P, G)


def test_factorize_identity_and_zero():
    P, r = factorize(np.eye(2))
    assert r == 2
    assert np.allclose(P.T @ P, np.eye(2))
    P0, r0 = factorize(np.zeros((3, 3)))
    assert r0 == 0 and P0.shape == (0, 3)


def test_factorize_rejects_indefinite():
    with pytest.raises(ValueError, match="indefinite"):
        factorize(np.diag([1.0, -0.5]))


def test_factorize_sign_convention():
    v = np.array([-2.0, 1.0, 0.5])
    P, r = factorize(np.outer(v, v))
    assert r == 1 and P[0, 0] > 0


def test_rebuild_single_step_instance():
    prob = assemble(SMOOTH, gm(1, 1.5), 1.0, OBJ)
    sol = solve(prob, polish=True)
    inst = rebuild(prob, sol)
    assert inst.rank == 1
    assert inst.trajectory.xs[0, 0] == pytest.approx(1.0, abs=1e-6)
    assert inst.trajectory.gs[0, 0] == pytest.approx(1.0, abs=1e-6)
    assert inst.trajectory.xs[1, 0] == pytest.approx(-0.5, abs=1e-6)
    assert inst.trajectory.gs[1, 0] == pytest.approx(-0.5, abs=1e-6)
    assert inst.achieved == pytest.approx(sol.value, abs=1e-5)
    assert inst.family is not None and inst.family.family == "f2"


def test_rebuild_unit_step_matches_flat_family():
    N = 5
    prob = assemble(SMOOTH, gm(N, 1.0), 1.0, OBJ)
    sol = solve(prob)
    inst = rebuild(prob, sol)
    assert inst.rank == 1
    assert inst.family is not None and inst.family.family == "f1"
    assert inst.family.tau == pytest.approx(1.0 / (2 * N + 1), abs=1e-5)
    hand = simulate(gm(N, 1.0),
                    analysis.family_builder("f1", N=N, h=1.0).value_and_grad,
                    np.array([1.0]))
    assert np.allclose(np.abs(inst.trajectory.xs), np.abs(hand.xs), atol=1e-5)


def test_rebuild_strongly_convex_recognizes_core_radius():
    kappa, N, h = 0.1, 3, 1.0
    prob = assemble(FunctionClass(kappa, 1.0), gm(N, h), 1.0, OBJ)
    sol = solve(prob)
    inst = rebuild(prob, sol)
    assert inst.family is not None and inst.family.family == "f1tau"
    assert inst.family.tau == pytest.approx(analysis.tau_gm(N, h, kappa), abs=1e-5)


def test_rebuild_oscillating_instance_recognizes_pure_quadratic():
    prob = assemble(SMOOTH, gm(3, 1.9), 1.0, OBJ)
    sol = solve(prob)
    inst = rebuild(prob, sol)
    assert inst.family is not None and inst.family.family == "f2"


def test_rebuild_feasible_but_suboptimal_point_is_self_consistent():
    # a feasible (G, f) built from an explicit run must re-achieve its own
    # criterion value, optimal or not
    N, h = 3, 0.5
    prob = assemble(SMOOTH, gm(N, h), 1.0, OBJ)
    fn = analysis.family_builder("f1", N=N, h=h)
    traj = simulate(gm(N, h), fn.value_and_grad, np.array([1.0]))
    cols = np.vstack([traj.gs, traj.xs[0][None, :]])
    sol = PepSolution(value=float(traj.fs[-1]), G=cols @ cols.T, f=traj.fs.copy(),
                      status="optimal")
    inst = rebuild(prob, sol)
    assert inst.achieved == pytest.approx(traj.fs[-1], abs=1e-8)


def test_rebuild_degenerate_zero_gram():
    prob = assemble(SMOOTH, gm(1, 1.0), 1.0, OBJ)
    sol = PepSolution(value=0.0, G=np.zeros((3, 3)), f=np.zeros(2), status="optimal")
    inst = rebuild(prob, sol)
    assert inst.achieved == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(inst.trajectory.xs, 0.0)


def test_rebuild_checks_interpolability():
    prob = assemble(SMOOTH, gm(1, 1.5), 1.0, OBJ)
    bogus = PepSolution(value=1.0, G=np.eye(3), f=np.array([5.0, 1.0]),
                        status="optimal")
    with pytest.raises(ValueError, match="not interpolable"):
        rebuild(prob, bogus)


def test_reconstructed_dataset_passes_membership():
    for maker, crit in [(lambda: gm(4, 1.3), "obj"),
                        (lambda: fgm(4, "secondary"), "obj"),
                        (lambda: fgm(4, "primary"), "mingrad")]:
        prob = assemble(SMOOTH, maker(), 1.0, PerformanceCriterion(crit))
        sol = solve(prob)
        inst = rebuild(prob, sol)
        rep = check_interpolable(inst.dataset, SMOOTH, tol=1e-7)
        assert rep.ok
        assert inst.achieved == pytest.approx(sol.value, abs=1e-5)


def test_rebuild_at_general_scale():
    # the loop closes away from the normalized setting too
    fc = FunctionClass(1.0, 5.0)
    prob = assemble(fc, fgm(3, "secondary"), 0.7, PerformanceCriterion("obj"))
    sol = solve(prob)
    inst = rebuild(prob, sol)
    assert inst.achieved == pytest.approx(sol.value, abs=1e-6 * max(1, sol.value))
    assert np.abs(inst.P.T @ inst.P - sol.G).max() <= 1e-6 * max(1.0, np.abs(sol.G).max())


def test_instance_serialization():
    prob = assemble(SMOOTH, gm(2, 1.0), 1.0, OBJ)
    inst = rebuild(prob, solve(prob))
    payload = inst.to_json()
    assert '"family"' in payload and '"tau"' in payload
    csv_text = inst.trajectory_csv()
    assert csv_text.splitlines()[0] == "i,x[0],g[0],f"
    assert len(csv_text.splitlines()) == 4
