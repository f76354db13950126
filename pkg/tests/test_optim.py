import numpy as np
import pytest

from memlab import linalg, optim
from memlab.distributions import two_class_distribution
from memlab.embeddings import make_embeddings
from memlab.model import MemoryProblem, correct_probabilities, gradient


def _problem(kind="identity", k=30, l=6, alpha=0.8):
    return MemoryProblem(make_embeddings(kind, k, 1), two_class_distribution(k, l, alpha))


def test_unknown_optimizer():
    with pytest.raises(ValueError, match="unknown optimizer"):
        optim.OptimizerKind("lion")
    with pytest.raises(ValueError):
        optim.OptimizerKind("muon_momentum", momentum=1.0)


def test_directions():
    g = np.array([[1.0, -2.0], [0.0, 3.0]])
    assert np.array_equal(optim.update_direction("gd", g), g)
    assert np.array_equal(optim.update_direction("sign_gd", g), [[1, -1], [0, 1]])
    assert np.array_equal(optim.update_direction("adam_full", g), np.sign(g))
    o = optim.update_direction("muon_exact", g)
    assert np.allclose(o @ o.T, np.eye(2))
    assert np.linalg.norm(optim.update_direction("muon_ns", g) - o) < 1e-6


def test_zero_gradient_gives_zero_direction():
    for name in optim.KINDS:
        assert not optim.update_direction(name, np.zeros((3, 3))).any()


def test_momentum_zero_matches_muon():
    g = np.random.default_rng(0).normal(size=(4, 4))
    state, d = optim.momentum_update(optim.MomentumState(), optim.OptimizerKind("muon_momentum"), g)
    assert state.step == 1
    assert np.allclose(d, optim.update_direction("muon_exact", g))


def test_adam_first_step_is_sign():
    g = np.random.default_rng(0).normal(size=(4, 4))
    kind = optim.OptimizerKind("adam_full", beta1=0.9, beta2=0.999)
    _, d = optim.momentum_update(optim.MomentumState(), kind, g)
    assert np.allclose(d, np.sign(g))


def test_stateless_momentum_update_rejected():
    with pytest.raises(ValueError, match="no state"):
        optim.momentum_update(optim.MomentumState(), "gd", np.eye(2))


def test_step_line_matches_one_step():
    p = _problem()
    line = optim.StepLine(p, p.zeros(), "sign_gd")
    w = optim.one_step(p, p.zeros(), "sign_gd", 2.5)
    assert np.allclose(line.correct(2.5), correct_probabilities(p, w))
    with pytest.raises(ValueError):
        optim.one_step(p, p.zeros(), "gd", -1.0)


def test_eta_star_hits_target():
    p = _problem()
    eta = optim.min_eta_for_target(p, p.zeros(), "gd", 0.1)
    line = optim.StepLine(p, p.zeros(), "gd")
    assert line.max_min(eta)[0] >= 0.9
    assert line.max_min(eta * (1 - 1e-8))[0] < 0.9


def test_rho_scan_fields():
    p = _problem()
    scan = optim.rho_scan(p, p.zeros(), "muon_exact", 0.1)
    assert scan.rho <= scan.rho_at_eta_star <= 0.9 + 1e-9
    assert scan.eta_argmin >= scan.eta_star
    assert scan.feasible_interval


def test_unreachable_target():
    p = _problem()
    with pytest.raises(ValueError):
        optim.rho_scan(p, p.zeros(), "gd", 0.0)


def test_multi_step_records():
    p = _problem()
    recs = optim.multi_step(p, p.zeros(), "muon_exact", optim.Schedule.constant(0.5, 5), record_spectrum=True, keep_weights=True)
    assert [r.step for r in recs] == list(range(6))
    assert recs[0].update_spectrum is None
    assert np.allclose(recs[1].update_spectrum[: p.k - 1], 1.0)
    assert all(np.isclose(r.delta, r.max_prob - r.min_prob) for r in recs)
    assert np.all(np.diff([r.loss for r in recs]) < 0)
    assert recs[-1].w is not None


def test_multi_step_stateful_and_ns():
    p = _problem(k=12, l=3)
    for kind in (optim.OptimizerKind("muon_momentum", momentum=0.9), optim.OptimizerKind("adam_full", beta1=0.9, beta2=0.99), "muon_ns"):
        recs = optim.multi_step(p, p.zeros(), kind, [0.1] * 4)
        assert recs[-1].loss < recs[0].loss


def test_multi_step_detects_blow_up():
    p = _problem(k=6, l=2)
    w0 = p.zeros()
    w0[0, 0] = np.inf
    with pytest.raises(FloatingPointError, match="step 0"):
        optim.multi_step(p, w0, "gd", [1.0])


@pytest.mark.parametrize("etas", [(), (0.1, float("nan")), (-1.0,)])
def test_schedule_validation(etas):
    with pytest.raises(ValueError):
        optim.Schedule(etas)


def test_rho_trajectory():
    p = _problem()
    recs = optim.multi_step(p, p.zeros(), "gd", [50.0] * 20)
    with pytest.raises(ValueError, match="never met"):
        optim.rho_trajectory(recs[:1], 0.1)
    rho = optim.rho_trajectory(recs, 0.1)
    first = optim.first_reaching(recs, 0.9)
    assert first is not None and rho <= first.min_prob


def test_with_options():
    k = optim.with_options("muon_ns", ns_iterations=5)
    assert k.name == "muon_ns" and k.ns_iterations == 5


def test_gd_imbalance_vs_muon_balance():
    p = _problem(k=99, l=21)
    gd = optim.rho_one_step(p, p.zeros(), "gd", 0.1)
    mu = optim.rho_one_step(p, p.zeros(), "muon_exact", 0.1)
    assert gd < 0.1 < 0.85 < mu


def test_sign_example():
    assert np.array_equal(optim.update_direction("sign_gd", np.array([[0.3, -2.0], [0.0, 5.0]])), [[1, -1], [0, 1]])


def test_muon_uniform_identity_unit_spectrum():
    p = _problem(k=10, l=2, alpha=0.2)
    s = linalg.svd(optim.update_direction("muon_exact", gradient(p, p.zeros()))).s
    assert np.allclose(s, 1.0, atol=1e-12)


def test_zero_step_returns_start():
    p = _problem()
    w0 = np.random.default_rng(0).normal(size=p.weight_shape)
    assert np.array_equal(optim.one_step(p, w0, "muon_exact", 0.0), w0)


def test_gd_step_size_with_realized_beta():
    import math

    p = _problem(k=999, l=199)
    eta = optim.min_eta_for_target(p, p.zeros(), "gd", 0.1)
    expected = (199 / 0.8) * math.log(9 * 998)
    assert abs(eta - expected) / expected < 1e-8
    assert abs(0.2 * 999 / 0.8 * math.log(9 * 998) - 2273.5) < 0.1


def test_muon_balanced_at_eta_star_k999():
    p = _problem(k=999, l=199)
    line = optim.StepLine(p, p.zeros(), "muon_exact")
    eta = optim.min_eta_for_target(p, p.zeros(), "muon_exact", 0.1)
    mx, mn = line.max_min(eta)
    assert abs(mx - 0.9) < 1e-9 and mx - mn <= 0.01


def test_trivial_target_needs_no_step():
    p = _problem(k=2, l=1, alpha=0.8)
    assert optim.min_eta_for_target(p, p.zeros(), "gd", 0.5) == 0.0


def test_gd_rho_near_closed_form_k1000():
    p = _problem(k=1000, l=200)
    rho = optim.rho_one_step(p, p.zeros(), "gd", 0.1)
    assert abs(rho - 1.77e-3) / 1.77e-3 < 0.1


def test_muon_coupled_rho_k999():
    p = _problem(kind="coupled_rotation", k=999, l=199)
    assert optim.rho_one_step(p, p.zeros(), "muon_exact", 0.1) >= 0.89


def test_zero_schedule_is_constant():
    p = _problem()
    recs = optim.multi_step(p, p.zeros(), "sign_gd", [0.0] * 4)
    assert len({(r.loss, r.delta) for r in recs}) == 1


def test_gd_trajectory_imbalanced_k999():
    # GD needs a far larger step than Muon to move at all; see README
    p = _problem(k=999, l=199)
    recs = optim.multi_step(p, p.zeros(), "gd", optim.Schedule.constant(100.0, 50))
    assert max(r.delta for r in recs) > 0.5
    assert optim.rho_trajectory(recs, 0.1) <= 0.1


def test_single_record_rho():
    rec = optim.TrajectoryRecord(step=0, eta=0.0, loss=0.1, delta=0.0, min_prob=0.9, max_prob=0.9)
    assert optim.rho_trajectory([rec], 0.1) == 0.9


def test_momentum_repeated_gradient_same_direction():
    g = np.random.default_rng(5).normal(size=(6, 6))
    kind = optim.OptimizerKind("muon_momentum", momentum=0.95)
    state, d1 = optim.momentum_update(optim.MomentumState(), kind, g)
    _, d2 = optim.momentum_update(state, kind, g)
    assert np.allclose(d1, d2, atol=1e-12)
    assert np.allclose(d1, optim.update_direction("muon_exact", g), atol=1e-12)


def test_adam_without_averaging_is_sign_on_nonzero():
    g = np.array([[1e-3, -4.0], [0.0, 2.5]])
    kind = optim.OptimizerKind("adam_full", adam_eps=1e-300)
    _, d = optim.momentum_update(optim.MomentumState(), kind, g)
    nz = g != 0
    assert np.allclose(d[nz], np.sign(g)[nz])
