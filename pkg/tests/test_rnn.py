import numpy as np
import pytest

from noneuclid.norms import NormSpec, log_norm
from noneuclid.solvers import CertificationError, InvalidStepSize, SolveConfig
from noneuclid.rnn import (
    METHODS,
    RnnModel,
    contraction_certificate,
    empirical_lipschitz,
    equilibrium,
    equilibrium_fb,
    equilibrium_forward_step,
    equilibrium_pr,
    lipschitz_bound,
    lipschitz_bound_prior,
    load_model,
    random_model,
    rnn_residual,
    save_model,
    theoretical_factor,
)

AUTO = SolveConfig(alpha=None, tol=1e-12, max_iter=100_000)


def scalar_model(activation="relu"):
    return RnnModel([[-1.0]], [[1.0]], [0.0], activation)


def test_residual_examples():
    m = scalar_model()
    assert rnn_residual(m, np.array([1.0]), [2.0])[0] == 0.0
    assert rnn_residual(m, np.array([0.0]), [0.0])[0] == 0.0
    rng = np.random.default_rng(0)
    B, b = rng.standard_normal((3, 2)), rng.standard_normal(3)
    lin = RnnModel(np.zeros((3, 3)), B, b, "identity")
    x, u = rng.standard_normal(3), rng.standard_normal(2)
    assert np.allclose(rnn_residual(lin, x, u), -x + B @ u + b)
    with pytest.raises(ValueError):
        rnn_residual(m, np.zeros(2), [1.0])
    with pytest.raises(ValueError):
        rnn_residual(m, np.zeros(1), [1.0, 2.0])


def test_model_validation():
    with pytest.raises(ValueError):
        RnnModel(np.ones((2, 3)), np.ones((2, 1)))
    with pytest.raises(ValueError):
        RnnModel(np.eye(2), np.ones((3, 1)))
    with pytest.raises(ValueError):
        RnnModel(np.eye(2), np.ones((2, 1)), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        RnnModel(np.eye(2), np.ones((2, 1)), weights=[1.0])
    m = RnnModel([[0.5, 1.0], [0.0, -1.0]], [[1.0], [1.0]], weights=[1.0, 4.0])
    assert m.gamma == log_norm(m.A, NormSpec.linf([1.0, 4.0])) == 4.5
    assert "RnnModel" in repr(m)


def test_contraction_certificate():
    assert contraction_certificate(RnnModel([[0.9]], [[1.0]])).rate == pytest.approx(0.1)
    assert contraction_certificate(RnnModel([[0.9]], [[1.0]], activation="leaky_relu:0.1")).rate == pytest.approx(0.1)
    assert contraction_certificate(RnnModel([[-1.0]], [[1.0]])).rate == 1.0
    assert contraction_certificate(RnnModel([[-1.0]], [[1.0]], activation="leaky_relu:0.1")).rate == pytest.approx(1.1)
    with pytest.raises(CertificationError):
        contraction_certificate(RnnModel([[1.0]], [[1.0]]))


@pytest.mark.parametrize("solve", [equilibrium_forward_step, equilibrium_fb, equilibrium_pr])
def test_scalar_equilibrium(solve):
    res = solve(scalar_model(), [2.0], AUTO)
    assert res.converged and res.x_star[0] == pytest.approx(1.0, abs=1e-11)


def test_linear_one_step():
    rng = np.random.default_rng(1)
    B, b, u = rng.standard_normal((3, 2)), rng.standard_normal(3), rng.standard_normal(2)
    lin = RnnModel(np.zeros((3, 3)), B, b, "identity")
    assert lin.alpha_max_forward_step == 1.0
    res = equilibrium_forward_step(lin, u, SolveConfig(alpha=1.0))
    assert res.iterations == 1 and np.allclose(res.x_star, B @ u + b, atol=1e-15)


def test_reported_factors():
    def with_gamma(g, a_min):
        # row 0 sets min A_ii, row 1 attains gamma
        return RnnModel([[a_min, 0.0], [0.0, g]], [[1.0], [1.0]])

    m = with_gamma(-1.0, -1.0)
    assert theoretical_factor(m, "fb", 0.175) == pytest.approx(0.649, abs=2e-3)
    assert theoretical_factor(m, "pr", 0.175) == pytest.approx(0.481, abs=1e-3)
    assert theoretical_factor(m, "forward_step", 0.175) == pytest.approx(0.825, abs=1e-3)
    m = with_gamma(0.9, -4.5)
    assert theoretical_factor(m, "fb", 0.182) == pytest.approx(0.982, abs=1e-3)
    assert theoretical_factor(m, "pr", 0.182) == pytest.approx(0.964, abs=1e-3)
    assert m.alpha_max == pytest.approx(1 / 5.5)
    with pytest.raises(ValueError):
        theoretical_factor(m, "newton", 0.1)


def test_forward_step_range_formula():
    # ReLU with positive diagonal: min(d1 a, d2 a) = 0, so the range is ]0, 1]
    m = RnnModel([[0.2, 0.0], [0.0, 0.5]], [[1.0], [1.0]], activation="relu")
    assert m.alpha_max_forward_step == 1.0
    assert m.alpha_max == pytest.approx(1 / 0.8)


def test_step_checks():
    m = scalar_model()
    with pytest.raises(InvalidStepSize):
        equilibrium_fb(m, [1.0], SolveConfig(alpha=0.6))
    res = equilibrium_fb(m, [1.0], SolveConfig(alpha=0.6, force=True, tol=1e-12))
    assert res.converged
    with pytest.raises(CertificationError):
        equilibrium_fb(RnnModel([[1.5]], [[1.0]]), [1.0])
    with pytest.raises(ValueError):
        equilibrium(m, [1.0], "newton")


@pytest.mark.parametrize("gamma", [0.9, -1.0, 0.3])
@pytest.mark.parametrize("activation", ["relu", "leaky_relu:0.1", "soft_threshold:0.2", "clamp:-1:1"])
def test_invariants(gamma, activation):
    model, u = random_model(40, 8, gamma, activation, seed=7)
    results = {m: equilibrium(model, u, m, SolveConfig(alpha=None, tol=1e-11, max_iter=50_000)) for m in METHODS}
    xs = [r.x_star for r in results.values()]
    for x in xs:
        assert np.max(np.abs(x - xs[0])) <= 1e-6
        assert np.max(np.abs(rnn_residual(model, x, u))) <= 1e-10
    for r in results.values():
        assert r.converged
        res = r.residuals
        prev, nxt = res[5:-1], res[6:]
        keep = prev > 1e3 * np.finfo(float).eps * res[0]
        assert np.all(nxt[keep] / prev[keep] <= r.factor + 1e-3)


def test_degenerate_experiment():
    model, u = random_model(1, 1, -1.0, "relu", seed=0)
    for m in METHODS:
        res = equilibrium(model, u, m, SolveConfig(alpha=None, tol=1e-10))
        assert res.converged and res.iterations <= 60


def test_random_model_projection_and_seed():
    m1, u1 = random_model(30, 5, -1.0, seed=3)
    m2, u2 = random_model(30, 5, -1.0, seed=3)
    assert np.array_equal(m1.A, m2.A) and np.array_equal(u1, u2)
    assert m1.gamma <= -1.0 + 1e-9
    m3, _ = random_model(30, 5, -1.0, seed=4)
    assert not np.array_equal(m1.B, m3.B)


# ---------------------------------------------------------------- Lipschitz

def test_lipschitz_examples():
    m = scalar_model()
    assert lipschitz_bound(m) == 0.5
    assert lipschitz_bound_prior(m) == 1.0
    B = np.array([[1.0, -2.0], [0.5, 0.5]])
    zero = RnnModel([[0.0, 0.0], [0.0, -1.0]], B)
    assert zero.gamma == 0.0 and lipschitz_bound(zero) == 3.0
    hi = RnnModel([[0.9, 0.0], [0.0, 0.0]], B)
    assert lipschitz_bound(hi) == lipschitz_bound_prior(hi)
    with pytest.raises(CertificationError):
        lipschitz_bound(RnnModel([[1.0]], [[1.0]]))


def test_lipschitz_ratio_negative_gamma():
    rng = np.random.default_rng(2)
    for g in (-0.5, -1.0, -3.0):
        model, _ = random_model(10, 3, g, seed=int(rng.integers(100)))
        # the new bound is the prior one times 1/(1 - gamma)
        assert lipschitz_bound(model) / lipschitz_bound_prior(model) == pytest.approx(1 / (1 - model.gamma), rel=1e-12)


def test_weighted_lipschitz_bound():
    eta = np.array([1.0, 3.0])
    m = RnnModel([[-1.0, 0.0], [0.0, -1.0]], [[1.0], [1.0]], weights=eta)
    assert lipschitz_bound(m) == pytest.approx(3.0 * 1.0 / 2.0)


def test_empirical_lipschitz():
    rng = np.random.default_rng(3)
    zero_b = RnnModel(-np.eye(3), np.zeros((3, 2)), rng.standard_normal(3))
    assert empirical_lipschitz(zero_b, pair_count=5) == 0.0
    # x = relu(-x + u) gives x = u / 2 for u >= 0
    emp = empirical_lipschitz(scalar_model(), pair_count=20, offset=5.0, scale=1.0)
    assert emp == pytest.approx(0.5, abs=1e-9)
    model, _ = random_model(50, 10, 0.5, seed=1)
    assert empirical_lipschitz(model, pair_count=20) <= lipschitz_bound(model)


def test_sandwich():
    for g in (-1.0, 0.5):
        model, _ = random_model(20, 5, g, "leaky_relu:0.1", seed=11)
        emp = empirical_lipschitz(model, pair_count=20, seed=1)
        assert emp <= lipschitz_bound(model) <= lipschitz_bound_prior(model)
        if model.gamma < 0:
            assert lipschitz_bound(model) < lipschitz_bound_prior(model)


# ---------------------------------------------------------------- serialization

def test_save_load(tmp_path):
    model, u = random_model(6, 2, -0.5, "leaky_relu:0.1", seed=5, weights=np.linspace(1, 2, 6))
    save_model(model, tmp_path / "m")
    back = load_model(tmp_path / "m")
    assert np.array_equal(back.A, model.A) and np.array_equal(back.B, model.B)
    assert np.array_equal(back.b, model.b) and np.array_equal(back.eta, model.eta)
    assert back.activation.spec_string == model.activation.spec_string
    assert back.gamma == model.gamma
    (tmp_path / "m" / "b.csv").unlink()
    (tmp_path / "m" / "meta.txt").unlink()
    bare = load_model(tmp_path / "m")
    assert np.array_equal(bare.b, np.zeros(6)) and bare.activation.tag == "relu"
