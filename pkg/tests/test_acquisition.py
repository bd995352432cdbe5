import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from psychonet import acquisition as acq
from psychonet import network as nn
from psychonet.estimator import PsychometricNetwork
from psychonet.validation import EmptyDatasetError


def test_exploration_schedule_values():
    sched = acq.ExplorationSchedule()
    assert acq.exploration_probability(1, sched) == 0.5
    assert acq.exploration_probability(2, sched) == pytest.approx(0.485)
    assert acq.exploration_probability(77, sched) == 0.05
    with pytest.raises(ValueError):
        acq.exploration_probability(0, sched)


def test_parzen_density_peak_value():
    # single point at zero distance, h=0.25, K=2: 1/(h^2 * 2*pi)
    x = np.array([[0.3, -0.4]])
    val = acq.parzen_density(x, x, h=0.25)
    assert val[0] == pytest.approx(1.0 / (0.0625 * 2.0 * np.pi))


def test_parzen_density_tail_and_symmetry():
    data = np.array([[0.0, 0.0]])
    far = acq.parzen_density(np.array([[2.5, 0.0]]), data, h=0.25)  # 10h away
    peak = acq.parzen_density(np.array([[0.0, 0.0]]), data, h=0.25)
    assert far[0] < 1e-20 * peak[0]
    # two mirrored points contribute equally at the midpoint
    pair = np.array([[1.0, 0.0], [-1.0, 0.0]])
    lhs = acq.parzen_density(np.array([[0.0, 0.0]]), pair[:1], h=0.25)
    rhs = acq.parzen_density(np.array([[0.0, 0.0]]), pair[1:], h=0.25)
    assert lhs[0] == pytest.approx(rhs[0])


def test_parzen_density_brute_force():
    rng = np.random.default_rng(0)
    data = rng.normal(size=(7, 3))
    x = rng.normal(size=(1, 3))
    h = 0.4
    expected = sum(
        np.exp(-np.sum((x[0] - d) ** 2) / (2 * h * h)) for d in data
    ) / (7 * h**3 * (2 * np.pi) ** 1.5)
    assert acq.parzen_density(x, data, h)[0] == pytest.approx(expected, rel=1e-12)


def test_parzen_density_empty_history():
    with pytest.raises(EmptyDatasetError):
        acq.parzen_density(np.zeros((1, 2)), np.zeros((0, 2)), 0.25)


def test_proximity_component_values():
    assert acq.proximity_component(np.array([5.0]), 5.0)[0] == 0.0
    assert acq.proximity_component(np.array([0.0]), 5.0)[0] == 1.0
    assert acq.proximity_component(np.array([2.5]), 5.0)[0] == 0.5
    with pytest.raises(ValueError):
        acq.proximity_component(np.array([1.0]), 0.0)


def test_normalized_component_degenerate_rule():
    raw = np.array([0.0, 0.5, 1.0])
    assert np.allclose(acq.normalized_component(raw, 1e-15), 1.0)
    assert np.allclose(acq.normalized_component(raw, 2.0), [0.0, 0.25, 0.5])
    assert acq.normalized_component(np.array([3.0]), 2.0)[0] == 1.0  # clamped


def test_combine_examples():
    w = np.array([0.8, 10.6, 6.0, 4.0])
    assert acq.combine(np.ones((1, 4)), w)[0] == pytest.approx(1.0)
    comps = np.array([[0.5, 0.0, 0.9, 0.9]])
    assert acq.combine(comps, w)[0] == 0.0
    assert acq.combine(np.full((1, 4), 0.25), w)[0] == pytest.approx(0.25)


def test_combine_zero_weight_component_inert():
    w = np.array([1.0, 0.0, 1.0, 0.0])
    comps = np.array([[0.5, 0.0, 0.5, 0.0]])  # zeros only where weight is zero
    assert acq.combine(comps, w)[0] == pytest.approx(0.5)


@settings(max_examples=60)
@given(
    st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4),
    st.lists(st.floats(0.0, 20.0), min_size=4, max_size=4).filter(lambda w: sum(w) > 0.1),
    st.floats(0.1, 10.0),
)
def test_combine_invariant_under_weight_rescaling(comps, weights, scale_factor):
    comps = np.array([comps])
    w = np.array(weights)
    a = acq.combine(comps, w)[0]
    b = acq.combine(comps, w * scale_factor)[0]
    assert a == pytest.approx(b, rel=1e-9)


def test_acquisition_weights_validation():
    with pytest.raises(ValueError):
        acq.AcquisitionWeights(-1.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        acq.AcquisitionWeights(0.0, 0.0, 0.0, 0.0)
    masked = acq.AcquisitionWeights().masked(("prox", "unc"))
    assert masked[0] == 0.0 and masked[3] == 0.0
    assert masked[1] == 10.6 and masked[2] == 6.0


def _fitted_model(n=12, dim=2, seed=0, alpha=0.0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, dim))
    y = (rng.random(n) < 0.6).astype(float)
    model = PsychometricNetwork(alpha=alpha, epochs=10, seed=seed).fit(X, y)
    return model, X, y


def test_lookahead_zero_residuals_keep_predictions():
    model, X, y = _fitted_model()
    net, scale = model.network_, model.scale
    Xn = model.normalize(X)
    q = nn.forward(net, Xn, scale)[1]
    x_new = np.array([0.1, -0.2])
    U = np.random.default_rng(1).uniform(-1, 1, size=(20, 2))
    q_new = nn.forward(net, np.atleast_2d(x_new), scale)[1][0]
    q_u = nn.forward(net, U, scale)[1]
    # labels equal to current predictions: residuals vanish, nothing moves
    preds = acq.ntk_lookahead_predict(net, scale, Xn, q, x_new, q_new, U)
    assert np.allclose(preds, q_u, atol=1e-10)


def test_lookahead_interpolation_identity():
    model, X, y = _fitted_model(n=10, seed=3)
    net, scale = model.network_, model.scale
    Xn = model.normalize(X) * 2.0  # spread for conditioning
    x_new = np.array([0.5, 0.5])
    X_plus = np.vstack([Xn, x_new])
    y_plus = np.append(y, 1.0)
    preds = acq.ntk_lookahead_predict(net, scale, Xn, y, x_new, 1.0, X_plus, jitter=1e-6)
    assert np.max(np.abs(preds - y_plus)) < 1e-3


def test_lookahead_linear_network_matches_kernel_regression():
    # single linear layer: parameter gradients are analytic, so the kernel
    # regression form can be recomputed independently
    net = nn.Network([2, 1], np.zeros(3))
    w, b = net.layer_views()[0]
    w[...] = [[0.3, -0.2]]
    b[...] = 0.1
    scale = nn.PsychScale()
    X = np.array([[0.5, 0.2]])
    y = np.array([1.0])
    x_new = np.array([-0.4, 0.7])
    U = np.array([[0.1, 0.1], [0.8, -0.3], [-0.5, -0.5]])

    jitter = 1e-8
    preds = acq.ntk_lookahead_predict(net, scale, X, y, x_new, 0.0, U, jitter=jitter)

    def features(x):
        raw = float(w @ x + b)
        s = nn.output_derivative(np.array([raw]), scale)[0]
        return s * np.array([x[0], x[1], 1.0]), raw

    X_plus = np.vstack([X, x_new])
    y_plus = np.array([1.0, 0.0])
    G = np.array([features(x)[0] for x in X_plus])
    q_plus = nn.forward(net, X_plus, scale)[1]
    gram = G @ G.T + jitter * np.eye(2)
    coeffs = np.linalg.solve(gram, y_plus - q_plus)
    for i, u in enumerate(U):
        gu, _ = features(u)
        expected = nn.forward(net, np.atleast_2d(u), scale)[1][0] + gu @ G.T @ coeffs
        assert preds[i] == pytest.approx(expected, rel=1e-9)


def test_lookahead_symmetric_at_half_probability():
    # constant-0.5 network: both labels induce the same squared change
    net = nn.he_init(2, seed=0)
    net.params[:] = 0.0
    raw_for_half = 20.0 * np.log10(np.log(2.0))
    net.layer_views()[-1][1][0] = raw_for_half
    scale = nn.PsychScale()
    assert nn.forward(net, np.zeros((1, 2)), scale)[1][0] == pytest.approx(0.5)
    cfg = acq.AcquisitionConfig(candidate_count=8, restarts=2, lookahead_subsample=8, mc_samples=5)
    model = PsychometricNetwork(epochs=2, seed=0)
    model.initialize(2)
    model.network_ = net
    scorer = acq.TrialScorer(
        model, np.zeros((0, 2)), np.zeros(0), cfg, [[-1, 1], [-1, 1]], seed=0,
        weights=np.array([0.0, 0.0, 0.0, 1.0]),
    )
    cache = nn.TangentCache(net, np.array([[0.2, 0.3]]), scale)
    diag = nn.tangent_diag(cache)
    gram_uc = nn.tangent_gram(scorer._cache_u, cache)
    s0 = ((0.0 - 0.5) / (diag + scorer.jitter)) ** 2 * np.sum(gram_uc**2)
    s1 = ((1.0 - 0.5) / (diag + scorer.jitter)) ** 2 * np.sum(gram_uc**2)
    assert s0 == pytest.approx(s1)
    raw = scorer.raw_components(np.array([[0.2, 0.3]]))
    assert raw["la"][0] == pytest.approx(s0[0] / scorer._cache_u.prob.shape[0], rel=1e-9)


def test_scorer_cached_path_matches_direct_solve():
    model, X, y = _fitted_model(n=9, seed=5)
    cfg = acq.AcquisitionConfig(candidate_count=8, restarts=2, lookahead_subsample=12, mc_samples=5)
    scorer = acq.TrialScorer(model, X, y, cfg, [[-1, 1], [-1, 1]], seed=42)
    candidates = np.random.default_rng(7).uniform(-1, 1, size=(5, 2))
    raw = scorer.raw_components(candidates)
    Xn = model.normalize(X)
    U_cache = scorer._cache_u
    for i, c in enumerate(candidates):
        for label in (0.0, 1.0):
            preds = acq.ntk_lookahead_predict(
                model.network_, model.scale, Xn, y,
                model.normalize(np.atleast_2d(c))[0], label,
                U_cache.acts[0], jitter=scorer.jitter,
            )
            change = np.sum((preds - U_cache.prob) ** 2)
            if label == 0.0:
                s_min = change
            else:
                s_min = min(s_min, change)
        expected = s_min / U_cache.prob.shape[0]
        assert raw["la"][i] == pytest.approx(expected, rel=1e-6)


def test_unc_component_uses_fixed_masks_and_degenerate_rule():
    model, X, y = _fitted_model(n=8, seed=9)
    model.dropout_p = 0.0  # degenerate: zero variance everywhere
    cfg = acq.AcquisitionConfig(candidate_count=8, restarts=2, lookahead_subsample=8, mc_samples=6)
    scorer = acq.TrialScorer(model, X, y, cfg, [[-1, 1], [-1, 1]], seed=1)
    cands = np.random.default_rng(0).uniform(-1, 1, size=(6, 2))
    scorer.calibrate(cands)
    comps = scorer.components(cands)
    assert np.allclose(comps["unc"], 1.0)


def test_grad_component_self_normalizes():
    model, X, y = _fitted_model(n=10, seed=11)
    cfg = acq.AcquisitionConfig(candidate_count=8, restarts=2, lookahead_subsample=8, mc_samples=5)
    scorer = acq.TrialScorer(model, X, y, cfg, [[-1, 1], [-1, 1]], seed=2)
    cands = np.random.default_rng(1).uniform(-1, 1, size=(10, 2))
    raw = scorer.calibrate(cands)
    comps = scorer.components(cands, raw=raw)
    top = np.argmax(raw["grad"])
    assert comps["grad"][top] == pytest.approx(1.0)
    assert np.argmax(raw["prox"]) is not None
    assert comps["prox"][np.argmax(raw["prox"])] == pytest.approx(0.0)


def test_maximize_acquisition_contract(nv2d_detection):
    rng = np.random.default_rng(5)
    X = rng.uniform(-1, 1, size=(14, 2))
    y = (rng.random(14) < nv2d_detection.evaluate(X)).astype(float)
    model = PsychometricNetwork(epochs=10, seed=3).fit(X, y)
    cfg = acq.AcquisitionConfig(
        candidate_count=64, restarts=6, lookahead_subsample=16, mc_samples=20, refine_maxiter=6
    )
    bounds = np.array([[-1.0, 1.0], [-1.0, 1.0]])
    best, score, sweep = acq.maximize_acquisition(
        model, X, y, cfg, bounds, seed=7, return_sweep=True
    )
    assert np.all(best >= -1.0) and np.all(best <= 1.0)
    # refinement can only improve on the raw candidate sweep
    assert score.combined >= sweep["combined"].max() - 1e-9
    # deterministic in all inputs
    best2, score2 = acq.maximize_acquisition(model, X, y, cfg, bounds, seed=7)
    assert np.array_equal(best, best2)
    assert score2.combined == score.combined


def test_config_validation():
    with pytest.raises(ValueError):
        acq.AcquisitionConfig(candidate_count=4, restarts=8)
    with pytest.raises(ValueError):
        acq.AcquisitionConfig(parzen_h=0.0)
    with pytest.raises(ValueError):
        acq.AcquisitionConfig(ntk_jitter=0.0)
