import numpy as np
import numpy.testing as npt
import pytest

from disconet import (
    CandidateSet,
    ContractError,
    DimensionError,
    DiscreteDistribution,
    EstimatorError,
    Graph,
    LossSpec,
    NetConfig,
    ObjectiveConfig,
    ParameterError,
    bind_params,
    disco_objective,
    disco_objective_node,
    div_exact,
    div_pq_hat,
    div_qq_hat,
    energy_score_sample,
    grad_check,
    init_params,
    predict_rows,
)
from disconet.objective import _batch_arrays, candidate_pair_indices


def test_objective_config_validation():
    with pytest.raises(ParameterError):
        ObjectiveConfig(gamma=-0.1)
    with pytest.raises(ParameterError):
        ObjectiveConfig(gamma=1.5)
    with pytest.raises(ParameterError):
        ObjectiveConfig(num_candidates=0)
    with pytest.raises(EstimatorError):
        ObjectiveConfig(gamma=0.5, num_candidates=1)
    # a point predictor trained on plain loss is fine with one candidate
    ObjectiveConfig(gamma=0.0, num_candidates=1)


def test_batch_arrays_both_forms():
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    y = np.array([[5.0], [6.0]])
    xa, ya = _batch_arrays((x, y))
    npt.assert_array_equal(xa, x)
    npt.assert_array_equal(ya, y)
    xb, yb = _batch_arrays([(x[0], y[0]), (x[1], y[1])])
    npt.assert_array_equal(xb, x)
    npt.assert_array_equal(yb, y)
    with pytest.raises(ContractError):
        _batch_arrays([])
    with pytest.raises(ContractError):
        _batch_arrays((np.zeros((0, 2)), np.zeros((0, 1))))


def test_div_pq_hand_value():
    # Manually calculated: example 1 mean(|1-0|, |3-0|) = 2,
    # example 2 mean(|4-5|, |8-5|) = 2, overall 2.
    batch = (np.zeros((2, 1)), np.array([[0.0], [5.0]]))
    sets = [CandidateSet(0, [[1.0], [3.0]]), CandidateSet(1, [[4.0], [8.0]])]
    assert div_pq_hat(batch, sets) == 2.0


def test_div_qq_hand_value():
    # Manually calculated: candidates {0, 1, 2}, ordered distinct pairs
    # sum to 2*(1+2+1) = 8, divided by K(K-1) = 6.
    sets = [CandidateSet(0, [[0.0], [1.0], [2.0]])]
    assert div_qq_hat(sets) == pytest.approx(4.0 / 3.0, abs=1e-15)
    with pytest.raises(EstimatorError):
        div_qq_hat([CandidateSet(0, [[1.0]])])


def test_mismatched_sets_rejected():
    batch = (np.zeros((2, 1)), np.zeros((2, 1)))
    with pytest.raises(ContractError):
        div_pq_hat(batch, [CandidateSet(0, [[1.0], [2.0]])])
    with pytest.raises(ContractError):
        div_pq_hat(
            batch,
            [CandidateSet(0, [[1.0], [2.0]]), CandidateSet(1, [[1.0]])],
        )


def test_gamma_zero_objective_is_data_term_only():
    batch = (np.zeros((1, 1)), np.array([[0.0]]))
    sets = [CandidateSet(0, [[1.0], [3.0]])]
    cfg = ObjectiveConfig(gamma=0.0, num_candidates=2)
    assert disco_objective(batch, sets, cfg) == div_pq_hat(batch, sets)


def test_gamma_half_matches_energy_score_bitwise(rng):
    """Per example, the gamma = 1/2 objective IS the sampled energy score:
    same terms, same summation order, identical floats."""
    for _ in range(100):
        k = int(rng.integers(2, 6))
        dim = int(rng.integers(1, 4))
        beta = float(rng.uniform(0.3, 1.7))
        w = tuple(rng.uniform(0.2, 3.0, size=dim))
        loss = LossSpec(beta=beta, weights=w)
        y = rng.normal(size=(1, dim))
        cands = rng.normal(size=(k, dim))
        cs = CandidateSet(0, cands)
        obj = disco_objective(
            (np.zeros((1, 1)), y),
            [cs],
            ObjectiveConfig(gamma=0.5, num_candidates=k, loss=loss),
        )
        assert obj == energy_score_sample(cs, y[0], loss)


def test_estimators_unbiased_under_candidate_draws(rng):
    """div_qq_hat over repeated draws from a discrete model approaches the
    closed-form pair expectation."""
    support = np.array([[0.0], [1.0], [3.0]])
    probs = np.array([0.5, 0.3, 0.2])
    q = DiscreteDistribution(support, probs)
    exact = div_exact(q, q, LossSpec())
    k = 3
    trials = 4000
    vals = np.empty(trials)
    for t in range(trials):
        cands = support[rng.choice(3, size=k, p=probs)]
        vals[t] = div_qq_hat([CandidateSet(0, cands)])
    se = vals.std(ddof=1) / np.sqrt(trials)
    assert abs(vals.mean() - exact) < 3 * se


def test_candidate_pair_indices():
    idx1, idx2 = candidate_pair_indices(2, 2)
    npt.assert_array_equal(idx1, [0, 1, 2, 3])
    npt.assert_array_equal(idx2, [1, 0, 3, 2])
    idx1, idx2 = candidate_pair_indices(3, 1)
    assert len(idx1) == 6
    assert np.all(idx1 != idx2)
    with pytest.raises(EstimatorError):
        candidate_pair_indices(1, 4)


NET = NetConfig(x_dim=2, y_dim=2, z_dim=3, encoder_widths=(4,), decoder_widths=(4,))


def _fixture(seed, n=3, k=3):
    rng = np.random.default_rng(seed)
    params = init_params(NET, seed=seed)
    x = rng.normal(size=(n, NET.x_dim))
    y = rng.normal(size=(n, NET.y_dim))
    z = rng.uniform(-1.0, 1.0, size=(n, k, NET.z_dim))
    return params, x, y, z


def _sets_from_noises(params, x, z):
    n, k, _ = z.shape
    sets = []
    for i in range(n):
        outs = predict_rows(params, np.tile(x[i], (k, 1)), z[i])
        sets.append(CandidateSet(i, outs))
    return sets


def test_graph_objective_matches_plain_evaluation():
    params, x, y, z = _fixture(seed=13)
    sets = _sets_from_noises(params, x, z)
    for gamma in (0.0, 0.25, 0.5, 1.0):
        cfg = ObjectiveConfig(gamma=gamma, num_candidates=3)
        g = Graph()
        root = disco_objective_node(g, params, (x, y), z, cfg)
        plain = disco_objective((x, y), sets, cfg)
        npt.assert_allclose(g.value(root).item(), plain, rtol=1e-12)


def test_graph_objective_contract_errors():
    params, x, y, z = _fixture(seed=13)
    cfg = ObjectiveConfig(gamma=0.5, num_candidates=3)
    g = Graph()
    with pytest.raises(ContractError):
        disco_objective_node(g, params, (x, y), None, cfg)
    with pytest.raises(DimensionError):
        disco_objective_node(Graph(), params, (x, y), z[:, :2, :], cfg)
    with pytest.raises(DimensionError):
        disco_objective_node(Graph(), params, (x[:, :1], y), z, cfg)


def test_graph_objective_gradient_check():
    params, x, y, z = _fixture(seed=29)
    for gamma, beta in ((0.0, 1.0), (0.5, 0.5), (0.5, 1.5), (1.0, 1.0)):
        cfg = ObjectiveConfig(gamma=gamma, num_candidates=3, loss=LossSpec(beta=beta))

        def f(flat):
            from disconet import NetworkParams

            p = NetworkParams.from_flat(NET, flat)
            g = Graph()
            bound = bind_params(g, p)
            root = disco_objective_node(g, bound, (x, y), z, cfg)
            g.backward(root)
            from disconet import grad_flat

            return g.value(root).item(), grad_flat(g, bound)

        err = grad_check(f, params.to_flat())
        assert err < 1e-5, (gamma, beta, err)


def test_noise_disabled_objective_ignores_noises():
    cfg_net = NetConfig(x_dim=2, y_dim=2, z_dim=3, encoder_widths=(4,),
                        decoder_widths=(4,), noise_enabled=False)
    params = init_params(cfg_net, seed=1)
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 2))
    y = rng.normal(size=(2, 2))
    cfg = ObjectiveConfig(gamma=0.0, num_candidates=1)
    g1 = Graph()
    r1 = disco_objective_node(g1, params, (x, y), None, cfg)
    g2 = Graph()
    r2 = disco_objective_node(g2, params, (x, y), np.zeros((2, 1, 3)), cfg)
    assert g1.value(r1).item() == g2.value(r2).item()
