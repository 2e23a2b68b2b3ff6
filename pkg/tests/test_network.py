import numpy as np
import numpy.testing as npt
import pytest

from disconet import (
    ContractError,
    DimensionError,
    Graph,
    NetConfig,
    NetworkParams,
    ParseError,
    bind_params,
    forward,
    forward_rows,
    init_params,
    predict,
    predict_rows,
    sample_candidates,
    sample_noise,
)


CFG = NetConfig(x_dim=2, y_dim=2, z_dim=3, encoder_widths=(5,), decoder_widths=(4,))


def test_layer_dims_and_param_count():
    # Manually calculated: encoder 2->5, concat noise 3 makes 8, decoder
    # 8->4, output 4->2.  With one bias row per layer:
    # (2+1)*5 + (8+1)*4 + (4+1)*2 = 15 + 36 + 10 = 61.
    assert CFG.layer_dims() == [(2, 5), (8, 4), (4, 2)]
    assert CFG.param_count() == 61
    assert CFG.noise_dim == 3

    plain = NetConfig(x_dim=2, y_dim=1, z_dim=3, encoder_widths=(),
                      decoder_widths=(), noise_enabled=False)
    assert plain.layer_dims() == [(2, 1)]
    assert plain.param_count() == 3
    assert plain.noise_dim == 0


def test_config_validation():
    with pytest.raises(ContractError):
        NetConfig(x_dim=0, y_dim=1)
    with pytest.raises(ContractError):
        NetConfig(x_dim=1, y_dim=1, z_dim=0)
    with pytest.raises(ContractError):
        NetConfig(x_dim=1, y_dim=1, encoder_widths=(0,))


def test_config_round_trip():
    d = CFG.to_dict()
    assert NetConfig.from_dict(d) == CFG


def test_init_deterministic_and_bounded():
    p1 = init_params(CFG, seed=11)
    p2 = init_params(CFG, seed=11)
    npt.assert_array_equal(p1.to_flat(), p2.to_flat())
    p3 = init_params(CFG, seed=12)
    assert not np.array_equal(p1.to_flat(), p3.to_flat())

    mask = p1.weight_mask()
    flat = p1.to_flat()
    # biases start at zero, weights inside the fan-scaled interval
    npt.assert_array_equal(flat[~mask], 0.0)
    offset = 0
    for fi, fo in CFG.layer_dims():
        a = np.sqrt(6.0 / (fi + fo))
        w = flat[offset:offset + fi * fo]
        assert np.all(np.abs(w) <= a)
        offset += fi * fo + fo


def test_flat_round_trip():
    p = init_params(CFG, seed=3)
    q = NetworkParams.from_flat(CFG, p.to_flat())
    npt.assert_array_equal(p.to_flat(), q.to_flat())
    with pytest.raises(DimensionError):
        NetworkParams.from_flat(CFG, np.zeros(60))


def test_save_load_round_trip(tmp_path):
    p = init_params(CFG, seed=5)
    path = tmp_path / "params.txt"
    p.save(path)
    q = NetworkParams.load(path)
    assert q.config == CFG
    npt.assert_array_equal(p.to_flat(), q.to_flat())


def test_load_errors(tmp_path):
    path = tmp_path / "bad.txt"

    path.write_text("")
    with pytest.raises(ParseError, match="empty"):
        NetworkParams.load(path)

    path.write_text("not json\n")
    with pytest.raises(ParseError, match="line 1"):
        NetworkParams.load(path)

    p = init_params(CFG, seed=5)
    good = tmp_path / "good.txt"
    p.save(good)
    lines = good.read_text().splitlines()

    broken = dict_replace(lines[0], '"version": 1', '"version": 9')
    path.write_text("\n".join([broken] + lines[1:]) + "\n")
    with pytest.raises(ParseError, match="version"):
        NetworkParams.load(path)

    path.write_text("\n".join([lines[0], "0.5", "oops"] + lines[3:]) + "\n")
    with pytest.raises(ParseError, match="line 3"):
        NetworkParams.load(path)

    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ParseError, match="expected 61 values, found 60"):
        NetworkParams.load(path)


def dict_replace(s, old, new):
    assert old in s
    return s.replace(old, new)


def test_forward_matches_predict():
    p = init_params(CFG, seed=7)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(4, 2))
    z = rng.normal(size=(4, 3))

    g = Graph()
    node = forward_rows(g, bind_params(g, p), x, z)
    npt.assert_allclose(np.asarray(g.value(node)), predict_rows(p, x, z),
                        rtol=1e-12, atol=1e-15)

    g = Graph()
    node = forward(g, bind_params(g, p), x[0], z[0])
    npt.assert_allclose(np.asarray(g.value(node)), predict(p, x[0], z[0]),
                        rtol=1e-12, atol=1e-15)


def test_noise_required_when_enabled():
    p = init_params(CFG, seed=7)
    with pytest.raises(ContractError):
        predict_rows(p, np.zeros((2, 2)))
    g = Graph()
    with pytest.raises(ContractError):
        forward_rows(g, bind_params(g, p), np.zeros((2, 2)))


def test_wrong_input_dims_rejected():
    p = init_params(CFG, seed=7)
    z = np.zeros((2, 3))
    with pytest.raises(DimensionError):
        predict_rows(p, np.zeros((2, 3)), z)
    with pytest.raises(DimensionError):
        predict_rows(p, np.zeros((2, 2)), np.zeros((2, 4)))


def test_piecewise_linear_in_noise():
    """With ReLU activations the map z -> output is affine wherever no
    unit changes sign, so a short segment has vanishing second difference."""
    p = init_params(CFG, seed=21)
    x = np.array([0.3, -0.7])
    rng = np.random.default_rng(4)
    z0 = rng.normal(size=3)
    d = rng.normal(size=3)
    t = 1e-4
    f0 = predict(p, x, z0)
    f1 = predict(p, x, z0 + t * d)
    f2 = predict(p, x, z0 + 2 * t * d)
    npt.assert_allclose(f2 - f1, f1 - f0, atol=1e-12)


def test_noise_disabled_candidates_constant():
    cfg = NetConfig(x_dim=2, y_dim=2, z_dim=3, encoder_widths=(5,),
                    decoder_widths=(4,), noise_enabled=False)
    p = init_params(cfg, seed=9)
    rng = np.random.default_rng(2)
    state_before = rng.bit_generator.state
    cs = sample_candidates(p, np.array([0.5, -0.5]), 6, rng)
    # all candidates identical, and the generator is not consumed
    assert cs.outputs.shape == (6, 2)
    assert np.ptp(cs.outputs, axis=0).max() == 0.0
    assert rng.bit_generator.state == state_before
    assert cs.noises is None


def test_sample_candidates_shapes_and_noises():
    p = init_params(CFG, seed=9)
    rng = np.random.default_rng(2)
    cs = sample_candidates(p, np.array([0.5, -0.5]), 4, rng, index=3)
    assert cs.index == 3
    assert cs.outputs.shape == (4, 2)
    assert cs.noises.shape == (4, 3)
    # outputs reproduce from the recorded noises
    npt.assert_allclose(
        cs.outputs, predict_rows(p, np.tile([0.5, -0.5], (4, 1)), cs.noises),
        rtol=1e-12, atol=1e-15,
    )


def test_sample_noise_shape():
    z = sample_noise(3, np.random.default_rng(0))
    assert z.shape == (3,)
    z2 = sample_noise(3, np.random.default_rng(0))
    npt.assert_array_equal(z, z2)
