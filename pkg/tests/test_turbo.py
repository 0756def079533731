import numpy as np
import pytest

from polargd.channel import ChannelParams, channel_llrs, modulate, transmit
from polargd.construction import encode, is_codeword, make_code
from polargd.turbo import (
    PYNDIAH_ALPHA,
    PYNDIAH_BETA,
    Axis,
    ProductState,
    Siso,
    Status,
    TurboConfig,
    half_iteration,
    is_product_codeword,
    product_encode,
    turbo_decode,
    turbo_decode_batch,
)

SPEC = make_code("rm:4,2")  # (16, 11) keeps the tests quick


def test_zero_message():
    assert not product_encode(np.zeros((11, 11), dtype=np.uint8), SPEC).any()


def test_order_independent(rng):
    msg = rng.integers(0, 2, (11, 11), dtype=np.uint8)
    rows_first = product_encode(msg, SPEC)
    cols_first = encode(encode(msg.T, SPEC).T, SPEC)
    assert np.array_equal(rows_first, cols_first)
    assert np.all(is_codeword(rows_first, SPEC)) and np.all(is_codeword(rows_first.T, SPEC))


def test_dimensions():
    spec = make_code("rm:5,3")
    c = product_encode(np.ones((26, 26), dtype=np.uint8), spec)
    assert c.shape == (32, 32) and spec.K ** 2 == 676 and c.size == 1024


def test_config_schedules():
    cfg = TurboConfig(SPEC, "pyndiah")
    assert cfg.alpha == PYNDIAH_ALPHA and cfg.beta == PYNDIAH_BETA
    assert cfg.alpha_at(0) == 0.2 and cfg.alpha_at(30) == 1.0
    assert cfg.beta_at(3) == 0.8 and cfg.beta_at(99) == 1.0
    assert TurboConfig(SPEC).alpha == (0.5,)
    with pytest.raises(ValueError):
        TurboConfig(SPEC, imax=0)
    with pytest.raises(ValueError):
        TurboConfig(SPEC, siso="other")


def test_noiseless_success_in_one_half_iteration(rng):
    c = product_encode(rng.integers(0, 2, (11, 11), dtype=np.uint8), SPEC)
    out = turbo_decode(30.0 * modulate(c), TurboConfig(SPEC))
    assert out["status"] is Status.SUCCESS
    assert out["iterations"] == 0.5
    assert np.array_equal(out["bits"], c)


def test_zero_channel_symmetric():
    state = ProductState(np.zeros((16, 16)))
    half_iteration(state, Axis.ROWS, TurboConfig(SPEC))
    # the all-zero input cannot favour either half of a linear codebook
    assert np.allclose(state.L_app, 0.0, atol=1e-12)
    assert np.allclose(state.L_a, 0.0, atol=1e-12)


def test_half_iteration_scales_extrinsic(rng):
    cfg = TurboConfig(SPEC, Siso.PYNDIAH, L=2)
    state = ProductState(rng.normal(1.0, 2.0, (16, 16)))
    half_iteration(state, Axis.ROWS, cfg)
    np.testing.assert_allclose(state.L_a, 0.2 * state.L_e)
    half_iteration(state, Axis.COLUMNS, cfg)
    np.testing.assert_allclose(state.L_a, 0.3 * state.L_e)
    assert state.half_iterations == 2 and state.iterations == 1.0


def _noisy(rng, B, ebn0):
    c = product_encode(rng.integers(0, 2, (B, 11, 11), dtype=np.uint8), SPEC)
    p = ChannelParams(ebn0, (11 / 16) ** 2)
    return c, channel_llrs(transmit(modulate(c), p, rng), p)


@pytest.mark.parametrize("siso", ["proposed", "pyndiah"])
def test_success_is_valid_codeword(rng, siso):
    c, llr = _noisy(rng, 40, 2.5)
    bits, ok, iters = turbo_decode_batch(llr, TurboConfig(SPEC, siso, L=2, imax=4))
    assert ok.any()
    assert np.all(is_product_codeword(bits[ok], SPEC))
    assert np.all(iters <= 4) and np.all(iters >= 0.5)
    assert np.all(iters[~ok] == 4)


def test_deterministic_and_batch_consistent(rng):
    c, llr = _noisy(rng, 6, 2.0)
    cfg = TurboConfig(SPEC, L=2, imax=3)
    bits, ok, iters = turbo_decode_batch(llr, cfg)
    again = turbo_decode_batch(llr, cfg)
    assert np.array_equal(bits, again[0])
    for b in range(6):
        single = turbo_decode(llr[b], cfg)
        assert np.array_equal(single["bits"], bits[b])
        assert single["iterations"] == iters[b]
        assert (single["status"] is Status.SUCCESS) == ok[b]


def test_bad_shape():
    with pytest.raises(ValueError):
        turbo_decode_batch(np.zeros((1, 8, 8)), TurboConfig(SPEC))
