import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ia_workbench.network import (
    H_MAX,
    H_MIN,
    ExtendedChannels,
    NetworkConfig,
    decompose_transmitters,
    draw_extended_channels,
    draw_spatial_channels,
    reciprocal,
)

configs = st.builds(
    lambda tx, rx: NetworkConfig(len(tx), len(rx), tx, rx),
    st.lists(st.integers(1, 6), min_size=1, max_size=5),
    st.lists(st.integers(1, 6), min_size=1, max_size=5),
)


def test_config_validation():
    with pytest.raises(ValueError):
        NetworkConfig(0, 1, (), (1,))
    with pytest.raises(ValueError):
        NetworkConfig(2, 1, (1,), (1,))
    with pytest.raises(ValueError, match="rx node 0"):
        NetworkConfig(1, 1, (1,), (0,))


def test_symmetric_predicate():
    assert NetworkConfig.symmetric(3, 2, 2).is_symmetric(2)
    assert not NetworkConfig.symmetric(3, 2, 2).is_symmetric(3)
    assert not NetworkConfig.symmetric(2, 2, 2, 3).is_symmetric()


@given(configs)
def test_config_json_roundtrip(cfg):
    assert NetworkConfig.from_json(cfg.to_json()) == cfg
    assert set(json.loads(cfg.to_json())) == {"M", "N", "tx_antennas", "rx_antennas"}


@pytest.mark.parametrize("M,N,R,n,seed,count", [(2, 2, 1, 5, 7, 20), (3, 2, 2, 7, 1, 84)])
def test_extended_draw_count_and_bounds(M, N, R, n, seed, count):
    ch = draw_extended_channels(NetworkConfig.simo(M, N, R), n, seed)
    assert len(ch) == count
    mags = np.abs(ch.coeffs)
    assert mags.min() >= H_MIN and mags.max() <= H_MAX


def test_extended_draw_is_deterministic():
    cfg = NetworkConfig.simo(2, 2, 1)
    a, b = draw_extended_channels(cfg, 5, 7), draw_extended_channels(cfg, 5, 7)
    assert dict(a) == dict(b)
    assert not np.array_equal(a.coeffs, draw_extended_channels(cfg, 5, 8).coeffs)


def test_extended_streams_are_stable_under_growth():
    small = draw_extended_channels(NetworkConfig.simo(2, 2, 1), 5, 3)
    big = draw_extended_channels(NetworkConfig.simo(3, 4, 2), 9, 3)
    # adding nodes, antennas or channel uses leaves existing draws alone
    assert np.array_equal(big.coeffs[:2, :2, :1, :5], small.coeffs)


def test_extended_rejects_non_simo():
    cfg = NetworkConfig(3, 2, (1, 2, 1), (2, 2))
    with pytest.raises(ValueError, match="transmitter 1"):
        draw_extended_channels(cfg, 4, 0)


def test_extended_is_immutable_and_masked_copy():
    ch = draw_extended_channels(NetworkConfig.simo(2, 2, 1), 4, 0)
    with pytest.raises(ValueError):
        ch.coeffs[0, 0, 0, 0] = 0
    keep = np.ones(ch.coeffs.shape, bool)
    keep[0, 1, 0, 2] = False
    sp = ch.masked(keep)
    assert sp.specialized and sp.coeff(0, 1, 0, 2) == 0
    assert ch.coeff(0, 1, 0, 2) != 0
    with pytest.raises(ValueError, match="magnitudes"):
        ExtendedChannels(ch.config, ch.n, sp.coeffs)


def test_extended_dict_roundtrip_and_diag():
    ch = draw_extended_channels(NetworkConfig.simo(3, 2, 2), 6, 11)
    doc = json.loads(json.dumps(ch.to_dict()))
    assert set(doc["coeffs"]) == {f"{j}/{i}/{r}" for j in range(2) for i in range(3) for r in range(2)}
    back = ExtendedChannels.from_dict(doc)
    assert np.array_equal(back.coeffs, ch.coeffs)
    assert np.array_equal(np.diag(ch.dense(1, 2, 0)), ch.diagonal(1, 2, 0))


def test_spatial_shapes_and_seeds():
    cfg = NetworkConfig.symmetric(2, 2, 2, 3)
    a = draw_spatial_channels(cfg, 3)
    assert sorted(a.H) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert all(h.shape == (3, 2) for h in a.H.values())
    b = draw_spatial_channels(cfg, 4)
    assert any(not np.array_equal(a[k], b[k]) for k in a.H)
    assert all(np.array_equal(a[k], draw_spatial_channels(cfg, 3)[k]) for k in a.H)
    for h in a.H.values():
        assert np.linalg.matrix_rank(h) == 2


def test_spatial_genericity_proxy():
    # every k x k square submatrix of a drawn channel is nonsingular
    cfg = NetworkConfig.symmetric(2, 2, 3, 4)
    for seed in range(100):
        ch = draw_spatial_channels(cfg, seed)
        for h in ch.H.values():
            for k in range(1, 4):
                sub = h[:k, -k:]
                s = np.linalg.svd(sub, compute_uv=False)
                assert s[-1] / s[0] > 1e-8


def test_spatial_reciprocal_channels():
    cfg = NetworkConfig(3, 2, (1, 2, 3), (2, 4))
    ch = draw_spatial_channels(cfg, 0)
    rc = ch.reciprocal()
    assert rc.config == reciprocal(cfg)
    assert np.array_equal(rc[2, 1], ch[1, 2].conj().T)


@pytest.mark.parametrize("cfg,A,expected", [
    (NetworkConfig.symmetric(3, 3, 2, 4), 2, NetworkConfig(6, 3, (1,) * 6, (4,) * 3)),
    (NetworkConfig.symmetric(2, 2, 1, 1), 1, NetworkConfig.symmetric(2, 2, 1, 1)),
    (NetworkConfig.symmetric(2, 3, 3, 6), 3, NetworkConfig(6, 3, (1,) * 6, (6,) * 3)),
])
def test_decompose_transmitters(cfg, A, expected):
    assert decompose_transmitters(cfg, A) == expected


def test_decompose_rejects_non_divisor():
    with pytest.raises(ValueError, match="transmitter 1"):
        decompose_transmitters(NetworkConfig(2, 1, (2, 3), (1,)), 2)


@given(configs, st.integers(1, 3))
def test_decompose_preserves_tx_antennas(cfg, A):
    cfg = NetworkConfig(cfg.M, cfg.N, tuple(a * A for a in cfg.tx_antennas), cfg.rx_antennas)
    out = decompose_transmitters(cfg, A)
    assert sum(out.tx_antennas) == sum(cfg.tx_antennas)
    assert out.M == A * cfg.M and out.rx_antennas == cfg.rx_antennas


def test_reciprocal_examples():
    cfg = NetworkConfig(3, 2, (1, 1, 1), (2, 2))
    assert reciprocal(cfg) == NetworkConfig(2, 3, (2, 2), (1, 1, 1))
    simo = NetworkConfig.simo(4, 3, 2)
    miso = reciprocal(simo)
    assert miso.tx_antennas == (2, 2, 2) and miso.rx_antennas == (1,) * 4


@given(configs)
def test_reciprocal_is_involution(cfg):
    assert reciprocal(reciprocal(cfg)) == cfg


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_draws_are_pure_functions(M, N, R, seed):
    cfg = NetworkConfig.simo(M, N, R)
    assert np.array_equal(draw_extended_channels(cfg, 4, seed).coeffs,
                          draw_extended_channels(cfg, 4, seed).coeffs)
