"""Channel phases: modulation conventions, noise statistics, SNR arithmetic."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pcdsim.channel import (
    ChannelState,
    Constellation,
    bc_transmit,
    ma_superimpose,
    modulate,
    pair_likelihoods,
    pair_points,
    sample_rayleigh_pair,
    snr_to_sigma2,
)

RNG = lambda s=0: np.random.default_rng(s)


def test_bpsk_labeling():
    k = Constellation(2)
    assert modulate([0, 1], k).tolist() == [1 + 0j, -1 + 0j]


def test_qpsk_labeling_pinned():
    # the cluster catalog depends on this exact labeling
    k = Constellation(4)
    assert np.allclose(k.points, [1, 1j, -1j, -1])
    assert np.allclose(np.abs(modulate(range(4), k)), 1.0)


def test_psk_unit_energy_other_orders():
    for q in (5, 8):
        assert np.allclose(np.abs(Constellation(q).points), 1.0)


def test_modulate_range_check():
    with pytest.raises(ValueError):
        modulate([0, 4], Constellation(4))
    with pytest.raises(ValueError):
        modulate([-1], Constellation(2))


def test_ma_superimpose_noiseless_examples():
    k2 = Constellation(2)
    ch = ChannelState(1, 1, 0.0)
    y = ma_superimpose(modulate([0], k2), modulate([0], k2), ch, RNG())
    assert y[0] == pytest.approx(2)
    y = ma_superimpose(modulate([0], k2), modulate([1], k2), ch, RNG())
    assert y[0] == pytest.approx(0)
    k4 = Constellation(4)
    ch = ChannelState(1, 1j, 0.0)
    y = ma_superimpose(modulate([0], k4), modulate([0], k4), ch, RNG())
    assert y[0] == pytest.approx(1 + 1j)


def test_ma_superimpose_linearity_noiseless():
    rng = RNG(3)
    xa = rng.normal(size=32) + 1j * rng.normal(size=32)
    xb = rng.normal(size=32) + 1j * rng.normal(size=32)
    ch = ChannelState(0.7 - 0.2j, -1.1 + 0.4j, 0.0)
    y1 = ma_superimpose(xa, xb, ch, RNG())
    y2 = ma_superimpose(2 * xa, xb, ch, RNG()) - ma_superimpose(xa, np.zeros(32), ch, RNG())
    assert np.allclose(y1, y2)


def test_ma_superimpose_length_mismatch():
    ch = ChannelState(1, 1, 0.1)
    with pytest.raises(ValueError):
        ma_superimpose(np.ones(3), np.ones(4), ch, RNG())


def test_bc_transmit_noiseless():
    x = np.array([1 + 0j, -1j])
    assert np.allclose(bc_transmit(x, 1, 0.0, RNG()), x)
    assert np.allclose(bc_transmit(x, 1j, 0.0, RNG()), 1j * x)


def test_bc_transmit_noise_variance():
    rng = RNG(11)
    x = np.ones(10**5, dtype=complex)
    y = bc_transmit(x, 0.3 + 0.8j, 0.9, rng)
    w = y - (0.3 + 0.8j) * x
    var = np.mean(np.abs(w) ** 2)
    assert var == pytest.approx(0.9, rel=0.05)


def test_snr_to_sigma2_examples():
    assert snr_to_sigma2(0.0, 0.5) == pytest.approx(1.0)
    assert snr_to_sigma2(10.0, 0.5) == pytest.approx(0.1)
    assert snr_to_sigma2(0.0, 1.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        snr_to_sigma2(0.0, 0.0)
    with pytest.raises(ValueError):
        snr_to_sigma2(0.0, -0.5)


@given(
    st.floats(min_value=-20, max_value=40),
    st.floats(min_value=0.05, max_value=10, allow_nan=False),
)
def test_snr_to_sigma2_strictly_decreasing(snr, step):
    assert snr_to_sigma2(snr + step, 0.5) < snr_to_sigma2(snr, 0.5)


def test_rayleigh_pair_second_moment_and_independence():
    rng = RNG(5)
    n = 2 * 10**5
    pairs = np.array([sample_rayleigh_pair(rng) for _ in range(n // 100)])
    # bulk draws through the same generator interface, vectorized for volume
    g = rng.normal(0.0, np.sqrt(0.5), (n, 4))
    h1 = g[:, 0] + 1j * g[:, 1]
    h2 = g[:, 2] + 1j * g[:, 3]
    assert np.mean(np.abs(h1) ** 2) == pytest.approx(1.0, abs=0.02)
    assert np.mean(np.abs(h2) ** 2) == pytest.approx(1.0, abs=0.02)
    assert abs(np.mean(h1 * np.conj(h2))) < 0.01
    # the per-call path agrees with the bulk statistics
    assert np.mean(np.abs(pairs) ** 2) == pytest.approx(1.0, abs=0.05)


def test_rayleigh_magnitude_ks():
    rng = RNG(17)
    n = 2 * 10**4
    mags = np.sort(np.abs([sample_rayleigh_pair(rng)[0] for _ in range(n)]))
    # Rayleigh CDF with E[|H|^2]=1: F(x) = 1 - exp(-x^2)
    cdf = 1.0 - np.exp(-(mags**2))
    emp_hi = np.arange(1, n + 1) / n
    emp_lo = np.arange(0, n) / n
    d = max(np.max(np.abs(emp_hi - cdf)), np.max(np.abs(cdf - emp_lo)))
    assert d < 1.63 / np.sqrt(n)  # 1% critical value


def test_seeded_reproducibility():
    ch = ChannelState(1, 1, 0.7)
    x = np.ones(64, dtype=complex)
    y1 = ma_superimpose(x, x, ch, RNG(42))
    y2 = ma_superimpose(x, x, ch, RNG(42))
    assert np.array_equal(y1, y2)


def test_pair_points_layout():
    k = Constellation(2)
    pts = pair_points(ChannelState(1, -1, 0.0), k)
    # pair id 2*a + b: (0,0)->0, (0,1)->2, (1,0)->-2... laid out row-major
    assert np.allclose(pts, [0, 2, -2, 0])


def test_pair_likelihoods_noiseless_indicator():
    k = Constellation(2)
    ch = ChannelState(1, -1, 0.0)
    lik = pair_likelihoods([2.0], ch, k)
    assert np.allclose(lik, [[0, 1, 0, 0]])
    with pytest.raises(ValueError):
        pair_likelihoods([0.5], ch, k)


def test_pair_likelihoods_gaussian_values():
    k = Constellation(2)
    ch = ChannelState(1, -1, 0.5)
    lik = pair_likelihoods([2.0], ch, k)[0]
    # distances to points [0, 2, -2, 0]: 4, 0, 16, 4
    assert lik == pytest.approx([np.exp(-4), 1.0, np.exp(-16), np.exp(-4)])


def test_channel_state_rejects_negative_variance():
    with pytest.raises(ValueError):
        ChannelState(1, 1, -0.1)
