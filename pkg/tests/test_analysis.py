import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import poisson

from ecrasim import analysis as an

from conftest import SNR_6DB


def test_rate_points_6db():
    rp = an.rate_points(SNR_6DB)
    assert rp.r_f == pytest.approx(2.31638, abs=1e-4)
    assert rp.r_i == pytest.approx(0.84740, abs=1e-4)
    assert rp.r_f2 == pytest.approx(3.16387, abs=1e-4)
    assert rp.r_i1 == pytest.approx(2.53121, abs=1e-4)
    assert rp.r_i2 == pytest.approx(1.37767, abs=1e-4)
    assert rp.r_i < rp.r_f and rp.r_i2 < rp.r_i1 < rp.r_f2


def test_rate_points_vanish():
    assert all(v == 0 for v in an.rate_points(0.0).__dict__.values())


def test_fec_fraction():
    assert an.vulnerable_fraction_fec(1.5, SNR_6DB) == pytest.approx(0.44425, abs=1e-4)
    assert an.vulnerable_fraction_fec(0.5, SNR_6DB) == 0.0
    rf = an.rate_points(SNR_6DB).r_f
    assert an.vulnerable_fraction_fec(rf, SNR_6DB) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        an.vulnerable_fraction_fec(2.4, SNR_6DB)


def test_mrc_fraction():
    phi, tv = an.vulnerable_fraction_mrc(1.5, SNR_6DB, 0.0)
    assert phi == pytest.approx(0.06849, abs=1e-4)
    assert tv == pytest.approx(0.13698, abs=2e-4)
    assert an.vulnerable_fraction_mrc(0.67, SNR_6DB, 3.0) == (0.0, 0.0)
    rf2 = an.rate_points(SNR_6DB).r_f2
    assert an.vulnerable_fraction_mrc(rf2, SNR_6DB, 0.0)[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        an.vulnerable_fraction_mrc(3.2, SNR_6DB, 0.0)


def test_n_vulnerable():
    assert an.n_vulnerable(200, 2.0) == 100
    assert an.n_vulnerable(200, 2 * 0.44425) == 225
    assert an.n_vulnerable(200, 0.0) == math.inf


def truncated_oracle(g, vf_len, n_v, d, m_max):
    lam = vf_len * g
    m = np.arange(2, m_max + 1)
    return float(np.sum(poisson.pmf(m, lam) * (m * (m - 1) / 2) / (d * math.comb(n_v, d)) * 2 / m))


def test_plr_closed_form():
    lam = 20.0
    expected = (lam - 1 + math.exp(-lam)) / 9900
    assert expected == pytest.approx(1.91919e-3, abs=1e-8)
    assert an.plr_approximation(0.1, 200, 100, 2) == pytest.approx(expected, abs=1e-12)
    assert an.plr_approximation(0.1, 200, 100, 2, m_max=200) == pytest.approx(
        truncated_oracle(0.1, 200, 100, 2, 200), rel=1e-10)


def test_plr_limits():
    assert an.plr_approximation(0.0, 200, 100, 2) == 0.0
    assert an.plr_approximation(0.5, 200, math.inf, 2) == 0.0
    with pytest.raises(ValueError):
        an.plr_approximation(0.5, 200, 1, 2)


def test_plr_no_overflow_at_heavy_load():
    v = an.plr_approximation(6.0, 200, 225, 2)
    assert math.isfinite(v) and v > 0


@pytest.mark.parametrize("lam", [0.5, 5.0, 50.0, 100.0])
def test_truncation_robustness(lam):
    g = lam / 200
    a = an.plr_approximation(g, 200, 225, 2, m_max=200)
    b = an.plr_approximation(g, 200, 225, 2, m_max=400)
    assert abs(a - b) <= 1e-12 * b


@pytest.mark.parametrize("lam", [120.0, 200.0, 600.0, 1000.0])
def test_default_truncation_is_enough(lam):
    g = lam / 200
    a = an.plr_approximation(g, 200, 225, 2)
    b = an.plr_approximation(g, 200, 225, 2, m_max=int(3 * lam))
    assert abs(a - b) <= 1e-12 * b


def test_plr_monotone_in_load():
    vals = [an.plr_approximation(g, 200, 225, 2) for g in np.linspace(0.01, 3, 60)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@given(st.floats(-5, 20), st.lists(st.floats(0.01, 1.0), min_size=2, max_size=2))
def test_fractions_monotone_in_rate(db, fr):
    snr = 10 ** (db / 10)
    rp = an.rate_points(snr)
    lo, hi = sorted(fr)
    a, b = an.vulnerable_fraction_fec(lo * rp.r_f, snr), an.vulnerable_fraction_fec(hi * rp.r_f, snr)
    assert 0 <= a <= b <= 1
    for alpha in (0.0, 1.0, 5.0):
        a, _ = an.vulnerable_fraction_mrc(lo * rp.r_f2, snr, alpha)
        b, _ = an.vulnerable_fraction_mrc(hi * rp.r_f2, snr, alpha)
        assert 0 <= a <= b <= 1 + 1e-12


def test_fraction_sweep_grid():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        snr = 10 ** rng.uniform(-0.5, 2.0)
        r = rng.uniform(0.01, 1.0) * an.rate_points(snr).r_f
        assert 0.0 <= an.vulnerable_fraction_fec(r, snr) <= 1.0


def test_clean_fractions_geometry():
    # coincident replicas: never singly hit
    f0, f1 = an.clean_fractions(np.array([0.0]), np.array([0.0]))
    assert f0[0] == 0.0 and f1[0] == 0.0
    # hits on opposite halves: no common clean portion
    f0, f1 = an.clean_fractions(np.array([0.5]), np.array([-0.5]))
    assert f0[0] == pytest.approx(0.0) and f1[0] == pytest.approx(1.0)
    # hits on the same half
    f0, f1 = an.clean_fractions(np.array([0.5]), np.array([0.5]))
    assert f0[0] == pytest.approx(0.5) and f1[0] == pytest.approx(0.0)


def test_alpha_samples_conventions():
    s = an.alpha_samples([0.0, 0.0, 0.5, 0.1], [0.0, 1.0, 0.25, 0.9], cap=4.0)
    assert s.tolist() == [0.0, 4.0, 0.5, 4.0]


def test_alpha_estimator():
    a = an.estimate_alpha(1.5, SNR_6DB, np.random.default_rng(5), 200_000)
    b = an.estimate_alpha(1.5, SNR_6DB, np.random.default_rng(5), 200_000)
    assert a == b
    phi0, _ = an.vulnerable_fraction_mrc(1.5, SNR_6DB, 0.0)
    assert 0 < a <= (1 - phi0) / phi0
    with pytest.raises(ValueError):
        an.estimate_alpha(1.5, SNR_6DB, np.random.default_rng(0), 999)
    assert an.estimate_alpha(0.67, SNR_6DB, np.random.default_rng(0), 1000) == 0.0
