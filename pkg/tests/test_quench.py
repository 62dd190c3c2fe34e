from __future__ import annotations

import warnings

import numpy as np
import pytest

from xyquench import (FiniteChain, InvalidLimit, ModelParams, QuenchSpec, ResonanceClamped,
                      ThermoLimit, UnsupportedRegime, dispersion, larget_limit, larget_series,
                      loschmidt, modulation, modulation_profile, nielsen_quench, nielsen_series,
                      omega_angle, oscillation_envelope, quench_observables, smalltime_series,
                      time_series)
from xyquench.quench import mode_profile_rows, mode_terms

from conftest import angle, evolved, ground_vector, quad_avg

TL = ThermoLimit(atol=1e-13)
TQ = QuenchSpec.transverse


def cn_oracle(h, gam, d, c1, c2, t):
    """Per-mode overlap from the exponentiated mode Hamiltonian, averaged by quad."""
    def f(k):
        y = abs(np.vdot(ground_vector(k, h, gam), evolved(k, h, gam, h + c1 * d, gam + c2 * d, t))) ** 2
        return np.arccos(np.sqrt(min(y, 1.0))) ** 2
    return quad_avg(f, eps_abs=1e-13)


def test_omega_examples():
    k = np.array([np.pi / 2])
    p = ModelParams(0.0, 1.0)
    assert omega_angle(k, p, TQ(0.0))[0] == 0.0
    assert omega_angle(k, p, TQ(0.1))[0] == pytest.approx(
        (np.arctan2(1, 0) - np.arctan2(1, 0.1)) / 2, rel=1e-14)
    assert omega_angle(k, p, TQ(0.1))[0] == pytest.approx(0.049834, abs=1e-6)


def test_omega_sign_flip():
    # h -> -h maps theta_k to pi - theta_{pi - k}, so the flip pairs k with pi - k
    k = np.linspace(0.1, 3.0, 30)
    a = omega_angle(k, ModelParams(0.3, 0.5), TQ(0.1))
    b = omega_angle(np.pi - k, ModelParams(-0.3, 0.5), TQ(-0.1))
    assert np.allclose(a, -b, atol=1e-14)


@pytest.mark.parametrize("k", [0.3, 1.2, 2.9])
@pytest.mark.parametrize("c1,c2", [(1, 0), (0, 1), (1, 1)])
def test_mode_terms_match_expm(k, c1, c2):
    h, gam, d, t = 0.6, 0.4, 0.15, 2.7
    c, _ = mode_terms(np.array([k]), ModelParams(h, gam), QuenchSpec(d, c1, c2), [t])
    y = abs(np.vdot(ground_vector(k, h, gam), evolved(k, h, gam, h + c1 * d, gam + c2 * d, t))) ** 2
    assert c[0, 0] == pytest.approx(np.arccos(np.sqrt(y)) ** 2, rel=1e-10)


def test_quench_zero_time_and_zero_delta():
    p = ModelParams(0.5, 0.5)
    assert nielsen_quench(p, TQ(0.1), 0.0) == 0.0
    assert loschmidt(p, TQ(0.1), 0.0) == 0.0
    assert np.all(nielsen_quench(p, TQ(0.0), np.array([0.5, 3.0, 40.0])) == 0.0)


def test_quench_example_and_oracle():
    p = ModelParams(0.0, 0.5)
    v = nielsen_quench(p, TQ(0.1), 0.5, TL)
    assert v == pytest.approx(4.04e-4, rel=2e-2)
    assert v == pytest.approx(cn_oracle(0.0, 0.5, 0.1, 1, 0, 0.5), rel=1e-8)


@pytest.mark.parametrize("h,gam,d,c1,c2,t", [(0.8, 0.5, 0.1, 1, 0, 1.5), (1.3, 0.7, -0.2, 1, 0, 7.0),
                                             (0.5, 0.5, 0.1, 0, 1, 3.0), (-0.4, 1.2, 0.3, 1, 1, 12.0)])
def test_quench_matches_oracle(h, gam, d, c1, c2, t):
    v = nielsen_quench(ModelParams(h, gam), QuenchSpec(d, c1, c2), t, TL)
    assert v == pytest.approx(cn_oracle(h, gam, d, c1, c2, t), rel=1e-8)


def test_loschmidt_tracks_complexity_at_short_time():
    p = ModelParams(0.8, 0.5)
    cn, le = quench_observables(p, TQ(0.1), 1.5)
    assert le < 0
    assert -le == pytest.approx(cn, rel=1e-2)


def test_loschmidt_long_time_oracle_and_bound():
    p = ModelParams(0.5, 0.5)
    cn, le = quench_observables(p, TQ(0.1), 100.0, TL)

    def f(k):
        y = abs(np.vdot(ground_vector(k, 0.5, 0.5), evolved(k, 0.5, 0.5, 0.6, 0.5, 100.0))) ** 2
        return np.log(y)

    assert le == pytest.approx(quad_avg(f, eps_abs=1e-13), rel=1e-7)
    assert -le >= cn


def test_bound_random_sample(rng):
    bad = 0
    for _ in range(200):
        h, gam = rng.uniform(-2, 2), rng.uniform(-1.5, 1.5)
        d, t = rng.uniform(-0.5, 0.5), rng.uniform(0, 50)
        q = QuenchSpec(d, *[(1, 0), (0, 1), (1, 1)][rng.integers(3)])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ResonanceClamped)
            cn, le = quench_observables(ModelParams(h, gam), q, t, FiniteChain(201))
        bad += (-le - cn) < -1e-12
    assert bad == 0


def test_per_site_range():
    cn = nielsen_quench(ModelParams(0.99, 0.1), QuenchSpec(1.5, 1, 1), np.linspace(0, 30, 61))
    assert np.all(cn >= 0) and np.all(cn <= (np.pi / 2) ** 2 / 2)


def test_transverse_symmetries():
    t = np.array([0.7, 5.0, 33.0])
    a = nielsen_quench(ModelParams(0.4, 0.6), TQ(0.15), t)
    assert np.allclose(nielsen_quench(ModelParams(-0.4, 0.6), TQ(-0.15), t), a, rtol=1e-9)
    assert np.allclose(nielsen_quench(ModelParams(0.4, -0.6), TQ(0.15), t), a, rtol=1e-9)
    la = loschmidt(ModelParams(0.4, 0.6), TQ(0.15), t)
    assert np.allclose(loschmidt(ModelParams(-0.4, 0.6), TQ(-0.15), t), la, rtol=1e-9)


def test_flat_band_periodicity():
    # h + delta = 0 and gamma = 1 make every quenched energy equal to 1
    p, q = ModelParams(-0.2, 1.0), TQ(0.2)
    assert np.allclose(dispersion(np.linspace(0, np.pi, 9), q.quenched(p)), 1.0)
    t = np.array([0.3, 1.1, 2.0])
    assert np.allclose(nielsen_quench(p, q, t + np.pi), nielsen_quench(p, q, t), rtol=1e-10)


def test_finite_chain_approaches_thermo():
    p, q = ModelParams(0.3, 0.5), TQ(0.1)
    exact = nielsen_quench(p, q, 2.0, TL)
    errs = [abs(nielsen_quench(p, q, 2.0, FiniteChain(n)) - exact) for n in (101, 1001)]
    assert max(errs) < 1e-12  # smooth periodic integrand: spectral convergence


def test_smalltime_series_examples():
    p = ModelParams(0.0, 0.5)
    assert smalltime_series(p, TQ(0.1), 0.0).value == 0.0
    s = smalltime_series(p, TQ(0.1), 0.5)
    assert s.value == pytest.approx(4.036e-4, rel=1e-3)
    assert s.regular == pytest.approx(-1.302e-5, rel=1e-3)
    d, t, g, h = 0.1, 0.5, 0.5, 0.0
    assert s.value == pytest.approx(-g * g * d * d * t**4 / 12 + g * d * d * t * t / (2 * (1 + g)),
                                    rel=1e-12)


def test_smalltime_series_anisotropic():
    p, q = ModelParams(0.5, 0.5), QuenchSpec.anisotropic(0.1)
    s = smalltime_series(p, q, 0.5)
    lead = 0.01 * 0.25 * (0.5 + 2 * 0.5 * 0.25 + 1) / (4 * 1.5**3)
    exact = nielsen_quench(p, q, 0.5, TL)
    assert s.value - s.regular == pytest.approx(lead, rel=1e-2)
    assert s.value == pytest.approx(exact, rel=5e-3)


@pytest.mark.parametrize("h", [-0.45, 0.0, 0.35, 1.7, -1.8])
@pytest.mark.parametrize("t", [0.1, 0.3, 0.5])
def test_smalltime_series_within_five_percent(h, t):
    p, q = ModelParams(h, 0.5), TQ(0.1)
    s = smalltime_series(p, q, t)
    assert s.valid
    assert s.value == pytest.approx(nielsen_quench(p, q, t, TL), rel=0.05)


def test_smalltime_series_degrades_with_time():
    p, q = ModelParams(0.5, 0.5), TQ(0.1)
    err = [abs(smalltime_series(p, q, t).value / nielsen_quench(p, q, t, TL) - 1)
           for t in (0.5, 1.0, 1.5)]
    assert err[0] < err[1] < err[2]


def test_smalltime_series_flags_and_errors():
    assert not smalltime_series(ModelParams(0.92, 0.5), TQ(0.1), 0.3).valid
    with pytest.raises(UnsupportedRegime):
        smalltime_series(ModelParams(0.5, 0.5), QuenchSpec(0.1, 1, 1), 0.3)


def test_larget_limit_zero_and_static_relation():
    p = ModelParams(0.5, 0.5)
    assert larget_limit(p, TQ(0.0)) == 0.0
    v = larget_limit(p, TQ(0.01), TL)
    assert v == pytest.approx(3.356e-5, rel=1e-2)
    assert v == pytest.approx(2 * nielsen_series(p, 0.01, "h").value, rel=1e-2)
    assert larget_series(p, 0.01).value == pytest.approx(v, rel=1e-3)


def test_larget_time_average_matches_dephasing_oracle():
    """The time average dephases sin^2(eps~ t) over a uniform phase."""
    p, q = ModelParams(0.8, 0.5), TQ(0.1)
    times = np.linspace(500, 1000, 4001)
    avg = nielsen_quench(p, q, times).mean()
    x, w = np.polynomial.legendre.leggauss(200)
    phi = 0.5 * np.pi * (x + 1)

    def f(k):
        s = np.sin(angle(k, 0.8, 0.5) - angle(k, 0.9, 0.5)) ** 2
        return 0.5 * np.sum(w * np.arcsin(np.sqrt(s * np.sin(phi) ** 2)) ** 2)

    oracle = quad_avg(f, eps_abs=1e-12)
    assert avg == pytest.approx(oracle, rel=5e-3)
    # replacing sin^2 by its mean is only accurate to O(sin^4 2 Omega)
    assert larget_limit(p, q) == pytest.approx(avg, rel=2e-2)


def test_larget_limit_guard():
    with pytest.raises(InvalidLimit):
        larget_limit(ModelParams(1.0, 0.5), TQ(0.1))
    with pytest.raises(InvalidLimit):
        larget_limit(ModelParams(0.9, 0.5), TQ(0.1))


def test_larget_series_outer_branch():
    p = ModelParams(1.5, 0.5)
    assert larget_series(p, 0.01).value == pytest.approx(larget_limit(p, TQ(0.01), TL), rel=1e-2)


def test_modulation_profile():
    p = ModelParams(0.8, 0.5)
    assert np.all(modulation_profile(p, TQ(0.0)).values == 0.0)
    prof = modulation_profile(p, TQ(0.1))
    assert prof.max_value < 1
    assert 0 < prof.argmax < np.pi
    crit = modulation_profile(ModelParams(0.9, 0.5), TQ(0.1), k=np.linspace(0.01, np.pi - 1e-6, 2001))
    assert crit.max_value == pytest.approx(1.0, abs=1e-6)
    assert crit.argmax > np.pi - 1e-3


def test_mode_profile_rows():
    rows = mode_profile_rows(ModelParams(0.8, 0.5), TQ(0.1), 20.0, [0.5, 1.5])
    assert len(rows) == 2
    for k, m, c, l in rows:
        assert 0 <= m <= 1 and c >= 0 and l <= 0 and -l >= c
    assert modulation(np.array([0.5]), ModelParams(0.8, 0.5), TQ(0.1))[0] == rows[0][1]


def test_oscillation_envelope_zero_delta_and_window_check():
    env = oscillation_envelope(ModelParams(1.0, 0.5), TQ(0.0))
    assert env.amplitude == 0.0 and env.relative == 0.0
    with pytest.raises(ValueError):
        oscillation_envelope(ModelParams(0.5, 0.5), TQ(0.1), (0.0, 5.0))


def test_resonance_is_clamped_and_flagged():
    k = np.arctan(2.0)
    p, q = ModelParams(0.0, -0.5), QuenchSpec(1.0, 0, 1)
    t = np.pi / (2 * dispersion(k, q.quenched(p)))
    with pytest.warns(ResonanceClamped):
        c, l = mode_terms(np.array([k]), p, q, [t])
    assert np.isfinite(l[0, 0]) and l[0, 0] >= np.log(1e-15)


def test_time_series_csv(tmp_path):
    ts = time_series(ModelParams(0.5, 0.5), TQ(0.1), [0.0, 1.0, 2.0], label="-log L")
    assert ts.values[0] == 0 and np.all(ts.values[1:] > 0)
    ts.to_csv(tmp_path / "ts.csv")
    text = (tmp_path / "ts.csv").read_bytes()
    assert text.startswith(b"t,value,label\n") and b"\r" not in text
    with pytest.raises(ValueError):
        time_series(ModelParams(0.5, 0.5), TQ(0.1), [1.0, 0.5])
