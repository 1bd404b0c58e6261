import numpy as np
import pytest

from tfrlab.reconstruction import (
    ErrorTriple,
    HybridRequired,
    adaptive_select,
    build_skeleton,
    direct_reconstruct,
    error_metrics,
    format_error,
    hybrid_freq,
    ridge_reconstruct,
)
from tfrlab.regimes import classify_am, classify_fm, two_tone_overlaps
from tfrlab.signals import AM, FM, ComponentTrack, MultiTone, NoisyTone, Tone, synthesize
from tfrlab.support import SupportCurve, extract_tfs
from tfrlab.synchrosqueeze import ContractError, inst_freq_map, synchrosqueeze
from tfrlab.transform import FrequencyGrid, compute_tfr, pad_length
from tfrlab.windows import WindowSpec

FS = 50.0
NU = 2 * np.pi * 2


def analyse(spec, kind="gaussian", f0=1.0, T=40, step=None, padding="exact", lo=None, hi=None):
    w = WindowSpec(kind, f0)
    sig, tracks = synthesize(spec, FS, T)
    lo = tracks[0].nu.min() if lo is None else lo
    hi = tracks[0].nu.max() if hi is None else hi
    if step is None:
        step = 2 * np.pi * 0.002 if kind == "gaussian" else 256
    grid = FrequencyGrid.covering(w, lo, hi, step=step, fs=FS)
    tfr = compute_tfr(sig, w, grid, padding=padding, derivative=True)
    return sig, tracks, tfr


def family(tfr):
    return "WT" if tfr.window.is_wavelet else "WFT"


def excl(tfr):
    return pad_length(tfr.window, FS, tfr.grid.omega_min)


def test_ridge_clean_tone():
    _, (truth,), tfr = analyse(MultiTone((Tone(1.3, NU, 0.4),)))
    rec = ridge_reconstruct(tfr, extract_tfs(tfr))
    assert error_metrics(rec, truth, "WFT").max() < 1e-3


@pytest.mark.parametrize("kind", ["gaussian", "morlet"])
def test_direct_full_axis_tone(kind):
    _, (truth,), tfr = analyse(MultiTone((Tone(1.0, NU, 0.4),)), kind=kind)
    ifm = inst_freq_map(tfr) if kind == "morlet" else None
    rec = direct_reconstruct(tfr, SupportCurve.full_axis(tfr), ifm)
    assert error_metrics(rec, truth, family(tfr)).max() < 1e-3


def test_morlet_direct_frequency_needs_hybrid():
    _, _, tfr = analyse(MultiTone((Tone(1.0, NU),)), kind="morlet", T=10)
    with pytest.raises(HybridRequired, match="hybrid"):
        direct_reconstruct(tfr, extract_tfs(tfr))


def test_hybrid_equals_direct_on_tone():
    _, (truth,), tfr = analyse(MultiTone((Tone(1.0, NU),)), T=20)
    c = extract_tfs(tfr)
    nu_h = hybrid_freq(tfr, inst_freq_map(tfr), c)
    nu_d = direct_reconstruct(tfr, c).nu
    np.testing.assert_allclose(nu_h, nu_d, rtol=1e-6)
    assert np.sqrt(np.mean((nu_h - truth.nu) ** 2)) / (2 * np.pi) < 1e-3


def test_squeezed_ridge_amplitude_rejected():
    _, (truth,), tfr = analyse(MultiTone((Tone(1.0, NU),)), T=10)
    sq = synchrosqueeze(tfr, inst_freq_map(tfr))
    c = extract_tfs(sq)
    with pytest.raises(ContractError):
        ridge_reconstruct(sq, c)
    rec = ridge_reconstruct(sq, c, amplitude=False)
    assert np.all(np.abs(rec.nu - truth.nu) < sq.grid.step)


@pytest.mark.parametrize("r_a, nu_a", [(0.5, 0.1), (0.9, 1.0), (0.5, 5.0)])
def test_am_gaussian_ridge_phase_frequency_exact(r_a, nu_a):
    spec = AM(1.0, r_a, nu_a, NU)
    _, (truth,), tfr = analyse(spec, T=40, lo=NU, hi=NU)
    rec = ridge_reconstruct(tfr, extract_tfs(tfr))
    err = error_metrics(rec, truth, "WFT", excl(tfr))
    assert err.eps_phi < 1e-3 and err.eps_f < 1e-3


def test_am_regime_IV_direct_amplitude():
    w = WindowSpec("gaussian", 1.0)
    spec = AM(1.0, 0.5, 0.1, NU)
    assert classify_am(w, NU, 0.1, 0.5).regime == "IV"
    _, (truth,), tfr = analyse(spec, T=100, lo=NU, hi=NU)
    c = extract_tfs(tfr)
    d = error_metrics(direct_reconstruct(tfr, c), truth, "WFT", excl(tfr))
    r = error_metrics(ridge_reconstruct(tfr, c), truth, "WFT", excl(tfr))
    assert d.eps_a < 0.01
    assert d.eps_a <= r.eps_a


def test_fm_regime_IV_direct_beats_ridge():
    w = WindowSpec("gaussian", 1.0)
    assert classify_fm(w, NU, 0.2, 0.3).regime == "IV"
    _, (truth,), tfr = analyse(FM(1.0, 0.3, 0.2, NU), T=100)
    c = extract_tfs(tfr)
    d = error_metrics(direct_reconstruct(tfr, c), truth, "WFT", excl(tfr))
    r = error_metrics(ridge_reconstruct(tfr, c), truth, "WFT", excl(tfr))
    assert d.eps_a <= r.eps_a


def test_morlet_fm_regime_IV_hybrid_frequency():
    spec = FM(1.0, 0.3, 0.2, NU)
    assert classify_fm(WindowSpec("morlet", 1.0), NU, 0.2, 0.3).regime == "IV"
    _, (truth,), tfr = analyse(spec, kind="morlet", T=100)
    c = extract_tfs(tfr)
    nu = hybrid_freq(tfr, inst_freq_map(tfr), c)
    e = excl(tfr)
    dev = np.abs(nu - truth.nu)[e:-e]
    assert np.max(dev) < 1e-2 * NU


def test_two_tone_split_deviation_matches_overlap():
    # tones of equal amplitude split at ω× = ν̄: the leak of each tone into the other's
    # support bounds the deviation of the reconstructed component by ≈ η₁A
    w = WindowSpec("gaussian", 2.0)
    nu1, nu2 = NU, 2 * np.pi * 2.25
    spec = MultiTone((Tone(1.0, nu1), Tone(1.0, nu2, 0.3)))
    sig, tracks, tfr = analyse(spec, f0=2.0, T=60, lo=nu1, hi=nu2, step=2 * np.pi * 0.002)
    eta1, _, _ = two_tone_overlaps(w, nu1, nu2, 1.0)
    c = extract_tfs(tfr, "frequency", ref_track=tracks[0].nu, n_dominant=2)
    rec = direct_reconstruct(tfr, c)
    e = excl(tfr)
    s_rec = rec.A * np.cos(rec.phi)
    s_true = tracks[0].A * np.cos(tracks[0].phi)
    dev = np.max(np.abs(s_rec - s_true)[e:-e])
    assert dev == pytest.approx(eta1, rel=0.3)


def test_error_metrics_trivial():
    t = np.arange(100) / FS
    truth = ComponentTrack(t, np.ones(100), NU * t, np.full(100, NU))
    assert error_metrics(truth, truth).as_tuple() == (0.0, 0.0, 0.0)
    shifted = ComponentTrack(t, np.ones(100), NU * t + 0.3, np.full(100, NU + 2 * np.pi * 0.01))
    e = error_metrics(shifted, truth, "WFT")
    assert e.eps_phi == pytest.approx(0.0, abs=1e-7)
    assert e.eps_f == pytest.approx(0.01, rel=1e-12)
    rng = np.random.default_rng(0)
    t2 = np.arange(200000) / FS
    noisy = ComponentTrack(t2, np.ones(t2.size), rng.uniform(-np.pi, np.pi, t2.size), np.full(t2.size, NU))
    ref = ComponentTrack(t2, np.ones(t2.size), np.zeros(t2.size), np.full(t2.size, NU))
    assert error_metrics(noisy, ref).eps_phi == pytest.approx(1.0, abs=1e-2)
    wt = error_metrics(shifted, truth, "WT")
    assert wt.eps_f == pytest.approx(2 * np.pi * 0.01 / NU, rel=1e-12)


def test_error_metrics_gaps():
    t = np.arange(10.0)
    truth = ComponentTrack(t, np.ones(10), t, np.ones(10))
    gap = np.ones(10, dtype=bool)
    rec = ComponentTrack(t, np.ones(10), t, np.ones(10), gap=gap)
    with pytest.raises(ValueError, match="undefined"):
        error_metrics(rec, truth)
    with pytest.raises(ValueError):
        error_metrics(ComponentTrack(t[:5], np.ones(5), t[:5], np.ones(5)), truth)


def test_format_error_floor():
    assert format_error(0.0005) == "≤0.001"
    assert format_error(0.02) == "0.02"
    assert ErrorTriple(0.1, 0.2, 0.05).max() == 0.2


def test_adaptive_noisy_tone_prefers_ridge():
    spec = NoisyTone(NU, 0.5, 11)
    _, (truth,), tfr = analyse(spec, T=60, lo=NU, hi=NU, step=2 * np.pi * 0.01)
    choice = adaptive_select(tfr, extract_tfs(tfr))
    assert choice.methods == {"A": "ridge", "phi": "ridge", "nu": "ridge"}


def test_adaptive_clean_am_prefers_direct_amplitude():
    # the symmetric window makes ridge phase and frequency exact for AM, so only A goes direct
    _, _, tfr = analyse(AM(1.0, 0.5, 2 * np.pi * 0.2, 2 * np.pi), T=60, step=2 * np.pi * 0.01)
    choice = adaptive_select(tfr, extract_tfs(tfr))
    assert choice.methods["A"] == "direct"
    assert choice.track.method == "adaptive"


def test_adaptive_clean_fm_prefers_direct():
    spec = FM(1.0, 0.5, 2 * np.pi * 0.1, 2 * np.pi)
    assert classify_fm(WindowSpec("gaussian", 1.0), 2 * np.pi, 2 * np.pi * 0.1, 0.5).regime == "IV"
    _, _, tfr = analyse(spec, T=60, step=2 * np.pi * 0.01)
    choice = adaptive_select(tfr, extract_tfs(tfr))
    assert choice.methods == {"A": "direct", "phi": "direct", "nu": "direct"}


def test_skeleton_tone():
    _, (truth,), tfr = analyse(MultiTone((Tone(1.2, NU, 0.5),)), T=20)
    e = excl(tfr)
    for method in ("ridge", "direct"):
        sk = build_skeleton(tfr, method)
        nz = sk.values != 0
        assert np.all(nz.sum(axis=0) == 1)
        k = int(tfr.grid.bin_of(NU))
        np.testing.assert_allclose(sk.values[k, e:-e], 1.2 * np.exp(1j * truth.phi[e:-e]), atol=1e-3 * 1.2)


def test_ridge_skeleton_is_scaled_peaks():
    spec = MultiTone((Tone(1.0, NU), Tone(0.6, 2 * np.pi * 2.6, 0.2)))
    _, _, tfr = analyse(spec, f0=3.0, T=20, lo=NU, hi=2 * np.pi * 2.6)
    sk = build_skeleton(tfr, "ridge")
    amp = tfr.amplitude
    j = 500
    peaks = np.flatnonzero(sk.values[:, j])
    assert peaks.size == 2
    for k in peaks:
        # deposit bin and value agree with the raw peak within sub-bin interpolation
        top = np.argmax(np.where(np.abs(np.arange(amp.shape[0]) - k) <= 1, amp[:, j], 0))
        assert abs(np.abs(sk.values[k, j]) - 2 * amp[top, j] / tfr.window.h_max) < 1e-3


def test_skeleton_idempotent():
    _, _, tfr = analyse(AM(1.0, 0.5, 1.0, NU), T=10, lo=NU, hi=NU)
    np.testing.assert_array_equal(build_skeleton(tfr).values, build_skeleton(tfr).values)


def test_fm_direct_skeleton_frequency():
    spec = FM(1.0, 0.3, 0.2, NU)
    _, (truth,), tfr = analyse(spec, T=60)
    sk = build_skeleton(tfr, "direct")
    e = excl(tfr)
    idx = np.argmax(np.abs(sk.values), axis=0)
    nu = tfr.freqs[idx]
    eps_f = np.sqrt(np.mean((nu - truth.nu)[e:-e] ** 2)) / (2 * np.pi)
    assert eps_f < 0.01


def test_skeleton_contracts():
    _, _, tfr = analyse(MultiTone((Tone(1.0, NU),)), kind="morlet", T=5)
    with pytest.raises(HybridRequired):
        build_skeleton(tfr, "direct")
    assert build_skeleton(tfr, "direct", inst_freq_map(tfr)).kind == "WT"
    with pytest.raises(ValueError):
        build_skeleton(tfr, "hybrid")


@pytest.mark.parametrize("kind", ["gaussian", "lognormal"])
def test_full_axis_direct_reproduces_multitone(kind):
    nus = [2 * np.pi * 1.5, 2 * np.pi * 2.0, 2 * np.pi * 3.1]
    spec = MultiTone(tuple(Tone(a, n, p) for a, n, p in zip((1.0, 0.4, 0.8), nus, (0.1, 2.0, -1.0))))
    sig, tracks, tfr = analyse(spec, kind=kind, T=40, lo=nus[0], hi=nus[-1])
    z = direct_reconstruct(tfr, SupportCurve.full_axis(tfr), inst_freq_map(tfr))
    analytic = z.A * np.exp(1j * z.phi)
    truth = sum(tr.A * np.exp(1j * tr.phi) for tr in tracks)
    e = excl(tfr)
    assert np.sqrt(np.mean(np.abs(analytic - truth)[e:-e] ** 2)) < 1e-3
