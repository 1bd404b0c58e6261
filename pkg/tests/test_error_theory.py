import numpy as np
import pytest

from tfrlab.error_theory import (
    ErrorPrediction,
    direct_interference_errors,
    hybrid_interference_error,
    predicted_errors,
    ridge_interference_errors,
    ridge_theoretical_errors,
    truth_derivatives,
)
from tfrlab.reconstruction import (
    HybridRequired,
    direct_reconstruct,
    error_metrics,
    ridge_reconstruct,
)
from tfrlab.regimes import classify_am, classify_two_tone, two_tone_overlaps
from tfrlab.signals import AM, FM, ComponentTrack, MultiTone, Tone, synthesize
from tfrlab.support import SupportCurve, extract_tfs
from tfrlab.synchrosqueeze import inst_freq_map
from tfrlab.transform import FrequencyGrid, compute_tfr, pad_length
from tfrlab.windows import WindowSpec, window_ft

FS = 50.0
NU1 = 2 * np.pi * 2


def tone_track(a=1.0, nu=NU1, phi0=0.0, n=500):
    t = np.arange(n) / FS
    return ComponentTrack(t, np.full(n, a), nu * t + phi0, np.full(n, nu))


def band(track, lo, hi):
    n = len(track)
    z = np.zeros(n, int)
    return SupportCurve(track.t, track.nu.copy(), np.full(n, lo), np.full(n, hi), z, z, z, np.zeros(n), np.zeros(n, bool))


def fd_p_squared(w, omega, h=1e-4):
    # P² = −∂²_ν ĥ_ν(ω)/ĥ_ν(ω) at ν = ω, by central differences
    f = lambda nu: window_ft(w, nu, omega)  # noqa: E731
    return -(f(omega + h) - 2 * f(omega) + f(omega - h)) / (h * h) / f(omega)


@pytest.mark.parametrize("kind", ["gaussian", "lognormal", "morlet"])
def test_tone_has_no_theoretical_error(kind):
    w = WindowSpec(kind, 1.0)
    p = ridge_theoretical_errors(tone_track(), w)
    for name in ("dA_T", "dphi_T", "dnu_T"):
        v = getattr(p, name)
        # numerical derivatives leave the two end samples undefined
        assert np.all(np.isnan(v[:2])) and np.all(np.isnan(v[-2:]))
        assert np.all(np.abs(v[2:-2]) < 1e-10)


@pytest.mark.parametrize("kind,f0", [("gaussian", 0.7), ("lognormal", 1.2), ("morlet", 1.5)])
def test_p_squared_matches_curvature(kind, f0):
    w = WindowSpec(kind, f0)
    for om in (3.0, 12.0):
        got = w.p_squared() if kind == "gaussian" else float(w.p_squared(om))
        assert got == pytest.approx(fd_p_squared(w, om), rel=1e-5)
    if kind == "gaussian":
        assert w.p_squared() == f0**2
    if kind == "lognormal":
        assert float(w.p_squared(3.0)) == pytest.approx((2 * np.pi * f0 / 3.0) ** 2, rel=1e-12)


def test_wavelet_p_squared_needs_frequency():
    with pytest.raises(ValueError):
        WindowSpec("morlet", 1.0).p_squared()


def test_ridge_theory_formulae_on_am_fm():
    _, (am,) = synthesize(AM(1.0, 0.3, 0.8, NU1), FS, 20)
    _, (fm,) = synthesize(FM(1.0, 0.4, 0.5, NU1), FS, 20)
    w = WindowSpec("gaussian", 1.5)
    pa = ridge_theoretical_errors(am, w)
    d = truth_derivatives(am)
    np.testing.assert_allclose(pa.dA_T, 0.5 * 1.5**2 * d["d2A"], rtol=1e-12)
    np.testing.assert_allclose(pa.dphi_T, 0, atol=1e-12)
    pf = ridge_theoretical_errors(fm, w)
    d = truth_derivatives(fm)
    np.testing.assert_allclose(pf.dphi_T, 0.5 * 1.5**2 * d["dnu"], rtol=1e-12)
    np.testing.assert_allclose(pf.dnu_T, 1.5**2 * 0.5 * d["d2nu"], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(pf.dA_T, 0, atol=1e-12)


def test_numeric_derivatives_match_exact():
    _, (am,) = synthesize(AM(1.0, 0.3, 0.8, NU1), FS, 20)
    plain = ComponentTrack(am.t, am.A, am.phi, am.nu)
    num, exact = truth_derivatives(plain), truth_derivatives(am)
    for k in ("dA", "d2A"):
        assert np.all(np.isnan(num[k][:2])) and np.all(np.isnan(num[k][-2:]))
        np.testing.assert_allclose(num[k][2:-2], exact[k][2:-2], atol=1e-5)


def test_zero_amplitude_gaps_frequency_error():
    tr = tone_track()
    tr.A[10] = 0.0
    tr.derivatives = {"dA": np.zeros(len(tr)), "d2A": np.zeros(len(tr)),
                      "dnu": np.ones(len(tr)), "d2nu": np.zeros(len(tr))}
    p = ridge_theoretical_errors(tr, WindowSpec("gaussian", 1.0))
    assert np.isnan(p.dnu_T[10]) and np.all(np.isfinite(np.delete(p.dnu_T, 10)))


@pytest.mark.parametrize("name", ["dA_T", "dphi_T", "dnu_T"])
def test_theoretical_errors_scale_as_f0_squared(name):
    _, (fm,) = synthesize(FM(1.0, 0.4, 0.5, NU1), FS, 20)
    _, (am,) = synthesize(AM(1.0, 0.3, 0.8, NU1), FS, 20)
    for tr in (fm, am):
        a = getattr(ridge_theoretical_errors(tr, WindowSpec("gaussian", 1.0)), name)
        b = getattr(ridge_theoretical_errors(tr, WindowSpec("gaussian", 2.0)), name)
        np.testing.assert_allclose(b, 4 * a, rtol=1e-12, atol=1e-15)


def test_caveat_flag():
    w = WindowSpec("gaussian", 1.0)
    assert not ridge_theoretical_errors(tone_track(), w, "IV").caveat
    assert ridge_theoretical_errors(tone_track(), w, "II").caveat
    assert not ridge_theoretical_errors(tone_track(), w).caveat


@pytest.mark.parametrize("nu_a,r_a", [(0.2, 0.3), (0.3, 0.2)])
def test_am_regime_IV_ridge_amplitude_prediction(nu_a, r_a):
    w = WindowSpec("gaussian", 1.0)
    assert classify_am(w, NU1, nu_a, r_a).regime == "IV"
    spec = AM(1.0, r_a, nu_a, NU1)
    sig, (truth,) = synthesize(spec, FS, 200)
    grid = FrequencyGrid.covering(w, NU1 - nu_a, NU1 + nu_a, step=0.02, anchor=NU1)
    tfr = compute_tfr(sig, w, grid, padding="exact")
    rec = ridge_reconstruct(tfr, extract_tfs(tfr))
    p = pad_length(w, FS, grid.omega_min) // 2
    emp = error_metrics(rec, truth, "WFT", p).eps_a
    pred = ridge_theoretical_errors(truth, w, "IV")
    keep = slice(p, len(truth) - p)
    theory = np.sqrt(np.mean(pred.dA_T[keep] ** 2)) / np.sqrt(np.mean(truth.A[keep] ** 2))
    assert emp == pytest.approx(theory, rel=0.2)


# ---------------------------------------------------------------- interference


def test_ridge_interference_without_others_is_zero():
    p = ridge_interference_errors(tone_track(), [], WindowSpec("gaussian", 1.0))
    assert np.all(p.dA_I == 0) and np.all(p.dphi_I == 0) and np.all(p.dnu_I == 0)


def test_ridge_interference_linear_in_side_amplitude():
    w = WindowSpec("gaussian", 1.0)
    main = tone_track()
    outs = [ridge_interference_errors(main, [tone_track(a, NU1 + 1.5, 0.4)], w) for a in (1e-3, 2e-3, 4e-3)]
    for name in ("dA_I", "dphi_I", "dnu_I"):
        a, b, c = (getattr(o, name) for o in outs)
        np.testing.assert_allclose(b, 2 * a, rtol=1e-12, atol=1e-18)
        np.testing.assert_allclose(c, 4 * a, rtol=1e-12, atol=1e-18)


def test_ridge_interference_weight():
    w = WindowSpec("gaussian", 1.0)
    r, nu2 = 0.5, NU1 + 1.2
    p = ridge_interference_errors(tone_track(), [tone_track(r, nu2)], w)
    weight = r * window_ft(w, nu2, NU1)
    assert np.max(np.abs(p.dA_I)) == pytest.approx(weight, rel=1e-6)


def test_ridge_amplitude_wobble_regime_II():
    w = WindowSpec("gaussian", 2.0)
    nu2, r = 2 * np.pi * 2.25, 0.5
    assert classify_two_tone(w, NU1, nu2, r).regime == "II"
    sig, tracks = synthesize(MultiTone((Tone(1.0, NU1), Tone(r, nu2, 0.4))), FS, 60)
    tfr = compute_tfr(sig, w, FrequencyGrid.covering(w, NU1, nu2, step=0.02), padding="exact")
    c = extract_tfs(tfr, "frequency", ref_track=tracks[0].nu, n_dominant=2)
    rec = ridge_reconstruct(tfr, c)
    keep = slice(500, -500)
    wobble = 0.5 * (rec.A[keep].max() - rec.A[keep].min())
    predicted = r * window_ft(w, nu2, NU1) / w.h_max
    assert wobble == pytest.approx(predicted, rel=0.2)


def test_direct_full_axis_single_component_is_exact():
    for kind in ("gaussian", "lognormal"):
        w = WindowSpec(kind, 1.0)
        p = direct_interference_errors(tone_track(), [], None, w)
        np.testing.assert_allclose(p.dA_I, 0, atol=1e-9)
        np.testing.assert_allclose(p.dphi_I, 0, atol=1e-12)
        np.testing.assert_allclose(p.dnu_I, 0, atol=1e-6)
        assert np.all(p.dA_T == 0) and np.all(p.dphi_T == 0) and np.all(p.dnu_T == 0)


def test_direct_full_axis_two_components_adds_both():
    w = WindowSpec("gaussian", 1.0)
    main, side = tone_track(), tone_track(0.5, NU1 + 3.0, 0.0)
    p = direct_interference_errors(main, [side], None, w)
    z = 1 + 0.5 * np.exp(1j * (side.phi - main.phi))
    np.testing.assert_allclose(p.dA_I, np.abs(z) - 1, atol=1e-9)


def test_direct_split_at_crossing_deviation_is_eta():
    w = WindowSpec("gaussian", 1.0)
    nu2, r = NU1 + 2.5, 0.5
    eta1, _, ox = two_tone_overlaps(w, NU1, nu2, r)
    main, side = tone_track(), tone_track(r, nu2)
    p = direct_interference_errors(main, [side], band(main, -np.inf, ox), w)
    assert np.max(np.abs(p.dA_I)) == pytest.approx(eta1, rel=0.3)


def test_direct_morlet_frequency_requires_hybrid():
    w = WindowSpec("morlet", 1.0)
    with pytest.raises(HybridRequired):
        direct_interference_errors(tone_track(), [], None, w)
    p = direct_interference_errors(tone_track(), [], None, w, frequency=False)
    assert p.dnu_I is None


def test_hybrid_zero_cases():
    w = WindowSpec("morlet", 1.0)
    main = tone_track()
    assert np.all(hybrid_interference_error(main, [], None, w) == 0)
    far = hybrid_interference_error(main, [tone_track(1.0, NU1 * 100)], band(main, NU1 / 1.5, NU1 * 1.5), w)
    assert np.max(np.abs(far)) < 1e-9


@pytest.mark.parametrize("fn", ["ridge", "direct", "hybrid"])
def test_interference_2pi_periodic_in_phase(fn):
    w = WindowSpec("gaussian", 1.0) if fn != "hybrid" else WindowSpec("morlet", 1.0)
    main = tone_track()
    for off in np.linspace(0, 2 * np.pi, 5, endpoint=False):
        a, b = tone_track(0.5, NU1 * 1.2, off), tone_track(0.5, NU1 * 1.2, off + 2 * np.pi)
        if fn == "ridge":
            pa, pb = ridge_interference_errors(main, [a], w), ridge_interference_errors(main, [b], w)
            arrs = [(pa.dA_I, pb.dA_I), (pa.dphi_I, pb.dphi_I), (pa.dnu_I, pb.dnu_I)]
        elif fn == "direct":
            pa, pb = direct_interference_errors(main, [a], None, w), direct_interference_errors(main, [b], None, w)
            arrs = [(pa.dA_I, pb.dA_I), (np.exp(1j * pa.dphi_I), np.exp(1j * pb.dphi_I)), (pa.dnu_I, pb.dnu_I)]
        else:
            arrs = [(hybrid_interference_error(main, [a], None, w), hybrid_interference_error(main, [b], None, w))]
        for x, y in arrs:
            np.testing.assert_allclose(x, y, atol=1e-9)


def test_axes_must_match():
    w = WindowSpec("gaussian", 1.0)
    with pytest.raises(ValueError):
        ridge_interference_errors(tone_track(), [tone_track(n=400)], w)


# ---------------------------------------------------------------- empirical, Regime II


def _regime_II_setup(kind):
    w = WindowSpec(kind, 2.0)
    nu2, r = NU1 * 1.3, 0.5
    assert classify_two_tone(w, NU1, nu2, r).regime == "II"
    sig, tracks = synthesize(MultiTone((Tone(1.0, NU1), Tone(r, nu2, 0.4))), FS, 100)
    grid = FrequencyGrid.covering(w, NU1, nu2, fs=FS)
    tfr = compute_tfr(sig, w, grid, padding="exact", derivative=True)
    pad = pad_length(w, FS, grid.omega_min) // 2
    return w, tfr, tracks, pad


@pytest.mark.parametrize("kind", ["lognormal", "morlet"])
def test_regime_II_predictions_within_factor_two(kind):
    w, tfr, tracks, pad = _regime_II_setup(kind)
    ifm = inst_freq_map(tfr)
    for i in range(2):
        truth, others = tracks[i], [tracks[1 - i]]
        c = extract_tfs(tfr, "frequency", ref_track=truth.nu, n_dominant=2)
        if kind == "morlet":
            pd = direct_interference_errors(truth, others, c, w, frequency=False)
            pd.dnu_I = hybrid_interference_error(truth, others, c, w)
            d = direct_reconstruct(tfr, c, ifm=ifm)
        else:
            pd = direct_interference_errors(truth, others, c, w)
            d = direct_reconstruct(tfr, c)
        emp = error_metrics(d, truth, "WT", pad).as_tuple()
        pred = predicted_errors(pd, truth, "WT", pad).as_tuple()
        for e, p in zip(emp, pred):
            assert p / 2 <= e <= 2 * p, (kind, i, emp, pred)
        pr = ridge_theoretical_errors(truth, w).merge(ridge_interference_errors(truth, others, w))
        emp_r = error_metrics(ridge_reconstruct(tfr, c), truth, "WT", pad).as_tuple()
        pred_r = predicted_errors(pr, truth, "WT", pad).as_tuple()
        for e, p in zip(emp_r, pred_r):
            assert p / 2 <= e <= 2 * p, (kind, i, emp_r, pred_r)


def test_merge_and_total():
    t = np.arange(3.0)
    a = ErrorPrediction(t, dA_T=np.ones(3), caveat=True, notes={"x": 1})
    b = ErrorPrediction(t, dA_T=np.full(3, 9.0), dA_I=np.full(3, 2.0), notes={"x": 2, "y": 3})
    m = a.merge(b)
    np.testing.assert_array_equal(m.total("A"), np.full(3, 3.0))
    assert m.caveat and m.notes == {"x": 1, "y": 3}
    with pytest.raises(ValueError):
        m.total("phi")


def test_predicted_errors_tone_is_zero():
    p = ridge_theoretical_errors(tone_track(), WindowSpec("gaussian", 1.0)).merge(
        ridge_interference_errors(tone_track(), [], WindowSpec("gaussian", 1.0)))
    assert predicted_errors(p, tone_track()).as_tuple() == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)
