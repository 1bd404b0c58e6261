"""Interference measures and TFR behaviour regimes for multitone signals.

Regimes, from least to most interference:

* I: every tone has its own peak and the overlaps are negligible.
* II: tones keep separate peaks at all times but interfere.
* III: tones merge into one peak part of the time.
* IV: tones behave as one component nearly all the time.

Overlaps are measured on the analytic single-tone profiles ĥ_ν(ω), integrated
over the reconstruction measure μ (ω for windows, log ω for wavelets).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .signals import EPS_J, bessel_expansion
from .windows import WindowSpec, epsilon_support, n_gauss, window_ft

__all__ = [
    "REGIME_EPS",
    "RegimeReport",
    "TwoToneThresholds",
    "two_tone_overlaps",
    "classify_two_tone",
    "two_tone_thresholds",
    "am_overlap",
    "classify_am",
    "am_regime_IV_approx",
    "fm_measures",
    "classify_fm",
    "count_interior_minima",
    "peak_regime",
]

REGIME_EPS = 0.001
_SCAN_POINTS = 2048
_STEPS_PER_WIDTH = 100
_MAX_QUAD_POINTS = 1 << 17
_LOG_FLOOR = 1e-300


@dataclass
class RegimeReport:
    """Regime label with the quantities that decided it."""

    regime: str
    eta: dict
    intersections: list
    eps: float
    case: str
    mean_peaks: float | None = None
    conditions: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    @property
    def max_eta(self) -> float:
        return float(max(self.eta.values()))

    def to_row(self) -> dict:
        row = {"case": self.case, "regime": self.regime, "eps": self.eps}
        row.update({k: float(v) for k, v in self.eta.items()})
        row["mean_peaks"] = "" if self.mean_peaks is None else float(self.mean_peaks)
        return row


# ---------------------------------------------------------------- helpers


def _to_mu(window: WindowSpec, omega):
    omega = np.asarray(omega, dtype=float)
    return np.log(omega) if window.is_wavelet else omega


def _from_mu(window: WindowSpec, mu):
    mu = np.asarray(mu, dtype=float)
    return np.exp(mu) if window.is_wavelet else mu


def _profile(window: WindowSpec, nu, mu):
    """ĥ_ν at μ; zero for tones at non-positive frequency under a wavelet."""
    if window.is_wavelet and nu <= 0:
        return np.zeros_like(np.asarray(mu, dtype=float))
    return window_ft(window, nu, _from_mu(window, mu))


def _log_profile(window: WindowSpec, nu, mu):
    mu = np.asarray(mu, dtype=float)
    if window.kind == "gaussian":
        return -0.5 * (window.f0 * (mu - nu)) ** 2
    if window.kind == "lognormal":
        return -0.5 * (2 * np.pi * window.f0 * (np.log(nu) - mu)) ** 2
    return np.log(np.maximum(_profile(window, nu, mu), _LOG_FLOOR))


def _lobe_width(window: WindowSpec) -> float:
    # one-sigma-equivalent half width of the profile in the μ coordinate
    return 0.5 * (window._kernel_quantile(0.8413447460685429) - window._kernel_quantile(0.15865525393145707))


def _mu_span(window: WindowSpec, nus):
    """μ interval outside which every listed profile is below the tail cutoff."""
    lo_v, hi_v = window._kernel_range
    mus = _to_mu(window, [nu for nu in nus if nu > 0])
    if window.is_wavelet:
        # v = log(ν/ω) = μ_ν - μ
        return float(mus.min() - hi_v), float(mus.max() - lo_v)
    return float(mus.min() + lo_v), float(mus.max() + hi_v)


def _quad_grid(window: WindowSpec, nus):
    lo, hi = _mu_span(window, nus)
    step = _lobe_width(window) / _STEPS_PER_WIDTH
    n = int(np.clip(np.ceil((hi - lo) / step), 2048, _MAX_QUAD_POINTS))
    n += n % 2 == 1  # odd count keeps Simpson's rule on equal panels
    return np.linspace(lo, hi, n + 1)


def _integrate(y, mu):
    return float(integrate.simpson(y, x=mu))


def _sign_roots(fn, mu):
    # refined zeros of fn between consecutive samples of opposite sign
    vals = fn(mu)
    idx = np.flatnonzero(np.sign(vals[1:]) * np.sign(vals[:-1]) < 0)
    roots = [optimize.brentq(lambda m: float(fn(np.array([m]))[0]), mu[k], mu[k + 1], xtol=1e-14) for k in idx]
    return roots + mu[vals == 0].tolist()


def _min_integral(fa, fb, mu, kinks=()):
    """∫min(fa, fb)dμ, split at the kinks so each piece is integrated smoothly.

    Kinks sit where fa = fb plus any listed in ``kinks`` (zeros of profiles
    taken in absolute value); ``fa``/``fb`` are callables of μ.
    """
    breaks = _sign_roots(lambda m: fa(m) - fb(m), mu) + list(kinks)
    edges = np.unique(np.concatenate([[mu[0], mu[-1]], breaks]))
    density = (mu.size - 1) / (mu[-1] - mu[0])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(64, 2 * int(np.ceil(0.5 * density * (b - a))))
        x = np.linspace(a, b, n + 1)
        total += _integrate(np.minimum(fa(x), fb(x)), x)
    return total


def count_interior_minima(profile: np.ndarray) -> int:
    """Local minima of a sampled profile, from sign changes of its differences.

    Zero differences (flat or underflowed stretches) are skipped, so a minimum
    spread over a plateau counts once.
    """
    d = np.sign(np.diff(np.asarray(profile, dtype=float)))
    d = d[d != 0]
    if d.size < 2:
        return 0
    return int(np.count_nonzero((d[:-1] < 0) & (d[1:] > 0)))


def _scan(window: WindowSpec, om_lo, om_hi):
    return np.linspace(_to_mu(window, om_lo), _to_mu(window, om_hi), _SCAN_POINTS)


def _label(max_eta, eps, separated: bool):
    if max_eta <= eps:
        return "I"
    if max_eta >= 1 - eps:
        return "IV"
    return "II" if separated else "III"


def peak_regime(mean_peaks: float, n_tones: int, eps: float = REGIME_EPS, tol: float = 0.05) -> str:
    """Regime read from a measured ⟨N_p⟩.

    ``"I/II"`` when every tone keeps its own peak, ``"IV"`` when the count
    stays within 10ε of one, ``"III"`` otherwise.
    """
    if abs(mean_peaks - n_tones) <= tol:
        return "I/II"
    if mean_peaks <= 1 + 10 * eps:
        return "IV"
    return "III"


# ---------------------------------------------------------------- two tones


def _two_tone_crossing(window: WindowSpec, nu1, nu2, r, lo, hi):
    """Root of log ĥ_ν1 − log r − log ĥ_ν2 between ``lo`` and ``hi`` (μ), or None."""

    def g(m):
        return float(_log_profile(window, nu1, m) - np.log(r) - _log_profile(window, nu2, m))

    g_lo, g_hi = g(lo), g(hi)
    if g_lo == 0:
        return lo
    if g_hi == 0:
        return hi
    if np.sign(g_lo) == np.sign(g_hi):
        return None
    guess = _closed_form_crossing(window, nu1, nu2, r)
    if guess is not None:
        # bracket tightly around the closed form when it is already exact
        m0 = float(_to_mu(window, guess))
        d = 1e-9 * max(abs(hi - lo), 1e-12)
        if lo < m0 - d and m0 + d < hi and np.sign(g(m0 - d)) != np.sign(g(m0 + d)):
            lo, hi = m0 - d, m0 + d
    return optimize.brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def _closed_form_crossing(window: WindowSpec, nu1, nu2, r):
    if window.kind == "gaussian":
        return 0.5 * (nu1 + nu2) - np.log(r) / (window.f0**2 * (nu2 - nu1))
    if window.kind == "lognormal":
        return np.sqrt(nu1 * nu2) * np.exp(-np.log(r) / ((2 * np.pi * window.f0) ** 2 * np.log(nu2 / nu1)))
    return None


def two_tone_overlaps(window: WindowSpec, nu1, nu2, r, *, return_flags: bool = False):
    """Relative overlaps of two tones and their profile intersection.

    η₁ = ∫min[ĥ_ν1, rĥ_ν2]dμ / ∫ĥ_ν1 dμ and η₂ = η₁/r, integrated by
    quadrature.  ω× is the crossing ĥ_ν1(ω×) = rĥ_ν2(ω×) inside [ν1, ν2].

    When the profiles do not cross inside [ν1, ν2] the weaker tone lies under
    the stronger one there; the overlaps still come from the quadrature, which
    tends to 1 on the weaker side in that limit, and ω× is returned as NaN.

    Args:
        nu1, nu2: tone frequencies in rad/s, ``0 < nu1 < nu2``.
        r: amplitude of the second tone relative to the first.
        return_flags: also return ``{"no_crossing": bool}``.
    """
    if not 0 < nu1 < nu2:
        raise ValueError("need 0 < nu1 < nu2")
    if r <= 0:
        raise ValueError("amplitude ratio r must be positive")
    m1, m2 = float(_to_mu(window, nu1)), float(_to_mu(window, nu2))
    cross = _two_tone_crossing(window, nu1, nu2, r, m1, m2)
    mu = _quad_grid(window, (nu1, nu2))
    h1 = lambda m: _profile(window, nu1, m)  # noqa: E731
    h2 = lambda m: r * _profile(window, nu2, m)  # noqa: E731
    kinks = () if cross is None else (cross,)
    eta1 = _min_integral(h1, h2, mu, kinks=kinks) / _integrate(h1(mu), mu)
    eta2 = eta1 / r
    omega_x = float("nan") if cross is None else float(_from_mu(window, cross))
    out = (float(eta1), float(eta2), omega_x)
    if return_flags:
        return out + ({"no_crossing": cross is None},)
    return out


def classify_two_tone(window: WindowSpec, nu1, nu2, r, eps: float = REGIME_EPS) -> RegimeReport:
    """Regime of a two-tone signal from its overlaps and most-merged profile.

    The most-merged profile ĥ_ν1 + rĥ_ν2 (tones in phase) is scanned on
    [ν1, ν2]; an interior minimum there means the peaks never fully merge.
    """
    eta1, eta2, omega_x, flags = two_tone_overlaps(window, nu1, nu2, r, return_flags=True)
    mu = _scan(window, nu1, nu2)
    merged = _profile(window, nu1, mu) + r * _profile(window, nu2, mu)
    n_min = count_interior_minima(merged)
    max_eta = max(eta1, eta2)
    regime = _label(max_eta, eps, n_min >= 1)
    cond = {"max_eta_le_eps": max_eta <= eps, "max_eta_ge_1-eps": max_eta >= 1 - eps, "merged_minima": n_min}
    return RegimeReport(regime, {"eta1": eta1, "eta2": eta2}, [omega_x], eps, "TwoTone", None, cond, flags)


@dataclass(frozen=True)
class TwoToneThresholds:
    """Approximate regime boundaries built from ε-supports."""

    window: WindowSpec
    eps: float

    @property
    def supports(self):
        xi1, xi2, _, _ = epsilon_support(self.window, self.eps)
        return xi1, xi2

    @property
    def supports_2eps(self):
        xi1, xi2, _, _ = epsilon_support(self.window, 2 * self.eps)
        return xi1, xi2

    def regime_I(self, nu1, nu2) -> bool:
        """Separated ε-supports: Δν > ξ₂−ξ₁ (windows) or ν₂/ν₁ > ξ₂/ξ₁ (wavelets)."""
        xi1, xi2 = self.supports
        if self.window.is_wavelet:
            return bool(nu2 / nu1 > xi2 / xi1)
        return bool(nu2 - nu1 > xi2 - xi1)

    def boundary_I(self, nu1=None) -> float:
        """Separation at the I boundary: Δν for windows, log(ν₂/ν₁) for wavelets."""
        xi1, xi2 = self.supports
        return float(np.log(xi2 / xi1)) if self.window.is_wavelet else float(xi2 - xi1)

    def regime_IV(self, nu1, nu2, r) -> bool:
        """Intersection pushed beyond a tone's 2ε-support edge."""
        w = self.window
        if w.kind == "gaussian":
            x = w.f0 * (nu2 - nu1)
        elif w.kind == "lognormal":
            x = 2 * np.pi * w.f0 * np.log(nu2 / nu1)
        else:
            return self._regime_IV_numeric(nu1, nu2, r)
        bound = np.exp(0.5 * x * (2 * n_gauss(2 * self.eps) + x))
        return bool(r >= bound or 1.0 / r >= bound)

    def _regime_IV_numeric(self, nu1, nu2, r) -> bool:
        w = self.window
        xi1, xi2 = self.supports_2eps
        lo_edge, hi_edge = w.omega_psi * nu1 / xi2, w.omega_psi * nu2 / xi1
        lo, hi = _mu_span(w, (nu1, nu2))
        cross = _two_tone_crossing(w, nu1, nu2, r, lo, hi)
        if cross is None:
            return True
        omega_x = float(_from_mu(w, cross))
        return bool(omega_x >= hi_edge or omega_x <= lo_edge)

    def eta_bounds(self, r):
        """Upper bounds on (η₁, η₂) implied by the I condition: (1+r^{±1})ε/2."""
        return (1 + r) * self.eps / 2, (1 + 1.0 / r) * self.eps / 2


def two_tone_thresholds(window: WindowSpec, eps: float = REGIME_EPS) -> TwoToneThresholds:
    """Approximate I/IV boundary predicates for ``window`` at accuracy ``eps``."""
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 0.5)")
    return TwoToneThresholds(window, eps)


# ---------------------------------------------------------------- AM


def _am_sides(window, nu, nu_a, r_a, mu):
    return 0.5 * r_a * (_profile(window, nu + nu_a, mu) + _profile(window, nu - nu_a, mu))


def _am_crossings(window, nu, nu_a, r_a):
    # nearest sign changes of ĥ_ν − side profile on each side of ν
    lo, hi = _mu_span(window, (nu - nu_a, nu + nu_a))
    m0 = float(_to_mu(window, nu))

    def g(m):
        return float(_profile(window, nu, m) - _am_sides(window, nu, nu_a, r_a, m))

    out = []
    for end in (lo, hi):
        pts = np.linspace(m0, end, 4 * _SCAN_POINTS + 1)
        vals = _profile(window, nu, pts) - _am_sides(window, nu, nu_a, r_a, pts)
        sign = np.sign(vals)
        idx = np.flatnonzero(sign[1:] * sign[:-1] < 0)
        if idx.size == 0:
            out.append(-np.inf if end < m0 else np.inf)
            continue
        k = idx[0]
        a, b = sorted((pts[k], pts[k + 1]))
        out.append(optimize.brentq(g, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps))
    return out


def _am_closed_form(window, nu, nu_a, r_a):
    # intersection frequencies of the Gaussian-window profiles, when they exist
    f0 = window.f0
    x = f0 * f0 * nu_a * nu_a
    disc = np.exp(x) / r_a**2 - 1
    if disc < 0:
        return None
    d = np.log(np.exp(x / 2) / r_a + np.sqrt(disc)) / (f0 * f0 * nu_a)
    return nu - d, nu + d


def am_overlap(window: WindowSpec, nu, nu_a, r_a):
    """Overlap η_a of the main tone with the AM side tones, and the crossings.

    η_a = ∫min[ĥ_ν, (r_a/2)(ĥ_{ν+ν_a}+ĥ_{ν−ν_a})]dμ over the side-tone mass.
    Missing crossings are returned as 0 (below) or inf (above) in ω.

    Returns:
        (eta_a, omega_x1, omega_x2)
    """
    if not 0 < nu_a < nu:
        raise ValueError("AM needs 0 < nu_a < nu")
    if not 0 < r_a <= 1:
        raise ValueError("AM depth r_a must lie in (0, 1]")
    mu = _quad_grid(window, (nu - nu_a, nu, nu + nu_a))
    side = lambda m: _am_sides(window, nu, nu_a, r_a, m)  # noqa: E731
    eta = _min_integral(lambda m: _profile(window, nu, m), side, mu) / _integrate(side(mu), mu)
    c1, c2 = _am_crossings(window, nu, nu_a, r_a)
    om1 = 0.0 if not np.isfinite(c1) else float(_from_mu(window, c1))
    om2 = np.inf if not np.isfinite(c2) else float(_from_mu(window, c2))
    if not window.is_wavelet and not np.isfinite(c1):
        om1 = -np.inf
    return float(eta), om1, om2


def am_regime_IV_approx(window: WindowSpec, nu_a, r_a, eps: float = REGIME_EPS) -> bool:
    """Closed-form IV condition for the Gaussian window: r_a ≤ e^{x²/2}/cosh[x(n_G(2ε)+x)], x = f0ν_a."""
    if window.kind != "gaussian":
        raise ValueError("the closed-form AM IV condition exists for the Gaussian window only")
    x = window.f0 * nu_a
    return bool(r_a <= np.exp(x * x / 2) / np.cosh(x * (n_gauss(2 * eps) + x)))


def classify_am(window: WindowSpec, nu, nu_a, r_a, eps: float = REGIME_EPS) -> RegimeReport:
    """Regime of an AM component.

    II needs the most-merged profile ĥ_ν + (r_a/2)(ĥ_{ν+ν_a}+ĥ_{ν−ν_a}) to keep
    two minima inside [ν−ν_a, ν+ν_a].
    """
    eta, om1, om2 = am_overlap(window, nu, nu_a, r_a)
    mu = _scan(window, nu - nu_a, nu + nu_a)
    merged = _profile(window, nu, mu) + _am_sides(window, nu, nu_a, r_a, mu)
    n_min = count_interior_minima(merged)
    regime = _label(eta, eps, n_min >= 2)
    cond = {"eta_le_eps": eta <= eps, "eta_ge_1-eps": eta >= 1 - eps, "merged_minima": n_min}
    if window.kind == "gaussian":
        cond["IV_approx"] = am_regime_IV_approx(window, nu_a, r_a, eps)
    return RegimeReport(regime, {"eta_a": eta}, [om1, om2], eps, "AM", None, cond)


# ---------------------------------------------------------------- FM


def _fm_profiles(window, nu, nu_b, coeffs, n_j, mu):
    # ĥ^(+) gathers the even Bessel orders, ĥ^(−) the odd ones with opposite signs
    plus = coeffs[0] * _profile(window, nu, mu)
    minus = np.zeros_like(plus)
    for n in range(1, n_j + 1):
        up = _profile(window, nu + n * nu_b, mu)
        down = _profile(window, nu - n * nu_b, mu)
        if n % 2 == 0:
            plus = plus + coeffs[n] * (up + down)
        else:
            minus = minus + coeffs[n] * (up - down)
    return plus, minus


def fm_measures(window: WindowSpec, nu, nu_b, r_b, eps_J: float = EPS_J, mu=None):
    """FM interference η_b with the even/odd Bessel profiles ĥ^(+), ĥ^(−).

    η_b = ∫min(ĥ^(+), |ĥ^(−)|)dμ / ∫|ĥ^(−)|dμ with orders up to n_J(r_b).
    With no significant side tones (n_J = 0) there is nothing to separate and
    η_b is 1.

    Args:
        mu: μ samples for the returned profiles; defaults to the quadrature grid.

    Returns:
        (eta_b, h_plus, h_minus, mu)
    """
    if nu <= 0 or nu_b <= 0 or r_b < 0:
        raise ValueError("FM needs nu > 0, nu_b > 0 and r_b >= 0")
    coeffs, n_j = bessel_expansion(r_b, eps_J)
    nus = [nu + n * nu_b for n in range(-n_j, n_j + 1)]
    grid = _quad_grid(window, nus)
    plus, minus = _fm_profiles(window, nu, nu_b, coeffs, n_j, grid)
    eta = 1.0
    if n_j > 0:
        fp = lambda m: _fm_profiles(window, nu, nu_b, coeffs, n_j, m)[0]  # noqa: E731
        fm = lambda m: _fm_profiles(window, nu, nu_b, coeffs, n_j, m)[1]  # noqa: E731
        zeros = _sign_roots(fm, grid)
        mass = _min_integral(lambda m: np.abs(fm(m)), lambda m: np.full(np.shape(m), np.inf), grid, zeros)
        if mass > 0:
            eta = _min_integral(fp, lambda m: np.abs(fm(m)), grid, zeros) / mass
    if mu is None:
        return float(eta), plus, minus, grid
    plus, minus = _fm_profiles(window, nu, nu_b, coeffs, n_j, np.asarray(mu, dtype=float))
    return float(eta), plus, minus, np.asarray(mu, dtype=float)


def classify_fm(window: WindowSpec, nu, nu_b, r_b, eps: float = REGIME_EPS, eps_J: float = EPS_J) -> RegimeReport:
    """Regime of an FM component.

    II needs both |ĥ^(+) ± ĥ^(−)| to keep 2n_J minima across the side-tone band.
    """
    _, n_j = bessel_expansion(r_b, eps_J)
    lo = nu - n_j * nu_b
    if window.is_wavelet and lo <= 0:
        raise ValueError("FM side tones reach non-positive frequencies; wavelet profiles undefined")
    eta, _, _, _ = fm_measures(window, nu, nu_b, r_b, eps_J)
    mu = _scan(window, lo, nu + n_j * nu_b) if n_j else _scan(window, nu, nu)
    _, plus, minus, _ = fm_measures(window, nu, nu_b, r_b, eps_J, mu=mu)
    n_sum = count_interior_minima(np.abs(plus + minus))
    n_diff = count_interior_minima(np.abs(plus - minus))
    separated = n_j > 0 and n_sum >= 2 * n_j and n_diff >= 2 * n_j
    regime = _label(eta, eps, separated)
    cond = {
        "eta_le_eps": eta <= eps,
        "eta_ge_1-eps": eta >= 1 - eps,
        "minima_plus": n_sum,
        "minima_minus": n_diff,
        "n_J": n_j,
    }
    return RegimeReport(regime, {"eta_b": eta}, [], eps, "FM", None, cond)
