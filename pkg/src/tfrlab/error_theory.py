"""Analytic predictions of ridge, direct and hybrid reconstruction errors.

Errors of a component s₀ = A₀cos φ₀ split into a theoretical part (present
even when s₀ is alone) and an interference part caused by the other
components s_m.  Ridge theory is a curvature expansion around the peak; the
direct method has no theoretical error, and its interference part treats each
component as a tone frozen at the current time.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .reconstruction import ErrorTriple, HybridRequired
from .signals import ComponentTrack
from .support import SupportCurve
from .windows import WindowSpec, cumulative_Q_between, window_ft

__all__ = [
    "ErrorPrediction",
    "truth_derivatives",
    "ridge_theoretical_errors",
    "ridge_interference_errors",
    "direct_interference_errors",
    "hybrid_interference_error",
    "predicted_errors",
]


@dataclass
class ErrorPrediction:
    """Predicted error time series; ``None`` marks a part not evaluated.

    ``caveat`` is set when the component's own TFR behaviour is not of type IV,
    where higher-order terms of the ridge expansion may matter.
    """

    t: np.ndarray
    dA_T: np.ndarray | None = None
    dphi_T: np.ndarray | None = None
    dnu_T: np.ndarray | None = None
    dA_I: np.ndarray | None = None
    dphi_I: np.ndarray | None = None
    dnu_I: np.ndarray | None = None
    P_sq: np.ndarray | float | None = None
    caveat: bool = False
    notes: dict = field(default_factory=dict)

    def total(self, name: str) -> np.ndarray:
        """Theoretical plus interference part of ``"A"``, ``"phi"`` or ``"nu"``."""
        parts = [getattr(self, f"d{name}_T"), getattr(self, f"d{name}_I")]
        parts = [p for p in parts if p is not None]
        if not parts:
            raise ValueError(f"no prediction for {name}")
        return np.sum(parts, axis=0)

    def merge(self, other: "ErrorPrediction") -> "ErrorPrediction":
        """Fill parts missing here from ``other``."""
        upd = {}
        for name in ("dA_T", "dphi_T", "dnu_T", "dA_I", "dphi_I", "dnu_I", "P_sq"):
            if getattr(self, name) is None and getattr(other, name) is not None:
                upd[name] = getattr(other, name)
        return replace(self, caveat=self.caveat or other.caveat, notes={**other.notes, **self.notes}, **upd)


def _central_diff(y, dt, order):
    # fourth-order stencils; two samples at each end cannot be formed
    out = np.full(y.shape, np.nan)
    if y.size < 5:
        return out
    if order == 1:
        out[2:-2] = (-y[4:] + 8 * y[3:-1] - 8 * y[1:-3] + y[:-4]) / (12 * dt)
    else:
        out[2:-2] = (-y[4:] + 16 * y[3:-1] - 30 * y[2:-2] + 16 * y[1:-3] - y[:-4]) / (12 * dt * dt)
    return out


def truth_derivatives(track: ComponentTrack) -> dict:
    """A', A'', ν', ν'' of a truth track.

    Exact arrays stored on the track are used when present; otherwise
    fourth-order central differences, NaN at the two samples of each end.
    """
    d = track.derivatives
    if all(k in d for k in ("dA", "d2A", "dnu", "d2nu")):
        return {k: np.asarray(d[k], dtype=float) for k in ("dA", "d2A", "dnu", "d2nu")}
    if track.t.size < 2:
        raise ValueError("need at least two samples to differentiate")
    dt = float(track.t[1] - track.t[0])
    return {
        "dA": _central_diff(track.A, dt, 1),
        "d2A": _central_diff(track.A, dt, 2),
        "dnu": _central_diff(track.nu, dt, 1),
        "d2nu": _central_diff(track.nu, dt, 2),
    }


def ridge_theoretical_errors(truth: ComponentTrack, window: WindowSpec, regime: str | None = None) -> ErrorPrediction:
    """Leading-order ridge errors of an isolated modulated component.

    ΔA_T = ½P²A'', Δφ_T = ½P²ν', Δν_T = P²(½ν'' + ν'A'/A) with P² taken at the
    instantaneous frequency.  Times with A = 0 have no Δν_T (NaN).

    Args:
        regime: behaviour of the component alone, if known; anything other
            than ``"IV"`` sets the ``caveat`` flag.
    """
    der = truth_derivatives(truth)
    P2 = window.p_squared() if not window.is_wavelet else window.p_squared(truth.nu)
    P2 = np.broadcast_to(np.asarray(P2, dtype=float), truth.t.shape)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(truth.A != 0, der["dA"] / truth.A, np.nan)
    dA = 0.5 * P2 * der["d2A"]
    dphi = 0.5 * P2 * der["dnu"]
    dnu = P2 * (0.5 * der["d2nu"] + ratio * der["dnu"])
    caveat = regime is not None and regime != "IV"
    return ErrorPrediction(truth.t, dA_T=dA, dphi_T=dphi, dnu_T=dnu, P_sq=P2.copy(), caveat=caveat)


def _check_axes(truth0: ComponentTrack, others, support=None):
    for m in others:
        if len(m) != len(truth0) or not np.allclose(m.t, truth0.t):
            raise ValueError("all tracks must share the time axis of the component of interest")
    if support is not None and (len(support.t) != len(truth0) or not np.allclose(support.t, truth0.t)):
        raise ValueError("support curve must share the time axis of the component of interest")


def ridge_interference_errors(truth0: ComponentTrack, others, window: WindowSpec) -> ErrorPrediction:
    """First-order ridge errors from the other components.

    Each component m contributes through its profile at the ridge,
    w_m = A_m ĥ_{ν_m}(ν₀)/ĥ_max, as w_m cos Δφ_m to ΔA, (w_m/A₀) sin Δφ_m to
    Δφ and (w_m/A₀)(ν_m − ν₀) cos Δφ_m to Δν, with Δφ_m = φ_m − φ₀.
    """
    others = list(others)
    _check_axes(truth0, others)
    n = len(truth0)
    dA, dphi, dnu = np.zeros(n), np.zeros(n), np.zeros(n)
    for m in others:
        w = m.A * _profile_at(window, m.nu, truth0.nu) / window.h_max
        dp = m.phi - truth0.phi
        dA += w * np.cos(dp)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = w / truth0.A
        dphi += rel * np.sin(dp)
        dnu += rel * (m.nu - truth0.nu) * np.cos(dp)
    return ErrorPrediction(truth0.t, dA_I=dA, dphi_I=dphi, dnu_I=dnu)


def _profile_at(window, nu, omega):
    nu = np.asarray(nu, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if window.is_wavelet:
        out = np.zeros(np.broadcast(nu, omega).shape)
        ok = np.broadcast_to(omega > 0, out.shape) & np.broadcast_to(nu > 0, out.shape)
        nb, ob = np.broadcast_arrays(nu, omega)
        out[ok] = window_ft(window, nb[ok], ob[ok])
        return out
    return window_ft(window, nu, omega)


@lru_cache(maxsize=32)
def _moment_table(window: WindowSpec):
    # cumulative ∫ k(v)·m(v) dv, with ω = ν + v (windows) or ω = ν e^{-v} (wavelets),
    # so that ∫ĥ_ν ω dμ over a band is ν·2C_h·Q̃ + (table difference) for windows
    # and ν·(table difference) for wavelets
    lo, hi = window._kernel_range
    v = np.linspace(lo, hi, 40001)
    k = window.kernel(v)
    weight = np.exp(-v) if window.is_wavelet else v
    cum = integrate.cumulative_simpson(k * weight, x=v, initial=0.0)
    return CubicSpline(v, cum, extrapolate=False), lo, hi, cum[-1]


def _moment_cdf(window, v):
    spline, lo, hi, total = _moment_table(window)
    v = np.asarray(v, dtype=float)
    out = np.where(v <= lo, 0.0, total)
    mid = (v > lo) & (v < hi)
    out = np.array(out, dtype=float)
    out[mid] = spline(v[mid])
    return out


def _band_first_moment(window: WindowSpec, nu, omega_lo, omega_hi):
    """∫ĥ_ν(ω) ω dμ(ω) over [omega_lo, omega_hi]."""
    nu = np.asarray(nu, dtype=float)
    if window.is_wavelet:
        with np.errstate(divide="ignore", invalid="ignore"):
            v_hi = np.log(nu / np.maximum(omega_lo, 0.0))
            v_lo = np.log(nu / omega_hi)
        return nu * (_moment_cdf(window, v_hi) - _moment_cdf(window, v_lo))
    mass = 2 * window.C_h * cumulative_Q_between(window, nu, omega_lo, omega_hi)
    return nu * mass + _moment_cdf(window, omega_hi - nu) - _moment_cdf(window, omega_lo - nu)


def _support_edges(truth0, support):
    if support is None:
        n = len(truth0)
        return np.full(n, -np.inf), np.full(n, np.inf)
    lo = np.where(support.gap, np.nan, support.omega_minus)
    hi = np.where(support.gap, np.nan, support.omega_plus)
    return lo, hi


def direct_interference_errors(
    truth0: ComponentTrack,
    others,
    support: SupportCurve | None,
    window: WindowSpec,
    frequency: bool = True,
) -> ErrorPrediction:
    """Direct-method errors when the support holds frozen-tone images of all components.

    With Q̃_j the share of component j's profile inside [ω₋, ω₊],
    Z = A₀Q̃₀ + Σ A_m Q̃_m e^{iΔφ_m} is the reconstructed A·e^{iΔφ}; hence
    ΔA_I = |Z| − A₀ and Δφ_I = arg Z.  The frequency follows from the matching
    first moments over the support divided by Z.

    Args:
        support: ``None`` means the whole frequency axis.
        frequency: evaluate Δν_I; must be ``False`` for windows without a
            finite D_h (use :func:`hybrid_interference_error` instead).

    Raises:
        HybridRequired: ``frequency=True`` with a Morlet-type wavelet.
    """
    if frequency and not window.D_h_finite:
        raise HybridRequired("direct frequency error needs a finite D_h; use hybrid_interference_error")
    others = list(others)
    _check_axes(truth0, others, support)
    lo, hi = _support_edges(truth0, support)
    q0 = cumulative_Q_between(window, truth0.nu, lo, hi)
    Z = truth0.A * q0 + 0j
    parts = []
    for m in others:
        e = np.exp(1j * (m.phi - truth0.phi))
        qm = cumulative_Q_between(window, m.nu, lo, hi)
        Z = Z + m.A * qm * e
        parts.append((m, e))
    dA = np.abs(Z) - truth0.A
    dphi = np.angle(Z)
    dnu = None
    if frequency:
        M = truth0.A * _band_first_moment(window, truth0.nu, lo, hi) + 0j
        for m, e in parts:
            M = M + m.A * _band_first_moment(window, m.nu, lo, hi) * e
        # C_h⁻¹/2 ∫X dμ = Z, and D_h⁻¹/2 ∫Xω dμ = M/(2D_h)
        with np.errstate(invalid="ignore", divide="ignore"):
            nu_rec = np.real((M / (2 * window.D_h)) / Z) - window.omega_bar
        dnu = nu_rec - truth0.nu
    return ErrorPrediction(truth0.t, dA_T=np.zeros(len(truth0)), dphi_T=np.zeros(len(truth0)),
                           dnu_T=np.zeros(len(truth0)), dA_I=dA, dphi_I=dphi, dnu_I=dnu)


def hybrid_interference_error(truth0: ComponentTrack, others, support: SupportCurve | None, window: WindowSpec,
                              ifm=None) -> np.ndarray:
    """Hybrid frequency error Σ (A_m/A₀)(ν_m − ν₀) Q̃_m cos Δφ_m.

    ``ifm`` is accepted for interface symmetry; the prediction uses the frozen
    tone model and does not read the computed map.
    """
    others = list(others)
    _check_axes(truth0, others, support)
    lo, hi = _support_edges(truth0, support)
    out = np.zeros(len(truth0))
    for m in others:
        qm = cumulative_Q_between(window, m.nu, lo, hi)
        with np.errstate(invalid="ignore", divide="ignore"):
            out += m.A / truth0.A * (m.nu - truth0.nu) * qm * np.cos(m.phi - truth0.phi)
    return out


def predicted_errors(pred: ErrorPrediction, truth: ComponentTrack, family: str = "WFT", exclude: int = 0) -> ErrorTriple:
    """Relative errors implied by predicted deviations, in the same norms as the measured ones."""
    keep = np.ones(len(truth), dtype=bool)
    if exclude:
        keep[:exclude] = False
        keep[len(keep) - exclude:] = False
    dA, dphi, dnu = pred.total("A"), pred.total("phi"), pred.total("nu")
    keep &= np.isfinite(dA) & np.isfinite(dphi) & np.isfinite(dnu) & ~truth.gap
    if not np.any(keep):
        raise ValueError("no valid samples to evaluate")
    eps_a = np.sqrt(np.mean(dA[keep] ** 2)) / np.sqrt(np.mean(truth.A[keep] ** 2))
    m = np.abs(np.mean(np.exp(1j * dphi[keep])))
    eps_phi = np.sqrt(max(0.0, 1 - m * m))
    rms = np.sqrt(np.mean(dnu[keep] ** 2))
    eps_f = rms / (2 * np.pi) if family.lstrip("S") == "WFT" else rms / np.mean(truth.nu[keep])
    return ErrorTriple(float(eps_a), float(eps_phi), float(eps_f))
