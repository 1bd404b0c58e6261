"""Window and wavelet shapes in the frequency domain, and their derived constants.

Every transform in the package is described by a kernel ĥ_ν(ω), the
frequency-domain amplitude profile that a unit tone at ν leaves in the TFR.
For windowed Fourier transforms (WFT) ĥ_ν(ω) = ĝ(ω − ν); for wavelet
transforms (WT) ĥ_ν(ω) = ψ̂(ω_ψ ν / ω).  Both are peak-normalized to 1.

Internally every kind is reduced to a one-dimensional profile ``k(v)`` over a
coordinate in which the reconstruction measure is uniform: ``v = ξ`` for
windows and ``v = log(ξ / ω_ψ)`` for wavelets.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as sfft
from scipy import integrate, optimize
from scipy.interpolate import CubicSpline
from scipy.special import expm1
from scipy.stats import norm

__all__ = [
    "WINDOW_KINDS",
    "WindowSpec",
    "NumericalError",
    "window_ft",
    "epsilon_support",
    "admissibility_constants",
    "cumulative_Q",
    "n_gauss",
]

WINDOW_KINDS = ("gaussian", "morlet", "lognormal")
_FAMILY = {"gaussian": "WFT", "morlet": "WT", "lognormal": "WT"}

# kernel values below this fraction of the peak are treated as zero
_TAIL_CUTOFF = 1e-16
_QUAD_RTOL = 1e-10


class NumericalError(RuntimeError):
    """Raised when a quadrature or root search fails to converge."""


def n_gauss(eps):
    """Number of standard deviations holding the central ``1 - eps`` of a normal law."""
    eps = np.asarray(eps, dtype=float)
    if np.any((eps <= 0) | (eps > 1)):
        raise ValueError("eps must lie in (0, 1]")
    out = norm.ppf(1.0 - eps / 2.0)
    return float(out) if out.ndim == 0 else out


def _morlet_raw(xi, a):
    # e^{-(ξ-a)²/2} - e^{-(ξ²+a²)/2}, written to stay accurate when aξ is small
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    pos = xi > 0
    x = xi[pos]
    out[pos] = np.exp(-((x - a) ** 2) / 2.0) * -expm1(-a * x)
    return out


@dataclass(frozen=True)
class WindowSpec:
    """Window or wavelet kind together with its resolution parameter.

    Args:
        kind: one of ``"gaussian"`` (WFT), ``"morlet"`` or ``"lognormal"`` (WT).
        f0: resolution parameter, larger values give finer frequency resolution.

    Derived constants (``C_h``, ``D_h``, ``omega_bar``, ``h_max``, ``omega_psi``)
    are computed lazily once and cached on the instance.
    """

    kind: str
    f0: float

    def __post_init__(self):
        if self.kind not in WINDOW_KINDS:
            raise ValueError(f"unknown window kind {self.kind!r}; expected one of {WINDOW_KINDS}")
        f0 = float(self.f0)
        if not np.isfinite(f0) or f0 <= 0:
            raise ValueError("f0 must be a positive finite number")
        object.__setattr__(self, "f0", f0)

    @property
    def family(self) -> str:
        """``"WFT"`` for windows, ``"WT"`` for wavelets."""
        return _FAMILY[self.kind]

    @property
    def is_wavelet(self) -> bool:
        return self.family == "WT"

    @cached_property
    def _morlet_scale(self):
        a = 2 * np.pi * self.f0
        res = optimize.minimize_scalar(
            lambda x: -_morlet_raw(np.array([x]), a)[0],
            bounds=(1e-9, a + 10.0),
            method="bounded",
            options={"xatol": 1e-13},
        )
        return float(res.x), float(-res.fun)

    @property
    def omega_psi(self) -> float | None:
        """Peak frequency of the wavelet FT (None for windows)."""
        if self.kind == "morlet":
            return self._morlet_scale[0]
        if self.kind == "lognormal":
            return 1.0
        return None

    def psi_hat(self, xi):
        """Peak-normalized window FT ĝ(ξ) or wavelet FT ψ̂(ξ)."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * (self.f0 * xi) ** 2)
        if self.kind == "lognormal":
            out = np.zeros_like(xi)
            pos = xi > 0
            out[pos] = np.exp(-0.5 * (2 * np.pi * self.f0 * np.log(xi[pos])) ** 2)
            return out
        peak = self._morlet_scale[1]
        return _morlet_raw(xi, 2 * np.pi * self.f0) / peak

    def kernel(self, v):
        """Profile in the uniform-measure coordinate (ξ for windows, log(ξ/ω_ψ) for wavelets)."""
        v = np.asarray(v, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * (self.f0 * v) ** 2)
        if self.kind == "lognormal":
            return np.exp(-0.5 * (2 * np.pi * self.f0 * v) ** 2)
        with np.errstate(over="ignore"):
            xi = self.omega_psi * np.exp(np.clip(v, -700, 700))
        return self.psi_hat(xi)

    @cached_property
    def _kernel_range(self):
        lo = self._tail_edge(-1.0)
        hi = self._tail_edge(+1.0)
        return lo, hi

    def _tail_edge(self, direction):
        # walk outwards by doubling, then pin the cutoff crossing by bisection
        v = 0.05 / self.f0
        while self.kernel(direction * v) > _TAIL_CUTOFF:
            v *= 2.0
            if v > 1e6:
                raise NumericalError(f"kernel tail of {self} does not decay")
        log_cut = np.log(_TAIL_CUTOFF)
        edge = optimize.brentq(
            lambda x: np.log(max(float(self.kernel(direction * x)), 1e-300)) - log_cut, 0.0, v, xtol=1e-12 * v
        )
        return direction * edge

    def _quad(self, fn):
        lo, hi = self._kernel_range
        val, err = integrate.quad(fn, lo, hi, points=[0.0], epsrel=_QUAD_RTOL, epsabs=0.0, limit=500)
        if not np.isfinite(val) or err > 1e-8 * max(abs(val), 1e-300):
            raise NumericalError(f"quadrature for {self} did not converge (value={val}, err={err})")
        return val

    @cached_property
    def C_h(self) -> float:
        """Reconstruction constant ½∫ĥ_ν(ω)dμ(ω)."""
        return 0.5 * self._quad(lambda v: float(self.kernel(v)))

    @cached_property
    def D_h(self) -> float:
        """Frequency-reconstruction constant; ``inf`` when the defining integral diverges."""
        if not self.is_wavelet:
            return self.C_h
        # ½∫ψ̂(ξ)dξ/ξ² · ω_ψ becomes ½∫k(v)e^{-v}dv in the log coordinate.  The
        # Morlet admissibility term leaves ψ̂(ξ) ≈ a·e^{-a²/2}·ξ near zero, so the
        # integrand tends to a positive constant and the integral diverges.
        if self.kind == "morlet":
            return float("inf")
        lo, hi = self._kernel_range
        val, err = integrate.quad(
            lambda v: float(self.kernel(v)) * np.exp(-v), lo, hi, points=[0.0], epsrel=_QUAD_RTOL, limit=500
        )
        return 0.5 * val

    @property
    def D_h_finite(self) -> bool:
        return bool(np.isfinite(self.D_h))

    @cached_property
    def omega_bar(self) -> float:
        """Mean frequency offset of the window FT (zero for wavelets by convention)."""
        if self.is_wavelet:
            return 0.0
        if self.kind == "gaussian":
            return 0.0
        return 0.5 / self.C_h * self._quad(lambda v: v * float(self.kernel(v)))

    @property
    def h_max(self) -> float:
        """Peak of ĥ; 1 under the adopted peak normalization."""
        return 1.0

    @cached_property
    def _cumulative_table(self):
        # dense cumulative of k(v)/(2C_h), used where no closed form exists
        lo, hi = self._kernel_range
        v = np.linspace(lo, hi, 40001)
        k = self.kernel(v)
        cum = integrate.cumulative_simpson(k, x=v, initial=0.0)
        cum /= cum[-1]
        return CubicSpline(v, cum, extrapolate=False), lo, hi

    def cumulative_kernel(self, v):
        """Normalized cumulative mass K(v) of the profile, from 0 to 1."""
        v = np.asarray(v, dtype=float)
        if self.kind == "gaussian":
            return norm.cdf(self.f0 * v)
        if self.kind == "lognormal":
            return norm.cdf(2 * np.pi * self.f0 * v)
        spline, lo, hi = self._cumulative_table
        out = np.where(v <= lo, 0.0, np.where(v >= hi, 1.0, 0.0))
        mid = (v > lo) & (v < hi)
        if np.any(mid):
            out = np.array(out, dtype=float)
            out[mid] = np.clip(spline(v[mid]), 0.0, 1.0)
        return out

    def _kernel_quantile(self, prob):
        if self.kind == "gaussian":
            return float(norm.ppf(prob) / self.f0)
        if self.kind == "lognormal":
            return float(norm.ppf(prob) / (2 * np.pi * self.f0))
        lo, hi = self._kernel_range
        return optimize.brentq(lambda x: float(self.cumulative_kernel(np.array([x]))[0]) - prob, lo, hi, xtol=1e-13)

    def p_squared(self, omega=None):
        """Curvature factor P² of ĥ at its peak, used by the ridge error expansion.

        Constant ``f0²`` for the Gaussian window; ``(ω_ψ/ω)² · (-ψ̂''(ω_ψ))`` for wavelets.
        """
        if self.kind == "gaussian":
            return self.f0**2
        if omega is None:
            raise ValueError("wavelet P² depends on the frequency; pass omega")
        omega = np.asarray(omega, dtype=float)
        if self.kind == "lognormal":
            curv = (2 * np.pi * self.f0) ** 2
        else:
            a = 2 * np.pi * self.f0
            x = self.omega_psi
            second = ((x - a) ** 2 - 1) * np.exp(-((x - a) ** 2) / 2) - (x * x - 1) * np.exp(-(x * x + a * a) / 2)
            curv = -second / self._morlet_scale[1]
        return curv * (self.omega_psi / omega) ** 2

    @cached_property
    def _time_profile(self):
        """Sampled |g(t)| or |ψ(t)| from the FT by zero-padded FFT."""
        lo, hi = self._kernel_range
        if self.is_wavelet:
            xa, xb = 0.0, self.omega_psi * np.exp(hi)
        else:
            xa, xb = lo, hi
        width = xb - xa
        dxi = width / 2048
        m = 1 << 17
        xi = xa + dxi * np.arange(m)
        spec = np.where(xi <= xb, self.psi_hat(xi), 0.0)
        # g(t_n) = (dξ/2π) Σ_j ĝ(ξ_j) e^{iξ_j t_n}; the e^{iξ_a t} factor drops out of |g|
        g = sfft.ifft(spec) * m * dxi / (2 * np.pi)
        g = np.abs(sfft.fftshift(g))
        t = (np.arange(m) - m // 2) * (2 * np.pi / (m * dxi))
        return t, g

    def _time_quantiles(self, eps):
        if self.kind == "gaussian":
            n = n_gauss(eps)
            return -n * self.f0, n * self.f0
        t, g = self._time_profile
        cum = integrate.cumulative_trapezoid(g, t, initial=0.0)
        cum /= cum[-1]
        return float(np.interp(eps / 2, cum, t)), float(np.interp(1 - eps / 2, cum, t))

    def __hash__(self):
        return hash((self.kind, self.f0))

    def __eq__(self, other):
        return isinstance(other, WindowSpec) and (self.kind, self.f0) == (other.kind, other.f0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "f0": self.f0}


def window_ft(spec: WindowSpec, nu, omega):
    """Evaluate ĥ_ν(ω) for a tone at ``nu`` seen at analysis frequency ``omega`` (rad/s).

    Raises:
        ValueError: for wavelets when any ``omega`` is non-positive.
    """
    nu = np.asarray(nu, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if not spec.is_wavelet:
        return spec.kernel(omega - nu)
    if np.any(omega <= 0):
        raise ValueError("wavelet transforms are defined for positive analysis frequencies only")
    nu_b, om_b = np.broadcast_arrays(nu, omega)
    out = np.zeros(nu_b.shape)
    pos = nu_b > 0
    out[pos] = spec.kernel(np.log(nu_b[pos] / om_b[pos]))
    return out


def epsilon_support(spec: WindowSpec, eps: float):
    """Frequency and time intervals holding the central ``1 - eps`` of the window mass.

    Equal ``eps/2`` tails are cut on each side.  Frequency mass is measured in the
    reconstruction measure (dξ for windows, dlog ξ for wavelets).

    Returns:
        (xi1, xi2, tau1, tau2); for wavelets ξ is the argument of ψ̂.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    v1 = spec._kernel_quantile(eps / 2)
    v2 = spec._kernel_quantile(1 - eps / 2)
    if spec.is_wavelet:
        xi1, xi2 = spec.omega_psi * np.exp(v1), spec.omega_psi * np.exp(v2)
    else:
        xi1, xi2 = v1, v2
    tau1, tau2 = spec._time_quantiles(eps)
    return float(xi1), float(xi2), float(tau1), float(tau2)


def admissibility_constants(spec: WindowSpec):
    """Return ``(C_h, D_h, omega_bar, h_max)``; ``D_h`` is ``inf`` for Morlet."""
    return spec.C_h, spec.D_h, spec.omega_bar, spec.h_max


def cumulative_Q(spec: WindowSpec, nu, omega):
    """Fraction of a unit tone's TFR mass (at ``nu``) lying below ``omega``."""
    nu = np.asarray(nu, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if not spec.is_wavelet:
        return spec.cumulative_kernel(omega - nu)
    with np.errstate(divide="ignore"):
        v = np.log(nu) - np.log(np.where(omega > 0, omega, 0.0))
    return 1.0 - spec.cumulative_kernel(v)


def cumulative_Q_between(spec: WindowSpec, nu, omega1, omega2):
    """Share of the tone's mass between ``omega1`` and ``omega2``."""
    return cumulative_Q(spec, nu, omega2) - cumulative_Q(spec, nu, omega1)
