"""Windowed Fourier and wavelet transforms computed in the frequency domain.

For each analysis frequency ω_k the transform is the inverse FFT of
ŝ(ξ)·ĥ_ξ(ω_k) over positive ξ (negative frequencies zeroed, ξ = 0 halved),
so one forward FFT of the padded record is shared by all bins.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as sfft

from .signals import MultiTone, RealSignal, render
from .windows import WindowSpec, epsilon_support, window_ft

__all__ = [
    "FrequencyGrid",
    "TFRMatrix",
    "compute_tfr",
    "iter_tfr_chunks",
    "pad_signal",
    "pad_length",
    "resolve_pad",
    "analytic_multitone_tfr",
    "PADDING_MODES",
    "TFR_KINDS",
]

PADDING_MODES = ("zero", "reflection", "periodic", "exact")
TFR_KINDS = ("WFT", "WT", "SWFT", "SWT")
DEFAULT_DELTA_OMEGA = 2 * np.pi * 0.002
DEFAULT_VOICES = 256
PAD_EPS = 0.001
EXACT_PAD_FACTOR = 2

# complex entries per FFT batch; bounds the working memory of compute_tfr
_CHUNK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class FrequencyGrid:
    """Analysis frequencies in rad/s.

    ``scale="linear"`` spaces bins by ``step`` rad/s starting at ``omega_min``;
    ``scale="log"`` uses ``step`` voices per octave.  In both cases the bins are
    uniform in the reconstruction coordinate μ (ω or log ω).
    """

    scale: str
    omega_min: float
    omega_max: float
    step: float

    def __post_init__(self):
        if self.scale not in ("linear", "log"):
            raise ValueError("grid scale must be 'linear' or 'log'")
        if not self.omega_min < self.omega_max:
            raise ValueError("grid needs omega_min < omega_max")
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        if self.scale == "log" and self.omega_min <= 0:
            raise ValueError("logarithmic grid needs omega_min > 0")

    @classmethod
    def linear(cls, omega_min, omega_max, delta_omega=DEFAULT_DELTA_OMEGA):
        return cls("linear", float(omega_min), float(omega_max), float(delta_omega))

    @classmethod
    def log(cls, omega_min, omega_max, n_voices=DEFAULT_VOICES):
        return cls("log", float(omega_min), float(omega_max), float(n_voices))

    @classmethod
    def covering(cls, window: WindowSpec, nu_lo, nu_hi, step=None, eps=1e-10, anchor=None, omega_floor=None,
                 omega_ceiling=None, fs=None):
        """Grid spanning the ``eps``-support of every tone in [nu_lo, nu_hi].

        For linear grids ``anchor`` is placed exactly on a bin, which keeps
        symmetric profiles symmetric on the grid.  ``omega_ceiling`` is
        an explicit upper cap.  Passing ``fs`` also caps the grid where the
        analysing band ``eps``-support would cross the Nyquist frequency π·fs;
        above that the band is truncated and its sinc-like time tails leak
        the whole record into the column.
        """
        xi1, xi2, _, _ = epsilon_support(window, eps)
        if fs is not None:
            band = window.omega_psi * np.pi * fs / xi2 if window.is_wavelet else np.pi * fs - xi2
            omega_ceiling = band if omega_ceiling is None else min(omega_ceiling, band)
        if window.is_wavelet:
            lo = window.omega_psi * nu_lo / xi2
            hi = window.omega_psi * nu_hi / xi1
            if omega_floor is not None:
                lo = max(lo, omega_floor)
            if omega_ceiling is not None:
                hi = min(hi, omega_ceiling)
            return cls.log(lo, hi, DEFAULT_VOICES if step is None else step)
        step = DEFAULT_DELTA_OMEGA if step is None else float(step)
        lo, hi = nu_lo + xi1, nu_hi + xi2
        if omega_floor is not None:
            lo = max(lo, omega_floor)
        if anchor is not None:
            lo = anchor - np.ceil((anchor - lo) / step) * step
            if omega_floor is not None and lo < omega_floor:
                lo += step
            hi = anchor + np.ceil((hi - anchor) / step) * step
        if omega_ceiling is not None:
            hi = min(hi, omega_ceiling)
        return cls.linear(lo, hi, step)

    @cached_property
    def n_bins(self) -> int:
        if self.scale == "linear":
            return int(np.floor((self.omega_max - self.omega_min) / self.step + 1e-9)) + 1
        return int(np.floor(np.log2(self.omega_max / self.omega_min) * self.step + 1e-9)) + 1

    @cached_property
    def freqs(self) -> np.ndarray:
        k = np.arange(self.n_bins)
        if self.scale == "linear":
            return self.omega_min + k * self.step
        return self.omega_min * 2.0 ** (k / self.step)

    @property
    def d_mu(self) -> float:
        """Spacing in the reconstruction coordinate (rad/s or natural-log units)."""
        return self.step if self.scale == "linear" else np.log(2.0) / self.step

    @cached_property
    def mu(self) -> np.ndarray:
        return self.freqs if self.scale == "linear" else np.log(self.freqs)

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoidal weights in μ; also the bin measure used for synchrosqueezing."""
        w = np.full(self.n_bins, self.d_mu)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @cached_property
    def edges(self) -> np.ndarray:
        """Bin boundaries in ω, halfway between centres in μ."""
        mu = self.mu
        half = self.d_mu / 2
        e = np.concatenate([[mu[0] - half], (mu[:-1] + mu[1:]) / 2, [mu[-1] + half]])
        return e if self.scale == "linear" else np.exp(e)

    def bin_of(self, omega) -> np.ndarray:
        """Index of the bin containing ``omega`` (-1 when outside the grid)."""
        idx = np.searchsorted(self.edges, omega, side="right") - 1
        return np.where((idx >= 0) & (idx < self.n_bins), idx, -1)

    def to_dict(self) -> dict:
        return {"scale": self.scale, "omega_min": self.omega_min, "omega_max": self.omega_max, "step": self.step}


@dataclass
class TFRMatrix:
    """Complex TFR on (frequency bin × time sample).

    ``dvalues`` holds ∂_t H when it was requested at computation time.
    """

    values: np.ndarray
    grid: FrequencyGrid
    times: np.ndarray
    window: WindowSpec
    kind: str
    fs: float
    dvalues: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in TFR_KINDS:
            raise ValueError(f"unknown TFR kind {self.kind!r}")
        wavelet_kind = self.kind in ("WT", "SWT")
        if wavelet_kind != (self.grid.scale == "log"):
            raise ValueError(f"{self.kind} requires a {'log' if wavelet_kind else 'linear'} frequency grid")
        if self.values.shape != (self.grid.n_bins, self.times.size):
            raise ValueError("TFR values do not match the grid and time axis")

    @property
    def freqs(self) -> np.ndarray:
        return self.grid.freqs

    @property
    def shape(self):
        return self.values.shape

    @property
    def is_squeezed(self) -> bool:
        return self.kind in ("SWFT", "SWT")

    @cached_property
    def amplitude(self) -> np.ndarray:
        return np.abs(self.values)


def pad_length(window: WindowSpec, fs: float, omega_min: float | None = None, eps: float = PAD_EPS) -> int:
    """Samples of padding per side: the window's time ε-support.

    Wavelets stretch in time by ω_ψ/ω, so the lowest analysed frequency sets the length.
    """
    _, _, tau1, tau2 = epsilon_support(window, eps)
    half = max(abs(tau1), abs(tau2))
    if window.is_wavelet:
        if omega_min is None or omega_min <= 0:
            raise ValueError("wavelet padding needs the lowest analysed frequency")
        half *= window.omega_psi / omega_min
    return int(np.ceil(half * fs))


def resolve_pad(window: WindowSpec, fs: float, grid: FrequencyGrid, padding: str, pad_len=None) -> int:
    """Padding per side actually used by :func:`compute_tfr`.

    Exact continuation costs nothing extra in accuracy, so it is doubled; this
    pushes the circular-FFT wrap point beyond the reach of the window tails.
    """
    if pad_len is not None:
        return int(pad_len)
    base = pad_length(window, fs, grid.omega_min)
    return EXACT_PAD_FACTOR * base if padding == "exact" else base


def pad_signal(signal: RealSignal, mode: str, pad_len: int) -> RealSignal:
    """Extend a record by ``pad_len`` samples on each side.

    ``exact`` regenerates the true continuation from the record's signal spec.
    """
    if pad_len < 0:
        raise ValueError("pad_len must be non-negative")
    if mode not in PADDING_MODES:
        raise ValueError(f"unknown padding mode {mode!r}; expected one of {PADDING_MODES}")
    if pad_len == 0:
        return signal
    x = signal.samples
    if mode == "exact":
        if signal.spec is None:
            raise ValueError("exact padding needs the generating signal spec")
        n0 = int(round(signal.t0 * signal.fs))
        n = np.arange(n0 - pad_len, n0 + x.size + pad_len)
        out = render(signal.spec, signal.fs, n, x.size, signal.call_index)
        # keep the record bit-identical; only the extensions are new
        out[pad_len:pad_len + x.size] = x
    elif mode == "zero":
        out = np.pad(x, pad_len)
    elif mode == "reflection":
        out = np.pad(x, pad_len, mode="reflect") if x.size > 1 else np.pad(x, pad_len, mode="edge")
    else:
        out = np.pad(x, pad_len, mode="wrap")
    return RealSignal(out, signal.fs, signal.t0 - pad_len / signal.fs)


def _kernel_rows(window: WindowSpec, omega, xi):
    # ĥ_ξ(ω) for a block of analysis frequencies (rows) and signal frequencies (columns)
    if not window.is_wavelet:
        return window.kernel(omega[:, None] - xi[None, :])
    with np.errstate(divide="ignore"):
        v = np.log(xi)[None, :] - np.log(omega)[:, None]
    return window.kernel(v)


def _xi_band(window: WindowSpec, omega_lo, omega_hi):
    lo, hi = window._kernel_range
    if window.is_wavelet:
        return omega_lo * np.exp(lo), omega_hi * np.exp(hi)
    return omega_lo - hi, omega_hi - lo


def _prepare(signal: RealSignal, window: WindowSpec, grid: FrequencyGrid, padding: str, pad_len):
    if len(signal) < 2:
        raise ValueError("signal must contain at least two samples")
    if window.is_wavelet != (grid.scale == "log"):
        raise ValueError(f"{window.kind} needs a {'log' if window.is_wavelet else 'linear'} frequency grid")
    pad_len = resolve_pad(window, signal.fs, grid, padding, pad_len)
    padded = pad_signal(signal, padding, pad_len)
    n_fft = sfft.next_fast_len(len(padded), real=True)
    spectrum = sfft.rfft(padded.samples, n_fft)
    n_pos = n_fft // 2 + 1
    xi = 2 * np.pi * signal.fs * np.arange(n_pos) / n_fft
    spectrum[0] *= 0.5
    if n_fft % 2 == 0:
        # the Nyquist bin is shared with negative frequencies
        spectrum[-1] *= 0.5
    return spectrum, xi, n_fft, pad_len


def iter_tfr_chunks(signal, window, grid, padding="zero", pad_len=None, derivative=False, decimate=1, workers=None):
    """Yield ``(bin_slice, H_block, dH_block)`` over groups of frequency bins.

    Lets callers reduce a large TFR without holding it in memory.
    ``decimate`` keeps every n-th time sample.
    """
    spectrum, xi, n_fft, pad_len = _prepare(signal, window, grid, padding, pad_len)
    n = len(signal)
    keep = slice(pad_len, pad_len + n, decimate)
    omegas = grid.freqs
    chunk = max(1, _CHUNK_ELEMENTS // n_fft)
    for start in range(0, omegas.size, chunk):
        sl = slice(start, min(start + chunk, omegas.size))
        om = omegas[sl]
        lo, hi = _xi_band(window, om[0], om[-1])
        j0 = max(int(np.floor(lo / xi[1])), 0) if xi.size > 1 else 0
        j1 = min(int(np.ceil(hi / xi[1])) + 1, xi.size)
        block = np.zeros((om.size, n_fft), dtype=complex)
        dblock = None
        if j1 > j0:
            prod = _kernel_rows(window, om, xi[j0:j1]) * spectrum[None, j0:j1]
            block[:, j0:j1] = prod
            if derivative:
                dblock = np.zeros_like(block)
                dblock[:, j0:j1] = 1j * xi[None, j0:j1] * prod
        H = sfft.ifft(block, axis=1, workers=workers)[:, keep]
        dH = None
        if derivative:
            dH = np.zeros_like(H) if dblock is None else sfft.ifft(dblock, axis=1, workers=workers)[:, keep]
        yield sl, H, dH


def compute_tfr(
    signal: RealSignal,
    window: WindowSpec,
    grid: FrequencyGrid,
    padding: str = "zero",
    pad_len: int | None = None,
    derivative: bool = False,
    decimate: int = 1,
    workers: int | None = None,
) -> TFRMatrix:
    """WFT (Gaussian window) or WT (wavelets) of ``signal`` on ``grid``.

    Args:
        padding: one of ``zero``, ``reflection``, ``periodic``, ``exact``.
        pad_len: samples per side; defaults to the window τ-support at
            ε = 0.001 (twice that for ``exact``).
        derivative: also compute ∂_t H exactly (spectral iξ multiplier).
        decimate: keep every n-th output time sample.
        workers: FFT worker threads, forwarded to scipy.fft.
    """
    n_time = len(range(0, len(signal), decimate))
    values = np.empty((grid.n_bins, n_time), dtype=complex)
    dvalues = np.empty_like(values) if derivative else None
    for sl, H, dH in iter_tfr_chunks(signal, window, grid, padding, pad_len, derivative, decimate, workers):
        values[sl] = H
        if derivative:
            dvalues[sl] = dH
    used_pad = resolve_pad(window, signal.fs, grid, padding, pad_len)
    kind = "WT" if window.is_wavelet else "WFT"
    times = signal.times[::decimate]
    meta = {"padding": padding, "pad_len": int(used_pad), "decimate": int(decimate)}
    return TFRMatrix(values, grid, times, window, kind, signal.fs / decimate, dvalues, meta)


def analytic_multitone_tfr(tones: MultiTone, window: WindowSpec, omega, t):
    """Closed-form TFR of a sum of tones on the ``omega`` × ``t`` mesh.

    Returns:
        (H, |H|², ν_H) each of shape (len(omega), len(t)); ν_H is NaN where |H| = 0.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))[:, None]
    t = np.atleast_1d(np.asarray(t, dtype=float))[None, :]
    H = np.zeros((omega.shape[0], t.shape[1]), dtype=complex)
    weights = []
    phases = []
    for tone in tones.tones:
        h = window_ft(window, tone.nu, omega)
        phase = tone.nu * t + tone.phi
        H = H + 0.5 * tone.a * h * np.exp(1j * phase)
        weights.append(tone.a * h)
        phases.append(phase)
    # |H|² and ν_H as sums over tone pairs with interference cosines
    num = np.zeros(H.shape)
    den = np.zeros(H.shape)
    nus = [tone.nu for tone in tones.tones]
    for n in range(len(weights)):
        den = den + weights[n] ** 2
        num = num + weights[n] ** 2 * nus[n]
        for m in range(n + 1, len(weights)):
            cross = weights[n] * weights[m] * np.cos(phases[n] - phases[m])
            den = den + 2 * cross
            num = num + (nus[n] + nus[m]) * cross
    power = den / 4
    with np.errstate(invalid="ignore", divide="ignore"):
        nu_H = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)
    return H, power, nu_H
