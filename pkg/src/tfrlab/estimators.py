"""scikit-learn style wrappers around the functional API.

Each estimator takes raw records as rows of ``X`` (shape ``(n_records,
n_samples)``, or a single 1-D record) sampled at ``fs`` Hz.  Frequencies are
given in Hz at this level and converted to rad/s internally.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .optimize import optimize_f0
from .reconstruction import adaptive_select, direct_reconstruct, ridge_reconstruct
from .signals import RealSignal
from .support import extract_tfs
from .synchrosqueeze import inst_freq_map
from .transform import DEFAULT_DELTA_OMEGA, DEFAULT_VOICES, FrequencyGrid, TFRMatrix, compute_tfr
from .windows import WindowSpec

__all__ = ["TFRTransformer", "ComponentReconstructor", "F0Optimizer"]


def _records(X, fs):
    if isinstance(X, RealSignal):
        return [X]
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError("X must be a 1-D record or a 2-D array of records")
    return [RealSignal(row, fs) for row in arr]


def _grid(window: WindowSpec, fmin_hz, fmax_hz, fs, n_voices, delta_hz):
    fmax_hz = fs / 2 if fmax_hz is None else fmax_hz
    if window.is_wavelet:
        lo = 2 * np.pi * (fmin_hz if fmin_hz else fs / 1000)
        return FrequencyGrid.log(lo, 2 * np.pi * fmax_hz, n_voices)
    step = DEFAULT_DELTA_OMEGA if delta_hz is None else 2 * np.pi * delta_hz
    return FrequencyGrid.linear(2 * np.pi * (fmin_hz or 0.0), 2 * np.pi * fmax_hz, step)


class _TFRParams(BaseEstimator):
    def _window(self, f0=None):
        return WindowSpec(self.window, self.f0 if f0 is None else f0)

    def _make_grid(self, window):
        return _grid(window, self.fmin, self.fmax, self.fs, self.n_voices, self.delta_f)

    def _tfr(self, sig, window, derivative=False) -> TFRMatrix:
        return compute_tfr(sig, window, self.grid_, self.padding, derivative=derivative)


class TFRTransformer(_TFRParams, TransformerMixin):
    """WFT/WT of each record.

    Args:
        window: ``"gaussian"``, ``"morlet"`` or ``"lognormal"``.
        f0: resolution parameter.
        fs: sampling rate in Hz.
        fmin, fmax: analysed band in Hz (``fmax`` defaults to Nyquist).
        delta_f: linear bin spacing in Hz (WFT).
        n_voices: voices per octave (WT).
        padding: edge handling passed to :func:`~tfrlab.transform.compute_tfr`.
        output: ``"amplitude"`` for |H| or ``"complex"`` for H.

    ``transform`` returns an array of shape ``(n_records, n_freq, n_time)``;
    ``freqs_`` holds the bin frequencies in rad/s.
    """

    def __init__(self, window="gaussian", f0=1.0, fs=50.0, fmin=None, fmax=None, delta_f=None,
                 n_voices=DEFAULT_VOICES, padding="reflection", output="amplitude"):
        self.window = window
        self.f0 = f0
        self.fs = fs
        self.fmin = fmin
        self.fmax = fmax
        self.delta_f = delta_f
        self.n_voices = n_voices
        self.padding = padding
        self.output = output

    def fit(self, X=None, y=None):
        self.window_ = self._window()
        self.grid_ = self._make_grid(self.window_)
        self.freqs_ = self.grid_.freqs
        return self

    def transform_tfr(self, X) -> list[TFRMatrix]:
        check_is_fitted(self, "grid_")
        return [self._tfr(sig, self.window_) for sig in _records(X, self.fs)]

    def transform(self, X):
        if self.output not in ("amplitude", "complex"):
            raise ValueError("output must be 'amplitude' or 'complex'")
        tfrs = self.transform_tfr(X)
        key = "amplitude" if self.output == "amplitude" else "values"
        return np.stack([getattr(t, key) for t in tfrs])


class ComponentReconstructor(_TFRParams, TransformerMixin):
    """Extract one component per record and reconstruct A, φ, ν.

    Args:
        method: ``"direct"``, ``"ridge"`` or ``"adaptive"``.
        scheme: ``"maximum"`` or ``"frequency"`` peak selection.
        ref_freq: reference frequency in Hz for the frequency-based scheme.

    ``transform`` returns ``(n_records, 3, n_time)`` with rows A, φ (unwrapped)
    and ν (rad/s); ``tracks_`` keeps the :class:`ComponentTrack` objects of the
    last call and ``choices_`` the adaptive decisions.
    """

    def __init__(self, window="gaussian", f0=1.0, fs=50.0, fmin=None, fmax=None, delta_f=None,
                 n_voices=DEFAULT_VOICES, padding="reflection", method="direct", scheme="maximum",
                 ref_freq=None):
        self.window = window
        self.f0 = f0
        self.fs = fs
        self.fmin = fmin
        self.fmax = fmax
        self.delta_f = delta_f
        self.n_voices = n_voices
        self.padding = padding
        self.method = method
        self.scheme = scheme
        self.ref_freq = ref_freq

    def fit(self, X=None, y=None):
        if self.method not in ("direct", "ridge", "adaptive"):
            raise ValueError("method must be 'direct', 'ridge' or 'adaptive'")
        self.window_ = self._window()
        self.grid_ = self._make_grid(self.window_)
        return self

    def _one(self, sig):
        hybrid = not self.window_.D_h_finite and self.method != "ridge"
        tfr = self._tfr(sig, self.window_, derivative=hybrid)
        ref = None if self.ref_freq is None else 2 * np.pi * self.ref_freq
        curve = extract_tfs(tfr, self.scheme, ref)
        ifm = inst_freq_map(tfr) if hybrid else None
        if self.method == "ridge":
            return ridge_reconstruct(tfr, curve), None
        if self.method == "direct":
            return direct_reconstruct(tfr, curve, ifm), None
        choice = adaptive_select(tfr, curve, ifm=ifm)
        return choice.track, choice

    def transform(self, X):
        check_is_fitted(self, "grid_")
        out = [self._one(sig) for sig in _records(X, self.fs)]
        self.tracks_ = [t for t, _ in out]
        self.choices_ = [c for _, c in out]
        return np.stack([np.vstack([t.A, t.phi, t.nu]) for t in self.tracks_])


class F0Optimizer(_TFRParams, TransformerMixin):
    """Pick f0 by minimizing F_{p,q} on the first record, then transform with it.

    Attributes set by ``fit``: ``f0_`` and ``result_`` (an
    :class:`~tfrlab.optimize.F0SearchResult`).
    """

    def __init__(self, window="gaussian", p=1.0, q=2.0, fs=50.0, fmin=None, fmax=None, delta_f=None,
                 n_voices=DEFAULT_VOICES, padding="reflection", n_tilde_v=2, search_range=None, jobs=1):
        self.window = window
        self.p = p
        self.q = q
        self.fs = fs
        self.fmin = fmin
        self.fmax = fmax
        self.delta_f = delta_f
        self.n_voices = n_voices
        self.padding = padding
        self.n_tilde_v = n_tilde_v
        self.search_range = search_range
        self.jobs = jobs

    def fit(self, X, y=None):
        sig = _records(X, self.fs)[0]
        probe = WindowSpec(self.window, 1.0)
        self.grid_ = self._make_grid(probe)
        self.result_ = optimize_f0(sig, self.window, self.grid_, self.p, self.q, self.n_tilde_v,
                                   self.search_range, self.padding, jobs=self.jobs)
        self.f0_ = self.result_.f0_opt
        self.window_ = WindowSpec(self.window, self.f0_)
        return self

    def transform(self, X):
        check_is_fitted(self, "f0_")
        return np.stack([self._tfr(sig, self.window_).amplitude for sig in _records(X, self.fs)])
