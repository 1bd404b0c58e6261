"""Amplitude peaks, ridge curves and time-frequency supports.

A column of |H| is split at the amplitude minima lying between consecutive
retained peaks.  Each resulting region holds one peak; the region around the
selected peak is that component's support.  The minimum bin itself goes to
the lower region, so regions are disjoint and cover the grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .transform import TFRMatrix

__all__ = [
    "PEAK_THRESHOLD",
    "PeakSet",
    "SupportCurve",
    "peak_mask",
    "find_peaks",
    "find_minima",
    "mean_peak_count",
    "extract_tfs",
    "partition_unimodal",
]

PEAK_THRESHOLD = 1e-6


@dataclass
class PeakSet:
    """Retained peaks of one column, ordered by frequency."""

    index: np.ndarray
    freq: np.ndarray
    amp: np.ndarray

    def __len__(self):
        return self.index.size


@dataclass
class SupportCurve:
    """Ridge frequency and support boundaries per time (rad/s).

    Index arrays address grid bins; ``peak_offset`` is the sub-bin position of
    the interpolated peak in units of bins.  Gapped times carry NaN / -1.
    """

    t: np.ndarray
    omega_p: np.ndarray
    omega_minus: np.ndarray
    omega_plus: np.ndarray
    peak_idx: np.ndarray
    lo_idx: np.ndarray
    hi_idx: np.ndarray
    peak_offset: np.ndarray
    gap: np.ndarray
    scheme: str = "maximum"

    @property
    def coverage(self) -> float:
        return float(1.0 - self.gap.mean()) if self.gap.size else 0.0

    @classmethod
    def full_axis(cls, tfr: TFRMatrix) -> "SupportCurve":
        """Support spanning every bin at every time, ridge at the amplitude argmax."""
        n_freq, n_time = tfr.shape
        peak = np.argmax(tfr.amplitude, axis=0)
        offset = _parabolic_offsets(tfr.amplitude, peak)
        mu = tfr.grid.mu[peak] + offset * tfr.grid.d_mu
        om = mu if tfr.grid.scale == "linear" else np.exp(mu)
        f = tfr.freqs
        return cls(
            tfr.times, om, np.full(n_time, f[0]), np.full(n_time, f[-1]), peak,
            np.zeros(n_time, dtype=int), np.full(n_time, n_freq - 1), offset,
            np.zeros(n_time, dtype=bool), "full",
        )


def peak_mask(amp: np.ndarray, threshold: float = PEAK_THRESHOLD) -> np.ndarray:
    """Boolean mask of retained local maxima along the frequency axis (axis 0).

    Grid-edge bins count when they exceed their single neighbour.  Peaks below
    ``threshold`` times the column's summed peak amplitude are discarded.
    """
    n = amp.shape[0]
    mask = np.zeros(amp.shape, dtype=bool)
    if n == 1:
        mask[:] = amp > 0
        return mask
    mask[1:-1] = (amp[1:-1] > amp[:-2]) & (amp[1:-1] >= amp[2:])
    mask[0] = amp[0] > amp[1]
    mask[-1] = amp[-1] > amp[-2]
    total = np.where(mask, amp, 0.0).sum(axis=0)
    mask &= amp >= threshold * total
    mask &= amp > 0
    return mask


def _parabolic_offsets(amp: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # 3-point parabola through the peak and its neighbours, offset in bins
    n = amp.shape[0]
    idx = np.asarray(idx)
    cols = np.arange(idx.size) if amp.ndim == 2 else None
    ok = (idx > 0) & (idx < n - 1)
    off = np.zeros(idx.shape)
    if not np.any(ok):
        return off
    k = idx[ok]
    if amp.ndim == 2:
        c = cols[ok]
        y0, y1, y2 = amp[k - 1, c], amp[k, c], amp[k + 1, c]
    else:
        y0, y1, y2 = amp[k - 1], amp[k], amp[k + 1]
    den = y0 - 2 * y1 + y2
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.where(den < 0, 0.5 * (y0 - y2) / np.where(den < 0, den, -1.0), 0.0)
    off[ok] = np.clip(d, -0.5, 0.5)
    return off


def _offset_to_freq(tfr: TFRMatrix, idx, offset):
    mu = tfr.grid.mu[idx] + offset * tfr.grid.d_mu
    return mu if tfr.grid.scale == "linear" else np.exp(mu)


def find_peaks(tfr: TFRMatrix, t_index: int, threshold: float = PEAK_THRESHOLD) -> PeakSet:
    """Retained amplitude peaks of one column with sub-bin interpolation."""
    col = tfr.amplitude[:, t_index]
    idx = np.flatnonzero(peak_mask(col[:, None], threshold)[:, 0])
    off = _parabolic_offsets(col, idx)
    y0 = col[np.clip(idx - 1, 0, None)]
    y2 = col[np.clip(idx + 1, None, col.size - 1)]
    amp = col[idx] - 0.25 * (y0 - y2) * off
    return PeakSet(idx, _offset_to_freq(tfr, idx, off), amp)


def _minima_between(col: np.ndarray, peaks: np.ndarray) -> np.ndarray:
    return np.array([a + int(np.argmin(col[a:b + 1])) for a, b in zip(peaks[:-1], peaks[1:])], dtype=int)


def find_minima(tfr: TFRMatrix, t_index: int, threshold: float = PEAK_THRESHOLD) -> np.ndarray:
    """Bins of the amplitude minimum between each pair of consecutive retained peaks."""
    col = tfr.amplitude[:, t_index]
    peaks = np.flatnonzero(peak_mask(col[:, None], threshold)[:, 0])
    return _minima_between(col, peaks)


def mean_peak_count(tfr: TFRMatrix, threshold: float = PEAK_THRESHOLD) -> float:
    """Time-averaged number of retained amplitude peaks."""
    return float(peak_mask(tfr.amplitude, threshold).sum(axis=0).mean())


def partition_unimodal(tfr: TFRMatrix, t_index: int, threshold: float = PEAK_THRESHOLD):
    """Split one column into disjoint bin ranges ``(lo, hi)`` (inclusive), one peak each."""
    n = tfr.shape[0]
    bounds = find_minima(tfr, t_index, threshold)
    starts = np.concatenate([[0], bounds + 1])
    ends = np.concatenate([bounds, [n - 1]])
    return [(int(a), int(b)) for a, b in zip(starts, ends)]


def extract_tfs(
    tfr: TFRMatrix,
    scheme: str = "maximum",
    ref_track=None,
    n_dominant: int | None = None,
    noise_weighting: bool = False,
    threshold: float = PEAK_THRESHOLD,
) -> SupportCurve:
    """Select one peak per time and return its unimodal support.

    Args:
        scheme: ``"maximum"`` takes the highest peak; ``"frequency"`` takes the
            peak nearest to ``ref_track`` (rad/s per time).
        n_dominant: restrict the frequency-based choice to this many highest peaks.
        noise_weighting: score peaks by |H|/√ω (wavelet transforms of noisy
            signals); affects selection only.
    """
    if scheme not in ("maximum", "frequency"):
        raise ValueError("scheme must be 'maximum' or 'frequency'")
    amp = tfr.amplitude
    n_freq, n_time = amp.shape
    if scheme == "frequency":
        if ref_track is None:
            raise ValueError("frequency-based extraction needs a reference track")
        ref_track = np.broadcast_to(np.asarray(ref_track, dtype=float), (n_time,))
    mask = peak_mask(amp, threshold)
    score = amp / np.sqrt(tfr.freqs)[:, None] if noise_weighting else amp
    peak = np.full(n_time, -1)
    lo = np.full(n_time, -1)
    hi = np.full(n_time, -1)
    for j in range(n_time):
        idx = np.flatnonzero(mask[:, j])
        if idx.size == 0:
            continue
        if scheme == "maximum":
            sel = int(np.argmax(score[idx, j]))
        else:
            cand = np.arange(idx.size)
            if n_dominant is not None and idx.size > n_dominant:
                cand = np.sort(np.argsort(-amp[idx, j], kind="stable")[:n_dominant])
            sel = int(cand[np.argmin(np.abs(tfr.freqs[idx[cand]] - ref_track[j]))])
        col = amp[:, j]
        peak[j] = idx[sel]
        lo[j] = _minima_between(col, idx[sel - 1:sel + 1])[0] + 1 if sel > 0 else 0
        hi[j] = _minima_between(col, idx[sel:sel + 2])[0] if sel < idx.size - 1 else n_freq - 1
    gap = peak < 0
    safe = np.where(gap, 0, peak)
    offset = np.where(gap, 0.0, _parabolic_offsets(amp, safe))
    f = tfr.freqs
    om = np.where(gap, np.nan, _offset_to_freq(tfr, safe, offset))
    om_lo = np.where(gap, np.nan, f[np.where(gap, 0, lo)])
    om_hi = np.where(gap, np.nan, f[np.where(gap, 0, hi)])
    return SupportCurve(tfr.times, om, om_lo, om_hi, peak, lo, hi, offset, gap, scheme)
