"""Component reconstruction from a TFR support: direct, ridge and hybrid estimates.

Support integrals are sums of H·w over the support bins, where w are the
grid's trapezoidal weights in μ (the same rule used for the constant C_h), so
a support spanning the whole grid reproduces the full-axis reconstruction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .signals import ComponentTrack, RealSignal
from .support import SupportCurve, _parabolic_offsets, extract_tfs, partition_unimodal, peak_mask
from .synchrosqueeze import ContractError, InstFreqMap, inst_freq_map
from .transform import TFRMatrix, compute_tfr, pad_length

__all__ = [
    "ErrorTriple",
    "HybridRequired",
    "ridge_reconstruct",
    "direct_reconstruct",
    "hybrid_freq",
    "error_metrics",
    "adaptive_select",
    "AdaptiveChoice",
    "build_skeleton",
    "KAPPA_DIRECT",
    "KAPPA_RIDGE",
    "format_error",
]

KAPPA_DIRECT = (3.0, 4.0, 2.0)
KAPPA_RIDGE = (1.0, 1.0, 1.0)
REPORT_FLOOR = 0.001


class HybridRequired(ContractError):
    """Direct frequency needs a finite D_h; use the hybrid estimate instead."""


@dataclass(frozen=True)
class ErrorTriple:
    """Relative amplitude, phase and frequency reconstruction errors."""

    eps_a: float
    eps_phi: float
    eps_f: float

    def as_tuple(self):
        return (self.eps_a, self.eps_phi, self.eps_f)

    def max(self) -> float:
        return max(self.as_tuple())


def format_error(value: float) -> str:
    """Errors below 0.001 are below the discretization floor and reported as such."""
    if not np.isfinite(value):
        return "nan"
    return "≤0.001" if value < REPORT_FLOOR else f"{value:.6g}"


def _unwrap_with_gaps(phase: np.ndarray, gap: np.ndarray) -> np.ndarray:
    out = np.array(phase, dtype=float)
    good = ~gap
    if not np.any(good):
        return out
    # unwrap each contiguous stretch on its own
    edges = np.flatnonzero(np.diff(np.concatenate([[0], good.astype(int), [0]])))
    for a, b in zip(edges[::2], edges[1::2]):
        out[a:b] = np.unwrap(out[a:b])
    return out


def _support_sums(tfr: TFRMatrix, curve: SupportCurve, factor=None, block: int = 512):
    """Σ_{lo..hi} H·w (and optionally Σ H·factor·w) per time."""
    w = tfr.grid.weights
    n_time = tfr.shape[1]
    gap = curve.gap
    lo = np.where(gap, 0, curve.lo_idx)
    hi = np.where(gap, -1, curve.hi_idx)
    s0 = np.zeros(n_time, dtype=complex)
    s1 = None if factor is None else np.zeros(n_time, dtype=complex)
    # column blocks restricted to the rows their supports touch
    for a in range(0, n_time, block):
        b = min(a + block, n_time)
        if np.all(gap[a:b]):
            continue
        r0, r1 = int(lo[a:b][~gap[a:b]].min()), int(hi[a:b].max()) + 1
        k = np.arange(r0, r1)[:, None]
        mask = (k >= lo[None, a:b]) & (k <= hi[None, a:b])
        weighted = np.where(mask, tfr.values[r0:r1, a:b] * w[r0:r1, None], 0)
        s0[a:b] = weighted.sum(axis=0)
        if factor is not None:
            s1[a:b] = (weighted * np.broadcast_to(factor, tfr.shape)[r0:r1, a:b]).sum(axis=0)
    return s0, s1


def _track(tfr, curve, amp, phase, nu, method, gap):
    phase = _unwrap_with_gaps(np.where(gap, 0.0, phase), gap)
    amp = np.where(gap, np.nan, amp)
    nu = np.where(gap, np.nan, nu)
    return ComponentTrack(curve.t, amp, phase, nu, method, tfr.kind, gap)


def _ridge_values(values, amp, peak, offset):
    """Interpolated |H| and arg H at sub-bin peak positions, one per column."""
    n = amp.shape[0]
    cols = np.arange(peak.size)
    k = peak
    km = np.clip(k - 1, 0, n - 1)
    kp = np.clip(k + 1, 0, n - 1)
    y0, y1, y2 = amp[km, cols], amp[k, cols], amp[kp, cols]
    a = y1 - 0.25 * (y0 - y2) * offset
    h = values[k, cols]
    # phase moves linearly toward the neighbour on the side of the offset
    nb = np.where(offset >= 0, values[kp, cols], values[km, cols])
    with np.errstate(invalid="ignore", divide="ignore"):
        dphi = np.angle(nb / h)
    dphi = np.where(np.isfinite(dphi), dphi, 0.0)
    phase = np.angle(h) + np.abs(offset) * dphi
    return a, phase


def ridge_reconstruct(tfr: TFRMatrix, curve: SupportCurve, amplitude: bool = True) -> ComponentTrack:
    """Amplitude and phase from the TFR value at the ridge, frequency from its location.

    Raises:
        ContractError: amplitude requested from a synchrosqueezed TFR, whose
            peak values are not proportional to the component amplitude.
    """
    if tfr.is_squeezed and amplitude:
        raise ContractError("ridge amplitude is ill-defined on synchrosqueezed TFRs; pass amplitude=False")
    gap = curve.gap.copy()
    peak = np.where(gap, 0, curve.peak_idx)
    offset = np.where(gap, 0.0, curve.peak_offset)
    a, phase = _ridge_values(tfr.values, tfr.amplitude, peak, offset)
    amp = 2 * a / tfr.window.h_max if amplitude else np.zeros_like(a)
    return _track(tfr, curve, amp, phase, curve.omega_p, "ridge", gap)


def hybrid_freq(tfr: TFRMatrix, ifm: InstFreqMap, curve: SupportCurve) -> np.ndarray:
    """Support average of ν_H weighted by H; NaN where the weight sum vanishes."""
    nu_H = np.where(ifm.valid, ifm.nu_H, 0.0)
    s0, s1 = _support_sums(tfr, curve, nu_H)
    with np.errstate(invalid="ignore", divide="ignore"):
        nu = np.real(s1 / s0)
    return np.where(curve.gap | (s0 == 0), np.nan, nu)


def direct_reconstruct(tfr: TFRMatrix, curve: SupportCurve, ifm: InstFreqMap | None = None) -> ComponentTrack:
    """Integrate the TFR over the support: A·e^{iφ} = C_h⁻¹ ∫ H dμ.

    The frequency is the normalized first moment of H over the support.  When
    the window has no finite D_h (Morlet), ``ifm`` must be given and the
    hybrid estimate is used for the frequency.

    Raises:
        HybridRequired: Morlet-type window without an instantaneous-frequency map.
    """
    window = tfr.window
    hybrid = not window.D_h_finite
    if hybrid and ifm is None:
        raise HybridRequired(f"direct frequency is undefined for {window.kind} (D_h diverges); pass ifm for hybrid")
    factor = None if hybrid else tfr.freqs[:, None]
    s0, s1 = _support_sums(tfr, curve, factor)
    z = s0 / window.C_h
    gap = curve.gap | (s0 == 0)
    if hybrid:
        nu = hybrid_freq(tfr, ifm, curve)
        method = "direct+hybrid"
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            nu = np.real((s1 / (2 * window.D_h)) / (s0 / (2 * window.C_h))) - window.omega_bar
        method = "direct"
    return _track(tfr, curve, np.abs(z), np.angle(z), nu, method, gap)


def error_metrics(rec: ComponentTrack, truth: ComponentTrack, family: str = "WFT", exclude: int = 0) -> ErrorTriple:
    """Relative errors of a reconstruction against the truth.

    Args:
        family: ``"WFT"`` normalizes the frequency error by 2π, ``"WT"`` by the
            mean true frequency.
        exclude: samples dropped at each end (boundary effects).
    """
    if len(rec) != len(truth):
        raise ValueError("reconstruction and truth must have equal lengths")
    keep = ~(rec.gap | truth.gap)
    if exclude:
        keep[:exclude] = False
        keep[len(keep) - exclude:] = False
    keep &= np.isfinite(rec.A) & np.isfinite(rec.nu)
    if not np.any(keep):
        raise ValueError("no overlapping non-gap samples; error metrics undefined")
    dA = rec.A[keep] - truth.A[keep]
    eps_a = np.sqrt(np.mean(dA**2)) / np.sqrt(np.mean(truth.A[keep] ** 2))
    m = np.abs(np.mean(np.exp(1j * (rec.phi[keep] - truth.phi[keep]))))
    eps_phi = np.sqrt(max(0.0, 1.0 - m * m))
    dnu = np.sqrt(np.mean((rec.nu[keep] - truth.nu[keep]) ** 2))
    fam = family.replace("S", "") if family in ("SWFT", "SWT") else family
    eps_f = dnu / (2 * np.pi) if fam == "WFT" else dnu / np.mean(truth.nu[keep])
    return ErrorTriple(float(eps_a), float(eps_phi), float(eps_f))


@dataclass
class AdaptiveChoice:
    """Per-parameter method choice and the κ-scaled discrepancies behind it."""

    methods: dict
    discrepancies: dict
    track: ComponentTrack
    refined: dict = field(default_factory=dict)


def _discrepancy(refined: ComponentTrack, est: ComponentTrack, kappa, family, keep):
    keep = keep & ~refined.gap & ~est.gap & np.isfinite(refined.A) & np.isfinite(est.A)
    if not np.any(keep):
        return (np.inf, np.inf, np.inf)
    dA = np.sqrt(np.mean((refined.A[keep] - est.A[keep]) ** 2)) / np.sqrt(np.mean(est.A[keep] ** 2))
    m = np.abs(np.mean(np.exp(1j * (refined.phi[keep] - est.phi[keep]))))
    dphi = np.sqrt(max(0.0, 1.0 - m * m))
    dnu = np.sqrt(np.mean((refined.nu[keep] - est.nu[keep]) ** 2))
    dnu = dnu / (2 * np.pi) if family == "WFT" else dnu / np.mean(est.nu[keep])
    return (kappa[0] * dA, kappa[1] * dphi, kappa[2] * dnu)


def adaptive_select(
    tfr: TFRMatrix,
    curve: SupportCurve,
    direct: ComponentTrack | None = None,
    ridge: ComponentTrack | None = None,
    kappa_direct=KAPPA_DIRECT,
    kappa_ridge=KAPPA_RIDGE,
    exclude: int | None = None,
    ifm: InstFreqMap | None = None,
) -> AdaptiveChoice:
    """Choose direct or ridge estimates per parameter by self-consistency.

    Each estimate is turned back into a signal A·cos φ, transformed with the
    same window and grid, re-extracted at the amplitude maximum and
    reconstructed with the same method.  The method whose refined estimate
    moves less (after κ scaling) wins for that parameter.
    """
    family = "WT" if tfr.window.is_wavelet else "WFT"
    hybrid = not tfr.window.D_h_finite
    if direct is None:
        direct = direct_reconstruct(tfr, curve, ifm)
    if ridge is None:
        ridge = ridge_reconstruct(tfr, curve)
    padding = tfr.meta.get("padding", "zero")
    if padding == "exact":
        padding = "reflection"
    fs = tfr.fs
    if exclude is None:
        exclude = pad_length(tfr.window, fs, tfr.grid.omega_min)
    n = len(curve.t)
    keep = np.ones(n, dtype=bool)
    keep[:exclude] = False
    keep[max(n - exclude, 0):] = False
    if not np.any(keep):
        keep[:] = True

    refined = {}
    disc = {}
    for name, est, kappa in (("direct", direct, kappa_direct), ("ridge", ridge, kappa_ridge)):
        amp = np.where(est.gap | ~np.isfinite(est.A), 0.0, est.A)
        sig = RealSignal(amp * np.cos(est.phi), fs, float(curve.t[0]))
        t2 = compute_tfr(sig, tfr.window, tfr.grid, padding, derivative=hybrid and name == "direct")
        c2 = extract_tfs(t2, "maximum")
        if name == "direct":
            r = direct_reconstruct(t2, c2, inst_freq_map(t2) if hybrid else None)
        else:
            r = ridge_reconstruct(t2, c2)
        refined[name] = r
        disc[name] = _discrepancy(r, est, kappa, family, keep)

    methods = {}
    params = ("A", "phi", "nu")
    for i, p in enumerate(params):
        methods[p] = "direct" if disc["direct"][i] < disc["ridge"][i] else "ridge"
    pick = {"direct": direct, "ridge": ridge}
    A = pick[methods["A"]].A
    phi = pick[methods["phi"]].phi
    nu = pick[methods["nu"]].nu
    gap = direct.gap | ridge.gap
    track = ComponentTrack(curve.t, np.where(gap, np.nan, A), phi, nu, "adaptive", tfr.kind, gap)
    return AdaptiveChoice(methods, disc, track, refined)


def build_skeleton(tfr: TFRMatrix, method: str = "ridge", ifm: InstFreqMap | None = None) -> TFRMatrix:
    """Sparse TFR holding one reconstructed A·e^{iφ} per unimodal region.

    Each column is split into unimodal regions; every region is reconstructed
    by ``method`` (``"ridge"`` or ``"direct"``) and the complex amplitude is
    deposited at the bin containing the region's estimated frequency.
    """
    if tfr.is_squeezed:
        raise ContractError("skeletons are built from WFT/WT, not synchrosqueezed TFRs")
    if method not in ("ridge", "direct"):
        raise ValueError("method must be 'ridge' or 'direct'")
    window = tfr.window
    hybrid = method == "direct" and not window.D_h_finite
    if hybrid and ifm is None:
        raise HybridRequired("direct skeleton with a Morlet-type window needs ifm")
    grid = tfr.grid
    amp = tfr.amplitude
    mask = peak_mask(amp)
    out = np.zeros(tfr.shape, dtype=complex)
    w = grid.weights
    f = grid.freqs
    for j in range(tfr.shape[1]):
        peaks = np.flatnonzero(mask[:, j])
        if peaks.size == 0:
            continue
        for lo, hi in partition_unimodal(tfr, j):
            inside = peaks[(peaks >= lo) & (peaks <= hi)]
            if inside.size == 0:
                continue
            if method == "ridge":
                k = np.array([inside[0]])
                off = _parabolic_offsets(amp[:, j], k)
                a, phase = _ridge_values(tfr.values[:, j:j + 1], amp[:, j:j + 1], k, off)
                z = 2 * a[0] / window.h_max * np.exp(1j * phase[0])
                mu = grid.mu[k[0]] + off[0] * grid.d_mu
                nu = mu if grid.scale == "linear" else np.exp(mu)
            else:
                hw = tfr.values[lo:hi + 1, j] * w[lo:hi + 1]
                s0 = hw.sum()
                if s0 == 0:
                    continue
                z = s0 / window.C_h
                if hybrid:
                    nh = np.where(ifm.valid[lo:hi + 1, j], ifm.nu_H[lo:hi + 1, j], 0.0)
                    nu = np.real((hw * nh).sum() / s0)
                else:
                    s1 = (hw * f[lo:hi + 1]).sum()
                    nu = np.real((s1 / (2 * window.D_h)) / (s0 / (2 * window.C_h))) - window.omega_bar
            b = grid.bin_of(nu)
            if b >= 0:
                out[b, j] += z
    meta = dict(tfr.meta, skeleton=method)
    return TFRMatrix(out, grid, tfr.times, window, tfr.kind, tfr.fs, None, meta)

