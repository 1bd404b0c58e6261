"""Instantaneous-frequency maps and synchrosqueezed transforms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import RealSignal
from .transform import TFRMatrix, compute_tfr

__all__ = ["InstFreqMap", "ContractError", "inst_freq_map", "synchrosqueeze", "IFM_THRESHOLD"]

IFM_THRESHOLD = 1e-8


class ContractError(ValueError):
    """An operation was applied to a TFR kind it does not support."""


@dataclass
class InstFreqMap:
    """ν_H(ω, t) = ∂_t arg H in rad/s, with a validity mask."""

    nu_H: np.ndarray
    valid: np.ndarray


def inst_freq_map(tfr: TFRMatrix, signal: RealSignal | None = None, threshold: float = IFM_THRESHOLD) -> InstFreqMap:
    """ν_H = Im[∂_t H / H], masked where |H| < ``threshold``·max|H|.

    ∂_t H is taken from ``tfr.dvalues`` when present, otherwise recomputed
    from ``signal`` with the spectral derivative.
    """
    if tfr.is_squeezed:
        raise ContractError("instantaneous frequency is defined on WFT/WT, not on synchrosqueezed TFRs")
    dH = tfr.dvalues
    if dH is None:
        if signal is None:
            raise ValueError("TFR has no time derivative; pass the signal to recompute it")
        full = compute_tfr(
            signal, tfr.window, tfr.grid, tfr.meta.get("padding", "zero"), tfr.meta.get("pad_len"),
            derivative=True, decimate=tfr.meta.get("decimate", 1),
        )
        dH = full.dvalues
    amp = tfr.amplitude
    peak = amp.max() if amp.size else 0.0
    valid = amp >= threshold * peak if peak > 0 else np.zeros(amp.shape, dtype=bool)
    nu_H = np.full(amp.shape, np.nan)
    nu_H[valid] = np.imag(dH[valid] / tfr.values[valid])
    return InstFreqMap(nu_H, valid)


def synchrosqueeze(tfr: TFRMatrix, ifm: InstFreqMap):
    """Move each coefficient's mass H·dμ to the bin holding its ν_H.

    Output bins are divided by their own measure, so column sums Σ S·dμ equal
    the sums of the moved input entries exactly.

    The per-column mass Σ H·dμ of valid entries whose ν_H fell outside the
    grid is reported in ``meta["dropped"]`` (complex array over time).
    """
    if tfr.is_squeezed:
        raise ContractError("input is already synchrosqueezed")
    if ifm.nu_H.shape != tfr.values.shape:
        raise ValueError("instantaneous-frequency map does not match the TFR")
    grid = tfr.grid
    n_freq, n_time = tfr.values.shape
    w = grid.weights
    target = np.full((n_freq, n_time), -1)
    target[ifm.valid] = grid.bin_of(ifm.nu_H[ifm.valid])
    mass = tfr.values * w[:, None]
    moved = target >= 0
    cols = np.broadcast_to(np.arange(n_time), (n_freq, n_time))
    flat = target[moved] * n_time + cols[moved]
    m = mass[moved]
    size = n_freq * n_time
    acc = np.bincount(flat, weights=m.real, minlength=size) + 1j * np.bincount(flat, weights=m.imag, minlength=size)
    squeezed = acc.reshape(n_freq, n_time) / w[:, None]
    out_of_range = ifm.valid & ~moved
    dropped = np.where(out_of_range, mass, 0).sum(axis=0)
    kind = "SWT" if tfr.kind == "WT" else "SWFT"
    meta = dict(tfr.meta, dropped=dropped)
    return TFRMatrix(squeezed, grid, tfr.times, tfr.window, kind, tfr.fs, None, meta)
