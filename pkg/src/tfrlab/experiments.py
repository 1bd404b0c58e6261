"""Batch experiments: config schema, sweep expansion and per-point runners.

A config is a mapping (usually loaded from YAML)::

    kind: ReconSurface            # RegimeMap | ReconSurface | NoiseSweep | AdaptF0
                                  # | AdaptMethod | SkeletonDemo | SingleRun
    name: am_surface
    fs: 50                        # Hz
    duration: 100                 # s
    signal: {type: AM, A: 1, r_a: 0.5, nu_a_hz: 0.2, nu_hz: 1}
    window: gaussian              # or a list; sweepable as an axis
    f0: 1.0
    sweep:                        # axes; the run covers their Cartesian product
      f0: [0.1, 1, 5]
      signal.r_a: {start: 0.1, stop: 0.9, num: 3}
      signal.nu_a_hz: {start: 0.01, stop: 1, num: 4, scale: log}
    grid: {delta_f: 0.002, n_voices: 256}   # optional fmin/fmax in Hz
    padding: exact
    seed: 0                       # base seed; NoiseSweep uses seed..seed+n_seeds-1
    n_seeds: 10
    exclude_edges: 0.0            # s dropped at each end in error metrics
    constants: {eps: 0.001, eps_J: 0.02, peak_threshold: 1.0e-6, n_tilde_v: 2,
                kappa_direct: [3, 4, 2], kappa_ridge: [1, 1, 1]}

Signals use the structured spec form of :func:`tfrlab.signals.spec_from_dict`
plus a ``TwoTone`` shorthand ``{type: TwoTone, nu1_hz, nu2_hz | dnu_hz, r, phi2}``
for cos(ν₁t) + r·cos(ν₂t + φ₂).  Sweep axis names are ``f0``, ``window`` or
``signal.<field>``.
"""

from __future__ import annotations

import copy
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .optimize import optimize_f0
from .reconstruction import (
    KAPPA_DIRECT,
    KAPPA_RIDGE,
    ErrorTriple,
    adaptive_select,
    build_skeleton,
    direct_reconstruct,
    error_metrics,
    format_error,
    ridge_reconstruct,
)
from .regimes import REGIME_EPS, classify_am, classify_fm, classify_two_tone
from .signals import AM, EPS_J, FM, MultiTone, NoisyTone, SpecError, spec_from_dict, synthesize
from .support import PEAK_THRESHOLD, extract_tfs, mean_peak_count, peak_mask
from .synchrosqueeze import inst_freq_map, synchrosqueeze
from .transform import DEFAULT_DELTA_OMEGA, DEFAULT_VOICES, FrequencyGrid, compute_tfr
from .windows import WINDOW_KINDS, WindowSpec

__all__ = [
    "EXPERIMENT_KINDS",
    "DEFAULT_CONSTANTS",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "validate_config",
    "expand_points",
    "run_point",
    "build_signal",
]

EXPERIMENT_KINDS = ("RegimeMap", "ReconSurface", "NoiseSweep", "AdaptF0", "AdaptMethod", "SkeletonDemo", "SingleRun")

DEFAULT_CONSTANTS = {
    "eps": REGIME_EPS,
    "eps_J": EPS_J,
    "peak_threshold": PEAK_THRESHOLD,
    "n_tilde_v": 2,
    "kappa_direct": list(KAPPA_DIRECT),
    "kappa_ridge": list(KAPPA_RIDGE),
}

_TOP_KEYS = {
    "kind", "name", "description", "slow", "fs", "duration", "signal", "window", "f0", "sweep", "grid",
    "padding", "seed", "n_seeds", "exclude_edges", "constants", "transforms", "pq", "search_range",
    "empirical_peaks", "dump", "methods",
}


class ConfigError(ValueError):
    """Config schema or invariant violations; ``errors`` lists ``(field path, message)``."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.errors))


@dataclass
class ExperimentConfig:
    """Parsed config with defaults filled in."""

    kind: str
    name: str
    fs: float
    duration: float
    signal: dict
    window: list
    f0: float
    sweep: dict
    grid: dict
    padding: str
    seed: int
    n_seeds: int
    exclude_edges: float
    constants: dict
    extra: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def axes(self) -> dict:
        """Resolved sweep axes: name → list of values (window list included when >1)."""
        axes = dict(self.sweep)
        if "window" not in axes and len(self.window) > 1:
            axes = {"window": list(self.window), **axes}
        return axes

    @property
    def n_points(self) -> int:
        return math.prod(len(v) for v in self.axes.values()) if self.axes else 1


def _axis_values(path, spec, errors):
    if isinstance(spec, (list, tuple)):
        vals = list(spec)
    elif isinstance(spec, dict):
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except (KeyError, TypeError, ValueError):
            errors.append((path, "range axes need numeric start, stop and num"))
            return []
        scale = spec.get("scale", "linear")
        if scale == "log":
            if start <= 0 or stop <= 0:
                errors.append((path, "log axes need positive start and stop"))
                return []
            vals = np.geomspace(start, stop, num).tolist()
        elif scale == "linear":
            vals = np.linspace(start, stop, num).tolist()
        else:
            errors.append((path, f"unknown axis scale {scale!r}"))
            return []
    else:
        vals = [spec]
    if not vals:
        errors.append((path, "sweep axis must be non-empty"))
    return vals


def _parse(raw: dict) -> tuple[ExperimentConfig | None, list]:
    errors = []
    if not isinstance(raw, dict):
        return None, [("<root>", "config must be a mapping")]
    for k in raw:
        if k not in _TOP_KEYS:
            errors.append((k, "unknown field"))
    kind = raw.get("kind")
    if kind not in EXPERIMENT_KINDS:
        errors.append(("kind", f"must be one of {', '.join(EXPERIMENT_KINDS)}"))
    fs = raw.get("fs", 50.0)
    duration = raw.get("duration", 100.0)
    for key, val in (("fs", fs), ("duration", duration)):
        if not isinstance(val, (int, float)) or not val > 0:
            errors.append((key, "must be a positive number"))
    windows = raw.get("window", "gaussian")
    windows = list(windows) if isinstance(windows, (list, tuple)) else [windows]
    for i, w in enumerate(windows):
        if w not in WINDOW_KINDS:
            errors.append((f"window[{i}]" if len(windows) > 1 else "window", f"must be one of {WINDOW_KINDS}"))
    f0 = raw.get("f0", 1.0)
    if not isinstance(f0, (int, float)) or not f0 > 0:
        errors.append(("f0", "must be a positive number"))
    signal = raw.get("signal")
    if not isinstance(signal, dict):
        errors.append(("signal", "a signal spec mapping is required"))
        signal = {}
    sweep_raw = raw.get("sweep") or {}
    sweep = {}
    if not isinstance(sweep_raw, dict):
        errors.append(("sweep", "must be a mapping of axis name to values"))
        sweep_raw = {}
    for name, spec in sweep_raw.items():
        path = f"sweep.{name}"
        if not (name in ("f0", "window") or name.startswith("signal.")):
            errors.append((path, "axis names are f0, window or signal.<field>"))
            continue
        sweep[name] = _axis_values(path, spec, errors)
    grid = dict(raw.get("grid") or {})
    for k in grid:
        if k not in ("delta_f", "n_voices", "fmin", "fmax"):
            errors.append((f"grid.{k}", "unknown grid field"))
    padding = raw.get("padding", "exact")
    if padding not in ("zero", "reflection", "periodic", "exact"):
        errors.append(("padding", "must be zero, reflection, periodic or exact"))
    constants = dict(DEFAULT_CONSTANTS)
    for k, v in (raw.get("constants") or {}).items():
        if k not in DEFAULT_CONSTANTS:
            errors.append((f"constants.{k}", "unknown constant"))
        else:
            constants[k] = v
    n_seeds = raw.get("n_seeds", 1)
    if not isinstance(n_seeds, int) or n_seeds < 1:
        errors.append(("n_seeds", "must be a positive integer"))
    extra = {k: raw[k] for k in ("transforms", "pq", "search_range", "empirical_peaks", "dump", "methods", "slow",
                                 "description") if k in raw}
    if kind == "AdaptF0":
        pq = raw.get("pq", [[1, 2]])
        ok = isinstance(pq, list) and all(isinstance(x, (list, tuple)) and len(x) == 2 for x in pq)
        if not ok or not all(0 < float(p) < float(q) for p, q in pq):
            errors.append(("pq", "list of [p, q] pairs with q > p > 0"))
    cfg = ExperimentConfig(
        kind=kind, name=str(raw.get("name", kind or "experiment")), fs=float(fs) if isinstance(fs, (int, float)) else 0,
        duration=float(duration) if isinstance(duration, (int, float)) else 0, signal=signal, window=windows,
        f0=float(f0) if isinstance(f0, (int, float)) else 1.0, sweep=sweep, grid=grid, padding=padding,
        seed=int(raw.get("seed", 0)), n_seeds=n_seeds if isinstance(n_seeds, int) else 1,
        exclude_edges=float(raw.get("exclude_edges", 0.0)), constants=constants, extra=extra, raw=copy.deepcopy(raw),
    )
    return cfg, errors


def _expand_two_tone(d: dict) -> dict:
    d = dict(d)
    d.pop("type")
    nu1 = d.pop("nu1", None)
    if "nu1_hz" in d:
        nu1 = 2 * np.pi * float(d.pop("nu1_hz"))
    nu2 = d.pop("nu2", None)
    if "nu2_hz" in d:
        nu2 = 2 * np.pi * float(d.pop("nu2_hz"))
    if "dnu_hz" in d:
        nu2 = nu1 + 2 * np.pi * float(d.pop("dnu_hz"))
    if "dnu" in d:
        nu2 = nu1 + float(d.pop("dnu"))
    r = float(d.pop("r", 1.0))
    phi2 = float(d.pop("phi2", 0.0))
    a1 = float(d.pop("a1", 1.0))
    if d:
        raise SpecError(f"TwoTone: unknown fields {sorted(d)}")
    if nu1 is None or nu2 is None:
        raise SpecError("TwoTone needs nu1 and nu2 (or dnu)")
    return {"type": "MultiTone", "tones": [[a1, nu1, 0.0], [a1 * r, nu2, phi2]]}


def _normalize_spec(d: dict) -> dict:
    if d.get("type") == "TwoTone":
        return _expand_two_tone(d)
    if d.get("type") == "Composite":
        return {"type": "Composite", "parts": [_normalize_spec(p) for p in d.get("parts", [])]}
    return d


def build_signal(d: dict):
    """Signal spec object from its config mapping (TwoTone shorthand allowed)."""
    spec = spec_from_dict(_normalize_spec(d))
    spec.validate()
    return spec


def _set_path(d: dict, path: str, value):
    keys = path.split(".")
    cur = d
    for k in keys[:-1]:
        if isinstance(cur, list):
            cur = cur[int(k)]
        else:
            cur = cur.setdefault(k, {})
    last = keys[-1]
    if isinstance(cur, list):
        cur[int(last)] = value
    else:
        # a Hz axis replaces the rad/s field of the same name and vice versa
        if last.endswith("_hz"):
            cur.pop(last[:-3], None)
        else:
            cur.pop(last + "_hz", None)
        cur[last] = value


def expand_points(cfg: ExperimentConfig) -> list[dict]:
    """All sweep points in a fixed order (last axis varies fastest)."""
    axes = cfg.axes
    names = list(axes)
    points = []
    for idx, combo in enumerate(itertools.product(*(axes[n] for n in names))):
        params = dict(zip(names, combo))
        sig = copy.deepcopy(cfg.signal)
        for n, v in params.items():
            if n.startswith("signal."):
                _set_path(sig, n[len("signal."):], v)
        points.append({
            "index": idx,
            "params": params,
            "window": params.get("window", cfg.window[0]),
            "f0": float(params.get("f0", cfg.f0)),
            "signal": sig,
        })
    return points


def validate_config(cfg: ExperimentConfig | None, errors: list) -> list:
    """Full validation: schema errors plus signal invariants at every sweep point."""
    errors = list(errors)
    if cfg is None or cfg.kind not in EXPERIMENT_KINDS:
        return errors
    seen = set()
    for pt in expand_points(cfg):
        try:
            spec = build_signal(pt["signal"])
            WindowSpec(pt["window"], pt["f0"])
        except (SpecError, ValueError, KeyError, TypeError) as exc:
            where = ", ".join(f"{k}={v}" for k, v in pt["params"].items())
            msg = str(exc)
            if msg not in seen:
                seen.add(msg)
                errors.append(("signal" + (f" (at {where})" if where else ""), msg))
            continue
        if cfg.kind == "RegimeMap" and not _regime_case(spec):
            errors.append(("signal", "RegimeMap needs a two-tone MultiTone, AM or FM signal"))
            break
        if cfg.kind == "NoiseSweep" and not isinstance(spec, NoisyTone):
            errors.append(("signal", "NoiseSweep needs a NoisyTone signal"))
            break
    return errors


def load_config(source) -> tuple[ExperimentConfig | None, list]:
    """Parse a YAML path or mapping; returns ``(config, errors)`` without raising."""
    import yaml

    if isinstance(source, dict):
        raw = source
    else:
        path = Path(source)
        if not path.exists():
            return None, [(str(path), "config file not found")]
        try:
            raw = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            return None, [(str(path), f"YAML parse error: {exc}")]
    cfg, errors = _parse(raw)
    return cfg, validate_config(cfg, errors)


# ---------------------------------------------------------------- point runners


def _regime_case(spec):
    if isinstance(spec, MultiTone) and len(spec.tones) == 2:
        return "two_tone"
    if isinstance(spec, AM):
        return "am"
    if isinstance(spec, FM):
        return "fm"
    return None


def _freq_range(spec, truths, fs):
    nus = [t.nu for t in truths]
    if nus:
        allnu = np.concatenate(nus)
        return float(allnu.min()), float(allnu.max())
    if isinstance(spec, NoisyTone):
        return spec.nu, spec.nu
    return 2 * np.pi * fs / 1000, np.pi * fs * 0.9


def _grid_for(cfg: ExperimentConfig, window: WindowSpec, spec, truths):
    g = cfg.grid
    if "fmin" in g and "fmax" in g:
        lo, hi = 2 * np.pi * float(g["fmin"]), 2 * np.pi * float(g["fmax"])
        if window.is_wavelet:
            return FrequencyGrid.log(lo, hi, float(g.get("n_voices", DEFAULT_VOICES)))
        return FrequencyGrid.linear(lo, hi, 2 * np.pi * float(g["delta_f"]) if "delta_f" in g else DEFAULT_DELTA_OMEGA)
    nu_lo, nu_hi = _freq_range(spec, truths, cfg.fs)
    step = float(g["n_voices"]) if window.is_wavelet and "n_voices" in g else None
    if not window.is_wavelet and "delta_f" in g:
        step = 2 * np.pi * float(g["delta_f"])
    anchor = nu_lo if not window.is_wavelet else None
    # real signals: negative-frequency bins only mirror the positive side
    floor = None if window.is_wavelet else 0.0
    return FrequencyGrid.covering(window, nu_lo, nu_hi, step=step, anchor=anchor, omega_floor=floor, fs=cfg.fs)


def _exclude(cfg, n):
    k = int(round(cfg.exclude_edges * cfg.fs))
    return min(k, max((n - 1) // 2, 0))


def _flat(pt: dict, cfg: ExperimentConfig) -> dict:
    row = {"point": pt["index"], "window": pt["window"], "f0": pt["f0"]}
    for k, v in pt["params"].items():
        if k not in ("window", "f0"):
            row[k] = v
    return row


def _errors_row(err):
    return {
        "eps_a": err.eps_a, "eps_phi": err.eps_phi, "eps_f": err.eps_f,
        "eps_a_report": format_error(err.eps_a), "eps_phi_report": format_error(err.eps_phi),
        "eps_f_report": format_error(err.eps_f),
    }


def _nan_errors():
    return ErrorTriple(np.nan, np.nan, np.nan)


def _reconstruct_all(tfr, curve, need_hybrid):
    ifm = inst_freq_map(tfr) if need_hybrid else None
    out = {"direct": direct_reconstruct(tfr, curve, ifm)}
    out["ridge"] = ridge_reconstruct(tfr, curve, amplitude=not tfr.is_squeezed)
    return out


def _run_regime(cfg, pt):
    window = WindowSpec(pt["window"], pt["f0"])
    spec = build_signal(pt["signal"])
    case = _regime_case(spec)
    eps = float(cfg.constants["eps"])
    row = _flat(pt, cfg)
    if case == "two_tone":
        t1, t2 = spec.tones
        rep = classify_two_tone(window, t1.nu, t2.nu, t2.a / t1.a, eps)
        row.update(nu1=t1.nu, nu2=t2.nu, r=t2.a / t1.a, f0_dnu=pt["f0"] * (t2.nu - t1.nu))
    elif case == "am":
        rep = classify_am(window, spec.nu, spec.nu_a, spec.r_a, eps)
        row.update(nu=spec.nu, nu_a=spec.nu_a, r_a=spec.r_a, f0_nu_a=pt["f0"] * spec.nu_a)
    else:
        rep = classify_fm(window, spec.nu, spec.nu_b, spec.r_b, eps, float(cfg.constants["eps_J"]))
        row.update(nu=spec.nu, nu_b=spec.nu_b, r_b=spec.r_b, f0_nu_b=pt["f0"] * spec.nu_b)
    for k in sorted(rep.eta):
        row[k] = rep.eta[k]
    for i, x in enumerate(rep.intersections):
        row[f"omega_x{i + 1}"] = x
    if cfg.extra.get("empirical_peaks"):
        sig, truths = synthesize(spec, cfg.fs, cfg.duration, pt["index"])
        tfr = compute_tfr(sig, window, _grid_for(cfg, window, spec, truths), cfg.padding)
        row["mean_peaks"] = mean_peak_count(tfr, float(cfg.constants["peak_threshold"]))
    row["regime"] = rep.regime
    return {"regimes": [row]}


def _run_recon(cfg, pt, seed_offset=0):
    window = WindowSpec(pt["window"], pt["f0"])
    spec = build_signal(pt["signal"])
    if isinstance(spec, NoisyTone):
        spec = NoisyTone(spec.nu, spec.sigma, cfg.seed + seed_offset, spec.amplitude, spec.phi)
    sig, truths = synthesize(spec, cfg.fs, cfg.duration)
    grid = _grid_for(cfg, window, spec, truths)
    transforms = cfg.extra.get("transforms", ["plain"])
    squeeze = "squeezed" in transforms
    hybrid = not window.D_h_finite
    tfr = compute_tfr(sig, window, grid, cfg.padding, derivative=squeeze or hybrid)
    thr = float(cfg.constants["peak_threshold"])
    tfrs = []
    if "plain" in transforms:
        tfrs.append(tfr)
    if squeeze:
        tfrs.append(synchrosqueeze(tfr, inst_freq_map(tfr)))
    excl = _exclude(cfg, len(sig))
    two_tone = isinstance(spec, MultiTone) and len(spec.tones) >= 2
    rows = []
    for t in tfrs:
        fam = "WT" if window.is_wavelet else "WFT"
        for ci, truth in enumerate(truths):
            if two_tone:
                curve = extract_tfs(t, "frequency", truth.nu, n_dominant=len(spec.tones), threshold=thr)
            else:
                curve = extract_tfs(t, "maximum", threshold=thr)
            recs = _reconstruct_all(t, curve, hybrid and not t.is_squeezed)
            for method, rec in recs.items():
                try:
                    err = error_metrics(rec, truth, fam, excl)
                except ValueError:
                    err = _nan_errors()
                if t.is_squeezed and method == "ridge":
                    err = type(err)(np.nan, err.eps_phi, err.eps_f)
                row = _flat(pt, cfg)
                row.update(transform=t.kind, component=ci, method=rec.method, **_errors_row(err))
                rows.append(row)
    return rows


def _run_recon_surface(cfg, pt):
    return {"errors": _run_recon(cfg, pt)}


def _run_noise(cfg, pt):
    per = [_run_recon(cfg, pt, k) for k in range(cfg.n_seeds)]
    out = []
    for i, base in enumerate(per[0]):
        vals = np.array([[p[i]["eps_a"], p[i]["eps_phi"], p[i]["eps_f"]] for p in per])
        mean = np.nanmean(vals, axis=0) if np.any(np.isfinite(vals)) else np.full(3, np.nan)
        row = {k: v for k, v in base.items() if not k.startswith("eps_")}
        row.update(n_seeds=cfg.n_seeds, seed_first=cfg.seed, eps_a=mean[0], eps_phi=mean[1], eps_f=mean[2],
                   eps_a_report=format_error(mean[0]), eps_phi_report=format_error(mean[1]),
                   eps_f_report=format_error(mean[2]))
        out.append(row)
    return {"noise": out}


def _run_adapt_f0(cfg, pt):
    spec = build_signal(pt["signal"])
    sig, truths = synthesize(spec, cfg.fs, cfg.duration)
    probe = WindowSpec(pt["window"], 1.0)
    g = cfg.grid
    if "fmin" in g and "fmax" in g:
        grid = _grid_for(cfg, probe, spec, truths)
    elif probe.is_wavelet:
        grid = FrequencyGrid.log(2 * np.pi * cfg.fs / 1000, np.pi * cfg.fs, float(g.get("n_voices", DEFAULT_VOICES)))
    else:
        grid = FrequencyGrid.linear(0.0, np.pi * cfg.fs, 2 * np.pi * float(g.get("delta_f", 0.01)))
    curves, summary = [], []
    rng = cfg.extra.get("search_range")
    for p, q in cfg.extra.get("pq", [[1, 2]]):
        res = optimize_f0(sig, pt["window"], grid, float(p), float(q), int(cfg.constants["n_tilde_v"]), rng,
                          cfg.padding)
        for f0, F in zip(res.f0_grid, res.F_values):
            row = _flat(pt, cfg)
            row.update(p=p, q=q, f0_trial=f0, F=F)
            curves.append(row)
        row = _flat(pt, cfg)
        row.update(p=p, q=q, f0_min=res.bounds[0], f0_max=res.bounds[1], f0_opt=res.f0_opt, F_opt=res.F_opt,
                   boundary=res.at_boundary or "interior")
        case = _regime_case(spec)
        if case:
            rcfg = dict(pt, f0=res.f0_opt)
            row["regime_at_opt"] = _run_regime(cfg, rcfg)["regimes"][0]["regime"]
        summary.append(row)
    return {"f0_curves": curves, "f0_summary": summary}


def _run_adapt_method(cfg, pt):
    window = WindowSpec(pt["window"], pt["f0"])
    spec = build_signal(pt["signal"])
    sig, truths = synthesize(spec, cfg.fs, cfg.duration)
    grid = _grid_for(cfg, window, spec, truths)
    hybrid = not window.D_h_finite
    tfr = compute_tfr(sig, window, grid, cfg.padding, derivative=hybrid)
    curve = extract_tfs(tfr, "maximum", threshold=float(cfg.constants["peak_threshold"]))
    ifm = inst_freq_map(tfr) if hybrid else None
    recs = _reconstruct_all(tfr, curve, hybrid)
    choice = adaptive_select(tfr, curve, recs["direct"], recs["ridge"], tuple(cfg.constants["kappa_direct"]),
                             tuple(cfg.constants["kappa_ridge"]), ifm=ifm)
    fam = "WT" if window.is_wavelet else "WFT"
    excl = _exclude(cfg, len(sig))
    errs = {m: error_metrics(r, truths[0], fam, excl).as_tuple() for m, r in recs.items()}
    rows = []
    for i, par in enumerate(("A", "phi", "nu")):
        row = _flat(pt, cfg)
        row.update(parameter=par, chosen=choice.methods[par],
                   disc_direct=choice.discrepancies["direct"][i], disc_ridge=choice.discrepancies["ridge"][i],
                   err_direct=errs["direct"][i], err_ridge=errs["ridge"][i],
                   best_true="direct" if errs["direct"][i] < errs["ridge"][i] else "ridge")
        rows.append(row)
    return {"adaptive": rows}


def _dump_dir(cfg, out_dir):
    return Path(out_dir) / "tfr" if out_dir else None


def _run_skeleton(cfg, pt, out_dir=None):
    window = WindowSpec(pt["window"], pt["f0"])
    spec = build_signal(pt["signal"])
    sig, truths = synthesize(spec, cfg.fs, cfg.duration)
    grid = _grid_for(cfg, window, spec, truths)
    hybrid = not window.D_h_finite
    tfr = compute_tfr(sig, window, grid, cfg.padding, derivative=hybrid)
    ifm = inst_freq_map(tfr) if hybrid else None
    rows = []
    thr = float(cfg.constants["peak_threshold"])
    for method in cfg.extra.get("methods", ["ridge", "direct"]):
        sk = build_skeleton(tfr, method, ifm)
        nz = np.abs(sk.values) > 0
        row = _flat(pt, cfg)
        row.update(method=method, mean_peaks=mean_peak_count(tfr, thr), mean_entries=float(nz.sum(axis=0).mean()))
        rows.append(row)
        dd = _dump_dir(cfg, out_dir)
        if dd is not None and cfg.extra.get("dump", True):
            io.write_tfr(dd / f"point{pt['index']:04d}_skeleton_{method}.tfr", sk, {"point": pt["params"]})
    return {"skeleton": rows}


def _run_single(cfg, pt, out_dir=None):
    window = WindowSpec(pt["window"], pt["f0"])
    spec = build_signal(pt["signal"])
    sig, truths = synthesize(spec, cfg.fs, cfg.duration)
    grid = _grid_for(cfg, window, spec, truths)
    transforms = cfg.extra.get("transforms", ["plain"])
    squeeze = "squeezed" in transforms
    tfr = compute_tfr(sig, window, grid, cfg.padding, derivative=squeeze)
    thr = float(cfg.constants["peak_threshold"])
    excl = _exclude(cfg, len(sig))
    out = [tfr] + ([synchrosqueeze(tfr, inst_freq_map(tfr))] if squeeze else [])
    rows = []
    for t in out:
        mask = peak_mask(t.amplitude, thr)
        counts = mask.sum(axis=0)
        if excl:
            counts = counts[excl:counts.size - excl]
        row = _flat(pt, cfg)
        row.update(transform=t.kind, n_bins=t.shape[0], n_time=t.shape[1], mean_peaks=float(counts.mean()),
                   max_peaks=int(counts.max()), min_peaks=int(counts.min()))
        rows.append(row)
        dd = _dump_dir(cfg, out_dir)
        if dd is not None and cfg.extra.get("dump", True):
            io.write_tfr(dd / f"point{pt['index']:04d}_{t.kind}.tfr", t, {"point": pt["params"], "signal": pt["signal"]})
    return {"single": rows}


_RUNNERS = {
    "RegimeMap": _run_regime,
    "ReconSurface": _run_recon_surface,
    "NoiseSweep": _run_noise,
    "AdaptF0": _run_adapt_f0,
    "AdaptMethod": _run_adapt_method,
    "SkeletonDemo": _run_skeleton,
    "SingleRun": _run_single,
}


def run_point(cfg: ExperimentConfig, pt: dict, out_dir=None) -> dict:
    """Run one sweep point; returns ``{table name: rows}``."""
    fn = _RUNNERS[cfg.kind]
    if cfg.kind in ("SkeletonDemo", "SingleRun"):
        return fn(cfg, pt, out_dir)
    return fn(cfg, pt)


def tfr_for_point(cfg: ExperimentConfig, pt: dict, squeezed: bool = False):
    """TFR (and optionally its synchrosqueezed version) of one point's signal."""
    window = WindowSpec(pt["window"], pt["f0"])
    spec = build_signal(pt["signal"])
    sig, truths = synthesize(spec, cfg.fs, cfg.duration)
    grid = _grid_for(cfg, window, spec, truths)
    tfr = compute_tfr(sig, window, grid, cfg.padding, derivative=squeezed)
    out = [tfr]
    if squeezed:
        out.append(synchrosqueeze(tfr, inst_freq_map(tfr)))
    return out
