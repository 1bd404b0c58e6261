"""Test-signal models with ground-truth amplitude, phase and frequency tracks.

All frequencies are angular (rad/s).  Signals are rendered on an absolute
sample index ``n`` (time ``n / fs``), which lets exact padding synthesize the
true continuation of a record on either side without changing the record.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.special import jv

__all__ = [
    "SpecError",
    "Tone",
    "MultiTone",
    "AM",
    "FM",
    "NoisyTone",
    "Delta",
    "Composite",
    "SignalSpec",
    "RealSignal",
    "ComponentTrack",
    "synthesize",
    "render",
    "bessel_expansion",
    "am_as_tones",
    "fm_as_tones",
    "spec_from_dict",
    "spec_to_dict",
]

EPS_J = 0.02


class SpecError(ValueError):
    """A signal specification violates one of its defining inequalities."""


@dataclass(frozen=True)
class Tone:
    a: float
    nu: float
    phi: float = 0.0


@dataclass(frozen=True)
class MultiTone:
    tones: tuple

    def __post_init__(self):
        object.__setattr__(self, "tones", tuple(t if isinstance(t, Tone) else Tone(*t) for t in self.tones))

    def validate(self):
        if not self.tones:
            raise SpecError("MultiTone needs at least one tone")
        nus = np.array([t.nu for t in self.tones])
        if any(t.a < 0 for t in self.tones):
            raise SpecError("MultiTone amplitudes must satisfy a_m >= 0")
        if np.any(nus <= 0):
            raise SpecError("MultiTone frequencies must satisfy nu_m > 0")
        if np.any(np.diff(nus) <= 0):
            raise SpecError("MultiTone frequencies must be strictly increasing")


@dataclass(frozen=True)
class AM:
    """A[1 + r_a cos(ν_a t + φ_a)] cos(ν t + φ)."""

    A: float
    r_a: float
    nu_a: float
    nu: float
    phi_a: float = 0.0
    phi: float = 0.0

    def validate(self):
        if self.A <= 0:
            raise SpecError("AM amplitude must satisfy A > 0")
        if not 0 <= self.r_a <= 1:
            raise SpecError("AM modulation depth must satisfy 0 <= r_a <= 1")
        if not 0 <= self.nu_a < self.nu:
            raise SpecError("AM modulation frequency must satisfy 0 <= nu_a < nu")


@dataclass(frozen=True)
class FM:
    """A cos(ν t + φ + r_b sin(ν_b t + φ_b))."""

    A: float
    r_b: float
    nu_b: float
    nu: float
    phi_b: float = 0.0
    phi: float = 0.0
    eps_J: float = EPS_J

    def validate(self):
        if self.A <= 0:
            raise SpecError("FM amplitude must satisfy A > 0")
        if self.r_b < 0 or self.nu_b < 0:
            raise SpecError("FM parameters must satisfy r_b >= 0 and nu_b >= 0")
        if not self.r_b * self.nu_b < self.nu:
            raise SpecError("FM frequency deviation must satisfy r_b*nu_b < nu")
        _, n_J = bessel_expansion(self.r_b, self.eps_J)
        if not n_J * self.nu_b < self.nu:
            raise SpecError("FM sidebands must stay positive: n_J(r_b)*nu_b < nu")


@dataclass(frozen=True)
class NoisyTone:
    """amplitude·cos(ν t + φ) + (σ/√2)·ζ(t) with unit-variance white Gaussian ζ.

    ``amplitude=0`` gives pure noise, which is how noise is added to other
    components inside a :class:`Composite`.
    """

    nu: float
    sigma: float
    rng_seed: int = 0
    amplitude: float = 1.0
    phi: float = 0.0

    def validate(self):
        if self.sigma < 0:
            raise SpecError("noise level must satisfy sigma >= 0")
        if self.amplitude < 0:
            raise SpecError("tone amplitude must satisfy amplitude >= 0")
        if self.amplitude > 0 and self.nu <= 0:
            raise SpecError("tone frequency must satisfy nu > 0")


@dataclass(frozen=True)
class Delta:
    """Discrete pulse adding ``height`` (default √N for an N-sample record) at time t0."""

    t0: float
    height: float | None = None

    def validate(self):
        pass


@dataclass(frozen=True)
class Composite:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    def validate(self):
        if not self.parts:
            raise SpecError("Composite needs at least one part")
        for p in self.parts:
            p.validate()


SignalSpec = Union[MultiTone, AM, FM, NoisyTone, Delta, Composite]


@dataclass
class RealSignal:
    """Uniformly sampled real record.

    ``spec`` and ``call_index`` are kept when the record was synthesized, so
    that exact padding can regenerate its continuation.
    """

    samples: np.ndarray
    fs: float
    t0: float = 0.0
    spec: SignalSpec | None = None
    call_index: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not self.fs > 0:
            raise ValueError("fs must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    def __len__(self):
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.fs

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs


@dataclass
class ComponentTrack:
    """Amplitude, unwrapped phase and frequency of one component over time.

    ``gap`` marks times with no estimate; optional derivative arrays carry
    exact truth derivatives for the built-in models.
    """

    t: np.ndarray
    A: np.ndarray
    phi: np.ndarray
    nu: np.ndarray
    method: str = "truth"
    transform: str = ""
    gap: np.ndarray | None = None
    derivatives: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.A = np.asarray(self.A, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        self.nu = np.asarray(self.nu, dtype=float)
        n = self.t.size
        if not (self.A.size == self.phi.size == self.nu.size == n):
            raise ValueError("track arrays must have equal lengths")
        if self.gap is None:
            self.gap = np.zeros(n, dtype=bool)
        else:
            self.gap = np.asarray(self.gap, dtype=bool)
        if np.any(self.A[~self.gap] < 0):
            raise ValueError("track amplitude must be non-negative")

    def __len__(self):
        return self.t.size

    def slice(self, sl) -> "ComponentTrack":
        return ComponentTrack(
            self.t[sl], self.A[sl], self.phi[sl], self.nu[sl], self.method, self.transform, self.gap[sl],
            {k: v[sl] for k, v in self.derivatives.items()},
        )


def bessel_expansion(r_b: float, eps_J: float = EPS_J):
    """Bessel coefficients of e^{i r_b sin x} truncated at n_J = max{n : J_n(r_b) > eps_J}.

    Returns:
        (coeffs, n_J) where ``coeffs`` maps n in [-n_J, n_J] to J_n(r_b).
    """
    if r_b < 0:
        raise ValueError("r_b must be non-negative")
    if not 0 < eps_J < 1:
        raise ValueError("eps_J must lie in (0, 1)")
    n_max = int(np.ceil(r_b)) + 30
    vals = jv(np.arange(n_max + 1), r_b)
    above = np.nonzero(vals > eps_J)[0]
    n_J = int(above.max()) if above.size else 0
    coeffs = {0: float(vals[0])}
    for n in range(1, n_J + 1):
        coeffs[n] = float(vals[n])
        coeffs[-n] = float((-1) ** n * vals[n])
    return coeffs, n_J


def am_as_tones(spec: AM) -> MultiTone:
    """Three-tone form of an AM component, ordered by frequency."""
    side = spec.A * spec.r_a / 2
    return MultiTone((
        Tone(side, spec.nu - spec.nu_a, spec.phi - spec.phi_a),
        Tone(spec.A, spec.nu, spec.phi),
        Tone(side, spec.nu + spec.nu_a, spec.phi + spec.phi_a),
    ))


def fm_as_tones(spec: FM, eps_J: float | None = None) -> MultiTone:
    """Truncated Bessel-sideband form of an FM component (2·n_J + 1 tones)."""
    coeffs, n_J = bessel_expansion(spec.r_b, spec.eps_J if eps_J is None else eps_J)
    tones = []
    for n in range(-n_J, n_J + 1):
        c = coeffs[n]
        phase = spec.phi + n * spec.phi_b + (np.pi if c < 0 else 0.0)
        tones.append(Tone(spec.A * abs(c), spec.nu + n * spec.nu_b, phase))
    return MultiTone(tuple(tones))


def _noise_block(seed, call_index, stream, count):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(call_index), stream))
    return np.random.default_rng(ss).standard_normal(count)


def _noise(seed, call_index, n, n_center):
    # stream 0 covers the record, 1 extends it backwards, 2 forwards; each is a
    # prefix-stable sequence, so a longer pad never changes existing samples
    out = np.empty(n.size)
    left, mid, right = n < 0, (n >= 0) & (n < n_center), n >= n_center
    if np.any(mid):
        out[mid] = _noise_block(seed, call_index, 0, n_center)[n[mid]]
    if np.any(left):
        k = -n[left] - 1
        out[left] = _noise_block(seed, call_index, 1, int(k.max()) + 1)[k]
    if np.any(right):
        k = n[right] - n_center
        out[right] = _noise_block(seed, call_index, 2, int(k.max()) + 1)[k]
    return out


def render(spec: SignalSpec, fs: float, n: np.ndarray, n_center: int, call_index: int = 0) -> np.ndarray:
    """Samples of ``spec`` at absolute indices ``n`` (time ``n / fs``).

    ``n_center`` is the length of the reference record; it fixes the default
    pulse height and the layout of the noise streams.
    """
    n = np.asarray(n, dtype=np.int64)
    t = n / fs
    if isinstance(spec, MultiTone):
        out = np.zeros(t.size)
        for tone in spec.tones:
            out += tone.a * np.cos(tone.nu * t + tone.phi)
        return out
    if isinstance(spec, AM):
        amp = spec.A * (1 + spec.r_a * np.cos(spec.nu_a * t + spec.phi_a))
        return amp * np.cos(spec.nu * t + spec.phi)
    if isinstance(spec, FM):
        return spec.A * np.cos(spec.nu * t + spec.phi + spec.r_b * np.sin(spec.nu_b * t + spec.phi_b))
    if isinstance(spec, NoisyTone):
        out = spec.amplitude * np.cos(spec.nu * t + spec.phi)
        if spec.sigma > 0:
            out = out + spec.sigma / np.sqrt(2) * _noise(spec.rng_seed, call_index, n, n_center)
        return out
    if isinstance(spec, Delta):
        height = np.sqrt(n_center) if spec.height is None else spec.height
        return np.where(n == int(round(spec.t0 * fs)), height, 0.0)
    if isinstance(spec, Composite):
        out = np.zeros(t.size)
        for part in spec.parts:
            out += render(part, fs, n, n_center, call_index)
        return out
    raise TypeError(f"unsupported signal spec {type(spec).__name__}")


def _tracks(spec: SignalSpec, t: np.ndarray) -> list[ComponentTrack]:
    zeros = np.zeros_like(t)
    if isinstance(spec, MultiTone):
        return [
            ComponentTrack(t, np.full_like(t, tone.a), tone.nu * t + tone.phi, np.full_like(t, tone.nu),
                           derivatives={"dA": zeros, "d2A": zeros, "dnu": zeros, "d2nu": zeros})
            for tone in spec.tones
        ]
    if isinstance(spec, AM):
        arg = spec.nu_a * t + spec.phi_a
        amp = spec.A * (1 + spec.r_a * np.cos(arg))
        der = {
            "dA": -spec.A * spec.r_a * spec.nu_a * np.sin(arg),
            "d2A": -spec.A * spec.r_a * spec.nu_a**2 * np.cos(arg),
            "dnu": zeros,
            "d2nu": zeros,
        }
        return [ComponentTrack(t, amp, spec.nu * t + spec.phi, np.full_like(t, spec.nu), derivatives=der)]
    if isinstance(spec, FM):
        arg = spec.nu_b * t + spec.phi_b
        der = {
            "dA": zeros,
            "d2A": zeros,
            "dnu": -spec.r_b * spec.nu_b**2 * np.sin(arg),
            "d2nu": -spec.r_b * spec.nu_b**3 * np.cos(arg),
        }
        phase = spec.nu * t + spec.phi + spec.r_b * np.sin(arg)
        nu = spec.nu + spec.r_b * spec.nu_b * np.cos(arg)
        return [ComponentTrack(t, np.full_like(t, spec.A), phase, nu, derivatives=der)]
    if isinstance(spec, NoisyTone):
        if spec.amplitude == 0:
            return []
        return _tracks(MultiTone((Tone(spec.amplitude, spec.nu, spec.phi),)), t)
    if isinstance(spec, Delta):
        return []
    if isinstance(spec, Composite):
        out = []
        for part in spec.parts:
            out.extend(_tracks(part, t))
        return out
    raise TypeError(f"unsupported signal spec {type(spec).__name__}")


def synthesize(spec: SignalSpec, fs: float, duration: float, call_index: int = 0):
    """Render ``spec`` on ``[0, duration)`` at ``fs`` Hz.

    Returns:
        (RealSignal, list of truth ComponentTrack, one per deterministic component)

    Raises:
        SpecError: if the spec violates its invariants.
    """
    spec.validate()
    if not fs > 0 or not duration > 0:
        raise SpecError("fs and duration must be positive")
    n_samples = int(round(duration * fs))
    if n_samples < 2:
        raise SpecError("record must contain at least two samples")
    n = np.arange(n_samples)
    samples = render(spec, fs, n, n_samples, call_index)
    sig = RealSignal(samples, fs, 0.0, spec, call_index)
    return sig, _tracks(spec, n / fs)


_SPEC_TYPES = {cls.__name__: cls for cls in (MultiTone, AM, FM, NoisyTone, Delta, Composite)}
_FREQ_FIELDS = {"nu", "nu_a", "nu_b"}


def spec_to_dict(spec: SignalSpec) -> dict:
    """Structured (JSON/YAML-ready) form of a signal spec."""
    if isinstance(spec, Composite):
        return {"type": "Composite", "parts": [spec_to_dict(p) for p in spec.parts]}
    if isinstance(spec, MultiTone):
        return {"type": "MultiTone", "tones": [[t.a, t.nu, t.phi] for t in spec.tones]}
    d = asdict(spec)
    d["type"] = type(spec).__name__
    return d


def spec_from_dict(d: dict) -> SignalSpec:
    """Inverse of :func:`spec_to_dict`.

    Frequency fields may also be given in Hz with a ``_hz`` suffix
    (``nu_hz: 2`` is ``nu: 4π``); MultiTone tones accept ``{a, nu_hz, phi}`` maps.
    """
    d = dict(d)
    try:
        kind = d.pop("type")
    except KeyError:
        raise SpecError("signal spec needs a 'type' field") from None
    if kind not in _SPEC_TYPES:
        raise SpecError(f"unknown signal type {kind!r}; expected one of {sorted(_SPEC_TYPES)}")
    if kind == "Composite":
        return Composite(tuple(spec_from_dict(p) for p in d.get("parts", [])))
    if kind == "MultiTone":
        tones = []
        for t in d.get("tones", []):
            if isinstance(t, dict):
                t = _hz_fields(t)
                tones.append(Tone(float(t["a"]), float(t["nu"]), float(t.get("phi", 0.0))))
            else:
                tones.append(Tone(*map(float, t)))
        return MultiTone(tuple(tones))
    d = _hz_fields(d)
    try:
        return _SPEC_TYPES[kind](**d)
    except TypeError as exc:
        raise SpecError(f"{kind}: {exc}") from None


def _hz_fields(d: dict) -> dict:
    d = dict(d)
    for key in list(d):
        if key.endswith("_hz") and key[:-3] in _FREQ_FIELDS | {"nu"}:
            d[key[:-3]] = 2 * np.pi * float(d.pop(key))
    return d


def sum_signals(parts: Sequence[RealSignal]) -> RealSignal:
    """Sample-wise sum of records sharing fs and length (spec is dropped)."""
    fs = parts[0].fs
    return RealSignal(np.sum([p.samples for p in parts], axis=0), fs, parts[0].t0)
