"""Reflection/transmission channels and the power-line noise model.

Signals are referred to a 1-ohm load, so power is mean-square amplitude in
watts; dBm quantities convert through milliwatts.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

# Phase velocities (m/s) of the reference cables.
V_P_LV = 1.50e8  # NAYY150SE underground low-voltage cable
V_P_MV = 2.56e8  # overhead medium-voltage cable


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0


def phase_velocity(inductance_per_m: float, capacitance_per_m: float) -> float:
    """Lossless-line phase velocity ``1 / sqrt(L' C')`` in m/s."""
    if inductance_per_m <= 0 or capacitance_per_m <= 0:
        raise ValueError("per-unit-length inductance and capacitance must be > 0")
    return 1.0 / np.sqrt(inductance_per_m * capacitance_per_m)


@dataclass(frozen=True)
class ChannelTaps:
    """Sparse echo list: ``taps[i] = (arrival time in s, attenuation)``."""

    taps: tuple

    def __post_init__(self):
        taps = tuple((float(t), float(a)) for t, a in self.taps)
        if not taps:
            raise ValueError("a channel needs at least one tap")
        times = np.array([t for t, _ in taps])
        if np.any(times < 0):
            raise ValueError("tap arrival times must be >= 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("tap arrival times must be strictly increasing")
        if any(abs(a) > 1.0 for _, a in taps):
            raise ValueError("tap attenuation magnitudes must be <= 1")
        object.__setattr__(self, "taps", taps)

    @classmethod
    def from_unsorted(cls, taps) -> "ChannelTaps":
        """Sort by delay and merge exactly coincident arrivals."""
        merged: dict[float, float] = {}
        for t, a in taps:
            merged[float(t)] = merged.get(float(t), 0.0) + float(a)
        return cls(tuple(sorted(merged.items())))

    def __len__(self):
        return len(self.taps)


@dataclass(frozen=True)
class ImpulseResponse:
    """Sampled channel ``h`` with trailing zeros trimmed (at least one sample)."""

    h: np.ndarray
    sample_period: float

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.h, dtype=np.float64))
        if h.ndim != 1 or h.size == 0:
            raise ValueError("impulse response must be a non-empty 1-D sequence")
        nz = np.flatnonzero(h)
        h = h[: nz[-1] + 1] if nz.size else h[:1]
        h = h.copy()
        h.setflags(write=False)
        object.__setattr__(self, "h", h)
        if self.sample_period <= 0:
            raise ValueError("sample period must be > 0")

    @property
    def length(self) -> int:
        return int(self.h.size)

    def padded(self, length: int) -> np.ndarray:
        if length < self.length:
            raise ValueError(f"cannot zero-pad a length-{self.length} response to {length}")
        out = np.zeros(length)
        out[: self.length] = self.h
        return out


def taps_to_impulse(taps: ChannelTaps, sample_rate: float) -> ImpulseResponse:
    """Place each echo on the nearest sample; coincident samples add."""
    if sample_rate <= 0:
        raise ValueError("sample rate must be > 0")
    if not len(taps):
        raise ValueError("empty tap list")
    idx = np.array([int(np.rint(t * sample_rate)) for t, _ in taps.taps])
    amp = np.array([a for _, a in taps.taps])
    h = np.zeros(idx.max() + 1)
    np.add.at(h, idx, amp)
    return ImpulseResponse(h, 1.0 / sample_rate)


@dataclass(frozen=True)
class SensingScenario:
    """``channels[i][j]``: injected by modem ``j``, received by modem ``i``."""

    channels: tuple
    v_p: float = V_P_MV
    coherence_time: float = 10e-3

    def __post_init__(self):
        grid = tuple(tuple(row) for row in self.channels)
        n = len(grid)
        if n == 0 or any(len(row) != n for row in grid):
            raise ValueError("channel grid must be a complete square grid")
        for row in grid:
            for h in row:
                if not isinstance(h, ImpulseResponse):
                    raise TypeError("channel grid entries must be ImpulseResponse")
        object.__setattr__(self, "channels", grid)

    @property
    def n_plm(self) -> int:
        return len(self.channels)

    @property
    def max_length(self) -> int:
        """``L_h,max`` over every (observer, injector) pair."""
        return max(h.length for row in self.channels for h in row)

    def h(self, observer: int, injector: int) -> ImpulseResponse:
        return self.channels[observer][injector]

    @classmethod
    def from_taps(cls, taps_grid, sample_rate: float, **kwargs) -> "SensingScenario":
        grid = [[taps_to_impulse(t, sample_rate) for t in row] for row in taps_grid]
        return cls(grid, **kwargs)


def _junction_transmission(gamma: float) -> float:
    # Lossless symmetric two-port: S = [[g, t], [t, -g]] with t = sqrt(1 - g^2).
    return float(np.sqrt(1.0 - gamma * gamma))


def two_segment_paths(d_a, d_b, v_p, reflection_coeffs, bounce_order, source, observer):
    """Enumerate echo paths on a line with ends at 0 and ``d_a + d_b``.

    The junction at ``d_a`` is a symmetric lossless discontinuity; the two ends
    reflect with their own coefficients. ``reflection_coeffs`` is
    ``(end_a, junction, end_b)``. ``source``/``observer`` are 0 (end A) or
    1 (end B). Returns ``[(delay_s, amplitude, n_reflections)]`` for every
    arrival at the observer with at most ``bounce_order`` reflections.
    """
    g_a, g_j, g_b = (float(g) for g in reflection_coeffs)
    length = d_a + d_b
    has_junction = d_b > 0
    ends = (0.0, length)
    arrivals = []

    # state: (position, heading +1/-1, elapsed distance, amplitude, reflections)
    start = ends[source]
    stack = [(start, +1 if source == 0 else -1, 0.0, 1.0, 0)]
    while stack:
        pos, heading, dist, amp, order = stack.pop()
        if amp == 0.0:
            continue
        # next discontinuity along the heading
        if has_junction and ((heading > 0 and pos < d_a) or (heading < 0 and pos > d_a)):
            nxt = d_a
        else:
            nxt = length if heading > 0 else 0.0
        dist += abs(nxt - pos)
        if nxt == d_a and has_junction:
            # reflection seen from the left is g_j, from the right -g_j
            g = g_j if heading > 0 else -g_j
            stack.append((nxt, heading, dist, amp * _junction_transmission(g_j), order))
            if order < bounce_order:
                stack.append((nxt, -heading, dist, amp * g, order + 1))
            continue
        end_index = 0 if nxt == 0.0 else 1
        if end_index == observer:
            arrivals.append((dist / v_p, amp, order))
        if order < bounce_order:
            g = g_a if end_index == 0 else g_b
            stack.append((nxt, -heading, dist, amp * g, order + 1))
    return arrivals


def build_two_segment_scenario(
    d_a: float,
    d_b: float,
    v_p: float,
    reflection_coeffs,
    bounce_order: int,
    sample_rate: float,
    direct_coupling: float = 0.0,
    max_delay: float = 1e-3,
    coherence_time: float = 10e-3,
) -> tuple[SensingScenario, list]:
    """Two modems at the ends of a line with one junction.

    ``d_b == 0`` gives a single segment of length ``d_a``. Every reflectogram
    carries a direct coupling tap at delay 0 (amplitude ``direct_coupling``),
    so tap lists are never empty.

    Returns the scenario and the 2x2 grid of :class:`ChannelTaps` it was
    sampled from.

    Raises:
        ValueError: on invalid geometry/coefficients, or when an enumerated
            echo arrives later than ``max_delay``.
    """
    if d_a <= 0 or d_b < 0:
        raise ValueError("segment lengths must be positive (d_b may be 0)")
    if v_p <= 0 or sample_rate <= 0:
        raise ValueError("phase velocity and sample rate must be > 0")
    coeffs = tuple(float(g) for g in reflection_coeffs)
    if len(coeffs) != 3 or any(abs(g) > 1 for g in coeffs):
        raise ValueError("need three reflection coefficients (end A, junction, end B) with |g| <= 1")
    if bounce_order < 1:
        raise ValueError("bounce_order must be >= 1")

    taps_grid = []
    for observer in (0, 1):
        row = []
        for source in (0, 1):
            paths = two_segment_paths(d_a, d_b, v_p, coeffs, bounce_order, source, observer)
            late = [p for p in paths if p[0] > max_delay]
            if late:
                raise ValueError(
                    f"bounce_order={bounce_order} yields echoes up to "
                    f"{max(p[0] for p in late):.3e} s, beyond max_delay={max_delay:.3e} s"
                )
            if observer == source:
                paths = paths + [(0.0, direct_coupling, 0)]
            row.append(ChannelTaps.from_unsorted((t, a) for t, a, _ in paths))
        taps_grid.append(row)
    scenario = SensingScenario.from_taps(
        taps_grid, sample_rate, v_p=v_p, coherence_time=coherence_time
    )
    return scenario, taps_grid


def reference_scenario(n_plm: int, sample_rate: float = 1e6, v_p: float = V_P_MV) -> SensingScenario:
    """Synthetic distributed-sensing scenario with equal-energy reflectograms.

    Every modem sees the same echo profile (coupling mismatch, a junction at
    1 km and a line end 1.73 km further), so per-modem SINR differences come
    from the access scheme and the noise only. Transferograms are single
    attenuated arrivals whose delay grows with modem spacing.
    """
    if n_plm < 1:
        raise ValueError("n_plm must be >= 1")
    d_a, d_b = 1000.0, 1730.0
    reflect = ChannelTaps(
        (
            (0.0, 0.3),
            (2 * d_a / v_p, -0.45),
            (2 * (d_a + d_b) / v_p, 0.25),
        )
    )
    grid = []
    for i in range(n_plm):
        row = []
        for j in range(n_plm):
            if i == j:
                row.append(reflect)
            else:
                spacing = abs(i - j) * 400.0
                row.append(ChannelTaps(((spacing / v_p, 0.6 / abs(i - j)),)))
        grid.append(row)
    return SensingScenario.from_taps(grid, sample_rate, v_p=v_p)


def apply_channel(frame, h) -> np.ndarray:
    """Linear convolution with ``h``, truncated to the frame length."""
    x = np.asarray(frame, dtype=np.float64)
    taps = h.h if isinstance(h, ImpulseResponse) else np.asarray(h, dtype=np.float64)
    if x.size == 0 or taps.size == 0:
        raise ValueError("frame and channel must be non-empty")
    return np.convolve(x, taps)[: x.size]


class NoiseKind(str, Enum):
    EXPONENTIAL_PSD = "exponential-psd"
    FLAT = "flat"
    NONE = "none"


@dataclass(frozen=True)
class NoiseModel:
    """One-sided noise PSD ``a + b * exp(-c * f / 1e3)`` in dBm/Hz.

    ``flat`` uses the constant ``a``; ``none`` disables noise.
    """

    kind: NoiseKind = NoiseKind.EXPONENTIAL_PSD
    a: float = -93.0
    b: float = 52.98
    c: float = 0.0032

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))

    def psd_dbm_per_hz(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if self.kind is NoiseKind.EXPONENTIAL_PSD:
            return self.a + self.b * np.exp(-self.c * f / 1e3)
        if self.kind is NoiseKind.FLAT:
            return np.full_like(f, self.a)
        return np.full_like(f, -np.inf)

    def psd_watts_per_hz(self, f) -> np.ndarray:
        return dbm_to_watts(self.psd_dbm_per_hz(f))

    def power(self, sample_rate: float, n_points: int = 20001) -> float:
        """Total noise power (W) over ``[0, sample_rate / 2]``."""
        f = np.linspace(0.0, sample_rate / 2, n_points)
        return float(np.trapezoid(self.psd_watts_per_hz(f), f))


def generate_noise(model: NoiseModel, sample_rate: float, length: int, seed) -> np.ndarray:
    """Gaussian noise with the model's one-sided PSD.

    White complex Gaussian bins are shaped in the frequency domain (Hermitian
    symmetric, real DC and Nyquist bins) so that each bin's expected
    periodogram equals the PSD at the bin frequency.
    """
    if length <= 0 or length % 2:
        raise ValueError("noise length must be a positive even integer")
    if sample_rate <= 0:
        raise ValueError("sample rate must be > 0")
    if model.kind is NoiseKind.NONE:
        return np.zeros(length)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return _shaped_noise(model, sample_rate, length, rng)


def _shaped_noise(model, sample_rate, length, rng):
    half = length // 2
    freqs = np.arange(half + 1) * sample_rate / length
    # E|X_k|^2 = S(f_k) * Fs * M / 2 for the one-sided PSD S
    var = model.psd_watts_per_hz(freqs) * sample_rate * length / 2.0
    spec = np.sqrt(var / 2.0) * (rng.standard_normal(half + 1) + 1j * rng.standard_normal(half + 1))
    spec[0] = np.sqrt(var[0]) * rng.standard_normal()
    spec[half] = np.sqrt(var[half]) * rng.standard_normal()
    return np.fft.irfft(spec, n=length)


def one_sided_periodogram(x, sample_rate: float) -> tuple[np.ndarray, np.ndarray]:
    """``2 |X_k|^2 / (Fs M)`` for ``k = 0..M/2`` (W/Hz), matching :func:`generate_noise`."""
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    spec = np.fft.rfft(x, axis=-1)
    freqs = np.arange(spec.shape[-1]) * sample_rate / m
    return freqs, 2.0 * np.abs(spec) ** 2 / (sample_rate * m)


def check_isi(h: ImpulseResponse, cp_length: int) -> bool:
    """Warn (not fail) when the channel outlasts the cyclic prefix."""
    ok = h.length <= cp_length + 1
    if not ok:
        warnings.warn(
            f"channel length {h.length} exceeds cp_length + 1 = {cp_length + 1}; "
            "inter-symbol interference expected",
            stacklevel=2,
        )
    return ok
