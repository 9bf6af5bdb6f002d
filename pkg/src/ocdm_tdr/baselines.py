"""HS-OFDM TDR baselines with TDMA, FDMA and CDMA multiple access.

Reflectograms are obtained by channel estimation: the received bins are
divided by the known BPSK pilots and an ``L_rho``-tap real impulse response is
fitted to the active bins by least squares. With every bin active this is the
plain inverse DFT truncated to ``L_rho`` taps.

FDMA per-symbol estimates only see one comb. They use the comb matched filter
(zero-filled inverse DFT), which weights every probed bin equally but is a
band-limited view of the channel; its noiseless output is carried as the
measurement ``reference``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.linalg import hadamard

from .chanmodel import NoiseModel, SensingScenario, apply_channel
from .tdr import (
    CampaignResult,
    Measurement,
    MeasurementKind,
    SystemParams,
    _average,
    received_noise,
    validate_configuration,
)

HERMITIAN_TOL = 1e-12


class Scheme(str, Enum):
    OCDM = "ocdm"
    TDMA = "tdma"
    FDMA = "fdma"
    CDMA = "cdma"


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def hermitian_spectrum(half) -> np.ndarray:
    """Full length-2N spectrum from bins ``0..N`` (bins 0 and N must be real)."""
    half = np.asarray(half, dtype=np.complex128)
    n = half.size - 1
    if abs(half[0].imag) > HERMITIAN_TOL or abs(half[n].imag) > HERMITIAN_TOL:
        raise ValueError("DC and Nyquist bins must be real")
    full = np.empty(2 * n, dtype=np.complex128)
    full[: n + 1] = half
    full[n + 1 :] = half[1:n][::-1].conj()
    return full


def _check_hermitian(spectrum: np.ndarray) -> None:
    mirrored = np.roll(spectrum[::-1], 1).conj()
    scale = max(np.linalg.norm(spectrum), 1.0)
    if np.linalg.norm(spectrum - mirrored) > HERMITIAN_TOL * scale:
        raise ValueError("spectrum is not Hermitian symmetric")


@dataclass(frozen=True)
class HsOfdmFrame:
    spectrum: np.ndarray
    time_body: np.ndarray
    cp_length: int

    @property
    def samples(self) -> np.ndarray:
        m = self.time_body.size
        return np.concatenate([self.time_body[m - self.cp_length :], self.time_body])


def hsofdm_modulate(pilot_spectrum, cp_length: int) -> HsOfdmFrame:
    """Unitary inverse DFT of a Hermitian spectrum plus cyclic prefix."""
    spec = np.asarray(pilot_spectrum, dtype=np.complex128)
    _check_hermitian(spec)
    if not 0 <= cp_length < spec.size:
        raise ValueError("cp_length must satisfy 0 <= cp_length < 2N")
    body = np.fft.ifft(spec, norm="ortho")
    if np.linalg.norm(body.imag) > 1e-12 * max(np.linalg.norm(body), 1.0):
        raise ArithmeticError("HS-OFDM body is not real")
    return HsOfdmFrame(spec.copy(), body.real.copy(), cp_length)


def hsofdm_demodulate(received, cp_length: int) -> np.ndarray:
    """Per-bin received values (unitary DFT of the CP-stripped body)."""
    r = np.asarray(received, dtype=np.float64)
    return np.fft.fft(r[..., cp_length:], axis=-1, norm="ortho")


@lru_cache(maxsize=256)
def _ls_operator(two_n: int, length: int, bins: tuple) -> np.ndarray:
    half = two_n // 2
    k = np.asarray(bins, dtype=float)[:, None]
    n = np.arange(length, dtype=float)[None, :]
    ang = 2 * np.pi * k * n / two_n
    # interior bins stand for a conjugate pair
    w = np.where((k[:, 0] == 0) | (k[:, 0] == half), 1.0, np.sqrt(2.0))[:, None]
    a = np.vstack([w * np.cos(ang), -w * np.sin(ang)])
    return np.linalg.pinv(a)


def estimate_reflectogram(received_spectrum, pilot_spectrum, length: int, bins=None) -> np.ndarray:
    """Least-squares ``length``-tap real channel fitted to the pilot bins.

    Only bins ``0..N`` with a nonzero pilot (and in ``bins``, when given) are
    used.
    """
    y = np.asarray(received_spectrum, dtype=np.complex128)
    x = np.asarray(pilot_spectrum, dtype=np.complex128)
    two_n = y.size
    half = two_n // 2
    candidates = np.arange(half + 1) if bins is None else np.asarray(sorted(bins))
    active = tuple(int(k) for k in candidates if abs(x[k]) > 0)
    if not active:
        raise ValueError("no active pilot bins")
    idx = np.array(active)
    h_bins = y[idx] / x[idx]
    w = np.where((idx == 0) | (idx == half), 1.0, np.sqrt(2.0))
    rhs = np.concatenate([w * h_bins.real, w * h_bins.imag])
    return _ls_operator(two_n, length, active) @ rhs


def comb_matched_filter(received_spectrum, pilot_spectrum, length: int) -> np.ndarray:
    """Zero-filled inverse DFT over the pilot bins, rescaled for the comb density."""
    y = np.asarray(received_spectrum, dtype=np.complex128)
    x = np.asarray(pilot_spectrum, dtype=np.complex128)
    mask = np.abs(x) > 0
    if not mask.any():
        raise ValueError("no active pilot bins")
    h_bins = np.zeros_like(y)
    h_bins[mask] = y[mask] / x[mask]
    full = np.fft.ifft(h_bins).real * (y.size / mask.sum())
    return full[:length]


def bpsk_pilot_spectrum(params: SystemParams, bins=None, pilot_seed: int = 0) -> np.ndarray:
    """Hermitian BPSK pilot spectrum at the transmit PSD.

    Each active full-circle bin carries power ``tx_power`` so that a frame
    using every bin has mean-square power ``tx_power``; fewer active bins
    scale the total down proportionally.
    """
    half = params.frame_size // 2
    signs = np.random.default_rng(pilot_seed).choice([-1.0, 1.0], size=half + 1)
    mask = np.zeros(half + 1, dtype=bool)
    mask[np.arange(half + 1) if bins is None else np.asarray(list(bins), dtype=int)] = True
    values = np.where(mask, signs * np.sqrt(params.tx_power), 0.0)
    return hermitian_spectrum(values)


def schedule_tdma(params: SystemParams, symbol_index: int) -> int:
    """Round robin: the single modem allowed to transmit in this symbol."""
    return symbol_index % params.n_plm


def fdma_comb(params: SystemParams, comb: int) -> np.ndarray:
    """Interleaved comb ``comb`` of the usable bins ``1..N-1``.

    Comb ``c`` starts at bin ``c + 1`` and repeats every ``n_plm`` bins.
    """
    half = params.frame_size // 2
    if params.n_plm > half - 1:
        raise ValueError(f"n_plm {params.n_plm} exceeds the {half - 1} usable bins")
    if not 0 <= comb < params.n_plm:
        raise IndexError(f"comb index {comb} outside 0..{params.n_plm - 1}")
    return np.arange(comb + 1, half, params.n_plm)


def fdma_fit_length(params: SystemParams) -> int:
    """Taps fitted to one comb: the window, capped at the ISI-free support."""
    return min(params.l_rho, params.cp_length + 1)


def allocate_fdma(params: SystemParams, modem: int, symbol_index: int) -> np.ndarray:
    """Cyclic comb hopping: modem ``u`` uses comb ``(u + symbol) mod n_plm``."""
    if not 0 <= modem < params.n_plm:
        raise IndexError(f"modem index {modem} outside 0..{params.n_plm - 1}")
    return fdma_comb(params, (modem + symbol_index) % params.n_plm)


def walsh_codes(n_plm: int) -> np.ndarray:
    """Rows are the +-1 Walsh-Hadamard spreading codes."""
    if not is_power_of_two(n_plm):
        raise ValueError(f"CDMA needs n_plm to be a power of two, got {n_plm}")
    return hadamard(n_plm).astype(float)


def spread_cdma(frames, code_matrix) -> np.ndarray:
    """Per-symbol transmit frames: ``out[s, u] = code[u, s] * frames[u]``."""
    frames = np.asarray(frames, dtype=float)
    codes = np.asarray(code_matrix, dtype=float)
    if codes.shape[0] != frames.shape[0]:
        raise ValueError("one code per modem frame required")
    return np.einsum("us,u...->su...", codes, frames)


def despread_cdma(received_symbols, code) -> np.ndarray:
    """Correlate a block of received symbols with one code and normalize."""
    r = np.asarray(received_symbols)
    code = np.asarray(code, dtype=float)
    if r.shape[0] != code.size:
        raise ValueError("block length must equal code length")
    return np.tensordot(code, r, axes=(0, 0)) / code.size


@dataclass
class BaselineResult(CampaignResult):
    # FDMA: (observer, injector, cycle) -> full-band estimate from one hop cycle
    reassembled: dict | None = None


def _tx(params, spectrum):
    return hsofdm_modulate(spectrum, params.cp_length).samples


def _received(params, scenario, frames, observer):
    out = np.zeros(params.symbol_samples)
    for u, frame in frames.items():
        out += apply_channel(frame, scenario.h(observer, u))
    return out


def _measurement(est, observer, injector, symbol, reference=None):
    kind = MeasurementKind.REFLECTOGRAM if observer == injector else MeasurementKind.TRANSFEROGRAM
    return Measurement(est, observer, injector, kind, symbol, reference=reference)


def run_campaign_baseline(
    scheme,
    params: SystemParams,
    scenario: SensingScenario,
    noise: NoiseModel,
    n_symbols: int,
    seed,
    pilot_seed: int = 0,
) -> BaselineResult:
    """HS-OFDM counterpart of :func:`ocdm_tdr.tdr.run_campaign`.

    TDMA yields one measurement set per symbol for the scheduled modem, FDMA
    one partial-band set per symbol for every modem, CDMA one set per
    ``n_plm``-symbol spreading block (``symbol_index`` is the block start).
    Windows hold channel estimates directly (``scale == 1``).
    """
    scheme = Scheme(scheme)
    if scheme is Scheme.OCDM:
        raise ValueError("use tdr.run_campaign for OCDM")
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    validate_configuration(params, scenario)
    n, lw = params.n_plm, params.l_rho
    measurements: list[Measurement] = []
    reassembled = None

    if scheme is Scheme.TDMA:
        pilot = bpsk_pilot_spectrum(params, pilot_seed=pilot_seed)
        frame = _tx(params, pilot)
        for s in range(n_symbols):
            u = schedule_tdma(params, s)
            for i in range(n):
                r = _received(params, scenario, {u: frame}, i) + received_noise(noise, params, seed, i, s)
                est = estimate_reflectogram(hsofdm_demodulate(r, params.cp_length), pilot, lw)
                measurements.append(_measurement(est, i, u, s))

    elif scheme is Scheme.FDMA:
        reassembled = {}
        partial: dict = {}
        fit = fdma_fit_length(params)
        for s in range(n_symbols):
            pilots = {u: bpsk_pilot_spectrum(params, allocate_fdma(params, u, s), pilot_seed) for u in range(n)}
            frames = {u: _tx(params, p) for u, p in pilots.items()}
            for i in range(n):
                r = _received(params, scenario, frames, i) + received_noise(noise, params, seed, i, s)
                y = hsofdm_demodulate(r, params.cp_length)
                for u in range(n):
                    if n == 1:
                        est, ref = estimate_reflectogram(y, pilots[u], lw), None
                    else:
                        h_bins = np.fft.fft(scenario.h(i, u).padded(params.frame_size))
                        est, ref = np.zeros(lw), np.zeros(lw)
                        est[:fit] = comb_matched_filter(y, pilots[u], fit)
                        ref[:fit] = comb_matched_filter(h_bins * pilots[u], pilots[u], fit)
                    measurements.append(_measurement(est, i, u, s, ref))
                    # per-bin values collected over the hop cycle
                    acc = partial.setdefault((i, u), [np.zeros_like(y), np.zeros_like(y)])
                    acc[0] += np.where(pilots[u] != 0, y, 0)
                    acc[1] += pilots[u]
            if (s + 1) % n == 0:
                cycle = s // n
                for key, (y_acc, x_acc) in partial.items():
                    reassembled[(*key, cycle)] = estimate_reflectogram(y_acc, x_acc, lw)
                partial = {}

    else:
        codes = walsh_codes(n)
        pilot = bpsk_pilot_spectrum(params, pilot_seed=pilot_seed)
        frame = _tx(params, pilot)
        for b in range(n_symbols // n):
            block = [[None] * n for _ in range(n)]  # [observer][symbol]
            for k in range(n):
                s = b * n + k
                frames = {u: codes[u, k] * frame for u in range(n)}
                for i in range(n):
                    r = _received(params, scenario, frames, i) + received_noise(noise, params, seed, i, s)
                    block[i][k] = hsofdm_demodulate(r, params.cp_length)
            for i in range(n):
                for u in range(n):
                    y = despread_cdma(block[i], codes[u])
                    est = estimate_reflectogram(y, pilot, lw)
                    measurements.append(_measurement(est, i, u, b * n))

    return BaselineResult(measurements, _average(measurements), reassembled)
