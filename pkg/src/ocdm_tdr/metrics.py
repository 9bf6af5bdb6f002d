"""Closed-form performance figures and estimate-quality metrics."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats

from .baselines import Scheme
from .chanmodel import ImpulseResponse
from .tdr import Measurement, SystemParams

ZERO_ERROR_FLOOR = 1e-15


class Unbounded(float, Enum):
    """Explicit infinite results (no floating-point overflow involved)."""

    POS_INF = float("inf")
    NEG_INF = float("-inf")


def range_resolution(v_p: float, bandwidth: float) -> float:
    """Smallest resolvable discontinuity spacing, ``v_p / (4 B)``."""
    if v_p <= 0 or bandwidth <= 0:
        raise ValueError("v_p and bandwidth must be > 0")
    return v_p / (4.0 * bandwidth)


def max_unambiguous_range(v_p, sample_rate, l_rho, cp_length, kind="reflectogram") -> float:
    """Range covered by one measurement window.

    Reflectograms see a round trip, so they get half the transferogram range.
    """
    if min(v_p, sample_rate, l_rho, cp_length) <= 0:
        raise ValueError("all inputs must be > 0")
    one_way = v_p / sample_rate * min(l_rho, cp_length)
    kind = getattr(kind, "value", kind)
    if kind == "reflectogram":
        return one_way / 2.0
    if kind == "transferogram":
        return one_way
    raise ValueError(f"unknown measurement kind {kind!r}")


@dataclass(frozen=True)
class RateReport:
    scheme: Scheme
    n_plm: int
    t_symb: float
    n_rho: float
    n_tau: float

    @property
    def n_meas(self) -> float:
        return self.n_rho + self.n_tau


def measurement_rates(scheme, params: SystemParams, n_plm: int | None = None) -> RateReport:
    """Reflectograms and transferograms per modem per second.

    OCDM and FDMA deliver a full measurement set every symbol; TDMA waits for
    its slot and CDMA for the end of its spreading block, both dividing the
    rate by ``n_plm``. ``n_plm`` overrides ``params.n_plm`` for sweeps.
    """
    scheme = Scheme(scheme)
    n = params.n_plm if n_plm is None else int(n_plm)
    if n < 1:
        raise ValueError("n_plm must be >= 1")
    t = params.t_symb
    slots = n if scheme in (Scheme.TDMA, Scheme.CDMA) else 1
    return RateReport(scheme, n, t, 1.0 / (slots * t), (n - 1) / (slots * t))


@dataclass(frozen=True)
class SinrReport:
    """Per-modem ensemble SINR with a confidence interval.

    ``sinr_db = 10 log10(signal_power / inpower)`` where both powers are
    means over trials of the reference energy and the estimation-error energy.
    """

    sinr_db: np.ndarray
    signal_power: np.ndarray
    inpower: np.ndarray
    ci_low_db: np.ndarray
    ci_high_db: np.ndarray
    trials: int


def estimate_sinr(estimate, truth) -> float:
    """``10 log10(||truth||^2 / ||estimate - truth||^2)`` in dB."""
    if isinstance(estimate, Measurement):
        estimate = estimate.estimate
    est = np.asarray(estimate, dtype=float)
    ref = truth.padded(est.size) if isinstance(truth, ImpulseResponse) else np.asarray(truth, dtype=float)
    if ref.shape != est.shape:
        raise ValueError("truth must be zero-padded to the window length")
    signal = float(np.sum(ref**2))
    if signal == 0.0:
        raise ValueError("truth is all zeros")
    err = float(np.sum((est - ref) ** 2))
    if np.sqrt(err) < ZERO_ERROR_FLOOR:
        return Unbounded.POS_INF
    return 10.0 * np.log10(signal / err)


def sinr_report(signal_energies, error_energies, confidence: float = 0.95) -> SinrReport:
    """Aggregate per-trial energies; both arguments are (modems, trials) arrays.

    The interval comes from a Student-t interval on the mean error energy
    (the reference energy is deterministic per modem).
    """
    sig = np.atleast_2d(np.asarray(signal_energies, dtype=float))
    err = np.atleast_2d(np.asarray(error_energies, dtype=float))
    if sig.shape != err.shape:
        raise ValueError("signal and error arrays must have the same shape")
    trials = sig.shape[1]
    s_mean, e_mean = sig.mean(axis=1), err.mean(axis=1)
    if trials > 1:
        half = stats.t.ppf(0.5 + confidence / 2, trials - 1) * err.std(axis=1, ddof=1) / np.sqrt(trials)
    else:
        half = np.zeros_like(e_mean)
    lo_err = np.maximum(e_mean - half, np.finfo(float).tiny)
    return SinrReport(
        sinr_db=10 * np.log10(s_mean / e_mean),
        signal_power=s_mean,
        inpower=e_mean,
        ci_low_db=10 * np.log10(s_mean / (e_mean + half)),
        ci_high_db=10 * np.log10(s_mean / lo_err),
        trials=trials,
    )


def sidelobe_metrics(window) -> tuple[float, float]:
    """(PSLR, ISLR) in dB; the main lobe is the single largest-power sample."""
    w = np.asarray(window, dtype=float)
    p = w**2
    if not np.any(p):
        raise ValueError("window is all zeros")
    peak = int(np.argmax(p))
    side = np.delete(p, peak)
    if not np.any(side):
        return Unbounded.NEG_INF, Unbounded.NEG_INF
    return 10 * np.log10(side.max() / p[peak]), 10 * np.log10(side.sum() / p[peak])


def sinc_interpolate(window, factor: int) -> np.ndarray:
    """Band-limited (periodic sinc) upsampling by zero-stuffing the spectrum."""
    if int(factor) != factor or factor < 2:
        raise ValueError("factor must be an integer >= 2")
    factor = int(factor)
    x = np.asarray(window, dtype=float)
    n = x.size
    spec = np.fft.rfft(x)
    if n % 2 == 0:
        # split the Nyquist bin between +/- n/2 in the longer spectrum
        spec[-1] *= 0.5
    padded = np.zeros(n * factor // 2 + 1, dtype=np.complex128)
    padded[: spec.size] = spec
    return np.fft.irfft(padded, n * factor) * factor
