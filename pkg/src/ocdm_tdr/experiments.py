"""Experiment drivers shared by the CLI and the scripts.

Each driver returns plain rows (tuples) so that every emitted table can be
recomputed from its input columns with the :mod:`ocdm_tdr.metrics` functions.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .baselines import Scheme, is_power_of_two, run_campaign_baseline
from .chanmodel import NoiseModel, SensingScenario
from .metrics import SinrReport, max_unambiguous_range, measurement_rates, range_resolution, sinr_report
from .tdr import SystemParams, run_campaign

RESOLUTION_COLUMNS = ("cable", "v_p_m_per_s", "bandwidth_hz", "delta_d_m")
RANGE_COLUMNS = ("cable", "v_p_m_per_s", "cp_length", "n_plm", "l_rho", "d_max_rho_m", "d_max_tau_m")
RATE_COLUMNS = ("scheme", "n_plm", "cp_length", "t_symb_s", "n_rho_per_s", "n_tau_per_s", "n_meas_per_s")
SINR_COLUMNS = ("scheme", "modem", "trials", "mean_sinr_db", "ci95_low_db", "ci95_high_db", "signal_power", "inpower")


def resolution_sweep(cables: dict, bandwidths) -> list[tuple]:
    return [
        (name, v_p, float(b), range_resolution(v_p, b))
        for name, v_p in cables.items()
        for b in bandwidths
    ]


def range_sweep(params: SystemParams, cables: dict, cp_lengths, n_plms) -> list[tuple]:
    """``d_max`` for reflectograms and transferograms with ``L_rho = 2N / n_plm``."""
    rows = []
    for name, v_p in cables.items():
        for cp in cp_lengths:
            for n in n_plms:
                l_rho = params.frame_size / n
                rows.append(
                    (
                        name,
                        v_p,
                        int(cp),
                        int(n),
                        l_rho,
                        max_unambiguous_range(v_p, params.sample_rate, l_rho, cp, "reflectogram"),
                        max_unambiguous_range(v_p, params.sample_rate, l_rho, cp, "transferogram"),
                    )
                )
    return rows


def rate_sweep(params: SystemParams, schemes, cp_lengths, n_plms) -> list[tuple]:
    """Measurement rates; CDMA rows exist only where Walsh codes do."""
    rows = []
    for scheme in schemes:
        scheme = Scheme(scheme)
        for cp in cp_lengths:
            p = params.replace(cp_length=int(cp), n_plm=1, window_length=None)
            for n in n_plms:
                if scheme is Scheme.CDMA and not is_power_of_two(n):
                    continue
                r = measurement_rates(scheme, p, n_plm=n)
                rows.append((scheme.value, r.n_plm, int(cp), r.t_symb, r.n_rho, r.n_tau, r.n_meas))
    return rows


def symbols_per_trial(scheme, n_plm: int) -> int:
    """Symbols needed for every modem to obtain one reflectogram."""
    return n_plm if Scheme(scheme) in (Scheme.TDMA, Scheme.CDMA) else 1


def reflectogram_energies(scheme, params, scenario, noise, seed) -> np.ndarray:
    """(signal, error) energy per modem for one Monte-Carlo trial.

    The truth is the zero-padded channel, or the estimator's noiseless
    reference when the measurement carries one.
    """
    scheme = Scheme(scheme)
    n_sym = symbols_per_trial(scheme, params.n_plm)
    if scheme is Scheme.OCDM:
        result = run_campaign(params, scenario, noise, n_sym, seed)
    else:
        result = run_campaign_baseline(scheme, params, scenario, noise, n_sym, seed)
    out = np.zeros((params.n_plm, 2))
    for m in result.measurements:
        if m.observer != m.injector:
            continue
        if m.reference is not None:
            truth = m.reference
        else:
            truth = scenario.h(m.observer, m.observer).padded(params.l_rho)
        out[m.observer] = (np.sum(truth**2), np.sum((m.estimate - truth) ** 2))
    return out


@dataclass(frozen=True)
class _TrialBatch:
    scheme: str
    params: SystemParams
    scenario: SensingScenario
    noise: NoiseModel
    seed: int
    trials: range

    def __call__(self) -> np.ndarray:
        return np.stack(
            [
                reflectogram_energies(self.scheme, self.params, self.scenario, self.noise, (self.seed, t))
                for t in self.trials
            ]
        )


def _run_batch(batch: _TrialBatch) -> np.ndarray:
    return batch()


def compare_sinr(
    params: SystemParams,
    scenario: SensingScenario,
    noise: NoiseModel,
    schemes,
    trials: int,
    seed: int,
    workers: int = 1,
) -> dict[Scheme, SinrReport]:
    """Monte-Carlo SINR per scheme and modem.

    Trial ``t`` of every scheme draws its noise from the stream keyed by
    ``(seed, t, observer, symbol)``, so schemes share random numbers where
    their symbol schedules overlap. Results do not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    batches = []
    chunk = max(1, -(-trials // max(1, 4 * workers)))
    for scheme in schemes:
        for start in range(0, trials, chunk):
            batches.append(
                _TrialBatch(Scheme(scheme).value, params, scenario, noise, seed, range(start, min(trials, start + chunk)))
            )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_batch, batches))
    else:
        parts = [b() for b in batches]
    reports = {}
    for scheme in schemes:
        scheme = Scheme(scheme)
        energies = np.concatenate([p for b, p in zip(batches, parts) if b.scheme == scheme.value])
        # energies: (trials, modems, 2)
        reports[scheme] = sinr_report(energies[:, :, 0].T, energies[:, :, 1].T)
    return reports


def sinr_rows(reports: dict) -> list[tuple]:
    rows = []
    for scheme, rep in reports.items():
        for u in range(rep.sinr_db.size):
            rows.append(
                (
                    Scheme(scheme).value,
                    u,
                    rep.trials,
                    float(rep.sinr_db[u]),
                    float(rep.ci_low_db[u]),
                    float(rep.ci_high_db[u]),
                    float(rep.signal_power[u]),
                    float(rep.inpower[u]),
                )
            )
    return rows
