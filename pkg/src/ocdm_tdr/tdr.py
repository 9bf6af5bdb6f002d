"""OCDM-based TDR chain with subchirp multiple access.

Each modem ``u`` owns a single Fresnel-domain pilot at ``k = u * L_rho``. Because
the channel acts as a circular convolution in the Fresnel domain too, the
received Fresnel vector is a concatenation of ``n_plm`` windows, window ``u``
holding (a scaled copy of) the channel from modem ``u`` to the observer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .chanmodel import NoiseModel, SensingScenario, apply_channel, dbm_to_watts, generate_noise
from .fresnel import FresnelBasis, build_fresnel_basis, dfnt_forward, dfnt_inverse

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SystemParams:
    """Baseband system parametrization; defaults are the NB-PLC setup.

    ``window_length`` only needs setting for a single modem sending a pilot
    train (several pilots per frame); otherwise it is ``frame_size / n_plm``.
    """

    bandwidth: float = 500e3
    sample_rate: float = 1e6
    frame_size: int = 256
    cp_length: int = 30
    n_plm: int = 1
    tx_psd_dbm_hz: float = -40.0
    window_length: int | None = None

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if not np.isclose(self.sample_rate, 2 * self.bandwidth, rtol=1e-12, atol=0):
            raise ValueError(
                f"sample_rate must equal 2 * bandwidth ({2 * self.bandwidth:g} Hz), "
                f"got {self.sample_rate:g} Hz"
            )
        if self.frame_size < 4 or self.frame_size % 2:
            raise ValueError("frame_size must be an even integer >= 4")
        if self.cp_length < 0 or self.cp_length >= self.frame_size:
            raise ValueError("cp_length must satisfy 0 <= cp_length < frame_size")
        if self.n_plm < 1:
            raise ValueError("n_plm must be >= 1")
        if self.frame_size % self.n_plm:
            raise ValueError(
                f"frame_size {self.frame_size} is not divisible by n_plm {self.n_plm}"
            )
        if self.window_length is not None:
            lw = self.window_length
            if self.n_plm > 1 and lw != self.frame_size // self.n_plm:
                raise ValueError("window_length is fixed to frame_size / n_plm with several modems")
            if lw < 1 or self.frame_size % lw:
                raise ValueError("window_length must divide frame_size")

    @property
    def l_rho(self) -> int:
        if self.window_length is not None:
            return self.window_length
        return self.frame_size // self.n_plm

    @property
    def symbol_samples(self) -> int:
        return self.frame_size + self.cp_length

    @property
    def t_symb(self) -> float:
        return self.symbol_samples / self.sample_rate

    @property
    def tx_power(self) -> float:
        """Mean-square transmit power in W: PSD times the sample rate."""
        return float(dbm_to_watts(self.tx_psd_dbm_hz) * self.sample_rate)

    def replace(self, **changes) -> "SystemParams":
        from dataclasses import replace

        return replace(self, **changes)


class MeasurementKind(str, Enum):
    REFLECTOGRAM = "reflectogram"
    TRANSFEROGRAM = "transferogram"


@dataclass(frozen=True)
class Measurement:
    """One ``L_rho``-sample channel estimate seen by ``observer``.

    ``window`` holds the raw received samples; ``estimate`` divides out the
    pilot amplitude ``scale``. ``reference`` is the noise- and
    interference-free output of the estimator when it differs from the
    zero-padded channel (band-limited FDMA estimates); ``None`` otherwise.
    """

    window: np.ndarray = field(repr=False)
    observer: int
    injector: int
    kind: MeasurementKind
    symbol_index: int
    scale: float = 1.0
    window_index: int = 0
    reference: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        expected = MeasurementKind.REFLECTOGRAM if self.observer == self.injector else MeasurementKind.TRANSFEROGRAM
        if MeasurementKind(self.kind) is not expected:
            raise ValueError(f"kind {self.kind} inconsistent with observer/injector indices")

    @property
    def estimate(self) -> np.ndarray:
        return self.window / self.scale


def pilot_positions(params: SystemParams, modem: int) -> np.ndarray:
    if not 0 <= modem < params.n_plm:
        raise IndexError(f"modem index {modem} outside 0..{params.n_plm - 1}")
    if params.n_plm == 1:
        return np.arange(0, params.frame_size, params.l_rho)
    return np.array([modem * params.l_rho])


def pilot_amplitude(params: SystemParams) -> float:
    """Per-pilot amplitude giving mean-square body power ``params.tx_power``.

    The transform is unitary, so ``||x||^2 = (#pilots) A^2`` must equal
    ``frame_size * tx_power``.
    """
    n_pilots = params.frame_size // params.l_rho if params.n_plm == 1 else 1
    return float(np.sqrt(params.tx_power * params.frame_size / n_pilots))


def make_pilot_frame(params: SystemParams, modem: int, scaled: bool = True) -> np.ndarray:
    """Fresnel-domain transmit vector of ``modem``."""
    xdot = np.zeros(params.frame_size)
    xdot[pilot_positions(params, modem)] = pilot_amplitude(params) if scaled else 1.0
    return xdot


def ocdm_modulate(basis: FresnelBasis, xdot, cp_length: int) -> np.ndarray:
    """Inverse DFnT followed by cyclic-prefix insertion."""
    if not 0 <= cp_length < basis.size:
        raise ValueError(f"cp_length must be in [0, {basis.size}), got {cp_length}")
    body = dfnt_inverse(basis, xdot)
    return np.concatenate([body[basis.size - cp_length :], body])


def ocdm_demodulate(basis: FresnelBasis, received, cp_length: int) -> np.ndarray:
    """Cyclic-prefix removal followed by the forward DFnT."""
    r = np.asarray(received, dtype=np.float64)
    if r.shape[-1] != basis.size + cp_length:
        raise ValueError(
            f"received length {r.shape[-1]} != frame_size + cp_length = {basis.size + cp_length}"
        )
    return dfnt_forward(basis, r[..., cp_length:])


def extract_measurements(
    ydot, params: SystemParams, observer: int, symbol_index: int, scale: float = 1.0
) -> list[Measurement]:
    """Split the received Fresnel vector into its ``L_rho`` windows."""
    ydot = np.asarray(ydot, dtype=np.float64)
    if ydot.shape != (params.frame_size,):
        raise ValueError("Fresnel vector length must equal frame_size")
    lw = params.l_rho
    out = []
    for w in range(params.frame_size // lw):
        # with one modem every window is its own reflectogram
        injector = 0 if params.n_plm == 1 else w
        out.append(
            Measurement(
                window=ydot[w * lw : (w + 1) * lw].copy(),
                observer=observer,
                injector=injector,
                kind=MeasurementKind.REFLECTOGRAM if injector == observer else MeasurementKind.TRANSFEROGRAM,
                symbol_index=symbol_index,
                scale=scale,
                window_index=w,
            )
        )
    return out


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class ValidationReport:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def warnings(self) -> list[str]:
        return [f"{c.name}: {c.detail}" for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def validate_configuration(
    params: SystemParams,
    scenario: SensingScenario | None = None,
    max_length: int | None = None,
    coherence_time: float | None = None,
) -> ValidationReport:
    """Check window interference, ISI and the slow-channel assumption.

    ``max_length`` / ``coherence_time`` override what the scenario provides.
    Failures are reported, never raised.
    """
    if max_length is None:
        max_length = scenario.max_length if scenario is not None else 1
    if coherence_time is None:
        coherence_time = scenario.coherence_time if scenario is not None else np.inf
    if scenario is not None and scenario.n_plm != params.n_plm:
        raise ValueError(f"scenario has {scenario.n_plm} modems, params expect {params.n_plm}")

    lw, lcp = params.l_rho, params.cp_length
    checks = [
        CheckResult(
            "window",
            lw >= max_length,
            f"L_rho = {lw} {'>=' if lw >= max_length else '<'} L_h,max = {max_length}",
        ),
        CheckResult(
            "isi",
            lcp >= max_length - 1,
            f"L_cp = {lcp} {'>=' if lcp >= max_length - 1 else '<'} L_h,max - 1 = {max_length - 1}",
        ),
        CheckResult(
            "coherence",
            params.t_symb <= coherence_time / 10,
            f"T_symb = {params.t_symb:.6g} s vs T_c / 10 = {coherence_time / 10:.6g} s",
        ),
    ]
    report = ValidationReport(checks)
    for w in report.warnings:
        logger.warning(w)
    return report


def noise_rng(seed, observer: int, symbol: int) -> np.random.Generator:
    """Noise stream for one (observer, symbol); shared by every scheme."""
    words = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]
    return np.random.default_rng([*words, observer, symbol])


def received_noise(noise: NoiseModel, params: SystemParams, seed, observer: int, symbol: int) -> np.ndarray:
    n = params.symbol_samples
    m = n + (n % 2)
    return generate_noise(noise, params.sample_rate, m, noise_rng(seed, observer, symbol))[:n]


@dataclass
class CampaignResult:
    measurements: list[Measurement]
    # (observer, injector) -> mean channel estimate over symbols (and pilot windows)
    averages: dict

    def select(self, observer=None, injector=None):
        return [
            m
            for m in self.measurements
            if (observer is None or m.observer == observer)
            and (injector is None or m.injector == injector)
        ]


def _average(measurements) -> dict:
    acc: dict = {}
    for m in measurements:
        acc.setdefault((m.observer, m.injector), []).append(m.estimate)
    return {k: np.mean(v, axis=0) for k, v in sorted(acc.items())}


def run_campaign(
    params: SystemParams,
    scenario: SensingScenario,
    noise: NoiseModel,
    n_symbols: int,
    seed,
    active=None,
) -> CampaignResult:
    """Simulate ``n_symbols`` synchronous OCDM symbols from every modem.

    ``active`` optionally restricts which modems transmit (others stay silent).
    """
    if n_symbols < 1:
        raise ValueError("n_symbols must be >= 1")
    validate_configuration(params, scenario)
    basis = build_fresnel_basis(params.frame_size)
    n = params.n_plm
    active = range(n) if active is None else active
    scale = pilot_amplitude(params)
    frames = {u: ocdm_modulate(basis, make_pilot_frame(params, u), params.cp_length) for u in active}
    # LTI within the coherence time: the noiseless part is identical every symbol
    clean = [
        sum((apply_channel(frames[u], scenario.h(i, u)) for u in frames), np.zeros(params.symbol_samples))
        for i in range(n)
    ]
    measurements = []
    for s in range(n_symbols):
        for i in range(n):
            r = clean[i] + received_noise(noise, params, seed, i, s)
            ydot = ocdm_demodulate(basis, r, params.cp_length)
            measurements.extend(extract_measurements(ydot, params, i, s, scale))
    return CampaignResult(measurements, _average(measurements))
