"""Strict JSON experiment configuration.

Only ``seed`` is required. Every other section falls back to the NB-PLC
defaults. Unknown keys, wrong types and inconsistent values raise
:class:`ConfigError` with the offending key path (``system.cp_length``).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .baselines import Scheme, is_power_of_two
from .chanmodel import (
    V_P_LV,
    V_P_MV,
    ChannelTaps,
    NoiseKind,
    NoiseModel,
    SensingScenario,
    build_two_segment_scenario,
    reference_scenario,
)
from .tdr import SystemParams

CABLE_PRESETS = {"lv": V_P_LV, "mv": V_P_MV}
MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the key path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class SweepAxes:
    bandwidth_khz: tuple = (10.0, 100.0, 500.0)
    cp_length: tuple = (30, 52)
    n_plm: tuple = tuple(range(1, 17))
    n_symbols: tuple = (10,)


@dataclass(frozen=True)
class ScenarioSpec:
    """Raw scenario description; :meth:`build` turns it into channels."""

    kind: str = "reference"
    v_p: float = V_P_MV
    channels: tuple = ()  # taps kind: ((observer, injector, ((delay_s, amp), ...)), ...)
    d_a_m: float = 1000.0
    d_b_m: float = 0.0
    reflection_coeffs: tuple = (0.5, 0.0, 0.5)
    bounce_order: int = 3
    direct_coupling: float = 0.0
    max_delay_s: float = 1e-3
    coherence_time_s: float = 10e-3

    def build(self, params: SystemParams) -> SensingScenario:
        fs = params.sample_rate
        if self.kind == "reference":
            scn = reference_scenario(params.n_plm, fs, self.v_p)
            return SensingScenario(scn.channels, v_p=self.v_p, coherence_time=self.coherence_time_s)
        if self.kind == "taps":
            n = params.n_plm
            grid = [[None] * n for _ in range(n)]
            for i, j, taps in self.channels:
                grid[i][j] = ChannelTaps.from_unsorted(taps)
            return SensingScenario.from_taps(grid, fs, v_p=self.v_p, coherence_time=self.coherence_time_s)
        scn, _ = build_two_segment_scenario(
            self.d_a_m,
            self.d_b_m,
            self.v_p,
            self.reflection_coeffs,
            self.bounce_order,
            fs,
            direct_coupling=self.direct_coupling,
            max_delay=self.max_delay_s,
            coherence_time=self.coherence_time_s,
        )
        return scn


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    system: SystemParams = field(default_factory=SystemParams)
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    noise: NoiseModel = field(default_factory=NoiseModel)
    schemes: tuple = tuple(s.value for s in Scheme)
    sweep: SweepAxes = field(default_factory=SweepAxes)
    cables: tuple = ("lv", "mv")
    trials: int = 500
    output_dir: str = "results"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise"]["kind"] = self.noise.kind.value
        return d

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form of the resolved configuration.

        The output location is not part of the experiment and is left out.
        """
        d = self.to_dict()
        d.pop("output_dir")
        text = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def cable_velocities(self) -> dict:
        return {name: CABLE_PRESETS[name] for name in self.cables}

    def with_overrides(self, seed=None, trials=None, output_dir=None) -> "ExperimentConfig":
        from dataclasses import replace

        changes = {}
        if seed is not None:
            changes["seed"] = _seed(seed, "seed")
        if trials is not None:
            changes["trials"] = _positive_int(trials, "trials")
        if output_dir is not None:
            changes["output_dir"] = str(output_dir)
        return replace(self, **changes)


# ---------------------------------------------------------------- validation


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigError(path, f"expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(where, f"unknown key {key!r} (allowed: {', '.join(sorted(allowed))})")


def _number(value, path, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(path, f"must be > 0, got {value!r}")
    return float(value)


def _int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return value


def _positive_int(value, path):
    value = _int(value, path)
    if value < 1:
        raise ConfigError(path, f"must be >= 1, got {value}")
    return value


def _seed(value, path):
    value = _int(value, path)
    if not 0 <= value <= MAX_SEED:
        raise ConfigError(path, "must be an unsigned 64-bit integer")
    return value


def _list(value, path, item, non_empty=True):
    if not isinstance(value, list):
        raise ConfigError(path, f"expected a list, got {value!r}")
    if non_empty and not value:
        raise ConfigError(path, "must not be empty")
    return tuple(item(v, f"{path}[{k}]") for k, v in enumerate(value))


def _parse_system(raw) -> SystemParams:
    keys = {"bandwidth_hz", "sample_rate_hz", "frame_size", "cp_length", "n_plm", "tx_psd_dbm_hz"}
    _check_keys(raw, keys, "system")
    d = SystemParams()
    bandwidth = _number(raw.get("bandwidth_hz", d.bandwidth), "system.bandwidth_hz", positive=True)
    kwargs = dict(
        bandwidth=bandwidth,
        sample_rate=_number(raw.get("sample_rate_hz", 2 * bandwidth), "system.sample_rate_hz", positive=True),
        frame_size=_int(raw.get("frame_size", d.frame_size), "system.frame_size"),
        cp_length=_int(raw.get("cp_length", d.cp_length), "system.cp_length"),
        n_plm=_int(raw.get("n_plm", d.n_plm), "system.n_plm"),
        tx_psd_dbm_hz=_number(raw.get("tx_psd_dbm_hz", d.tx_psd_dbm_hz), "system.tx_psd_dbm_hz"),
    )
    try:
        return SystemParams(**kwargs)
    except ValueError as exc:
        raise ConfigError("system", str(exc)) from None


def _v_p(raw, path, default):
    value = raw.get("v_p", default)
    if isinstance(value, str):
        if value not in CABLE_PRESETS:
            raise ConfigError(path, f"unknown cable preset {value!r}")
        return CABLE_PRESETS[value]
    return _number(value, path, positive=True)


def _parse_taps(value, path):
    pairs = _list(value, path, lambda v, p: _list(v, p, lambda x, q: _number(x, q)))
    for k, pair in enumerate(pairs):
        if len(pair) != 2:
            raise ConfigError(f"{path}[{k}]", "a tap is [delay_s, amplitude]")
    return pairs


def _parse_scenario(raw, n_plm) -> ScenarioSpec:
    common = {"kind", "v_p", "coherence_time_s"}
    if not isinstance(raw, dict):
        raise ConfigError("scenario", "expected an object")
    kind = raw.get("kind", "reference")
    d = ScenarioSpec()
    base = dict(
        kind=kind,
        v_p=_v_p(raw, "scenario.v_p", d.v_p),
        coherence_time_s=_number(raw.get("coherence_time_s", d.coherence_time_s), "scenario.coherence_time_s", True),
    )
    if kind == "reference":
        _check_keys(raw, common, "scenario")
        return ScenarioSpec(**base)
    if kind == "taps":
        _check_keys(raw, common | {"channels"}, "scenario")
        if "channels" not in raw:
            raise ConfigError("scenario.channels", "required for kind 'taps'")
        channels, seen = [], set()
        for k, entry in enumerate(_list(raw["channels"], "scenario.channels", lambda v, p: (v, p))):
            item, p = entry
            _check_keys(item, {"observer", "injector", "taps"}, p)
            for name in ("observer", "injector", "taps"):
                if name not in item:
                    raise ConfigError(f"{p}.{name}", "required")
            i, j = _int(item["observer"], f"{p}.observer"), _int(item["injector"], f"{p}.injector")
            for name, idx in (("observer", i), ("injector", j)):
                if not 0 <= idx < n_plm:
                    raise ConfigError(f"{p}.{name}", f"modem index {idx} not < n_plm = {n_plm}")
            if (i, j) in seen:
                raise ConfigError(p, f"duplicate pair ({i}, {j})")
            seen.add((i, j))
            taps = _parse_taps(item["taps"], f"{p}.taps")
            try:
                ChannelTaps.from_unsorted(taps)
            except ValueError as exc:
                raise ConfigError(f"{p}.taps", str(exc)) from None
            channels.append((i, j, taps))
        missing = [(i, j) for i in range(n_plm) for j in range(n_plm) if (i, j) not in seen]
        if missing:
            raise ConfigError("scenario.channels", f"missing pairs {missing}")
        return ScenarioSpec(channels=tuple(sorted(channels)), **base)
    if kind == "two_segment":
        keys = common | {"d_a_m", "d_b_m", "reflection_coeffs", "bounce_order", "direct_coupling", "max_delay_s"}
        _check_keys(raw, keys, "scenario")
        if n_plm != 2:
            raise ConfigError("system.n_plm", "the two-segment scenario has exactly 2 modems")
        coeffs = _list(raw.get("reflection_coeffs", list(d.reflection_coeffs)), "scenario.reflection_coeffs", _number)
        if len(coeffs) != 3 or any(abs(c) > 1 for c in coeffs):
            raise ConfigError("scenario.reflection_coeffs", "three coefficients with |g| <= 1 expected")
        order = _int(raw.get("bounce_order", d.bounce_order), "scenario.bounce_order")
        if order < 1:
            raise ConfigError("scenario.bounce_order", "must be >= 1")
        d_b = _number(raw.get("d_b_m", d.d_b_m), "scenario.d_b_m")
        if d_b < 0:
            raise ConfigError("scenario.d_b_m", "must be >= 0")
        return ScenarioSpec(
            d_a_m=_number(raw.get("d_a_m", d.d_a_m), "scenario.d_a_m", positive=True),
            d_b_m=d_b,
            reflection_coeffs=coeffs,
            bounce_order=order,
            direct_coupling=_number(raw.get("direct_coupling", d.direct_coupling), "scenario.direct_coupling"),
            max_delay_s=_number(raw.get("max_delay_s", d.max_delay_s), "scenario.max_delay_s", positive=True),
            **base,
        )
    raise ConfigError("scenario.kind", f"unknown scenario kind {kind!r} (reference, taps, two_segment)")


def _parse_noise(raw) -> NoiseModel:
    _check_keys(raw, {"kind", "a_dbm_hz", "b_db", "c_per_khz"}, "noise")
    d = NoiseModel()
    try:
        kind = NoiseKind(raw.get("kind", d.kind.value))
    except ValueError:
        raise ConfigError("noise.kind", f"unknown noise kind {raw.get('kind')!r}") from None
    return NoiseModel(
        kind=kind,
        a=_number(raw.get("a_dbm_hz", d.a), "noise.a_dbm_hz"),
        b=_number(raw.get("b_db", d.b), "noise.b_db"),
        c=_number(raw.get("c_per_khz", d.c), "noise.c_per_khz"),
    )


def _parse_scheme(value, path):
    try:
        return Scheme(value).value
    except ValueError:
        raise ConfigError(path, f"unknown scheme {value!r}") from None


def _parse_sweep(raw) -> SweepAxes:
    _check_keys(raw, {"bandwidth_khz", "cp_length", "n_plm", "n_symbols"}, "sweep")
    d = SweepAxes()
    bw = _list(raw.get("bandwidth_khz", list(d.bandwidth_khz)), "sweep.bandwidth_khz",
               lambda v, p: _number(v, p, positive=True))
    cps = _list(raw.get("cp_length", list(d.cp_length)), "sweep.cp_length", _positive_int)
    nps = _list(raw.get("n_plm", list(d.n_plm)), "sweep.n_plm", _positive_int)
    nsym = _list(raw.get("n_symbols", list(d.n_symbols)), "sweep.n_symbols", _positive_int)
    return SweepAxes(bw, cps, nps, nsym)


def config_from_dict(raw) -> ExperimentConfig:
    keys = {"seed", "system", "scenario", "noise", "schemes", "sweep", "cables", "trials", "output_dir"}
    _check_keys(raw, keys, "")
    if "seed" not in raw:
        raise ConfigError("seed", "required (runs are never seeded implicitly)")
    schemes = _list(raw.get("schemes", [s.value for s in Scheme]), "schemes", _parse_scheme)
    if len(set(schemes)) != len(schemes):
        raise ConfigError("schemes", "duplicate scheme")
    raw_system = raw.get("system", {})
    n_plm = raw_system.get("n_plm", 1) if isinstance(raw_system, dict) else 1
    if Scheme.CDMA.value in schemes and not is_power_of_two(_int(n_plm, "system.n_plm")):
        # checked first so the Walsh-code restriction is what gets reported
        raise ConfigError("schemes", f"cdma needs n_plm to be a power of two, got {n_plm}")
    system = _parse_system(raw_system)
    if Scheme.FDMA.value in schemes and system.n_plm > system.frame_size // 2 - 1:
        raise ConfigError("schemes", "fdma needs n_plm <= frame_size / 2 - 1")
    cables = _list(raw.get("cables", ["lv", "mv"]), "cables", lambda v, p: v)
    for k, c in enumerate(cables):
        if c not in CABLE_PRESETS:
            raise ConfigError(f"cables[{k}]", f"unknown cable preset {c!r}")
    output_dir = raw.get("output_dir", "results")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir", "expected a non-empty string")
    return ExperimentConfig(
        seed=_seed(raw["seed"], "seed"),
        system=system,
        scenario=_parse_scenario(raw.get("scenario", {}), system.n_plm),
        noise=_parse_noise(raw.get("noise", {})),
        schemes=schemes,
        sweep=_parse_sweep(raw.get("sweep", {})),
        cables=cables,
        trials=_positive_int(raw.get("trials", 500), "trials"),
        output_dir=output_dir,
    )


def parse_config(path) -> ExperimentConfig:
    """Read and validate a JSON configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("", f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(raw)
