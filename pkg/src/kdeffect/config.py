"""JSON run configuration.

Every block is optional; omitted values take the defaults of the reference
electron experiment (532 nm, 0.2 J in 10 ns, 125 um waist, A = 500, L = 10,
sigma = 0.07, 1500 states). Validation errors name the offending dotted key.

Example::

    {
      "laser": {"waist_d": 125e-6},
      "species": {"label": "H+", "incident_energy_eV": 50},
      "scaled": {"n_states": 200},
      "times_tau": [0, 0.5, 1]
    }
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .params import (SPECIES_MASSES, LaserConfig, ParticleSpecies, interaction_time,
                     make_species, reference_electron)

DEFAULT_TRANSIT_TIME = 0.8e-12  # s, electron crossing the 125 um waist


@dataclass(frozen=True)
class ScaledConfig:
    A: float = 500.0
    L: float = 10.0
    h: float = 1e-3
    n_states: int = 1500
    E_prime_resolution: float = 1e-10


@dataclass(frozen=True)
class PacketConfig:
    sigma: float = 0.07
    u0: float = 0.0


@dataclass(frozen=True)
class AnalysisConfig:
    prominence: float = 0.02
    detector_distance_D: float = 1.0
    fringe_convention: str = "hbar"


@dataclass(frozen=True)
class SweepConfig:
    parameter: str = "d"
    start: float = 100e-6
    stop: float = 2e-3
    num: int = 96


@dataclass(frozen=True)
class RunConfig:
    laser: LaserConfig = field(default_factory=LaserConfig)
    species: ParticleSpecies = field(default_factory=reference_electron)
    scaled: ScaledConfig = field(default_factory=ScaledConfig)
    packet: PacketConfig = field(default_factory=PacketConfig)
    times: tuple[float, ...] | None = None  # s; overrides times_tau when given
    times_tau: tuple[float, ...] = (0.0, 0.5, 1.0)  # fractions of the transit time
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output_dir: str = "kd_output"

    @property
    def tau(self) -> float:
        return interaction_time(self.laser, self.species)

    def resolved_times(self) -> list[float]:
        if self.times is not None:
            return list(self.times)
        return [f * self.tau for f in self.times_tau]

    def to_dict(self) -> dict:
        laser = asdict(self.laser)
        laser.pop("detector_distance_D")  # lives in the analysis block
        d = {
            "laser": laser,
            "species": {"label": self.species.label,
                        "incident_energy_eV": self.species.incident_energy_eV},
            "scaled": asdict(self.scaled),
            "packet": asdict(self.packet),
            "times_tau": list(self.times_tau),
            "analysis": asdict(self.analysis),
            "sweep": asdict(self.sweep),
            "output_dir": self.output_dir,
        }
        if self.times is not None:
            d["times"] = list(self.times)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def config_hash(self) -> str:
        """Digest of everything that affects results (the output directory excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        return _digest(d)

    def solve_hash(self) -> str:
        """Digest of the inputs of the eigen-solve, used to key the basis cache."""
        d = self.to_dict()
        return _digest({"laser": d["laser"], "species": d["species"], "scaled": d["scaled"]})

    def with_overrides(self, **changes) -> "RunConfig":
        return replace(self, **changes)


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------- parsing

def _block(raw: dict, key: str) -> dict:
    value = raw.get(key, {})
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(key, f"expected an object, got {type(value).__name__}")
    return value


def _reject_unknown(block: dict, prefix: str, allowed):
    for key in block:
        if key not in allowed:
            raise ConfigError(f"{prefix}.{key}", f"unknown key (allowed: {', '.join(allowed)})")


def _number(block: dict, prefix: str, key: str, default, *, minimum=0.0, strict=True,
            integer=False):
    value = block.get(key, default)
    dotted = f"{prefix}.{key}"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(dotted, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(dotted, f"must be finite, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(dotted, f"must be an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    if minimum is not None:
        if strict and not value > minimum:
            raise ConfigError(dotted, f"must be > {minimum:g}, got {value!r}")
        if not strict and not value >= minimum:
            raise ConfigError(dotted, f"must be >= {minimum:g}, got {value!r}")
    return value


def _number_list(raw: dict, key: str):
    value = raw[key]
    if not isinstance(value, list) or not value:
        raise ConfigError(key, "expected a non-empty list of numbers")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
            raise ConfigError(f"{key}[{i}]", f"expected a non-negative number, got {v!r}")
        out.append(float(v))
    return tuple(out)


def _parse_laser(raw: dict, D: float) -> LaserConfig:
    b = _block(raw, "laser")
    defaults = LaserConfig()
    fields_ = ("wavelength", "pulse_energy", "pulse_width", "waist_d", "curvature_a")
    _reject_unknown(b, "laser", fields_)
    values = {}
    for name in fields_:
        values[name] = _number(b, "laser", name, getattr(defaults, name),
                               strict=name != "pulse_energy")
    return LaserConfig(detector_distance_D=D, **values)


def _parse_species(raw: dict, laser: LaserConfig) -> ParticleSpecies:
    if "species" not in raw:
        return reference_electron(laser, DEFAULT_TRANSIT_TIME)
    b = _block(raw, "species")
    _reject_unknown(b, "species", ("label", "incident_energy_eV", "interaction_time"))
    if "label" not in b:
        raise ConfigError("species.label", "missing required key")
    label = b["label"]
    if not isinstance(label, str) or label not in SPECIES_MASSES:
        raise ConfigError("species.label",
                          f"unknown species {label!r} (known: {', '.join(sorted(SPECIES_MASSES))})")
    if "incident_energy_eV" in b and "interaction_time" in b:
        raise ConfigError("species.interaction_time",
                          "give either incident_energy_eV or interaction_time, not both")
    if "incident_energy_eV" in b:
        return make_species(label, _number(b, "species", "incident_energy_eV", None))
    tau = _number(b, "species", "interaction_time", DEFAULT_TRANSIT_TIME)
    mass = SPECIES_MASSES[label]
    template = make_species(label, 1.0)
    return ParticleSpecies.from_speed(mass, template.charge_magnitude, laser.waist_d / tau, label)


def config_from_dict(raw: dict) -> RunConfig:
    """Validate a parsed JSON document and fill in defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    _reject_unknown(raw, "<root>", ("laser", "species", "scaled", "packet", "times",
                                    "times_tau", "analysis", "sweep", "output_dir"))

    a = _block(raw, "analysis")
    _reject_unknown(a, "analysis", ("prominence", "detector_distance_D", "fringe_convention"))
    ad = AnalysisConfig()
    convention = a.get("fringe_convention", ad.fringe_convention)
    if convention not in ("hbar", "h"):
        raise ConfigError("analysis.fringe_convention", f"must be 'hbar' or 'h', got {convention!r}")
    analysis = AnalysisConfig(
        prominence=_number(a, "analysis", "prominence", ad.prominence),
        detector_distance_D=_number(a, "analysis", "detector_distance_D", ad.detector_distance_D),
        fringe_convention=convention,
    )

    laser = _parse_laser(raw, analysis.detector_distance_D)
    species = _parse_species(raw, laser)

    s = _block(raw, "scaled")
    sd = ScaledConfig()
    _reject_unknown(s, "scaled", tuple(asdict(sd)))
    scaled = ScaledConfig(
        A=_number(s, "scaled", "A", sd.A),
        L=_number(s, "scaled", "L", sd.L),
        h=_number(s, "scaled", "h", sd.h),
        n_states=_number(s, "scaled", "n_states", sd.n_states, minimum=1, strict=False,
                         integer=True),
        E_prime_resolution=_number(s, "scaled", "E_prime_resolution", sd.E_prime_resolution),
    )
    n = round(scaled.L / scaled.h)
    if n < 2 or abs(n * scaled.h - scaled.L) > 1e-9 * scaled.L:
        raise ConfigError("scaled.h", f"L / h must be an integer, got L={scaled.L!r}, h={scaled.h!r}")

    p = _block(raw, "packet")
    pd = PacketConfig()
    _reject_unknown(p, "packet", ("sigma", "u0"))
    packet = PacketConfig(sigma=_number(p, "packet", "sigma", pd.sigma),
                          u0=_number(p, "packet", "u0", pd.u0, minimum=None))
    if not -scaled.L < packet.u0 < scaled.L:
        raise ConfigError("packet.u0", f"must lie inside (-L, L) = (-{scaled.L}, {scaled.L})")

    times = _number_list(raw, "times") if "times" in raw else None
    times_tau = _number_list(raw, "times_tau") if "times_tau" in raw else RunConfig.times_tau

    w = _block(raw, "sweep")
    wd = SweepConfig()
    _reject_unknown(w, "sweep", tuple(asdict(wd)))
    parameter = w.get("parameter", wd.parameter)
    if parameter not in ("d", "E_i"):
        raise ConfigError("sweep.parameter", f"must be 'd' or 'E_i', got {parameter!r}")
    sweep = SweepConfig(parameter=parameter,
                        start=_number(w, "sweep", "start", wd.start),
                        stop=_number(w, "sweep", "stop", wd.stop),
                        num=_number(w, "sweep", "num", wd.num, minimum=1, strict=False,
                                    integer=True))
    if sweep.stop < sweep.start:
        raise ConfigError("sweep.stop", "must not be below sweep.start")

    output_dir = raw.get("output_dir", RunConfig.output_dir)
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir", "expected a non-empty path string")

    return RunConfig(laser, species, scaled, packet, times, times_tau, analysis, sweep,
                     output_dir)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def save_config(config: RunConfig, path) -> Path:
    path = Path(path)
    path.write_text(config.to_json())
    return path
