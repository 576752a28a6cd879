"""TOML experiment configuration with unit-tagged quantities.

Physical values may be bare numbers (atomic units) or strings such as
``"30 nm"``, ``"0.25 eV"``, ``"4e-16 s"`` or ``"2e9 /m"``.  Everything is
converted to atomic units at parse time and validated against the
preconditions of the numerical modules before any computation starts.

Sections and keys (``*`` marks required keys)::

    [grid]         n_points*, x_min*, x_max*
    [device]       barrier_height*, barrier_width*, well_width*, device_start*, bias
    [packet]       x0*, sigma_x*, energy | k0 (exactly one)*, mass
    [stepper]      substeps | dt
    [measurement]  sigma*, tau*, L_x*, epsilon, seed, enabled
    [run]          t_end, snapshot_times
    [ensemble]     n_trajectories, threads
    [sweep]        biases | (v_min, v_max, n_points), coverage, substeps
    [transmission] e_min, e_max, n_energies, bias
    [output]       dir
"""

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .grid import Grid, WavepacketSpec, gaussian_packet, make_grid, wavevector_for_energy
from .povm import MeasurementConfig
from .potentials import DeviceSpec
from .propagator import StepperConfig, check_aliasing, n_steps
from .units import UnitError, parse_quantity


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry when known."""

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


SCHEMA = {
    "grid": {"n_points", "x_min", "x_max"},
    "device": {"barrier_height", "barrier_width", "well_width", "device_start", "bias"},
    "packet": {"x0", "sigma_x", "energy", "k0", "mass"},
    "stepper": {"substeps", "dt"},
    "measurement": {"sigma", "tau", "L_x", "epsilon", "seed", "enabled"},
    "run": {"t_end", "snapshot_times"},
    "ensemble": {"n_trajectories", "threads"},
    "sweep": {"biases", "v_min", "v_max", "n_points", "coverage", "substeps"},
    "transmission": {"e_min", "e_max", "n_energies", "bias"},
    "output": {"dir"},
}
REQUIRED_SECTIONS = ("grid", "device", "packet", "measurement")

# defaults, in atomic units unless noted
DEFAULT_SUBSTEPS = 16
DEFAULT_T_END = parse_quantity("22.4 fs", "time")
DEFAULT_SNAPSHOTS = (parse_quantity("0.44 fs", "time"), parse_quantity("22.4 fs", "time"))
DEFAULT_BIASES = tuple(float(v) for v in np.linspace(0.0, parse_quantity("0.5 V", "voltage"), 6))


@dataclass(frozen=True)
class SweepConfig:
    biases: Tuple[float, ...] = DEFAULT_BIASES
    coverage: float = 0.99
    substeps: Optional[int] = None  # overrides the stepper for sweeps only


@dataclass(frozen=True)
class TransmissionConfig:
    e_min: float = parse_quantity("0.005 eV", "energy")
    e_max: float = parse_quantity("0.5 eV", "energy")
    n_energies: int = 2001
    bias: Optional[float] = None

    def energies(self):
        return np.linspace(self.e_min, self.e_max, self.n_energies)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment, every physical value in atomic units."""

    grid: Grid
    device: DeviceSpec
    packet: WavepacketSpec
    stepper: StepperConfig
    measurement: MeasurementConfig
    bias: float = 0.0
    measure: bool = True
    t_end: float = DEFAULT_T_END
    snapshot_times: Tuple[float, ...] = DEFAULT_SNAPSHOTS
    n_trajectories: int = 200
    threads: int = 1
    sweep: SweepConfig = field(default_factory=SweepConfig)
    transmission: TransmissionConfig = field(default_factory=TransmissionConfig)
    out_dir: str = "out"

    @property
    def mass(self):
        return self.packet.mass

    def with_overrides(self, seed=None, threads=None, out_dir=None):
        cfg = self
        if seed is not None:
            cfg = replace(cfg, measurement=replace(cfg.measurement, seed=int(seed)))
        if threads is not None:
            cfg = replace(cfg, threads=int(threads))
        if out_dir is not None:
            cfg = replace(cfg, out_dir=str(out_dir))
        validate(cfg)
        return cfg

    def sweep_stepper(self):
        if self.sweep.substeps is None:
            return self.stepper
        return StepperConfig.from_period(self.measurement.tau, self.sweep.substeps)


# --- parsing ----------------------------------------------------------------

def _quantity(section, data, key, kind, default=None, required=False):
    name = f"{section}.{key}"
    if key not in data:
        if required:
            raise ConfigError("missing required key", name)
        return default
    try:
        return parse_quantity(data[key], kind)
    except UnitError as exc:
        raise ConfigError(str(exc), name) from None


def _integer(section, data, key, default=None, required=False, minimum=None):
    name = f"{section}.{key}"
    if key not in data:
        if required:
            raise ConfigError("missing required key", name)
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"expected an integer, got {v!r}", name)
    if minimum is not None and v < minimum:
        raise ConfigError(f"must be >= {minimum}, got {v}", name)
    return v


def _check_keys(doc):
    for section, body in doc.items():
        if section not in SCHEMA:
            raise ConfigError("unknown section", section)
        if not isinstance(body, dict):
            raise ConfigError("expected a table", section)
        for key in body:
            if key not in SCHEMA[section]:
                raise ConfigError("unknown key", f"{section}.{key}")
    for section in REQUIRED_SECTIONS:
        if section not in doc:
            raise ConfigError("missing required section", section)


def parse_config(text):
    """Parse and validate a TOML document into an :class:`ExperimentConfig`."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from None
    _check_keys(doc)

    g = doc["grid"]
    n_points = _integer("grid", g, "n_points", required=True)
    x_min = _quantity("grid", g, "x_min", "length", required=True)
    x_max = _quantity("grid", g, "x_max", "length", required=True)
    try:
        grid = make_grid(n_points, x_min, x_max)
    except ValueError as exc:
        raise ConfigError(str(exc), "grid") from None

    d = doc["device"]
    try:
        device = DeviceSpec(
            _quantity("device", d, "barrier_height", "energy", required=True),
            _quantity("device", d, "barrier_width", "length", required=True),
            _quantity("device", d, "well_width", "length", required=True),
            _quantity("device", d, "device_start", "length", required=True),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), "device") from None
    bias = _quantity("device", d, "bias", "voltage", default=0.0)

    p = doc["packet"]
    mass = _quantity("packet", p, "mass", "mass", default=1.0)
    if not mass > 0:
        raise ConfigError("must be positive", "packet.mass")
    if ("energy" in p) == ("k0" in p):
        raise ConfigError("give exactly one of 'energy' and 'k0'", "packet")
    if "energy" in p:
        e = _quantity("packet", p, "energy", "energy")
        if e < 0:
            raise ConfigError("must be non-negative", "packet.energy")
        k0 = wavevector_for_energy(e, mass)
    else:
        k0 = _quantity("packet", p, "k0", "wavevector")
    try:
        packet = WavepacketSpec(
            _quantity("packet", p, "x0", "length", required=True),
            _quantity("packet", p, "sigma_x", "length", required=True),
            k0, mass)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), "packet") from None

    m = doc["measurement"]
    tau = _quantity("measurement", m, "tau", "time", required=True)
    enabled = m.get("enabled", True)
    if not isinstance(enabled, bool):
        raise ConfigError("expected true or false", "measurement.enabled")
    try:
        measurement = MeasurementConfig(
            sigma_k=_quantity("measurement", m, "sigma", "wavevector", required=True),
            tau=tau,
            L_x=_quantity("measurement", m, "L_x", "length", required=True),
            seed=_integer("measurement", m, "seed", default=0, minimum=0),
            epsilon=_quantity("measurement", m, "epsilon", "permittivity", default=1.0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), "measurement") from None

    s = doc.get("stepper", {})
    if "substeps" in s and "dt" in s:
        raise ConfigError("give at most one of 'substeps' and 'dt'", "stepper")
    try:
        if "dt" in s:
            stepper = StepperConfig(_quantity("stepper", s, "dt", "time"))
        else:
            stepper = StepperConfig.from_period(
                tau, _integer("stepper", s, "substeps", default=DEFAULT_SUBSTEPS, minimum=1))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), "stepper") from None

    r = doc.get("run", {})
    t_end = _quantity("run", r, "t_end", "time", default=DEFAULT_T_END)
    if "snapshot_times" in r:
        raw = r["snapshot_times"]
        if not isinstance(raw, list):
            raise ConfigError("expected a list", "run.snapshot_times")
        try:
            snaps = tuple(parse_quantity(v, "time") for v in raw)
        except UnitError as exc:
            raise ConfigError(str(exc), "run.snapshot_times") from None
    else:
        snaps = tuple(t for t in DEFAULT_SNAPSHOTS if t <= t_end)

    e = doc.get("ensemble", {})
    n_traj = _integer("ensemble", e, "n_trajectories", default=200, minimum=1)
    threads = _integer("ensemble", e, "threads", default=1, minimum=1)

    sw = doc.get("sweep", {})
    if "biases" in sw:
        if any(k in sw for k in ("v_min", "v_max", "n_points")):
            raise ConfigError("give either 'biases' or 'v_min'/'v_max'/'n_points'", "sweep")
        if not isinstance(sw["biases"], list):
            raise ConfigError("expected a list", "sweep.biases")
        try:
            biases = tuple(parse_quantity(v, "voltage") for v in sw["biases"])
        except UnitError as exc:
            raise ConfigError(str(exc), "sweep.biases") from None
    elif any(k in sw for k in ("v_min", "v_max", "n_points")):
        lo = _quantity("sweep", sw, "v_min", "voltage", required=True)
        hi = _quantity("sweep", sw, "v_max", "voltage", required=True)
        n = _integer("sweep", sw, "n_points", required=True, minimum=1)
        biases = tuple(float(v) for v in np.linspace(lo, hi, n))
    else:
        biases = DEFAULT_BIASES
    coverage = sw.get("coverage", 0.99)
    if isinstance(coverage, bool) or not isinstance(coverage, (int, float)):
        raise ConfigError("expected a number", "sweep.coverage")
    sweep = SweepConfig(biases, float(coverage),
                        _integer("sweep", sw, "substeps", default=None, minimum=1))

    tr = doc.get("transmission", {})
    tdef = TransmissionConfig()
    transmission = TransmissionConfig(
        _quantity("transmission", tr, "e_min", "energy", default=tdef.e_min),
        _quantity("transmission", tr, "e_max", "energy", default=tdef.e_max),
        _integer("transmission", tr, "n_energies", default=tdef.n_energies, minimum=1),
        _quantity("transmission", tr, "bias", "voltage", default=None),
    )

    out = doc.get("output", {})
    out_dir = out.get("dir", "out")
    if not isinstance(out_dir, str):
        raise ConfigError("expected a string", "output.dir")

    cfg = ExperimentConfig(grid, device, packet, stepper, measurement, bias, enabled,
                           t_end, snaps, n_traj, threads, sweep, transmission, out_dir)
    validate(cfg)
    return cfg


def load_config(path):
    return parse_config(Path(path).read_text())


# --- validation -------------------------------------------------------------

def validate(cfg):
    """Raise :class:`ConfigError` if ``cfg`` violates any module precondition."""
    grid = cfg.grid
    tau = cfg.measurement.tau
    try:
        n_steps(tau, cfg.stepper.dt, "measurement.tau")
    except ValueError as exc:
        raise ConfigError(str(exc), "stepper") from None
    try:
        check_aliasing(grid, cfg.stepper.dt, cfg.mass)
        check_aliasing(grid, cfg.sweep_stepper().dt, cfg.mass)
    except ValueError as exc:
        raise ConfigError(str(exc), "stepper") from None
    try:
        n_steps(cfg.t_end, tau, "run.t_end")
    except ValueError as exc:
        raise ConfigError(str(exc), "run.t_end") from None
    for t in cfg.snapshot_times:
        if not 0 <= t <= cfg.t_end:
            raise ConfigError(f"snapshot time {t!r} outside [0, t_end]", "run.snapshot_times")
    if cfg.device.device_start < grid.x_min or cfg.device.device_end > grid.x_max:
        raise ConfigError("device does not fit inside the grid", "device")
    try:
        gaussian_packet(grid, cfg.packet)
    except ValueError as exc:
        raise ConfigError(str(exc), "packet") from None
    if cfg.packet.x0 >= cfg.device.device_start:
        raise ConfigError("the packet must start to the left of the device", "packet.x0")
    if cfg.packet.k0 <= 0:
        raise ConfigError("the packet must move towards the device (k0 > 0)", "packet")
    if not cfg.sweep.biases:
        raise ConfigError("bias list is empty", "sweep.biases")
    if not 0 < cfg.sweep.coverage < 1:
        raise ConfigError("must lie in (0, 1)", "sweep.coverage")
    tr = cfg.transmission
    if not 0 < tr.e_min <= tr.e_max:
        raise ConfigError("need 0 < e_min <= e_max", "transmission")
    if cfg.n_trajectories < 1:
        raise ConfigError("must be >= 1", "ensemble.n_trajectories")
    if cfg.threads < 1:
        raise ConfigError("must be >= 1", "ensemble.threads")
    if not 0 <= cfg.measurement.seed < 2 ** 64:
        raise ConfigError("must fit in an unsigned 64-bit integer", "measurement.seed")


# --- serialisation ----------------------------------------------------------

def to_dict(cfg):
    """Resolved config as plain TOML data; bare numbers are atomic units."""
    doc = {
        "grid": {"n_points": cfg.grid.n_points, "x_min": cfg.grid.x_min, "x_max": cfg.grid.x_max},
        "device": {
            "barrier_height": cfg.device.barrier_height,
            "barrier_width": cfg.device.barrier_width,
            "well_width": cfg.device.well_width,
            "device_start": cfg.device.device_start,
            "bias": cfg.bias,
        },
        "packet": {"x0": cfg.packet.x0, "sigma_x": cfg.packet.sigma_x,
                   "k0": cfg.packet.k0, "mass": cfg.packet.mass},
        "stepper": {"dt": cfg.stepper.dt},
        "measurement": {
            "sigma": cfg.measurement.sigma_k,
            "tau": cfg.measurement.tau,
            "L_x": cfg.measurement.L_x,
            "epsilon": cfg.measurement.epsilon,
            "seed": int(cfg.measurement.seed),
            "enabled": bool(cfg.measure),
        },
        "run": {"t_end": cfg.t_end, "snapshot_times": list(cfg.snapshot_times)},
        "ensemble": {"n_trajectories": cfg.n_trajectories, "threads": cfg.threads},
        "sweep": {"biases": list(cfg.sweep.biases), "coverage": cfg.sweep.coverage},
        "transmission": {"e_min": cfg.transmission.e_min, "e_max": cfg.transmission.e_max,
                         "n_energies": cfg.transmission.n_energies},
        "output": {"dir": cfg.out_dir},
    }
    if cfg.sweep.substeps is not None:
        doc["sweep"]["substeps"] = cfg.sweep.substeps
    if cfg.transmission.bias is not None:
        doc["transmission"]["bias"] = cfg.transmission.bias
    return doc


def serialize_config(cfg):
    """TOML text that :func:`parse_config` maps back to an equal config."""
    return tomli_w.dumps(to_dict(cfg))


# --- presets ----------------------------------------------------------------

PRESET_DIR = Path(__file__).with_name("presets")


def preset_path(name="rtd_reference"):
    path = PRESET_DIR / f"{name}.toml"
    if not path.exists():
        raise ConfigError(f"no preset named {name!r}")
    return path


def load_preset(name="rtd_reference"):
    return load_config(preset_path(name))
