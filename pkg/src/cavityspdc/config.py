"""
Run configuration: a single JSON document with one section per subsystem.

Validation happens at load time; every error names the offending key path,
e.g. ``cavity.signal.fsr_hz: must be > 0``.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .biphoton import BiphotonModel, DetectorResponse
from .cavity import Cavity
from .counting import DetectionChain
from .dispersion import CrystalSpec, load_sellmeier
from .errors import ConfigError, DomainError
from .interference import MichelsonModel, UmiThermal

PRESETS = ("paper",)


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (available: {', '.join(PRESETS)})")
    return json.loads(resources.files("cavityspdc").joinpath(f"data/{name}.json").read_text())


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


class _Section:
    def __init__(self, doc, path):
        if not isinstance(doc, dict):
            raise ConfigError(f"{path or '<root>'}: expected an object")
        self.doc, self.path = doc, path

    def _key(self, key):
        return f"{self.path}.{key}" if self.path else key

    def has(self, key):
        return key in self.doc

    def section(self, key, required=True):
        if key not in self.doc:
            if required:
                raise ConfigError(f"{self._key(key)}: missing section")
            return None
        return _Section(self.doc[key], self._key(key))

    def num(self, key, default=None, positive=False, nonneg=False, unit=False, required=None):
        if key not in self.doc or self.doc[key] is None:
            if default is None and required is not False:
                raise ConfigError(f"{self._key(key)}: missing value")
            return default
        v = self.doc[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self._key(key)}: expected a number, got {v!r}")
        v = float(v)
        if positive and not v > 0:
            raise ConfigError(f"{self._key(key)}: must be > 0, got {v}")
        if nonneg and v < 0:
            raise ConfigError(f"{self._key(key)}: must be >= 0, got {v}")
        if unit and not 0 < v <= 1:
            raise ConfigError(f"{self._key(key)}: must be in (0, 1], got {v}")
        return v

    def int(self, key, default=None):
        v = self.doc.get(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{self._key(key)}: expected an integer, got {v!r}")
        return v

    def nums(self, key, default=None):
        v = self.doc.get(key, default)
        if v is None:
            raise ConfigError(f"{self._key(key)}: missing list")
        if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            raise ConfigError(f"{self._key(key)}: expected a list of numbers")
        return [float(x) for x in v]

    def str(self, key, default=None):
        v = self.doc.get(key, default)
        if v is not None and not isinstance(v, str):
            raise ConfigError(f"{self._key(key)}: expected a string")
        return v


@dataclass
class RunConfig:
    doc: dict
    crystal: CrystalSpec | None = None
    signal_wavelength: float = 1550e-9
    pump_wavelength: float = 775e-9
    cavity: Cavity | None = None
    biphoton: BiphotonModel | None = None
    detector: DetectorResponse | None = None
    target_fwhm: float | None = None
    rate_coeff: float | None = None
    pump_mw: float | None = None
    chains: tuple | None = None
    simulation: dict = field(default_factory=dict)
    michelson: MichelsonModel | None = None
    michelson_lengths: list | None = None
    michelson_noise: float = 0.0
    franson: dict | None = None
    umi: UmiThermal | None = None
    qpm: dict = field(default_factory=dict)
    output_dir: str | None = None

    def require(self, *names):
        for n in names:
            if getattr(self, n) is None:
                raise ConfigError(f"{n}: section required by this command is missing")


def _crystal(sec: _Section, base_dir):
    path = sec.str("sellmeier")
    if path is not None:
        p = Path(path)
        if not p.is_absolute() and base_dir is not None:
            p = Path(base_dir) / p
        if not p.exists():
            raise ConfigError(f"{sec._key('sellmeier')}: file {str(p)!r} does not exist")
        sets = load_sellmeier(p)
    else:
        sets = load_sellmeier()
    transverse = sec.doc.get("transverse_m", [0.0, 0.0])
    try:
        return CrystalSpec(
            length=sec.num("length_m", positive=True),
            poling_period=sec.num("poling_period_m", positive=True),
            temperature=sec.num("temperature_c"),
            sellmeier=sets,
            transverse=tuple(transverse),
        )
    except DomainError as exc:
        raise ConfigError(f"{sec.path}: {exc}") from None


def _chain(sec: _Section) -> DetectionChain:
    loss_db = sec.num("fiber_loss_db", default=0.0, nonneg=True)
    other = sec.num("other_loss", default=0.0, nonneg=True)
    if other >= 1:
        raise ConfigError(f"{sec._key('other_loss')}: must be < 1")
    collection = sec.num("collection", default=1.0, unit=True) * 10 ** (-loss_db / 10) * (1 - other)
    return DetectionChain(
        collection=collection,
        filter=sec.num("filter", default=1.0, unit=True),
        detector=sec.num("detector", default=1.0, unit=True),
        duty_cycle=sec.num("duty_cycle", default=1.0, unit=True),
        dark_rate=sec.num("dark_rate_hz", default=0.0, nonneg=True),
        jitter=sec.num("jitter_s", default=0.0, nonneg=True),
    )


def parse(doc: dict, base_dir=None) -> RunConfig:
    root = _Section(doc, "")
    cfg = RunConfig(doc=doc)
    cfg.output_dir = root.str("output_dir")

    if root.has("crystal"):
        sec = root.section("crystal")
        cfg.crystal = _crystal(sec, base_dir)
        cfg.signal_wavelength = sec.num("wavelength_m", default=1550e-9, positive=True)
        cfg.pump_wavelength = sec.num("pump_wavelength_m", default=cfg.signal_wavelength / 2, positive=True)

    if root.has("cavity"):
        sec = root.section("cavity")
        fsr, lw = {}, {}
        for arm, axis in (("signal", "y"), ("idler", "z")):
            a = sec.section(arm)
            v = a.num("fsr_hz", positive=True, required=False)
            if v is not None:
                fsr[axis] = v
            lw[axis] = a.num("linewidth_hz", positive=True)
        try:
            cfg.cavity = Cavity(cfg.crystal, cfg.signal_wavelength, fsr, lw)
            for axis in ("y", "z"):
                cfg.cavity.mode_structure(axis)
        except DomainError as exc:
            raise ConfigError(f"cavity: {exc}") from None

    if root.has("biphoton"):
        sec = root.section("biphoton")
        if cfg.cavity is None:
            raise ConfigError("biphoton: requires the cavity section")
        modes = sec.doc.get("modes", 0)
        if modes is not None:
            modes = sec.int("modes", 0)
        from scipy.constants import c

        try:
            cfg.biphoton = BiphotonModel(
                gamma_s=cfg.cavity.linewidth("y"),
                gamma_i=cfg.cavity.linewidth("z"),
                fsr_s=cfg.cavity.fsr("y"),
                fsr_i=cfg.cavity.fsr("z"),
                center_s=c / cfg.signal_wavelength,
                center_i=c / cfg.signal_wavelength,
                tau0=sec.num("tau0_s", default=0.0, nonneg=True),
                modes=modes,
            )
        except DomainError as exc:
            raise ConfigError(f"biphoton: {exc}") from None
        g = sec.num("detector_gamma_per_s", positive=True, required=False)
        cfg.detector = DetectorResponse(g) if g else None
        cfg.target_fwhm = sec.num("target_fwhm_s", positive=True, required=False)

    if root.has("source"):
        sec = root.section("source")
        cfg.rate_coeff = sec.num("pair_rate_per_mw", nonneg=True)
        cfg.pump_mw = sec.num("pump_mw", nonneg=True)

    if root.has("detection"):
        sec = root.section("detection")
        try:
            cfg.chains = (_chain(sec.section("signal")), _chain(sec.section("idler")))
        except DomainError as exc:
            raise ConfigError(f"detection: {exc}") from None

    if root.has("simulation"):
        sec = root.section("simulation")
        cfg.simulation = {
            "duration_s": sec.num("duration_s", default=1.0, positive=True),
            "seed": sec.int("seed", 0),
            "bin_width_s": sec.num("bin_width_s", default=25e-12, positive=True),
            "grid_step_s": sec.num("grid_step_s", default=0.5e-12, positive=True),
            "half_range_s": sec.num("half_range_s", default=5e-9, positive=True),
            "coincidence_window_s": sec.num("coincidence_window_s", default=1e-9, positive=True),
            "powers_mw": sec.nums("powers_mw", [50.0, 100.0, 150.0, 200.0, 250.0, 300.0]),
            "jitter_model": sec.str("jitter_model", "response"),
        }
        if cfg.simulation["jitter_model"] not in ("response", "gaussian"):
            raise ConfigError("simulation.jitter_model: must be 'response' or 'gaussian'")

    if root.has("interference"):
        sec = root.section("interference")
        mich = sec.section("michelson", required=False)
        if mich is not None:
            from scipy.constants import c

            cfg.michelson = MichelsonModel(
                linewidth=mich.num("linewidth_hz", positive=True),
                center=mich.num("center_hz", default=c / cfg.signal_wavelength, positive=True),
                background=mich.num("background", default=0.0, nonneg=True),
            )
            cfg.michelson_lengths = mich.nums("path_differences_m", [])
            cfg.michelson_noise = mich.num("noise", default=0.0, nonneg=True)
        fr = sec.section("franson", required=False)
        if fr is not None:
            cfg.franson = {
                "visibility": fr.num("visibility", nonneg=True),
                "amplitude": fr.num("amplitude", positive=True),
                "background": fr.num("background", default=0.0, nonneg=True),
                "idler_phases": fr.nums("idler_phases_rad", [0.0]),
            }
        umi = sec.section("umi", required=False)
        if umi is not None:
            try:
                cfg.umi = UmiThermal(
                    dn_dT=umi.num("dn_dT", positive=True),
                    wavelength=umi.num("wavelength_m", default=cfg.signal_wavelength, positive=True),
                    length_difference=umi.num("length_difference_m", positive=True, required=False),
                    delay=umi.num("delay_s", positive=True, required=False),
                    index=umi.num("index", default=1.468, positive=True),
                )
            except DomainError as exc:
                raise ConfigError(f"interference.umi: {exc}") from None

    if root.has("qpm"):
        sec = root.section("qpm")
        cfg.qpm = {
            "order": sec.int("order", 1),
            "span_hz": sec.num("span_hz", default=10e12, positive=True),
            "points": sec.int("points", 2001),
        }
    return cfg


def load(path=None, preset_name=None) -> RunConfig:
    """Load a config file, a preset, or a file layered on top of a preset."""
    if path is None and preset_name is None:
        raise ConfigError("give --config PATH and/or --preset NAME")
    doc = preset(preset_name) if preset_name else {}
    base_dir = None
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {str(p)!r} does not exist")
        try:
            user = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc})") from None
        doc = merge(doc, user)
        base_dir = p.parent
    return parse(doc, base_dir)
