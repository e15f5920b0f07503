"""Synthetic measurements, the reconstruction error metric and scenarios.

A scenario bundles a reference surface, the physical setup, a frequency
schedule and inversion settings, plus at most one sweep axis. Running it
synthesizes (noisy) data from the reference surface on a finer mesh,
inverts it, and collects error curves and profiles into a report that
serializes deterministically.
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .forward import IncidentWave, Medium, ReceiverArray, scattered_field, solve_forward, wavenumber
from .inverse import (
    FrequencySchedule,
    InverseConfig,
    _Problem,
    multi_frequency_reconstruct,
    segment_width,
)
from .numerics import SeededRng
from .surface import (
    GriddedSurface,
    RandomSurfaceParams,
    SplineBasis,
    SurfaceModel,
    generate_gaussian_surface,
    sample_surface,
    triangular_surface,
)

logger = logging.getLogger(__name__)


def reconstruction_error(s_rec, s_ref) -> float:
    """Relative L2 discrepancy ``sqrt(sum (rec - ref)^2 / sum ref^2)``.

    Raises
    ------
    ZeroDivisionError
        If the reference is identically zero on the grid.
    """
    s_rec = np.asarray(s_rec, dtype=float)
    s_ref = np.asarray(s_ref, dtype=float)
    if s_rec.shape != s_ref.shape:
        raise ValueError("profiles must be sampled on the same grid")
    denom = float(np.sum(s_ref**2))
    if denom == 0.0:
        raise ZeroDivisionError("reference profile is identically zero on the grid")
    return float(np.sqrt(np.sum((s_rec - s_ref) ** 2) / denom))


# --------------------------------------------------------------------------
# measurements
# --------------------------------------------------------------------------


@dataclass
class MeasurementSet:
    """Complex scattered-field samples per frequency at a receiver array."""

    receivers: ReceiverArray
    frequencies: np.ndarray
    fields: np.ndarray
    noise_level: float = 0.0
    noise_seed: int = 0
    mesh_factor: float = 2.0
    clean_fields: np.ndarray | None = None

    def __post_init__(self):
        self.frequencies = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        self.fields = np.atleast_2d(np.asarray(self.fields, dtype=complex))
        if self.fields.shape != (self.frequencies.size, self.receivers.count):
            raise ValueError(
                f"fields shape {self.fields.shape} != ({self.frequencies.size}, {self.receivers.count})"
            )
        if np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("frequencies must be sorted ascending")

    def select(self, frequencies) -> np.ndarray:
        """Field rows for the requested frequencies (must all be present)."""
        rows = []
        for f in np.atleast_1d(frequencies):
            idx = np.flatnonzero(np.isclose(self.frequencies, f, rtol=0, atol=1e-3))
            if idx.size == 0:
                raise KeyError(f"no measurement at {f} Hz")
            rows.append(self.fields[idx[0]])
        return np.array(rows)

    def to_dict(self):
        return {
            "receivers": {"x": self.receivers.x.tolist(), "height": self.receivers.height},
            "frequencies": self.frequencies.tolist(),
            "fields_re": self.fields.real.tolist(),
            "fields_im": self.fields.imag.tolist(),
            "noise_level": self.noise_level,
            "noise_seed": self.noise_seed,
            "mesh_factor": self.mesh_factor,
        }

    @classmethod
    def from_dict(cls, data) -> "MeasurementSet":
        rec = ReceiverArray(np.array(data["receivers"]["x"], float), float(data["receivers"]["height"]))
        fields = np.array(data["fields_re"], float) + 1j * np.array(data["fields_im"], float)
        return cls(
            rec,
            np.array(data["frequencies"], float),
            fields,
            noise_level=float(data.get("noise_level", 0.0)),
            noise_seed=int(data.get("noise_seed", 0)),
            mesh_factor=float(data.get("mesh_factor", 1.0)),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path) -> "MeasurementSet":
        return cls.from_dict(json.loads(Path(path).read_text()))


def reference_fields(reference, upper, lower, wave, receivers, frequencies, mesh_factor=2.0, points_per_wavelength=10.0):
    """Noise-free scattered fields of ``reference`` at each frequency."""
    rows = []
    for f in np.atleast_1d(frequencies):
        k1 = wavenumber(upper, f)
        k2 = wavenumber(lower, f)
        w = segment_width(k2, points_per_wavelength) / mesh_factor
        surf = sample_surface(reference, w)
        rows.append(scattered_field(receivers, solve_forward(surf, k1, k2, wave, f), k1))
    return np.array(rows)


def add_noise(clean, noise_level, rng: SeededRng):
    """Fixed-magnitude, random-phase noise: ``u + |u| A exp(2 pi i P)``."""
    if noise_level < 0:
        raise ValueError("noise level must be non-negative")
    clean = np.asarray(clean, dtype=complex)
    if noise_level == 0:
        return clean.copy()
    phases = rng.uniform(clean.shape)
    return clean + np.abs(clean) * noise_level * np.exp(2j * np.pi * phases)


def synthesize_measurements(
    reference,
    upper: Medium,
    lower: Medium,
    wave: IncidentWave,
    receivers: ReceiverArray,
    frequencies,
    noise_level=0.0,
    seed=0,
    mesh_factor=2.0,
    points_per_wavelength=10.0,
    clean=None,
) -> MeasurementSet:
    """Forward-solve ``reference`` and contaminate each sample with noise.

    One uniform phase is drawn per (frequency, receiver); the stream for
    frequency ``m`` is spawned from ``seed`` so it does not depend on how
    many frequencies precede it. ``clean`` may supply precomputed
    noise-free fields.
    """
    frequencies = np.atleast_1d(np.asarray(frequencies, dtype=float))
    if clean is None:
        clean = reference_fields(reference, upper, lower, wave, receivers, frequencies, mesh_factor, points_per_wavelength)
    root = SeededRng(seed)
    noisy = np.array([add_noise(row, noise_level, root.spawn(m)) for m, row in enumerate(clean)])
    return MeasurementSet(receivers, frequencies, noisy, noise_level, seed, mesh_factor, clean_fields=np.asarray(clean))


# --------------------------------------------------------------------------
# config parsing
# --------------------------------------------------------------------------

_UNITS = {
    "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9,
    "m": 1.0, "cm": 1e-2, "mm": 1e-3,
    "%": 1e-2, "deg": math.pi / 180, "rad": 1.0,
    "s/m": 1.0,
}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z%/]+)?\s*$")


def parse_quantity(value):
    """Number in SI units, or a string such as ``"325 MHz"`` or ``"10 cm"``."""
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _QUANTITY.match(value)
        if m:
            number, unit = m.groups()
            if unit is None:
                return float(number)
            scale = _UNITS.get(unit.lower())
            if scale is not None:
                return float(number) * scale
    raise ValueError(f"cannot parse quantity {value!r}")


_NUM = {"anyOf": [{"type": "number"}, {"type": "string"}]}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["surface", "schedule"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "domain_length": _NUM,
        "surface": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["gaussian", "triangular", "coefficients", "flat"]},
                "corr_length": _NUM,
                "height_std": _NUM,
                "taper_width": _NUM,
                "grid_count": {"type": "integer", "minimum": 256},
                "seed": {"type": "integer", "minimum": 0},
                "coeffs": {"type": "array", "items": {"type": "number"}},
                "n_splines": {"type": "integer", "minimum": 1},
                "order": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "upper": {"type": "object"},
        "lower": {"type": "object"},
        "wave": {
            "type": "object",
            "properties": {"theta": _NUM, "taper": _NUM},
            "additionalProperties": False,
        },
        "receivers": {
            "type": "object",
            "properties": {
                "start": _NUM, "stop": _NUM, "step": _NUM, "height": _NUM,
                "include_endpoint": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "schedule": {
            "type": "object",
            "required": ["start", "step", "stop"],
            "properties": {"start": _NUM, "step": _NUM, "stop": _NUM},
            "additionalProperties": False,
        },
        "inverse": {
            "type": "object",
            "properties": {
                "tau": _NUM,
                "threshold": _NUM,
                "max_iterations": {"type": "integer", "minimum": 1},
                "n_splines": {"type": "integer", "minimum": 1},
                "spline_order": {"type": "integer", "minimum": 1},
                "points_per_wavelength": _NUM,
                "jacobian": {"enum": ["exact", "frozen"]},
            },
            "additionalProperties": False,
        },
        "noise_level": _NUM,
        "noise_seed": {"type": "integer", "minimum": 0},
        "mesh_factor": _NUM,
        "compare_single_frequency": {"type": "boolean"},
        "profile_frequencies": {"type": "array", "items": _NUM},
        "sweep": {
            "type": "object",
            "required": ["axis"],
            "properties": {
                "axis": {"enum": ["none", "frequency_step", "noise_level", "receiver_step"]},
                "values": {"type": "array", "items": _NUM},
            },
            "additionalProperties": False,
        },
    },
}


class ConfigError(ValueError):
    """Invalid scenario configuration."""


def _medium(data, default):
    if data is None:
        return default
    return Medium(
        eps_r=parse_quantity(data.get("eps_r", 1.0)),
        mu_r=parse_quantity(data.get("mu_r", 1.0)),
        sigma=parse_quantity(data.get("sigma", 0.0)),
    )


@dataclass
class ScenarioConfig:
    """Everything needed to synthesize data and reconstruct one scenario."""

    surface: dict
    schedule: FrequencySchedule
    name: str = "scenario"
    domain_length: float = 16.0
    upper: Medium = field(default_factory=Medium)
    lower: Medium = field(default_factory=lambda: Medium(4.0, 1.0, 1e-5))
    wave: IncidentWave = field(default_factory=lambda: IncidentWave(0.0, 8.0))
    receivers: dict = field(default_factory=lambda: {"start": -10.0, "stop": 10.0, "step": 0.1, "height": 4.25, "include_endpoint": True})
    inverse: InverseConfig = field(default_factory=InverseConfig)
    noise_level: float = 0.0
    noise_seed: int = 0
    mesh_factor: float = 2.0
    compare_single_frequency: bool = False
    profile_frequencies: tuple = ()
    sweep_axis: str = "none"
    sweep_values: tuple = ()

    def __post_init__(self):
        if self.sweep_axis not in ("none", "frequency_step", "noise_level", "receiver_step"):
            raise ConfigError(f"unknown sweep axis {self.sweep_axis!r}")
        if self.sweep_axis != "none" and not self.sweep_values:
            raise ConfigError("a sweep axis needs at least one value")
        if self.sweep_axis == "none" and self.sweep_values:
            raise ConfigError("sweep values given without a sweep axis")
        if self.noise_level < 0:
            raise ConfigError("noise_level must be non-negative")
        if not self.mesh_factor > 0:
            raise ConfigError("mesh_factor must be positive")

    @classmethod
    def from_dict(cls, data) -> "ScenarioConfig":
        import jsonschema

        try:
            jsonschema.validate(data, SCENARIO_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config error at {where}: {exc.message}") from None
        try:
            return cls._from_valid_dict(data)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"config error: {exc}") from None

    @classmethod
    def _from_valid_dict(cls, data):
        L = parse_quantity(data.get("domain_length", 16.0))
        surface = dict(data["surface"])
        for key in ("corr_length", "height_std", "taper_width"):
            if key in surface:
                surface[key] = parse_quantity(surface[key])
        wave = data.get("wave", {})
        rec = {"start": -10.0, "stop": 10.0, "step": 0.1, "height": 4.25, "include_endpoint": True}
        for key, val in data.get("receivers", {}).items():
            rec[key] = val if key == "include_endpoint" else parse_quantity(val)
        sch = data["schedule"]
        inv = dict(data.get("inverse", {}))
        for key in ("tau", "threshold", "points_per_wavelength"):
            if key in inv:
                inv[key] = parse_quantity(inv[key])
        sweep = data.get("sweep", {"axis": "none"})
        return cls(
            name=data.get("name", "scenario"),
            domain_length=L,
            surface=surface,
            upper=_medium(data.get("upper"), Medium()),
            lower=_medium(data.get("lower"), Medium(4.0, 1.0, 1e-5)),
            wave=IncidentWave(
                parse_quantity(wave.get("theta", 0.0)),
                parse_quantity(wave.get("taper", L / 2)),
            ),
            receivers=rec,
            schedule=FrequencySchedule(parse_quantity(sch["start"]), parse_quantity(sch["step"]), parse_quantity(sch["stop"])),
            inverse=InverseConfig(**inv),
            noise_level=parse_quantity(data.get("noise_level", 0.0)),
            noise_seed=int(data.get("noise_seed", 0)),
            mesh_factor=parse_quantity(data.get("mesh_factor", 2.0)),
            compare_single_frequency=bool(data.get("compare_single_frequency", False)),
            profile_frequencies=tuple(parse_quantity(v) for v in data.get("profile_frequencies", ())),
            sweep_axis=sweep["axis"],
            sweep_values=tuple(parse_quantity(v) for v in sweep.get("values", ())),
        )

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self):
        return {
            "name": self.name,
            "domain_length": self.domain_length,
            "surface": self.surface,
            "upper": self.upper.to_dict(),
            "lower": self.lower.to_dict(),
            "wave": self.wave.to_dict(),
            "receivers": self.receivers,
            "schedule": {"start": self.schedule.start, "step": self.schedule.step, "stop": self.schedule.stop},
            "inverse": {
                "tau": self.inverse.tau,
                "threshold": self.inverse.threshold,
                "max_iterations": self.inverse.max_iterations,
                "n_splines": self.inverse.n_splines,
                "spline_order": self.inverse.spline_order,
                "points_per_wavelength": self.inverse.points_per_wavelength,
                "jacobian": self.inverse.jacobian,
            },
            "noise_level": self.noise_level,
            "noise_seed": self.noise_seed,
            "mesh_factor": self.mesh_factor,
            "compare_single_frequency": self.compare_single_frequency,
            "profile_frequencies": list(self.profile_frequencies),
            "sweep": {"axis": self.sweep_axis, "values": list(self.sweep_values)},
        }

    def with_seed(self, seed: int) -> "ScenarioConfig":
        """Copy with the surface and noise seeds overridden."""
        new = copy.deepcopy(self)
        new.surface["seed"] = int(seed)
        new.noise_seed = int(seed)
        return new

    def build_reference(self):
        s = self.surface
        L = self.domain_length
        kind = s["kind"]
        if kind == "gaussian":
            params = RandomSurfaceParams(
                corr_length=s["corr_length"],
                height_std=s["height_std"],
                domain_length=L,
                grid_count=s.get("grid_count", 4096),
                taper_width=s.get("taper_width", 0.25),
                seed=s.get("seed", 0),
            )
            return generate_gaussian_surface(params)
        if kind == "triangular":
            return triangular_surface(L)
        if kind == "flat":
            x = np.linspace(-L / 2, L / 2, s.get("grid_count", 4096) + 1)
            return GriddedSurface(x, np.zeros_like(x))
        if kind == "coefficients":
            coeffs = np.asarray(s["coeffs"], float)
            basis = SplineBasis(s.get("n_splines", coeffs.size), s.get("order", 3), L)
            return SurfaceModel(basis, coeffs)
        raise ConfigError(f"unknown surface kind {kind!r}")

    def build_receivers(self, step=None) -> ReceiverArray:
        r = self.receivers
        return ReceiverArray.from_grid(
            r["start"], r["stop"], r["step"] if step is None else step, r["height"], r.get("include_endpoint", True)
        )


# --------------------------------------------------------------------------
# running scenarios
# --------------------------------------------------------------------------


@dataclass
class PointResult:
    """Outcome of one sweep point."""

    sweep_value: float | None
    frequencies: list
    n_receivers: int
    results: list = field(default_factory=list)
    single: object = None
    error: str | None = None
    failed: str | None = None

    @property
    def final_err(self):
        return self.results[-1].err if self.results else None

    def to_dict(self):
        out = {
            "sweep_value": self.sweep_value,
            "n_receivers": self.n_receivers,
            "frequencies": [
                {
                    "f": r.frequency,
                    "iterations": r.iterations,
                    "final_step_norm": r.step_norm,
                    "converged": r.converged,
                    "n_segments": r.n_segments,
                    "err": r.err,
                }
                for r in self.results
            ],
            "final_coefficients": self.results[-1].coeffs.tolist() if self.results else [],
            "final_err": self.final_err,
            "error": self.error,
            "failed": self.failed,
        }
        if self.single is not None:
            out["single_frequency"] = {
                "f": self.single.frequency,
                "iterations": self.single.iterations,
                "final_step_norm": self.single.step_norm,
                "converged": self.single.converged,
                "err": self.single.err,
                "coefficients": self.single.coeffs.tolist(),
            }
        return out


@dataclass
class ScenarioReport:
    config: ScenarioConfig
    points: list
    reference: object
    basis: SplineBasis

    def to_dict(self):
        return {
            "name": self.config.name,
            "config": self.config.to_dict(),
            "sweep_axis": self.config.sweep_axis,
            "points": [p.to_dict() for p in self.points],
            "basis": self.basis.to_dict(),
        }

    def profile_frequencies(self):
        if self.config.profile_frequencies:
            return list(self.config.profile_frequencies)
        finals = {p.results[-1].frequency for p in self.points if p.results}
        return sorted(finals)

    def write(self, out_dir, force=False):
        """Write ``report.json``, ``err_curve.csv`` and ``profile_f<MHz>.csv``."""
        out = Path(out_dir)
        report_path = out / "report.json"
        if report_path.exists() and not force:
            raise FileExistsError(f"{report_path} exists (use force to overwrite)")
        out.mkdir(parents=True, exist_ok=True)
        report_path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        with open(out / "err_curve.csv", "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["point", "sweep_value", "frequency_hz", "err", "iterations", "step_norm", "converged"])
            for i, p in enumerate(self.points):
                for r in p.results:
                    wr.writerow([i, _fmt(p.sweep_value), _fmt(r.frequency), _fmt(r.err), r.iterations, _fmt(r.step_norm), int(r.converged)])
        for f in self.profile_frequencies():
            self._write_profile(out / f"profile_f{_mhz(f)}.csv", f)
        return out

    def _write_profile(self, path, frequency):
        L = self.config.domain_length
        k2 = wavenumber(self.config.lower, frequency)
        n = int(round(L / segment_width(k2, self.config.inverse.points_per_wavelength)))
        x = -L / 2 + (np.arange(n) + 0.5) * (L / n)
        cols = {"x": x, "reference": np.asarray(self.reference(x), float)}
        for i, p in enumerate(self.points):
            res = [r for r in p.results if math.isclose(r.frequency, frequency, abs_tol=1e-3)]
            if res:
                cols[f"point{i}"] = SurfaceModel(self.basis, res[0].coeffs)(x)
            if p.single is not None and math.isclose(p.single.frequency, frequency, abs_tol=1e-3):
                cols[f"point{i}_single"] = SurfaceModel(self.basis, p.single.coeffs)(x)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(list(cols))
            for row in zip(*cols.values()):
                wr.writerow([_fmt(v) for v in row])


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v))


def _mhz(f):
    mhz = f / 1e6
    return f"{mhz:g}"


def _point_frequencies(config: ScenarioConfig, value):
    if config.sweep_axis == "frequency_step":
        sch = FrequencySchedule(config.schedule.start, value, config.schedule.stop)
    else:
        sch = config.schedule
    return sch.frequencies


def _is_flat(reference, L, samples=4097):
    # err is undefined against a zero profile
    x = np.linspace(-L / 2, L / 2, samples)
    return not np.any(np.asarray(reference(x), float))


def run_scenario(config: ScenarioConfig, measurements: MeasurementSet | None = None) -> ScenarioReport:
    """Synthesize data and reconstruct for every sweep point.

    Noise-free reference fields are computed once per (frequency, receiver
    layout) and shared between sweep points. A failure at one point is
    recorded on that point and the remaining points still run.
    """
    reference = config.build_reference()
    values = list(config.sweep_values) if config.sweep_axis != "none" else [None]
    clean_cache = {}
    points = []
    for idx, value in enumerate(values):
        step = value if config.sweep_axis == "receiver_step" else None
        receivers = measurements.receivers if measurements is not None else config.build_receivers(step)
        noise = value if config.sweep_axis == "noise_level" else config.noise_level
        freqs = _point_frequencies(config, value)
        point = PointResult(value, [float(f) for f in freqs], receivers.count)
        points.append(point)
        try:
            if measurements is not None:
                data = measurements.select(freqs)
            else:
                clean = []
                for f in freqs:
                    key = (round(float(f), 3), step)
                    if key not in clean_cache:
                        clean_cache[key] = reference_fields(
                            reference, config.upper, config.lower, config.wave, receivers, [f],
                            config.mesh_factor, config.inverse.points_per_wavelength,
                        )[0]
                    clean.append(clean_cache[key])
                seed = config.noise_seed if config.sweep_axis == "none" else SeededRng(config.noise_seed).spawn(idx).seed
                data = synthesize_measurements(
                    reference, config.upper, config.lower, config.wave, receivers, freqs,
                    noise, seed, config.mesh_factor, config.inverse.points_per_wavelength,
                    clean=np.array(clean),
                ).fields
            problem = _Problem(config.upper, config.lower, config.wave, receivers, config.inverse, config.domain_length)
            ref_for_err = None if _is_flat(reference, config.domain_length) else reference
            state = multi_frequency_reconstruct(freqs, data, problem, reference=ref_for_err)
            point.results = state.results
            point.failed = state.failed
            if config.compare_single_frequency:
                single = multi_frequency_reconstruct(freqs[-1:], data[-1:], problem, reference=ref_for_err)
                point.single = single.results[-1] if single.results else None
        except Exception as exc:  # sweep points are independent
            logger.exception("sweep point %d failed", idx)
            point.error = f"{type(exc).__name__}: {exc}"
    basis = SplineBasis(config.inverse.n_splines, config.inverse.spline_order, config.domain_length)
    return ScenarioReport(config, points, reference, basis)
