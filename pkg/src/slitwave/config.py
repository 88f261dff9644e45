"""JSON run configuration."""
from __future__ import annotations

import json
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .core import DEFAULT_SLIT_LENGTH, HBAR, BeamParams, SlitGeometry, Truncation
from .diffraction import CoherenceParams, DetectorScan

DEFAULT_LADDER = [(150, 5), (300, 10), (600, 10), (1200, 15)]


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` is the dotted path of the culprit."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)


class BeamSection(_Section):
    mass_kg: float = Field(gt=0)
    energy_J: Optional[float] = Field(default=None, gt=0)
    wavelength_m: Optional[float] = Field(default=None, gt=0)
    amplitude: float = Field(default=1.0, gt=0)
    hbar_Js: float = Field(default=HBAR, gt=0)

    @model_validator(mode="after")
    def _one_of(self):
        if (self.energy_J is None) == (self.wavelength_m is None):
            raise ValueError("give exactly one of energy_J and wavelength_m")
        return self


class GeometrySection(_Section):
    a1_m: float = Field(gt=0)
    a2_m: Optional[float] = Field(default=None, gt=0)
    b_m: float = Field(default=DEFAULT_SLIT_LENGTH, gt=0)
    c_m: float = Field(gt=0)
    d_m: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _pairs(self):
        if (self.a2_m is None) != (self.d_m is None):
            raise ValueError("a2_m and d_m must be given together or both omitted")
        return self


class ScanSection(_Section):
    l_m: float = Field(gt=0)
    alpha_rad: float = 0.0
    s_min_m: float = -500e-6
    s_max_m: float = 500e-6
    samples: int = Field(default=801, ge=2)

    @model_validator(mode="after")
    def _range(self):
        if not self.s_min_m < self.s_max_m:
            raise ValueError("s_min_m must be below s_max_m")
        DetectorScan(self.l_m, self.s_min_m, self.s_max_m, self.samples, self.alpha_rad)
        return self


class CoherenceSection(_Section):
    c1: float = Field(ge=0)
    c2: float = Field(ge=0)
    lambda_t: Optional[float] = Field(default=None, ge=0, le=1)

    @model_validator(mode="after")
    def _nonzero(self):
        if self.c1 == 0 and self.c2 == 0:
            raise ValueError("c1 and c2 cannot both be zero")
        return self


class TruncationSection(_Section):
    m_max: int = Field(default=600, ge=0)
    n_max: int = Field(default=10, ge=0)
    tail_tolerance: float = Field(default=0.01, gt=0)
    ladder: Optional[list[tuple[int, int]]] = None

    @model_validator(mode="after")
    def _ladder(self):
        if self.ladder is not None:
            if not self.ladder:
                raise ValueError("ladder must not be empty")
            for m, n in self.ladder:
                if m < 0 or n < 0:
                    raise ValueError("ladder entries must be nonnegative")
            for a, b in zip(self.ladder, self.ladder[1:]):
                if b[0] < a[0] or b[1] < a[1] or a == b:
                    raise ValueError(f"ladder must increase: {list(a)} -> {list(b)}")
        return self


class OutputSection(_Section):
    csv: Optional[str] = None
    svg: Optional[str] = None
    report: Optional[str] = None


class ExperimentSection(_Section):
    trace_csv: Optional[str] = None
    shift_m: float = 0.0
    background: float = 0.0
    fit_scale: bool = True
    fit_shift: bool = False
    shift_window_m: tuple[float, float] = (-50e-6, 50e-6)
    shift_step_m: Optional[float] = Field(default=None, gt=0)


class RunConfig(_Section):
    beam: BeamSection
    geometry: GeometrySection
    scan: ScanSection
    coherence: Optional[CoherenceSection] = None
    truncation: TruncationSection = TruncationSection()
    outputs: OutputSection = OutputSection()
    experiment: Optional[ExperimentSection] = None

    @property
    def is_double(self) -> bool:
        return self.geometry.a2_m is not None

    def beam_params(self) -> BeamParams:
        b = self.beam
        if b.energy_J is not None:
            return BeamParams(b.mass_kg, b.energy_J, b.amplitude, b.hbar_Js)
        return BeamParams.from_wavelength(b.wavelength_m, b.mass_kg, b.amplitude, b.hbar_Js)

    def slit_geometry(self) -> SlitGeometry:
        g = self.geometry
        return SlitGeometry(a1=g.a1_m, c=g.c_m, b=g.b_m, a2=g.a2_m, d=g.d_m)

    def detector_scan(self) -> DetectorScan:
        s = self.scan
        return DetectorScan(s.l_m, s.s_min_m, s.s_max_m, s.samples, s.alpha_rad)

    def coherence_params(self) -> Optional[CoherenceParams]:
        c = self.coherence
        return None if c is None else CoherenceParams(c.c1, c.c2, c.lambda_t)

    def truncation_params(self) -> Truncation:
        t = self.truncation
        return Truncation(t.m_max, t.n_max, t.tail_tolerance)

    def to_dict(self) -> dict:
        """Resolved configuration with every default filled in."""
        return self.model_dump(mode="json")


def _path(loc) -> str:
    return ".".join(str(p) for p in loc)


def parse_config(text: str) -> RunConfig:
    """Validate a JSON document into a :class:`RunConfig`.

    Raises :class:`ConfigError` naming the offending field path.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        field = _path(err["loc"])
        if err["type"] == "extra_forbidden":
            msg = f"unknown key {field!r}"
        else:
            msg = f"{field}: {err['msg']}"
        raise ConfigError(msg, field) from None
    # cross-check domain invariants once more through the physics types
    try:
        cfg.beam_params()
        cfg.slit_geometry()
        cfg.detector_scan()
        if cfg.coherence is not None:
            cfg.coherence_params()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg
