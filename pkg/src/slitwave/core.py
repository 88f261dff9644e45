"""In-slit physics: beam and aperture parameters, waveguide modes, slit integrals.

All quantities are SI and stationary; the global time factor exp(-iEt/hbar)
is dropped because every observable is a squared modulus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

#: Reduced Planck constant in J*s, at the four-digit value used for the
#: neutron runs so the reference numbers reproduce exactly.
HBAR = 1.055e-34

#: Mass of the neutron in kg (same precision as above).
NEUTRON_MASS = 1.67e-27

#: Default slit length along x in m. Not part of the published parameter set.
DEFAULT_SLIT_LENGTH = 5e-3


def _require_positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class BeamParams:
    """Monochromatic incident plane wave ``A exp(ikz)``.

    Build from an energy directly or with :meth:`from_wavelength`.
    """

    mass: float
    energy: float
    amplitude: float = 1.0
    hbar: float = HBAR

    def __post_init__(self):
        _require_positive("mass", self.mass)
        _require_positive("energy", self.energy)
        _require_positive("amplitude", self.amplitude)
        _require_positive("hbar", self.hbar)

    @classmethod
    def from_wavelength(cls, wavelength: float, mass: float = NEUTRON_MASS,
                        amplitude: float = 1.0, hbar: float = HBAR) -> "BeamParams":
        _require_positive("wavelength", wavelength)
        _require_positive("hbar", hbar)
        _require_positive("mass", mass)
        k = 2.0 * math.pi / wavelength
        return cls(mass=mass, energy=(hbar * k) ** 2 / (2.0 * mass),
                   amplitude=amplitude, hbar=hbar)

    @property
    def k(self) -> float:
        return wavenumber(self)

    @property
    def wavelength(self) -> float:
        return 2.0 * math.pi / wavenumber(self)


def wavenumber(beam: BeamParams) -> float:
    """Free-space wavenumber ``sqrt(2 M E) / hbar`` in 1/m."""
    return math.sqrt(2.0 * beam.mass * beam.energy) / beam.hbar


@dataclass(frozen=True)
class SlitGeometry:
    """Aperture in the z=0 plane.

    Slit 1 occupies ``0 <= y <= a1``; slit 2, when present, occupies
    ``a1 + d <= y <= a1 + d + a2``. Both span ``0 <= x <= b`` and have
    thickness ``c`` along z. ``a2`` and ``d`` are both None for a single slit.
    """

    a1: float
    c: float
    b: float = DEFAULT_SLIT_LENGTH
    a2: Optional[float] = None
    d: Optional[float] = None

    def __post_init__(self):
        _require_positive("a1", self.a1)
        _require_positive("b", self.b)
        _require_positive("c", self.c)
        if (self.a2 is None) != (self.d is None):
            raise ValueError("a2 and d must be given together (double slit) or both omitted")
        if self.a2 is not None:
            _require_positive("a2", self.a2)
            _require_positive("d", self.d)

    @property
    def is_double(self) -> bool:
        return self.a2 is not None

    def width(self, slit: int) -> float:
        if slit == 1:
            return self.a1
        if slit == 2:
            self.require_double()
            return self.a2
        raise ValueError(f"slit must be 1 or 2, got {slit!r}")

    def offset(self, slit: int) -> float:
        """Lower y edge of the given slit."""
        if slit == 1:
            return 0.0
        if slit == 2:
            self.require_double()
            return self.a1 + self.d
        raise ValueError(f"slit must be 1 or 2, got {slit!r}")

    def require_double(self) -> None:
        if not self.is_double:
            raise ValueError("operation needs a double-slit geometry (a2 and d are missing)")

    @property
    def center_distance(self) -> float:
        """Center-to-center slit separation ``d + (a1 + a2)/2``."""
        self.require_double()
        return self.d + 0.5 * (self.a1 + self.a2)


@dataclass(frozen=True)
class ModeIndex:
    """Index pair of an odd in-slit mode.

    ``m`` runs across the slit width and ``n`` along its length; the
    physical mode numbers are ``2m+1`` and ``2n+1``. Even modes have zero
    overlap with a uniform incident wave and are not representable.
    """

    m: int
    n: int

    def __post_init__(self):
        for name in ("m", "n"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")


@dataclass(frozen=True)
class Truncation:
    m_max: int = 600
    n_max: int = 10
    tail_tolerance: float = 0.01

    def __post_init__(self):
        for name in ("m_max", "n_max"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")
        _require_positive("tail_tolerance", self.tail_tolerance)


def fourier_coefficient(mode: ModeIndex, beam: BeamParams) -> float:
    """Overlap of the uniform incident wave with mode ``mode``: 16A/((2m+1)(2n+1)pi^2)."""
    return 16.0 * beam.amplitude / ((2 * mode.m + 1) * (2 * mode.n + 1) * math.pi ** 2)


def _kz(k: float, transverse_sq) -> np.ndarray:
    """Longitudinal wavenumber, taking the +imaginary root below cutoff."""
    radicand = k * k - np.asarray(transverse_sq, dtype=float)
    root = np.sqrt(np.abs(radicand))
    return np.where(radicand >= 0, root + 0j, 1j * root)


def longitudinal_wavenumber(mode: ModeIndex, width: float, geometry: SlitGeometry,
                            beam: BeamParams) -> complex:
    """k_z of ``mode`` inside the slit of the given width.

    Evanescent modes return a positive imaginary value, so ``exp(i k_z c)``
    decays through the slit.
    """
    if width != geometry.a1 and width != geometry.a2:
        raise ValueError("width must be one of the geometry's slit widths")
    ky = (2 * mode.m + 1) * math.pi / width
    kx = (2 * mode.n + 1) * math.pi / geometry.b
    return complex(_kz(wavenumber(beam), kx * kx + ky * ky))


_SPLIT = 134217729.0  # 2**27 + 1
_PI_HI = 3.141592653589793
_PI_LO = 1.2246467991473532e-16


def _two_prod(a, b):
    """``a * b`` as an unevaluated sum ``hi + lo`` (Dekker)."""
    hi = a * b
    ca = _SPLIT * a
    a_hi = ca - (ca - a)
    a_lo = a - a_hi
    cb = _SPLIT * b
    b_hi = cb - (cb - b)
    b_lo = b - b_hi
    lo = ((a_hi * b_hi - hi) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return hi, lo


def _reduced_phase(q, w, j, sign):
    """``q w + sign j pi`` to about twice binary64 precision, as ``(hi, lo)``."""
    p_hi, p_lo = _two_prod(q, w)
    r_hi, r_lo = _two_prod(sign * j, _PI_HI)
    r_lo = r_lo + sign * j * _PI_LO
    s = p_hi + r_hi
    bb = s - p_hi
    err = (p_hi - (s - bb)) + (r_hi - bb)
    lo = err + p_lo + r_lo
    hi = s + lo
    return hi, lo - (hi - s)


def slit_integral(mode_number, q, width):
    r"""Closed form of :math:`\int_0^w e^{-iqy} \sin(\mu y)\,dy` with ``mu = j pi / w``.

    ``mode_number`` is the integer ``j``; arrays broadcast. The textbook
    form ``mu (1 - (-1)^j e^{-iqw}) / (mu^2 - q^2)`` has a removable
    singularity at ``q = +-mu``. Writing ``eta`` for whichever of ``q - mu``
    and ``q + mu`` is smaller in magnitude, ``(-1)^j e^{-iqw} = e^{-i eta w}``
    exactly, which gives::

        I = -2i mu / (other root) * sin(eta w / 2) / eta * e^{-i eta w / 2}

    This is free of cancellation for every ``q`` and reduces to ``-i w / 2``
    at ``q = mu``. The reduced phase ``eta w = q w -+ j pi`` is formed with
    error-free products so that the result stays accurate near the zeros
    of ``sin(eta w / 2)``, where a rounded phase would dominate.
    """
    j = np.asarray(mode_number)
    q = np.asarray(q, dtype=float)
    w = np.asarray(width, dtype=float)
    mu = j * np.pi / w
    near_plus = np.abs(q - mu) <= np.abs(q + mu)
    other = np.where(near_plus, q + mu, q - mu)
    hi, lo = _reduced_phase(q, w, j.astype(float), np.where(near_plus, -1.0, 1.0))
    h_hi, h_lo = 0.5 * hi, 0.5 * lo
    # sin(eta w / 2) / eta = (w / 2) sin(h) / h, finite at h = 0
    safe = np.where(h_hi == 0, 1.0, h_hi)
    sin_h = np.sin(h_hi) + h_lo * np.cos(h_hi)
    ratio = np.where(h_hi == 0, 1.0, sin_h / (safe + h_lo))
    phase = np.exp(-1j * h_hi) * (1.0 - 1j * h_lo)
    out = (-2j * mu / other) * (0.5 * w * ratio) * phase
    return out[()] if out.ndim == 0 else out


def in_slit_wavefunction(x: float, y: float, z: float, slit: int, geometry: SlitGeometry,
                         beam: BeamParams, trunc: Truncation) -> complex:
    """Truncated mode sum for the stationary wave inside slit 1 or 2."""
    width = geometry.width(slit)
    y0 = geometry.offset(slit)
    tol = 1e-12 * max(geometry.b, width, geometry.c)
    if not (-tol <= x <= geometry.b + tol):
        raise ValueError(f"x={x!r} lies outside the slit length [0, {geometry.b}]")
    if not (y0 - tol <= y <= y0 + width + tol):
        raise ValueError(f"y={y!r} lies outside slit {slit} [{y0}, {y0 + width}]")
    if not (-tol <= z <= geometry.c + tol):
        raise ValueError(f"z={z!r} lies outside the slit thickness [0, {geometry.c}]")

    jm = 2 * np.arange(trunc.m_max + 1) + 1
    jn = 2 * np.arange(trunc.n_max + 1) + 1
    ky = jm * np.pi / width
    kx = jn * np.pi / geometry.b
    kz = _kz(wavenumber(beam), kx[None, :] ** 2 + ky[:, None] ** 2)
    coeff = 16.0 * beam.amplitude / (np.pi ** 2 * jm[:, None] * jn[None, :])
    terms = (coeff * np.sin(kx * x)[None, :] * np.sin(ky * (y - y0))[:, None]
             * np.exp(1j * kz * z))
    return complex(terms.sum())
