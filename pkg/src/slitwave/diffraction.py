"""Far-field Kirchhoff propagation of the in-slit modes to the screen."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import BeamParams, SlitGeometry, Truncation, _kz, slit_integral, wavenumber

#: Detector points evaluated together. Fixed so that the floating-point
#: path of every point is independent of how blocks are spread over threads.
BLOCK = 64


@dataclass(frozen=True)
class DetectorScan:
    """Screen at distance ``l`` sampled at ``samples`` points of ``s`` along y."""

    l: float
    s_min: float = -500e-6
    s_max: float = 500e-6
    samples: int = 801
    alpha: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.l) and self.l > 0):
            raise ValueError(f"l must be positive, got {self.l!r}")
        if not isinstance(self.samples, (int, np.integer)) or isinstance(self.samples, bool):
            raise ValueError(f"samples must be an integer, got {self.samples!r}")
        if not (math.isfinite(self.s_min) and math.isfinite(self.s_max)):
            raise ValueError("s_min and s_max must be finite")
        if self.s_min == self.s_max:
            if self.samples != 1:
                raise ValueError("a zero-width scan takes exactly one sample")
        else:
            if self.samples < 2:
                raise ValueError(f"samples must be >= 2, got {self.samples!r}")
            if self.s_min > self.s_max:
                raise ValueError("s_min must be below s_max")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        for s in (self.s_min, self.s_max):
            check_screen_point(s, self.l, self.alpha)

    @property
    def s(self) -> np.ndarray:
        if self.samples == 1:
            return np.array([self.s_min])
        return np.linspace(self.s_min, self.s_max, self.samples)


def check_screen_point(s, l: float, alpha: float) -> None:
    s = np.asarray(s, dtype=float)
    r = np.hypot(l, s)
    if np.any(math.cos(alpha) ** 2 < (s / r) ** 2):
        raise ValueError("screen point outside the propagating cone: cos^2(alpha) < (s/R)^2")


@dataclass(frozen=True)
class CoherenceParams:
    """Superposition weights and the coherence degree of the two paths.

    ``c1`` and ``c2`` are rescaled to unit norm on construction; the ratio is
    kept. ``lambda_t`` is None for a fully coherent superposition.
    """

    c1: float
    c2: float
    lambda_t: Optional[float] = None

    def __post_init__(self):
        if not (self.c1 >= 0 and self.c2 >= 0) or not math.isfinite(self.c1 + self.c2):
            raise ValueError("c1 and c2 must be nonnegative finite numbers")
        norm = math.hypot(self.c1, self.c2)
        if norm == 0:
            raise ValueError("c1 and c2 cannot both vanish")
        object.__setattr__(self, "c1", self.c1 / norm)
        object.__setattr__(self, "c2", self.c2 / norm)
        if self.lambda_t is not None and not (0.0 <= self.lambda_t <= 1.0):
            raise ValueError(f"lambda_t must lie in [0, 1], got {self.lambda_t!r}")

    @property
    def alpha_overlap(self) -> float:
        """|<E2|E1>| recovered from the coherence degree (root not above 1)."""
        lam = 1.0 if self.lambda_t is None else self.lambda_t
        return lam / (1.0 + math.sqrt(1.0 - lam * lam))


def coherence_degree(alpha_overlap: float) -> float:
    return 2.0 * alpha_overlap / (1.0 + alpha_overlap ** 2)


@dataclass
class IntensityProfile:
    s: np.ndarray
    intensity: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.s.shape != self.intensity.shape or self.s.ndim != 1:
            raise ValueError("s and intensity must be 1-D arrays of equal length")
        if not np.all(np.isfinite(self.intensity)) or np.any(self.intensity < 0):
            raise ValueError("intensities must be finite and nonnegative")
        if np.any(np.diff(self.s) <= 0):
            raise ValueError("s must be strictly increasing")


class _SlitModes:
    """Per-slit mode sums that do not depend on the screen point.

    For each width index m the length direction is summed out once::

        P_m = sum_n D_mn e^{i kz c} X_n * i kz
        Q_m = sum_n D_mn e^{i kz c} X_n

    so that a screen point only costs one pass over m.
    """

    def __init__(self, slit: int, geometry: SlitGeometry, beam: BeamParams,
                 alpha: float, trunc: Truncation):
        self.k = wavenumber(beam)
        self.width = geometry.width(slit)
        self.offset = geometry.offset(slit)
        self.jm = 2 * np.arange(trunc.m_max + 1) + 1
        jn = 2 * np.arange(trunc.n_max + 1) + 1
        ky = self.jm * np.pi / self.width
        kx = jn * np.pi / geometry.b
        kz = _kz(self.k, kx[None, :] ** 2 + ky[:, None] ** 2)
        coeff = 16.0 * beam.amplitude / (np.pi ** 2 * self.jm[:, None] * jn[None, :])
        x_int = slit_integral(jn, self.k * math.sin(alpha), geometry.b)
        weight = coeff * np.exp(1j * kz * geometry.c) * x_int[None, :]
        self.p = (weight * 1j * kz).sum(axis=1)
        self.q = weight.sum(axis=1)

    def amplitude(self, s: np.ndarray, l: float, alpha: float) -> np.ndarray:
        r = np.hypot(l, s)
        sin_beta = s / r
        qy = self.k * sin_beta
        bracket = (1j * self.k - 1.0 / r) * np.sqrt(math.cos(alpha) ** 2 - sin_beta ** 2)
        y_int = slit_integral(self.jm[None, :], qy[:, None], self.width)
        if self.offset:
            y_int = y_int * np.exp(-1j * qy * self.offset)[:, None]
        total = (y_int * (self.p[None, :] + bracket[:, None] * self.q[None, :])).sum(axis=1)
        return -np.exp(1j * self.k * r) / (4.0 * np.pi * r) * total


def _blocked(fn, s: np.ndarray, threads: Optional[int]) -> list:
    """Apply ``fn`` to fixed-size blocks of ``s`` (last block padded), in order."""
    n = s.size
    nblocks = -(-n // BLOCK)
    padded = np.full(nblocks * BLOCK, s[-1])
    padded[:n] = s
    blocks = [padded[i * BLOCK:(i + 1) * BLOCK] for i in range(nblocks)]
    workers = threads or os.cpu_count() or 1
    if workers == 1 or nblocks == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, blocks))


def slit_amplitude(slit: int, s, geometry: SlitGeometry, beam: BeamParams,
                   scan: DetectorScan, trunc: Truncation, threads: Optional[int] = None):
    """Diffracted amplitude of one slit at screen coordinate(s) ``s``.

    Returns a complex scalar for scalar ``s``, else an array.
    """
    if slit == 2:
        geometry.require_double()
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    check_screen_point(s_arr, scan.l, scan.alpha)
    modes = _SlitModes(slit, geometry, beam, scan.alpha, trunc)
    parts = _blocked(lambda b: modes.amplitude(b, scan.l, scan.alpha), s_arr, threads)
    out = np.concatenate(parts)[:s_arr.size]
    return complex(out[0]) if np.ndim(s) == 0 else out


def slit_amplitudes(s, geometry: SlitGeometry, beam: BeamParams, scan: DetectorScan,
                    trunc: Truncation, threads: Optional[int] = None):
    """Both slit amplitudes over the array ``s``, computed in one pass."""
    geometry.require_double()
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    check_screen_point(s_arr, scan.l, scan.alpha)
    m1 = _SlitModes(1, geometry, beam, scan.alpha, trunc)
    m2 = _SlitModes(2, geometry, beam, scan.alpha, trunc)
    parts = _blocked(lambda b: (m1.amplitude(b, scan.l, scan.alpha),
                                m2.amplitude(b, scan.l, scan.alpha)), s_arr, threads)
    n = s_arr.size
    psi1 = np.concatenate([p[0] for p in parts])[:n]
    psi2 = np.concatenate([p[1] for p in parts])[:n]
    return psi1, psi2


def coherent_amplitude(s, geometry: SlitGeometry, beam: BeamParams, scan: DetectorScan,
                       coherence: CoherenceParams, trunc: Truncation,
                       threads: Optional[int] = None):
    psi1, psi2 = slit_amplitudes(s, geometry, beam, scan, trunc, threads)
    out = coherence.c1 * psi1 + coherence.c2 * psi2
    return complex(out[0]) if np.ndim(s) == 0 else out


def mix_intensity(psi1, psi2, c1: float, c2: float, lambda_t: float = 1.0) -> np.ndarray:
    """Two-path intensity with the cross term damped by ``lambda_t``."""
    cross = np.real(np.conj(psi1) * psi2)
    return c1 * c1 * np.abs(psi1) ** 2 + c2 * c2 * np.abs(psi2) ** 2 \
        + 2.0 * c1 * c2 * lambda_t * cross


def _meta(kind, scan, geometry, beam, trunc, coherence=None) -> dict:
    meta = {
        "kind": kind,
        "geometry": {"a1": geometry.a1, "a2": geometry.a2, "b": geometry.b,
                     "c": geometry.c, "d": geometry.d},
        "beam": {"mass": beam.mass, "energy": beam.energy, "amplitude": beam.amplitude,
                 "hbar": beam.hbar, "k": beam.k, "wavelength": beam.wavelength},
        "scan": {"l": scan.l, "alpha": scan.alpha, "s_min": scan.s_min,
                 "s_max": scan.s_max, "samples": scan.samples},
        "truncation": {"m_max": trunc.m_max, "n_max": trunc.n_max,
                       "tail_tolerance": trunc.tail_tolerance},
        "modes": {"width": trunc.m_max + 1, "length": trunc.n_max + 1},
    }
    if coherence is not None:
        meta["coherence"] = {"c1": coherence.c1, "c2": coherence.c2,
                             "lambda_t": coherence.lambda_t,
                             "alpha_overlap": coherence.alpha_overlap}
    return meta


def intensity_single(scan: DetectorScan, geometry: SlitGeometry, beam: BeamParams,
                     trunc: Truncation, threads: Optional[int] = None) -> IntensityProfile:
    """|psi_1|^2 over the scan (slit 1 alone)."""
    s = scan.s
    psi = slit_amplitude(1, s, geometry, beam, scan, trunc, threads)
    return IntensityProfile(s, np.abs(psi) ** 2, _meta("single", scan, geometry, beam, trunc))


def intensity_coherent(scan: DetectorScan, geometry: SlitGeometry, beam: BeamParams,
                       coherence: CoherenceParams, trunc: Truncation,
                       threads: Optional[int] = None) -> IntensityProfile:
    s = scan.s
    psi1, psi2 = slit_amplitudes(s, geometry, beam, scan, trunc, threads)
    intensity = mix_intensity(psi1, psi2, coherence.c1, coherence.c2)
    return IntensityProfile(s, np.maximum(intensity, 0.0),
                            _meta("coherent", scan, geometry, beam, trunc, coherence))


def intensity_decoherent(scan: DetectorScan, geometry: SlitGeometry, beam: BeamParams,
                         coherence: CoherenceParams, trunc: Truncation,
                         threads: Optional[int] = None) -> IntensityProfile:
    """Double-slit intensity with the environment-damped cross term.

    ``(1 + |alpha_t|^2) (c1^2 |psi1|^2 + c2^2 |psi2|^2 + 2 c1 c2 Lambda_t Re[psi1* psi2])``
    """
    lam = 1.0 if coherence.lambda_t is None else coherence.lambda_t
    s = scan.s
    psi1, psi2 = slit_amplitudes(s, geometry, beam, scan, trunc, threads)
    a = coherence.alpha_overlap
    intensity = (1.0 + a * a) * mix_intensity(psi1, psi2, coherence.c1, coherence.c2, lam)
    return IntensityProfile(s, np.maximum(intensity, 0.0),
                            _meta("decoherent", scan, geometry, beam, trunc, coherence))


def intensity_double(scan, geometry, beam, coherence, trunc, threads=None) -> IntensityProfile:
    """Coherent profile when ``lambda_t`` is None, decoherent otherwise."""
    if coherence.lambda_t is None:
        return intensity_coherent(scan, geometry, beam, coherence, trunc, threads)
    return intensity_decoherent(scan, geometry, beam, coherence, trunc, threads)
