"""Oracles, fringe metrics, convergence studies and comparison with measured traces."""
from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .core import BeamParams, SlitGeometry, Truncation
from .diffraction import (CoherenceParams, DetectorScan, IntensityProfile, intensity_double,
                          intensity_single, mix_intensity)


class NoFringeError(ValueError):
    """Profile has no interior maximum with a neighbouring minimum."""


class QuadratureError(RuntimeError):
    pass


class FarFieldError(ValueError):
    pass


# ---------------------------------------------------------------------------
# fringe visibility

def fringe_visibility(i_max: float, i_min: float) -> float:
    """(I_max - I_min) / (I_max + I_min)."""
    if i_max < i_min or i_min < 0:
        raise ValueError("need i_max >= i_min >= 0")
    if i_max + i_min == 0:
        return 0.0
    return float((i_max - i_min) / (i_max + i_min))


@dataclass(frozen=True)
class FringeReport:
    i_max: float
    i_min: float
    visibility: float
    s_max: float
    s_min_loc: float
    side: str = "lower of the two adjacent minima"


def local_extrema(values) -> tuple[np.ndarray, np.ndarray]:
    """Indices of interior local maxima and minima.

    A sample (or a flat run of equal samples) counts when it is strictly above
    (below) both neighbours of the run; a run is reported at its leftmost sample.
    """
    v = np.asarray(values, dtype=float)
    maxima, minima = [], []
    i = 1
    n = v.size
    while i < n - 1:
        j = i
        while j + 1 < n and v[j + 1] == v[i]:
            j += 1
        if j < n - 1:
            left, right = v[i - 1], v[j + 1]
            if v[i] > left and v[i] > right:
                maxima.append(i)
            elif v[i] < left and v[i] < right:
                minima.append(i)
        i = j + 1
    return np.array(maxima, dtype=int), np.array(minima, dtype=int)


def _parabolic(s, v, i):
    """Vertex of the parabola through samples i-1, i, i+1."""
    y0, y1, y2 = v[i - 1], v[i], v[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0 or s[i + 1] - s[i] != s[i] - s[i - 1]:
        return s[i], y1
    off = 0.5 * (y0 - y2) / denom
    h = s[i + 1] - s[i]
    return s[i] + off * h, y1 - 0.25 * (y0 - y2) * off


def visibility(profile, refine: bool = False) -> FringeReport:
    """Visibility of the central fringe of a sampled profile.

    The central maximum is the highest interior local maximum; of the two
    local minima adjacent to it the lower one is used. ``refine`` replaces
    the sampled extrema by parabolic vertices.
    """
    s = np.asarray(profile.s, dtype=float)
    v = np.asarray(profile.intensity, dtype=float)
    if v.size < 5:
        raise ValueError("visibility needs at least 5 samples")
    maxima, minima = local_extrema(v)
    if maxima.size == 0:
        raise NoFringeError("profile has no interior maximum")
    imax = int(maxima[np.argmax(v[maxima])])
    left = minima[minima < imax]
    right = minima[minima > imax]
    candidates = ([int(left[-1])] if left.size else []) + ([int(right[0])] if right.size else [])
    if not candidates:
        raise NoFringeError("no local minimum next to the central maximum")
    imin = min(candidates, key=lambda i: (v[i], i))
    s_hi, i_hi = (s[imax], v[imax])
    s_lo, i_lo = (s[imin], v[imin])
    if refine:
        s_hi, i_hi = _parabolic(s, v, imax)
        s_lo, i_lo = _parabolic(s, v, imin)
        i_lo = max(i_lo, 0.0)
    return FringeReport(i_max=float(i_hi), i_min=float(i_lo),
                        visibility=fringe_visibility(i_hi, i_lo),
                        s_max=float(s_hi), s_min_loc=float(s_lo))


def fringe_period(profile, half_window: float, center: float = 0.0) -> float:
    """Mean spacing of local maxima with ``|s - center| <= half_window``."""
    s = np.asarray(profile.s, dtype=float)
    maxima, _ = local_extrema(profile.intensity)
    peaks = s[maxima]
    peaks = peaks[np.abs(peaks - center) <= half_window]
    if peaks.size < 2:
        raise NoFringeError("fewer than two maxima in the window")
    return float((peaks[-1] - peaks[0]) / (peaks.size - 1))


# ---------------------------------------------------------------------------
# independent oracles

_LD = np.longdouble
_PI_LD = _LD(4) * np.arctan(_LD(1))
_GL_CACHE: dict = {}


def _gauss_legendre(order: int):
    """Gauss-Legendre nodes and weights on [0, 1] in extended precision."""
    if order not in _GL_CACHE:
        x = np.polynomial.legendre.leggauss(order)[0].astype(_LD)
        for _ in range(4):
            p0, p1 = np.ones_like(x), x
            for k in range(2, order + 1):
                p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
            dp = order * (x * p1 - p0) / (x * x - 1)
            x = x - p1 / dp
        w = 2 / ((1 - x * x) * dp * dp)
        _GL_CACHE[order] = ((x + 1) / 2, w / 2)
    return _GL_CACHE[order]


def _reduced(phase):
    """Extended-precision phase folded into [-pi, pi], returned as binary64."""
    return (phase - 2 * _PI_LD * np.round(phase / (2 * _PI_LD))).astype(float)


def quadrature_slit_integral(mode_number: int, q: float, width: float, offset: float = 0.0,
                             epsabs: float = 1e-12, epsrel: float = 1e-14,
                             order: int = 20, max_panels: int = 1 << 16) -> complex:
    """Numerical value of ``int e^{-iqy} sin(j pi (y - y0)/w) dy`` over ``[y0, y0 + w]``.

    Composite Gauss-Legendre in the scaled variable ``u = (y - y0)/w``,
    starting from one panel per two oscillations and doubling the panel
    count until two estimates agree to ``max(epsabs, epsrel |I|)`` (both on
    the scaled integral).

    The integrand is written as ``(e^{i b1 u} - e^{i b2 u}) / 2i`` with
    ``b1 = j pi - q w`` and ``b2 = -(j pi + q w)``. At node ``x`` of panel
    ``p`` each exponential factors into ``e^{i b p h} e^{i b x h}``, so only
    one phase per panel and per node is needed. Those phases are formed and
    reduced modulo 2 pi in extended precision so that rounding of ``q y``
    does not limit the result near zeros of the integral.
    """
    if width <= 0:
        raise ValueError("width must be positive")
    nodes, weights = _gauss_legendre(order)
    kappa = _LD(mode_number) * _PI_LD
    theta = _LD(q) * _LD(width)
    freqs = (kappa - theta, -(kappa + theta))
    wt = weights.astype(float)

    def panel_sum(b, panels):
        h = _LD(1) / panels
        outer = np.exp(1j * _reduced(b * h * np.arange(panels, dtype=_LD)))
        inner = np.exp(1j * _reduced(b * h * nodes))
        return np.sum(outer[:, None] * (inner * wt)[None, :]) * float(h)

    def estimate(panels):
        return (panel_sum(freqs[0], panels) - panel_sum(freqs[1], panels)) / 2j

    front = np.exp(-1j * _reduced(_LD(q) * _LD(offset)))
    span = float(kappa) + abs(q * width)
    panels = max(1, int(math.ceil(span / (4 * math.pi))))
    if 2 * panels > max_panels:
        raise QuadratureError(f"j={mode_number}, q={q!r}, width={width!r} needs more than "
                              f"{max_panels} panels")
    prev = estimate(panels)
    while panels < max_panels:
        panels *= 2
        cur = estimate(panels)
        if abs(cur - prev) <= max(epsabs, epsrel * abs(cur)):
            return complex(front * cur * width)
        prev = cur
    raise QuadratureError(f"quadrature did not converge for j={mode_number}, q={q!r}, "
                          f"width={width!r} within {max_panels} panels")


def oracle_slit_amplitude(slit: int, s: float, geometry: SlitGeometry, beam: BeamParams,
                          scan: DetectorScan, trunc: Truncation) -> complex:
    """Term-by-term mode sum with every slit integral done by quadrature.

    Meant for small truncations; shares no code with the closed-form path.
    """
    k = math.sqrt(2.0 * beam.mass * beam.energy) / beam.hbar
    if slit == 1:
        width, y0 = geometry.a1, 0.0
    elif slit == 2:
        if geometry.a2 is None:
            raise ValueError("slit 2 needs a double-slit geometry")
        width, y0 = geometry.a2, geometry.a1 + geometry.d
    else:
        raise ValueError("slit must be 1 or 2")
    r = math.sqrt(scan.l ** 2 + s ** 2)
    sin_b = s / r
    cos_t = math.sqrt(math.cos(scan.alpha) ** 2 - sin_b ** 2)
    qx = k * math.sin(scan.alpha)
    qy = k * sin_b
    x_int = [quadrature_slit_integral(2 * n + 1, qx, geometry.b) for n in range(trunc.n_max + 1)]
    total = 0j
    for m in range(trunc.m_max + 1):
        y_int = quadrature_slit_integral(2 * m + 1, qy, width, offset=y0)
        for n in range(trunc.n_max + 1):
            rad = k ** 2 - ((2 * n + 1) * math.pi / geometry.b) ** 2 \
                - ((2 * m + 1) * math.pi / width) ** 2
            kz = math.sqrt(rad) if rad >= 0 else 1j * math.sqrt(-rad)
            d_mn = 16.0 * beam.amplitude / ((2 * m + 1) * (2 * n + 1) * math.pi ** 2)
            total += d_mn * cmath.exp(1j * kz * geometry.c) \
                * (1j * kz + (1j * k - 1.0 / r) * cos_t) * x_int[n] * y_int
    return -cmath.exp(1j * k * r) / (4.0 * math.pi * r) * total


def _check_far_field(width: float, wavelength: float, l: float, max_fresnel: float):
    fresnel = width ** 2 / (wavelength * l)
    if fresnel > max_fresnel:
        raise FarFieldError(f"Fresnel number {fresnel:.3g} of a {width:g} m slit exceeds "
                            f"{max_fresnel:g}; the far-field formula does not apply")


def fraunhofer_single(s, a: float, wavelength: float, l: float, max_fresnel: float = 1.0):
    """Classical single-slit pattern ``a^2 sinc^2(a sin(theta)/lambda)``, sin(theta) = s/R."""
    _check_far_field(a, wavelength, l, max_fresnel)
    s = np.asarray(s, dtype=float)
    sin_t = s / np.hypot(l, s)
    return (a * np.sinc(a * sin_t / wavelength)) ** 2


def fraunhofer_double(s, a1: float, a2: float, D: float, wavelength: float, l: float,
                      max_fresnel: float = 1.0):
    """Two-slit pattern for unequal widths and center-to-center distance ``D``."""
    for a in (a1, a2):
        _check_far_field(a, wavelength, l, max_fresnel)
    s = np.asarray(s, dtype=float)
    sin_t = s / np.hypot(l, s)
    f1 = a1 * np.sinc(a1 * sin_t / wavelength)
    f2 = a2 * np.sinc(a2 * sin_t / wavelength)
    phase = np.exp(-2j * np.pi * D * sin_t / wavelength)
    return np.abs(f1 + f2 * phase) ** 2


def fraunhofer_single_zero(j: int, a: float, wavelength: float, l: float) -> float:
    """Screen position of the j-th zero of the single-slit pattern."""
    sin_t = j * wavelength / a
    return l * sin_t / math.sqrt(1.0 - sin_t ** 2)


# ---------------------------------------------------------------------------
# truncation convergence

@dataclass(frozen=True)
class ConvergenceReport:
    ladder: list
    changes: list
    raw_changes: list
    converged: bool
    tail_tolerance: float
    metric: str = "max |I_i/max I_i - I_(i-1)/max I_(i-1)| over the scan"
    final_profile: Optional[IntensityProfile] = field(default=None, repr=False, compare=False)


def _check_ladder(ladder):
    if not ladder:
        raise ValueError("ladder must not be empty")
    for (m0, n0), (m1, n1) in zip(ladder, ladder[1:]):
        if m1 < m0 or n1 < n0 or (m1, n1) == (m0, n0):
            raise ValueError(f"ladder must increase: {(m0, n0)} -> {(m1, n1)}")


def convergence_study(scan: DetectorScan, geometry: SlitGeometry, beam: BeamParams,
                      coherence: Optional[CoherenceParams], ladder: Sequence[tuple],
                      tail_tolerance: float = 0.01, threads: Optional[int] = None
                      ) -> ConvergenceReport:
    """Re-run the profile along a truncation ladder and track how much it moves.

    Intensities carry an arbitrary scale, so each step compares
    peak-normalised profiles; the unnormalised change relative to the peak
    is kept in ``raw_changes``.
    """
    ladder = [(int(m), int(n)) for m, n in ladder]
    _check_ladder(ladder)
    profiles = []
    for m, n in ladder:
        trunc = Truncation(m, n, tail_tolerance)
        if geometry.is_double and coherence is not None:
            p = intensity_double(scan, geometry, beam, coherence, trunc, threads)
        else:
            p = intensity_single(scan, geometry, beam, trunc, threads)
        profiles.append(p)
    changes, raw = [], []
    for prev, cur in zip((p.intensity for p in profiles), (p.intensity for p in profiles[1:])):
        changes.append(float(np.max(np.abs(cur / cur.max() - prev / prev.max()))))
        raw.append(float(np.max(np.abs(cur - prev)) / cur.max()))
    converged = bool(changes) and changes[-1] < tail_tolerance
    return ConvergenceReport(ladder, changes, raw, converged, tail_tolerance,
                             final_profile=profiles[-1])


# ---------------------------------------------------------------------------
# measured traces

@dataclass
class ExperimentalTrace:
    s: np.ndarray
    counts: np.ndarray
    shift: float = 0.0
    background: float = 0.0

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if self.s.shape != self.counts.shape or self.s.ndim != 1:
            raise ValueError("s and counts must be 1-D and of equal length")
        if np.any(self.counts < 0) or not np.all(np.isfinite(self.counts)):
            raise ValueError("counts must be finite and nonnegative")
        if np.any(np.diff(self.s) <= 0):
            raise ValueError("s must be strictly increasing")

    @property
    def intensity(self) -> np.ndarray:
        return self.counts - self.background


def read_trace_csv(text: str, shift: float = 0.0, background: float = 0.0) -> ExperimentalTrace:
    """Parse a ``s_m,counts`` CSV document."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["s_m", "counts"]:
        raise ValueError("trace CSV must start with the header 's_m,counts'")
    s, counts = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ValueError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            s.append(float(row[0]))
            counts.append(float(row[1]))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return ExperimentalTrace(np.array(s), np.array(counts), shift, background)


@dataclass
class ComparisonReport:
    scale: float
    shift: float
    sse: float
    s: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)

    @property
    def n_points(self) -> int:
        return int(self.s.size)


def _fit_at(profile, trace, shift, fit_scale):
    s_model = trace.s - shift
    inside = (s_model >= profile.s[0]) & (s_model <= profile.s[-1])
    if not np.any(inside):
        return None
    model = np.interp(s_model[inside], profile.s, profile.intensity)
    data = trace.intensity[inside]
    scale = 1.0
    if fit_scale:
        denom = float(np.dot(model, model))
        scale = float(np.dot(data, model)) / denom if denom > 0 else 0.0
    res = data - scale * model
    return scale, trace.s[inside], res


def compare_to_experiment(profile, trace: ExperimentalTrace, fit_scale: bool = True,
                          fit_shift: bool = False, shift_window: tuple = (-50e-6, 50e-6),
                          shift_step: Optional[float] = None) -> ComparisonReport:
    """Residuals of a measured trace against a model profile.

    The model is linearly interpolated at ``trace.s - shift``. With
    ``fit_shift`` the shift (added to ``trace.shift``) is chosen on a grid
    over ``shift_window`` by lowest mean squared residual, ties to the left;
    with ``fit_scale`` the least-squares scale is applied at each shift.
    """
    candidates = [0.0]
    if fit_shift:
        step = shift_step or float(np.min(np.diff(profile.s)))
        lo, hi = shift_window
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        candidates = list(lo + step * np.arange(count))
    best = None
    for extra in candidates:
        shift = trace.shift + extra
        fit = _fit_at(profile, trace, shift, fit_scale)
        if fit is None:
            continue
        scale, s_used, res = fit
        mse = float(np.mean(res ** 2))
        if best is None or mse < best[0]:
            best = (mse, shift, scale, s_used, res)
    if best is None:
        raise ValueError("trace does not overlap the profile after shifting")
    _, shift, scale, s_used, res = best
    return ComparisonReport(scale=scale, shift=float(shift), sse=float(np.sum(res ** 2)),
                            s=s_used, residuals=res)


@dataclass(frozen=True)
class CoherenceFit:
    lambda_t: float
    scale: float
    sse: float


def fit_coherence_degree(s, psi1, psi2, coherence: CoherenceParams,
                         trace: ExperimentalTrace) -> CoherenceFit:
    """Least-squares coherence degree for a measured double-slit trace.

    The overall prefactor is refitted for every trial value, so only the
    depth of the fringes decides. The alternative estimate is simply the
    trace's own visibility, see :func:`visibility`.
    """
    s = np.asarray(s, dtype=float)
    s_model = trace.s - trace.shift
    inside = (s_model >= s[0]) & (s_model <= s[-1])
    if not np.any(inside):
        raise ValueError("trace does not overlap the model grid")
    data = trace.intensity[inside]

    def sse(lam):
        cp = CoherenceParams(coherence.c1, coherence.c2, float(lam))
        model = (1.0 + cp.alpha_overlap ** 2) * mix_intensity(psi1, psi2, cp.c1, cp.c2, lam)
        model = np.interp(s_model[inside], s, model)
        scale = float(np.dot(data, model) / np.dot(model, model))
        return float(np.sum((data - scale * model) ** 2)), scale

    grid = np.linspace(0.0, 1.0, 21)
    start = grid[int(np.argmin([sse(g)[0] for g in grid]))]
    lo, hi = max(0.0, start - 0.05), min(1.0, start + 0.05)
    res = optimize.minimize_scalar(lambda x: sse(x)[0], bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-8})
    lam = float(res.x) if sse(res.x)[0] <= sse(start)[0] else float(start)
    err, scale = sse(lam)
    return CoherenceFit(lambda_t=lam, scale=scale, sse=err)
