"""Profile CSV, SVG plots and all-or-nothing file emission."""
from __future__ import annotations

import json
import os
import tempfile
from html import escape
from pathlib import Path

import numpy as np


def profile_csv(profile) -> str:
    """``s_m,intensity`` rows with shortest round-trip float formatting."""
    lines = ["s_m,intensity"]
    lines += [f"{float(s)!r},{float(v)!r}" for s, v in zip(profile.s, profile.intensity)]
    return "\n".join(lines) + "\n"


def trace_csv(trace) -> str:
    lines = ["s_m,counts"]
    lines += [f"{float(s)!r},{float(v)!r}" for s, v in zip(trace.s, trace.counts)]
    return "\n".join(lines) + "\n"


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


_W, _H, _PAD = 720, 420, 50


def profile_svg(profile, trace=None, title: str = "") -> str:
    """Line plot of the model profile with an optional scatter of measured counts.

    The trace is drawn against the same axis after subtracting its
    background and applying its shift.
    """
    s_um = np.asarray(profile.s) * 1e6
    y = np.asarray(profile.intensity, dtype=float)
    series_x = [s_um]
    series_y = [y]
    if trace is not None and len(trace.s):
        tx = (np.asarray(trace.s) - trace.shift) * 1e6
        ty = np.asarray(trace.intensity, dtype=float)
        series_x.append(tx)
        series_y.append(ty)
    x_lo = min(float(a.min()) for a in series_x)
    x_hi = max(float(a.max()) for a in series_x)
    y_hi = max(float(a.max()) for a in series_y)
    y_lo = min(0.0, min(float(a.min()) for a in series_y))
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def px(v):
        return _PAD + (v - x_lo) / (x_hi - x_lo) * (_W - 2 * _PAD)

    def py(v):
        return _H - _PAD - (v - y_lo) / (y_hi - y_lo) * (_H - 2 * _PAD)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<g stroke="black" stroke-width="1">'
           f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}"/>'
           f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}"/></g>',
           f'<text x="{_W / 2:.1f}" y="{_H - 12}" text-anchor="middle" '
           f'font-size="13">s (um)</text>',
           f'<text x="{_PAD:.1f}" y="{_H - _PAD + 16}" font-size="11" '
           f'text-anchor="middle">{x_lo:.4g}</text>',
           f'<text x="{_W - _PAD:.1f}" y="{_H - _PAD + 16}" font-size="11" '
           f'text-anchor="middle">{x_hi:.4g}</text>',
           f'<text x="{_PAD - 4}" y="{_PAD:.1f}" font-size="11" '
           f'text-anchor="end">{y_hi:.4g}</text>']
    if title:
        out.append(f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(s_um, y))
    out.append(f'<polyline id="model" fill="none" stroke="#1f4e9c" stroke-width="1.5" '
               f'points="{pts}"/>')
    if len(series_x) > 1:
        out.append('<g id="experiment" fill="none" stroke="#c0392b">')
        out += [f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5"/>'
                for a, b in zip(series_x[1], series_y[1])]
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_files(files: dict) -> list:
    """Write every ``path -> text`` entry or none of them.

    Each file goes to a temporary sibling first; renames happen only once
    all temporaries exist. Returns the written paths.
    """
    staged = []
    try:
        for path, text in files.items():
            path = Path(path)
            fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp",
                                       dir=path.parent if str(path.parent) else ".")
            staged.append((tmp, path))
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    except BaseException:
        for tmp, _ in staged:
            _unlink(tmp)
        raise
    done = []
    try:
        for tmp, path in staged:
            os.replace(tmp, path)
            done.append(path)
    except BaseException:
        for tmp, _ in staged:
            _unlink(tmp)
        for path in done:
            _unlink(path)
        raise
    return [str(p) for p in done]


def _unlink(path) -> None:
    try:
        os.unlink(path)
    except OSError:
        pass

