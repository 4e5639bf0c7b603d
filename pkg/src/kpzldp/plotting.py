"""SVG figures: limit-shape spacetime diagrams, terminal profiles, scans.

Uses the object-oriented matplotlib API (no pyplot state) and fixes the SVG
hash salt and drops the date stamp so identical inputs give identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.figure import Figure

from .errors import ConfigError, DomainError
from .profile import parabola_eval
from .shape import LimitShape, locate

SVG_META = {"Date": None, "Creator": "kpzldp"}


def _save(fig: Figure, out) -> None:
    with matplotlib.rc_context({"svg.hashsalt": "kpzldp", "svg.fonttype": "none"}):
        try:
            fig.savefig(out, format="svg", metadata=SVG_META)
        except OSError as exc:
            raise DomainError(f"cannot write figure to {out}: {exc}") from exc


def parse_window(text: str) -> tuple[float, float, float, float]:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"window must be four numbers t0,t1,x0,x1: {text!r}", "window") from exc
    if len(parts) != 4:
        raise ConfigError(f"window must be four numbers t0,t1,x0,x1: {text!r}", "window")
    return tuple(parts)


def check_window(shape: LimitShape, window) -> tuple[float, float, float, float]:
    t0, t1, x0, x1 = (float(v) for v in window)
    if not (t1 > t0 and x1 > x0):
        raise ConfigError(f"empty window {window!r}", "window")
    t0 = max(t0, 0.0)
    t1 = min(t1, shape.t)
    if not t1 > t0:
        raise ConfigError(f"window {window!r} misses the time range (0, {shape.t}]", "window")
    return t0, t1, x0, x1


def _shock_paths(shape: LimitShape, t0: float, t1: float):
    tau = shape.t
    for seg in shape.tree.segments:
        if seg.strength <= 0:
            continue
        s_lo, s_hi = max(seg.s0, tau - t1), min(seg.s1, tau - t0)
        if s_hi <= s_lo:
            continue
        ss = np.array([s_lo, s_hi])
        yield seg.position(ss), tau - ss


def _characteristic(shape: LimitShape, y: float, t0: float, steps: int = 160):
    """Forward-time trace of the characteristic from terminal foot ``y``, cut where it enters a shock."""
    tau = shape.t
    p = float(shape.profile.slopes_at(y)[1])
    ts, xs = [tau], [y]
    for t in np.linspace(tau, max(t0, 1e-6 * tau), steps)[1:]:
        x = y + p * (tau - t)
        reg = locate(shape, t, x)
        if reg.on_shock or abs(reg.foot - y) > 1e-7 * max(1.0, abs(y)):
            break
        ts.append(t)
        xs.append(x)
    return np.array(xs), np.array(ts)


def render_svg(shape: LimitShape, window, out, fan: int = 25, probes=True) -> None:
    """Spacetime picture of the limit shape with forward time pointing up."""
    t0, t1, x0, x1 = check_window(shape, window)
    tau = shape.t
    fig = Figure(figsize=(6.0, 4.5))
    ax = fig.add_subplot()

    for cone in shape.cones:
        tt = np.array([t0, t1])
        ax.fill_betweenx(tt, cone.v_left * tt, cone.v_right * tt, color="tab:orange", alpha=0.18, lw=0)

    lo, hi = shape.profile.window()
    span = max(hi - lo, 1e-3)
    for y in np.linspace(lo - 0.25 * span, hi + 0.25 * span, fan):
        xs, ts = _characteristic(shape, float(y), t0)
        ax.plot(xs, ts, color="0.45", lw=0.6)

    for xs, ts in _shock_paths(shape, t0, t1):
        ax.plot(xs, ts, color="black", lw=2.6, solid_capstyle="round")

    if probes:
        ax.plot(shape.tree.xs, [tau] * len(shape.tree.xs), "o", color="tab:red", ms=5, zorder=5)

    ax.set_xlim(x0, x1)
    ax.set_ylim(t0, t1)
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    _save(fig, out)


def render_profile(profile, out, xs=None, hs=None, pad: float = 1.0, points: int = 801) -> None:
    lo, hi = profile.window()
    if not np.isfinite(lo) or not np.isfinite(hi) or lo == hi:
        lo, hi = -2.0, 2.0
    grid = np.linspace(lo - pad, hi + pad, points)
    fig = Figure(figsize=(6.0, 3.5))
    ax = fig.add_subplot()
    ax.plot(grid, parabola_eval(profile.t, grid), color="0.6", lw=1.0, ls="--", label="parabola")
    ax.plot(grid, profile(grid), color="black", lw=1.5, label="envelope")
    if xs is not None:
        ax.plot(xs, hs, "o", color="tab:red", ms=5, label="probes")
    ax.set_xlabel("x")
    ax.legend(loc="lower center", frameon=False)
    _save(fig, out)


def render_scan(rows, out) -> None:
    rows = np.asarray(rows, dtype=float)
    fig = Figure(figsize=(5.0, 3.5))
    ax = fig.add_subplot()
    ax.plot(rows[:, 0], rows[:, 1], "o-", color="black", ms=3)
    ax.set_xlabel("m_minus")
    ax.set_ylabel("L")
    _save(fig, out)
