"""Terminal profiles: the parabola, the concave envelope over probe points, membership.

A terminal profile is the least concave function lying above both the
parabola ``-x**2/(2t)`` and the probe points ``(x_c, h_c)``.  It is stored
exactly as an ordered list of parabola arcs and linear segments.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

# relative tolerance for slope and height comparisons
TOL = 1e-9


def _close(a: float, b: float, tol: float = TOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def parabola_eval(t, x):
    """Hydrodynamic profile ``-x**2 / (2 t)``; ``x`` may be an array."""
    if not t > 0:
        raise DomainError(f"parabola needs t > 0, got {t!r}")
    return -np.square(x) / (2.0 * t) if isinstance(x, np.ndarray) else -x * x / (2.0 * t)


@dataclass(frozen=True)
class ProbeConfig:
    t: float
    xs: tuple[float, ...]
    hs: tuple[float, ...]

    def __post_init__(self):
        xs = tuple(float(x) for x in self.xs)
        hs = tuple(float(h) for h in self.hs)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "hs", hs)
        object.__setattr__(self, "t", float(self.t))
        if not (0.0 < self.t <= 1.0):
            raise DomainError(f"t must lie in (0, 1], got {self.t}")
        if len(xs) == 0 or len(xs) != len(hs):
            raise DomainError("xs and hs must be non-empty and of equal length")
        if not all(math.isfinite(v) for v in xs + hs):
            raise DomainError("probe locations and heights must be finite")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise DomainError("xs must be strictly increasing")

    @property
    def n(self) -> int:
        return len(self.xs)

    def with_heights(self, hs) -> "ProbeConfig":
        return ProbeConfig(self.t, self.xs, tuple(hs))

    def subset(self, indices) -> "ProbeConfig":
        idx = sorted(indices)
        return ProbeConfig(self.t, [self.xs[i] for i in idx], [self.hs[i] for i in idx])

    def to_dict(self):
        return {"t": self.t, "xs": list(self.xs), "hs": list(self.hs)}


@dataclass(frozen=True)
class Piece:
    kind: str  # "parabola" or "linear"
    a: float
    b: float
    slope: float | None = None
    intercept: float | None = None

    def value(self, x, t):
        if self.kind == "parabola":
            return parabola_eval(t, x)
        return self.slope * x + self.intercept

    def derivative(self, x, t):
        if self.kind == "parabola":
            return -x / t
        return self.slope


def _encode_bound(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _decode_bound(v) -> float:
    if isinstance(v, str):
        return float(v)  # float("inf") / float("-inf")
    return float(v)


@dataclass(frozen=True)
class TerminalProfile:
    """Piecewise description of the envelope ``f`` (or its hull extension)."""

    t: float
    pieces: tuple[Piece, ...]
    kinks: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "_breaks", np.array([p.b for p in self.pieces[:-1]], dtype=float))

    def piece_index(self, x):
        return np.searchsorted(self._breaks, x, side="left")

    def __call__(self, x):
        """Evaluate the profile at scalar or array ``x``."""
        scalar = np.ndim(x) == 0
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        idx = self.piece_index(xa)
        out = parabola_eval(self.t, xa)
        for k, piece in enumerate(self.pieces):
            if piece.kind == "linear":
                sel = idx == k
                out[sel] = piece.slope * xa[sel] + piece.intercept
        return float(out[0]) if scalar else out

    def slopes_at(self, x: float) -> tuple[float, float]:
        """Left and right derivatives at ``x``."""
        k = int(self.piece_index(x))
        right = self.pieces[k]
        if right.a == x and k > 0:
            left = self.pieces[k - 1]
        elif right.b == x and k + 1 < len(self.pieces):
            left, right = right, self.pieces[k + 1]
        else:
            left = right
        return float(left.derivative(x, self.t)), float(right.derivative(x, self.t))

    @property
    def linear_pieces(self):
        return [p for p in self.pieces if p.kind == "linear"]

    def window(self) -> tuple[float, float]:
        """Smallest interval outside which the profile equals the parabola."""
        lin = self.linear_pieces
        if not lin:
            return (0.0, 0.0)
        return (lin[0].a, lin[-1].b)

    @property
    def is_bare_parabola(self) -> bool:
        return not self.linear_pieces

    def to_dict(self):
        return {
            "t": self.t,
            "pieces": [
                {
                    "kind": p.kind,
                    "a": _encode_bound(p.a),
                    "b": _encode_bound(p.b),
                    "slope": p.slope,
                    "intercept": p.intercept,
                }
                for p in self.pieces
            ],
            "kinks": list(self.kinks),
        }

    @classmethod
    def from_dict(cls, data) -> "TerminalProfile":
        pieces = tuple(
            Piece(
                d["kind"],
                _decode_bound(d["a"]),
                _decode_bound(d["b"]),
                None if d.get("slope") is None else float(d["slope"]),
                None if d.get("intercept") is None else float(d["intercept"]),
            )
            for d in data["pieces"]
        )
        return cls(float(data["t"]), pieces, tuple(float(k) for k in data["kinks"]))

    def same_as(self, other: "TerminalProfile", tol: float = 1e-12) -> bool:
        """Piece-by-piece comparison up to a relative tolerance."""
        if len(self.pieces) != len(other.pieces) or not _close(self.t, other.t, tol):
            return False
        if len(self.kinks) != len(other.kinks):
            return False
        if not all(_close(a, b, tol) for a, b in zip(self.kinks, other.kinks)):
            return False
        for p, q in zip(self.pieces, other.pieces):
            if p.kind != q.kind:
                return False
            for u, v in ((p.a, q.a), (p.b, q.b), (p.slope, q.slope), (p.intercept, q.intercept)):
                if u is None or v is None:
                    if u is not v:
                        return False
                elif math.isinf(u) or math.isinf(v):
                    if u != v:
                        return False
                elif not _close(u, v, tol):
                    return False
        return True


def parabola_profile(t: float) -> TerminalProfile:
    return TerminalProfile(float(t), (Piece("parabola", -math.inf, math.inf),), ())


def tangent_radius(t: float, x: float, h: float) -> float:
    """Distance from ``x`` to either tangency point of the lines through ``(x, h)``.

    Tangent lines from ``(x, h)`` touch the parabola at ``x -/+ r`` with
    ``r = sqrt(x**2 + 2 t h)``.  Returns ``nan`` for points below the parabola.
    """
    g = 2.0 * t * h + x * x
    if abs(g) <= 1e-12 * max(1.0, x * x):
        return 0.0  # on the parabola up to rounding
    if g < 0.0:
        return math.nan
    return math.sqrt(g)


def _tangent_slopes(t, x, h):
    # admissible supporting slopes at (x, h): the line stays above the parabola
    r = tangent_radius(t, x, h)
    return (-x - r) / t, (-x + r) / t, r


def _upper_hull(points):
    """Monotone-chain upper hull keeping collinear points (closed condition)."""
    hull = []
    for p in points:
        while len(hull) >= 2:
            (x0, y0, _), (x1, y1, _) = hull[-2], hull[-1]
            s01 = (y1 - y0) / (x1 - x0)
            s12 = (p[1] - y1) / (p[0] - x1)
            if s12 > s01 and not _close(s12, s01):
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def reduce_indices(config: ProbeConfig) -> tuple[int, ...]:
    """Probe indices (0-based) lying on the concave envelope."""
    t = config.t
    cand = [
        (x, h, c)
        for c, (x, h) in enumerate(zip(config.xs, config.hs))
        if not math.isnan(tangent_radius(t, x, h))
    ]
    hull = _upper_hull(cand)
    keep = []
    for j, (x, h, c) in enumerate(hull):
        lo, hi, _ = _tangent_slopes(t, x, h)
        if j > 0:
            xp, hp, _ = hull[j - 1]
            hi = min(hi, (h - hp) / (x - xp))
        if j + 1 < len(hull):
            xn, hn, _ = hull[j + 1]
            lo = max(lo, (hn - h) / (xn - x))
        if lo <= hi or _close(lo, hi):
            keep.append(c)
    return tuple(keep)


def chord_supported(t, xa, ha, xb, hb) -> bool:
    """True when the chord between two envelope points stays above the parabola."""
    k = (hb - ha) / (xb - xa)
    lo, hi, _ = _tangent_slopes(t, xa, ha)
    return (lo <= k or _close(lo, k)) and (k <= hi or _close(k, hi))


def _linear(a, b, slope, x0, h0):
    return Piece("linear", a, b, slope, h0 - slope * x0)


def build_profile(config: ProbeConfig) -> TerminalProfile:
    """Concave envelope of the parabola and the probe points, as exact pieces."""
    t = config.t
    support = reduce_indices(config)
    if not support:
        return parabola_profile(t)
    pts = [(config.xs[c], config.hs[c]) for c in support]
    raw: list[Piece] = []

    x0, h0 = pts[0]
    _, s_hi, r = _tangent_slopes(t, x0, h0)
    left = x0 - r
    raw.append(Piece("parabola", -math.inf, left))
    raw.append(_linear(left, x0, s_hi, x0, h0))

    for (xa, ha), (xb, hb) in zip(pts, pts[1:]):
        k = (hb - ha) / (xb - xa)
        lo_a, _, ra = _tangent_slopes(t, xa, ha)
        if chord_supported(t, xa, ha, xb, hb):
            raw.append(_linear(xa, xb, k, xa, ha))
        else:
            _, hi_b, rb = _tangent_slopes(t, xb, hb)
            ta, tb = xa + ra, xb - rb
            raw.append(_linear(xa, ta, lo_a, xa, ha))
            raw.append(Piece("parabola", ta, tb))
            raw.append(_linear(tb, xb, hi_b, xb, hb))

    xn, hn = pts[-1]
    s_lo, _, r = _tangent_slopes(t, xn, hn)
    right = xn + r
    raw.append(_linear(xn, right, s_lo, xn, hn))
    raw.append(Piece("parabola", right, math.inf))

    pieces = _merge_pieces(raw, t)
    kinks = []
    for x, h in pts:
        sl, sr = TerminalProfile(t, pieces, ()).slopes_at(x)
        if sl - sr > TOL * max(1.0, abs(sl), abs(sr)):
            kinks.append(x)
    return TerminalProfile(t, pieces, tuple(kinks))


def _merge_pieces(raw, t):
    out: list[Piece] = []
    for p in raw:
        if p.b <= p.a:
            continue  # zero-length tangent segment of a point on the parabola
        if out and out[-1].kind == p.kind:
            q = out[-1]
            if p.kind == "parabola" or _close(q.slope, p.slope):
                if p.kind == "parabola":
                    out[-1] = Piece("parabola", q.a, p.b)
                else:
                    out[-1] = Piece("linear", q.a, p.b, q.slope, q.intercept)
                continue
        out.append(p)
    if not out:
        out = [Piece("parabola", -math.inf, math.inf)]
    # pieces must tile the line exactly
    fixed = [out[0]]
    for p in out[1:]:
        prev = fixed[-1]
        fixed.append(Piece(p.kind, prev.b, p.b, p.slope, p.intercept))
    return tuple(fixed)


def profile_eval(profile: TerminalProfile, x):
    return profile(x)


class MembershipClass(enum.Enum):
    OUTSIDE_H = "OutsideH"
    ON_BOUNDARY_H = "OnBoundaryH"
    IN_H_CONC = "InHconc"
    IN_H_CONC_INTERIOR = "InHconcInterior"
    IN_H_NOT_CONC = "InHNotConc"

    @property
    def concave(self) -> bool:
        return self in (MembershipClass.IN_H_CONC, MembershipClass.IN_H_CONC_INTERIOR,
                        MembershipClass.ON_BOUNDARY_H)


def _on_parabola(t, x, h):
    p = parabola_eval(t, x)
    return abs(h - p) <= 1e-12 * max(1.0, abs(p))


def classify(config: ProbeConfig) -> MembershipClass:
    t = config.t
    pts = list(zip(config.xs, config.hs))
    if any(h < parabola_eval(t, x) and not _on_parabola(t, x, h) for x, h in pts):
        return MembershipClass.OUTSIDE_H
    if len(reduce_indices(config)) != config.n:
        return MembershipClass.IN_H_NOT_CONC
    if any(_on_parabola(t, x, h) for x, h in pts):
        return MembershipClass.ON_BOUNDARY_H
    profile = build_profile(config)
    if len(profile.kinks) == config.n:
        return MembershipClass.IN_H_CONC_INTERIOR
    return MembershipClass.IN_H_CONC


def kink_jumps(profile: TerminalProfile, xs: Sequence[float]) -> np.ndarray:
    """Left slope minus right slope at each location (zero where C^1)."""
    out = np.empty(len(xs))
    for i, x in enumerate(xs):
        sl, sr = profile.slopes_at(x)
        out[i] = sl - sr
    return out
