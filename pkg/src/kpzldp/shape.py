"""Spacetime limit shape by front tracking of backward Burgers shocks.

Backward time ``s`` runs from 0 at the terminal time ``tau`` of the probe
configuration to ``tau`` at the origin; forward time is ``t = tau - s``.
The height solves ``u_s + u_x**2 / 2 = 0`` backwards from the terminal
profile, so slopes are transported along straight characteristics
``x = y + p s`` and shocks move with the Rankine-Hugoniot speed
``(p_left + p_right) / 2``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import AmbiguityError, DomainError, MalformedEnsembleError, NumericalError
from .profile import (
    ProbeConfig,
    TerminalProfile,
    build_profile,
    classify,
    parabola_eval,
)

EVENT_TIE = 1e-12
POS_TOL = 1e-9


def _same_pos(a, b, tol=POS_TOL):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class ShockSegment:
    id: int
    s0: float
    s1: float
    a: float  # position extrapolated to s = 0
    v: float
    left_slope: float
    right_slope: float
    mass: float
    leaves: tuple[int, ...]

    def position(self, s):
        return self.a + self.v * s

    @property
    def strength(self) -> float:
        return self.left_slope - self.right_slope

    def to_dict(self):
        return {
            "id": self.id, "s0": self.s0, "s1": self.s1, "a": self.a, "v": self.v,
            "left_slope": self.left_slope, "right_slope": self.right_slope,
            "mass": self.mass, "leaves": list(self.leaves),
        }


@dataclass(frozen=True)
class MergeEvent:
    s: float
    x: float
    survivor: int
    absorbed: tuple[int, ...]

    def to_dict(self):
        return {"s": self.s, "x": self.x, "survivor": self.survivor, "absorbed": list(self.absorbed)}


@dataclass(frozen=True)
class Cone:
    v_left: float
    v_right: float
    block: tuple[int, ...]

    def contains(self, t, x) -> bool:
        lo, hi = self.v_left * t, self.v_right * t
        return lo - POS_TOL * max(1.0, abs(lo)) <= x <= hi + POS_TOL * max(1.0, abs(hi))

    def to_dict(self):
        return {"v_left": self.v_left, "v_right": self.v_right, "block": list(self.block)}


@dataclass(frozen=True)
class ShockTree:
    t: float
    xs: tuple[float, ...]
    segments: tuple[ShockSegment, ...]
    events: tuple[MergeEvent, ...]

    def segment(self, sid: int) -> ShockSegment:
        return self.segments[sid]

    def leaf_segment(self, c: int) -> ShockSegment:
        return next(seg for seg in self.segments if seg.s0 == 0.0 and seg.leaves == (c,))

    def active(self, s: float) -> list[ShockSegment]:
        """Segments alive at backward time ``s``; at a merge time the merged one."""
        for ev in self.events:
            if abs(ev.s - s) <= EVENT_TIE * max(1.0, abs(s)):
                s = ev.s  # round-off from s = t - t_mid must not split a merge
        if s >= self.t:
            live = [seg for seg in self.segments if seg.s1 >= self.t]
        else:
            live = [seg for seg in self.segments if seg.s0 <= s < seg.s1]
        return sorted(live, key=lambda seg: seg.leaves[0])

    def path(self, c: int) -> list[ShockSegment]:
        """Segments carrying leaf ``c`` from the probe to the root."""
        return sorted((seg for seg in self.segments if c in seg.leaves), key=lambda seg: seg.s0)

    def roots(self) -> list[ShockSegment]:
        return self.active(self.t)

    def merge_times(self) -> list[float]:
        return [ev.s for ev in self.events]

    def to_dict(self):
        return {
            "t": self.t,
            "xs": list(self.xs),
            "segments": [seg.to_dict() for seg in self.segments],
            "events": [ev.to_dict() for ev in self.events],
            "cones": [c.to_dict() for c in cones_of(self)],
        }

    @classmethod
    def from_dict(cls, data) -> "ShockTree":
        segs = tuple(
            ShockSegment(
                int(d["id"]), float(d["s0"]), float(d["s1"]), float(d["a"]), float(d["v"]),
                float(d["left_slope"]), float(d["right_slope"]), float(d["mass"]),
                tuple(int(c) for c in d["leaves"]),
            )
            for d in data["segments"]
        )
        evs = tuple(
            MergeEvent(float(e["s"]), float(e["x"]), int(e["survivor"]), tuple(int(i) for i in e["absorbed"]))
            for e in data["events"]
        )
        return cls(float(data["t"]), tuple(float(x) for x in data["xs"]), segs, evs)


def _require_concave(config):
    cls = classify(config)
    if not cls.concave:
        raise DomainError(f"limit shape needs a concave configuration, got {cls.value}")


def build_shock_tree(config: ProbeConfig) -> ShockTree:
    """Event-driven front tracking of the shocks issued from the probe kinks."""
    _require_concave(config)
    tau = config.t
    profile = build_profile(config)

    segments: list[ShockSegment] = []
    events: list[MergeEvent] = []

    def new_segment(s0, x0, pl, pr, leaves):
        v = 0.5 * (pl + pr)
        seg = ShockSegment(len(segments), s0, math.inf, x0 - v * s0, v, pl, pr, pl - pr, tuple(leaves))
        segments.append(seg)
        return seg.id

    active = []
    for c, x in enumerate(config.xs):
        pl, pr = profile.slopes_at(x)
        active.append(new_segment(0.0, x, pl, pr, (c,)))

    heap: list[tuple[float, int, int]] = []

    def schedule(i_left, i_right, s_now):
        a, b = segments[i_left], segments[i_right]
        dv = a.v - b.v
        if dv <= 0.0:
            return
        gap = b.position(s_now) - a.position(s_now)
        heapq.heappush(heap, (s_now + max(gap, 0.0) / dv, i_left, i_right))

    for i, j in zip(active, active[1:]):
        schedule(i, j, 0.0)

    alive = set(active)
    while heap:
        s_ev, i, j = heapq.heappop(heap)
        if i not in alive or j not in alive:
            continue
        if s_ev >= tau - EVENT_TIE * max(1.0, tau):
            break
        # fold in every collision at (numerically) the same time
        pos = {k: segments[k].position(s_ev) for k in active}
        groups, cur = [], [active[0]]
        for k in active[1:]:
            if _same_pos(pos[cur[-1]], pos[k], 1e-10):
                cur.append(k)
            else:
                groups.append(cur)
                cur = [k]
        groups.append(cur)
        new_active = []
        touched = []
        for g in groups:
            if len(g) == 1:
                new_active.append(g[0])
                continue
            for k in g:
                segments[k] = replace(segments[k], s1=s_ev)
                alive.discard(k)
            x_ev = float(np.mean([pos[k] for k in g]))
            leaves = tuple(sorted(c for k in g for c in segments[k].leaves))
            sid = new_segment(s_ev, x_ev, segments[g[0]].left_slope, segments[g[-1]].right_slope, leaves)
            events.append(MergeEvent(s_ev, x_ev, sid, tuple(g)))
            alive.add(sid)
            new_active.append(sid)
            touched.append(sid)
        if not touched:
            continue  # stale event whose pair no longer touches
        active = new_active
        for a, b in zip(active, active[1:]):
            if a in touched or b in touched:
                schedule(a, b, s_ev)

    for k in active:
        segments[k] = replace(segments[k], s1=tau)
        end = segments[k].position(tau)
        if segments[k].strength > 0 and not abs(end) <= 1e-8 * max(1.0, max(abs(x) for x in config.xs)):
            raise NumericalError(
                "shock does not reach the origin at the root time",
                {"segment": k, "position": end, "leaves": list(segments[k].leaves)},
            )
    return ShockTree(tau, config.xs, tuple(segments), tuple(events))


def cones_of(tree: ShockTree) -> list[Cone]:
    """One cone per merge cluster, bounded by the forward rays through its tangency points."""
    out = []
    for seg in tree.roots():
        if seg.strength <= 0:
            continue  # probe on the parabola: no region where the shape departs from it
        out.append(Cone(-seg.left_slope, -seg.right_slope, seg.leaves))
    return sorted(out, key=lambda c: c.v_left)


def corridor_masses(tree: ShockTree, masses) -> ShockTree:
    masses = [float(m) for m in masses]
    if len(masses) != len(tree.xs):
        raise DomainError(f"expected {len(tree.xs)} masses, got {len(masses)}")
    segs = tuple(replace(seg, mass=sum(masses[c] for c in seg.leaves)) for seg in tree.segments)
    return replace(tree, segments=segs)


@dataclass(frozen=True)
class LimitShape:
    profile: TerminalProfile
    tree: ShockTree
    cones: tuple[Cone, ...]

    @property
    def t(self) -> float:
        return self.profile.t

    def to_dict(self):
        return {"profile": self.profile.to_dict(), "tree": self.tree.to_dict()}

    @classmethod
    def from_dict(cls, data) -> "LimitShape":
        tree = ShockTree.from_dict(data["tree"])
        return cls(TerminalProfile.from_dict(data["profile"]), tree, tuple(cones_of(tree)))


def build_limit_shape(config: ProbeConfig) -> LimitShape:
    tree = build_shock_tree(config)
    return LimitShape(build_profile(config), tree, tuple(cones_of(tree)))


@dataclass(frozen=True)
class Region:
    """Where a spacetime point sits relative to shocks and cones."""

    inside_cone: bool
    slope: float
    foot: float
    on_shock: bool
    feet: tuple[float, ...]


def locate(shape: LimitShape, t: float, x: float) -> Region:
    tau = shape.t
    if not (0.0 < t <= tau):
        raise DomainError(f"time must lie in (0, {tau}], got {t}")
    s = tau - t
    if s == 0.0:
        sl, sr = shape.profile.slopes_at(x)
        return Region(True, sr, x, sl != sr, (x, x))
    cone = next((c for c in shape.cones if c.contains(t, x)), None)
    if cone is None:
        foot = x * tau / t
        return Region(False, -x / t, foot, False, (foot,))
    shocks = [seg for seg in shape.tree.active(s) if set(seg.leaves) <= set(cone.block)]
    xs = [seg.position(s) for seg in shocks]
    for seg, xp in zip(shocks, xs):
        if _same_pos(x, xp, 1e-12):
            feet = (x - seg.left_slope * s, x - seg.right_slope * s)
            return Region(True, seg.right_slope, feet[1], True, feet)
    k = int(np.searchsorted(xs, x))
    p = shocks[0].left_slope if k == 0 else shocks[k - 1].right_slope
    foot = x - p * s
    return Region(True, p, foot, False, (foot,))


def shape_eval(shape: LimitShape, t: float, x: float) -> float:
    """Limit shape at ``(t, x)``: the parabola outside cones, Hopf-Lax transport inside."""
    reg = locate(shape, t, x)
    s = shape.t - t
    if s == 0.0:
        return float(shape.profile(x))
    if not reg.inside_cone:
        return float(parabola_eval(t, x))
    return float(shape.profile(reg.foot) + 0.5 * reg.slope * reg.slope * s)


def characteristic_through(shape: LimitShape, t: float, x: float) -> tuple[float, float]:
    """Terminal foot and constant slope of the characteristic through ``(t, x)``."""
    reg = locate(shape, t, x)
    if reg.on_shock:
        raise AmbiguityError(f"({t}, {x}) lies on a shock", reg.feet)
    return reg.foot, reg.slope


def _oracle_window(profile: TerminalProfile, t: float, xmin: float, xmax: float, pad: float = 2.0):
    lo, hi = profile.window()
    tau = profile.t
    return min(lo, xmin * tau / t) - pad, max(hi, xmax * tau / t) + pad


def shape_eval_oracle(profile: TerminalProfile, t: float, x: float, grid_step: float) -> float:
    """Brute-force inf-convolution of the terminal profile over a uniform grid."""
    if grid_step <= 0:
        raise DomainError("grid_step must be positive")
    s = profile.t - t
    if s <= 0.0:
        return float(profile(x))
    lo, hi = _oracle_window(profile, t, x, x)
    y = np.arange(lo, hi + grid_step, grid_step)
    return float(np.min(profile(y) + (y - x) ** 2 / (2.0 * s)))


def shape_eval_oracle_row(profile: TerminalProfile, t: float, xq, grid_step: float) -> np.ndarray:
    """Oracle on a sorted row of query points sharing the same time.

    Same grid minimum as :func:`shape_eval_oracle`, computed by divide and
    conquer over the monotone argmin (the quadratic cost is Monge).
    """
    xq = np.asarray(xq, dtype=float)
    s = profile.t - t
    if s <= 0.0:
        return profile(xq)
    lo, hi = _oracle_window(profile, t, float(xq.min()), float(xq.max()))
    y = np.arange(lo, hi + grid_step, grid_step)
    fy = profile(y)
    inv = 1.0 / (2.0 * s)
    arg = np.empty(len(xq), dtype=np.int64)
    stack = [(0, len(xq) - 1, 0, len(y) - 1)]
    while stack:
        i0, i1, j0, j1 = stack.pop()
        if i0 > i1:
            continue
        mid = (i0 + i1) // 2
        d = xq[mid] - y[j0:j1 + 1]
        j = j0 + int(np.argmin(fy[j0:j1 + 1] + d * d * inv))
        arg[mid] = j
        stack.append((i0, mid - 1, j0, j))
        stack.append((mid + 1, i1, j, j1))
    return fy[arg] + (xq - y[arg]) ** 2 * inv


# --- corridor ensembles and the moment functional -------------------------


@dataclass(frozen=True)
class Atom:
    """Point mass moving along a piecewise-affine path ``x(s)``."""

    s: tuple[float, ...]
    x: tuple[float, ...]
    mass: float

    def position(self, s):
        return float(np.interp(s, self.s, self.x))

    def velocity(self, s0, s1):
        mid = 0.5 * (s0 + s1)
        k = int(np.searchsorted(self.s, mid)) - 1
        k = min(max(k, 0), len(self.s) - 2)
        return (self.x[k + 1] - self.x[k]) / (self.s[k + 1] - self.s[k])


@dataclass(frozen=True)
class CorridorEnsemble:
    atoms: tuple[Atom, ...]

    @property
    def total_mass(self) -> float:
        return float(sum(a.mass for a in self.atoms))

    def breakpoints(self, s_from, s_to):
        pts = {s_from, s_to}
        for atom in self.atoms:
            pts.update(s for s in atom.s if s_from < s < s_to)
        return sorted(pts)


def ensemble_from_tree(tree: ShockTree, masses=None) -> CorridorEnsemble:
    """Atoms riding the shock paths, leaf ``c`` carrying ``masses[c]``."""
    if masses is None:
        masses = [tree.leaf_segment(c).mass for c in range(len(tree.xs))]
    atoms = []
    for c, m in enumerate(masses):
        if m <= 0:
            continue
        path = tree.path(c)
        ss = [path[0].s0] + [seg.s1 for seg in path]
        xx = [path[0].position(path[0].s0)] + [seg.position(seg.s1) for seg in path]
        atoms.append(Atom(tuple(ss), tuple(xx), float(m)))
    return CorridorEnsemble(tuple(atoms))


def evaluate_M(ensemble: CorridorEnsemble, s_from: float, s_to: float) -> float:
    """Moment functional of an atomic measure path, integrated exactly.

    On each interval where every atom moves affinely the integrand is
    constant: a cubic gain ``M**3 / 24`` per cluster of coinciding atoms
    minus the kinetic cost ``m v**2 / 2`` per atom.
    """
    if not s_from < s_to:
        raise DomainError("need s_from < s_to")
    for atom in ensemble.atoms:
        if s_from < atom.s[0] - EVENT_TIE or s_to > atom.s[-1] + EVENT_TIE:
            raise DomainError("integration window exceeds an atom's trajectory")
    total = 0.0
    bps = ensemble.breakpoints(s_from, s_to)
    for s0, s1 in zip(bps, bps[1:]):
        if s1 - s0 <= 0.0:
            continue
        mid = 0.5 * (s0 + s1)
        state = sorted(
            ((a.position(mid), a.velocity(s0, s1), a.mass) for a in ensemble.atoms),
            key=lambda r: r[0],
        )
        gain = 0.0
        cluster_mass = state[0][2]
        for prev, cur in zip(state, state[1:]):
            if _same_pos(prev[0], cur[0]):
                if not _same_pos(prev[1], cur[1]):
                    raise MalformedEnsembleError(
                        f"atoms overlap at s={mid} with velocities {prev[1]} and {cur[1]}"
                    )
                cluster_mass += cur[2]
            else:
                gain += cluster_mass ** 3 / 24.0
                cluster_mass = cur[2]
        gain += cluster_mass ** 3 / 24.0
        kinetic = sum(0.5 * m * v * v for _, v, m in state)
        total += (s1 - s0) * (gain - kinetic)
    return total


# --- structural diagnostics -----------------------------------------------


def shock_side_slopes(shape: LimitShape, seg: ShockSegment, s: float) -> tuple[float, float]:
    """Slopes of the evaluated shape on either side of a shock, by differencing.

    The shape is affine next to a shock, so a difference quotient over a
    fraction of the distance to the nearest other front is exact up to
    rounding.
    """
    t = shape.t - s
    xs = seg.position(s)
    fronts = [other.position(s) for other in shape.tree.active(s) if other.id != seg.id]
    for cone in shape.cones:
        fronts += [cone.v_left * t, cone.v_right * t]
    gaps = [abs(f - xs) for f in fronts if abs(f - xs) > 1e-9]
    d = 0.25 * min(gaps + [1.0])
    f0 = shape_eval(shape, t, xs)
    left = (f0 - shape_eval(shape, t, xs - d)) / d
    right = (shape_eval(shape, t, xs + d) - f0) / d
    return left, right


def entropy_checks(shape: LimitShape, s: float) -> list[dict]:
    """Per shock at backward time ``s``: backward admissibility and forward failure."""
    out = []
    for seg in shape.tree.active(s):
        if seg.strength <= 0:
            continue
        left, right = shock_side_slopes(shape, seg, s)
        out.append({
            "segment": seg.id,
            "left": left,
            "right": right,
            "speed": seg.v,
            "backward_entropic": left > right,
            "forward_entropic": left < right,
            "rh_residual": abs(seg.v - 0.5 * (left + right)),
        })
    return out
