"""Moment Lyapunov exponents through Legendre duality with the rate function.

``L(m) = sup_r ( r.m - I(r) )`` where ``I`` is the rate of the concave-hull
extension.  The maximizer solves ``grad I(h) = m``; the gradient is the
vector of kink angles of the envelope, so the inversion is a small
nonlinear system with a tridiagonal Jacobian.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericalError
from .profile import (
    MembershipClass,
    ProbeConfig,
    build_profile,
    chord_supported,
    classify,
    parabola_eval,
    reduce_indices,
    tangent_radius,
)
from .rate import extended_gradient, rate_gradient, rate_value
from .shape import (
    CorridorEnsemble,
    Atom,
    build_limit_shape,
    build_shock_tree,
    corridor_masses,
    ensemble_from_tree,
    evaluate_M,
    shape_eval,
)

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
MAX_ITER = 200


@dataclass(frozen=True)
class DualPair:
    config: ProbeConfig
    masses: tuple[float, ...]
    lyapunov: float
    iterations: int = 0

    @property
    def heights(self) -> tuple[float, ...]:
        return self.config.hs

    def to_dict(self):
        return {
            "t": self.config.t,
            "xs": list(self.config.xs),
            "masses": list(self.masses),
            "heights": list(self.config.hs),
            "lyapunov": self.lyapunov,
        }


def jump_jacobian(config: ProbeConfig) -> np.ndarray:
    """Analytic Jacobian of the kink angles w.r.t. heights (all probes supporting)."""
    t, xs, hs = config.t, config.xs, config.hs
    n = config.n
    J = np.zeros((n, n))
    chord = [chord_supported(t, xs[i], hs[i], xs[i + 1], hs[i + 1]) for i in range(n - 1)]
    for j in range(n):
        r = tangent_radius(t, xs[j], hs[j])
        # left slope of the envelope at x_j
        if j > 0 and chord[j - 1]:
            inv = 1.0 / (xs[j] - xs[j - 1])
            J[j, j] += inv
            J[j, j - 1] -= inv
        else:
            J[j, j] += 1.0 / r
        # minus the right slope
        if j + 1 < n and chord[j]:
            inv = 1.0 / (xs[j + 1] - xs[j])
            J[j, j] += inv
            J[j, j + 1] -= inv
        else:
            J[j, j] += 1.0 / r
    return J


def _jumps(config):
    return extended_gradient(config)


def _coordinate_solve(t, xs, h, m, c):
    """Raise/lower ``h[c]`` until its kink angle equals ``m[c]``, others fixed."""
    others = [i for i in range(len(xs)) if i != c]
    floor = parabola_eval(t, xs[c])
    if others:
        sub = ProbeConfig(t, [xs[i] for i in others], [h[i] for i in others])
        floor = max(floor, float(build_profile(sub)(xs[c])))

    def resid(r):
        trial = list(h)
        trial[c] = r
        return _jumps(ProbeConfig(t, xs, trial))[c] - m[c]

    hi = floor + max(m[c] ** 2 * t / 8.0, 1e-3)
    while resid(hi) < 0.0:
        hi = floor + 2.0 * (hi - floor)
        if hi - floor > 1e12:
            raise NumericalError("could not bracket coordinate update", {"index": c})
    return brentq(resid, floor, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _solve_positive(t, xs, m):
    n = len(xs)
    h = np.array([mc * mc * t / 8.0 + parabola_eval(t, x) for x, mc in zip(xs, m)])
    it = 0
    res_norm = math.inf
    for it in range(1, MAX_ITER + 1):
        cfg = ProbeConfig(t, xs, h)
        res = m - _jumps(cfg)
        res_norm = float(np.max(np.abs(res)))
        if res_norm < RESIDUAL_TOL:
            return h, it
        newton_ok = False
        if len(reduce_indices(cfg)) == n and len(build_profile(cfg).kinks) == n:
            J = jump_jacobian(cfg)
            try:
                step = np.linalg.solve(J, res)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                alpha = 1.0
                while alpha > 1e-10:
                    trial = h + alpha * step
                    try:
                        tcfg = ProbeConfig(t, xs, trial)
                    except DomainError:
                        alpha *= 0.5
                        continue
                    tres = float(np.max(np.abs(m - _jumps(tcfg))))
                    if tres < (1.0 - 1e-4 * alpha) * res_norm or tres < RESIDUAL_TOL:
                        h = trial
                        newton_ok = True
                        break
                    alpha *= 0.5
        if not newton_ok:
            # one Gauss-Seidel sweep of exact coordinate maximization
            for c in range(n):
                h[c] = _coordinate_solve(t, xs, h, m, c)
    raise NumericalError(
        "dual height solve did not converge",
        {"iterations": it, "residual": res_norm, "masses": list(map(float, m)), "xs": list(xs)},
    )


def _check_masses(xs, masses):
    m = np.asarray(masses, dtype=float)
    if m.shape != (len(xs),):
        raise DomainError(f"expected {len(xs)} masses, got shape {m.shape}")
    if np.any(m < 0) or not np.all(np.isfinite(m)):
        raise DomainError("masses must be finite and nonnegative")
    return m


def _dual(t, xs, masses) -> tuple[np.ndarray, int]:
    xs = tuple(float(x) for x in xs)
    m = _check_masses(xs, masses)
    pos = [c for c in range(len(xs)) if m[c] > 0.0]
    h = np.array([parabola_eval(t, x) for x in xs])
    if not pos:
        ProbeConfig(t, xs, h)  # validates t and xs
        return h, 0
    hp, iters = _solve_positive(t, [xs[c] for c in pos], m[pos])
    h[pos] = hp
    zero = [c for c in range(len(xs)) if m[c] == 0.0]
    if zero:
        env = build_profile(ProbeConfig(t, [xs[c] for c in pos], hp))
        for c in zero:
            h[c] = float(env(xs[c]))
    return h, iters


def dual_height(t: float, xs, masses) -> np.ndarray:
    """Heights in the concave region whose rate gradient equals ``masses``."""
    return _dual(t, xs, masses)[0]


def lyapunov_from_duality(t: float, xs, masses) -> DualPair:
    """Moment Lyapunov exponent from a point start at the origin, by duality."""
    h, iters = _dual(t, xs, masses)
    cfg = ProbeConfig(t, xs, h)
    m = np.asarray(masses, dtype=float)
    value = float(m @ h) - rate_value(cfg)
    return DualPair(cfg, tuple(float(v) for v in m), value, iters)


def lyapunov_from(start: float, t: float, xs, masses) -> float:
    """Exponent for a point start at ``start``: shift the probes so it sits at 0."""
    return lyapunov_from_duality(t, [x - start for x in xs], masses).lyapunov


@dataclass(frozen=True)
class IntermediateSplit:
    t_mid: float
    cluster_positions: tuple[float, ...]
    cluster_heights: tuple[float, ...]
    cluster_masses: tuple[float, ...]
    branches: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class TreeCheck:
    lhs: float
    rhs: float
    split: IntermediateSplit
    top: float
    branch_values: tuple[float, ...]
    intermediate_residual: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)

    def to_dict(self):
        sp = self.split
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "t_mid": sp.t_mid,
            "intermediate_residual": self.intermediate_residual,
            "clusters": [
                {"x": x, "h": h, "mass": m, "branch": list(b), "L_branch": lb}
                for x, h, m, b, lb in zip(
                    sp.cluster_positions, sp.cluster_heights, sp.cluster_masses,
                    sp.branches, self.branch_values,
                )
            ],
        }


def tree_decomposition_check(config: ProbeConfig, t_mid: float) -> TreeCheck:
    """Both sides of the additivity of the exponent across an intermediate time."""
    if classify(config) is not MembershipClass.IN_H_CONC_INTERIOR:
        raise DomainError("tree decomposition needs a configuration in the concave interior")
    tau = config.t
    if not 0.0 < t_mid < tau:
        raise DomainError(f"t_mid must lie in (0, {tau})")
    m = rate_gradient(config)
    lhs = lyapunov_from_duality(tau, config.xs, m).lyapunov

    shape = build_limit_shape(config)
    tree = corridor_masses(shape.tree, m)
    s = tau - t_mid
    segs = tree.active(s)
    pos = tuple(seg.position(s) for seg in segs)
    branches = tuple(seg.leaves for seg in segs)
    mprime = tuple(seg.mass for seg in segs)
    hprime = tuple(shape_eval(shape, t_mid, x) for x in pos)
    split = IntermediateSplit(t_mid, pos, hprime, mprime, branches)

    top = lyapunov_from_duality(t_mid, pos, mprime).lyapunov
    parts = tuple(
        lyapunov_from(xa, tau - t_mid, [config.xs[c] for c in br], [m[c] for c in br])
        for xa, br in zip(pos, branches)
    )
    grad_mid = rate_gradient(ProbeConfig(t_mid, pos, hprime))
    resid = float(np.max(np.abs(grad_mid - np.asarray(mprime))))
    return TreeCheck(lhs, top + sum(parts), split, top, parts, resid)


def two_corridor_value(m_minus, m_plus, s_merge, energy_minus, energy_plus) -> float:
    """Closed form of the moment functional for two corridors merging once.

    ``energy_*`` are the integrals of squared corridor velocity over [0, 1].
    """
    total = m_minus + m_plus
    gain = (s_merge * (m_minus ** 3 + m_plus ** 3) + (1.0 - s_merge) * total ** 3) / 24.0
    return gain - 0.5 * m_minus * energy_minus - 0.5 * m_plus * energy_plus


def _path_energy(tree, c):
    return sum(seg.v * seg.v * (seg.s1 - seg.s0) for seg in tree.path(c))


@dataclass
class ScanPoint:
    m_minus: float
    L: float
    L_closed_form: float
    L_functional: float
    s_merge: float


@dataclass
class SymmetryScan:
    m: float
    points: list[ScanPoint] = field(default_factory=list)

    @property
    def rows(self) -> list[tuple[float, float]]:
        return [(p.m_minus, p.L) for p in self.points]

    @property
    def endpoint_value(self) -> float:
        return self.m ** 3 / 24.0 - self.m / 2.0

    def mirror_gap(self) -> float:
        vals = [p.L for p in self.points]
        return max(abs(a - b) for a, b in zip(vals, reversed(vals)))

    def route_gap(self) -> float:
        return max(
            max(abs(p.L - p.L_closed_form), abs(p.L - p.L_functional)) for p in self.points
        )

    def margin(self) -> float:
        """Smallest deficit of an interior grid value below the larger endpoint."""
        top = max(self.points[0].L, self.points[-1].L)
        return min(top - p.L for p in self.points[1:-1])

    def argmax(self) -> list[float]:
        # the two endpoints tie by mirror symmetry; report both
        top = max(p.L for p in self.points)
        ends = (self.points[0], self.points[-1])
        best = [p.m_minus for p in ends if p.L == top or math.isclose(p.L, top, rel_tol=0, abs_tol=1e-12)]
        inner = [p.m_minus for p in self.points[1:-1] if p.L >= top]
        return best + inner


def symmetry_breaking_scan(m: float, grid_points: int) -> SymmetryScan:
    """Exponent at time 1 for masses split between probes at -1 and +1."""
    if not m > 0:
        raise DomainError("total mass must be positive")
    if grid_points < 3:
        raise DomainError("need at least 3 grid points")
    xs = (-1.0, 1.0)
    scan = SymmetryScan(float(m))
    for m_minus in np.linspace(0.0, m, grid_points):
        masses = (float(m_minus), float(m - m_minus))
        dp = lyapunov_from_duality(1.0, xs, masses)
        tree = corridor_masses(build_shock_tree(dp.config), masses)
        s_merge = tree.events[0].s if tree.events else 1.0
        closed = two_corridor_value(
            masses[0], masses[1], s_merge, _path_energy(tree, 0), _path_energy(tree, 1)
        )
        functional = evaluate_M(ensemble_from_tree(tree, masses), 0.0, 1.0)
        scan.points.append(ScanPoint(masses[0], dp.lyapunov, closed, functional, s_merge))
    return scan


def single_corridor_ensemble(start: float, mass: float, duration: float = 1.0) -> CorridorEnsemble:
    """One atom on the straight corridor from ``start`` at s=0 to the origin."""
    return CorridorEnsemble((Atom((0.0, duration), (start, 0.0), mass),))
