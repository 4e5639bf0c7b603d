"""Closed-form KPZ rate function and its gradient in the target heights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .profile import (
    MembershipClass,
    ProbeConfig,
    TerminalProfile,
    build_profile,
    classify,
    kink_jumps,
    reduce_indices,
)

MAX_PROBES = 64


@dataclass(frozen=True)
class RateResult:
    value: float
    per_piece: tuple[tuple[int, float], ...]
    gradient: tuple[float, ...]
    reduced_set: tuple[int, ...]

    def to_dict(self):
        return {
            "value": self.value,
            "gradient": list(self.gradient),
            "reduced_set": list(self.reduced_set),
            "per_piece": [[i, v] for i, v in self.per_piece],
        }

    @classmethod
    def from_dict(cls, data) -> "RateResult":
        return cls(
            float(data["value"]),
            tuple((int(i), float(v)) for i, v in data["per_piece"]),
            tuple(float(g) for g in data["gradient"]),
            tuple(int(c) for c in data["reduced_set"]),
        )


def _segment_energy(u: float, w: float, slope: float, t: float) -> float:
    # integral over [u, w] of slope**2/2 - x**2/(2 t**2)
    return 0.5 * (w - u) * (slope * slope - (u * u + u * w + w * w) / (3.0 * t * t))


def profile_energy(profile: TerminalProfile) -> tuple[float, list[tuple[int, float]]]:
    """Rate integral of a profile, split by piece.  Parabola arcs contribute zero."""
    parts = []
    for k, piece in enumerate(profile.pieces):
        if piece.kind == "linear":
            parts.append((k, _segment_energy(piece.a, piece.b, piece.slope, profile.t)))
    return float(sum(v for _, v in parts)), parts


def _check_size(config: ProbeConfig):
    if config.n > MAX_PROBES:
        raise DomainError(f"at most {MAX_PROBES} probes are supported, got {config.n}")


def rate_value(config: ProbeConfig) -> float:
    _check_size(config)
    return profile_energy(build_profile(config))[0]


def _gradient(config: ProbeConfig, profile: TerminalProfile, redu) -> np.ndarray:
    grad = np.zeros(config.n)
    if redu:
        jumps = kink_jumps(profile, [config.xs[c] for c in redu])
        grad[list(redu)] = np.maximum(jumps, 0.0)
    return grad


def rate(config: ProbeConfig) -> RateResult:
    """Rate of the concave-hull extension, with per-piece split and gradient.

    The gradient is the kink angle of the envelope at each supporting probe
    and zero for probes strictly below it.
    """
    _check_size(config)
    profile = build_profile(config)
    redu = reduce_indices(config)
    value, parts = profile_energy(profile)
    grad = _gradient(config, profile, redu)
    return RateResult(value, tuple(parts), tuple(float(g) for g in grad), redu)


def rate_gradient(config: ProbeConfig) -> np.ndarray:
    if classify(config) is MembershipClass.OUTSIDE_H:
        raise DomainError("gradient is undefined for heights below the parabola")
    _check_size(config)
    return _gradient(config, build_profile(config), reduce_indices(config))


def extended_gradient(config: ProbeConfig) -> np.ndarray:
    """Gradient of the hull extension on all of R^n (no membership check)."""
    return _gradient(config, build_profile(config), reduce_indices(config))


def one_point_rate(t: float, h: float) -> float:
    """The 3/2 power law at the origin, used as a reference value."""
    return (4.0 / 3.0) * np.sqrt(2.0 / t) * max(h, 0.0) ** 1.5
