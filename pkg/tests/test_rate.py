import json
import math

import numpy as np
import pytest

from kpzldp import DomainError, MembershipClass, ProbeConfig, classify, one_point_rate, rate, rate_gradient, rate_value
from kpzldp.profile import build_profile, reduce_indices
from kpzldp.rate import MAX_PROBES, RateResult, extended_gradient

from conftest import grid_majorant, random_interior_config


def quadrature_rate(cfg, lo=-12.0, hi=12.0, n=400001):
    """Independent oracle: trapezoid rule on the grid majorant's slopes."""
    grid = np.union1d(np.linspace(lo, hi, n), cfg.xs)  # keep the kinks on the grid
    f = grid_majorant(cfg.t, np.array(cfg.xs), np.array(cfg.hs), grid)
    mid = 0.5 * (grid[1:] + grid[:-1])
    slope = np.diff(f) / np.diff(grid)
    return float(np.sum((0.5 * slope ** 2 - 0.5 * (mid / cfg.t) ** 2) * np.diff(grid)))


def test_one_point_example():
    assert rate(ProbeConfig(1, [0], [1])).value == pytest.approx(4 * math.sqrt(2) / 3, abs=1e-14)


def test_boundary_is_zero():
    res = rate(ProbeConfig(1, [0], [0]))
    assert res.value == 0.0
    assert res.gradient == (0.0,)


def test_half_time_example():
    assert rate_value(ProbeConfig(0.5, [0], [1])) == pytest.approx(8 / 3, abs=1e-14)


@pytest.mark.parametrize("t", [0.25, 1.0])
@pytest.mark.parametrize("h", [0.25, 1.0, 4.0])
def test_one_point_law(t, h):
    assert abs(rate_value(ProbeConfig(t, [0], [h])) - one_point_rate(t, h)) < 1e-12


def test_shift_invariance():
    # adding an affine function does not change the rate: (x, h) -> (0, h + x**2/(2t))
    assert rate_value(ProbeConfig(1, [1], [0.3])) == pytest.approx(one_point_rate(1, 0.8), abs=1e-13)


def test_per_piece_sums_to_value():
    res = rate(ProbeConfig(0.8, [-1, 0.2, 1.4], [0.4, 0.9, 0.1]))
    assert res.value == pytest.approx(sum(v for _, v in res.per_piece), abs=1e-14)


def test_matches_quadrature_oracle(rng):
    for _ in range(10):
        cfg, _ = random_interior_config(rng, t=float(rng.uniform(0.4, 1.0)))
        assert rate_value(cfg) == pytest.approx(quadrature_rate(cfg), abs=1e-6)


def test_gradient_examples():
    g = rate_gradient(ProbeConfig(1, [0], [1]))
    assert g[0] == pytest.approx(2 * math.sqrt(2), abs=1e-13)
    g2 = rate_gradient(ProbeConfig(1, [-1, 1], [0.5, 0.5]))
    assert g2[0] == pytest.approx(g2[1], abs=1e-14)


def test_gradient_outside_h_raises():
    with pytest.raises(DomainError):
        rate_gradient(ProbeConfig(1, [0], [-1]))


def test_gradient_zero_off_redu():
    cfg = ProbeConfig(1, [-1, 0, 1], [0.2, 0.05, 0.2])
    res = rate(cfg)
    assert res.reduced_set == (0, 2)
    assert res.gradient[1] == 0.0


def _fd_gradient(cfg, step=1e-5):
    out = []
    for c in range(cfg.n):
        up = list(cfg.hs)
        dn = list(cfg.hs)
        up[c] += step
        dn[c] -= step
        out.append((rate_value(cfg.with_heights(up)) - rate_value(cfg.with_heights(dn))) / (2 * step))
    return np.array(out)


def test_gradient_vs_finite_differences(rng):
    worst = 0.0
    for _ in range(50):
        cfg, _ = random_interior_config(rng, n=int(rng.integers(1, 5)), t=float(rng.uniform(0.3, 1.0)))
        assert classify(cfg) is MembershipClass.IN_H_CONC_INTERIOR
        diff = np.abs(rate_gradient(cfg) - _fd_gradient(cfg))
        worst = max(worst, float(diff.max()))
    assert worst < 1e-6


def test_monotone_in_heights(rng):
    for _ in range(30):
        cfg, _ = random_interior_config(rng)
        c = int(rng.integers(cfg.n))
        hs = list(cfg.hs)
        hs[c] += float(rng.uniform(0, 0.5))
        assert rate_value(cfg.with_heights(hs)) >= rate_value(cfg) - 1e-14


def test_midpoint_convexity(rng):
    for _ in range(40):
        a, _ = random_interior_config(rng, n=2)
        b_h = np.array(a.hs) + rng.uniform(0.0, 1.0, 2)
        b = a.with_heights(b_h)
        mid = a.with_heights(0.5 * (np.array(a.hs) + b_h))
        assert rate_value(mid) <= 0.5 * (rate_value(a) + rate_value(b)) + 1e-10


def test_extension_matches_reduced(rng):
    hits = 0
    for _ in range(200):
        n = int(rng.integers(2, 5))
        xs = np.sort(rng.uniform(-2, 2, n))
        if np.min(np.diff(xs)) < 0.05:
            continue
        hs = rng.uniform(-1, 1.5, n)
        cfg = ProbeConfig(1, xs, hs)
        if classify(cfg) is not MembershipClass.IN_H_NOT_CONC:
            continue
        hits += 1
        redu = reduce_indices(cfg)
        if redu:
            assert rate_value(cfg) == rate_value(cfg.subset(redu))
        else:
            assert rate_value(cfg) == 0.0
        g = extended_gradient(cfg)
        assert all(g[c] == 0.0 for c in range(n) if c not in redu)
    assert hits > 10


def test_value_zero_iff_bare_parabola(rng):
    for _ in range(30):
        n = int(rng.integers(1, 4))
        xs = np.sort(rng.uniform(-2, 2, n)) + np.arange(n) * 0.1
        hs = rng.uniform(-1, 1, n)
        cfg = ProbeConfig(1, xs, hs)
        v = rate_value(cfg)
        assert v >= 0.0
        assert (v == 0.0) == build_profile(cfg).is_bare_parabola


def test_probe_cap():
    xs = np.linspace(-1, 1, MAX_PROBES + 1)
    with pytest.raises(DomainError):
        rate(ProbeConfig(1, xs, np.ones_like(xs)))


def test_rate_result_round_trip():
    res = rate(ProbeConfig(0.6, [-0.5, 0.7], [0.4, 0.2]))
    back = RateResult.from_dict(json.loads(json.dumps(res.to_dict())))
    assert back == res
