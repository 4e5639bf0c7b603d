import json
import math

import numpy as np
import pytest

from kpzldp import (
    DomainError,
    ProbeConfig,
    classify,
    dual_height,
    lyapunov_from_duality,
    rate_gradient,
    rate_value,
    symmetry_breaking_scan,
    tree_decomposition_check,
)
from kpzldp.legendre import jump_jacobian, lyapunov_from

from conftest import random_interior_config, random_locations


def test_one_point_dual():
    dp = lyapunov_from_duality(1, [0], [2])
    assert dp.lyapunov == pytest.approx(1 / 3, abs=1e-12)
    assert dp.heights[0] == pytest.approx(0.5, abs=1e-12)


def test_shifted_one_point_dual():
    assert lyapunov_from_duality(1, [1], [2]).lyapunov == pytest.approx(-2 / 3, abs=1e-12)


def test_zero_masses():
    dp = lyapunov_from_duality(0.7, [-1, 0.5], [0, 0])
    assert dp.lyapunov == 0.0
    assert dp.heights == pytest.approx((-1 / 1.4, -0.25 / 1.4), abs=1e-15)


def test_dual_height_examples():
    assert dual_height(1, [0], [2 * math.sqrt(2)])[0] == pytest.approx(1, abs=1e-12)
    assert dual_height(1, [0], [0])[0] == 0.0
    h = dual_height(1, [-1, 1], [1, 1])
    assert h[0] == pytest.approx(h[1], abs=1e-12)


def test_negative_mass_raises():
    with pytest.raises(DomainError):
        dual_height(1, [0], [-1])


@pytest.mark.parametrize("t", [0.25, 1.0])
@pytest.mark.parametrize("m", [1.0, 2.0, 3.0])
def test_one_point_closed_form(m, t):
    assert abs(lyapunov_from_duality(t, [0], [m]).lyapunov - m ** 3 * t / 24) < 1e-10


def test_round_trip(rng):
    for _ in range(50):
        n = int(rng.integers(1, 5))
        xs = random_locations(rng, n, gap=0.2)
        m = rng.uniform(0, 4, n)
        h = dual_height(1, xs, m)
        cfg = ProbeConfig(1, xs, h)
        assert classify(cfg).concave
        assert np.max(np.abs(rate_gradient(cfg) - m)) < 1e-8


def test_round_trip_with_zero_mass():
    xs = [-1.0, 0.0, 1.0]
    m = [1.5, 0.0, 2.0]
    h = dual_height(1, xs, m)
    g = rate_gradient(ProbeConfig(1, xs, h))
    assert g == pytest.approx(m, abs=1e-8)


def test_fenchel_young(rng):
    for _ in range(50):
        cfg, m = random_interior_config(rng)
        dp = lyapunov_from_duality(cfg.t, cfg.xs, m)
        assert float(np.dot(m, dp.heights)) == pytest.approx(rate_value(dp.config) + dp.lyapunov, abs=1e-8)
        other = np.array(dp.heights) + rng.normal(0, 0.3, cfg.n)
        gap = rate_value(cfg.with_heights(other)) + dp.lyapunov - float(np.dot(m, other))
        assert gap > 0


def test_jacobian_matches_finite_differences(rng):
    for _ in range(10):
        cfg, _ = random_interior_config(rng)
        J = jump_jacobian(cfg)
        eps = 1e-6
        for c in range(cfg.n):
            up, dn = list(cfg.hs), list(cfg.hs)
            up[c] += eps
            dn[c] -= eps
            col = (rate_gradient(cfg.with_heights(up)) - rate_gradient(cfg.with_heights(dn))) / (2 * eps)
            assert J[:, c] == pytest.approx(col, abs=1e-5)


def test_lyapunov_from_shift():
    assert lyapunov_from(1.0, 1.0, [1.0], [2.0]) == pytest.approx(1 / 3, abs=1e-12)


# --- tree decomposition -----------------------------------------------------

def test_tree_single_point():
    chk = tree_decomposition_check(ProbeConfig(1, [0], [1]), 0.5)
    assert chk.gap < 1e-10


@pytest.mark.parametrize("t_mid,clusters", [(0.9, 2), (0.1, 1)])
def test_tree_symmetric_pair(t_mid, clusters):
    chk = tree_decomposition_check(ProbeConfig(1, [-1, 1], [0.5, 0.5]), t_mid)
    assert chk.gap < 1e-8
    assert len(chk.split.cluster_positions) == clusters
    assert chk.intermediate_residual < 1e-8
    if clusters == 1:
        m = rate_gradient(ProbeConfig(1, [-1, 1], [0.5, 0.5]))
        assert chk.split.cluster_masses[0] == pytest.approx(m.sum(), abs=1e-12)


def test_tree_requires_interior():
    with pytest.raises(DomainError):
        tree_decomposition_check(ProbeConfig(1, [-1, 0, 1], [0.2, 0.05, 0.2]), 0.5)


def test_tree_report_json():
    chk = tree_decomposition_check(ProbeConfig(1, [-1, 1], [0.5, 0.5]), 0.5)
    data = json.loads(json.dumps(chk.to_dict()))
    assert set(data) >= {"lhs", "rhs", "t_mid", "clusters"}


# --- symmetry breaking ------------------------------------------------------

def test_scan_examples():
    scan = symmetry_breaking_scan(2.0, 21)
    assert scan.rows[0][1] == pytest.approx(-2 / 3, abs=1e-10)
    assert scan.rows[-1][1] == pytest.approx(-2 / 3, abs=1e-10)
    mid = dict(scan.rows)[1.0]
    assert mid < -2 / 3
    assert scan.mirror_gap() < 1e-9
    assert scan.route_gap() < 1e-9
    assert scan.margin() > 0
    assert scan.argmax() == [0.0, 2.0]


def test_scan_endpoint_matches_single_corridor():
    scan = symmetry_breaking_scan(2.0, 5)
    assert scan.rows[0][1] == pytest.approx(lyapunov_from_duality(1, [1], [2]).lyapunov, abs=1e-12)


@pytest.mark.parametrize("m,points", [(0.0, 5), (-1.0, 5), (1.0, 2)])
def test_scan_rejects_bad_input(m, points):
    with pytest.raises(DomainError):
        symmetry_breaking_scan(m, points)
