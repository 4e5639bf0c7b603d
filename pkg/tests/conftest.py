import numpy as np
import pytest

from kpzldp import ProbeConfig, dual_height


def random_locations(rng, n, lo=-2.0, hi=2.0, gap=0.3):
    while True:
        xs = np.sort(rng.uniform(lo, hi, n))
        if n == 1 or np.min(np.diff(xs)) > gap:
            return [float(x) for x in xs]


def random_interior_config(rng, n=None, t=1.0, mass_range=(0.3, 3.0)):
    """A concave-interior configuration, built as the dual of positive masses."""
    n = n or int(rng.integers(1, 4))
    xs = random_locations(rng, n)
    masses = rng.uniform(*mass_range, n)
    hs = dual_height(t, xs, masses)
    return ProbeConfig(t, xs, hs), masses


def upper_hull_oracle(px, py):
    """Plain monotone-chain upper hull; returns vertex arrays."""
    order = np.lexsort((py, px))
    hull = []
    for i in order:
        p = (px[i], py[i])
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    hx, hy = zip(*hull)
    return np.array(hx), np.array(hy)


def grid_majorant(t, xs, hs, grid):
    """Concave majorant of the parabola sampled on ``grid`` plus the probe points."""
    px = np.concatenate([grid, xs])
    py = np.concatenate([-grid ** 2 / (2 * t), hs])
    hx, hy = upper_hull_oracle(px, py)
    return np.interp(grid, hx, hy)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
