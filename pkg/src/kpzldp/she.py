"""Desk-scale stochastic heat equation with delta-like initial data.

Explicit Euler in time, second differences in space, and Ito multiplicative
noise: each step multiplies a cell by ``1 + sqrt(dt/dx) g`` on top of the
diffusion update.  The first moment then solves the discrete heat equation
exactly, which is what the sanity checks rely on.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, DomainError, NumericalError
from .profile import parabola_eval


def heat_kernel(t, x):
    """Gaussian heat kernel ``exp(-x**2/(2t)) / sqrt(2 pi t)``."""
    if not t > 0:
        raise DomainError(f"heat kernel needs t > 0, got {t!r}")
    return np.exp(-np.square(x) / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)


def heat_strip(t, x, half_width):
    """Heat flow of the indicator of ``[-half_width, half_width]`` at time ``t``."""
    rt = math.sqrt(t)
    return ndtr((x + half_width) / rt) - ndtr((x - half_width) / rt)


@dataclass(frozen=True)
class SimConfig:
    N: int = 8
    T: float = 1.0
    alpha: float = 0.05
    dx: float = 0.05
    dt: float = 0.001
    x_window: float | None = None  # unscaled half-width; None picks one from the probes
    samples: int = 1
    seed: int = 0
    noise: float = 1.0
    output_times: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)  # scaled
    x_reach: float = 1.0  # scaled |x| the window must cover
    initial: str = "indicator"  # or "delta": strip normalized to unit mass

    def __post_init__(self):
        object.__setattr__(self, "output_times", tuple(float(v) for v in self.output_times))
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError("N must be a positive integer", "N")
        for name in ("T", "alpha", "dx", "dt"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive", name)
        if self.dt > self.dx ** 2 / 2:
            raise ConfigError(f"unstable scheme: dt={self.dt} > dx^2/2={self.dx ** 2 / 2}", "dt")
        if self.samples < 1:
            raise ConfigError("samples must be at least 1", "samples")
        if not self.output_times or min(self.output_times) <= 0:
            raise ConfigError("output_times must be positive", "output_times")
        if self.initial not in ("indicator", "delta"):
            raise ConfigError("initial must be 'indicator' or 'delta'", "initial")
        if self.noise < 0:
            raise ConfigError("noise amplitude must be nonnegative", "noise")

    @property
    def scale(self) -> float:
        """The height normalization ``N**2 T``."""
        return self.N * self.N * self.T

    @property
    def strip(self) -> float:
        """Unscaled half-width of the initial strip."""
        return self.alpha * self.N * self.T

    def window(self) -> float:
        if self.x_window is not None:
            return float(self.x_window)
        return self.N * self.T * self.x_reach + self.strip + 6.0 * math.sqrt(self.T * max(self.output_times))

    def zero_noise(self) -> "SimConfig":
        return SimConfig(**{**asdict(self), "noise": 0.0})


@dataclass
class FieldSample:
    """Solution ``Z`` on the grid, shape ``(samples, len(times), len(x))``."""

    Z: np.ndarray
    times: np.ndarray  # scaled output times
    x: np.ndarray  # unscaled grid
    config: SimConfig
    positivity_violations: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def h_scaled(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            h = np.log(self.Z) / self.config.scale
        if self.config.initial == "delta":
            h = h + math.log(math.sqrt(self.config.T)) / self.config.scale
        return h

    def header(self) -> dict:
        return {
            "config": asdict(self.config),
            "shape": list(self.Z.shape),
            "dtype": "float64",
            "x0": float(self.x[0]),
            "i0": int(round(self.x[0] / self.config.dx)),  # grid is dx * (i0 + arange(nx))
            "dx": self.config.dx,
            "nx": int(len(self.x)),
            "times": [float(v) for v in self.times],
            "positivity_violations": self.positivity_violations,
            "rng": "numpy.random.Philox",
            "metadata": self.metadata,
        }

    def write_binary(self, path) -> None:
        """Raw little-endian float64 dump preceded by a JSON header line."""
        head = json.dumps(self.header(), sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(len(head).to_bytes(8, "little"))
            fh.write(head)
            fh.write(np.ascontiguousarray(self.Z, dtype="<f8").tobytes())

    @classmethod
    def read_binary(cls, path) -> "FieldSample":
        with open(path, "rb") as fh:
            size = int.from_bytes(fh.read(8), "little")
            head = json.loads(fh.read(size))
            data = np.frombuffer(fh.read(), dtype="<f8").reshape(head["shape"])
        cfg = head["config"]
        cfg["output_times"] = tuple(cfg["output_times"])
        config = SimConfig(**cfg)
        x = head["dx"] * np.arange(head["i0"], head["i0"] + head["nx"])
        return cls(data.copy(), np.array(head["times"]), x, config, head["positivity_violations"],
                   head.get("metadata", {}))

    def write_csv(self, path, member: int = 0) -> None:
        h = self.h_scaled[member]
        with open(path, "w") as fh:
            fh.write("t,x,Z,h\n")
            for k, t in enumerate(self.times):
                for j, x in enumerate(self.x):
                    fh.write(f"{t!r},{x / (self.config.N * self.config.T)!r},{self.Z[member, k, j]!r},{h[k, j]!r}\n")


def _initial(config: SimConfig, x: np.ndarray) -> np.ndarray:
    # exact cell-average of the indicator, so the strip edges need not sit on the grid
    a, dx = config.strip, config.dx
    lo = np.clip(x - dx / 2, -a, a)
    hi = np.clip(x + dx / 2, -a, a)
    z0 = (hi - lo) / dx
    if config.initial == "delta":
        z0 = z0 / (2.0 * a)
    return z0


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("KPZLDP_THREADS", "1")))
    except ValueError:
        return 1


def _run_batch(config, x, z0, seeds, steps, record):
    nb = len(seeds)
    gens = [np.random.Generator(np.random.Philox(s)) for s in seeds]
    Z = np.tile(z0, (nb, 1))
    lap_coef = config.dt / (2.0 * config.dx ** 2)
    amp = config.noise * math.sqrt(config.dt / config.dx)
    out = np.empty((nb, len(record), len(x)))
    chunk = 256
    noise = None
    violations = 0
    slot = 0
    for n in range(1, steps + 1):
        if amp > 0 and (n - 1) % chunk == 0:
            m = min(chunk, steps - n + 1)
            noise = np.stack([g.standard_normal((m, len(x))) for g in gens], axis=1)
        lap = np.zeros_like(Z)
        lap[:, 1:-1] = Z[:, 2:] - 2.0 * Z[:, 1:-1] + Z[:, :-2]
        lap[:, 0] = Z[:, 1] - 2.0 * Z[:, 0]
        lap[:, -1] = Z[:, -2] - 2.0 * Z[:, -1]
        if amp > 0:
            Z = Z + lap_coef * lap + amp * Z * noise[(n - 1) % chunk]
        else:
            Z = Z + lap_coef * lap
        bad = Z < 0
        if bad.any():
            violations += int(bad.sum())
        while slot < len(record) and record[slot] == n:
            out[:, slot] = Z
            slot += 1
    if not np.all(np.isfinite(out)):
        idx = np.argwhere(~np.isfinite(out))[0]
        raise NumericalError("non-finite field value", {"sample": int(idx[0]), "time_slot": int(idx[1]), "cell": int(idx[2])})
    return out, violations


def simulate_she(config: SimConfig) -> FieldSample:
    """Run ``config.samples`` independent copies on a shared grid."""
    L = config.window()
    nx = int(math.ceil(L / config.dx))
    x = config.dx * np.arange(-nx, nx + 1)
    z0 = _initial(config, x)
    t_end = config.T * max(config.output_times)
    steps = int(round(t_end / config.dt))
    record = [int(round(config.T * t / config.dt)) for t in config.output_times]
    if any(abs(r * config.dt - config.T * t) > 1e-9 * max(1.0, config.T * t)
           for r, t in zip(record, config.output_times)):
        raise ConfigError("output times must be multiples of dt after scaling", "output_times")
    order = np.argsort(record)
    rec_sorted = [record[i] for i in order]

    children = np.random.SeedSequence(config.seed).spawn(config.samples)
    workers = min(_threads(), config.samples)
    batches = np.array_split(np.arange(config.samples), workers)
    jobs = [[children[i] for i in b] for b in batches if len(b)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda s: _run_batch(config, x, z0, s, steps, rec_sorted), jobs))
    else:
        results = [_run_batch(config, x, z0, s, steps, rec_sorted) for s in jobs]
    Z = np.concatenate([r[0] for r in results], axis=0)
    inv = np.argsort(order)
    Z = Z[:, inv]
    violations = sum(r[1] for r in results)
    return FieldSample(Z, np.array(config.output_times), x, config, violations,
                       {"seed": config.seed, "steps": steps})


def _time_slot(sample: FieldSample, t: float) -> int:
    k = int(np.argmin(np.abs(sample.times - t)))
    if abs(sample.times[k] - t) > 1e-9 * max(1.0, t):
        raise DomainError(f"time {t} was not recorded; recorded times are {list(sample.times)}")
    return k


def scaled_height(sample: FieldSample, t: float, x: float) -> np.ndarray:
    """Scaled log-height at scaled ``(t, x)``, one value per sample."""
    cfg = sample.config
    k = _time_slot(sample, t)
    xu = cfg.N * cfg.T * x
    if not sample.x[0] <= xu <= sample.x[-1]:
        raise DomainError(f"x={x} lies outside the simulated window")
    j = min(int((xu - sample.x[0]) // cfg.dx), len(sample.x) - 2)
    w = (xu - sample.x[j]) / cfg.dx
    z = (1 - w) * sample.Z[:, k, j] + w * sample.Z[:, k, j + 1]
    if np.any(z <= 0):
        raise NumericalError("non-positive Z at the requested cell", {"t": t, "x": x, "cell": j})
    h = np.log(z) / cfg.scale
    if cfg.initial == "delta":
        h = h + math.log(math.sqrt(cfg.T)) / cfg.scale
    return h


def heat_reference(config: SimConfig, t: float, x: float) -> float:
    """Noise-free continuum solution at scaled ``(t, x)``."""
    z = float(heat_strip(config.T * t, config.N * config.T * x, config.strip))
    if config.initial == "delta":
        z /= 2.0 * config.strip
    return z


@dataclass
class ProbeReport:
    t: float
    x: float
    mean: float
    std: float
    stderr: float
    parabola: float
    deviation: float
    passed: bool


@dataclass
class HydroReport:
    config: SimConfig
    tol: float
    probes: list[ProbeReport]
    positivity_violations: int

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.probes)

    def to_dict(self):
        return {
            "tol": self.tol,
            "passed": self.passed,
            "positivity_violations": self.positivity_violations,
            "probes": [asdict(p) for p in self.probes],
        }


def hydrodynamic_check(config: SimConfig, probes, tol: float = 0.1, sample: FieldSample | None = None) -> HydroReport:
    """Sample mean of the scaled height against the parabola at each probe."""
    if sample is None:
        times = tuple(sorted(set(config.output_times) | {float(t) for t, _ in probes}))
        reach = max([config.x_reach] + [abs(x) for _, x in probes])
        config = SimConfig(**{**asdict(config), "output_times": times, "x_reach": reach})
        sample = simulate_she(config)
    rows = []
    for t, x in probes:
        h = scaled_height(sample, t, x)
        mean = float(h.mean())
        std = float(h.std(ddof=1)) if len(h) > 1 else 0.0
        p = float(parabola_eval(t, x))
        rows.append(ProbeReport(t, x, mean, std, std / math.sqrt(len(h)), p, mean - p, abs(mean - p) < tol))
    return HydroReport(sample.config, tol, rows, sample.positivity_violations)
