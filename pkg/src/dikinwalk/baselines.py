"""Hit-and-Run and the Ball walk, as reference samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, UnboundedBodyError
from .geometry import ray_interval
from .rng import make_rng

HIT_AND_RUN = "hit-and-run"
BALL = "ball"


@dataclass(frozen=True)
class BaselineConfig:
    kind: str = HIT_AND_RUN
    ball_radius: float | None = None
    seed: int = 0
    steps: int = 10_000
    burn_in: int = 0
    thin: int = 1

    def __post_init__(self):
        if self.kind not in (HIT_AND_RUN, BALL):
            raise InputError(f"unknown walk kind {self.kind!r}")
        if self.kind == BALL and (self.ball_radius is None or not self.ball_radius > 0):
            raise InputError("ball walk needs a positive ball_radius")
        if self.steps < 0 or self.burn_in < 0 or self.thin < 1:
            raise InputError("steps/burn_in must be >= 0 and thin >= 1")


def random_direction(n: int, rng) -> np.ndarray:
    g = rng.standard_normal(n)
    return g / np.linalg.norm(g)


def hit_and_run_step(body, x, rng) -> np.ndarray:
    """Move to a uniform point of the open chord through ``x`` in a uniform direction."""
    x = np.asarray(x, dtype=float)
    u = random_direction(len(x), rng)
    lo, hi = ray_interval(body, x, u)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise UnboundedBodyError("hit-and-run chord is unbounded")
    while True:
        s = rng.random()
        if s == 0.0:
            continue
        z = x + (lo + s * (hi - lo)) * u
        # round-off at the very ends can land on the boundary
        if body.contains(z):
            return z


def ball_walk_step(body, x, radius: float, rng) -> np.ndarray:
    """Propose uniformly in the Euclidean ball of ``radius``; stay if outside."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    z = x + radius * rng.random() ** (1.0 / n) * random_direction(n, rng)
    return z if body.contains(z) else x


@dataclass(eq=False)
class BaselineRun:
    samples: np.ndarray
    moves: int
    steps: int

    @property
    def move_rate(self) -> float:
        return self.moves / self.steps if self.steps else math.nan


def run_baseline(body, config: BaselineConfig, start=None, rng=None) -> BaselineRun:
    """Run a baseline walk and collect every ``thin``-th point after ``burn_in``."""
    n = body.n
    x = np.zeros(n) if start is None else np.array(start, dtype=float)
    if not body.contains(x):
        raise InputError("start point is not strictly inside the body")
    if rng is None:
        rng = make_rng(config.seed)
    samples = []
    moves = 0
    for i in range(1, config.steps + 1):
        if config.kind == HIT_AND_RUN:
            x_new = hit_and_run_step(body, x, rng)
        else:
            x_new = ball_walk_step(body, x, config.ball_radius, rng)
        if x_new is not x:
            moves += 1
        x = x_new
        k = i - config.burn_in
        if k > 0 and k % config.thin == 0:
            samples.append(x)
    arr = np.array(samples) if samples else np.zeros((0, n))
    return BaselineRun(arr, moves, config.steps)
